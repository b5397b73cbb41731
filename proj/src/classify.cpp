#include <cmath>

#include "facebench/classify.hpp"
#include "facebench/error.hpp"

namespace facebench {

std::vector<Prediction> nn_classify(const DistanceMatrix& distances, std::span<const int> gallery_labels) {
    const Matrix& D = distances.values;
    require(D.cols() >= 1, ErrorKind::Data, "nearest-neighbor classification needs a non-empty gallery");
    require(static_cast<Eigen::Index>(gallery_labels.size()) == D.cols(), ErrorKind::Data,
            "gallery label count " + std::to_string(gallery_labels.size()) + " does not match " +
                std::to_string(D.cols()) + " gallery columns");

    std::vector<Prediction> out;
    out.reserve(static_cast<std::size_t>(D.rows()));
    for (Eigen::Index i = 0; i < D.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < D.cols(); ++j) {
            if (D(i, j) < D(i, best)) best = j;
        }
        Prediction p;
        p.probe = static_cast<std::size_t>(i);
        p.label = gallery_labels[static_cast<std::size_t>(best)];
        p.score = -D(i, best);
        std::optional<Eigen::Index> second;
        for (Eigen::Index j = 0; j < D.cols(); ++j) {
            if (gallery_labels[static_cast<std::size_t>(j)] == p.label) continue;
            if (!second || D(i, j) < D(i, *second)) second = j;
        }
        if (second) p.runner_up = gallery_labels[static_cast<std::size_t>(*second)];
        out.push_back(p);
    }
    return out;
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
    require(x.size() == y.size(), ErrorKind::Data, "rbf_kernel: dimension mismatch");
    require(gamma >= 0.0, ErrorKind::Config, "rbf_kernel: gamma must be >= 0");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return std::exp(-gamma * s);
}

}  // namespace facebench
