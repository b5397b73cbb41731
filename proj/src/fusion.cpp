#include "facebench/fusion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "facebench/csv.hpp"
#include "facebench/error.hpp"

namespace facebench {

std::string_view fusion_name(FusionKind k) {
    switch (k) {
        case FusionKind::AVG: return "avg";
        case FusionKind::MIN: return "min";
        case FusionKind::MED: return "med";
        case FusionKind::WMP: return "wmp";
        case FusionKind::WEIGHTED: return "weighted";
    }
    return "?";
}

std::optional<FusionKind> parse_fusion(std::string_view text) {
    std::string lower(text);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (auto k : {FusionKind::AVG, FusionKind::MIN, FusionKind::MED, FusionKind::WMP, FusionKind::WEIGHTED}) {
        if (fusion_name(k) == lower) return k;
    }
    return std::nullopt;
}

void FusionScheme::validate() const {
    if (kind != FusionKind::WEIGHTED) {
        require(weights.empty(), ErrorKind::Config, "only the weighted scheme takes weights");
        return;
    }
    require(!weights.empty(), ErrorKind::Config, "weighted fusion needs weights");
    double sum = 0.0;
    for (double w : weights) {
        require(std::isfinite(w) && w >= 0.0, ErrorKind::Config, "fusion weights must be non-negative");
        sum += w;
    }
    require(std::abs(sum - 1.0) <= 1e-9, ErrorKind::Config,
            "fusion weights must sum to 1 (got " + csv::format_double(sum) + ")");
}

std::string FusionScheme::describe() const {
    std::string s(fusion_name(kind));
    if (kind == FusionKind::WEIGHTED) {
        s += '(';
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (i > 0) s += ',';
            s += csv::format_double(weights[i]);
        }
        s += ')';
    }
    return s;
}

DistanceMatrix minmax_normalize(const DistanceMatrix& D, Normalization mode) {
    require(D.values.size() > 0, ErrorKind::Data, "cannot normalize an empty distance matrix");
    DistanceMatrix out = D;
    const auto rescale = [](auto&& block) {
        const double lo = block.minCoeff();
        const double hi = block.maxCoeff();
        if (hi > lo) {
            block = (block.array() - lo) / (hi - lo);
        } else {
            block.setZero();
        }
    };
    if (mode == Normalization::Global) {
        rescale(out.values.array());
    } else {
        for (Eigen::Index i = 0; i < out.values.rows(); ++i) rescale(out.values.row(i).array());
    }
    return out;
}

std::vector<double> wmp_weights(std::span<const double> distances) {
    require(!distances.empty(), ErrorKind::Data, "wmp_weights needs at least one distance");
    const std::size_t k = distances.size();
    const double top = *std::max_element(distances.begin(), distances.end());
    std::vector<double> soft(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        soft[i] = std::exp(distances[i] - top);
        sum += soft[i];
    }
    for (auto& w : soft) w /= sum;

    std::vector<std::size_t> by_distance(k);
    std::iota(by_distance.begin(), by_distance.end(), std::size_t{0});
    std::stable_sort(by_distance.begin(), by_distance.end(),
                     [&](std::size_t a, std::size_t b) { return distances[a] < distances[b]; });
    std::vector<double> sorted_weights = soft;
    std::stable_sort(sorted_weights.begin(), sorted_weights.end(), std::greater<>());

    std::vector<double> out(k);
    for (std::size_t r = 0; r < k; ++r) out[by_distance[r]] = sorted_weights[r];
    return out;
}

DistanceMatrix fuse(std::span<const DistanceMatrix> inputs, const FusionScheme& scheme) {
    require(!inputs.empty(), ErrorKind::Data, "fusion needs at least one matrix");
    scheme.validate();
    const auto rows = inputs[0].values.rows();
    const auto cols = inputs[0].values.cols();
    for (const auto& D : inputs) {
        require(D.values.rows() == rows && D.values.cols() == cols, ErrorKind::Data,
                "fusion inputs differ in shape");
    }
    const std::size_t k = inputs.size();
    if (scheme.kind == FusionKind::WEIGHTED) {
        require(scheme.weights.size() == k, ErrorKind::Config,
                "weight count " + std::to_string(scheme.weights.size()) + " does not match " + std::to_string(k) +
                    " matrices");
    }

    DistanceMatrix out;
    out.values.resize(rows, cols);
    out.probe_ids = inputs[0].probe_ids;
    out.gallery_ids = inputs[0].gallery_ids;
    out.label = scheme.describe();

    std::vector<double> cell(k);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (std::size_t m = 0; m < k; ++m) cell[m] = inputs[m].values(i, j);
            double v = 0.0;
            switch (scheme.kind) {
                case FusionKind::AVG:
                    for (double d : cell) v += d;
                    v /= static_cast<double>(k);
                    break;
                case FusionKind::MIN:
                    v = *std::min_element(cell.begin(), cell.end());
                    break;
                case FusionKind::MED: {
                    std::sort(cell.begin(), cell.end());
                    // For k == 2 this is bit-identical to AVG: IEEE addition commutes.
                    v = k % 2 == 1 ? cell[k / 2] : (cell[k / 2 - 1] + cell[k / 2]) / 2.0;
                    break;
                }
                case FusionKind::WMP: {
                    const auto w = wmp_weights(cell);
                    for (std::size_t m = 0; m < k; ++m) v += w[m] * cell[m];
                    break;
                }
                case FusionKind::WEIGHTED:
                    for (std::size_t m = 0; m < k; ++m) v += scheme.weights[m] * cell[m];
                    break;
            }
            out.values(i, j) = v;
        }
    }
    return out;
}

std::vector<MetricKind> rank_metrics(const std::map<MetricKind, double>& accuracies) {
    require(!accuracies.empty(), ErrorKind::Data, "no metric accuracies to rank");
    std::vector<MetricKind> order;
    for (const auto& [k, acc] : accuracies) order.push_back(k);
    std::stable_sort(order.begin(), order.end(), [&](MetricKind a, MetricKind b) {
        const double x = accuracies.at(a), y = accuracies.at(b);
        if (x != y) return x > y;
        return metric_number(a) < metric_number(b);
    });
    return order;
}

}  // namespace facebench
