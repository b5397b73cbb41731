#include "facebench/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "facebench/error.hpp"
#include "facebench/parallel.hpp"

namespace facebench {

namespace {

double euclidean(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double city_block(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
    return s;
}

double chebyshev(std::span<const double> x, std::span<const double> y) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

double cosine(std::span<const double> x, std::span<const double> y) {
    double dot = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        xx += x[i] * x[i];
        yy += y[i] * y[i];
    }
    require(xx > 0.0 && yy > 0.0, ErrorKind::Data, "cosine distance of a zero-norm vector");
    return std::max(0.0, 1.0 - dot / std::sqrt(xx * yy));
}

double correlation(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = x[i] - mx, b = y[i] - my;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    require(sxx > 0.0 && syy > 0.0, ErrorKind::Data, "correlation distance of a constant vector");
    return std::max(0.0, 1.0 - sxy / std::sqrt(sxx * syy));
}

double bray_curtis(std::span<const double> x, std::span<const double> y) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += std::abs(x[i] - y[i]);
        den += std::abs(x[i] + y[i]);
    }
    // Both vectors zero: define the distance as 0.
    return den == 0.0 ? 0.0 : num / den;
}

double canberra(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double den = std::abs(x[i]) + std::abs(y[i]);
        if (den != 0.0) s += std::abs(x[i] - y[i]) / den;  // 0/0 terms contribute 0
    }
    return s;
}

double mahalanobis(std::span<const double> x, std::span<const double> y, const MetricContext& ctx) {
    require(ctx.covariance_inverse.has_value(), ErrorKind::Config,
            "Mahalanobis distance needs a covariance (fit a metric context)");
    const Matrix& R = ctx.whitening;
    require(static_cast<std::size_t>(R.cols()) == x.size(), ErrorKind::Data,
            "Mahalanobis covariance dimension does not match the vectors");
    Vector diff(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) diff[static_cast<Eigen::Index>(i)] = x[i] - y[i];
    return (R.triangularView<Eigen::Upper>() * diff).norm();
}

}  // namespace

std::string_view metric_name(MetricKind k) {
    switch (k) {
        case MetricKind::EUC: return "EUC";
        case MetricKind::CB: return "CB";
        case MetricKind::COS: return "COS";
        case MetricKind::MC: return "MC";
        case MetricKind::BC: return "BC";
        case MetricKind::CAN: return "CAN";
        case MetricKind::CORR: return "CORR";
        case MetricKind::CHEB: return "CHEB";
    }
    return "?";
}

std::optional<MetricKind> parse_metric(std::string_view text) {
    std::string upper(text);
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (auto k : kAllMetrics) {
        if (metric_name(k) == upper) return k;
    }
    return std::nullopt;
}

MetricContext MetricContext::from_inverse(Matrix covariance_inverse, double ridge) {
    require(covariance_inverse.rows() == covariance_inverse.cols() && covariance_inverse.rows() >= 1,
            ErrorKind::Data, "inverse covariance must be a non-empty square matrix");
    const double scale = std::max(1.0, covariance_inverse.cwiseAbs().maxCoeff());
    require((covariance_inverse - covariance_inverse.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale,
            ErrorKind::Data, "inverse covariance is not symmetric");
    Eigen::LLT<Matrix> llt(covariance_inverse);
    require(llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0, ErrorKind::Numeric,
            "inverse covariance is not positive definite");
    MetricContext ctx;
    // V^-1 = M M^T with M lower, so R = M^T.
    ctx.whitening = llt.matrixU();
    ctx.covariance_inverse = std::move(covariance_inverse);
    ctx.ridge = ridge;
    return ctx;
}

MetricContext fit_metric_context(const Matrix& train, double ridge) {
    require(train.rows() >= 2, ErrorKind::Data, "metric context needs at least 2 training rows");
    require(ridge >= 0.0, ErrorKind::Config, "ridge must be >= 0");
    const Vector mean = train.colwise().mean().transpose();
    const Matrix centered = train.rowwise() - mean.transpose();
    Matrix V = (centered.transpose() * centered) / static_cast<double>(train.rows() - 1);
    const double load = ridge * V.trace() / static_cast<double>(V.rows());
    V.diagonal().array() += load;
    Eigen::LLT<Matrix> llt(V);
    require(llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0, ErrorKind::Numeric,
            "covariance is not invertible after ridge regularization");
    Matrix inv = llt.solve(Matrix::Identity(V.rows(), V.cols()));
    inv = (0.5 * (inv + inv.transpose())).eval();
    MetricContext ctx = MetricContext::from_inverse(std::move(inv), ridge);
    ctx.covariance = std::move(V);
    return ctx;
}

double distance(MetricKind kind, std::span<const double> x, std::span<const double> y, const MetricContext& ctx) {
    require(x.size() == y.size(), ErrorKind::Data,
            "dimension mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    require(!x.empty(), ErrorKind::Data, "distance of empty vectors");
    switch (kind) {
        case MetricKind::EUC: return euclidean(x, y);
        case MetricKind::CB: return city_block(x, y);
        case MetricKind::COS: return cosine(x, y);
        case MetricKind::MC: return mahalanobis(x, y, ctx);
        case MetricKind::BC: return bray_curtis(x, y);
        case MetricKind::CAN: return canberra(x, y);
        case MetricKind::CORR: return correlation(x, y);
        case MetricKind::CHEB: return chebyshev(x, y);
    }
    fail(ErrorKind::Config, "unknown metric");
}

DistanceMatrix pairwise(MetricKind kind, const Matrix& gallery, const Matrix& probes, const MetricContext& ctx,
                        unsigned threads) {
    require(gallery.rows() >= 1, ErrorKind::Data, "gallery is empty");
    require(gallery.cols() == probes.cols(), ErrorKind::Data,
            "dimension mismatch: gallery has " + std::to_string(gallery.cols()) + " columns, probes " +
                std::to_string(probes.cols()));

    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMatrix G = gallery;
    RowMatrix P = probes;
    if (kind == MetricKind::MC) {
        // Fast path: whiten once, then Euclidean between transformed rows.
        require(ctx.covariance_inverse.has_value(), ErrorKind::Config,
                "Mahalanobis distance needs a covariance (fit a metric context)");
        require(ctx.whitening.cols() == gallery.cols(), ErrorKind::Data,
                "Mahalanobis covariance dimension does not match the features");
        const Matrix Rt = ctx.whitening.triangularView<Eigen::Upper>().transpose();
        G = (G * Rt).eval();
        P = (P * Rt).eval();
    }
    const MetricKind row_kind = kind == MetricKind::MC ? MetricKind::EUC : kind;
    const auto d = static_cast<std::size_t>(gallery.cols());

    DistanceMatrix out;
    out.label = std::string(metric_name(kind));
    out.values.resize(probes.rows(), gallery.rows());
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(probes.rows()));
    parallel_for(static_cast<std::size_t>(probes.rows()), threads, [&](std::size_t i) {
        const std::span<const double> p(P.data() + i * d, d);
        auto& row = rows[i];
        row.resize(static_cast<std::size_t>(G.rows()));
        for (Eigen::Index j = 0; j < G.rows(); ++j) {
            row[static_cast<std::size_t>(j)] =
                distance(row_kind, p, std::span<const double>(G.data() + static_cast<std::size_t>(j) * d, d), ctx);
        }
    });
    for (Eigen::Index i = 0; i < probes.rows(); ++i) {
        for (Eigen::Index j = 0; j < gallery.rows(); ++j) {
            out.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return out;
}

}  // namespace facebench
