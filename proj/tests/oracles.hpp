#pragma once

// Reference computations written independently of the library: straight-line
// formulas in long double, brute-force loops, no shared helpers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = std::vector<double>;

inline long double euclidean(const Vec& x, const Vec& y) {
    long double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (static_cast<long double>(x[i]) - y[i]) * (static_cast<long double>(x[i]) - y[i]);
    return std::sqrt(s);
}

inline long double city_block(const Vec& x, const Vec& y) {
    long double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::fabs(static_cast<long double>(x[i]) - y[i]);
    return s;
}

inline long double cosine(const Vec& x, const Vec& y) {
    long double dot = 0, nx = 0, ny = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += static_cast<long double>(x[i]) * y[i];
        nx += static_cast<long double>(x[i]) * x[i];
        ny += static_cast<long double>(y[i]) * y[i];
    }
    return 1.0L - dot / (std::sqrt(nx) * std::sqrt(ny));
}

// (x - y) Vinv (x - y)^T, evaluated as a full double sum.
inline long double mahalanobis(const Vec& x, const Vec& y, const Eigen::MatrixXd& Vinv) {
    const std::size_t n = x.size();
    long double q = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            q += (static_cast<long double>(x[i]) - y[i]) * Vinv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                 (static_cast<long double>(x[j]) - y[j]);
        }
    }
    return std::sqrt(q);
}

inline long double bray_curtis(const Vec& x, const Vec& y) {
    long double num = 0, den = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += std::fabs(static_cast<long double>(x[i]) - y[i]);
        den += std::fabs(static_cast<long double>(x[i]) + y[i]);
    }
    return num / den;
}

inline long double canberra(const Vec& x, const Vec& y) {
    long double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const long double den = std::fabs(static_cast<long double>(x[i])) + std::fabs(static_cast<long double>(y[i]));
        if (den > 0) s += std::fabs(static_cast<long double>(x[i]) - y[i]) / den;
    }
    return s;
}

// 1 - Pearson r from the textbook two-pass definition.
inline long double correlation(const Vec& x, const Vec& y) {
    const auto n = static_cast<long double>(x.size());
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    long double cxy = 0, cxx = 0, cyy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cxy += (x[i] - mx) * (y[i] - my);
        cxx += (x[i] - mx) * (x[i] - mx);
        cyy += (y[i] - my) * (y[i] - my);
    }
    return 1.0L - cxy / std::sqrt(cxx * cyy);
}

inline long double chebyshev(const Vec& x, const Vec& y) {
    long double m = 0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(static_cast<long double>(x[i]) - y[i]));
    return m;
}

// Metric numbering 1..8.
inline long double metric(int number, const Vec& x, const Vec& y, const Eigen::MatrixXd& Vinv) {
    switch (number) {
        case 1: return euclidean(x, y);
        case 2: return city_block(x, y);
        case 3: return cosine(x, y);
        case 4: return mahalanobis(x, y, Vinv);
        case 5: return bray_curtis(x, y);
        case 6: return canberra(x, y);
        case 7: return correlation(x, y);
        default: return chebyshev(x, y);
    }
}

inline bool close_rel(long double got, long double want, long double rel, long double abs_floor = 1e-15L) {
    return std::fabs(got - want) <= rel * std::fabs(want) + abs_floor;
}

// Sample covariance with the n - 1 denominator, by explicit loops.
inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows(), d = X.cols();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) mean += X.row(i).transpose();
    mean /= static_cast<double>(n);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index a = 0; a < d; ++a) {
            for (Eigen::Index b = 0; b < d; ++b) C(a, b) += (X(i, a) - mean[a]) * (X(i, b) - mean[b]);
        }
    }
    return C / static_cast<double>(n - 1);
}

// Between- and within-class scatter by explicit per-class sums.
struct Scatter {
    Eigen::MatrixXd between, within;
};
inline Scatter scatter(const Eigen::MatrixXd& X, const std::vector<int>& labels) {
    const Eigen::Index d = X.cols();
    Eigen::VectorXd grand = X.colwise().mean().transpose();
    std::vector<int> classes(labels);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    Scatter s{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d)};
    for (int c : classes) {
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
        int count = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == c) {
                mu += X.row(static_cast<Eigen::Index>(i)).transpose();
                ++count;
            }
        }
        mu /= count;
        s.between += count * (mu - grand) * (mu - grand).transpose();
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == c) {
                const Eigen::VectorXd e = X.row(static_cast<Eigen::Index>(i)).transpose() - mu;
                s.within += e * e.transpose();
            }
        }
    }
    return s;
}

inline double angle_degrees(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
    return std::acos(std::min(1.0, c)) * 180.0 / 3.14159265358979323846;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = normal(gen);
    }
    return M;
}

}  // namespace oracle
