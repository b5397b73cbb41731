#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facebench/features.hpp"

namespace facebench {

/// The eight dissimilarities, numbered as in the published comparison tables.
enum class MetricKind : int {
    EUC = 1,   ///< Euclidean (L2)
    CB = 2,    ///< City block (L1)
    COS = 3,   ///< 1 - cosine similarity
    MC = 4,    ///< Mahalanobis: sqrt((x-y) V^-1 (x-y)^T)
    BC = 5,    ///< Bray-Curtis
    CAN = 6,   ///< Canberra
    CORR = 7,  ///< 1 - Pearson correlation
    CHEB = 8,  ///< Chebyshev (L-infinity)
};

inline constexpr std::array<MetricKind, 8> kAllMetrics{MetricKind::EUC, MetricKind::CB,  MetricKind::COS,
                                                       MetricKind::MC,  MetricKind::BC,  MetricKind::CAN,
                                                       MetricKind::CORR, MetricKind::CHEB};

inline int metric_number(MetricKind k) { return static_cast<int>(k); }
std::string_view metric_name(MetricKind k);  // "EUC", "CB", ...
/// Accepts the short names in either case ("cos", "COS").
std::optional<MetricKind> parse_metric(std::string_view text);

/// Inverse covariance for the Mahalanobis metric.
struct MetricContext {
    std::optional<Matrix> covariance;          ///< V, when fitted from data
    std::optional<Matrix> covariance_inverse;  ///< V^-1
    Matrix whitening;                          ///< R with R^T R = V^-1
    double ridge = 0.0;

    /// Validates symmetry/positive definiteness (1e-8) and factors V^-1.
    static MetricContext from_inverse(Matrix covariance_inverse, double ridge = 0.0);
};

/// V = sample covariance + ridge * (trace / dim) * I, then inverted.
MetricContext fit_metric_context(const Matrix& train_features, double ridge = 1e-6);

/// Scalar reference implementation of every metric.
double distance(MetricKind kind, std::span<const double> x, std::span<const double> y,
                const MetricContext& ctx = {});

struct DistanceMatrix {
    Matrix values;  ///< probes x gallery
    std::string label;
    std::vector<std::string> probe_ids;
    std::vector<std::string> gallery_ids;
};

/// values(i, j) = distance(kind, probes.row(i), gallery.row(j)); rows are
/// computed in parallel.
DistanceMatrix pairwise(MetricKind kind, const Matrix& gallery, const Matrix& probes, const MetricContext& ctx = {},
                        unsigned threads = 1);

/// CSV with a "probe_id" corner cell, gallery ids across and probe ids down.
void write_distance_csv(const DistanceMatrix& m, const std::filesystem::path& path);
DistanceMatrix read_distance_csv(const std::filesystem::path& path);

}  // namespace facebench
