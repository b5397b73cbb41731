#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facebench/metrics.hpp"

namespace facebench {

enum class FusionKind { AVG, MIN, MED, WMP, WEIGHTED };

std::string_view fusion_name(FusionKind k);  // "avg", "min", "med", "wmp", "weighted"
std::optional<FusionKind> parse_fusion(std::string_view text);

struct FusionScheme {
    FusionKind kind = FusionKind::AVG;
    std::vector<double> weights;  ///< WEIGHTED only: non-negative, summing to 1 within 1e-9

    /// Throws a Config error when the weights break the invariant above.
    void validate() const;
    /// "avg", "weighted(0.8,0.1,0.1)", ...
    [[nodiscard]] std::string describe() const;
};

enum class Normalization { Global, PerRow };

/// (d - min) / (max - min), over the whole matrix or per probe row. A constant
/// range maps to 0.
DistanceMatrix minmax_normalize(const DistanceMatrix& D, Normalization mode = Normalization::Global);

/// Softmax of the distances with the weights then reassigned so the largest
/// weight goes to the smallest distance. Equal distances keep input order.
std::vector<double> wmp_weights(std::span<const double> distances);

/// Entry-wise combination of same-shaped matrices. WMP weighs each cell by
/// wmp_weights of that cell's k distances and sums.
DistanceMatrix fuse(std::span<const DistanceMatrix> inputs, const FusionScheme& scheme);

/// Accuracy descending; ties by metric number ascending.
std::vector<MetricKind> rank_metrics(const std::map<MetricKind, double>& accuracies);

}  // namespace facebench
