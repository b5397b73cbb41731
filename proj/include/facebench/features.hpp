#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace facebench {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class FeatureKind { PCA, LDA };

std::string_view feature_name(FeatureKind k);  // "PCA" / "LDA"
std::optional<FeatureKind> parse_feature(std::string_view text);

inline constexpr std::size_t kDefaultComponents = 100;

/// A fitted linear projection x -> (x - mean)^T basis.
struct FeatureModel {
    FeatureKind kind = FeatureKind::PCA;
    Vector mean;         ///< input dim
    Matrix basis;        ///< input dim x n_components, unit-norm columns
    Vector eigenvalues;  ///< non-increasing; variances (PCA) or generalized eigenvalues (LDA)

    [[nodiscard]] Eigen::Index input_dim() const { return mean.size(); }
    [[nodiscard]] Eigen::Index n_components() const { return basis.cols(); }
};

/// Every principal axis of a sample matrix with non-negligible variance
/// (eigenvalue >= 1e-10 * largest), sorted by decreasing variance.
struct PrincipalAxes {
    Vector mean;
    Matrix axes;       ///< dim x rank, orthonormal columns
    Vector variances;  ///< sample variances (n - 1 denominator)
    Eigen::Index n_samples = 0;
};

/// Eigendecomposition of the sample covariance of X (rows are samples). Uses
/// the n x n Gram matrix when dim > n_samples.
PrincipalAxes principal_axes(const Matrix& X);

/// Eigenfaces: the top n_components principal axes.
FeatureModel fit_pca(const Matrix& X, Eigen::Index n_components);
FeatureModel fit_pca(const PrincipalAxes& axes, Eigen::Index n_components);

/// Intermediate quantities of a Fisherfaces fit, in the PCA-reduced space.
struct LdaFit {
    FeatureModel model;
    Matrix pca_basis;     ///< dim x m (the reduction applied before the discriminant step)
    Matrix directions;    ///< m x n_components generalized eigenvectors, before composition
    double ridge = 0.0;   ///< diagonal load added to the within-class scatter (0 when not needed)
};

/// Fisherfaces: PCA to n_samples - n_classes dimensions (or the data rank if
/// smaller), then the generalized eigenproblem S_B w = lambda S_W w. `axes`
/// may carry a precomputed decomposition of the same X.
LdaFit fit_lda_detailed(const Matrix& X, std::span<const int> labels, Eigen::Index n_components,
                        const PrincipalAxes* axes = nullptr);
FeatureModel fit_lda(const Matrix& X, std::span<const int> labels, Eigen::Index n_components,
                     const PrincipalAxes* axes = nullptr);

/// Between- and within-class scatter of the rows of X.
struct Scatter {
    Matrix between;
    Matrix within;
};
Scatter scatter_matrices(const Matrix& X, std::span<const int> labels);

/// (X - mean) * basis, truncated to the first `n_components` (all when unset).
Matrix project(const FeatureModel& model, const Matrix& X, std::optional<Eigen::Index> n_components = {});

/// Fisher criterion J(w) = w^T S_B w / w^T S_W w.
double fisher_criterion(const Eigen::Ref<const Vector>& w, const Matrix& between, const Matrix& within);

// Binary model container: 16-byte header ("FBFEATMD", u32 version, u32 kind)
// then u64 dim, u64 n_components, and little-endian f64 mean, basis
// (column-major), eigenvalues.
std::vector<std::uint8_t> encode_model(const FeatureModel& model);
FeatureModel decode_model(std::span<const std::uint8_t> bytes);
void save_model(const FeatureModel& model, const std::filesystem::path& path);
FeatureModel load_model(const std::filesystem::path& path);

}  // namespace facebench
