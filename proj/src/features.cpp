#include "facebench/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "facebench/error.hpp"

namespace facebench {

namespace {

constexpr double kRankTolerance = 1e-10;

Matrix centered(const Matrix& X, const Vector& mean) { return X.rowwise() - mean.transpose(); }

// Flip so the largest-magnitude entry is positive (first such entry on ties).
bool fix_sign(Eigen::Ref<Vector> column) {
    Eigen::Index at = 0;
    column.cwiseAbs().maxCoeff(&at);
    if (column[at] < 0.0) {
        column = -column;
        return true;
    }
    return false;
}

struct ClassIndex {
    std::vector<int> codes;          // dense class index per sample
    std::vector<Eigen::Index> sizes;
};

ClassIndex index_classes(std::span<const int> labels) {
    std::map<int, int> dense;
    for (int l : labels) dense.emplace(l, 0);
    int next = 0;
    for (auto& [label, code] : dense) code = next++;
    ClassIndex idx;
    idx.sizes.assign(dense.size(), 0);
    idx.codes.reserve(labels.size());
    for (int l : labels) {
        const int c = dense[l];
        idx.codes.push_back(c);
        ++idx.sizes[static_cast<std::size_t>(c)];
    }
    return idx;
}

Matrix class_means(const Matrix& Y, const ClassIndex& idx) {
    Matrix means = Matrix::Zero(static_cast<Eigen::Index>(idx.sizes.size()), Y.cols());
    for (Eigen::Index i = 0; i < Y.rows(); ++i) means.row(idx.codes[static_cast<std::size_t>(i)]) += Y.row(i);
    for (std::size_t c = 0; c < idx.sizes.size(); ++c) {
        means.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(idx.sizes[c]);
    }
    return means;
}

}  // namespace

std::string_view feature_name(FeatureKind k) { return k == FeatureKind::PCA ? "PCA" : "LDA"; }

std::optional<FeatureKind> parse_feature(std::string_view text) {
    if (text == "PCA" || text == "pca") return FeatureKind::PCA;
    if (text == "LDA" || text == "lda") return FeatureKind::LDA;
    return std::nullopt;
}

PrincipalAxes principal_axes(const Matrix& X) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    require(n >= 2, ErrorKind::Data, "PCA needs at least 2 samples (got " + std::to_string(n) + ")");
    require(d >= 1, ErrorKind::Data, "PCA needs at least one feature column");

    PrincipalAxes out;
    out.n_samples = n;
    out.mean = X.colwise().mean().transpose();
    const Matrix Xc = centered(X, out.mean);
    const double denom = static_cast<double>(n - 1);

    Vector values;   // ascending
    Matrix vectors;
    const bool gram = d > n;
    {
        const Eigen::Index s = gram ? n : d;
        Matrix M = Matrix::Zero(s, s);
        if (gram) {
            M.selfadjointView<Eigen::Lower>().rankUpdate(Xc);
        } else {
            M.selfadjointView<Eigen::Lower>().rankUpdate(Xc.transpose());
        }
        Eigen::SelfAdjointEigenSolver<Matrix> solver(M.selfadjointView<Eigen::Lower>());
        require(solver.info() == Eigen::Success, ErrorKind::Numeric, "covariance eigendecomposition failed");
        values = solver.eigenvalues();
        vectors = solver.eigenvectors();
    }

    const Eigen::Index s = values.size();
    const double top = values[s - 1];
    require(top > 0.0, ErrorKind::Data, "degenerate data: all samples are identical");
    Eigen::Index rank = 0;
    while (rank < s && values[s - 1 - rank] >= kRankTolerance * top) ++rank;

    out.variances.resize(rank);
    out.axes.resize(d, rank);
    for (Eigen::Index j = 0; j < rank; ++j) {
        const Eigen::Index src = s - 1 - j;
        out.variances[j] = values[src] / denom;
        if (gram) {
            // Snapshot method: u = Xc^T v / sqrt(lambda).
            Vector u = Xc.transpose() * vectors.col(src);
            u.normalize();
            out.axes.col(j) = u;
        } else {
            out.axes.col(j) = vectors.col(src);
        }
        fix_sign(out.axes.col(j));
    }
    return out;
}

FeatureModel fit_pca(const PrincipalAxes& axes, Eigen::Index n_components) {
    const Eigen::Index limit = std::min(axes.n_samples - 1, axes.mean.size());
    require(n_components >= 1 && n_components <= limit, ErrorKind::Config,
            "n_components " + std::to_string(n_components) + " out of range [1, " + std::to_string(limit) + "]");
    require(n_components <= axes.axes.cols(), ErrorKind::Data,
            "n_components " + std::to_string(n_components) + " exceeds the data rank " +
                std::to_string(axes.axes.cols()));
    FeatureModel m;
    m.kind = FeatureKind::PCA;
    m.mean = axes.mean;
    m.basis = axes.axes.leftCols(n_components);
    m.eigenvalues = axes.variances.head(n_components);
    return m;
}

FeatureModel fit_pca(const Matrix& X, Eigen::Index n_components) {
    require(X.rows() >= 2, ErrorKind::Data, "PCA needs at least 2 samples");
    const Eigen::Index limit = std::min(X.rows() - 1, X.cols());
    require(n_components >= 1 && n_components <= limit, ErrorKind::Config,
            "n_components " + std::to_string(n_components) + " out of range [1, " + std::to_string(limit) + "]");
    return fit_pca(principal_axes(X), n_components);
}

LdaFit fit_lda_detailed(const Matrix& X, std::span<const int> labels, Eigen::Index n_components,
                        const PrincipalAxes* axes) {
    require(static_cast<Eigen::Index>(labels.size()) == X.rows(), ErrorKind::Data,
            "label count does not match sample count");
    const ClassIndex idx = index_classes(labels);
    const auto n_classes = static_cast<Eigen::Index>(idx.sizes.size());
    require(n_classes >= 2, ErrorKind::Data, "LDA needs at least 2 classes");
    for (auto size : idx.sizes) {
        require(size >= 2, ErrorKind::Data, "every LDA class needs at least 2 samples");
    }
    require(n_components >= 1 && n_components <= n_classes - 1, ErrorKind::Config,
            "LDA n_components " + std::to_string(n_components) + " out of range [1, " +
                std::to_string(n_classes - 1) + "]");

    PrincipalAxes local;
    if (axes == nullptr) {
        local = principal_axes(X);
        axes = &local;
    }
    require(axes->mean.size() == X.cols() && axes->n_samples == X.rows(), ErrorKind::Config,
            "precomputed principal axes do not match the data");

    // Reduce to n - c dimensions so the within-class scatter can be full rank.
    const Eigen::Index m = std::min(X.rows() - n_classes, axes->axes.cols());
    require(m >= 1, ErrorKind::Data, "LDA needs more samples than classes");

    LdaFit fit;
    fit.pca_basis = axes->axes.leftCols(m);
    const Matrix Y = centered(X, axes->mean) * fit.pca_basis;

    const Matrix means = class_means(Y, idx);
    const Vector grand = Y.colwise().mean().transpose();
    Matrix D = Y;
    for (Eigen::Index i = 0; i < Y.rows(); ++i) D.row(i) -= means.row(idx.codes[static_cast<std::size_t>(i)]);
    Matrix within = Matrix::Zero(m, m);
    within.selfadjointView<Eigen::Lower>().rankUpdate(D.transpose());
    within = within.selfadjointView<Eigen::Lower>();
    D.resize(0, 0);

    // S_B = B B^T with columns sqrt(n_j) (mu_j - mu).
    Matrix B(m, n_classes);
    for (Eigen::Index c = 0; c < n_classes; ++c) {
        B.col(c) = std::sqrt(static_cast<double>(idx.sizes[static_cast<std::size_t>(c)])) *
                   (means.row(c).transpose() - grand);
    }

    // Factor S_W = L L^T, loading the diagonal only when it is singular.
    double scale = within.trace() / static_cast<double>(m);
    const double between_scale = B.squaredNorm() / static_cast<double>(m);
    // Round-off-level within-class scatter (identical samples per class) is zero.
    if (!(scale > 1e-12 * between_scale)) {
        within.setZero();
        scale = between_scale;
    }
    require(scale > 0.0, ErrorKind::Data, "degenerate data: no within- or between-class scatter");
    Eigen::LLT<Matrix> llt;
    double ridge = 0.0;
    for (int attempt = 0;; ++attempt) {
        Matrix loaded = within;
        loaded.diagonal().array() += ridge;
        llt.compute(loaded);
        bool ok = llt.info() == Eigen::Success;
        if (ok) {
            const Vector diag = llt.matrixLLT().diagonal();
            const double lo = diag.minCoeff(), hi = diag.maxCoeff();
            ok = lo > 0.0 && lo * lo >= 1e-12 * hi * hi;
        }
        if (ok) break;
        require(attempt < 10, ErrorKind::Numeric, "within-class scatter could not be regularized");
        ridge = ridge == 0.0 ? 1e-10 * scale : ridge * 100.0;
    }
    fit.ridge = ridge;

    // With v = L^T w the problem becomes (L^-1 B)(L^-1 B)^T v = lambda v; its
    // nonzero spectrum comes from the small c x c matrix A^T A.
    const Matrix A = llt.matrixL().solve(B);
    Matrix small = Matrix::Zero(n_classes, n_classes);
    small.selfadjointView<Eigen::Lower>().rankUpdate(A.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(small.selfadjointView<Eigen::Lower>());
    require(solver.info() == Eigen::Success, ErrorKind::Numeric, "discriminant eigendecomposition failed");
    const Vector& values = solver.eigenvalues();
    const double top = values[n_classes - 1];
    require(top > 0.0, ErrorKind::Data, "degenerate data: class means coincide");

    Matrix U(m, n_components);
    Vector lambdas(n_components);
    for (Eigen::Index j = 0; j < n_components; ++j) {
        const Eigen::Index src = n_classes - 1 - j;
        require(values[src] > kRankTolerance * top, ErrorKind::Data,
                "between-class scatter has rank " + std::to_string(j) + " < n_components " +
                    std::to_string(n_components));
        lambdas[j] = values[src];
        U.col(j) = A * solver.eigenvectors().col(src) / std::sqrt(values[src]);
    }
    fit.directions = llt.matrixU().solve(U);  // w = L^-T u

    FeatureModel& model = fit.model;
    model.kind = FeatureKind::LDA;
    model.mean = axes->mean;
    model.basis = fit.pca_basis * fit.directions;
    for (Eigen::Index j = 0; j < n_components; ++j) {
        const double norm = model.basis.col(j).norm();
        model.basis.col(j) /= norm;
        fit.directions.col(j) /= norm;
        if (fix_sign(model.basis.col(j))) fit.directions.col(j) = -fit.directions.col(j);
    }
    model.eigenvalues = lambdas;
    return fit;
}

FeatureModel fit_lda(const Matrix& X, std::span<const int> labels, Eigen::Index n_components,
                     const PrincipalAxes* axes) {
    return fit_lda_detailed(X, labels, n_components, axes).model;
}

Scatter scatter_matrices(const Matrix& X, std::span<const int> labels) {
    require(static_cast<Eigen::Index>(labels.size()) == X.rows(), ErrorKind::Data,
            "label count does not match sample count");
    const ClassIndex idx = index_classes(labels);
    const Matrix means = class_means(X, idx);
    const Vector grand = X.colwise().mean().transpose();
    Scatter s;
    s.within = Matrix::Zero(X.cols(), X.cols());
    s.between = Matrix::Zero(X.cols(), X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Vector dv = X.row(i) - means.row(idx.codes[static_cast<std::size_t>(i)]);
        s.within += dv * dv.transpose();
    }
    for (std::size_t c = 0; c < idx.sizes.size(); ++c) {
        const Vector dv = means.row(static_cast<Eigen::Index>(c)).transpose() - grand;
        s.between += static_cast<double>(idx.sizes[c]) * dv * dv.transpose();
    }
    return s;
}

Matrix project(const FeatureModel& model, const Matrix& X, std::optional<Eigen::Index> n_components) {
    require(X.cols() == model.input_dim(), ErrorKind::Data,
            "dimension mismatch: data has " + std::to_string(X.cols()) + " columns, model expects " +
                std::to_string(model.input_dim()));
    const Eigen::Index k = n_components.value_or(model.n_components());
    require(k >= 1 && k <= model.n_components(), ErrorKind::Config,
            "cannot project onto " + std::to_string(k) + " of " + std::to_string(model.n_components()) +
                " components");
    return centered(X, model.mean) * model.basis.leftCols(k);
}

double fisher_criterion(const Eigen::Ref<const Vector>& w, const Matrix& between, const Matrix& within) {
    require(w.size() == between.rows() && between.rows() == between.cols() && within.rows() == within.cols() &&
                within.rows() == w.size(),
            ErrorKind::Data, "fisher_criterion: dimension mismatch");
    require(w.squaredNorm() > 0.0, ErrorKind::Config, "fisher_criterion: w must be nonzero");
    const double den = w.dot(within * w);
    require(den > 0.0, ErrorKind::Numeric, "fisher_criterion: zero denominator w^T S_W w");
    return w.dot(between * w) / den;
}

}  // namespace facebench
