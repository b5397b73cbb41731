#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facebench/features.hpp"
#include "facebench/metrics.hpp"

namespace facebench {

struct Prediction {
    std::size_t probe = 0;
    int label = 0;
    double score = 0.0;  ///< negative distance (NN) or decision value (SVM)
    std::optional<int> runner_up;
};

/// Label of the nearest gallery column per probe row; ties go to the lowest
/// gallery index.
std::vector<Prediction> nn_classify(const DistanceMatrix& distances, std::span<const int> gallery_labels);

/// exp(-gamma * ||x - y||^2)
double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

struct SvmParams {
    double C = 10.0;
    double gamma = 0.01;
    double tolerance = 1e-3;  ///< KKT violation gap at which SMO stops
    std::uint64_t max_kernel_evaluations = 10'000'000;  ///< per binary problem
    bool standardize = true;  ///< z-score features with training statistics
    unsigned threads = 1;
};

/// One class-vs-rest problem. Only support vectors are kept.
struct BinarySvm {
    int positive_label = 0;
    std::vector<Eigen::Index> support;  ///< indices into the training set
    Vector alpha;                       ///< dual variables of the support vectors
    std::vector<signed char> sign;      ///< +1 / -1 targets of the support vectors
    double bias = 0.0;
    std::size_t iterations = 0;
    bool degenerate = false;  ///< positive and negative points coincide
};

struct SvmModel {
    double C = 0.0;
    double gamma = 0.0;
    std::string strategy = "one-vs-rest";
    std::vector<int> classes;  ///< sorted class labels; machine c scores classes[c]
    Vector shift;              ///< standardization (zero / unit when disabled)
    Vector scale;
    Matrix support_vectors;    ///< union of support vectors, standardized, rows
    Matrix coefficients;       ///< support_vectors.rows() x classes: alpha_i * y_i per machine
    Vector biases;
    std::vector<BinarySvm> machines;
    bool degenerate = false;   ///< some machine is degenerate or has no support vectors
};

SvmModel svm_train(const Matrix& X, std::span<const int> labels, const SvmParams& params);

/// Decision values, rows = samples, columns = model.classes.
Matrix svm_decision_values(const SvmModel& model, const Matrix& X);

/// Argmax of the class-vs-rest decision values; ties go to the earlier class.
std::vector<Prediction> svm_predict(const SvmModel& model, const Matrix& X);

struct GridPoint {
    double C = 0.0;
    double gamma = 0.0;
    double accuracy = 0.0;  ///< cross-validated, percent
};

struct GridSearchResult {
    double C = 0.0;
    double gamma = 0.0;
    double accuracy = 0.0;
    bool stratified = true;
    std::vector<GridPoint> table;
    std::vector<std::string> warnings;
};

/// Default grids: C in 2^-5, 2^-3, ..., 2^15 and gamma in 2^-15, ..., 2^3.
std::vector<double> default_c_grid();
std::vector<double> default_gamma_grid();

/// k-fold cross-validation over the grid on the given training data. Folds are
/// stratified by class unless some class has fewer samples than folds, in
/// which case plain folds are used and a warning is recorded. Ties prefer the
/// smaller C, then the smaller gamma.
GridSearchResult grid_search_svm(const Matrix& X, std::span<const int> labels, std::span<const double> c_grid,
                                 std::span<const double> gamma_grid, std::size_t folds, std::uint64_t seed,
                                 const SvmParams& base = {});

}  // namespace facebench
