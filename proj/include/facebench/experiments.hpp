#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "facebench/classify.hpp"
#include "facebench/dataset.hpp"
#include "facebench/error.hpp"
#include "facebench/features.hpp"
#include "facebench/fusion.hpp"
#include "facebench/metrics.hpp"

namespace facebench {

enum class Protocol { E1, E2, E3_MALE, E3_FEMALE, E3_MIXED, E4_120, E4_240, E4_360, E4_480, CUSTOM };

struct GenderCounts {
    std::size_t female = 0;
    std::size_t male = 0;
};

std::string_view protocol_name(Protocol p);  // "E1", "E3_MALE", ...
std::optional<Protocol> parse_protocol(std::string_view text);
/// "e1", "e2", "custom" name one protocol; "e3" and "e4" expand to their
/// three and four subsets. Single protocol names are accepted too.
std::optional<std::vector<Protocol>> parse_protocol_group(std::string_view text);
/// Female/male subject counts drawn by the protocol; CUSTOM returns `custom`.
GenderCounts protocol_counts(Protocol p, GenderCounts custom = {});
/// The splits the published tables use: E1 both, everything else 5:5.
std::vector<SplitRatio> default_ratios(Protocol p);

/// SVM, or nearest neighbour under one metric.
struct Classifier {
    std::optional<MetricKind> metric;

    [[nodiscard]] bool is_svm() const { return !metric.has_value(); }
    [[nodiscard]] std::string name() const;
    friend bool operator==(const Classifier&, const Classifier&) = default;
};
std::optional<Classifier> parse_classifier(std::string_view text);  // "svm", "euc", ...
/// SVM followed by the eight metrics in numbering order.
std::vector<Classifier> all_classifiers();
std::vector<Classifier> metric_classifiers();

struct FusionSpec {
    std::size_t k = 2;
    FusionScheme scheme;
};
/// avg, min, med, wmp and the published weight tuples for each k in `ks`.
std::vector<FusionSpec> default_fusion_specs(std::span<const std::size_t> ks);
/// The published weight tuples for k = 2, 3, 4 (empty for other k).
std::vector<std::vector<double>> default_weight_tuples(std::size_t k);

struct SvmSettings {
    double C = 10.0;
    std::optional<double> gamma;  ///< unset: 1 / n_features
    bool tune = false;            ///< cross-validated grid search per trial
    std::size_t folds = 5;
    std::vector<double> c_grid = default_c_grid();
    std::vector<double> gamma_grid = default_gamma_grid();
    double tolerance = 1e-3;
    std::uint64_t max_kernel_evaluations = SvmParams{}.max_kernel_evaluations;
};

struct ExperimentConfig {
    std::vector<Protocol> protocols{Protocol::E1};
    std::vector<SplitRatio> ratios;  ///< empty: default_ratios per protocol
    std::vector<FeatureKind> features{FeatureKind::PCA, FeatureKind::LDA};
    std::vector<Classifier> classifiers = all_classifiers();
    std::vector<FusionSpec> fusion;
    std::uint64_t seed = 0;
    std::size_t trials = 1;
    std::size_t n_components = kDefaultComponents;
    std::size_t min_images = 10;
    std::size_t images_per_subject = 10;
    GenderCounts custom;
    SvmSettings svm;
    double metric_ridge = 1e-6;
    Normalization normalization = Normalization::Global;
    unsigned threads = 1;  ///< affects wall time only; not echoed

    /// Throws a Config error on an invalid combination.
    void validate() const;
};

/// Pixel rows of the records after alignment and equalization. Records
/// without eye coordinates are taken as already preprocessed.
Matrix face_matrix(const std::vector<ImageRecord>& records, unsigned threads = 1);

struct FittedFeatures {
    FeatureModel model;
    std::size_t components = 0;  ///< requested count capped by rank (and classes - 1 for LDA)
    double ridge = 0.0;          ///< LDA within-class diagonal load
};

/// Fits PCA or LDA with `requested` components, lowered to what the data
/// supports. `axes` must be the decomposition of X.
FittedFeatures fit_features(FeatureKind kind, const Matrix& X, std::span<const int> labels, std::size_t requested,
                            const PrincipalAxes& axes);

/// Ordered key/value description of every setting that can change results.
std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg);

/// 100 * correct / total.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

struct TrialInfo {
    Protocol protocol = Protocol::E1;
    SplitRatio ratio = SplitRatio::R9_1;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::string subjects_hash;  ///< FNV-1a of the sampled subject ids, hex
    std::size_t n_female = 0;
    std::size_t n_male = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::size_t pca_components = 0;
    std::size_t lda_components = 0;
    double lda_ridge = 0.0;
    std::vector<std::pair<FeatureKind, std::pair<double, double>>> svm_parameters;  ///< (C, gamma) per feature
};

struct CellResult {
    Protocol protocol = Protocol::E1;
    SplitRatio ratio = SplitRatio::R9_1;
    FeatureKind feature = FeatureKind::PCA;
    Classifier classifier;
    std::vector<double> accuracy;         ///< percent, one per trial
    std::vector<double> fit_seconds;      ///< feature fit + classifier training
    std::vector<double> predict_seconds;  ///< projection + classification
};

struct FusionRow {
    Protocol protocol = Protocol::E1;
    SplitRatio ratio = SplitRatio::R9_1;
    FeatureKind feature = FeatureKind::PCA;
    std::size_t k = 2;
    std::string row;  ///< scheme description, or "Metric-i" for the constituents
    bool constituent = false;
    std::vector<double> accuracy;                ///< one per trial
    std::vector<std::vector<int>> metrics;       ///< metric numbers used, per trial
    std::vector<bool> at_least_best;             ///< fused >= best single metric, per trial
};

struct TimingEntry {
    std::string label;
    double seconds = 0.0;
};

/// Wall-clock sections with unique labels.
class Timings {
public:
    void record(std::string label, double seconds);
    [[nodiscard]] const std::vector<TimingEntry>& entries() const noexcept { return entries_; }
    [[nodiscard]] double total(std::string_view prefix) const;

private:
    std::vector<TimingEntry> entries_;
};

/// Runs `thunk` and records its monotonic wall time under `label`.
template <class F>
auto time_section(Timings& timings, std::string label, F&& thunk) {
    const auto start = std::chrono::steady_clock::now();
    const auto seconds = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
        thunk();
        const double s = seconds();
        timings.record(std::move(label), s);
        return s;
    } else {
        auto result = thunk();
        const double s = seconds();
        timings.record(std::move(label), s);
        return std::pair{std::move(result), s};
    }
}

struct ExperimentReport {
    std::string kind = "experiment";  ///< or "fusion-study"
    std::vector<std::pair<std::string, std::string>> config;
    std::uint64_t seed = 0;
    std::size_t trials = 1;
    std::vector<TrialInfo> provenance;
    std::vector<CellResult> cells;
    std::vector<FusionRow> fusion;
    Timings timings;
    std::vector<std::string> warnings;

    [[nodiscard]] const CellResult* find_cell(Protocol p, SplitRatio r, FeatureKind f, const Classifier& c) const;
};

double mean_of(std::span<const double> values);
/// Sample standard deviation; 0 for fewer than two values.
double sd_of(std::span<const double> values);

/// filter -> sample -> split -> preprocess -> features -> classify -> fuse,
/// for every configured protocol, ratio and trial. Trial t uses seed + t.
ExperimentReport run_experiment(const Dataset& data, const ExperimentConfig& cfg);

/// run_experiment restricted to fusion output; needs cfg.fusion.
ExperimentReport run_fusion_study(const Dataset& data, const ExperimentConfig& cfg);

enum class ReportFormat { Csv, Json };
/// From the extension: ".csv" or ".json".
std::optional<ReportFormat> report_format_for(const std::filesystem::path& path);

std::string render_report(const ExperimentReport& report, ReportFormat format);
std::string render_timings(const ExperimentReport& report);
/// Timing sidecar written next to a report: "<stem>.timing.csv".
std::filesystem::path timing_path_for(const std::filesystem::path& report_path);
/// Writes the report and its timing sidecar.
void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path);

}  // namespace facebench
