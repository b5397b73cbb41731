#include "facebench/experiments.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "facebench/csv.hpp"
#include "facebench/parallel.hpp"
#include "facebench/rng.hpp"

namespace facebench {

namespace {

constexpr std::array<Protocol, 10> kAllProtocols{Protocol::E1,       Protocol::E2,       Protocol::E3_MALE,
                                                 Protocol::E3_FEMALE, Protocol::E3_MIXED, Protocol::E4_120,
                                                 Protocol::E4_240,   Protocol::E4_360,   Protocol::E4_480,
                                                 Protocol::CUSTOM};

std::string lowercase(std::string_view text) {
    std::string s(text);
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string join_doubles(std::span<const double> values, char sep = ',') {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) s += sep;
        s += csv::format_double(values[i]);
    }
    return s;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct Features {
    Matrix train;
    Matrix test;
};

struct TrialData {
    Matrix X_train;
    Matrix X_test;
    std::vector<int> y_train;
    std::vector<int> y_test;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

TrialData build_trial(const Dataset& sampled, const Split& split, unsigned threads) {
    std::map<std::string, int, std::less<>> code;
    for (const auto& s : sampled.subjects()) code.emplace(s, static_cast<int>(code.size()));
    TrialData t;
    t.X_train = face_matrix(split.train, threads);
    t.X_test = face_matrix(split.test, threads);
    for (const auto& r : split.train) {
        t.y_train.push_back(code.at(r.subject_id));
        t.train_ids.push_back(r.image_id);
    }
    for (const auto& r : split.test) {
        t.y_test.push_back(code.at(r.subject_id));
        t.test_ids.push_back(r.image_id);
    }
    return t;
}

std::vector<int> labels_of(const std::vector<Prediction>& preds) {
    std::vector<int> out;
    out.reserve(preds.size());
    for (const auto& p : preds) out.push_back(p.label);
    return out;
}

std::string section_label(Protocol p, SplitRatio r, std::size_t trial) {
    return std::string(protocol_name(p)) + "/" + std::string(ratio_name(r)) + "/t" + std::to_string(trial);
}

std::size_t distinct_count(std::span<const int> labels) {
    return std::set<int>(labels.begin(), labels.end()).size();
}

}  // namespace

Matrix face_matrix(const std::vector<ImageRecord>& records, unsigned threads) {
    Matrix X(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(kFaceDim));
    parallel_for(records.size(), threads, [&](std::size_t i) {
        const ImageRecord& rec = records[i];
        GrayImage img = load_image(rec);
        if (rec.eyes) {
            img = preprocess_face(img, rec.eyes);
        } else {
            require(img.height() == kFaceHeight && img.width() == kFaceWidth, ErrorKind::Data,
                    "image " + rec.image_id + " has no eye coordinates and is not " + std::to_string(kFaceHeight) +
                        "x" + std::to_string(kFaceWidth));
        }
        X.row(static_cast<Eigen::Index>(i)) = to_feature_vector(img).transpose();
    });
    return X;
}

FittedFeatures fit_features(FeatureKind kind, const Matrix& X, std::span<const int> labels, std::size_t requested,
                            const PrincipalAxes& axes) {
    const auto rank = static_cast<std::size_t>(axes.axes.cols());
    FittedFeatures out;
    if (kind == FeatureKind::PCA) {
        out.components = std::min(requested, rank);
        out.model = fit_pca(axes, static_cast<Eigen::Index>(out.components));
        return out;
    }
    const std::size_t n_classes = distinct_count(labels);
    const auto n = static_cast<std::size_t>(X.rows());
    require(n > n_classes && n_classes >= 2, ErrorKind::Data, "LDA needs at least 2 classes and more samples than classes");
    out.components = std::min({requested, n_classes - 1, std::min(n - n_classes, rank)});
    LdaFit fit = fit_lda_detailed(X, labels, static_cast<Eigen::Index>(out.components), &axes);
    out.model = std::move(fit.model);
    out.ridge = fit.ridge;
    return out;
}

std::string_view protocol_name(Protocol p) {
    switch (p) {
        case Protocol::E1: return "E1";
        case Protocol::E2: return "E2";
        case Protocol::E3_MALE: return "E3_MALE";
        case Protocol::E3_FEMALE: return "E3_FEMALE";
        case Protocol::E3_MIXED: return "E3_MIXED";
        case Protocol::E4_120: return "E4_120";
        case Protocol::E4_240: return "E4_240";
        case Protocol::E4_360: return "E4_360";
        case Protocol::E4_480: return "E4_480";
        case Protocol::CUSTOM: return "CUSTOM";
    }
    return "?";
}

std::optional<Protocol> parse_protocol(std::string_view text) {
    const std::string lower = lowercase(text);
    for (auto p : kAllProtocols) {
        if (lowercase(protocol_name(p)) == lower) return p;
    }
    return std::nullopt;
}

std::optional<std::vector<Protocol>> parse_protocol_group(std::string_view text) {
    const std::string lower = lowercase(text);
    if (lower == "e3") return std::vector{Protocol::E3_MALE, Protocol::E3_FEMALE, Protocol::E3_MIXED};
    if (lower == "e4") return std::vector{Protocol::E4_120, Protocol::E4_240, Protocol::E4_360, Protocol::E4_480};
    if (auto p = parse_protocol(lower)) return std::vector{*p};
    return std::nullopt;
}

GenderCounts protocol_counts(Protocol p, GenderCounts custom) {
    switch (p) {
        case Protocol::E1: return {83, 83};
        case Protocol::E2: return {83, 461};
        case Protocol::E3_MALE: return {0, 82};
        case Protocol::E3_FEMALE: return {82, 0};
        case Protocol::E3_MIXED: return {41, 41};
        case Protocol::E4_120: return {20, 100};
        case Protocol::E4_240: return {40, 200};
        case Protocol::E4_360: return {60, 300};
        case Protocol::E4_480: return {80, 400};
        case Protocol::CUSTOM: return custom;
    }
    return custom;
}

std::vector<SplitRatio> default_ratios(Protocol p) {
    if (p == Protocol::E1) return {SplitRatio::R9_1, SplitRatio::R5_5};
    return {SplitRatio::R5_5};
}

std::string Classifier::name() const { return metric ? std::string(metric_name(*metric)) : "SVM"; }

std::optional<Classifier> parse_classifier(std::string_view text) {
    if (lowercase(text) == "svm") return Classifier{};
    if (auto m = parse_metric(text)) return Classifier{*m};
    return std::nullopt;
}

std::vector<Classifier> all_classifiers() {
    std::vector<Classifier> out{Classifier{}};
    for (auto m : kAllMetrics) out.push_back(Classifier{m});
    return out;
}

std::vector<Classifier> metric_classifiers() {
    std::vector<Classifier> out;
    for (auto m : kAllMetrics) out.push_back(Classifier{m});
    return out;
}

std::vector<std::vector<double>> default_weight_tuples(std::size_t k) {
    switch (k) {
        case 2: return {{0.9, 0.1}, {0.1, 0.9}};
        case 3: return {{0.8, 0.1, 0.1}, {0.4, 0.3, 0.3}, {0.1, 0.1, 0.8}};
        case 4: return {{0.4, 0.4, 0.1, 0.1}, {0.3, 0.3, 0.2, 0.2}, {0.1, 0.1, 0.4, 0.4}};
        default: return {};
    }
}

std::vector<FusionSpec> default_fusion_specs(std::span<const std::size_t> ks) {
    std::vector<FusionSpec> out;
    for (auto k : ks) {
        for (auto kind : {FusionKind::AVG, FusionKind::MIN, FusionKind::MED, FusionKind::WMP}) {
            out.push_back({k, FusionScheme{kind, {}}});
        }
        for (auto& w : default_weight_tuples(k)) out.push_back({k, FusionScheme{FusionKind::WEIGHTED, w}});
    }
    return out;
}

void ExperimentConfig::validate() const {
    require(!protocols.empty(), ErrorKind::Config, "no protocol selected");
    require(!features.empty(), ErrorKind::Config, "no feature kind selected");
    require(!classifiers.empty(), ErrorKind::Config, "no classifier selected");
    require(trials >= 1, ErrorKind::Config, "trials must be >= 1");
    require(n_components >= 1, ErrorKind::Config, "n_components must be >= 1");
    require(images_per_subject >= 2, ErrorKind::Config, "images_per_subject must be >= 2");
    require(min_images >= images_per_subject, ErrorKind::Config, "min_images must be >= images_per_subject");
    require(metric_ridge >= 0.0 && std::isfinite(metric_ridge), ErrorKind::Config, "metric ridge must be >= 0");
    require(svm.C > 0.0 && std::isfinite(svm.C), ErrorKind::Config, "SVM C must be > 0");
    require(!svm.gamma || (*svm.gamma > 0.0 && std::isfinite(*svm.gamma)), ErrorKind::Config,
            "SVM gamma must be > 0");
    require(svm.tolerance > 0.0, ErrorKind::Config, "SVM tolerance must be > 0");
    if (svm.tune) {
        require(svm.folds >= 2, ErrorKind::Config, "SVM folds must be >= 2");
        require(!svm.c_grid.empty() && !svm.gamma_grid.empty(), ErrorKind::Config, "SVM grids must be non-empty");
    }

    const auto no_duplicates = [](const auto& items, const char* what) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            for (std::size_t j = i + 1; j < items.size(); ++j) {
                require(!(items[i] == items[j]), ErrorKind::Config, std::string("duplicate ") + what);
            }
        }
    };
    no_duplicates(protocols, "protocol");
    no_duplicates(ratios, "ratio");
    no_duplicates(features, "feature kind");
    no_duplicates(classifiers, "classifier");

    const auto ratio_list = [&](Protocol p) { return ratios.empty() ? default_ratios(p) : ratios; };
    for (auto p : protocols) {
        if (p == Protocol::CUSTOM) {
            require(custom.female + custom.male >= 2, ErrorKind::Config,
                    "custom protocol needs at least 2 subjects in total");
        }
        for (auto r : ratio_list(p)) {
            if (r == SplitRatio::R9_1) {
                require(images_per_subject % 10 == 0, ErrorKind::Config,
                        "ratio 9:1 needs images_per_subject divisible by 10");
            } else {
                require(images_per_subject % 2 == 0, ErrorKind::Config, "ratio 5:5 needs an even images_per_subject");
            }
        }
    }

    std::size_t metric_count = 0;
    for (const auto& c : classifiers) metric_count += c.is_svm() ? 0 : 1;
    for (const auto& f : fusion) {
        require(f.k >= 1, ErrorKind::Config, "fusion k must be >= 1");
        require(f.k <= metric_count, ErrorKind::Config,
                "fusion k=" + std::to_string(f.k) + " exceeds the " + std::to_string(metric_count) +
                    " configured metrics");
        f.scheme.validate();
        if (f.scheme.kind == FusionKind::WEIGHTED) {
            require(f.scheme.weights.size() == f.k, ErrorKind::Config,
                    "weights " + f.scheme.describe() + " do not match k=" + std::to_string(f.k));
        }
    }
}

std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    const auto add = [&](std::string key, std::string value) { out.emplace_back(std::move(key), std::move(value)); };
    const auto join = [](const auto& items, auto&& name) {
        std::string s;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i > 0) s += ' ';
            s += name(items[i]);
        }
        return s;
    };
    add("protocols", join(cfg.protocols, [](Protocol p) { return std::string(protocol_name(p)); }));
    add("ratios", cfg.ratios.empty() ? "default"
                                     : join(cfg.ratios, [](SplitRatio r) { return std::string(ratio_name(r)); }));
    add("features", join(cfg.features, [](FeatureKind f) { return std::string(feature_name(f)); }));
    add("classifiers", join(cfg.classifiers, [](const Classifier& c) { return c.name(); }));
    add("fusion", join(cfg.fusion, [](const FusionSpec& f) { return "best" + std::to_string(f.k) + ":" + f.scheme.describe(); }));
    add("seed", std::to_string(cfg.seed));
    add("trials", std::to_string(cfg.trials));
    add("n_components", std::to_string(cfg.n_components));
    add("min_images", std::to_string(cfg.min_images));
    add("images_per_subject", std::to_string(cfg.images_per_subject));
    if (std::find(cfg.protocols.begin(), cfg.protocols.end(), Protocol::CUSTOM) != cfg.protocols.end()) {
        add("custom_female", std::to_string(cfg.custom.female));
        add("custom_male", std::to_string(cfg.custom.male));
    }
    add("svm_C", csv::format_double(cfg.svm.C));
    add("svm_gamma", cfg.svm.gamma ? csv::format_double(*cfg.svm.gamma) : "1/n_features");
    add("svm_tune", cfg.svm.tune ? "true" : "false");
    if (cfg.svm.tune) {
        add("svm_folds", std::to_string(cfg.svm.folds));
        add("svm_c_grid", join_doubles(cfg.svm.c_grid, ' '));
        add("svm_gamma_grid", join_doubles(cfg.svm.gamma_grid, ' '));
    }
    add("svm_tolerance", csv::format_double(cfg.svm.tolerance));
    add("svm_max_kernel_evaluations", std::to_string(cfg.svm.max_kernel_evaluations));
    add("metric_ridge", csv::format_double(cfg.metric_ridge));
    add("normalization", cfg.normalization == Normalization::Global ? "global" : "per-row");
    return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    require(predicted.size() == truth.size(), ErrorKind::Data,
            "prediction count " + std::to_string(predicted.size()) + " does not match label count " +
                std::to_string(truth.size()));
    require(!truth.empty(), ErrorKind::Data, "accuracy of an empty prediction set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i] ? 1 : 0;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(truth.size());
}

void Timings::record(std::string label, double seconds) {
    for (const auto& e : entries_) {
        require(e.label != label, ErrorKind::Config, "duplicate timing label " + label);
    }
    entries_.push_back({std::move(label), seconds});
}

double Timings::total(std::string_view prefix) const {
    double s = 0.0;
    for (const auto& e : entries_) {
        if (std::string_view(e.label).substr(0, prefix.size()) == prefix) s += e.seconds;
    }
    return s;
}

const CellResult* ExperimentReport::find_cell(Protocol p, SplitRatio r, FeatureKind f, const Classifier& c) const {
    for (const auto& cell : cells) {
        if (cell.protocol == p && cell.ratio == r && cell.feature == f && cell.classifier == c) return &cell;
    }
    return nullptr;
}

double mean_of(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double sd_of(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double m = mean_of(values);
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(values.size() - 1));
}

ExperimentReport run_experiment(const Dataset& data, const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport report;
    report.config = config_echo(cfg);
    report.seed = cfg.seed;
    report.trials = cfg.trials;

    const Dataset pool = filter_min_images(data, cfg.min_images);
    const auto ratio_list = [&](Protocol p) { return cfg.ratios.empty() ? default_ratios(p) : cfg.ratios; };
    const bool want_fusion = !cfg.fusion.empty();
    std::set<std::size_t> fusion_ks;
    for (const auto& f : cfg.fusion) fusion_ks.insert(f.k);

    // Cells and fusion rows are laid out up front in canonical order and
    // filled by key.
    std::map<std::tuple<Protocol, SplitRatio, FeatureKind, std::size_t>, std::size_t> cell_slot;
    std::map<std::tuple<Protocol, SplitRatio, FeatureKind, std::size_t, std::string>, std::size_t> fusion_slot;
    for (auto p : cfg.protocols) {
        for (auto r : ratio_list(p)) {
            for (auto f : cfg.features) {
                for (std::size_t c = 0; c < cfg.classifiers.size(); ++c) {
                    cell_slot[{p, r, f, c}] = report.cells.size();
                    report.cells.push_back({p, r, f, cfg.classifiers[c], {}, {}, {}});
                }
                for (auto k : fusion_ks) {
                    for (const auto& spec : cfg.fusion) {
                        if (spec.k != k) continue;
                        const std::string row = spec.scheme.describe();
                        fusion_slot[{p, r, f, k, row}] = report.fusion.size();
                        report.fusion.push_back({p, r, f, k, row, false, {}, {}, {}});
                    }
                    for (std::size_t i = 1; i <= k; ++i) {
                        const std::string row = "Metric-" + std::to_string(i);
                        fusion_slot[{p, r, f, k, row}] = report.fusion.size();
                        report.fusion.push_back({p, r, f, k, row, true, {}, {}, {}});
                    }
                }
            }
        }
    }

    const bool need_mc = std::any_of(cfg.classifiers.begin(), cfg.classifiers.end(),
                                     [](const Classifier& c) { return c.metric == MetricKind::MC; });

    for (auto p : cfg.protocols) {
        const GenderCounts counts = protocol_counts(p, cfg.custom);
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            const std::uint64_t trial_seed = cfg.seed + t;
            SamplingSpec spec;
            spec.n_female = counts.female;
            spec.n_male = counts.male;
            spec.images_per_subject = cfg.images_per_subject;
            spec.seed = derive_seed(trial_seed, "sample:" + std::string(protocol_name(p)));
            const Dataset sampled = sample_subjects(pool, spec);

            std::string joined;
            for (const auto& s : sampled.subjects()) joined += s + '\n';
            const std::string hash = hex64(fnv1a64(joined));

            for (auto r : ratio_list(p)) {
                const std::string sec = section_label(p, r, t);
                const Split split = split_train_test(
                    sampled, r, derive_seed(trial_seed, "split:" + std::string(protocol_name(p)) + ":" +
                                                            std::string(ratio_name(r))));
                const TrialData td = time_section(report.timings, sec + "/load",
                                                  [&] { return build_trial(sampled, split, cfg.threads); })
                                         .first;

                TrialInfo info;
                info.protocol = p;
                info.ratio = r;
                info.trial = t;
                info.seed = trial_seed;
                info.subjects_hash = hash;
                info.n_female = sampled.count_of(Gender::Female);
                info.n_male = sampled.count_of(Gender::Male);
                info.n_train = td.y_train.size();
                info.n_test = td.y_test.size();

                auto [axes, axes_seconds] =
                    time_section(report.timings, sec + "/principal-axes", [&] { return principal_axes(td.X_train); });

                for (auto f : cfg.features) {
                    const std::string fsec = sec + "/" + std::string(feature_name(f));
                    auto [fitted, fit_seconds] = time_section(report.timings, fsec + "/fit", [&] {
                        return fit_features(f, td.X_train, td.y_train, cfg.n_components, axes);
                    });
                    fit_seconds += axes_seconds;
                    const FeatureModel& model = fitted.model;
                    const std::size_t k = fitted.components;
                    if (f == FeatureKind::LDA) info.lda_ridge = fitted.ridge;
                    if (k < cfg.n_components) {
                        report.warnings.push_back(fsec + ": " + std::string(feature_name(f)) + " uses " +
                                                  std::to_string(k) + " components (cap below " +
                                                  std::to_string(cfg.n_components) + ")");
                    }
                    (f == FeatureKind::PCA ? info.pca_components : info.lda_components) = k;

                    auto [feats, project_seconds] = time_section(report.timings, fsec + "/project", [&] {
                        return Features{project(model, td.X_train), project(model, td.X_test)};
                    });

                    MetricContext ctx;
                    double ctx_seconds = 0.0;
                    if (need_mc) {
                        std::tie(ctx, ctx_seconds) = time_section(report.timings, fsec + "/metric-context", [&] {
                            return fit_metric_context(feats.train, cfg.metric_ridge);
                        });
                    }

                    std::map<MetricKind, double> metric_accuracy;
                    std::map<MetricKind, DistanceMatrix> normalized;
                    for (std::size_t c = 0; c < cfg.classifiers.size(); ++c) {
                        const Classifier& cl = cfg.classifiers[c];
                        const std::string csec = fsec + "/" + cl.name();
                        double acc = 0.0, train_s = 0.0, predict_s = 0.0;
                        if (cl.is_svm()) {
                            SvmParams params;
                            params.C = cfg.svm.C;
                            params.gamma = cfg.svm.gamma.value_or(1.0 / static_cast<double>(k));
                            params.tolerance = cfg.svm.tolerance;
                            params.max_kernel_evaluations = cfg.svm.max_kernel_evaluations;
                            params.threads = cfg.threads;
                            SvmModel svm;
                            std::tie(svm, train_s) = time_section(report.timings, csec + "/train", [&] {
                                if (cfg.svm.tune) {
                                    const auto grid =
                                        grid_search_svm(feats.train, td.y_train, cfg.svm.c_grid, cfg.svm.gamma_grid,
                                                        cfg.svm.folds, derive_seed(trial_seed, csec), params);
                                    params.C = grid.C;
                                    params.gamma = grid.gamma;
                                    for (const auto& w : grid.warnings) report.warnings.push_back(csec + ": " + w);
                                }
                                return svm_train(feats.train, td.y_train, params);
                            });
                            if (svm.degenerate) report.warnings.push_back(csec + ": degenerate SVM machine");
                            info.svm_parameters.push_back({f, {params.C, params.gamma}});
                            std::vector<int> predicted;
                            std::tie(predicted, predict_s) = time_section(report.timings, csec + "/predict", [&] {
                                return labels_of(svm_predict(svm, feats.test));
                            });
                            acc = accuracy(predicted, td.y_test);
                        } else {
                            const MetricKind mk = *cl.metric;
                            if (mk == MetricKind::MC) train_s = ctx_seconds;
                            DistanceMatrix D;
                            std::vector<int> predicted;
                            predict_s = time_section(report.timings, csec + "/predict", [&] {
                                D = pairwise(mk, feats.train, feats.test, ctx, cfg.threads);
                                D.probe_ids = td.test_ids;
                                D.gallery_ids = td.train_ids;
                                predicted = labels_of(nn_classify(D, td.y_train));
                            });
                            acc = accuracy(predicted, td.y_test);
                            metric_accuracy[mk] = acc;
                            if (want_fusion) normalized.emplace(mk, minmax_normalize(D, cfg.normalization));
                        }
                        CellResult& cell = report.cells[cell_slot.at({p, r, f, c})];
                        cell.accuracy.push_back(acc);
                        cell.fit_seconds.push_back(fit_seconds + train_s);
                        cell.predict_seconds.push_back(project_seconds + predict_s);
                    }

                    if (!want_fusion) continue;
                    const auto ranked = rank_metrics(metric_accuracy);
                    const double best = metric_accuracy.at(ranked.front());
                    for (auto kk : fusion_ks) {
                        std::vector<DistanceMatrix> inputs;
                        std::vector<int> numbers;
                        for (std::size_t i = 0; i < kk; ++i) {
                            inputs.push_back(normalized.at(ranked[i]));
                            numbers.push_back(metric_number(ranked[i]));
                        }
                        for (std::size_t i = 0; i < kk; ++i) {
                            FusionRow& row =
                                report.fusion[fusion_slot.at({p, r, f, kk, "Metric-" + std::to_string(i + 1)})];
                            row.accuracy.push_back(metric_accuracy.at(ranked[i]));
                            row.metrics.push_back({numbers[i]});
                            row.at_least_best.push_back(metric_accuracy.at(ranked[i]) >= best);
                        }
                        for (const auto& spec : cfg.fusion) {
                            if (spec.k != kk) continue;
                            const std::string row_name = spec.scheme.describe();
                            std::vector<int> predicted;
                            time_section(report.timings, fsec + "/best" + std::to_string(kk) + "/" + row_name, [&] {
                                predicted = labels_of(nn_classify(fuse(inputs, spec.scheme), td.y_train));
                            });
                            const double acc = accuracy(predicted, td.y_test);
                            FusionRow& row = report.fusion[fusion_slot.at({p, r, f, kk, row_name})];
                            row.accuracy.push_back(acc);
                            row.metrics.push_back(numbers);
                            row.at_least_best.push_back(acc >= best);
                        }
                    }
                }
                report.provenance.push_back(std::move(info));
            }
        }
    }
    return report;
}

ExperimentReport run_fusion_study(const Dataset& data, const ExperimentConfig& cfg) {
    require(!cfg.fusion.empty(), ErrorKind::Config, "fusion study needs at least one fusion spec");
    ExperimentReport report = run_experiment(data, cfg);
    report.kind = "fusion-study";
    return report;
}

}  // namespace facebench
