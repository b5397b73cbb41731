// Command-line front end. Talks to the library only through the C interface.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "facebench/facebench.h"

namespace {

// Module errors map onto process exit codes; parse errors are configuration
// errors too.
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitOther = 1;

struct Failure {
    fb_status status;
};

int exit_code_for(fb_status s) {
    switch (s) {
        case FB_OK: return 0;
        case FB_ERR_CONFIG: return kExitConfig;
        case FB_ERR_DATA: return kExitData;
        default: return kExitOther;
    }
}

void check(fb_status s) {
    if (s != FB_OK) throw Failure{s};
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<fb_dataset, Deleter<fb_dataset, fb_dataset_free>>;
using Features = std::unique_ptr<fb_features, Deleter<fb_features, fb_features_free>>;
using Matrix = std::unique_ptr<fb_matrix, Deleter<fb_matrix, fb_matrix_free>>;
using Predictions = std::unique_ptr<fb_predictions, Deleter<fb_predictions, fb_predictions_free>>;
using Report = std::unique_ptr<fb_report, Deleter<fb_report, fb_report_free>>;

struct Globals {
    unsigned threads = 1;
    bool verbose = false;
};

struct DataSource {
    std::string manifest;
    std::string synthetic;

    void add_to(CLI::App* cmd) {
        auto* m = cmd->add_option("--manifest", manifest, "Image manifest CSV")->check(CLI::ExistingFile);
        auto* s = cmd->add_option("--synthetic", synthetic,
                                  "Synthetic data: 'default' or key=value list "
                                  "(n_female, n_male, images, height, width, noise, seed)");
        m->excludes(s);
    }

    [[nodiscard]] Dataset load() const {
        fb_dataset* raw = nullptr;
        if (!synthetic.empty()) {
            fb_synthetic_spec spec;
            check(fb_synthetic_spec_parse(synthetic.c_str(), &spec));
            check(fb_dataset_generate(&spec, &raw));
        } else {
            check(fb_dataset_load(manifest.c_str(), &raw));
        }
        return Dataset(raw);
    }
};

const char* c_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

std::string ratio_validator(std::string& value) {
    // Accepts one ratio or a comma-separated pair.
    std::string item;
    for (std::size_t i = 0; i <= value.size(); ++i) {
        if (i == value.size() || value[i] == ',') {
            if (item != "9:1" && item != "5:5") return "ratio must be 9:1 or 5:5";
            item.clear();
        } else if (value[i] != ' ') {
            item += value[i];
        }
    }
    return {};
}

void ensure_parent(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

struct ExperimentOptions {
    DataSource source;
    std::string protocol = "e1";
    std::string ratio;
    std::string features = "pca,lda";
    std::string classifiers;
    std::string best_k;
    std::string schemes;
    std::string weights;
    std::uint64_t seed = 0;
    std::size_t trials = 1;
    std::size_t components = 100;
    std::size_t custom_female = 0;
    std::size_t custom_male = 0;
    double C = 10.0;
    double gamma = 0.0;
    bool tune = false;
    std::size_t folds = 5;
    double metric_ridge = 1e-6;
    bool per_row = false;
    std::string out;

    void add_to(CLI::App* cmd, bool fusion_study) {
        source.add_to(cmd);
        cmd->add_option("--protocol", protocol, "e1, e2, e3, e4 or custom (comma-separated list allowed)")
            ->capture_default_str();
        cmd->add_option("--ratio", ratio, "9:1 or 5:5 (comma-separated for both); default per protocol")
            ->check(CLI::Validator(ratio_validator, "RATIO"));
        cmd->add_option("--features", features, "pca, lda or both")->capture_default_str();
        cmd->add_option("--classifiers", classifiers,
                        fusion_study ? "Metrics to rank (default: all eight)"
                                     : "svm and/or metrics euc,cb,cos,mc,bc,can,corr,cheb (default: all)");
        cmd->add_option("--seed", seed, "Base seed; trial t uses seed + t")->capture_default_str();
        cmd->add_option("--trials", trials, "Repetitions with consecutive seeds")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--components", components, "Feature components (capped by the data)")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--custom-female", custom_female, "Female subjects for --protocol custom");
        cmd->add_option("--custom-male", custom_male, "Male subjects for --protocol custom");
        cmd->add_option("--C", C, "SVM box constraint")->check(CLI::PositiveNumber)->capture_default_str();
        cmd->add_option("--gamma", gamma, "SVM RBF gamma (default 1 / n_features)")->check(CLI::PositiveNumber);
        cmd->add_flag("--tune", tune, "Grid-search SVM C and gamma by cross-validation on the training set");
        cmd->add_option("--folds", folds, "Cross-validation folds for --tune")
            ->check(CLI::Range(2, 100))
            ->capture_default_str();
        cmd->add_option("--metric-ridge", metric_ridge, "Mahalanobis covariance ridge (relative to mean variance)")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        if (fusion_study) best_k = "2,3,4";
        auto* k = cmd->add_option("--best-k", best_k, "Fuse the best k metrics, e.g. 2,3,4");
        if (fusion_study) k->capture_default_str();
        cmd->add_option("--schemes", schemes, "Fusion schemes: avg,min,med,wmp,weighted (default: all)");
        cmd->add_option("--weights", weights,
                        "Weight tuples for the weighted scheme, ';'-separated (default: built-in tuples)");
        cmd->add_flag("--per-row", per_row, "Min-max normalize each probe row instead of the whole matrix");
        cmd->add_option("--out", out, "Report path (.csv or .json)")->required();
    }

    [[nodiscard]] fb_experiment_spec spec(unsigned threads) const {
        fb_experiment_spec s;
        fb_experiment_spec_init(&s);
        s.protocols = protocol.c_str();
        s.ratios = c_or_null(ratio);
        s.features = features.c_str();
        s.classifiers = c_or_null(classifiers);
        s.best_k = c_or_null(best_k);
        s.schemes = c_or_null(schemes);
        s.weights = c_or_null(weights);
        s.seed = seed;
        s.trials = trials;
        s.n_components = components;
        s.custom_female = custom_female;
        s.custom_male = custom_male;
        s.svm_C = C;
        s.svm_gamma = gamma;
        s.svm_tune = tune ? 1 : 0;
        s.svm_folds = folds;
        s.metric_ridge = metric_ridge;
        s.per_row_normalization = per_row ? 1 : 0;
        s.threads = threads;
        return s;
    }
};

void print_report_summary(const fb_report* report, const std::string& out, bool verbose) {
    if (verbose) {
        for (std::size_t i = 0; i < fb_report_cell_count(report); ++i) {
            fb_cell_info c;
            check(fb_report_cell(report, i, &c));
            std::printf("%s %s %s %-4s %6.2f%%", c.protocol, c.ratio, c.feature, c.classifier, c.mean_accuracy);
            if (c.trials > 1) std::printf(" (sd %.2f, %zu trials)", c.sd_accuracy, c.trials);
            std::printf("\n");
        }
        for (std::size_t i = 0; i < fb_report_fusion_count(report); ++i) {
            fb_fusion_info f;
            check(fb_report_fusion(report, i, &f));
            std::printf("%s %s %s best%zu %s %6.2f%%%s\n", f.protocol, f.ratio, f.feature, f.k, f.row,
                        f.mean_accuracy, !f.constituent && f.at_least_best ? " *" : "");
        }
    }
    for (std::size_t i = 0; i < fb_report_warning_count(report); ++i) {
        std::fprintf(stderr, "warning: %s\n", fb_report_warning(report, i));
    }
    std::printf("wrote %s (%zu cells, %zu fusion rows)\n", out.c_str(), fb_report_cell_count(report),
                fb_report_fusion_count(report));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"facebench: face identification with Eigenfaces/Fisherfaces, distance metrics, SVM and fusion"};
    app.set_version_flag("--version", std::string("facebench ") + fb_version() + " (" + fb_build_hash() + ")");
    app.set_config("--config", "", "TOML config file; explicit flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    Globals g;
    app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::Range(1u, 1024u))
        ->capture_default_str();
    app.add_flag("-v,--verbose", g.verbose, "Print one line per report cell");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset (PGM images + manifest.csv)");
    std::string synth_spec = "default";
    std::string synth_dir;
    synth->add_option("--synthetic", synth_spec, "'default' or key=value list")->capture_default_str();
    synth->add_option("--out-dir", synth_dir, "Output directory")->required();

    // preprocess
    auto* pre = app.add_subcommand("preprocess", "Align, crop to 70x60 and histogram-equalize a dataset");
    DataSource pre_source;
    std::string pre_dir;
    pre_source.add_to(pre);
    pre->add_option("--out-dir", pre_dir, "Output directory")->required();

    // features
    auto* feat = app.add_subcommand("features", "Fit PCA or LDA on a train split and project every image");
    DataSource feat_source;
    std::string feat_kind = "pca";
    std::string feat_ratio = "9:1";
    std::size_t feat_components = 100;
    std::size_t feat_images = 10;
    std::uint64_t feat_seed = 0;
    std::string feat_out, feat_model;
    feat_source.add_to(feat);
    feat->add_option("--kind", feat_kind, "pca or lda")
        ->check(CLI::IsMember({"pca", "lda"}, CLI::ignore_case))
        ->capture_default_str();
    feat->add_option("--ratio", feat_ratio, "9:1 or 5:5")
        ->check(CLI::Validator(ratio_validator, "RATIO"))
        ->capture_default_str();
    feat->add_option("--components", feat_components, "Number of components")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    feat->add_option("--images-per-subject", feat_images, "Images drawn per subject (0 keeps all)")
        ->capture_default_str();
    feat->add_option("--seed", feat_seed, "Seed for sampling and splitting")->capture_default_str();
    feat->add_option("--out", feat_out, "Features CSV")->required();
    feat->add_option("--model-out", feat_model, "Also write the binary projection model");

    // classify
    auto* cls = app.add_subcommand("classify", "Classify the test rows of a features CSV");
    std::string cls_features, cls_method, cls_out, cls_matrix;
    fb_classify_spec cls_spec;
    fb_classify_spec_init(&cls_spec);
    bool cls_tune = false;
    cls->add_option("--features", cls_features, "Features CSV")->required()->check(CLI::ExistingFile);
    cls->add_option("--method", cls_method, "nn:<metric> (euc, cb, cos, mc, bc, can, corr, cheb) or svm")
        ->required();
    cls->add_option("--C", cls_spec.C, "SVM box constraint")->check(CLI::PositiveNumber)->capture_default_str();
    cls->add_option("--gamma", cls_spec.gamma, "SVM RBF gamma (default 1 / n_features)")->check(CLI::PositiveNumber);
    cls->add_flag("--tune", cls_tune, "Grid-search C and gamma");
    cls->add_option("--folds", cls_spec.folds, "Cross-validation folds for --tune")
        ->check(CLI::Range(2, 100))
        ->capture_default_str();
    cls->add_option("--seed", cls_spec.seed, "Seed for cross-validation folds")->capture_default_str();
    cls->add_option("--metric-ridge", cls_spec.metric_ridge, "Mahalanobis covariance ridge")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cls->add_option("--out", cls_out, "Predictions CSV")->required();
    cls->add_option("--matrix-out", cls_matrix, "Also write the distance matrix (nn only)");

    // fuse
    auto* fuse = app.add_subcommand("fuse", "Normalize and combine distance matrices, then classify");
    std::vector<std::string> fuse_inputs;
    std::string fuse_scheme = "avg";
    std::vector<double> fuse_weights;
    bool fuse_per_row = false;
    std::string fuse_out, fuse_predictions;
    fuse->add_option("--matrices", fuse_inputs, "Distance matrix CSVs")
        ->required()
        ->delimiter(',')
        ->check(CLI::ExistingFile);
    fuse->add_option("--scheme", fuse_scheme, "avg, min, med, wmp or weighted")
        ->check(CLI::IsMember({"avg", "min", "med", "wmp", "weighted"}, CLI::ignore_case))
        ->capture_default_str();
    fuse->add_option("--weights", fuse_weights, "Weights for the weighted scheme, e.g. 0.8,0.1,0.1")->delimiter(',');
    fuse->add_flag("--per-row", fuse_per_row, "Normalize each probe row instead of the whole matrix");
    fuse->add_option("--out", fuse_out, "Fused distance matrix CSV")->required();
    fuse->add_option("--predictions-out", fuse_predictions, "Also write nearest-neighbour predictions");

    // experiment / fusion-study
    auto* exp = app.add_subcommand("experiment", "Run a sampling protocol with every feature and classifier");
    ExperimentOptions exp_opts;
    exp_opts.add_to(exp, false);
    auto* study = app.add_subcommand("fusion-study", "Fuse the best-k metrics under every scheme");
    ExperimentOptions study_opts;
    study_opts.add_to(study, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        const auto need_source = [](const DataSource& s) {
            if (s.manifest.empty() && s.synthetic.empty()) {
                std::fprintf(stderr, "error: one of --manifest or --synthetic is required\n");
                throw Failure{FB_ERR_CONFIG};
            }
        };

        if (*synth) {
            fb_synthetic_spec spec;
            check(fb_synthetic_spec_parse(synth_spec.c_str(), &spec));
            fb_dataset* raw = nullptr;
            check(fb_dataset_generate(&spec, &raw));
            Dataset data(raw);
            check(fb_dataset_save(data.get(), synth_dir.c_str(), nullptr));
            std::printf("wrote %zu images of %zu subjects to %s\n", fb_dataset_size(data.get()),
                        fb_dataset_subject_count(data.get()), synth_dir.c_str());
        } else if (*pre) {
            need_source(pre_source);
            Dataset data = pre_source.load();
            check(fb_dataset_preprocess(data.get(), pre_dir.c_str(), g.threads, nullptr));
            std::printf("preprocessed %zu images into %s\n", fb_dataset_size(data.get()), pre_dir.c_str());
        } else if (*feat) {
            need_source(feat_source);
            Dataset data = feat_source.load();
            fb_features_spec spec;
            fb_features_spec_init(&spec);
            spec.kind = (feat_kind == "lda" || feat_kind == "LDA") ? FB_FEATURE_LDA : FB_FEATURE_PCA;
            spec.ratio = feat_ratio == "5:5" ? FB_RATIO_5_5 : FB_RATIO_9_1;
            spec.n_components = feat_components;
            spec.images_per_subject = feat_images;
            spec.seed = feat_seed;
            spec.threads = g.threads;
            fb_features* raw = nullptr;
            check(fb_features_compute(data.get(), &spec, &raw));
            Features f(raw);
            ensure_parent(feat_out);
            check(fb_features_save_csv(f.get(), feat_out.c_str()));
            if (!feat_model.empty()) {
                ensure_parent(feat_model);
                check(fb_features_save_model(f.get(), feat_model.c_str()));
            }
            std::printf("wrote %zu x %zu features to %s\n", fb_features_rows(f.get()), fb_features_cols(f.get()),
                        feat_out.c_str());
        } else if (*cls) {
            check(fb_classify_spec_set_method(&cls_spec, cls_method.c_str()));
            cls_spec.tune = cls_tune ? 1 : 0;
            cls_spec.threads = g.threads;
            fb_features* rawf = nullptr;
            check(fb_features_load_csv(cls_features.c_str(), &rawf));
            Features f(rawf);
            fb_predictions* rawp = nullptr;
            fb_matrix* rawm = nullptr;
            check(fb_classify(f.get(), &cls_spec, &rawp, cls_matrix.empty() ? nullptr : &rawm));
            Predictions p(rawp);
            Matrix m(rawm);
            ensure_parent(cls_out);
            check(fb_predictions_save_csv(p.get(), cls_out.c_str()));
            if (m) {
                ensure_parent(cls_matrix);
                check(fb_matrix_save_csv(m.get(), cls_matrix.c_str()));
            }
            std::printf("accuracy %.2f%% over %zu probes\n", fb_predictions_accuracy(p.get()),
                        fb_predictions_count(p.get()));
        } else if (*fuse) {
            fb_fusion_kind kind;
            check(fb_fusion_kind_parse(fuse_scheme.c_str(), &kind));
            std::vector<Matrix> owned;
            std::vector<const fb_matrix*> inputs;
            for (const auto& path : fuse_inputs) {
                fb_matrix* raw = nullptr;
                check(fb_matrix_load_csv(path.c_str(), &raw));
                owned.emplace_back(raw);
                inputs.push_back(raw);
            }
            fb_matrix* rawf = nullptr;
            check(fb_matrix_fuse(inputs.data(), inputs.size(), kind, fuse_weights.empty() ? nullptr : fuse_weights.data(),
                                 fuse_weights.size(), fuse_per_row ? 1 : 0, &rawf));
            Matrix fused(rawf);
            ensure_parent(fuse_out);
            check(fb_matrix_save_csv(fused.get(), fuse_out.c_str()));
            fb_predictions* rawp = nullptr;
            check(fb_matrix_classify(fused.get(), &rawp));
            Predictions p(rawp);
            if (!fuse_predictions.empty()) {
                ensure_parent(fuse_predictions);
                check(fb_predictions_save_csv(p.get(), fuse_predictions.c_str()));
            }
            std::printf("fused %zu matrices; accuracy %.2f%% over %zu probes\n", inputs.size(),
                        fb_predictions_accuracy(p.get()), fb_predictions_count(p.get()));
        } else if (*exp || *study) {
            const bool is_study = study->parsed() > 0;
            const ExperimentOptions& o = is_study ? study_opts : exp_opts;
            need_source(o.source);
            const fb_experiment_spec spec = o.spec(g.threads);
            // Reject bad options before generating or loading any data.
            check(fb_experiment_spec_check(&spec));
            Dataset data = o.source.load();
            fb_report* raw = nullptr;
            check(is_study ? fb_fusion_study_run(data.get(), &spec, &raw) : fb_experiment_run(data.get(), &spec, &raw));
            Report report(raw);
            ensure_parent(o.out);
            check(fb_report_save(report.get(), o.out.c_str()));
            print_report_summary(report.get(), o.out, g.verbose);
        }
    } catch (const Failure& f) {
        const char* msg = fb_last_error();
        if (msg != nullptr && *msg != '\0') std::fprintf(stderr, "error: %s\n", msg);
        return exit_code_for(f.status);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitOther;
    }
    return 0;
}
