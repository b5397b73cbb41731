#include "facebench/facebench.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <new>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "facebench/classify.hpp"
#include "facebench/csv.hpp"
#include "facebench/dataset.hpp"
#include "facebench/error.hpp"
#include "facebench/experiments.hpp"
#include "facebench/features.hpp"
#include "facebench/fusion.hpp"
#include "facebench/metrics.hpp"
#include "facebench/rng.hpp"

using namespace facebench;

struct fb_dataset {
    Dataset data;
};

struct fb_features {
    std::vector<std::string> image_ids;
    std::vector<std::string> subjects;
    std::vector<bool> is_train;
    Matrix values;
    std::optional<FeatureModel> model;
};

struct fb_matrix {
    DistanceMatrix m;
};

struct fb_predictions {
    struct Row {
        std::string probe_id;
        std::string predicted;
        std::string truth;
    };
    std::vector<Row> rows;
};

struct fb_report {
    ExperimentReport report;
};

namespace {

thread_local std::string g_last_error;

fb_status status_of(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return FB_ERR_CONFIG;
        case ErrorKind::Data: return FB_ERR_DATA;
        case ErrorKind::Io: return FB_ERR_IO;
        case ErrorKind::Numeric: return FB_ERR_NUMERIC;
    }
    return FB_ERR_INTERNAL;
}

template <class F>
fb_status guarded(F&& body) {
    try {
        g_last_error.clear();
        body();
        return FB_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return FB_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return FB_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return FB_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    require(p != nullptr, ErrorKind::Config, std::string(what) + " must not be NULL");
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const char* text, char sep = ',') {
    std::vector<std::string> out;
    if (text == nullptr) return out;
    std::string_view s(text);
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto end = s.find(sep, start);
        const auto item = trim(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
        if (!item.empty()) out.push_back(item);
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

double parse_number(const std::string& text, const std::string& what) {
    try {
        return csv::parse_double(text, what);
    } catch (const Error&) {
        fail(ErrorKind::Config, what + ": '" + text + "' is not a number");
    }
}

std::size_t parse_count(const std::string& text, const std::string& what) {
    const double v = parse_number(text, what);
    require(v >= 0 && v == static_cast<double>(static_cast<std::size_t>(v)), ErrorKind::Config,
            what + ": '" + text + "' is not a non-negative integer");
    return static_cast<std::size_t>(v);
}

SplitRatio parse_ratio_or_fail(const std::string& text) {
    const auto r = parse_ratio(text);
    require(r.has_value(), ErrorKind::Config, "ratio must be 9:1 or 5:5");
    return *r;
}

std::string subject_of_id(const std::string& id) {
    const auto pos = id.rfind('#');
    return pos == std::string::npos ? id : id.substr(0, pos);
}

char* dup_string(const std::string& s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

ExperimentConfig build_config(const fb_experiment_spec& spec, bool fusion_study) {
    ExperimentConfig cfg;
    cfg.protocols.clear();
    for (const auto& p : split_list(spec.protocols)) {
        const auto group = parse_protocol_group(p);
        require(group.has_value(), ErrorKind::Config, "unknown protocol '" + p + "' (expected e1, e2, e3, e4 or custom)");
        cfg.protocols.insert(cfg.protocols.end(), group->begin(), group->end());
    }
    for (const auto& r : split_list(spec.ratios)) cfg.ratios.push_back(parse_ratio_or_fail(r));
    const auto features = split_list(spec.features);
    if (!features.empty()) {
        cfg.features.clear();
        for (const auto& f : features) {
            const auto k = parse_feature(f);
            require(k.has_value(), ErrorKind::Config, "unknown feature kind '" + f + "' (expected pca or lda)");
            cfg.features.push_back(*k);
        }
    }
    const auto classifiers = split_list(spec.classifiers);
    if (!classifiers.empty()) {
        cfg.classifiers.clear();
        for (const auto& c : classifiers) {
            const auto k = parse_classifier(c);
            require(k.has_value(), ErrorKind::Config, "unknown classifier '" + c + "'");
            cfg.classifiers.push_back(*k);
        }
    } else if (fusion_study) {
        cfg.classifiers = metric_classifiers();
    }

    std::vector<std::size_t> ks;
    for (const auto& k : split_list(spec.best_k)) ks.push_back(parse_count(k, "best-k"));
    if (!ks.empty()) {
        auto scheme_names = split_list(spec.schemes);
        if (scheme_names.empty()) scheme_names = {"avg", "min", "med", "wmp", "weighted"};
        std::vector<std::vector<double>> tuples;
        for (const auto& t : split_list(spec.weights, ';')) {
            std::vector<double> w;
            for (const auto& x : split_list(t.c_str())) w.push_back(parse_number(x, "weights"));
            tuples.push_back(std::move(w));
        }
        for (const auto& name : scheme_names) {
            require(parse_fusion(name).has_value(), ErrorKind::Config,
                    "unknown fusion scheme '" + name + "' (expected avg, min, med, wmp or weighted)");
        }
        for (auto k : ks) {
            for (const auto& name : scheme_names) {
                const FusionKind kind = *parse_fusion(name);
                if (kind != FusionKind::WEIGHTED) {
                    cfg.fusion.push_back({k, FusionScheme{kind, {}}});
                    continue;
                }
                const auto source = tuples.empty() ? default_weight_tuples(k) : tuples;
                for (const auto& w : source) {
                    if (w.size() == k) cfg.fusion.push_back({k, FusionScheme{kind, w}});
                }
            }
        }
        for (const auto& w : tuples) {
            require(std::find(ks.begin(), ks.end(), w.size()) != ks.end(), ErrorKind::Config,
                    "weight tuple of length " + std::to_string(w.size()) + " matches no best-k value");
        }
    }
    require(!fusion_study || !cfg.fusion.empty(), ErrorKind::Config, "fusion study needs --best-k");

    cfg.seed = spec.seed;
    cfg.trials = spec.trials;
    cfg.n_components = spec.n_components;
    cfg.custom = {spec.custom_female, spec.custom_male};
    cfg.svm.C = spec.svm_C;
    if (spec.svm_gamma > 0.0) cfg.svm.gamma = spec.svm_gamma;
    cfg.svm.tune = spec.svm_tune != 0;
    cfg.svm.folds = spec.svm_folds;
    cfg.metric_ridge = spec.metric_ridge;
    cfg.normalization = spec.per_row_normalization != 0 ? Normalization::PerRow : Normalization::Global;
    cfg.threads = spec.threads;
    cfg.validate();
    return cfg;
}

fb_status run_report(const fb_dataset* data, const fb_experiment_spec* spec, fb_report** out, bool fusion_study) {
    return guarded([&] {
        need(data, "dataset");
        need(spec, "spec");
        need(out, "out");
        *out = nullptr;
        const ExperimentConfig cfg = build_config(*spec, fusion_study);
        auto r = std::make_unique<fb_report>();
        r->report = fusion_study ? run_fusion_study(data->data, cfg) : run_experiment(data->data, cfg);
        *out = r.release();
    });
}

}  // namespace

extern "C" {

const char* fb_version(void) { return FACEBENCH_VERSION; }
const char* fb_build_hash(void) { return FACEBENCH_BUILD_HASH; }
const char* fb_last_error(void) { return g_last_error.c_str(); }
void fb_string_free(char* s) { std::free(s); }

void fb_synthetic_spec_init(fb_synthetic_spec* spec) {
    if (spec == nullptr) return;
    const SyntheticSpec d;
    *spec = {d.n_female, d.n_male, d.images_per_subject, d.height, d.width, d.intra_noise, d.seed};
}

fb_status fb_synthetic_spec_parse(const char* text, fb_synthetic_spec* spec) {
    return guarded([&] {
        need(text, "text");
        need(spec, "spec");
        fb_synthetic_spec s;
        fb_synthetic_spec_init(&s);
        if (trim(text) != "default") {
            for (const auto& item : split_list(text)) {
                const auto eq = item.find('=');
                require(eq != std::string::npos, ErrorKind::Config,
                        "synthetic spec item '" + item + "' is not key=value");
                const std::string key = trim(item.substr(0, eq));
                const std::string value = trim(item.substr(eq + 1));
                const std::string what = "synthetic " + key;
                if (key == "n_female") s.n_female = parse_count(value, what);
                else if (key == "n_male") s.n_male = parse_count(value, what);
                else if (key == "images") s.images_per_subject = parse_count(value, what);
                else if (key == "height") s.height = parse_count(value, what);
                else if (key == "width") s.width = parse_count(value, what);
                else if (key == "noise") s.intra_noise = parse_number(value, what);
                else if (key == "seed") s.seed = parse_count(value, what);
                else fail(ErrorKind::Config, "unknown synthetic spec key '" + key + "'");
            }
        }
        *spec = s;
    });
}

fb_status fb_dataset_generate(const fb_synthetic_spec* spec, fb_dataset** out) {
    return guarded([&] {
        need(spec, "spec");
        need(out, "out");
        *out = nullptr;
        SyntheticSpec s;
        s.n_female = spec->n_female;
        s.n_male = spec->n_male;
        s.images_per_subject = spec->images_per_subject;
        s.height = spec->height;
        s.width = spec->width;
        s.intra_noise = spec->intra_noise;
        s.seed = spec->seed;
        *out = new fb_dataset{generate_synthetic(s)};
    });
}

fb_status fb_dataset_load(const char* manifest_path, fb_dataset** out) {
    return guarded([&] {
        need(manifest_path, "manifest path");
        need(out, "out");
        *out = nullptr;
        *out = new fb_dataset{load_manifest(manifest_path)};
    });
}

fb_status fb_dataset_save(const fb_dataset* data, const char* dir, fb_dataset** out) {
    return guarded([&] {
        need(data, "dataset");
        need(dir, "dir");
        Dataset saved = save_dataset(data->data, dir);
        if (out != nullptr) *out = new fb_dataset{std::move(saved)};
    });
}

fb_status fb_dataset_preprocess(const fb_dataset* data, const char* dir, unsigned threads, fb_dataset** out) {
    return guarded([&] {
        need(data, "dataset");
        need(dir, "dir");
        Dataset processed = preprocess_dataset(data->data, dir, threads);
        if (out != nullptr) *out = new fb_dataset{std::move(processed)};
    });
}

size_t fb_dataset_size(const fb_dataset* data) { return data == nullptr ? 0 : data->data.size(); }
size_t fb_dataset_subject_count(const fb_dataset* data) { return data == nullptr ? 0 : data->data.subject_count(); }

size_t fb_dataset_female_subjects(const fb_dataset* data) {
    if (data == nullptr) return 0;
    std::size_t n = 0;
    for (const auto& s : data->data.subjects()) n += data->data.gender_of(s) == Gender::Female ? 1 : 0;
    return n;
}

void fb_dataset_free(fb_dataset* data) { delete data; }

void fb_features_spec_init(fb_features_spec* spec) {
    if (spec == nullptr) return;
    *spec = {FB_FEATURE_PCA, kDefaultComponents, FB_RATIO_9_1, 10, 0, 1};
}

fb_status fb_features_compute(const fb_dataset* data, const fb_features_spec* spec, fb_features** out) {
    return guarded([&] {
        need(data, "dataset");
        need(spec, "spec");
        need(out, "out");
        *out = nullptr;
        require(spec->kind == FB_FEATURE_PCA || spec->kind == FB_FEATURE_LDA, ErrorKind::Config, "unknown feature kind");
        require(spec->ratio == FB_RATIO_9_1 || spec->ratio == FB_RATIO_5_5, ErrorKind::Config,
                "ratio must be 9:1 or 5:5");
        require(spec->n_components >= 1, ErrorKind::Config, "n_components must be >= 1");
        const SplitRatio ratio = spec->ratio == FB_RATIO_9_1 ? SplitRatio::R9_1 : SplitRatio::R5_5;

        Dataset d = data->data;
        if (spec->images_per_subject > 0) {
            d = filter_min_images(d, spec->images_per_subject);
            SamplingSpec s;
            for (const auto& subject : d.subjects()) {
                (d.gender_of(subject) == Gender::Female ? s.n_female : s.n_male) += 1;
            }
            s.images_per_subject = spec->images_per_subject;
            s.seed = derive_seed(spec->seed, "features:sample");
            d = sample_subjects(d, s);
        }
        const Split split = split_train_test(d, ratio, derive_seed(spec->seed, "features:split"));

        std::map<std::string, int, std::less<>> code;
        std::vector<int> labels;
        for (const auto& r : split.train) {
            labels.push_back(code.emplace(r.subject_id, static_cast<int>(code.size())).first->second);
        }
        const Matrix X_train = face_matrix(split.train, spec->threads);
        const Matrix X_test = face_matrix(split.test, spec->threads);
        const PrincipalAxes axes = principal_axes(X_train);
        const FeatureKind kind = spec->kind == FB_FEATURE_PCA ? FeatureKind::PCA : FeatureKind::LDA;
        FittedFeatures fitted = fit_features(kind, X_train, labels, spec->n_components, axes);

        auto f = std::make_unique<fb_features>();
        const Matrix P_train = project(fitted.model, X_train);
        const Matrix P_test = project(fitted.model, X_test);
        f->values.resize(P_train.rows() + P_test.rows(), P_train.cols());
        f->values << P_train, P_test;
        for (const auto& r : split.train) {
            f->image_ids.push_back(r.image_id);
            f->subjects.push_back(r.subject_id);
            f->is_train.push_back(true);
        }
        for (const auto& r : split.test) {
            f->image_ids.push_back(r.image_id);
            f->subjects.push_back(r.subject_id);
            f->is_train.push_back(false);
        }
        f->model = std::move(fitted.model);
        *out = f.release();
    });
}

fb_status fb_features_save_csv(const fb_features* f, const char* path) {
    return guarded([&] {
        need(f, "features");
        need(path, "path");
        std::ofstream out(path);
        require(static_cast<bool>(out), ErrorKind::Io, std::string("cannot write ") + path);
        out << "image_id,subject_id,split";
        for (Eigen::Index c = 0; c < f->values.cols(); ++c) out << ",f" << c;
        out << '\n';
        for (Eigen::Index r = 0; r < f->values.rows(); ++r) {
            const auto i = static_cast<std::size_t>(r);
            out << csv::escape(f->image_ids[i]) << ',' << csv::escape(f->subjects[i]) << ','
                << (f->is_train[i] ? "train" : "test");
            for (Eigen::Index c = 0; c < f->values.cols(); ++c) out << ',' << csv::format_double(f->values(r, c));
            out << '\n';
        }
        require(static_cast<bool>(out), ErrorKind::Io, std::string("write failed for ") + path);
    });
}

fb_status fb_features_load_csv(const char* path, fb_features** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = nullptr;
        std::ifstream in(path);
        require(static_cast<bool>(in), ErrorKind::Data, std::string("cannot open features file ") + path);
        std::string line;
        require(static_cast<bool>(std::getline(in, line)), ErrorKind::Data, std::string(path) + " is empty");
        const auto header = csv::split_line(line);
        require(header.size() >= 4 && header[0] == "image_id" && header[1] == "subject_id" && header[2] == "split",
                ErrorKind::Data, std::string(path) + ": header must be image_id,subject_id,split,f0,...");
        const std::size_t d = header.size() - 3;
        auto f = std::make_unique<fb_features>();
        std::vector<double> flat;
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line == "\r") continue;
            const auto fields = csv::split_line(line);
            const std::string where = std::string(path) + " line " + std::to_string(line_no);
            require(fields.size() == header.size(), ErrorKind::Data, where + ": wrong column count");
            require(fields[2] == "train" || fields[2] == "test", ErrorKind::Data,
                    where + ": split must be train or test");
            f->image_ids.push_back(fields[0]);
            f->subjects.push_back(fields[1]);
            f->is_train.push_back(fields[2] == "train");
            for (std::size_t c = 3; c < fields.size(); ++c) flat.push_back(csv::parse_double(fields[c], where));
        }
        const auto n = static_cast<Eigen::Index>(f->image_ids.size());
        f->values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            flat.data(), n, static_cast<Eigen::Index>(d));
        *out = f.release();
    });
}

fb_status fb_features_save_model(const fb_features* f, const char* path) {
    return guarded([&] {
        need(f, "features");
        need(path, "path");
        require(f->model.has_value(), ErrorKind::Config, "these features carry no fitted model");
        save_model(*f->model, path);
    });
}

size_t fb_features_rows(const fb_features* f) { return f == nullptr ? 0 : static_cast<size_t>(f->values.rows()); }
size_t fb_features_cols(const fb_features* f) { return f == nullptr ? 0 : static_cast<size_t>(f->values.cols()); }
void fb_features_free(fb_features* f) { delete f; }

void fb_classify_spec_init(fb_classify_spec* spec) {
    if (spec == nullptr) return;
    *spec = {FB_METHOD_NN, 3, 10.0, 0.0, 0, 5, 0, 1e-6, 1};
}

fb_status fb_classify_spec_set_method(fb_classify_spec* spec, const char* text) {
    return guarded([&] {
        need(spec, "spec");
        need(text, "method");
        const std::string t = trim(text);
        if (t == "svm") {
            spec->method = FB_METHOD_SVM;
            return;
        }
        require(t.rfind("nn:", 0) == 0, ErrorKind::Config, "method must be nn:<metric> or svm");
        const auto m = parse_metric(t.substr(3));
        require(m.has_value(), ErrorKind::Config, "unknown metric '" + t.substr(3) + "'");
        spec->method = FB_METHOD_NN;
        spec->metric = metric_number(*m);
    });
}

fb_status fb_classify(const fb_features* f, const fb_classify_spec* spec, fb_predictions** out,
                      fb_matrix** distances) {
    return guarded([&] {
        need(f, "features");
        need(spec, "spec");
        need(out, "out");
        *out = nullptr;
        if (distances != nullptr) *distances = nullptr;

        std::vector<Eigen::Index> train_rows, test_rows;
        for (std::size_t i = 0; i < f->is_train.size(); ++i) {
            (f->is_train[i] ? train_rows : test_rows).push_back(static_cast<Eigen::Index>(i));
        }
        require(!train_rows.empty(), ErrorKind::Data, "features contain no train rows");
        require(!test_rows.empty(), ErrorKind::Data, "features contain no test rows");
        const Matrix train = f->values(train_rows, Eigen::all);
        const Matrix test = f->values(test_rows, Eigen::all);
        std::map<std::string, int, std::less<>> code;
        std::vector<std::string> names;
        std::vector<int> labels;
        for (auto r : train_rows) {
            const auto& s = f->subjects[static_cast<std::size_t>(r)];
            auto [it, inserted] = code.emplace(s, static_cast<int>(names.size()));
            if (inserted) names.push_back(s);
            labels.push_back(it->second);
        }

        std::vector<Prediction> preds;
        if (spec->method == FB_METHOD_SVM) {
            SvmParams params;
            params.C = spec->C;
            params.gamma = spec->gamma > 0.0 ? spec->gamma : 1.0 / static_cast<double>(train.cols());
            params.threads = spec->threads;
            if (spec->tune != 0) {
                const auto grid = grid_search_svm(train, labels, default_c_grid(), default_gamma_grid(), spec->folds,
                                                  spec->seed, params);
                params.C = grid.C;
                params.gamma = grid.gamma;
            }
            preds = svm_predict(svm_train(train, labels, params), test);
        } else {
            require(spec->method == FB_METHOD_NN, ErrorKind::Config, "unknown method");
            require(spec->metric >= 1 && spec->metric <= 8, ErrorKind::Config, "metric must be 1..8");
            const auto kind = static_cast<MetricKind>(spec->metric);
            MetricContext ctx;
            if (kind == MetricKind::MC) ctx = fit_metric_context(train, spec->metric_ridge);
            DistanceMatrix D = pairwise(kind, train, test, ctx, spec->threads);
            for (auto r : test_rows) D.probe_ids.push_back(f->image_ids[static_cast<std::size_t>(r)]);
            for (auto r : train_rows) D.gallery_ids.push_back(f->image_ids[static_cast<std::size_t>(r)]);
            preds = nn_classify(D, labels);
            if (distances != nullptr) *distances = new fb_matrix{std::move(D)};
        }
        auto p = std::make_unique<fb_predictions>();
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const auto row = static_cast<std::size_t>(test_rows[i]);
            p->rows.push_back({f->image_ids[row], names[static_cast<std::size_t>(preds[i].label)], f->subjects[row]});
        }
        *out = p.release();
    });
}

size_t fb_predictions_count(const fb_predictions* p) { return p == nullptr ? 0 : p->rows.size(); }

double fb_predictions_accuracy(const fb_predictions* p) {
    if (p == nullptr || p->rows.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& r : p->rows) correct += r.predicted == r.truth ? 1 : 0;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(p->rows.size());
}

fb_status fb_predictions_save_csv(const fb_predictions* p, const char* path) {
    return guarded([&] {
        need(p, "predictions");
        need(path, "path");
        std::ofstream out(path);
        require(static_cast<bool>(out), ErrorKind::Io, std::string("cannot write ") + path);
        out << "probe_id,predicted_subject,true_subject,correct\n";
        for (const auto& r : p->rows) {
            out << csv::escape(r.probe_id) << ',' << csv::escape(r.predicted) << ',' << csv::escape(r.truth) << ','
                << (r.predicted == r.truth ? 1 : 0) << '\n';
        }
        require(static_cast<bool>(out), ErrorKind::Io, std::string("write failed for ") + path);
    });
}

void fb_predictions_free(fb_predictions* p) { delete p; }

fb_status fb_matrix_load_csv(const char* path, fb_matrix** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = nullptr;
        *out = new fb_matrix{read_distance_csv(path)};
    });
}

fb_status fb_matrix_save_csv(const fb_matrix* m, const char* path) {
    return guarded([&] {
        need(m, "matrix");
        need(path, "path");
        write_distance_csv(m->m, path);
    });
}

size_t fb_matrix_rows(const fb_matrix* m) { return m == nullptr ? 0 : static_cast<size_t>(m->m.values.rows()); }
size_t fb_matrix_cols(const fb_matrix* m) { return m == nullptr ? 0 : static_cast<size_t>(m->m.values.cols()); }

fb_status fb_matrix_get(const fb_matrix* m, size_t row, size_t col, double* value) {
    return guarded([&] {
        need(m, "matrix");
        need(value, "value");
        require(row < fb_matrix_rows(m) && col < fb_matrix_cols(m), ErrorKind::Config, "matrix index out of range");
        *value = m->m.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    });
}

fb_status fb_fusion_kind_parse(const char* text, fb_fusion_kind* kind) {
    return guarded([&] {
        need(text, "text");
        need(kind, "kind");
        const auto k = parse_fusion(trim(text));
        require(k.has_value(), ErrorKind::Config,
                std::string("unknown fusion scheme '") + text + "' (expected avg, min, med, wmp or weighted)");
        *kind = static_cast<fb_fusion_kind>(*k);
    });
}

fb_status fb_matrix_fuse(const fb_matrix* const* inputs, size_t k, fb_fusion_kind kind, const double* weights,
                         size_t n_weights, int per_row, fb_matrix** out) {
    return guarded([&] {
        need(inputs, "inputs");
        need(out, "out");
        *out = nullptr;
        require(k >= 1, ErrorKind::Config, "fusion needs at least one matrix");
        require(kind >= FB_FUSION_AVG && kind <= FB_FUSION_WEIGHTED, ErrorKind::Config, "unknown fusion scheme");
        FusionScheme scheme{static_cast<FusionKind>(kind), {}};
        if (scheme.kind == FusionKind::WEIGHTED) {
            require(weights != nullptr, ErrorKind::Config, "weighted fusion needs weights");
            scheme.weights.assign(weights, weights + n_weights);
        }
        const Normalization mode = per_row != 0 ? Normalization::PerRow : Normalization::Global;
        std::vector<DistanceMatrix> normalized;
        for (size_t i = 0; i < k; ++i) {
            need(inputs[i], "input matrix");
            normalized.push_back(minmax_normalize(inputs[i]->m, mode));
        }
        for (size_t i = 1; i < k; ++i) {
            require(normalized[i].gallery_ids == normalized[0].gallery_ids &&
                        normalized[i].probe_ids == normalized[0].probe_ids,
                    ErrorKind::Data, "fusion inputs disagree on probe or gallery ids");
        }
        *out = new fb_matrix{fuse(normalized, scheme)};
    });
}

fb_status fb_matrix_classify(const fb_matrix* m, fb_predictions** out) {
    return guarded([&] {
        need(m, "matrix");
        need(out, "out");
        *out = nullptr;
        const DistanceMatrix& D = m->m;
        require(D.gallery_ids.size() == static_cast<std::size_t>(D.values.cols()) &&
                    D.probe_ids.size() == static_cast<std::size_t>(D.values.rows()),
                ErrorKind::Data, "distance matrix lacks probe or gallery ids");
        std::map<std::string, int, std::less<>> code;
        std::vector<std::string> names;
        std::vector<int> labels;
        for (const auto& g : D.gallery_ids) {
            const auto s = subject_of_id(g);
            auto [it, inserted] = code.emplace(s, static_cast<int>(names.size()));
            if (inserted) names.push_back(s);
            labels.push_back(it->second);
        }
        const auto preds = nn_classify(D, labels);
        auto p = std::make_unique<fb_predictions>();
        for (std::size_t i = 0; i < preds.size(); ++i) {
            p->rows.push_back({D.probe_ids[i], names[static_cast<std::size_t>(preds[i].label)],
                               subject_of_id(D.probe_ids[i])});
        }
        *out = p.release();
    });
}

void fb_matrix_free(fb_matrix* m) { delete m; }

void fb_experiment_spec_init(fb_experiment_spec* spec) {
    if (spec == nullptr) return;
    const ExperimentConfig d;
    *spec = fb_experiment_spec{};
    spec->protocols = "e1";
    spec->features = "pca,lda";
    spec->seed = d.seed;
    spec->trials = d.trials;
    spec->n_components = d.n_components;
    spec->svm_C = d.svm.C;
    spec->svm_gamma = 0.0;
    spec->svm_folds = d.svm.folds;
    spec->metric_ridge = d.metric_ridge;
    spec->threads = 1;
}

fb_status fb_experiment_spec_check(const fb_experiment_spec* spec) {
    return guarded([&] {
        need(spec, "spec");
        (void)build_config(*spec, false);
    });
}

fb_status fb_experiment_run(const fb_dataset* data, const fb_experiment_spec* spec, fb_report** out) {
    return run_report(data, spec, out, false);
}

fb_status fb_fusion_study_run(const fb_dataset* data, const fb_experiment_spec* spec, fb_report** out) {
    return run_report(data, spec, out, true);
}

fb_status fb_report_save(const fb_report* r, const char* path) {
    return guarded([&] {
        need(r, "report");
        need(path, "path");
        const auto format = report_format_for(path);
        require(format.has_value(), ErrorKind::Config, std::string("report path must end in .csv or .json: ") + path);
        emit_report(r->report, *format, path);
    });
}

fb_status fb_report_render(const fb_report* r, fb_report_format format, char** text) {
    return guarded([&] {
        need(r, "report");
        need(text, "text");
        *text = dup_string(render_report(r->report, format == FB_REPORT_JSON ? ReportFormat::Json : ReportFormat::Csv));
    });
}

size_t fb_report_cell_count(const fb_report* r) { return r == nullptr ? 0 : r->report.cells.size(); }

fb_status fb_report_cell(const fb_report* r, size_t index, fb_cell_info* info) {
    return guarded([&] {
        need(r, "report");
        need(info, "info");
        require(index < r->report.cells.size(), ErrorKind::Config, "cell index out of range");
        const CellResult& c = r->report.cells[index];
        info->protocol = protocol_name(c.protocol).data();
        info->ratio = ratio_name(c.ratio).data();
        info->feature = feature_name(c.feature).data();
        info->classifier = c.classifier.metric ? metric_name(*c.classifier.metric).data() : "SVM";
        info->trials = c.accuracy.size();
        info->mean_accuracy = mean_of(c.accuracy);
        info->sd_accuracy = sd_of(c.accuracy);
        info->fit_seconds = mean_of(c.fit_seconds);
        info->predict_seconds = mean_of(c.predict_seconds);
    });
}

size_t fb_report_fusion_count(const fb_report* r) { return r == nullptr ? 0 : r->report.fusion.size(); }

fb_status fb_report_fusion(const fb_report* r, size_t index, fb_fusion_info* info) {
    return guarded([&] {
        need(r, "report");
        need(info, "info");
        require(index < r->report.fusion.size(), ErrorKind::Config, "fusion row index out of range");
        const FusionRow& row = r->report.fusion[index];
        info->protocol = protocol_name(row.protocol).data();
        info->ratio = ratio_name(row.ratio).data();
        info->feature = feature_name(row.feature).data();
        info->k = row.k;
        info->row = row.row.c_str();
        info->constituent = row.constituent ? 1 : 0;
        info->mean_accuracy = mean_of(row.accuracy);
        info->at_least_best = std::all_of(row.at_least_best.begin(), row.at_least_best.end(), [](bool b) { return b; });
    });
}

size_t fb_report_warning_count(const fb_report* r) { return r == nullptr ? 0 : r->report.warnings.size(); }

const char* fb_report_warning(const fb_report* r, size_t index) {
    if (r == nullptr || index >= r->report.warnings.size()) return nullptr;
    return r->report.warnings[index].c_str();
}

double fb_report_seconds(const fb_report* r, const char* prefix) {
    if (r == nullptr || prefix == nullptr) return 0.0;
    return r->report.timings.total(prefix);
}

void fb_report_free(fb_report* r) { delete r; }

}  // extern "C"
