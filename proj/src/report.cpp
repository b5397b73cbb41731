#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "facebench/csv.hpp"
#include "facebench/experiments.hpp"

namespace facebench {

namespace {

using nlohmann::ordered_json;

std::string fixed2(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
    return std::string(buf, res.ptr);
}

std::string join_ints(const std::vector<int>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) s += ' ';
        s += std::to_string(values[i]);
    }
    return s;
}

std::string flag(bool b) { return b ? "yes" : "no"; }

void csv_row(std::ostringstream& out, std::initializer_list<std::string> fields) {
    bool first = true;
    for (const auto& f : fields) {
        if (!first) out << ',';
        out << csv::escape(f);
        first = false;
    }
    out << '\n';
}

std::string render_csv(const ExperimentReport& r) {
    std::ostringstream out;
    out << "# facebench " << r.kind << " report\n";
    out << "# seed: " << r.seed << '\n';
    out << "# trials: " << r.trials << '\n';
    for (const auto& [k, v] : r.config) out << "# config " << k << ": " << v << '\n';
    for (const auto& t : r.provenance) {
        out << "# provenance " << protocol_name(t.protocol) << ' ' << ratio_name(t.ratio) << " trial=" << t.trial
            << " seed=" << t.seed << " subjects=" << t.subjects_hash << " female=" << t.n_female
            << " male=" << t.n_male << " train=" << t.n_train << " test=" << t.n_test
            << " pca_components=" << t.pca_components << " lda_components=" << t.lda_components << '\n';
    }
    for (const auto& w : r.warnings) out << "# warning: " << w << '\n';

    csv_row(out, {"table", "protocol", "ratio", "feature", "row", "metrics", "trial", "accuracy", "at_least_best"});
    for (const auto& c : r.cells) {
        const std::string p(protocol_name(c.protocol)), ratio(ratio_name(c.ratio)), f(feature_name(c.feature));
        const std::string metrics = c.classifier.metric ? std::to_string(metric_number(*c.classifier.metric)) : "";
        if (r.trials == 1) {
            csv_row(out, {"accuracy", p, ratio, f, c.classifier.name(), metrics, "1", fixed2(c.accuracy.at(0)), ""});
            continue;
        }
        for (std::size_t t = 0; t < c.accuracy.size(); ++t) {
            csv_row(out, {"accuracy", p, ratio, f, c.classifier.name(), metrics, std::to_string(t + 1),
                          fixed2(c.accuracy[t]), ""});
        }
        csv_row(out, {"accuracy", p, ratio, f, c.classifier.name(), metrics, "mean", fixed2(mean_of(c.accuracy)), ""});
        csv_row(out, {"accuracy", p, ratio, f, c.classifier.name(), metrics, "sd", fixed2(sd_of(c.accuracy)), ""});
    }
    for (const auto& row : r.fusion) {
        const std::string p(protocol_name(row.protocol)), ratio(ratio_name(row.ratio)), f(feature_name(row.feature));
        const std::string name = "best" + std::to_string(row.k) + ":" + row.row;
        for (std::size_t t = 0; t < row.accuracy.size(); ++t) {
            csv_row(out, {"fusion", p, ratio, f, name, join_ints(row.metrics[t]), std::to_string(t + 1),
                          fixed2(row.accuracy[t]), row.constituent ? "" : flag(row.at_least_best[t])});
        }
        if (r.trials > 1) {
            csv_row(out, {"fusion", p, ratio, f, name, "", "mean", fixed2(mean_of(row.accuracy)), ""});
            csv_row(out, {"fusion", p, ratio, f, name, "", "sd", fixed2(sd_of(row.accuracy)), ""});
        }
    }
    return out.str();
}

std::string render_json(const ExperimentReport& r) {
    ordered_json j;
    j["kind"] = r.kind;
    j["seed"] = r.seed;
    j["trials"] = r.trials;
    ordered_json cfg = ordered_json::object();
    for (const auto& [k, v] : r.config) cfg[k] = v;
    j["config"] = cfg;

    ordered_json prov = ordered_json::array();
    for (const auto& t : r.provenance) {
        ordered_json e;
        e["protocol"] = protocol_name(t.protocol);
        e["ratio"] = ratio_name(t.ratio);
        e["trial"] = t.trial;
        e["seed"] = t.seed;
        e["subjects_hash"] = t.subjects_hash;
        e["n_female"] = t.n_female;
        e["n_male"] = t.n_male;
        e["n_train"] = t.n_train;
        e["n_test"] = t.n_test;
        e["pca_components"] = t.pca_components;
        e["lda_components"] = t.lda_components;
        e["lda_ridge"] = t.lda_ridge;
        ordered_json svm = ordered_json::array();
        for (const auto& [f, cg] : t.svm_parameters) {
            svm.push_back({{"feature", feature_name(f)}, {"C", cg.first}, {"gamma", cg.second}});
        }
        e["svm"] = svm;
        prov.push_back(e);
    }
    j["provenance"] = prov;

    ordered_json cells = ordered_json::array();
    for (const auto& c : r.cells) {
        ordered_json e;
        e["protocol"] = protocol_name(c.protocol);
        e["ratio"] = ratio_name(c.ratio);
        e["feature"] = feature_name(c.feature);
        e["classifier"] = c.classifier.name();
        if (c.classifier.metric) e["metric_number"] = metric_number(*c.classifier.metric);
        e["accuracy"] = c.accuracy;
        e["mean"] = mean_of(c.accuracy);
        e["sd"] = sd_of(c.accuracy);
        cells.push_back(e);
    }
    j["cells"] = cells;

    ordered_json fusion = ordered_json::array();
    for (const auto& row : r.fusion) {
        ordered_json e;
        e["protocol"] = protocol_name(row.protocol);
        e["ratio"] = ratio_name(row.ratio);
        e["feature"] = feature_name(row.feature);
        e["k"] = row.k;
        e["row"] = row.row;
        e["constituent"] = row.constituent;
        e["metrics"] = row.metrics;
        e["accuracy"] = row.accuracy;
        e["mean"] = mean_of(row.accuracy);
        e["sd"] = sd_of(row.accuracy);
        if (!row.constituent) e["at_least_best"] = row.at_least_best;
        fusion.push_back(e);
    }
    j["fusion"] = fusion;
    j["warnings"] = r.warnings;
    return j.dump(2) + "\n";
}

}  // namespace

std::optional<ReportFormat> report_format_for(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".csv") return ReportFormat::Csv;
    if (ext == ".json") return ReportFormat::Json;
    return std::nullopt;
}

std::string render_report(const ExperimentReport& report, ReportFormat format) {
    return format == ReportFormat::Csv ? render_csv(report) : render_json(report);
}

std::string render_timings(const ExperimentReport& report) {
    std::ostringstream out;
    out << "label,seconds\n";
    for (const auto& e : report.timings.entries()) out << csv::escape(e.label) << ',' << csv::format_double(e.seconds) << '\n';
    for (const auto& c : report.cells) {
        const std::string base = std::string(protocol_name(c.protocol)) + "/" + std::string(ratio_name(c.ratio)) +
                                 "/" + std::string(feature_name(c.feature)) + "/" + c.classifier.name();
        out << csv::escape(base + "/cell-fit-mean") << ',' << csv::format_double(mean_of(c.fit_seconds)) << '\n';
        out << csv::escape(base + "/cell-predict-mean") << ',' << csv::format_double(mean_of(c.predict_seconds))
            << '\n';
    }
    return out.str();
}

std::filesystem::path timing_path_for(const std::filesystem::path& report_path) {
    auto p = report_path;
    p.replace_extension();
    p += ".timing.csv";
    return p;
}

void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path) {
    const auto write = [](const std::filesystem::path& target, const std::string& text) {
        std::ofstream out(target, std::ios::binary);
        require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + target.string());
        out << text;
        require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + target.string());
    };
    write(path, render_report(report, format));
    write(timing_path_for(path), render_timings(report));
}

}  // namespace facebench
