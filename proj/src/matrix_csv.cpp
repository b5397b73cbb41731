#include <cmath>
#include <fstream>

#include "facebench/csv.hpp"
#include "facebench/error.hpp"
#include "facebench/metrics.hpp"

namespace facebench {

void write_distance_csv(const DistanceMatrix& m, const std::filesystem::path& path) {
    const auto n_probes = static_cast<std::size_t>(m.values.rows());
    const auto n_gallery = static_cast<std::size_t>(m.values.cols());
    require(m.probe_ids.empty() || m.probe_ids.size() == n_probes, ErrorKind::Data, "probe id count mismatch");
    require(m.gallery_ids.empty() || m.gallery_ids.size() == n_gallery, ErrorKind::Data,
            "gallery id count mismatch");
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
    out << "probe_id";
    for (std::size_t j = 0; j < n_gallery; ++j) {
        out << ',' << csv::escape(m.gallery_ids.empty() ? "g" + std::to_string(j) : m.gallery_ids[j]);
    }
    out << '\n';
    for (std::size_t i = 0; i < n_probes; ++i) {
        out << csv::escape(m.probe_ids.empty() ? "p" + std::to_string(i) : m.probe_ids[i]);
        for (std::size_t j = 0; j < n_gallery; ++j) {
            out << ',' << csv::format_double(m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        out << '\n';
    }
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
}

DistanceMatrix read_distance_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Data, "cannot open distance matrix " + path.string());
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::Data, path.string() + " is empty");
    auto header = csv::split_line(line);
    require(header.size() >= 2 && header[0] == "probe_id", ErrorKind::Data,
            path.string() + ": header must start with probe_id and name at least one gallery column");

    DistanceMatrix m;
    m.label = path.stem().string();
    m.gallery_ids.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = csv::split_line(line);
        const std::string where = path.string() + " line " + std::to_string(line_no);
        require(f.size() == header.size(), ErrorKind::Data, where + ": wrong column count");
        m.probe_ids.push_back(f[0]);
        std::vector<double> row;
        row.reserve(f.size() - 1);
        for (std::size_t j = 1; j < f.size(); ++j) {
            const double v = csv::parse_double(f[j], where);
            require(std::isfinite(v) && v >= 0.0, ErrorKind::Data, where + ": distances must be finite and >= 0");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.gallery_ids.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

}  // namespace facebench
