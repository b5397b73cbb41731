#include "facebench/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "facebench/csv.hpp"
#include "facebench/error.hpp"
#include "facebench/parallel.hpp"
#include "facebench/rng.hpp"

namespace facebench {

namespace {

constexpr std::string_view kManifestHeader =
    "subject_id,gender,image_path,eye_left_row,eye_left_col,eye_right_row,eye_right_col";

std::string image_key(const ImageSource& src) {
    if (const auto* p = std::get_if<std::filesystem::path>(&src)) return p->lexically_normal().string();
    const auto& img = std::get<std::shared_ptr<const GrayImage>>(src);
    std::ostringstream os;
    os << "inline:" << static_cast<const void*>(img.get());
    return os.str();
}

std::string file_stem_for(const std::string& subject_id, std::size_t ordinal) {
    std::string stem;
    for (char c : subject_id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '-' || c == '_' || c == '.';
        stem.push_back(ok ? c : '_');
    }
    return stem + "_" + std::to_string(ordinal);
}

}  // namespace

char gender_code(Gender g) { return g == Gender::Female ? 'F' : 'M'; }

std::optional<Gender> parse_gender(std::string_view code) {
    if (code == "M") return Gender::Male;
    if (code == "F") return Gender::Female;
    return std::nullopt;
}

std::string_view ratio_name(SplitRatio r) { return r == SplitRatio::R9_1 ? "9:1" : "5:5"; }

std::optional<SplitRatio> parse_ratio(std::string_view text) {
    if (text == "9:1") return SplitRatio::R9_1;
    if (text == "5:5") return SplitRatio::R5_5;
    return std::nullopt;
}

GrayImage load_image(const ImageRecord& record) {
    if (const auto* p = std::get_if<std::filesystem::path>(&record.image)) return read_pgm(*p);
    const auto& img = std::get<std::shared_ptr<const GrayImage>>(record.image);
    require(img != nullptr, ErrorKind::Data, "record " + record.image_id + " has no pixels");
    return *img;
}

Dataset::Dataset(std::vector<ImageRecord> records) : records_(std::move(records)) {
    std::map<std::string, std::size_t, std::less<>> ordinal;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        auto& r = records_[i];
        require(!r.subject_id.empty(), ErrorKind::Data, "record " + std::to_string(i) + " has an empty subject id");
        if (r.eyes) {
            require(!(r.eyes->left == r.eyes->right), ErrorKind::Data,
                    "record " + std::to_string(i) + " (" + r.subject_id + ") has coincident eyes");
        }
        auto [it, inserted] = index_.try_emplace(r.subject_id);
        if (inserted) subjects_.push_back(r.subject_id);
        it->second.push_back(i);
        const std::size_t k = ordinal[r.subject_id]++;
        if (r.image_id.empty()) r.image_id = r.subject_id + "#" + std::to_string(k);
        require(records_[it->second.front()].gender == r.gender, ErrorKind::Data,
                "subject " + r.subject_id + " has inconsistent gender labels");
    }
}

const std::vector<std::size_t>& Dataset::positions_of(const std::string& subject_id) const {
    const auto it = index_.find(subject_id);
    require(it != index_.end(), ErrorKind::Data, "unknown subject " + subject_id);
    return it->second;
}

Gender Dataset::gender_of(const std::string& subject_id) const {
    return records_[positions_of(subject_id).front()].gender;
}

std::size_t Dataset::count_of(Gender g) const {
    return static_cast<std::size_t>(
        std::count_if(subjects_.begin(), subjects_.end(), [&](const auto& s) { return gender_of(s) == g; }));
}

Dataset load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Data, "cannot open manifest " + path.string());
    const auto base = path.parent_path();

    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::Data, "manifest " + path.string() + " is empty");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == kManifestHeader, ErrorKind::Data,
            "manifest header must be '" + std::string(kManifestHeader) + "'");

    std::vector<ImageRecord> records;
    std::set<std::pair<std::string, std::string>> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::string where = path.string() + " line " + std::to_string(line_no);
        const auto f = csv::split_line(line);
        require(f.size() == 7, ErrorKind::Data,
                where + ": expected 7 columns, found " + std::to_string(f.size()));
        require(!f[0].empty(), ErrorKind::Data, where + ": empty subject_id");
        const auto gender = parse_gender(f[1]);
        require(gender.has_value(), ErrorKind::Data, where + ": gender must be M or F, got '" + f[1] + "'");
        require(!f[2].empty(), ErrorKind::Data, where + ": empty image_path");

        ImageRecord rec;
        rec.subject_id = f[0];
        rec.gender = *gender;
        std::filesystem::path img(f[2]);
        rec.image = img.is_absolute() ? img : base / img;

        const bool any_eye = !f[3].empty() || !f[4].empty() || !f[5].empty() || !f[6].empty();
        if (any_eye) {
            require(!f[3].empty() && !f[4].empty() && !f[5].empty() && !f[6].empty(), ErrorKind::Data,
                    where + ": eye coordinates must be all present or all empty");
            EyePair eyes{{csv::parse_double(f[3], where), csv::parse_double(f[4], where)},
                         {csv::parse_double(f[5], where), csv::parse_double(f[6], where)}};
            require(!(eyes.left == eyes.right), ErrorKind::Data, where + ": eye coordinates coincide");
            rec.eyes = eyes;
        }
        const auto key = std::make_pair(rec.subject_id, image_key(rec.image));
        require(seen.insert(key).second, ErrorKind::Data,
                where + ": duplicate (subject_id, image_path) pair " + rec.subject_id + ", " + f[2]);
        records.push_back(std::move(rec));
    }
    return Dataset(std::move(records));
}

void write_manifest(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write manifest " + path.string());
    const auto base = path.parent_path();
    out << kManifestHeader << '\n';
    for (const auto& r : data.records()) {
        const auto* p = std::get_if<std::filesystem::path>(&r.image);
        require(p != nullptr, ErrorKind::Io, "record " + r.image_id + " has no file to reference in a manifest");
        auto rel = base.empty() ? *p : p->lexically_relative(base);
        if (rel.empty()) rel = *p;
        out << csv::escape(r.subject_id) << ',' << gender_code(r.gender) << ',' << csv::escape(rel.string());
        if (r.eyes) {
            out << ',' << csv::format_double(r.eyes->left.row) << ',' << csv::format_double(r.eyes->left.col) << ','
                << csv::format_double(r.eyes->right.row) << ',' << csv::format_double(r.eyes->right.col);
        } else {
            out << ",,,,";
        }
        out << '\n';
    }
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
}

Dataset filter_min_images(const Dataset& data, std::size_t min_images) {
    require(min_images >= 1, ErrorKind::Config, "minimum image count must be >= 1");
    std::vector<ImageRecord> kept;
    for (const auto& r : data.records()) {
        if (data.positions_of(r.subject_id).size() >= min_images) kept.push_back(r);
    }
    return Dataset(std::move(kept));
}

Dataset sample_subjects(const Dataset& data, const SamplingSpec& spec) {
    require(spec.images_per_subject >= 2, ErrorKind::Config, "images_per_subject must be >= 2 to admit a split");

    std::set<std::string> chosen;
    for (const auto gender : {Gender::Female, Gender::Male}) {
        const std::size_t wanted = gender == Gender::Female ? spec.n_female : spec.n_male;
        std::vector<std::string> eligible;
        for (const auto& s : data.subjects()) {
            if (data.gender_of(s) == gender && data.positions_of(s).size() >= spec.images_per_subject) {
                eligible.push_back(s);
            }
        }
        const char* name = gender == Gender::Female ? "female" : "male";
        require(eligible.size() >= wanted, ErrorKind::Data,
                std::string("insufficient ") + name + " subjects: need " + std::to_string(wanted) + " with >= " +
                    std::to_string(spec.images_per_subject) + " images, have " + std::to_string(eligible.size()));
        Rng rng(derive_seed(spec.seed, std::string("subjects:") + name));
        rng.partial_shuffle(std::span<std::string>(eligible), wanted);
        chosen.insert(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(wanted));
    }

    std::vector<bool> keep(data.size(), false);
    for (const auto& s : chosen) {
        std::vector<std::size_t> pos = data.positions_of(s);
        if (pos.size() > spec.images_per_subject) {
            Rng rng(derive_seed(spec.seed, "images:" + s));
            rng.partial_shuffle(std::span<std::size_t>(pos), spec.images_per_subject);
            pos.resize(spec.images_per_subject);
        }
        for (auto p : pos) keep[p] = true;
    }
    std::vector<ImageRecord> out;
    out.reserve(chosen.size() * spec.images_per_subject);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (keep[i]) out.push_back(data.records()[i]);
    }
    return Dataset(std::move(out));
}

Split split_train_test(const Dataset& data, SplitRatio ratio, std::uint64_t seed) {
    Split split;
    split.ratio = ratio;
    std::vector<int> role(data.size(), 0);  // 1 = train, 2 = test
    for (const auto& s : data.subjects()) {
        std::vector<std::size_t> pos = data.positions_of(s);
        const std::size_t n = pos.size();
        const bool ok = ratio == SplitRatio::R9_1 ? (n % 10 == 0) : (n % 2 == 0);
        require(ok && n > 0, ErrorKind::Data,
                "subject " + s + " has " + std::to_string(n) + " images; a " + std::string(ratio_name(ratio)) +
                    " split needs a multiple of " + (ratio == SplitRatio::R9_1 ? "10" : "2"));
        const std::size_t n_train = ratio == SplitRatio::R9_1 ? n / 10 * 9 : n / 2;
        Rng rng(derive_seed(seed, "split:" + s));
        rng.shuffle(std::span<std::size_t>(pos));
        for (std::size_t i = 0; i < n; ++i) role[pos[i]] = i < n_train ? 1 : 2;
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        (role[i] == 1 ? split.train : split.test).push_back(data.records()[i]);
    }
    return split;
}

Dataset save_dataset(const Dataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<ImageRecord> out = data.records();
    std::map<std::string, std::size_t> ordinal;
    for (auto& r : out) {
        const auto file = dir / (file_stem_for(r.subject_id, ordinal[r.subject_id]++) + ".pgm");
        write_pgm(load_image(r), file);
        r.image = file;
    }
    Dataset saved(std::move(out));
    write_manifest(saved, dir / "manifest.csv");
    return saved;
}

Dataset preprocess_dataset(const Dataset& data, const std::filesystem::path& dir, unsigned threads) {
    std::filesystem::create_directories(dir);
    std::vector<ImageRecord> out = data.records();
    std::vector<std::filesystem::path> files(out.size());
    std::map<std::string, std::size_t> ordinal;
    for (std::size_t i = 0; i < out.size(); ++i) {
        files[i] = dir / (file_stem_for(out[i].subject_id, ordinal[out[i].subject_id]++) + ".pgm");
    }
    parallel_for(out.size(), threads, [&](std::size_t i) {
        const auto face = preprocess_face(load_image(out[i]), out[i].eyes);
        write_pgm(face, files[i]);
    });
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].image = files[i];
        out[i].eyes.reset();
    }
    Dataset processed(std::move(out));
    write_manifest(processed, dir / "manifest.csv");
    return processed;
}

}  // namespace facebench
