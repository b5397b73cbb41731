#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "facebench/image.hpp"

namespace facebench {

enum class Gender { Male, Female };

char gender_code(Gender g);
std::optional<Gender> parse_gender(std::string_view code);

/// Where the pixels of a record live: a file on disk or an in-memory buffer.
using ImageSource = std::variant<std::filesystem::path, std::shared_ptr<const GrayImage>>;

struct ImageRecord {
    std::string subject_id;
    Gender gender = Gender::Male;
    ImageSource image;
    std::optional<EyePair> eyes;
    /// Stable per-image identifier, "<subject_id>#<ordinal>", assigned when
    /// the record first enters a collection and kept through sampling.
    std::string image_id;
};

/// Loads the record's pixels (from disk or the inline buffer).
GrayImage load_image(const ImageRecord& record);

/// Ordered record collection with a subject index.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<ImageRecord> records);

    [[nodiscard]] const std::vector<ImageRecord>& records() const noexcept { return records_; }
    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
    [[nodiscard]] bool empty() const noexcept { return records_.empty(); }

    /// Subject ids in order of first appearance.
    [[nodiscard]] const std::vector<std::string>& subjects() const noexcept { return subjects_; }
    [[nodiscard]] std::size_t subject_count() const noexcept { return subjects_.size(); }

    /// Record positions of one subject, in record order. Throws for unknown ids.
    [[nodiscard]] const std::vector<std::size_t>& positions_of(const std::string& subject_id) const;
    [[nodiscard]] Gender gender_of(const std::string& subject_id) const;
    [[nodiscard]] std::size_t count_of(Gender g) const;

private:
    std::vector<ImageRecord> records_;
    std::vector<std::string> subjects_;
    std::map<std::string, std::vector<std::size_t>, std::less<>> index_;
};

struct SamplingSpec {
    std::size_t n_female = 0;
    std::size_t n_male = 0;
    std::size_t images_per_subject = 10;
    std::uint64_t seed = 0;
};

enum class SplitRatio { R9_1, R5_5 };

std::string_view ratio_name(SplitRatio r);  // "9:1" / "5:5"
std::optional<SplitRatio> parse_ratio(std::string_view text);

struct Split {
    std::vector<ImageRecord> train;
    std::vector<ImageRecord> test;
    SplitRatio ratio = SplitRatio::R9_1;
};

/// Reads a manifest CSV. Relative image paths resolve against the manifest's
/// directory.
Dataset load_manifest(const std::filesystem::path& path);

/// Writes a manifest for records that reference files; paths are written as
/// given. Inline-buffer records are rejected.
void write_manifest(const Dataset& data, const std::filesystem::path& path);

/// Keeps the subjects with at least `min_images` records.
Dataset filter_min_images(const Dataset& data, std::size_t min_images);

/// Draws n_female + n_male subjects (uniformly, without replacement, per
/// gender) and exactly images_per_subject images of each. Output keeps the
/// input's subject and record order.
Dataset sample_subjects(const Dataset& data, const SamplingSpec& spec);

/// Per-subject random train/test partition: 9k/1k or 5k/5k.
Split split_train_test(const Dataset& data, SplitRatio ratio, std::uint64_t seed);

struct SyntheticSpec {
    std::size_t n_female = 100;
    std::size_t n_male = 500;
    std::size_t images_per_subject = 10;
    std::size_t height = kFaceHeight;
    std::size_t width = kFaceWidth;
    double intra_noise = 20.0;
    std::uint64_t seed = 1;
};

/// Procedural faces: each subject's base is a sum of low-frequency 2-D cosine
/// patterns with subject-hashed coefficients (two coefficient means shift by
/// gender). Each image adds zero-mean Gaussian noise whose per-pixel standard
/// deviation averages intra_noise: 80% of the variance in random amplitudes of
/// the lowest-order patterns, the rest white. Pixels are clamped to [0, 255].
/// Eyes are emitted at the canonical positions scaled to the frame.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Writes every record as PGM plus a manifest.csv into `dir`; returns the
/// file-backed dataset.
Dataset save_dataset(const Dataset& data, const std::filesystem::path& dir);

/// Aligns/equalizes every record and writes `<subject_id>_<k>.pgm` plus a
/// manifest.csv (eye fields empty) into `dir`.
Dataset preprocess_dataset(const Dataset& data, const std::filesystem::path& dir, unsigned threads = 1);

}  // namespace facebench
