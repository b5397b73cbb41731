#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace facebench {

/// 8-bit grayscale image, row-major.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(std::size_t height, std::size_t width, std::uint8_t fill = 0);
    GrayImage(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels);

    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t size() const noexcept { return pixels_.size(); }
    [[nodiscard]] bool empty() const noexcept { return pixels_.empty(); }

    [[nodiscard]] std::uint8_t at(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
    std::uint8_t& at(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }

    [[nodiscard]] std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    [[nodiscard]] std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Sub-pixel location in image coordinates (row down, column right).
struct PixelPoint {
    double row = 0.0;
    double col = 0.0;
    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

struct EyePair {
    PixelPoint left;   ///< the eye with the smaller image column after alignment
    PixelPoint right;
};

// Canonical output frame. Eyes sit on row 24 at columns 18 and 41: a 23 px
// inter-eye distance centered horizontally at roughly 35% of the height.
inline constexpr std::size_t kFaceHeight = 70;
inline constexpr std::size_t kFaceWidth = 60;
inline constexpr std::size_t kFaceDim = kFaceHeight * kFaceWidth;
inline constexpr PixelPoint kCanonicalLeftEye{24.0, 18.0};
inline constexpr PixelPoint kCanonicalRightEye{24.0, 41.0};

// Binary PGM (P5) with maxval <= 255.
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pgm(const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);

/// Similarity-aligns the face so the eyes land on the canonical positions and
/// resamples bilinearly into the 70x60 frame. Samples outside the source are 0.
GrayImage align_crop_resize(const GrayImage& image, const EyePair& eyes);

/// CDF histogram equalization. A constant image is returned unchanged.
GrayImage histogram_equalize(const GrayImage& image);

/// Full face pipeline: align when eyes are known (otherwise the input must
/// already be 70x60), then equalize.
GrayImage preprocess_face(const GrayImage& image, const std::optional<EyePair>& eyes);

/// Row-major flattening of a 70x60 face.
Eigen::VectorXd to_feature_vector(const GrayImage& image);

/// Inverse of to_feature_vector; values are rounded and clamped to [0, 255].
GrayImage from_feature_vector(const Eigen::Ref<const Eigen::VectorXd>& values,
                              std::size_t height = kFaceHeight, std::size_t width = kFaceWidth);

}  // namespace facebench
