#include "facebench/image.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "facebench/error.hpp"

namespace facebench {

GrayImage::GrayImage(std::size_t height, std::size_t width, std::uint8_t fill)
    : height_(height), width_(width), pixels_(height * width, fill) {
    require(height >= 1 && width >= 1, ErrorKind::Data, "image dimensions must be at least 1x1");
}

GrayImage::GrayImage(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
    require(height >= 1 && width >= 1, ErrorKind::Data, "image dimensions must be at least 1x1");
    require(pixels_.size() == height * width, ErrorKind::Data,
            "pixel buffer length " + std::to_string(pixels_.size()) + " does not match " +
                std::to_string(height) + "x" + std::to_string(width));
}

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t number(const char* what) {
        skip_space_and_comments();
        std::size_t value = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
            value = value * 10 + (bytes_[pos_] - '0');
            require(value <= 1'000'000'000, ErrorKind::Io, std::string("PGM ") + what + " out of range");
            ++pos_;
            ++digits;
        }
        require(digits > 0, ErrorKind::Io, std::string("PGM header: missing ") + what);
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    void single_whitespace() {
        require(pos_ < bytes_.size() && std::isspace(bytes_[pos_]), ErrorKind::Io,
                "PGM header: expected whitespace before raster");
        ++pos_;
    }

    [[nodiscard]] std::size_t position() const { return pos_; }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 2;
};

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
    require(bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5', ErrorKind::Io,
            "unsupported magic (only binary P5 PGM is supported)");
    HeaderReader header(bytes);
    const std::size_t width = header.number("width");
    const std::size_t height = header.number("height");
    const std::size_t maxval = header.number("maxval");
    require(width >= 1 && height >= 1, ErrorKind::Io, "PGM dimensions must be positive");
    require(maxval >= 1 && maxval <= 255, ErrorKind::Io,
            "PGM maxval " + std::to_string(maxval) + " unsupported (must be <= 255)");
    header.single_whitespace();
    const std::size_t offset = header.position();
    const std::size_t count = width * height;
    require(bytes.size() - offset >= count, ErrorKind::Io,
            "truncated PGM payload: expected " + std::to_string(count) + " bytes, found " +
                std::to_string(bytes.size() - offset));
    std::vector<std::uint8_t> pixels(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                     bytes.begin() + static_cast<std::ptrdiff_t>(offset + count));
    return GrayImage(height, width, std::move(pixels));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& image) {
    const std::string header =
        "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.pixels().begin(), image.pixels().end());
    return out;
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open image " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_pgm(bytes);
    } catch (const Error& e) {
        fail(e.kind(), path.string() + ": " + e.what());
    }
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
    const auto bytes = encode_pgm(image);
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write image " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
}

namespace {

std::uint8_t to_byte(double v) {
    const double r = std::round(v);
    if (r <= 0.0) return 0;
    if (r >= 255.0) return 255;
    return static_cast<std::uint8_t>(r);
}

double sample_bilinear(const GrayImage& img, double row, double col) {
    const double r0f = std::floor(row);
    const double c0f = std::floor(col);
    const double fr = row - r0f;
    const double fc = col - c0f;
    const auto r0 = static_cast<long long>(r0f);
    const auto c0 = static_cast<long long>(c0f);
    const auto h = static_cast<long long>(img.height());
    const auto w = static_cast<long long>(img.width());
    auto px = [&](long long r, long long c) -> double {
        if (r < 0 || c < 0 || r >= h || c >= w) return 0.0;
        return img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    };
    // Skip zero-weight taps so exact grid positions never read outside.
    double v = 0.0;
    const double w00 = (1.0 - fr) * (1.0 - fc), w01 = (1.0 - fr) * fc;
    const double w10 = fr * (1.0 - fc), w11 = fr * fc;
    if (w00 != 0.0) v += w00 * px(r0, c0);
    if (w01 != 0.0) v += w01 * px(r0, c0 + 1);
    if (w10 != 0.0) v += w10 * px(r0 + 1, c0);
    if (w11 != 0.0) v += w11 * px(r0 + 1, c0 + 1);
    return v;
}

}  // namespace

GrayImage align_crop_resize(const GrayImage& image, const EyePair& eyes) {
    require(!image.empty(), ErrorKind::Data, "cannot align an empty image");
    require(!(eyes.left == eyes.right), ErrorKind::Data, "eye coordinates coincide");
    require(std::lround(eyes.left.row) != std::lround(eyes.right.row) ||
                std::lround(eyes.left.col) != std::lround(eyes.right.col),
            ErrorKind::Data, "zero inter-eye distance after rounding");

    // Treat points as complex numbers z = col + i*row. The similarity map
    // src = L + a * (dst - L0), a = (R - L) / (R0 - L0), sends the canonical
    // eyes (L0, R0) onto the source eyes (L, R).
    const double dx0 = kCanonicalRightEye.col - kCanonicalLeftEye.col;
    const double dy0 = kCanonicalRightEye.row - kCanonicalLeftEye.row;
    const double dx = eyes.right.col - eyes.left.col;
    const double dy = eyes.right.row - eyes.left.row;
    const double denom = dx0 * dx0 + dy0 * dy0;
    const double a_re = (dx * dx0 + dy * dy0) / denom;
    const double a_im = (dy * dx0 - dx * dy0) / denom;

    GrayImage out(kFaceHeight, kFaceWidth);
    for (std::size_t r = 0; r < kFaceHeight; ++r) {
        for (std::size_t c = 0; c < kFaceWidth; ++c) {
            const double u = static_cast<double>(c) - kCanonicalLeftEye.col;
            const double v = static_cast<double>(r) - kCanonicalLeftEye.row;
            const double src_col = eyes.left.col + a_re * u - a_im * v;
            const double src_row = eyes.left.row + a_im * u + a_re * v;
            out.at(r, c) = to_byte(sample_bilinear(image, src_row, src_col));
        }
    }
    return out;
}

GrayImage histogram_equalize(const GrayImage& image) {
    if (image.empty()) return image;
    std::array<std::size_t, 256> cdf{};
    for (auto p : image.pixels()) ++cdf[p];
    for (std::size_t v = 1; v < cdf.size(); ++v) cdf[v] += cdf[v - 1];

    const std::size_t total = image.size();
    std::size_t cdf_min = 0;
    for (auto c : cdf) {
        if (c != 0) {
            cdf_min = c;
            break;
        }
    }
    // One occupied level: the mapping is 0/0, keep the input.
    if (cdf_min == total) return image;

    std::array<std::uint8_t, 256> lut{};
    const double span = static_cast<double>(total - cdf_min);
    for (std::size_t v = 0; v < lut.size(); ++v) {
        const double num = cdf[v] >= cdf_min ? static_cast<double>(cdf[v] - cdf_min) : 0.0;
        lut[v] = to_byte(num / span * 255.0);
    }
    GrayImage out = image;
    for (auto& p : out.pixels()) p = lut[p];
    return out;
}

GrayImage preprocess_face(const GrayImage& image, const std::optional<EyePair>& eyes) {
    if (eyes) return histogram_equalize(align_crop_resize(image, *eyes));
    require(image.height() == kFaceHeight && image.width() == kFaceWidth, ErrorKind::Data,
            "image without eye coordinates must already be " + std::to_string(kFaceHeight) + "x" +
                std::to_string(kFaceWidth) + " (got " + std::to_string(image.height()) + "x" +
                std::to_string(image.width()) + ")");
    return histogram_equalize(image);
}

Eigen::VectorXd to_feature_vector(const GrayImage& image) {
    require(image.height() == kFaceHeight && image.width() == kFaceWidth, ErrorKind::Data,
            "feature vectors require a 70x60 image (got " + std::to_string(image.height()) + "x" +
                std::to_string(image.width()) + ")");
    Eigen::VectorXd v(static_cast<Eigen::Index>(image.size()));
    const auto px = image.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) v[static_cast<Eigen::Index>(i)] = px[i];
    return v;
}

GrayImage from_feature_vector(const Eigen::Ref<const Eigen::VectorXd>& values, std::size_t height,
                              std::size_t width) {
    require(static_cast<std::size_t>(values.size()) == height * width, ErrorKind::Data,
            "feature vector length does not match image shape");
    GrayImage out(height, width);
    auto px = out.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = to_byte(values[static_cast<Eigen::Index>(i)]);
    return out;
}

}  // namespace facebench
