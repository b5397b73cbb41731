#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "facebench/dataset.hpp"
#include "facebench/error.hpp"
#include "facebench/rng.hpp"

namespace facebench {

namespace {

// Cosine patterns cos(pi*u*(r+.5)/H) * cos(pi*v*(c+.5)/W) for 0 <= u,v < kFreq,
// excluding the constant one. Coefficient spread decays with frequency.
constexpr int kFreq = 12;
constexpr double kMeanLevel = 128.0;
constexpr double kCoefficientScale = 5.0;
// Gender moves the means of two coefficients in opposite directions.
constexpr int kGenderU0 = 1, kGenderV0 = 0;
constexpr int kGenderU1 = 0, kGenderV1 = 2;
constexpr double kGenderShift = 4.0;
// Most of the per-image noise variance lives in the patterns with u + v <= 6
// (lighting-like, shared with identity); the rest is white. Zero noise still
// gives identical images.
constexpr double kStructuredShare = 0.8;
constexpr int kNuisanceMaxOrder = 6;

std::vector<std::array<int, 2>> nuisance_modes() {
    std::vector<std::array<int, 2>> modes;
    for (int u = 0; u <= kNuisanceMaxOrder; ++u) {
        for (int v = 0; u + v <= kNuisanceMaxOrder; ++v) {
            if (u + v > 0) modes.push_back({u, v});
        }
    }
    return modes;
}

double coefficient_spread(int u, int v) { return kCoefficientScale / (1.0 + 0.5 * (u + v)); }

double gender_mean(Gender g, int u, int v) {
    const double sign = g == Gender::Female ? 1.0 : -1.0;
    if ((u == kGenderU0 && v == kGenderV0) || (u == kGenderU1 && v == kGenderV1)) return sign * kGenderShift;
    return 0.0;
}

std::string subject_name(Gender g, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%04zu", gender_code(g), i + 1);
    return buf;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
    require(spec.height >= 8 && spec.width >= 8, ErrorKind::Config, "synthetic images must be at least 8x8");
    require(spec.intra_noise >= 0.0 && std::isfinite(spec.intra_noise), ErrorKind::Config,
            "intra_noise must be a finite value >= 0");
    require(spec.images_per_subject >= 1, ErrorKind::Config, "images_per_subject must be >= 1");

    const std::size_t H = spec.height, W = spec.width;
    std::vector<double> row_cos(kFreq * H), col_cos(kFreq * W);
    for (int u = 0; u < kFreq; ++u) {
        for (std::size_t r = 0; r < H; ++r) {
            row_cos[u * H + r] = std::cos(std::numbers::pi * u * (r + 0.5) / static_cast<double>(H));
        }
        for (std::size_t c = 0; c < W; ++c) {
            col_cos[u * W + c] = std::cos(std::numbers::pi * u * (c + 0.5) / static_cast<double>(W));
        }
    }

    const EyePair eyes{{kCanonicalLeftEye.row * static_cast<double>(H) / kFaceHeight,
                        kCanonicalLeftEye.col * static_cast<double>(W) / kFaceWidth},
                       {kCanonicalRightEye.row * static_cast<double>(H) / kFaceHeight,
                        kCanonicalRightEye.col * static_cast<double>(W) / kFaceWidth}};

    // Unit mean per-pixel variance for the structured part.
    const auto modes = nuisance_modes();
    double mode_power = 0.0;
    for (const auto& m : modes) {
        double sum = 0.0;
        for (std::size_t r = 0; r < H; ++r) {
            for (std::size_t c = 0; c < W; ++c) {
                const double g = row_cos[m[0] * H + r] * col_cos[m[1] * W + c];
                sum += g * g;
            }
        }
        mode_power += sum / static_cast<double>(H * W);
    }
    const double white_sd = spec.intra_noise * std::sqrt(1.0 - kStructuredShare);
    const double mode_sd = spec.intra_noise * std::sqrt(kStructuredShare / mode_power);

    std::vector<ImageRecord> records;
    records.reserve((spec.n_female + spec.n_male) * spec.images_per_subject);
    std::vector<double> base(H * W);
    for (const auto gender : {Gender::Female, Gender::Male}) {
        const std::size_t count = gender == Gender::Female ? spec.n_female : spec.n_male;
        for (std::size_t s = 0; s < count; ++s) {
            const std::string id = subject_name(gender, s);
            Rng coeff_rng(derive_seed(spec.seed, "face:" + id));
            std::fill(base.begin(), base.end(), kMeanLevel);
            for (int u = 0; u < kFreq; ++u) {
                for (int v = 0; v < kFreq; ++v) {
                    if (u == 0 && v == 0) continue;
                    const double a = gender_mean(gender, u, v) + coefficient_spread(u, v) * coeff_rng.normal();
                    for (std::size_t r = 0; r < H; ++r) {
                        const double ar = a * row_cos[u * H + r];
                        double* row = base.data() + r * W;
                        for (std::size_t c = 0; c < W; ++c) row[c] += ar * col_cos[v * W + c];
                    }
                }
            }
            for (std::size_t k = 0; k < spec.images_per_subject; ++k) {
                Rng noise_rng(derive_seed(spec.seed, "noise:" + id + "#" + std::to_string(k)));
                std::vector<double> image = base;
                if (spec.intra_noise > 0.0) {
                    for (const auto& m : modes) {
                        const double a = mode_sd * noise_rng.normal();
                        for (std::size_t r = 0; r < H; ++r) {
                            const double ar = a * row_cos[m[0] * H + r];
                            double* row = image.data() + r * W;
                            for (std::size_t c = 0; c < W; ++c) row[c] += ar * col_cos[m[1] * W + c];
                        }
                    }
                    for (double& v : image) v += white_sd * noise_rng.normal();
                }
                std::vector<std::uint8_t> px(H * W);
                for (std::size_t i = 0; i < px.size(); ++i) {
                    double v = image[i];
                    v = std::round(v);
                    px[i] = static_cast<std::uint8_t>(v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v));
                }
                ImageRecord rec;
                rec.subject_id = id;
                rec.gender = gender;
                rec.image = std::make_shared<const GrayImage>(H, W, std::move(px));
                rec.eyes = eyes;
                records.push_back(std::move(rec));
            }
        }
    }
    return Dataset(std::move(records));
}

}  // namespace facebench
