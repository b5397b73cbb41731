#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "facebench/error.hpp"
#include "facebench/image.hpp"
#include "test_util.hpp"

using namespace facebench;

namespace {

GrayImage smooth_face() {
    GrayImage img(kFaceHeight, kFaceWidth);
    for (std::size_t r = 0; r < kFaceHeight; ++r) {
        for (std::size_t c = 0; c < kFaceWidth; ++c) {
            img.at(r, c) = static_cast<std::uint8_t>(
                std::lround(128.0 + 60.0 * std::sin(0.11 * static_cast<double>(r)) * std::cos(0.09 * static_cast<double>(c))));
        }
    }
    return img;
}

}  // namespace

TEST_CASE("PGM round trip and payload size") {
    TempDir dir;
    const GrayImage small(2, 2, std::vector<std::uint8_t>{0, 255, 128, 7});
    write_pgm(small, dir.path() / "a.pgm");
    CHECK(read_pgm(dir.path() / "a.pgm") == small);

    const GrayImage zero(70, 60);
    const auto bytes = encode_pgm(zero);
    const std::string header = "P5\n60 70\n255\n";
    CHECK(bytes.size() == header.size() + 4200);
    CHECK(std::string(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(header.size())) == header);
    CHECK(decode_pgm(bytes) == zero);
}

TEST_CASE("PGM decoding rejects unsupported input") {
    const std::string p2 = "P2\n2 1\n255\n0 1\n";
    try {
        (void)decode_pgm(std::vector<std::uint8_t>(p2.begin(), p2.end()));
        FAIL("P2 accepted");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("unsupported magic") != std::string::npos);
    }
    const std::string deep = "P5\n1 1\n65535\n\x01\x02";
    CHECK_THROWS_AS((void)decode_pgm(std::vector<std::uint8_t>(deep.begin(), deep.end())), Error);
    const std::string truncated = "P5\n4 4\n255\n\x01\x02";
    CHECK_THROWS_AS((void)decode_pgm(std::vector<std::uint8_t>(truncated.begin(), truncated.end())), Error);
    const std::string comment = "P5\n# made by hand\n2 1\n255\n\x05\x06";
    const GrayImage c = decode_pgm(std::vector<std::uint8_t>(comment.begin(), comment.end()));
    CHECK(c.at(0, 1) == 6);
}

TEST_CASE("histogram_equalize follows the CDF mapping") {
    const GrayImage flat(3, 3, 77);
    CHECK(histogram_equalize(flat) == flat);

    const GrayImage two(1, 2, std::vector<std::uint8_t>{0, 255});
    CHECK(histogram_equalize(two) == two);

    const GrayImage four(1, 4, std::vector<std::uint8_t>{10, 10, 200, 200});
    CHECK(histogram_equalize(four) == GrayImage(1, 4, std::vector<std::uint8_t>{0, 0, 255, 255}));

    // Levels {0:1, 1:2, 2:1}: cdf = 1, 3, 4, cdf_min = 1, N = 4.
    const GrayImage three(1, 4, std::vector<std::uint8_t>{0, 1, 1, 2});
    const auto expect = [](double cdf) { return static_cast<std::uint8_t>(std::lround((cdf - 1.0) / 3.0 * 255.0)); };
    CHECK(histogram_equalize(three) ==
          GrayImage(1, 4, std::vector<std::uint8_t>{expect(1), expect(3), expect(3), expect(4)}));
}

TEST_CASE("histogram_equalize preserves level order and is idempotent within one level") {
    const GrayImage img = smooth_face();
    const GrayImage once = histogram_equalize(img);
    const GrayImage twice = histogram_equalize(once);
    const auto a = img.pixels();
    const auto b = once.pixels();
    for (std::size_t i = 0; i < a.size(); i += 7) {
        for (std::size_t j = 0; j < a.size(); j += 13) {
            if (a[i] <= a[j]) CHECK(b[i] <= b[j]);
        }
    }
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(std::abs(int(twice.pixels()[i]) - int(b[i])) <= 1);
}

TEST_CASE("align_crop_resize is exact for the identity transform") {
    const GrayImage img = smooth_face();
    CHECK(align_crop_resize(img, {kCanonicalLeftEye, kCanonicalRightEye}) == img);
}

TEST_CASE("align_crop_resize undoes a 90 degree rotation") {
    const GrayImage ref = smooth_face();
    // Rotate clockwise: source (r, c) lands at (c, H - 1 - r).
    const std::size_t H = ref.height(), W = ref.width();
    GrayImage rotated(W, H);
    for (std::size_t r = 0; r < H; ++r) {
        for (std::size_t c = 0; c < W; ++c) rotated.at(c, H - 1 - r) = ref.at(r, c);
    }
    const auto map = [&](PixelPoint p) { return PixelPoint{p.col, static_cast<double>(H - 1) - p.row}; };
    const GrayImage back = align_crop_resize(rotated, {map(kCanonicalLeftEye), map(kCanonicalRightEye)});
    REQUIRE(back.height() == kFaceHeight);
    REQUIRE(back.width() == kFaceWidth);
    int worst = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(int(back.pixels()[i]) - int(ref.pixels()[i])));
    CHECK(worst <= 1);
}

TEST_CASE("align_crop_resize output shape and validation") {
    const GrayImage big(200, 150, 90);
    const GrayImage out = align_crop_resize(big, {{80.0, 50.0}, {82.0, 100.0}});
    CHECK(out.height() == 70);
    CHECK(out.width() == 60);
    // Far outside the source everything is zero-filled.
    const GrayImage tiny(10, 10, 200);
    const GrayImage edge = align_crop_resize(tiny, {{5.0, 3.0}, {5.0, 6.0}});
    CHECK(edge.at(69, 0) == 0);
    CHECK(edge.at(24, 18) == 200);

    CHECK_THROWS_AS((void)align_crop_resize(big, {{10.0, 10.0}, {10.0, 10.0}}), Error);
    CHECK_THROWS_AS((void)align_crop_resize(big, {{10.0, 10.0}, {10.2, 10.3}}), Error);
}

TEST_CASE("to_feature_vector flattens row-major") {
    CHECK(to_feature_vector(GrayImage(70, 60)).isZero());
    GrayImage idx(70, 60);
    for (std::size_t r = 0; r < 70; ++r) {
        for (std::size_t c = 0; c < 60; ++c) idx.at(r, c) = static_cast<std::uint8_t>((r * 60 + c) % 256);
    }
    const auto v = to_feature_vector(idx);
    REQUIRE(v.size() == 4200);
    for (Eigen::Index i = 0; i < v.size(); ++i) CHECK(v[i] == static_cast<double>(i % 256));
    CHECK(from_feature_vector(v) == idx);
    CHECK_THROWS_AS((void)to_feature_vector(GrayImage(10, 10)), Error);
}

TEST_CASE("preprocess_face needs eyes or a canonical frame") {
    const GrayImage face = smooth_face();
    CHECK(preprocess_face(face, std::nullopt) == histogram_equalize(face));
    CHECK_THROWS_AS((void)preprocess_face(GrayImage(80, 60), std::nullopt), Error);
    CHECK(preprocess_face(GrayImage(120, 100, 9), EyePair{{40, 30}, {40, 70}}).size() == kFaceDim);
}
