#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "facebench/dataset.hpp"
#include "facebench/error.hpp"
#include "test_util.hpp"

using namespace facebench;

namespace {

std::filesystem::path write_manifest_text(const TempDir& dir, const std::string& body) {
    const auto path = dir.path() / "manifest.csv";
    std::ofstream(path) << "subject_id,gender,image_path,eye_left_row,eye_left_col,eye_right_row,eye_right_col\n"
                        << body;
    return path;
}

Dataset uniform_pool(std::size_t n_female, std::size_t n_male, std::size_t images) {
    SyntheticSpec spec;
    spec.n_female = n_female;
    spec.n_male = n_male;
    spec.images_per_subject = images;
    spec.height = 8;
    spec.width = 8;
    return generate_synthetic(spec);
}

}  // namespace

TEST_CASE("load_manifest parses rows, preserves order and indexes subjects") {
    TempDir dir;
    const auto path = write_manifest_text(dir, "A,F,a0.pgm,10,12,10,30\nA,F,a1.pgm,,,,\nB,M,sub/b0.pgm,,,,\n");
    const Dataset d = load_manifest(path);
    REQUIRE(d.size() == 3);
    CHECK(d.subject_count() == 2);
    CHECK(d.positions_of("A") == std::vector<std::size_t>{0, 1});
    CHECK(d.positions_of("B") == std::vector<std::size_t>{2});
    CHECK(d.gender_of("B") == Gender::Male);
    REQUIRE(d.records()[0].eyes.has_value());
    CHECK(d.records()[0].eyes->right.col == 30.0);
    CHECK_FALSE(d.records()[1].eyes.has_value());
    CHECK(std::get<std::filesystem::path>(d.records()[2].image) == dir.path() / "sub/b0.pgm");
}

TEST_CASE("load_manifest accepts a header-only file") {
    TempDir dir;
    CHECK(load_manifest(write_manifest_text(dir, "")).empty());
}

TEST_CASE("load_manifest rejects bad rows naming the row") {
    TempDir dir;
    const auto check_error = [&](const std::string& body, const std::string& fragment) {
        const auto path = write_manifest_text(dir, body);
        try {
            (void)load_manifest(path);
            FAIL("expected an error for: " << body);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Data);
            CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
        }
    };
    check_error("A,F,a.pgm,,,,\nB,X,b.pgm,,,,\n", "line 3");
    check_error("A,F,a.pgm,,,,\nA,F,a.pgm,,,,\n", "line 3");
    check_error("A,F,a.pgm,,\n", "line 2");
    check_error("A,F,a.pgm,1,2,,\n", "line 2");

    try {
        (void)load_manifest(dir.path() / "missing.csv");
        FAIL("missing manifest accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Data);
    }
}

TEST_CASE("filter_min_images keeps exactly the subjects at the threshold") {
    std::vector<ImageRecord> records;
    const std::map<std::string, int> counts{{"a", 10}, {"b", 9}, {"c", 12}};
    for (const auto& [id, n] : counts) {
        for (int i = 0; i < n; ++i) {
            ImageRecord r;
            r.subject_id = id;
            r.image = std::make_shared<const GrayImage>(2, 2);
            records.push_back(r);
        }
    }
    const Dataset d(records);
    const Dataset kept = filter_min_images(d, 10);
    CHECK(kept.subject_count() == 2);
    CHECK(kept.size() == 22);
    CHECK(kept.subjects() == std::vector<std::string>{"a", "c"});
    CHECK(filter_min_images(d, 1).size() == d.size());
    CHECK(filter_min_images(kept, 10).size() == kept.size());
}

TEST_CASE("filter_min_images matches a brute-force count on a thinned synthetic pool") {
    const Dataset pool = uniform_pool(100, 500, 14);
    // Keep a subject-dependent number of images (5..14) per subject.
    std::vector<ImageRecord> thinned;
    std::map<std::string, std::size_t> seen;
    for (const auto& r : pool.records()) {
        const std::size_t keep = 5 + std::hash<std::string>{}(r.subject_id) % 10;
        if (seen[r.subject_id]++ < keep) thinned.push_back(r);
    }
    const Dataset d(thinned);

    std::map<std::string, std::size_t> tally;
    for (const auto& r : d.records()) ++tally[r.subject_id];
    std::size_t expected = 0;
    for (const auto& [id, n] : tally) expected += n >= 10 ? 1 : 0;

    const Dataset kept = filter_min_images(d, 10);
    CHECK(kept.subject_count() == expected);
    CHECK(filter_min_images(kept, 10).size() == kept.size());
}

TEST_CASE("sample_subjects draws the published E1 and E3 subset sizes") {
    const Dataset pool = uniform_pool(83, 461, 10);
    SamplingSpec spec{83, 83, 10, 7};
    const Dataset e1 = sample_subjects(pool, spec);
    CHECK(e1.subject_count() == 166);
    CHECK(e1.size() == 1660);
    CHECK(e1.count_of(Gender::Female) == 83);
    CHECK(e1.count_of(Gender::Male) == 83);

    const Dataset male_only = sample_subjects(pool, {0, 82, 10, 7});
    CHECK(male_only.subject_count() == 82);
    CHECK(male_only.count_of(Gender::Female) == 0);

    const Dataset again = sample_subjects(pool, spec);
    CHECK(again.subjects() == e1.subjects());
    const Dataset other = sample_subjects(pool, {83, 83, 10, 8});
    CHECK(other.subjects() != e1.subjects());
}

TEST_CASE("sample_subjects draws images without replacement when subjects have more") {
    const Dataset pool = uniform_pool(3, 3, 14);
    const Dataset d = sample_subjects(pool, {2, 2, 10, 3});
    CHECK(d.subject_count() == 4);
    for (const auto& s : d.subjects()) {
        const auto& pos = d.positions_of(s);
        CHECK(pos.size() == 10);
        std::set<std::string> ids;
        for (auto p : pos) ids.insert(d.records()[p].image_id);
        CHECK(ids.size() == 10);
    }
}

TEST_CASE("sample_subjects reports the short gender") {
    const Dataset pool = uniform_pool(5, 50, 10);
    try {
        (void)sample_subjects(pool, {6, 10, 10, 0});
        FAIL("expected insufficient subjects");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Data);
        const std::string msg = e.what();
        CHECK(msg.find("female") != std::string::npos);
        CHECK(msg.find("6") != std::string::npos);
        CHECK(msg.find("5") != std::string::npos);
    }
}

TEST_CASE("split_train_test sizes and invariants") {
    const Dataset pool = uniform_pool(83, 83, 10);
    const Split s91 = split_train_test(pool, SplitRatio::R9_1, 11);
    CHECK(s91.train.size() == 1494);
    CHECK(s91.test.size() == 166);
    const Split s55 = split_train_test(pool, SplitRatio::R5_5, 11);
    CHECK(s55.train.size() == 830);
    CHECK(s55.test.size() == 830);

    for (const Split* s : {&s91, &s55}) {
        std::map<std::string, std::pair<int, int>> per;
        std::set<std::string> train_ids;
        for (const auto& r : s->train) {
            ++per[r.subject_id].first;
            train_ids.insert(r.image_id);
        }
        for (const auto& r : s->test) {
            ++per[r.subject_id].second;
            CHECK(train_ids.count(r.image_id) == 0);
        }
        const int want_train = s->ratio == SplitRatio::R9_1 ? 9 : 5;
        for (const auto& [id, c] : per) {
            CHECK(c.first == want_train);
            CHECK(c.second == 10 - want_train);
        }
        CHECK(per.size() == 166);
    }

    const Split again = split_train_test(pool, SplitRatio::R5_5, 11);
    for (std::size_t i = 0; i < again.test.size(); ++i) CHECK(again.test[i].image_id == s55.test[i].image_id);
}

TEST_CASE("split_train_test small case and wrong counts") {
    const Dataset two = uniform_pool(1, 1, 10);
    const Split s = split_train_test(two, SplitRatio::R5_5, 0);
    CHECK(s.train.size() == 10);
    CHECK(s.test.size() == 10);

    const Dataset seven = uniform_pool(1, 1, 7);
    CHECK_THROWS_AS((void)split_train_test(seven, SplitRatio::R9_1, 0), Error);
}

TEST_CASE("generate_synthetic: zero noise gives identical images per subject") {
    SyntheticSpec spec;
    spec.n_female = 2;
    spec.n_male = 2;
    spec.intra_noise = 0.0;
    const Dataset d = generate_synthetic(spec);
    CHECK(d.subject_count() == 4);
    for (const auto& s : d.subjects()) {
        const auto& pos = d.positions_of(s);
        const GrayImage first = load_image(d.records()[pos.front()]);
        CHECK(first.height() == 70);
        CHECK(first.width() == 60);
        for (auto p : pos) CHECK(load_image(d.records()[p]) == first);
    }
    CHECK(load_image(d.records()[0]) != load_image(d.records()[10]));
    const auto& eyes = *d.records()[0].eyes;
    CHECK(eyes.left == kCanonicalLeftEye);
    CHECK(eyes.right == kCanonicalRightEye);
}

TEST_CASE("generate_synthetic is deterministic and validates its spec") {
    SyntheticSpec spec;
    spec.n_female = 1;
    spec.n_male = 1;
    const Dataset a = generate_synthetic(spec);
    const Dataset b = generate_synthetic(spec);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(load_image(a.records()[i]) == load_image(b.records()[i]));
    spec.seed = 2;
    CHECK(load_image(generate_synthetic(spec).records()[0]) != load_image(a.records()[0]));

    SyntheticSpec tiny;
    tiny.height = 7;
    CHECK_THROWS_AS((void)generate_synthetic(tiny), Error);
    SyntheticSpec negative;
    negative.intra_noise = -1.0;
    CHECK_THROWS_AS((void)generate_synthetic(negative), Error);
}

TEST_CASE("generate_synthetic noise level is close to the requested standard deviation") {
    SyntheticSpec spec;
    spec.n_female = 0;
    spec.n_male = 20;
    spec.intra_noise = 0.0;
    const Dataset clean = generate_synthetic(spec);
    spec.intra_noise = 5.0;
    const Dataset noisy = generate_synthetic(spec);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const auto a = load_image(clean.records()[i]);
        const auto b = load_image(noisy.records()[i]);
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double d = static_cast<double>(b.pixels()[k]) - a.pixels()[k];
            sum += d * d;
            ++n;
        }
    }
    const double sd = std::sqrt(sum / static_cast<double>(n));
    CHECK(sd > 4.0);
    CHECK(sd < 6.0);
}

TEST_CASE("E1-sized synthetic pool satisfies the sampling and split preconditions") {
    SyntheticSpec spec;
    spec.n_female = 83;
    spec.n_male = 83;
    const Dataset pool = generate_synthetic(spec);
    const Dataset e1 = sample_subjects(filter_min_images(pool, 10), {83, 83, 10, 0});
    std::size_t female_records = 0;
    for (const auto& r : e1.records()) female_records += r.gender == Gender::Female ? 1 : 0;
    CHECK(female_records == 830);
    CHECK(e1.size() == 1660);
    CHECK_NOTHROW((void)split_train_test(e1, SplitRatio::R9_1, 0));
}

TEST_CASE("save_dataset writes PGMs and a manifest that reloads") {
    TempDir dir;
    SyntheticSpec spec;
    spec.n_female = 1;
    spec.n_male = 1;
    spec.images_per_subject = 3;
    const Dataset d = generate_synthetic(spec);
    (void)save_dataset(d, dir.path());
    const Dataset back = load_manifest(dir.path() / "manifest.csv");
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(back.records()[i].subject_id == d.records()[i].subject_id);
        CHECK(back.records()[i].gender == d.records()[i].gender);
        CHECK(load_image(back.records()[i]) == load_image(d.records()[i]));
        REQUIRE(back.records()[i].eyes.has_value());
        CHECK(back.records()[i].eyes->left == d.records()[i].eyes->left);
    }
}
