#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "facebench/error.hpp"
#include "facebench/fusion.hpp"
#include "oracles.hpp"

using namespace facebench;

namespace {

DistanceMatrix make(const Matrix& values) {
    DistanceMatrix D;
    D.values = values;
    return D;
}

DistanceMatrix random_normalized(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    return minmax_normalize(make(oracle::random_matrix(rows, cols, seed).cwiseAbs()));
}

FusionScheme scheme(FusionKind kind, std::vector<double> weights = {}) {
    FusionScheme s;
    s.kind = kind;
    s.weights = std::move(weights);
    return s;
}

}  // namespace

TEST_CASE("minmax_normalize examples") {
    Matrix M(2, 2);
    M << 1, 3, 2, 5;
    Matrix want(2, 2);
    want << 0, 0.5, 0.25, 1;
    CHECK(minmax_normalize(make(M)).values == want);

    Matrix unit(2, 3);
    unit << 0, 0.2, 1, 0.5, 0.75, 0.1;
    CHECK(minmax_normalize(make(unit)).values == unit);

    CHECK(minmax_normalize(make(Matrix::Constant(3, 2, 4.2))).values == Matrix::Zero(3, 2));

    Matrix rows(2, 2);
    rows << 1, 3, 10, 20;
    Matrix per_row(2, 2);
    per_row << 0, 1, 0, 1;
    CHECK(minmax_normalize(make(rows), Normalization::PerRow).values == per_row);
}

TEST_CASE("minmax_normalize hits both endpoints") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const DistanceMatrix N = minmax_normalize(make(oracle::random_matrix(7, 9, seed)));
        CHECK(N.values.minCoeff() == 0.0);
        CHECK(N.values.maxCoeff() == 1.0);
    }
}

TEST_CASE("wmp_weights examples") {
    CHECK(wmp_weights(std::vector<double>{0.37}) == std::vector<double>{1.0});

    const auto w = wmp_weights(std::vector<double>{0.1, 0.5});
    const double big = 1.0 / (1.0 + std::exp(-0.4));
    CHECK(w[0] == doctest::Approx(big).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(1.0 - big).epsilon(1e-14));
    CHECK(std::round(w[0] * 1e4) / 1e4 == 0.5987);
    CHECK(std::round(w[1] * 1e4) / 1e4 == 0.4013);

    const auto eq = wmp_weights(std::vector<double>{0.3, 0.3, 0.3});
    for (double v : eq) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("wmp weights are positive, sum to one and anti-monotone") {
    const Matrix R = oracle::random_matrix(200, 4, 77).cwiseAbs();
    for (Eigen::Index t = 0; t < R.rows(); ++t) {
        const std::size_t k = 2 + static_cast<std::size_t>(t % 3);
        std::vector<double> d(k);
        for (std::size_t i = 0; i < k; ++i) d[i] = R(t, static_cast<Eigen::Index>(i));
        const auto w = wmp_weights(d);
        double sum = 0.0;
        for (double v : w) {
            CHECK(v > 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) {
                if (d[a] < d[b]) CHECK(w[a] >= w[b]);
            }
        }
    }
}

TEST_CASE("fuse degenerate cases") {
    const DistanceMatrix A = random_normalized(6, 5, 1), B = random_normalized(6, 5, 2), C = random_normalized(6, 5, 3);
    const std::vector<DistanceMatrix> pair{A, B};

    SUBCASE("median of two equals the average cell for cell") {
        CHECK(fuse(pair, scheme(FusionKind::MED)).values == fuse(pair, scheme(FusionKind::AVG)).values);
    }
    SUBCASE("weights (1, 0, ...) reproduce the first input") {
        CHECK(fuse(pair, scheme(FusionKind::WEIGHTED, {1.0, 0.0})).values == A.values);
        const std::vector<DistanceMatrix> three{A, B, C};
        CHECK(fuse(three, scheme(FusionKind::WEIGHTED, {1.0, 0.0, 0.0})).values == A.values);
    }
    SUBCASE("identical copies are returned") {
        const std::vector<DistanceMatrix> same{A, A, A};
        for (auto s : {scheme(FusionKind::AVG), scheme(FusionKind::MIN), scheme(FusionKind::MED),
                       scheme(FusionKind::WMP), scheme(FusionKind::WEIGHTED, {0.4, 0.3, 0.3})}) {
            const Matrix got = fuse(same, s).values;
            CHECK((got - A.values).cwiseAbs().maxCoeff() <= 1e-15);
        }
        CHECK(fuse(same, scheme(FusionKind::MIN)).values == A.values);
        CHECK(fuse(same, scheme(FusionKind::MED)).values == A.values);
    }
    SUBCASE("min is entry-wise below every input") {
        const Matrix m = fuse(pair, scheme(FusionKind::MIN)).values;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                CHECK(m(i, j) <= A.values(i, j));
                CHECK(m(i, j) <= B.values(i, j));
                CHECK((m(i, j) == A.values(i, j) || m(i, j) == B.values(i, j)));
            }
        }
    }
}

TEST_CASE("fuse matches cell-wise oracles") {
    const std::vector<DistanceMatrix> in{random_normalized(4, 3, 11), random_normalized(4, 3, 12),
                                         random_normalized(4, 3, 13)};
    const Matrix avg = fuse(in, scheme(FusionKind::AVG)).values;
    const Matrix med = fuse(in, scheme(FusionKind::MED)).values;
    const Matrix wmp = fuse(in, scheme(FusionKind::WMP)).values;
    const Matrix wtd = fuse(in, scheme(FusionKind::WEIGHTED, {0.8, 0.1, 0.1})).values;
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) {
            std::vector<double> c{in[0].values(i, j), in[1].values(i, j), in[2].values(i, j)};
            CHECK(avg(i, j) == doctest::Approx((c[0] + c[1] + c[2]) / 3.0).epsilon(1e-15));
            CHECK(wtd(i, j) == doctest::Approx(0.8 * c[0] + 0.1 * c[1] + 0.1 * c[2]).epsilon(1e-15));
            // Softmax weights, largest to the smallest distance.
            std::vector<double> soft(3);
            double z = 0.0;
            for (int m = 0; m < 3; ++m) z += std::exp(c[static_cast<std::size_t>(m)]);
            for (int m = 0; m < 3; ++m) soft[static_cast<std::size_t>(m)] = std::exp(c[static_cast<std::size_t>(m)]) / z;
            std::vector<double> sorted_c = c, sorted_w = soft;
            std::sort(sorted_c.begin(), sorted_c.end());
            std::sort(sorted_w.rbegin(), sorted_w.rend());
            const double want_wmp = sorted_w[0] * sorted_c[0] + sorted_w[1] * sorted_c[1] + sorted_w[2] * sorted_c[2];
            CHECK(wmp(i, j) == doctest::Approx(want_wmp).epsilon(1e-14));
            CHECK(med(i, j) == sorted_c[1]);
        }
    }
}

TEST_CASE("AVG is permutation-invariant and WEIGHTED is not") {
    const DistanceMatrix A = random_normalized(5, 5, 21), B = random_normalized(5, 5, 22);
    const std::vector<DistanceMatrix> ab{A, B}, ba{B, A};
    CHECK(fuse(ab, scheme(FusionKind::AVG)).values == fuse(ba, scheme(FusionKind::AVG)).values);
    CHECK((fuse(ab, scheme(FusionKind::WMP)).values - fuse(ba, scheme(FusionKind::WMP)).values).cwiseAbs().maxCoeff() <=
          1e-15);
    const auto w = scheme(FusionKind::WEIGHTED, {0.9, 0.1});
    CHECK(fuse(ab, w).values != fuse(ba, w).values);
}

TEST_CASE("fusion scheme validation") {
    const std::vector<DistanceMatrix> pair{random_normalized(2, 2, 1), random_normalized(2, 2, 2)};
    CHECK_THROWS_AS(scheme(FusionKind::WEIGHTED, {0.5, 0.6}).validate(), Error);
    CHECK_THROWS_AS(scheme(FusionKind::WEIGHTED, {1.5, -0.5}).validate(), Error);
    CHECK_THROWS_AS(scheme(FusionKind::WEIGHTED).validate(), Error);
    CHECK_THROWS_AS(scheme(FusionKind::AVG, {1.0}).validate(), Error);
    CHECK_NOTHROW(scheme(FusionKind::WEIGHTED, {0.1, 0.1, 0.8}).validate());
    CHECK_THROWS_AS((void)fuse(pair, scheme(FusionKind::WEIGHTED, {0.2, 0.4, 0.4})), Error);
    const std::vector<DistanceMatrix> mismatched{random_normalized(2, 2, 1), random_normalized(3, 2, 2)};
    CHECK_THROWS_AS((void)fuse(mismatched, scheme(FusionKind::AVG)), Error);

    CHECK(scheme(FusionKind::WEIGHTED, {0.8, 0.1, 0.1}).describe() == "weighted(0.8,0.1,0.1)");
    CHECK(scheme(FusionKind::WMP).describe() == "wmp");
    CHECK(parse_fusion("MED") == FusionKind::MED);
    CHECK_FALSE(parse_fusion("max").has_value());
}

TEST_CASE("rank_metrics orders by accuracy then metric number") {
    CHECK(rank_metrics({{MetricKind::EUC, 0.8}, {MetricKind::COS, 0.9}}) ==
          std::vector<MetricKind>{MetricKind::COS, MetricKind::EUC});
    CHECK(rank_metrics({{MetricKind::CAN, 0.7}, {MetricKind::CB, 0.7}}) ==
          std::vector<MetricKind>{MetricKind::CB, MetricKind::CAN});
    CHECK(rank_metrics({{MetricKind::CHEB, 50.0}, {MetricKind::MC, 90.0}, {MetricKind::EUC, 50.0}}) ==
          std::vector<MetricKind>{MetricKind::MC, MetricKind::EUC, MetricKind::CHEB});
    CHECK_THROWS_AS((void)rank_metrics({}), Error);
}
