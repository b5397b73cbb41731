#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "facebench/classify.hpp"
#include "facebench/error.hpp"
#include "oracles.hpp"

using namespace facebench;

namespace {

// Two clusters at (-2, -2) and (2, 2) with margin well above 1.
Matrix separable(std::vector<int>& labels) {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    Matrix X(40, 2);
    labels.clear();
    for (int i = 0; i < 40; ++i) {
        const double c = i < 20 ? -2.0 : 2.0;
        X(i, 0) = c + jitter(gen);
        X(i, 1) = c + jitter(gen);
        labels.push_back(i < 20 ? 0 : 1);
    }
    return X;
}

double percent(const std::vector<Prediction>& preds, const std::vector<int>& truth) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) ok += preds[i].label == truth[i] ? 1 : 0;
    return 100.0 * static_cast<double>(ok) / static_cast<double>(preds.size());
}

void check_dual_constraints(const SvmModel& model, const std::vector<int>& labels) {
    for (const auto& m : model.machines) {
        double balance = 0.0;
        for (std::size_t s = 0; s < m.support.size(); ++s) {
            const double a = m.alpha[static_cast<Eigen::Index>(s)];
            CHECK(a >= 0.0);
            CHECK(a <= model.C);
            const int y = labels[static_cast<std::size_t>(m.support[s])] == m.positive_label ? 1 : -1;
            CHECK(y == m.sign[s]);
            balance += a * y;
        }
        CHECK(std::abs(balance) <= 1e-6);
    }
}

}  // namespace

TEST_CASE("nn_classify takes the row argmin") {
    DistanceMatrix D;
    D.values.resize(1, 3);
    D.values << 0.3, 0.1, 0.9;
    const std::vector<int> labels{10, 20, 30};
    const auto p = nn_classify(D, labels);
    REQUIRE(p.size() == 1);
    CHECK(p[0].label == 20);
    CHECK(p[0].score == -0.1);
    CHECK(p[0].runner_up == 10);

    D.values << 0.2, 0.2, 0.9;
    CHECK(nn_classify(D, labels)[0].label == 10);
    CHECK_THROWS_AS((void)nn_classify(D, std::vector<int>{1, 2}), Error);
}

TEST_CASE("nn_classify on a zero diagonal predicts each probe's own label") {
    const Matrix G = oracle::random_matrix(12, 4, 3);
    DistanceMatrix D;
    D.values.resize(12, 12);
    for (Eigen::Index i = 0; i < 12; ++i) {
        for (Eigen::Index j = 0; j < 12; ++j) D.values(i, j) = (G.row(i) - G.row(j)).norm();
    }
    std::vector<int> labels(12);
    for (int i = 0; i < 12; ++i) labels[static_cast<std::size_t>(i)] = 100 + i;
    const auto p = nn_classify(D, labels);
    for (int i = 0; i < 12; ++i) CHECK(p[static_cast<std::size_t>(i)].label == 100 + i);
}

TEST_CASE("nn_classify is invariant under strictly increasing transforms") {
    DistanceMatrix D;
    D.values = oracle::random_matrix(30, 25, 8).cwiseAbs();
    std::vector<int> labels(25);
    for (int j = 0; j < 25; ++j) labels[static_cast<std::size_t>(j)] = j % 7;
    const auto base = nn_classify(D, labels);
    const std::vector<double (*)(double)> transforms{
        [](double v) { return std::exp(v); },
        [](double v) { return v * v * v + 3.0; },
        [](double v) { return std::log1p(v) * 0.01 - 5.0; },
    };
    for (auto f : transforms) {
        DistanceMatrix T = D;
        T.values = D.values.unaryExpr(f);
        const auto p = nn_classify(T, labels);
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i].label == base[i].label);
    }
}

TEST_CASE("rbf_kernel") {
    const std::vector<double> o{0, 0}, p{3, 4};
    CHECK(rbf_kernel(p, p, 5.0) == 1.0);
    CHECK(rbf_kernel(o, p, 0.0) == 1.0);
    CHECK(rbf_kernel(o, p, 0.01) == doctest::Approx(std::exp(-0.25)).epsilon(1e-15));
    CHECK_THROWS_AS((void)rbf_kernel(o, p, -1.0), Error);
}

TEST_CASE("SVM separates a linearly separable set") {
    std::vector<int> labels;
    const Matrix X = separable(labels);
    SvmParams params;
    params.C = 10.0;
    params.gamma = 1.0;
    const SvmModel m = svm_train(X, labels, params);
    CHECK(percent(svm_predict(m, X), labels) == 100.0);
    CHECK_FALSE(m.degenerate);
    check_dual_constraints(m, labels);
}

TEST_CASE("SVM shatters XOR") {
    Matrix X(4, 2);
    X << 0, 0, 1, 1, 0, 1, 1, 0;
    const std::vector<int> labels{0, 0, 1, 1};
    SvmParams params;
    params.C = 100.0;
    params.gamma = 1.0;
    params.standardize = false;
    const SvmModel m = svm_train(X, labels, params);
    CHECK(percent(svm_predict(m, X), labels) == 100.0);
    check_dual_constraints(m, labels);
}

TEST_CASE("multiclass one-vs-rest keeps the dual constraints per machine") {
    std::vector<int> labels;
    const Matrix centres = 4.0 * oracle::random_matrix(5, 3, 19);
    const Matrix noise = oracle::random_matrix(50, 3, 20);
    Matrix X(50, 3);
    for (int i = 0; i < 50; ++i) {
        X.row(i) = centres.row(i % 5) + noise.row(i);
        labels.push_back(i % 5);
    }
    SvmParams params;
    params.C = 2.0;
    params.gamma = 0.5;
    params.threads = 2;
    const SvmModel m = svm_train(X, labels, params);
    CHECK(m.classes == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(m.machines.size() == 5);
    check_dual_constraints(m, labels);
    const Matrix values = svm_decision_values(m, X);
    CHECK(values.cols() == 5);

    params.threads = 1;
    const SvmModel serial = svm_train(X, labels, params);
    CHECK(svm_decision_values(serial, X) == values);
}

TEST_CASE("removing a non-support vector leaves the decision function unchanged") {
    std::vector<int> labels;
    const Matrix X = separable(labels);
    SvmParams params;
    params.C = 10.0;
    params.gamma = 1.0;
    params.standardize = false;
    params.tolerance = 1e-6;
    const SvmModel m = svm_train(X, labels, params);
    std::vector<bool> is_sv(static_cast<std::size_t>(X.rows()), false);
    for (const auto& bm : m.machines) {
        for (auto s : bm.support) is_sv[static_cast<std::size_t>(s)] = true;
    }
    const auto it = std::find(is_sv.begin(), is_sv.end(), false);
    REQUIRE(it != is_sv.end());
    const auto drop = static_cast<Eigen::Index>(it - is_sv.begin());
    Matrix Xr(X.rows() - 1, 2);
    std::vector<int> lr;
    for (Eigen::Index i = 0, r = 0; i < X.rows(); ++i) {
        if (i == drop) continue;
        Xr.row(r++) = X.row(i);
        lr.push_back(labels[static_cast<std::size_t>(i)]);
    }
    const SvmModel reduced = svm_train(Xr, lr, params);
    const Matrix probe = oracle::random_matrix(20, 2, 23);
    const Matrix a = svm_decision_values(m, probe), b = svm_decision_values(reduced, probe);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("SVM validation and degenerate input") {
    const Matrix X = oracle::random_matrix(6, 2, 1);
    const std::vector<int> one_class(6, 3);
    try {
        (void)svm_train(X, one_class, {});
        FAIL("single class accepted");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find(">= 2 classes") != std::string::npos);
    }
    SvmParams bad;
    bad.C = 0.0;
    CHECK_THROWS_AS((void)svm_train(X, std::vector<int>{0, 0, 0, 1, 1, 1}, bad), Error);

    // Every training point identical: the model is flagged and predicts one label.
    const Matrix same = Matrix::Constant(6, 2, 1.5);
    const SvmModel m = svm_train(same, std::vector<int>{0, 0, 0, 1, 1, 1}, {});
    CHECK(m.degenerate);
    const auto p = svm_predict(m, oracle::random_matrix(5, 2, 2));
    for (const auto& q : p) CHECK(q.label == p.front().label);
}

TEST_CASE("grid search") {
    std::vector<int> labels;
    const Matrix X = separable(labels);
    SUBCASE("a singleton grid returns its point") {
        const std::vector<double> c{3.0}, g{0.7};
        const auto r = grid_search_svm(X, labels, c, g, 5, 1);
        CHECK(r.C == 3.0);
        CHECK(r.gamma == 0.7);
        CHECK(r.table.size() == 1);
        CHECK(r.stratified);
    }
    SUBCASE("ties prefer the smaller C") {
        const std::vector<double> c{0.01, 10.0}, g{1.0};
        const auto r = grid_search_svm(X, labels, c, g, 5, 1);
        REQUIRE(r.table.size() == 2);
        const double acc_small = r.table[0].accuracy;
        CHECK(r.C == (acc_small == 100.0 ? 0.01 : 10.0));
        CHECK(r.accuracy == 100.0);
    }
    SUBCASE("same seed gives the same selection") {
        const auto c = default_c_grid();
        const std::vector<double> g{0.125, 1.0, 8.0};
        const auto a = grid_search_svm(X, labels, c, g, 4, 9);
        const auto b = grid_search_svm(X, labels, c, g, 4, 9);
        CHECK(a.C == b.C);
        CHECK(a.gamma == b.gamma);
        for (std::size_t i = 0; i < a.table.size(); ++i) CHECK(a.table[i].accuracy == b.table[i].accuracy);
    }
    SUBCASE("small classes fall back to plain folds with a warning") {
        std::vector<int> skewed = labels;
        skewed[0] = 7;
        skewed[1] = 7;
        const std::vector<double> c{1.0}, g{1.0};
        const auto r = grid_search_svm(X, skewed, c, g, 5, 1);
        CHECK_FALSE(r.stratified);
        CHECK(r.warnings.size() == 1);
    }
    CHECK(default_c_grid().front() == std::ldexp(1.0, -5));
    CHECK(default_c_grid().back() == std::ldexp(1.0, 15));
    CHECK(default_gamma_grid().front() == std::ldexp(1.0, -15));
    CHECK(default_gamma_grid().back() == std::ldexp(1.0, 3));
}
