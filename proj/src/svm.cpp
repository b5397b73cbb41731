#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "facebench/classify.hpp"
#include "facebench/error.hpp"
#include "facebench/parallel.hpp"
#include "facebench/rng.hpp"

namespace facebench {

namespace {

constexpr double kTau = 1e-12;

struct SmoSolution {
    Vector alpha;
    double bias = 0.0;
    std::size_t iterations = 0;
};

// Dual of the soft-margin SVM, min 1/2 a^T Q a - e^T a subject to y^T a = 0 and
// 0 <= a <= C, with Q_ij = y_i y_j K_ij. Working pairs are the maximal
// violating pair; the two-variable subproblem is solved analytically.
SmoSolution solve_smo(const Matrix& K, std::span<const signed char> y, double C, double tolerance,
                      std::uint64_t max_kernel_evaluations) {
    const auto n = static_cast<Eigen::Index>(y.size());
    Vector alpha = Vector::Zero(n);
    Vector grad = Vector::Constant(n, -1.0);
    const auto yy = [&](Eigen::Index t) { return static_cast<double>(y[static_cast<std::size_t>(t)]); };

    std::size_t iter = 0;
    for (;; ++iter) {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        Eigen::Index i = -1, j = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double v = -yy(t) * grad[t];
            const bool up = yy(t) > 0 ? alpha[t] < C : alpha[t] > 0.0;
            const bool low = yy(t) > 0 ? alpha[t] > 0.0 : alpha[t] < C;
            if (up && v > gmax) {
                gmax = v;
                i = t;
            }
            if (low && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        if (i < 0 || j < 0 || gmax - gmin < tolerance) break;
        require(static_cast<std::uint64_t>(iter + 1) * 2 * static_cast<std::uint64_t>(n) <= max_kernel_evaluations,
                ErrorKind::Numeric,
                "SMO exceeded its kernel evaluation cap (" + std::to_string(max_kernel_evaluations) + ")");

        const double old_i = alpha[i], old_j = alpha[j];
        const double kii = K(i, i), kjj = K(j, j), kij = K(i, j);
        if (y[static_cast<std::size_t>(i)] != y[static_cast<std::size_t>(j)]) {
            double quad = kii + kjj + 2.0 * kij * yy(i) * yy(j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else if (alpha[j] > C) {
                alpha[j] = C;
                alpha[i] = C + diff;
            }
        } else {
            double quad = kii + kjj - 2.0 * kij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > C) {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        const double di = (alpha[i] - old_i) * yy(i);
        const double dj = (alpha[j] - old_j) * yy(j);
        for (Eigen::Index t = 0; t < n; ++t) grad[t] += yy(t) * (K(t, i) * di + K(t, j) * dj);
    }

    // Offset from the free variables, or the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    std::size_t n_free = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double yg = yy(t) * grad[t];
        if (alpha[t] >= C) {
            if (yy(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0.0) {
            if (yy(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else {
            free_sum += yg;
            ++n_free;
        }
    }
    double rho = 0.0;
    if (n_free > 0) {
        rho = free_sum / static_cast<double>(n_free);
    } else if (std::isfinite(ub) && std::isfinite(lb)) {
        rho = 0.5 * (ub + lb);
    } else if (std::isfinite(ub)) {
        rho = ub;
    } else if (std::isfinite(lb)) {
        rho = lb;
    }
    return {std::move(alpha), -rho, iter};
}

Matrix rbf_gram(const Matrix& A, const Matrix& B, double gamma) {
    const Vector na = A.rowwise().squaredNorm();
    const Vector nb = B.rowwise().squaredNorm();
    Matrix K = -2.0 * (A * B.transpose());
    K.colwise() += na;
    K.rowwise() += nb.transpose();
    return (-gamma * K.cwiseMax(0.0)).array().exp().matrix();
}

struct Standardization {
    Vector shift;
    Vector scale;
};

Standardization fit_standardization(const Matrix& X, bool enabled) {
    Standardization s;
    s.shift = Vector::Zero(X.cols());
    s.scale = Vector::Ones(X.cols());
    if (!enabled) return s;
    s.shift = X.colwise().mean().transpose();
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        const double sd = std::sqrt((X.col(c).array() - s.shift[c]).square().mean());
        s.scale[c] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Matrix apply_standardization(const Matrix& X, const Vector& shift, const Vector& scale) {
    return ((X.rowwise() - shift.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

// Trains every class-vs-rest machine on a precomputed kernel matrix.
SvmModel train_on_kernel(const Matrix& K, const Matrix& Z, std::span<const int> labels, const SvmParams& params) {
    std::vector<int> classes(labels.begin(), labels.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    require(classes.size() >= 2, ErrorKind::Data, "SVM training needs >= 2 classes");

    const auto n = static_cast<Eigen::Index>(labels.size());
    const bool coincident = n > 0 && (Z.rowwise() - Z.row(0)).cwiseAbs().maxCoeff() == 0.0;

    SvmModel model;
    model.C = params.C;
    model.gamma = params.gamma;
    model.classes = classes;
    model.machines.resize(classes.size());
    parallel_for(classes.size(), params.threads, [&](std::size_t c) {
        std::vector<signed char> y(static_cast<std::size_t>(n));
        for (Eigen::Index t = 0; t < n; ++t) {
            y[static_cast<std::size_t>(t)] = labels[static_cast<std::size_t>(t)] == classes[c] ? 1 : -1;
        }
        const auto sol = solve_smo(K, y, params.C, params.tolerance, params.max_kernel_evaluations);
        BinarySvm& m = model.machines[c];
        m.positive_label = classes[c];
        m.bias = sol.bias;
        m.iterations = sol.iterations;
        m.degenerate = coincident;
        std::vector<double> a;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (sol.alpha[t] > 0.0) {
                m.support.push_back(t);
                a.push_back(sol.alpha[t]);
                m.sign.push_back(y[static_cast<std::size_t>(t)]);
            }
        }
        m.alpha = Eigen::Map<const Vector>(a.data(), static_cast<Eigen::Index>(a.size()));
    });

    // Union of support vectors and a dense coefficient matrix over it.
    std::vector<Eigen::Index> rows;
    for (const auto& m : model.machines) rows.insert(rows.end(), m.support.begin(), m.support.end());
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    std::map<Eigen::Index, Eigen::Index> slot;
    for (std::size_t r = 0; r < rows.size(); ++r) slot[rows[r]] = static_cast<Eigen::Index>(r);

    model.support_vectors.resize(static_cast<Eigen::Index>(rows.size()), Z.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) model.support_vectors.row(static_cast<Eigen::Index>(r)) = Z.row(rows[r]);
    model.coefficients = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(classes.size()));
    model.biases.resize(static_cast<Eigen::Index>(classes.size()));
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto& m = model.machines[c];
        // A degenerate machine keeps only its bias, so its decision is constant.
        for (std::size_t s = 0; s < m.support.size() && !m.degenerate; ++s) {
            model.coefficients(slot[m.support[s]], static_cast<Eigen::Index>(c)) =
                m.alpha[static_cast<Eigen::Index>(s)] * m.sign[s];
        }
        model.biases[static_cast<Eigen::Index>(c)] = m.bias;
        if (m.degenerate || m.support.empty()) model.degenerate = true;
    }
    return model;
}

void check_params(const SvmParams& p) {
    require(p.C > 0.0 && std::isfinite(p.C), ErrorKind::Config, "SVM C must be > 0");
    require(p.gamma > 0.0 && std::isfinite(p.gamma), ErrorKind::Config, "SVM gamma must be > 0");
    require(p.tolerance > 0.0, ErrorKind::Config, "SVM tolerance must be > 0");
}

}  // namespace

SvmModel svm_train(const Matrix& X, std::span<const int> labels, const SvmParams& params) {
    check_params(params);
    require(static_cast<Eigen::Index>(labels.size()) == X.rows(), ErrorKind::Data,
            "label count does not match sample count");
    {
        std::vector<int> distinct(labels.begin(), labels.end());
        std::sort(distinct.begin(), distinct.end());
        require(std::unique(distinct.begin(), distinct.end()) - distinct.begin() >= 2, ErrorKind::Data,
                "SVM training needs >= 2 classes");
    }
    const auto st = fit_standardization(X, params.standardize);
    const Matrix Z = apply_standardization(X, st.shift, st.scale);
    const Matrix K = rbf_gram(Z, Z, params.gamma);
    SvmModel model = train_on_kernel(K, Z, labels, params);
    model.shift = st.shift;
    model.scale = st.scale;
    return model;
}

Matrix svm_decision_values(const SvmModel& model, const Matrix& X) {
    require(X.cols() == model.shift.size(), ErrorKind::Data,
            "dimension mismatch: data has " + std::to_string(X.cols()) + " columns, SVM expects " +
                std::to_string(model.shift.size()));
    Matrix values(X.rows(), static_cast<Eigen::Index>(model.classes.size()));
    values.rowwise() = model.biases.transpose();
    if (model.support_vectors.rows() > 0) {
        const Matrix Z = apply_standardization(X, model.shift, model.scale);
        values += rbf_gram(Z, model.support_vectors, model.gamma) * model.coefficients;
    }
    return values;
}

std::vector<Prediction> svm_predict(const SvmModel& model, const Matrix& X) {
    const Matrix values = svm_decision_values(model, X);
    std::vector<Prediction> out;
    out.reserve(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < values.cols(); ++c) {
            if (values(i, c) > values(i, best)) best = c;
        }
        Prediction p;
        p.probe = static_cast<std::size_t>(i);
        p.label = model.classes[static_cast<std::size_t>(best)];
        p.score = values(i, best);
        std::optional<Eigen::Index> second;
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            if (c != best && (!second || values(i, c) > values(i, *second))) second = c;
        }
        if (second) p.runner_up = model.classes[static_cast<std::size_t>(*second)];
        out.push_back(p);
    }
    return out;
}

std::vector<double> default_c_grid() {
    std::vector<double> g;
    for (int e = -5; e <= 15; e += 2) g.push_back(std::ldexp(1.0, e));
    return g;
}

std::vector<double> default_gamma_grid() {
    std::vector<double> g;
    for (int e = -15; e <= 3; e += 2) g.push_back(std::ldexp(1.0, e));
    return g;
}

GridSearchResult grid_search_svm(const Matrix& X, std::span<const int> labels, std::span<const double> c_grid,
                                 std::span<const double> gamma_grid, std::size_t folds, std::uint64_t seed,
                                 const SvmParams& base) {
    require(!c_grid.empty() && !gamma_grid.empty(), ErrorKind::Config, "SVM grids must be non-empty");
    require(folds >= 2, ErrorKind::Config, "grid search needs >= 2 folds");
    const auto n = static_cast<std::size_t>(X.rows());
    require(labels.size() == n, ErrorKind::Data, "label count does not match sample count");
    require(n >= folds, ErrorKind::Data, "fewer samples than folds");
    for (double c : c_grid) require(c > 0.0, ErrorKind::Config, "C grid values must be > 0");
    for (double g : gamma_grid) require(g > 0.0, ErrorKind::Config, "gamma grid values must be > 0");

    GridSearchResult result;

    // Fold assignment: shuffle within each class, then deal round-robin.
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
    const bool stratify = std::all_of(by_class.begin(), by_class.end(),
                                      [&](const auto& kv) { return kv.second.size() >= folds; });
    std::vector<std::size_t> fold_of(n);
    Rng rng(derive_seed(seed, "svm-folds"));
    if (stratify) {
        std::size_t offset = 0;
        for (auto& [label, members] : by_class) {
            rng.shuffle(std::span<std::size_t>(members));
            for (std::size_t k = 0; k < members.size(); ++k) fold_of[members[k]] = (offset + k) % folds;
            offset += members.size();
        }
    } else {
        result.stratified = false;
        result.warnings.push_back("some class has fewer than " + std::to_string(folds) +
                                  " samples; using unstratified folds");
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t k = 0; k < n; ++k) fold_of[order[k]] = k % folds;
    }

    SvmParams params = base;
    const auto st = fit_standardization(X, params.standardize);
    const Matrix Z = apply_standardization(X, st.shift, st.scale);

    std::vector<GridPoint> table(c_grid.size() * gamma_grid.size());
    for (std::size_t gi = 0; gi < gamma_grid.size(); ++gi) {
        const Matrix K = rbf_gram(Z, Z, gamma_grid[gi]);
        // correct[f][ci]: correct validation predictions of fold f at C index ci.
        std::vector<std::vector<std::size_t>> correct(folds, std::vector<std::size_t>(c_grid.size(), 0));
        parallel_for(folds * c_grid.size(), base.threads, [&](std::size_t job) {
            const std::size_t f = job / c_grid.size();
            const std::size_t ci = job % c_grid.size();
            std::vector<Eigen::Index> tr, va;
            for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? va : tr).push_back(static_cast<Eigen::Index>(i));
            std::vector<int> tr_labels;
            for (auto i : tr) tr_labels.push_back(labels[static_cast<std::size_t>(i)]);
            std::vector<int> distinct = tr_labels;
            std::sort(distinct.begin(), distinct.end());
            if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2) return;

            SvmParams p = params;
            p.C = c_grid[ci];
            p.gamma = gamma_grid[gi];
            p.threads = 1;
            const Matrix Ktr = K(tr, tr);
            const Matrix Ztr = Z(tr, Eigen::all);
            const SvmModel m = train_on_kernel(Ktr, Ztr, tr_labels, p);
            // Validation decision values straight from the cached kernel.
            std::size_t ok = 0;
            for (auto v : va) {
                double best_val = -std::numeric_limits<double>::infinity();
                int best_label = m.classes.front();
                for (std::size_t c = 0; c < m.machines.size(); ++c) {
                    const auto& bm = m.machines[c];
                    double val = bm.bias;
                    for (std::size_t s = 0; s < bm.support.size(); ++s) {
                        val += bm.alpha[static_cast<Eigen::Index>(s)] * bm.sign[s] *
                               K(v, tr[static_cast<std::size_t>(bm.support[s])]);
                    }
                    if (val > best_val) {
                        best_val = val;
                        best_label = bm.positive_label;
                    }
                }
                if (best_label == labels[static_cast<std::size_t>(v)]) ++ok;
            }
            correct[f][ci] = ok;
        });
        for (std::size_t ci = 0; ci < c_grid.size(); ++ci) {
            std::size_t ok = 0;
            for (std::size_t f = 0; f < folds; ++f) ok += correct[f][ci];
            table[ci * gamma_grid.size() + gi] = {c_grid[ci], gamma_grid[gi],
                                                  100.0 * static_cast<double>(ok) / static_cast<double>(n)};
        }
    }

    // Ascending (C, gamma) scan with a strict improvement test gives the tie rule.
    std::vector<std::size_t> order(table.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (table[a].C != table[b].C) return table[a].C < table[b].C;
        return table[a].gamma < table[b].gamma;
    });
    const GridPoint* best = nullptr;
    for (auto i : order) {
        if (best == nullptr || table[i].accuracy > best->accuracy) best = &table[i];
    }
    result.C = best->C;
    result.gamma = best->gamma;
    result.accuracy = best->accuracy;
    result.table = std::move(table);
    return result;
}

}  // namespace facebench
