#include "relaxsort/properties.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "relaxsort/dknn.hpp"
#include "relaxsort/grad.hpp"
#include "relaxsort/harness.hpp"
#include "relaxsort/ops.hpp"
#include "relaxsort/stochastic.hpp"

namespace relaxsort {

namespace {

using detail::derive_seed;
using detail::PortableRng;
using detail::sample_min_gap_scores;

struct Collector {
    std::vector<PropertyResult>& out;
    std::string suite;

    void add(const std::string& name, bool pass, double worst, double bound) {
        std::ostringstream detail;
        detail << "worst " << worst << " vs bound " << bound;
        out.push_back({suite, name, pass, detail.str()});
    }
    void add_metric(const std::string& name, double worst, double bound) {
        add(name, worst <= bound, worst, bound);
    }
};

Vector random_scores(PortableRng& rng, int n, double lo = -2.0, double hi = 2.0) {
    Vector s(n);
    for (int i = 0; i < n; ++i) s[i] = rng.uniform(lo, hi);
    return s;
}

void urs_suite(std::vector<PropertyResult>& out, std::uint64_t seed) {
    Collector c{out, "urs"};
    for (Operator op : {Operator::SoftSort, Operator::NeuralSort}) {
        for (double power : {1.0, 2.0}) {
            if (op == Operator::NeuralSort && power != 1.0) continue;
            double worst_row_sum = 0.0;
            bool nonneg = true, argmax_ok = true;
            PortableRng rng(derive_seed(seed, 1));
            for (int n : {2, 5, 10, 50}) {
                for (double tau : {0.1, 1.0, 100.0}) {
                    for (int t = 0; t < 100; ++t) {
                        const Vector s = random_scores(rng, n);
                        const Matrix p =
                            relaxed_sort(op, s, Temperature(tau), SemiMetric{power});
                        nonneg = nonneg && (p.array() >= 0.0).all();
                        for (int i = 0; i < n; ++i)
                            worst_row_sum =
                                std::max(worst_row_sum, std::abs(p.row(i).sum() - 1.0));
                        try {
                            argmax_ok =
                                argmax_ok && (hard_project(p) == argsort_desc(s));
                        } catch (const InvalidInput&) {
                            argmax_ok = false;
                        }
                    }
                }
            }
            const std::string tag =
                operator_name(op) + (op == Operator::SoftSort
                                         ? " p=" + std::to_string(int(power))
                                         : "");
            c.add("non-negativity " + tag, nonneg, nonneg ? 0.0 : 1.0, 0.0);
            c.add_metric("row affinity " + tag, worst_row_sum, 1e-9);
            c.add("argmax permutation " + tag, argmax_ok, argmax_ok ? 0.0 : 1.0, 0.0);
        }
    }
}

void limit_suite(std::vector<PropertyResult>& out, std::uint64_t seed) {
    Collector c{out, "limit"};
    for (Operator op : {Operator::SoftSort, Operator::NeuralSort}) {
        PortableRng rng(derive_seed(seed, 2));
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            const Vector s = sample_min_gap_scores(rng, 8, 0.1);
            const Matrix p = relaxed_sort(op, s, Temperature(1e-3), SemiMetric::l1());
            const Matrix hard = perm_matrix(argsort_desc(s));
            worst = std::max(worst, (p - hard).cwiseAbs().maxCoeff());
        }
        c.add_metric("hard limit " + operator_name(op), worst, 1e-6);
    }
}

void equivariance_suite(std::vector<PropertyResult>& out, std::uint64_t seed) {
    Collector c{out, "equivariance"};
    for (Operator op : {Operator::SoftSort, Operator::NeuralSort}) {
        PortableRng rng(derive_seed(seed, 3));
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            const int n = 2 + rng.index(19);
            const Vector s = random_scores(rng, n);
            const Temperature tau(0.5);
            const Matrix lhs = relaxed_sort(op, s, tau, SemiMetric::l1());
            const Matrix rhs = relaxed_sort(op, sort_desc(s), tau, SemiMetric::l1()) *
                               perm_matrix(argsort_desc(s));
            worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
        }
        c.add_metric("sort-then-permute " + operator_name(op), worst, 1e-12);
    }
}

void rows_suite(std::vector<PropertyResult>& out, std::uint64_t seed) {
    Collector c{out, "rows"};
    PortableRng rng(derive_seed(seed, 4));

    double worst_first = 0.0;
    for (int t = 0; t < 50; ++t) {
        const Vector s = random_scores(rng, 6);
        const Matrix p = soft_sort(s, Temperature(1.0), SemiMetric::l1());
        Matrix srow(1, s.size());
        srow.row(0) = s.transpose();
        worst_first = std::max(
            worst_first,
            (p.row(0) - row_softmax(srow, Temperature(1.0)).row(0)).cwiseAbs().maxCoeff());
    }
    c.add_metric("first row is softmax(s), p=1", worst_first, 1e-12);

    // rows proportional to Laplace (p=1) and Gaussian (p=2) densities; the
    // oracle rebuilds the normalizing constant directly, with no max shift
    for (double power : {1.0, 2.0}) {
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            const Vector s = random_scores(rng, 8);
            const double tau = 0.7;
            const Vector sorted = sort_desc(s);
            const Matrix p = soft_sort(s, Temperature(tau), SemiMetric{power});
            for (int i = 0; i < 8; ++i) {
                double z = 0.0;
                for (int j = 0; j < 8; ++j)
                    z += std::exp(-SemiMetric{power}(sorted[i], s[j]) / tau);
                for (int j = 0; j < 8; ++j) {
                    const double expected =
                        std::exp(-SemiMetric{power}(sorted[i], s[j]) / tau) / z;
                    worst = std::max(worst,
                                     std::abs(p(i, j) - expected) / std::abs(expected));
                }
            }
        }
        c.add_metric(power == 1.0 ? "laplace rows p=1" : "gaussian rows p=2", worst, 1e-9);
    }

    // neural_sort on equally spaced s_k = b - a k: rows are Gaussian with
    // variance a * tau
    {
        const int n = 8;
        const double a = 1.0, b = 0.0, tau = 2.0;
        Vector s(n);
        for (int k = 0; k < n; ++k) s[k] = b - a * (k + 1);
        const Matrix p = neural_sort(s, Temperature(tau));
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            double z = 0.0;
            for (int j = 0; j < n; ++j)
                z += std::exp(-(s[i] - s[j]) * (s[i] - s[j]) / (a * tau));
            for (int j = 0; j < n; ++j) {
                const double expected =
                    std::exp(-(s[i] - s[j]) * (s[i] - s[j]) / (a * tau)) / z;
                worst = std::max(worst, std::abs(p(i, j) - expected) / expected);
            }
        }
        c.add_metric("neuralsort gaussian rows, equal spacing", worst, 1e-9);
    }

    {
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            const Vector s = random_scores(rng, 7);
            const Matrix base = soft_sort(s, Temperature(1.0), SemiMetric::l1());
            const Matrix shifted =
                soft_sort(s.array() + 0.37, Temperature(1.0), SemiMetric::l1());
            worst = std::max(worst, (base - shifted).cwiseAbs().maxCoeff());
        }
        c.add_metric("shift invariance p=1", worst, 1e-12);
    }
}

void grad_suite(std::vector<PropertyResult>& out, std::uint64_t seed) {
    Collector c{out, "grad"};
    for (Operator op : {Operator::SoftSort, Operator::NeuralSort}) {
        for (double power : {1.0, 2.0}) {
            if (op == Operator::NeuralSort && power != 1.0) continue;
            double worst = 0.0;
            for (int n : {2, 5, 10}) {
                for (double tau : {0.1, 1.0, 10.0}) {
                    const GradCheckReport rep = gradcheck(
                        op, SemiMetric{power}, n, 20, 1e-5, derive_seed(seed, 5), tau);
                    worst = std::max(worst, rep.max_rel_err);
                }
            }
            const std::string tag = operator_name(op) +
                                    (op == Operator::SoftSort
                                         ? " p=" + std::to_string(int(power))
                                         : "");
            c.add_metric("vjp vs finite differences " + tag, worst, 1e-5);
        }
    }

    PortableRng rng(derive_seed(seed, 6));
    for (Operator op : {Operator::SoftSort, Operator::NeuralSort}) {
        double worst_rowsum = 0.0, worst_linear = 0.0;
        for (int t = 0; t < 20; ++t) {
            const Vector s = sample_min_gap_scores(rng, 8, 0.05);
            const Temperature tau(1.0);
            const Matrix ones = Matrix::Ones(8, 8);
            worst_rowsum = std::max(
                worst_rowsum,
                relaxed_sort_vjp(op, s, tau, SemiMetric::l1(), ones).cwiseAbs().maxCoeff());

            Matrix u1(8, 8), u2(8, 8);
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j) {
                    u1(i, j) = rng.normal();
                    u2(i, j) = rng.normal();
                }
            const double alpha = 1.3, beta = -0.4;
            const Vector combined =
                relaxed_sort_vjp(op, s, tau, SemiMetric::l1(), alpha * u1 + beta * u2);
            const Vector split = alpha * relaxed_sort_vjp(op, s, tau, SemiMetric::l1(), u1) +
                                 beta * relaxed_sort_vjp(op, s, tau, SemiMetric::l1(), u2);
            worst_linear = std::max(worst_linear, (combined - split).cwiseAbs().maxCoeff());
        }
        c.add_metric("row-sum conservation " + operator_name(op), worst_rowsum, 1e-10);
        c.add_metric("vjp linearity " + operator_name(op), worst_linear, 1e-10);
    }

    // scale invariance of soft_sort p=1 under (c s, c tau) and the 1/c
    // gradient relation
    {
        double worst_fwd = 0.0, worst_grad = 0.0;
        for (int t = 0; t < 20; ++t) {
            const Vector s = sample_min_gap_scores(rng, 6, 0.05);
            const double scale = 0.25 + 3.0 * rng.uniform();
            Matrix u(6, 6);
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) u(i, j) = rng.normal();
            const Matrix base = soft_sort(s, Temperature(1.0), SemiMetric::l1());
            const Matrix scaled =
                soft_sort(scale * s, Temperature(scale), SemiMetric::l1());
            worst_fwd = std::max(worst_fwd, (base - scaled).cwiseAbs().maxCoeff());
            const Vector g1 = soft_sort_vjp(s, Temperature(1.0), SemiMetric::l1(), u);
            const Vector g2 =
                soft_sort_vjp(scale * s, Temperature(scale), SemiMetric::l1(), u);
            worst_grad =
                std::max(worst_grad, (g1 / scale - g2).cwiseAbs().maxCoeff());
        }
        c.add_metric("scaling forward (c s, c tau)", worst_fwd, 1e-12);
        c.add_metric("scaling gradient factor 1/c", worst_grad, 1e-10);
    }
}

void runtime_suite(std::vector<PropertyResult>& out, std::uint64_t seed) {
    Collector c{out, "runtime"};
    PortableRng rng(derive_seed(seed, 7));
    auto time_logits = [&](int n) {
        const Vector s = random_scores(rng, n);
        double best = 1e300;
        for (int rep = 0; rep < 3; ++rep) {
            const auto start = std::chrono::steady_clock::now();
            volatile double sink = neural_sort_logits(s).sum();
            (void)sink;
            best = std::min(best, std::chrono::duration<double>(
                                      std::chrono::steady_clock::now() - start)
                                      .count());
        }
        return best;
    };
    const double ratio = time_logits(2000) / time_logits(500);
    c.add_metric("neural_sort_logits quadratic scaling (t2000/t500)", ratio, 25.0);
}

void stochastic_suite(std::vector<PropertyResult>& out, std::uint64_t seed) {
    Collector c{out, "stochastic"};
    PortableRng rng(derive_seed(seed, 8));
    {
        bool all_urs = true;
        for (Operator op : {Operator::SoftSort, Operator::NeuralSort}) {
            const Vector s = random_scores(rng, 5);
            const auto samples = stochastic_relaxed_sort(
                s, Temperature(1.0), SemiMetric::l1(), 20, RngSeed{seed}, op);
            for (const Matrix& p : samples) all_urs = all_urs && check_urs(p).empty();
        }
        c.add("every sample is URS", all_urs, all_urs ? 0.0 : 1.0, 0.0);
    }
    {
        const Vector s = random_scores(rng, 4);
        const auto a = stochastic_relaxed_sort(s, Temperature(1.0), SemiMetric::l1(), 5,
                                               RngSeed{seed + 9}, Operator::SoftSort);
        const auto b = stochastic_relaxed_sort(s, Temperature(1.0), SemiMetric::l1(), 5,
                                               RngSeed{seed + 9}, Operator::SoftSort);
        bool identical = true;
        for (std::size_t k = 0; k < a.size(); ++k) identical = identical && a[k] == b[k];
        c.add("seed determinism (bit-identical)", identical, identical ? 0.0 : 1.0, 0.0);
    }
    {
        // Gumbel-max: argmax(s + z) frequencies match softmax(s) within 3 SE
        const Vector s = (Vector(3) << 0.2, 1.1, -0.4).finished();
        Matrix srow(1, 3);
        srow.row(0) = s.transpose();
        const Matrix probs = row_softmax(srow, Temperature(1.0));
        const int trials = 200000;
        const Matrix z = sample_gumbel(trials, 3, RngSeed{derive_seed(seed, 9)});
        Vector counts = Vector::Zero(3);
        for (int t = 0; t < trials; ++t) {
            Eigen::Index j;
            (s.transpose() + z.row(t)).maxCoeff(&j);
            counts[j] += 1.0;
        }
        double worst_sigmas = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double p = probs(0, j);
            const double se = std::sqrt(p * (1 - p) / trials);
            worst_sigmas =
                std::max(worst_sigmas, std::abs(counts[j] / trials - p) / se);
        }
        c.add_metric("gumbel-max matches softmax (std errors)", worst_sigmas, 3.0);
    }
}

void dknn_suite(std::vector<PropertyResult>& out, std::uint64_t seed) {
    Collector c{out, "dknn"};
    PortableRng rng(derive_seed(seed, 10));

    auto random_episode = [&](int n, int dim, int classes) {
        Episode ep;
        ep.query = random_scores(rng, dim, -1.0, 1.0);
        ep.candidates.resize(n, dim);
        ep.labels.resize(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < dim; ++j) ep.candidates(i, j) = rng.uniform(-1.0, 1.0);
            ep.labels[i] = rng.index(classes);
        }
        ep.query_label = ep.labels[rng.index(n)];
        return ep;
    };

    {
        double worst = 0.0;
        for (int t = 0; t < 25; ++t) {
            Episode ep = random_episode(8, 3, 3);
            const Embedding phi = Embedding::identity(3);
            const double base = dknn_prob(ep, phi, 3, Temperature(1.0));
            // shuffle candidate order
            Episode shuffled = ep;
            std::vector<int> order(8);
            for (int i = 0; i < 8; ++i) order[i] = i;
            for (int i = 7; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
            for (int i = 0; i < 8; ++i) {
                shuffled.candidates.row(i) = ep.candidates.row(order[i]);
                shuffled.labels[i] = ep.labels[order[i]];
            }
            worst = std::max(
                worst, std::abs(base - dknn_prob(shuffled, phi, 3, Temperature(1.0))));
        }
        c.add_metric("candidate-order invariance", worst, 1e-12);
    }
    {
        double worst = 0.0;
        for (int t = 0; t < 25; ++t) {
            Episode ep = random_episode(10, 3, 4);
            const Embedding phi = Embedding::identity(3);
            double total = 0.0;
            for (int cls = 0; cls < 4; ++cls) {
                ep.query_label = cls;
                total += dknn_prob(ep, phi, 3, Temperature(1.0));
            }
            worst = std::max(worst, std::abs(total - 1.0));
        }
        c.add_metric("class probabilities partition to 1", worst, 1e-9);
    }
    {
        // k=1, tau=2, p=1, unit-norm embedding: attention-style identity
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            Episode ep = random_episode(10, 4, 3);
            Matrix w(4, 4);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) w(i, j) = rng.normal();
            const Embedding phi = Embedding::linear(w).with_unit_norm();
            const double prob = dknn_prob(ep, phi, 1, Temperature(2.0), SemiMetric::l1());
            double num = 0.0, den = 0.0;
            const Vector q = phi.apply(ep.query);
            for (int i = 0; i < 10; ++i) {
                const double e =
                    std::exp(q.dot(phi.apply(ep.candidates.row(i).transpose())));
                den += e;
                if (ep.labels[i] == ep.query_label) num += e;
            }
            worst = std::max(worst, std::abs(prob - num / den));
        }
        c.add_metric("matching identity k=1 tau=2 p=1", worst, 1e-10);
    }
}

void loss_suite(std::vector<PropertyResult>& out, std::uint64_t seed) {
    Collector c{out, "loss"};
    PortableRng rng(derive_seed(seed, 11));
    {
        bool ok = true;
        double worst_equal = 0.0;
        for (int t = 0; t < 100; ++t) {
            const Vector s = random_scores(rng, 6);
            const Matrix p = soft_sort(s, Temperature(1.0), SemiMetric::l1());
            ok = ok && diag_cross_entropy(p) >= 0.0;
            worst_equal = std::max(
                worst_equal,
                std::abs(diag_cross_entropy(p) -
                         perm_cross_entropy(p, Matrix::Identity(6, 6))));
        }
        ok = ok && diag_cross_entropy(Matrix::Identity(4, 4)) == 0.0;
        c.add("diag cross-entropy >= 0, 0 iff identity diagonal", ok, ok ? 0.0 : 1.0, 0.0);
        c.add_metric("diag equals perm cross-entropy vs identity", worst_equal, 1e-12);
    }
    {
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            const Vector s = random_scores(rng, 6);
            const Matrix p = soft_sort(s, Temperature(1.0), SemiMetric::l1());
            const Matrix p_true = perm_matrix(argsort_desc(s));
            Permutation q(6);
            for (int i = 0; i < 6; ++i) q[i] = i;
            for (int i = 5; i > 0; --i) std::swap(q[i], q[rng.index(i + 1)]);
            const Matrix qm = perm_matrix(q);
            worst = std::max(worst, std::abs(perm_cross_entropy(p, p_true) -
                                             perm_cross_entropy(p * qm, p_true * qm)));
        }
        c.add_metric("perm cross-entropy permutation-consistency", worst, 1e-12);
    }
}

}  // namespace

std::vector<std::string> property_suites() {
    return {"urs",     "limit",      "equivariance", "rows", "grad",
            "runtime", "stochastic", "dknn",         "loss"};
}

std::vector<PropertyResult> run_properties(const std::string& suite, std::uint64_t seed) {
    static const std::vector<
        std::pair<std::string, void (*)(std::vector<PropertyResult>&, std::uint64_t)>>
        suites = {{"urs", urs_suite},           {"limit", limit_suite},
                  {"equivariance", equivariance_suite},
                  {"rows", rows_suite},         {"grad", grad_suite},
                  {"runtime", runtime_suite},   {"stochastic", stochastic_suite},
                  {"dknn", dknn_suite},         {"loss", loss_suite}};
    std::vector<PropertyResult> out;
    bool matched = false;
    for (const auto& [name, fn] : suites) {
        if (suite == "all" || suite == name) {
            fn(out, seed);
            matched = true;
        }
    }
    if (!matched) throw InvalidInput("unknown property suite: " + suite);
    return out;
}

}  // namespace relaxsort
