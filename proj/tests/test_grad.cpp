#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "relaxsort/grad.hpp"
#include "relaxsort/stochastic.hpp"

using namespace relaxsort;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST_CASE("constant upstream gives zero gradient (rows sum to one)") {
    detail::PortableRng rng(21);
    for (Operator op : {Operator::SoftSort, Operator::NeuralSort}) {
        for (int t = 0; t < 20; ++t) {
            const Vector s = detail::sample_min_gap_scores(rng, 7, 0.05);
            const Matrix ones = Matrix::Constant(7, 7, 3.7);
            const Vector g = relaxed_sort_vjp(op, s, Temperature(0.7), SemiMetric::l1(), ones);
            CHECK(g.cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("analytic VJP matches finite differences on one-hot upstreams") {
    detail::PortableRng rng(22);
    for (Operator op : {Operator::SoftSort, Operator::NeuralSort}) {
        for (double power : {1.0, 2.0}) {
            if (op == Operator::NeuralSort && power != 1.0) continue;
            const SemiMetric d{power};
            for (int t = 0; t < 10; ++t) {
                const int n = 2 + rng.index(5);
                const Vector s = detail::sample_min_gap_scores(rng, n, 0.05);
                Matrix upstream = Matrix::Zero(n, n);
                upstream(rng.index(n), rng.index(n)) = 1.0;
                const Vector analytic = relaxed_sort_vjp(op, s, Temperature(1.0), d, upstream);
                const Vector numeric = finite_diff_vjp(op, s, Temperature(1.0), d, upstream);
                CHECK((analytic - numeric).cwiseAbs().maxCoeff() <= 1e-5);
            }
        }
    }
}

TEST_CASE("single-element gradient is zero") {
    const Matrix up = Matrix::Constant(1, 1, 2.0);
    CHECK(soft_sort_vjp(vec({5}), Temperature(1.0), SemiMetric::l1(), up)[0] == 0.0);
    CHECK(neural_sort_vjp(vec({5}), Temperature(1.0), up)[0] == 0.0);
}

TEST_CASE("tied scores make the gradient ill-defined") {
    const Matrix up = Matrix::Identity(3, 3);
    CHECK_THROWS_AS(soft_sort_vjp(vec({1, 1, 2}), Temperature(1.0), SemiMetric::l1(), up),
                    IllDefinedGradient);
    CHECK_THROWS_AS(neural_sort_vjp(vec({1, 2, 2}), Temperature(1.0), up),
                    IllDefinedGradient);
}

TEST_CASE("zero upstream gives zero gradient") {
    const Vector s = vec({2, 5, 4, 1});
    const Vector g =
        soft_sort_vjp(s, Temperature(0.5), SemiMetric::l2(), Matrix::Zero(4, 4));
    CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("softmax-layer backward agrees with its closed-form Jacobian") {
    // With fixed logits L, dP(i,j)/dL(i,k) = (P(i,j)(delta_jk - P(i,k)))/tau.
    // Feed both operators an upstream and compare the logit-space part of the
    // VJP reconstructed through finite differences of row_softmax.
    detail::PortableRng rng(23);
    const double tau = 0.8;
    for (int t = 0; t < 10; ++t) {
        const int n = 5;
        Matrix logits(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) logits(i, j) = rng.uniform(-2, 2);
        Matrix upstream(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) upstream(i, j) = rng.normal();

        const Matrix p = row_softmax(logits, Temperature(tau));
        Matrix analytic(n, n);
        for (int i = 0; i < n; ++i) {
            const double dot = upstream.row(i).dot(p.row(i));
            for (int k = 0; k < n; ++k)
                analytic(i, k) = p(i, k) * (upstream(i, k) - dot) / tau;
        }

        const double h = 1e-6;
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                Matrix lp = logits, lm = logits;
                lp(i, k) += h;
                lm(i, k) -= h;
                const double numeric =
                    ((row_softmax(lp, Temperature(tau)) - row_softmax(lm, Temperature(tau)))
                         .cwiseProduct(upstream))
                        .sum() /
                    (2 * h);
                CHECK(std::abs(analytic(i, k) - numeric) <= 1e-7);
            }
    }
}

TEST_CASE("finite differences converge as h shrinks (Richardson check)") {
    detail::PortableRng rng(24);
    const Vector s = detail::sample_min_gap_scores(rng, 6, 0.1);
    Matrix upstream(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) upstream(i, j) = rng.normal();
    for (Operator op : {Operator::SoftSort, Operator::NeuralSort}) {
        const Vector coarse =
            finite_diff_vjp(op, s, Temperature(1.0), SemiMetric::l1(), upstream, 1e-4);
        const Vector fine =
            finite_diff_vjp(op, s, Temperature(1.0), SemiMetric::l1(), upstream, 5e-5);
        CHECK((coarse - fine).cwiseAbs().maxCoeff() <= 1e-7);
    }
}

TEST_CASE("finite differences refuse steps that can cross a tie") {
    const Vector s = vec({0.0, 1e-7});  // gap < 10h at h = 1e-6
    CHECK_THROWS_AS(finite_diff_vjp(Operator::SoftSort, s, Temperature(1.0),
                                    SemiMetric::l1(), Matrix::Identity(2, 2)),
                    IllDefinedGradient);
}

TEST_CASE("gradcheck passes at the documented tolerance and fails at zero") {
    const GradCheckReport ok =
        gradcheck(Operator::SoftSort, SemiMetric::l2(), 8, 20, 1e-5, 42);
    CHECK(ok.pass);
    CHECK(ok.max_rel_err <= 1e-5);
    CHECK(ok.per_coordinate.size() == 8);

    const GradCheckReport bad =
        gradcheck(Operator::NeuralSort, SemiMetric::l1(), 8, 5, 0.0, 42);
    CHECK_FALSE(bad.pass);
}

TEST_CASE("gradcheck is deterministic and reports parseable JSON") {
    const GradCheckReport a =
        gradcheck(Operator::NeuralSort, SemiMetric::l1(), 6, 10, 1e-5, 7);
    const GradCheckReport b =
        gradcheck(Operator::NeuralSort, SemiMetric::l1(), 6, 10, 1e-5, 7);
    CHECK(a.max_rel_err == b.max_rel_err);
    CHECK(a.max_abs_err == b.max_abs_err);

    const auto j = nlohmann::json::parse(a.to_json());
    CHECK(j.at("op") == "neuralsort");
    CHECK(j.at("n") == 6);
    CHECK(j.at("trials") == 10);
    CHECK(j.at("pass") == true);
    CHECK(j.at("per_coordinate").size() == 6);
}
