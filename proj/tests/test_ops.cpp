#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "relaxsort/ops.hpp"
#include "relaxsort/stochastic.hpp"

using namespace relaxsort;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

// Oracle: the unique stable descending ordering, found by exhaustive search
// over all permutations (n <= 8).
Permutation brute_force_stable_argsort(const Vector& s) {
    const int n = static_cast<int>(s.size());
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    do {
        bool ok = true;
        for (int i = 0; i + 1 < n && ok; ++i) {
            if (s[p[i]] < s[p[i + 1]]) ok = false;
            if (s[p[i]] == s[p[i + 1]] && p[i] > p[i + 1]) ok = false;
        }
        if (ok) {
            Permutation out(n);
            for (int i = 0; i < n; ++i) out[i] = p[i];
            return out;
        }
    } while (std::next_permutation(p.begin(), p.end()));
    throw std::logic_error("no stable ordering found");
}

}  // namespace

TEST_CASE("argsort_desc matches the worked example") {
    const Permutation p = argsort_desc(vec({9, 1, 5, 2}));
    CHECK(p[0] == 0);  // [1,3,4,2] one-based
    CHECK(p[1] == 2);
    CHECK(p[2] == 3);
    CHECK(p[3] == 1);
}

TEST_CASE("argsort_desc singleton and stability") {
    CHECK(argsort_desc(vec({7}))[0] == 0);
    const Permutation p = argsort_desc(vec({3, 3, 1}));
    CHECK(p[0] == 0);
    CHECK(p[1] == 1);
    CHECK(p[2] == 2);
}

TEST_CASE("argsort_desc agrees with the exhaustive stable oracle") {
    detail::PortableRng rng(11);
    for (int t = 0; t < 200; ++t) {
        const int n = 2 + rng.index(5);
        Vector s(n);
        for (int i = 0; i < n; ++i) s[i] = rng.index(4);  // small range forces ties
        CHECK(argsort_desc(s) == brute_force_stable_argsort(s));
    }
}

TEST_CASE("argsort_desc rejects bad input") {
    CHECK_THROWS_AS(argsort_desc(Vector()), InvalidInput);
    Vector bad = vec({1, 2});
    bad[0] = std::nan("");
    CHECK_THROWS_AS(argsort_desc(bad), InvalidInput);
}

TEST_CASE("sort_desc basics and matrix-product definition") {
    CHECK(sort_desc(vec({2, 5, 4})) == vec({5, 4, 2}));
    CHECK(sort_desc(vec({9, 1, 5, 2})) == vec({9, 5, 2, 1}));

    detail::PortableRng rng(12);
    for (int t = 0; t < 20; ++t) {
        Vector s(8);
        for (int i = 0; i < 8; ++i) s[i] = rng.uniform(-3, 3);
        const Vector via_matrix = perm_matrix(argsort_desc(s)) * s;
        CHECK(sort_desc(s) == via_matrix);
    }
}

TEST_CASE("perm_matrix one-hot layout") {
    CHECK(perm_matrix(argsort_desc(vec({1, 2, 3}))).row(0)[2] == 1.0);
    const Matrix id = perm_matrix([] {
        Permutation p(3);
        p << 0, 1, 2;
        return p;
    }());
    CHECK(id == Matrix::Identity(3, 3));

    Permutation p(4);
    p << 0, 2, 3, 1;  // [1,3,4,2] one-based
    const Matrix m = perm_matrix(p);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(1, 2) == 1.0);
    CHECK(m(2, 3) == 1.0);
    CHECK(m(3, 1) == 1.0);
    CHECK(m.sum() == 4.0);

    Permutation bad(3);
    bad << 0, 0, 2;
    CHECK_THROWS_AS(perm_matrix(bad), InvalidInput);
}

TEST_CASE("perm_matrix recovers the permutation by multiplication") {
    detail::PortableRng rng(13);
    for (int t = 0; t < 100; ++t) {
        const int n = 2 + rng.index(9);
        Vector s(n);
        for (int i = 0; i < n; ++i) s[i] = rng.uniform(0, 1);
        const Permutation p = argsort_desc(s);
        const Vector indices = Vector::LinSpaced(n, 0, n - 1);
        const Vector recovered = perm_matrix(p) * indices;
        for (int i = 0; i < n; ++i) CHECK(recovered[i] == doctest::Approx(p[i]));
    }
}

TEST_CASE("row_softmax constant rows, worked row, shift invariance") {
    const Matrix constant = Matrix::Constant(3, 4, 2.5);
    const Matrix p = row_softmax(constant, Temperature(1.0));
    CHECK((p.array() - 0.25).abs().maxCoeff() < 1e-15);

    Matrix row(1, 3);
    row << -3, 0, -1;
    const Matrix q = row_softmax(row, Temperature(1.0));
    CHECK(q(0, 0) == doctest::Approx(0.0351).epsilon(0).scale(0).epsilon(1e-3));
    CHECK(q(0, 1) == doctest::Approx(0.7054).epsilon(1e-3));
    CHECK(q(0, 2) == doctest::Approx(0.2595).epsilon(1e-3));

    Matrix shifted = row;
    shifted.array() += 17.25;
    CHECK((row_softmax(shifted, Temperature(1.0)) - q).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("soft_sort reproduces the three worked rows") {
    const Matrix p = soft_sort(vec({2, 5, 4}), Temperature(1.0));
    const double expected[3][3] = {
        {0.04, 0.70, 0.26}, {0.09, 0.24, 0.67}, {0.85, 0.04, 0.11}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(p(i, j) - expected[i][j]) < 0.01);
}

TEST_CASE("soft_sort degenerate and low-temperature limit") {
    const Matrix one = soft_sort(vec({42}), Temperature(1.0));
    CHECK(one(0, 0) == 1.0);

    detail::PortableRng rng(14);
    for (int t = 0; t < 50; ++t) {
        const Vector s = detail::sample_min_gap_scores(rng, 6, 0.1);
        const Matrix p = soft_sort(s, Temperature(1e-3));
        const Matrix hard = perm_matrix(argsort_desc(s));
        CHECK((p - hard).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("neural_sort_logits equals the symbolic 4x4 matrix") {
    // sorted region, s = [4,3,2,1]; rows after 0-centering the diagonal
    const Matrix logits = neural_sort_logits(vec({4, 3, 2, 1}));
    const double expected[4][4] = {{0, -1, -4, -9},
                                   {-1, 0, -1, -4},
                                   {-4, -1, 0, -1},
                                   {-9, -4, -1, 0}};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(logits(i, j) - logits(i, i) == doctest::Approx(expected[i][j]));
}

TEST_CASE("neural_sort_logits singleton and argmax oracle") {
    const Matrix one = neural_sort_logits(vec({3.5}));
    CHECK(one.rows() == 1);

    detail::PortableRng rng(15);
    for (int t = 0; t < 1000; ++t) {
        const int n = 2 + rng.index(11);
        Vector s(n);
        for (int i = 0; i < n; ++i) s[i] = rng.uniform(-2, 2);
        const Matrix logits = neural_sort_logits(s);
        const Permutation truth = argsort_desc(s);
        for (int i = 0; i < n; ++i) {
            Eigen::Index j;
            logits.row(i).maxCoeff(&j);
            CHECK(j == truth[i]);
        }
    }
}

TEST_CASE("neural_sort limit and gaussian rows on equal spacing") {
    detail::PortableRng rng(16);
    for (int t = 0; t < 50; ++t) {
        const Vector s = detail::sample_min_gap_scores(rng, 6, 0.1);
        const Matrix p = neural_sort(s, Temperature(1e-3));
        CHECK((p - perm_matrix(argsort_desc(s))).cwiseAbs().maxCoeff() <= 1e-6);
    }

    const int n = 8;
    const double a = 1.0, b = 0.0, tau = 2.0;
    Vector s(n);
    for (int k = 0; k < n; ++k) s[k] = b - a * (k + 1);
    const Matrix p = neural_sort(s, Temperature(tau));
    for (int i = 0; i < n; ++i) {
        double z = 0.0;
        for (int j = 0; j < n; ++j)
            z += std::exp(-(s[i] - s[j]) * (s[i] - s[j]) / (a * tau));
        for (int j = 0; j < n; ++j) {
            const double gauss = std::exp(-(s[i] - s[j]) * (s[i] - s[j]) / (a * tau)) / z;
            CHECK(std::abs(p(i, j) - gauss) / gauss <= 1e-9);
        }
    }

    CHECK(neural_sort(vec({9}), Temperature(1.0))(0, 0) == 1.0);
}

TEST_CASE("hard_project basics and argsort agreement") {
    Permutation ident(3);
    ident << 0, 1, 2;
    CHECK(hard_project(Matrix::Identity(3, 3)) == ident);

    Matrix fig(3, 3);
    fig << 0.04, 0.70, 0.26, 0.09, 0.24, 0.67, 0.85, 0.04, 0.11;
    const Permutation p = hard_project(fig);
    CHECK(p[0] == 1);  // [2,3,1] one-based
    CHECK(p[1] == 2);
    CHECK(p[2] == 0);

    detail::PortableRng rng(17);
    for (int t = 0; t < 1000; ++t) {
        const int n = 2 + rng.index(9);
        Vector s(n);
        for (int i = 0; i < n; ++i) s[i] = rng.uniform(-1, 1);
        for (double tau : {0.1, 1.0, 100.0})
            CHECK(hard_project(soft_sort(s, Temperature(tau))) == argsort_desc(s));
    }

    Matrix collide(2, 2);
    collide << 0.9, 0.1, 0.8, 0.2;
    CHECK_THROWS_AS(hard_project(collide), InvalidInput);
}

TEST_CASE("batched operators equal the unbatched loop") {
    detail::PortableRng rng(18);
    ScoreBatch batch;
    batch.rows.resize(20, 100);
    for (int b = 0; b < 20; ++b)
        for (int j = 0; j < 100; ++j) batch.rows(b, j) = rng.uniform(-1, 1);

    const auto soft = soft_sort_batch(batch, Temperature(1.0));
    const auto neural = neural_sort_batch(batch, Temperature(1.0));
    REQUIRE(soft.size() == 20);
    for (int b = 0; b < 20; ++b) {
        const Vector row = batch.rows.row(b).transpose();
        CHECK(soft[b] == soft_sort(row, Temperature(1.0)));
        CHECK(neural[b] == neural_sort(row, Temperature(1.0)));
    }

    ScoreBatch single;
    single.rows = batch.rows.topRows(1);
    CHECK(soft_sort_batch(single, Temperature(1.0))[0] ==
          soft_sort(Vector(batch.rows.row(0).transpose()), Temperature(1.0)));

    // permuting batch rows permutes the output slices
    ScoreBatch swapped = batch;
    swapped.rows.row(0) = batch.rows.row(5);
    swapped.rows.row(5) = batch.rows.row(0);
    const auto swapped_out = soft_sort_batch(swapped, Temperature(1.0));
    CHECK(swapped_out[0] == soft[5]);
    CHECK(swapped_out[5] == soft[0]);
}

TEST_CASE("check_urs names the violated property") {
    Matrix broken(2, 2);
    broken << 0.9, 0.3, 0.1, 0.7;  // rows do not normalize
    CHECK(check_urs(broken) == "row affinity");
    broken << -0.1, 1.1, 0.5, 0.5;
    CHECK(check_urs(broken) == "non-negativity");
    broken << 0.9, 0.1, 0.8, 0.2;
    CHECK(check_urs(broken) == "argmax permutation");
    CHECK(check_urs(soft_sort(vec({2, 5, 4}), Temperature(1.0))).empty());
}

TEST_CASE("semi-metric axioms and temperature validation") {
    for (const SemiMetric& d : {SemiMetric::l1(), SemiMetric::l2(), SemiMetric{0.5}}) {
        CHECK(d(1.5, -2.0) >= 0.0);
        CHECK(d(1.5, -2.0) == d(-2.0, 1.5));
        CHECK(d(0.7, 0.7) == 0.0);
    }
    CHECK(SemiMetric::l2()(1.0, 3.0) == 4.0);
    CHECK_THROWS_AS(Temperature(0.0), InvalidInput);
    CHECK_THROWS_AS(Temperature(-1.0), InvalidInput);
    CHECK_THROWS_AS(Temperature(std::numeric_limits<double>::infinity()), InvalidInput);
}
