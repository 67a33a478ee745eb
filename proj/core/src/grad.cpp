#include "relaxsort/grad.hpp"

#include <cmath>

#include "json.hpp"
#include "relaxsort/stochastic.hpp"

namespace relaxsort {

namespace {

void require_distinct(const Vector& s) {
    if (has_ties(s)) throw IllDefinedGradient("gradient is undefined at tied entries");
}

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// Backprop through the row-wise softmax with temperature: returns the
// gradient with respect to the logit matrix (the 1/tau factor is folded in).
Matrix softmax_backward(const Matrix& p, const Matrix& upstream, double tau) {
    Matrix g(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const double inner = upstream.row(i).dot(p.row(i));
        g.row(i) = (p.row(i).array() * (upstream.row(i).array() - inner)) / tau;
    }
    return g;
}

}  // namespace

namespace detail {

Vector soft_sort_vjp_with_forward(const Vector& s, Temperature tau, const SemiMetric& d,
                                  const Matrix& p, const Matrix& upstream) {
    require_distinct(s);
    const int n = static_cast<int>(s.size());
    if (upstream.rows() != n || upstream.cols() != n)
        throw InvalidInput("upstream shape does not match");
    const Permutation sigma = argsort_desc(s);
    Vector sorted(n);
    for (int i = 0; i < n; ++i) sorted[i] = s[sigma[i]];

    const Matrix g = softmax_backward(p, upstream, tau.tau);

    Vector ds = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
        double through_sorted = 0.0;
        for (int j = 0; j < n; ++j) {
            // logit(i, j) = -d(sorted_i, s_j); route through both arguments
            ds[j] += g(i, j) * -d.deriv_y(sorted[i], s[j]);
            through_sorted += g(i, j) * -d.deriv_y(s[j], sorted[i]);
        }
        ds[sigma[i]] += through_sorted;
    }
    return ds;
}

Vector neural_sort_vjp_with_forward(const Vector& s, Temperature tau,
                                    const Matrix& p, const Matrix& upstream) {
    require_distinct(s);
    const int n = static_cast<int>(s.size());
    if (upstream.rows() != n || upstream.cols() != n)
        throw InvalidInput("upstream shape does not match");

    const Matrix g = softmax_backward(p, upstream, tau.tau);
    const Vector col_sum = g.colwise().sum();

    // logit(i, j) = (n + 1 - 2i) s_j - (A_s 1)_j, with i one-based
    Vector ds = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
        const double coeff = static_cast<double>(n - 1 - 2 * i);
        for (int j = 0; j < n; ++j) ds[j] += g(i, j) * coeff;
    }
    for (int m = 0; m < n; ++m) {
        double sign_sum = 0.0, cross = 0.0;
        for (int k = 0; k < n; ++k) {
            sign_sum += sign(s[m] - s[k]);
            cross += col_sum[k] * sign(s[m] - s[k]);
        }
        ds[m] -= col_sum[m] * sign_sum + cross;
    }
    return ds;
}

Vector relaxed_sort_vjp_with_forward(Operator op, const Vector& s, Temperature tau,
                                     const SemiMetric& d, const Matrix& forward,
                                     const Matrix& upstream) {
    return op == Operator::SoftSort
               ? soft_sort_vjp_with_forward(s, tau, d, forward, upstream)
               : neural_sort_vjp_with_forward(s, tau, forward, upstream);
}

}  // namespace detail

Vector soft_sort_vjp(const Vector& s, Temperature tau, const SemiMetric& d,
                     const Matrix& upstream) {
    return detail::soft_sort_vjp_with_forward(s, tau, d, soft_sort(s, tau, d), upstream);
}

Vector neural_sort_vjp(const Vector& s, Temperature tau, const Matrix& upstream) {
    return detail::neural_sort_vjp_with_forward(s, tau, neural_sort(s, tau), upstream);
}

Vector relaxed_sort_vjp(Operator op, const Vector& s, Temperature tau,
                        const SemiMetric& d, const Matrix& upstream) {
    return op == Operator::SoftSort ? soft_sort_vjp(s, tau, d, upstream)
                                    : neural_sort_vjp(s, tau, upstream);
}

Vector finite_diff_vjp(Operator op, const Vector& s, Temperature tau,
                       const SemiMetric& d, const Matrix& upstream, double h) {
    if (!(h > 0)) throw InvalidInput("finite-difference step must be positive");
    if (s.size() > 1 && min_pairwise_gap(s) < 10.0 * h)
        throw IllDefinedGradient("min pairwise gap below 10h; resample the input");
    const int n = static_cast<int>(s.size());
    Vector ds(n);
    Vector probe = s;
    for (int k = 0; k < n; ++k) {
        probe[k] = s[k] + h;
        const double up = upstream.cwiseProduct(relaxed_sort(op, probe, tau, d)).sum();
        probe[k] = s[k] - h;
        const double down = upstream.cwiseProduct(relaxed_sort(op, probe, tau, d)).sum();
        probe[k] = s[k];
        ds[k] = (up - down) / (2.0 * h);
    }
    return ds;
}

GradCheckReport gradcheck(Operator op, const SemiMetric& d, int n, int trials,
                          double tol, std::uint64_t seed, double tau) {
    if (trials < 1) throw InvalidInput("trials must be >= 1");
    GradCheckReport report;
    report.op = operator_name(op);
    report.power = d.power;
    report.n = n;
    report.trials = trials;
    report.tol = tol;
    report.seed = seed;
    report.per_coordinate.assign(n, 0.0);

    const Temperature temp(tau);
    for (int t = 0; t < trials; ++t) {
        detail::PortableRng rng(detail::derive_seed(seed, static_cast<std::uint64_t>(t)));
        const Vector s = detail::sample_min_gap_scores(rng, n, 0.05);
        Matrix upstream(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) upstream(i, j) = rng.normal();

        const Vector analytic = relaxed_sort_vjp(op, s, temp, d, upstream);
        const Vector numeric = finite_diff_vjp(op, s, temp, d, upstream);
        const double scale = std::max(1.0, numeric.cwiseAbs().maxCoeff());
        for (int k = 0; k < n; ++k) {
            const double abs_err = std::abs(analytic[k] - numeric[k]);
            report.per_coordinate[k] = std::max(report.per_coordinate[k], abs_err);
            report.max_abs_err = std::max(report.max_abs_err, abs_err);
            report.max_rel_err = std::max(report.max_rel_err, abs_err / scale);
        }
    }
    report.pass = report.max_rel_err <= tol;
    return report;
}

std::string GradCheckReport::to_json() const {
    nlohmann::json j{{"op", op},
                     {"power", power},
                     {"n", n},
                     {"trials", trials},
                     {"tol", tol},
                     {"seed", seed},
                     {"max_abs_err", max_abs_err},
                     {"max_rel_err", max_rel_err},
                     {"per_coordinate", per_coordinate},
                     {"pass", pass}};
    return j.dump(2);
}

}  // namespace relaxsort
