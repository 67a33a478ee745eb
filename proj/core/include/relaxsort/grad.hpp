#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relaxsort/ops.hpp"

namespace relaxsort {

struct IllDefinedGradient : std::domain_error {
    using std::domain_error::domain_error;
};

/// Gradient of sum_ij upstream[i,j] * soft_sort(s)[i,j] with respect to s.
/// The chain rule routes through both occurrences of s: the direct one and
/// the one inside sort(s), which is locally the fixed linear map given by
/// the argsort permutation. Throws IllDefinedGradient on tied entries.
Vector soft_sort_vjp(const Vector& s, Temperature tau, const SemiMetric& d,
                     const Matrix& upstream);

Vector neural_sort_vjp(const Vector& s, Temperature tau, const Matrix& upstream);

Vector relaxed_sort_vjp(Operator op, const Vector& s, Temperature tau,
                        const SemiMetric& d, const Matrix& upstream);

/// Central-difference oracle: (f(s + h e_k) - f(s - h e_k)) / (2h) contracted
/// with the upstream cotangent. Requires min pairwise gap >= 10h so no step
/// crosses a tie boundary.
Vector finite_diff_vjp(Operator op, const Vector& s, Temperature tau,
                       const SemiMetric& d, const Matrix& upstream,
                       double h = 1e-6);

namespace detail {

/// VJP variants reusing an already computed forward output.
Vector soft_sort_vjp_with_forward(const Vector& s, Temperature tau, const SemiMetric& d,
                                  const Matrix& forward, const Matrix& upstream);
Vector neural_sort_vjp_with_forward(const Vector& s, Temperature tau,
                                    const Matrix& forward, const Matrix& upstream);
Vector relaxed_sort_vjp_with_forward(Operator op, const Vector& s, Temperature tau,
                                     const SemiMetric& d, const Matrix& forward,
                                     const Matrix& upstream);

}  // namespace detail

struct GradCheckReport {
    std::string op;
    double power = 1.0;
    int n = 0;
    int trials = 0;
    double tol = 0.0;
    std::uint64_t seed = 0;
    double max_abs_err = 0.0;
    double max_rel_err = 0.0;
    std::vector<double> per_coordinate;  // worst abs error per coordinate
    bool pass = false;

    std::string to_json() const;
};

/// Samples `trials` score vectors (min gap enforced) and random upstreams,
/// compares the analytic VJP to central finite differences and aggregates
/// the worst-case errors. Deterministic given the seed.
GradCheckReport gradcheck(Operator op, const SemiMetric& d, int n, int trials,
                          double tol, std::uint64_t seed, double tau = 1.0);

}  // namespace relaxsort
