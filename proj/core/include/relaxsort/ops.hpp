#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace relaxsort {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Permutation = Eigen::VectorXi;

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Pointwise semi-metric d(x, y) = |x - y|^p with p > 0.
struct SemiMetric {
    double power;

    static SemiMetric l1() { return SemiMetric{1.0}; }
    static SemiMetric l2() { return SemiMetric{2.0}; }

    double operator()(double x, double y) const;
    /// d/dy |x - y|^p. Zero at x == y (the semi-metric has a minimum there
    /// for p > 1; for p <= 1 the point is non-differentiable and we use 0).
    double deriv_y(double x, double y) const;
};

/// Softmax temperature, tau > 0 and finite.
struct Temperature {
    double tau;
    explicit Temperature(double t);
};

enum class Operator { SoftSort, NeuralSort };

std::string operator_name(Operator op);
Operator operator_from_name(const std::string& name);

/// Permutation sorting s in decreasing order. Stable: ties keep the
/// smaller original index first.
Permutation argsort_desc(const Vector& s);

/// sort(s) = P_argsort(s) * s, i.e. s in decreasing order.
Vector sort_desc(const Vector& s);

/// One-hot matrix of p: P[i, p[i]] = 1.
Matrix perm_matrix(const Permutation& p);

/// Row-wise softmax(M / tau), computed with per-row max subtraction.
Matrix row_softmax(const Matrix& m, Temperature tau);

/// Relaxed permutation matrix: row i is softmax_j(-d(sort(s)[i], s[j]) / tau).
Matrix soft_sort(const Vector& s, Temperature tau, const SemiMetric& d = SemiMetric::l1());

/// Logit matrix whose row i is (n + 1 - 2i) * s - A_s * 1 (i one-based),
/// with A_s[j, k] = |s[j] - s[k]|. Computed in O(n^2).
Matrix neural_sort_logits(const Vector& s);

/// Row-wise softmax of neural_sort_logits(s) at temperature tau.
Matrix neural_sort(const Vector& s, Temperature tau);

/// Row-wise argmax of a URS matrix. Throws InvalidInput when the argmaxes
/// collide (input is not URS).
Permutation hard_project(const Matrix& p);

/// Dispatch on the operator enum; d is ignored for NeuralSort.
Matrix relaxed_sort(Operator op, const Vector& s, Temperature tau, const SemiMetric& d);

/// Batch of B score vectors, one per row.
struct ScoreBatch {
    Matrix rows;  // B x n

    int size() const { return static_cast<int>(rows.rows()); }
    int n() const { return static_cast<int>(rows.cols()); }
};

std::vector<Matrix> soft_sort_batch(const ScoreBatch& batch, Temperature tau,
                                    const SemiMetric& d = SemiMetric::l1());
std::vector<Matrix> neural_sort_batch(const ScoreBatch& batch, Temperature tau);

/// Checks the three URS conditions. Returns an empty string on success,
/// otherwise the name of the violated property ("non-negativity",
/// "row affinity", "argmax permutation").
std::string check_urs(const Matrix& p, double row_sum_tol = 1e-9);

double min_pairwise_gap(const Vector& s);
bool has_ties(const Vector& s);

}  // namespace relaxsort
