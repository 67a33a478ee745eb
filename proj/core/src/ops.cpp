#include "relaxsort/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace relaxsort {

namespace {

void require_scores(const Vector& s) {
    if (s.size() == 0) throw InvalidInput("score vector must be non-empty");
    if (!s.allFinite()) throw InvalidInput("score vector must be finite");
}

}  // namespace

double SemiMetric::operator()(double x, double y) const {
    const double a = std::abs(x - y);
    if (power == 1.0) return a;
    if (power == 2.0) return a * a;
    return std::pow(a, power);
}

double SemiMetric::deriv_y(double x, double y) const {
    if (x == y) return 0.0;
    const double diff = y - x;
    if (power == 1.0) return diff > 0 ? 1.0 : -1.0;
    if (power == 2.0) return 2.0 * diff;
    return power * std::pow(std::abs(diff), power - 1.0) * (diff > 0 ? 1.0 : -1.0);
}

Temperature::Temperature(double t) : tau(t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidInput("temperature must be positive and finite");
}

std::string operator_name(Operator op) {
    return op == Operator::SoftSort ? "softsort" : "neuralsort";
}

Operator operator_from_name(const std::string& name) {
    if (name == "softsort") return Operator::SoftSort;
    if (name == "neuralsort") return Operator::NeuralSort;
    throw InvalidInput("unknown operator: " + name);
}

Permutation argsort_desc(const Vector& s) {
    require_scores(s);
    const int n = static_cast<int>(s.size());
    Permutation idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return s[a] > s[b]; });
    return idx;
}

Vector sort_desc(const Vector& s) {
    const Permutation p = argsort_desc(s);
    Vector out(s.size());
    for (int i = 0; i < s.size(); ++i) out[i] = s[p[i]];
    return out;
}

Matrix perm_matrix(const Permutation& p) {
    const int n = static_cast<int>(p.size());
    std::vector<bool> seen(n, false);
    for (int i = 0; i < n; ++i) {
        if (p[i] < 0 || p[i] >= n || seen[p[i]]) throw InvalidInput("indices are not a permutation");
        seen[p[i]] = true;
    }
    Matrix m = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) m(i, p[i]) = 1.0;
    return m;
}

Matrix row_softmax(const Matrix& m, Temperature tau) {
    if (!m.allFinite()) throw InvalidInput("softmax input must be finite");
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double mx = m.row(i).maxCoeff();
        out.row(i) = ((m.row(i).array() - mx) / tau.tau).exp();
        out.row(i) /= out.row(i).sum();
    }
    return out;
}

Matrix soft_sort(const Vector& s, Temperature tau, const SemiMetric& d) {
    require_scores(s);
    const Vector sorted = sort_desc(s);
    const int n = static_cast<int>(s.size());
    Matrix logits(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) logits(i, j) = -d(sorted[i], s[j]);
    return row_softmax(logits, tau);
}

Matrix neural_sort_logits(const Vector& s) {
    require_scores(s);
    const int n = static_cast<int>(s.size());
    // row sums of A_s, i.e. (A_s 1)[j] = sum_k |s_j - s_k|
    Vector a_row_sum = Vector::Zero(n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) a_row_sum[j] += std::abs(s[j] - s[k]);
    Matrix logits(n, n);
    for (int i = 0; i < n; ++i) {
        const double coeff = static_cast<double>(n - 1 - 2 * i);  // n + 1 - 2i, i one-based
        logits.row(i) = coeff * s.transpose() - a_row_sum.transpose();
    }
    return logits;
}

Matrix neural_sort(const Vector& s, Temperature tau) {
    return row_softmax(neural_sort_logits(s), tau);
}

Permutation hard_project(const Matrix& p) {
    const int n = static_cast<int>(p.rows());
    if (n == 0 || p.cols() != n) throw InvalidInput("expected a square non-empty matrix");
    Permutation out(n);
    std::vector<bool> seen(n, false);
    for (int i = 0; i < n; ++i) {
        Eigen::Index j;
        p.row(i).maxCoeff(&j);
        if (seen[j]) throw InvalidInput("row argmaxes collide; input is not URS");
        seen[j] = true;
        out[i] = static_cast<int>(j);
    }
    return out;
}

Matrix relaxed_sort(Operator op, const Vector& s, Temperature tau, const SemiMetric& d) {
    return op == Operator::SoftSort ? soft_sort(s, tau, d) : neural_sort(s, tau);
}

namespace {

template <typename Fn>
std::vector<Matrix> map_batch(const ScoreBatch& batch, Fn&& fn) {
    if (batch.size() == 0) throw InvalidInput("empty batch");
    std::vector<Matrix> out;
    out.reserve(batch.size());
    for (int b = 0; b < batch.size(); ++b) out.push_back(fn(Vector(batch.rows.row(b))));
    return out;
}

}  // namespace

std::vector<Matrix> soft_sort_batch(const ScoreBatch& batch, Temperature tau, const SemiMetric& d) {
    return map_batch(batch, [&](const Vector& s) { return soft_sort(s, tau, d); });
}

std::vector<Matrix> neural_sort_batch(const ScoreBatch& batch, Temperature tau) {
    return map_batch(batch, [&](const Vector& s) { return neural_sort(s, tau); });
}

std::string check_urs(const Matrix& p, double row_sum_tol) {
    if ((p.array() < 0.0).any()) return "non-negativity";
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        if (std::abs(p.row(i).sum() - 1.0) > row_sum_tol) return "row affinity";
    try {
        hard_project(p);
    } catch (const InvalidInput&) {
        return "argmax permutation";
    }
    return "";
}

double min_pairwise_gap(const Vector& s) {
    if (s.size() < 2) return std::numeric_limits<double>::infinity();
    Vector sorted = sort_desc(s);
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < sorted.size(); ++i) gap = std::min(gap, sorted[i] - sorted[i + 1]);
    return gap;
}

bool has_ties(const Vector& s) { return min_pairwise_gap(s) == 0.0; }

}  // namespace relaxsort
