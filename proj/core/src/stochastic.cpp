#include "relaxsort/stochastic.hpp"

#include <algorithm>
#include <cmath>

namespace relaxsort {
namespace detail {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over seed ^ golden-ratio-scaled stream index
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double PortableRng::uniform() {
    // 53 random bits -> [0, 1); avoids the implementation-defined
    // std::uniform_real_distribution
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double PortableRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double PortableRng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    u1 = std::max(u1, 1e-300);
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
}

double PortableRng::gumbel() {
    const double u = std::clamp(uniform(), 1e-12, 1.0 - 1e-12);
    return -std::log(-std::log(u));
}

int PortableRng::index(int bound) {
    return static_cast<int>(uniform() * bound) % bound;
}

Vector sample_min_gap_scores(PortableRng& rng, int n, double gap) {
    // grid step 2*gap with jitter below gap keeps every pairwise gap >= gap
    Vector values(n);
    for (int i = 0; i < n; ++i) values[i] = 2.0 * gap * i + rng.uniform(0.0, 0.8 * gap);
    const double shift = rng.uniform(-1.0, 1.0);
    for (int i = n - 1; i > 0; --i) std::swap(values[i], values[rng.index(i + 1)]);
    return values.array() + shift;
}

}  // namespace detail

Matrix sample_gumbel(int n_s, int n, RngSeed seed) {
    if (n_s < 1 || n < 1) throw InvalidInput("sample shape must be positive");
    detail::PortableRng rng(seed.value);
    Matrix z(n_s, n);
    for (int i = 0; i < n_s; ++i)
        for (int j = 0; j < n; ++j) z(i, j) = rng.gumbel();
    return z;
}

std::vector<Matrix> stochastic_relaxed_sort(const Vector& s, Temperature tau,
                                            const SemiMetric& d, int n_s,
                                            RngSeed seed, Operator op,
                                            int* resampled) {
    if (n_s < 1) throw InvalidInput("need at least one sample");
    detail::PortableRng rng(seed.value);
    const int n = static_cast<int>(s.size());
    std::vector<Matrix> out;
    out.reserve(n_s);
    int retries = 0;
    for (int k = 0; k < n_s; ++k) {
        Vector perturbed(n);
        do {
            for (int j = 0; j < n; ++j) perturbed[j] = s[j] + rng.gumbel();
            if (!has_ties(perturbed)) break;
            ++retries;  // probability-zero event
        } while (true);
        out.push_back(relaxed_sort(op, perturbed, tau, d));
    }
    if (resampled) *resampled = retries;
    return out;
}

std::vector<Matrix> stochastic_relaxed_sort_with_noise(const Vector& s, Temperature tau,
                                                       const SemiMetric& d,
                                                       const Matrix& noise, Operator op) {
    if (noise.cols() != s.size()) throw InvalidInput("noise shape does not match scores");
    std::vector<Matrix> out;
    out.reserve(noise.rows());
    for (Eigen::Index k = 0; k < noise.rows(); ++k)
        out.push_back(relaxed_sort(op, s + noise.row(k).transpose(), tau, d));
    return out;
}

}  // namespace relaxsort
