#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "relaxsort/ops.hpp"

namespace relaxsort {

struct RngSeed {
    std::uint64_t value;
};

namespace detail {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// mt19937_64-backed generator with explicit float conversions, so sample
/// streams are identical across platforms for a given seed.
class PortableRng {
public:
    explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);
    /// Standard normal (Box-Muller).
    double normal();
    /// Standard Gumbel, -log(-log(u)) with u clamped away from {0, 1}.
    double gumbel();
    /// Uniform integer in [0, bound).
    int index(int bound);

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Random scores with min pairwise gap >= gap: jittered grid, shuffled and
/// shifted.
Vector sample_min_gap_scores(PortableRng& rng, int n, double gap);

}  // namespace detail

/// n_s x n matrix of i.i.d. standard Gumbel samples, deterministic per seed.
Matrix sample_gumbel(int n_s, int n, RngSeed seed);

/// Applies the relaxed operator to s + z_k for each Gumbel sample row z_k
/// (the Plackett-Luce reparameterization). A tied perturbed vector is
/// resampled; `resampled` (when given) counts such events.
std::vector<Matrix> stochastic_relaxed_sort(const Vector& s, Temperature tau,
                                            const SemiMetric& d, int n_s,
                                            RngSeed seed, Operator op,
                                            int* resampled = nullptr);

/// Test hook: same computation with caller-provided noise rows.
std::vector<Matrix> stochastic_relaxed_sort_with_noise(const Vector& s, Temperature tau,
                                                       const SemiMetric& d,
                                                       const Matrix& noise, Operator op);

}  // namespace relaxsort
