#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relaxsort/ops.hpp"

namespace relaxsort {

/// Negative mean log-probability of the entries marked in p_true.
/// P_hat is clamped at 1e-30 before the log.
double perm_cross_entropy(const Matrix& p_hat, const Matrix& p_true);

/// -(1/n) sum_i log P_hat[i, i]; equals perm_cross_entropy against the
/// identity permutation.
double diag_cross_entropy(const Matrix& p_hat);

/// Spearman rank correlation, in [-1, 1]. Ranks use the stable descending
/// argsort, so ties get distinct ranks. Throws on constant input.
double spearman(const Vector& a, const Vector& b);

struct OptimizerConfig {
    enum class Kind { SgdMomentum, Adam };
    Kind kind = Kind::SgdMomentum;
    double learning_rate = 0.01;
    double momentum = 0.0;  // sgd
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;  // adam

    static OptimizerConfig sgd_momentum(double lr, double mu);
    static OptimizerConfig adam(double lr, double b1 = 0.9, double b2 = 0.999,
                                double eps = 1e-8);
};

/// Holds optimizer state for one parameter matrix; state is allocated on the
/// first step. Throws on non-finite gradients.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

    void step(Matrix& params, const Matrix& grads);
    const OptimizerConfig& config() const { return cfg_; }

private:
    OptimizerConfig cfg_;
    Matrix velocity_;  // sgd momentum / adam first moment
    Matrix second_;    // adam second moment
    long steps_ = 0;
};

struct BenchConfig {
    int n = 100;
    int batch = 20;
    int epochs = 100;
    Operator op = Operator::SoftSort;
    double tau = 0.03;
    double power = 2.0;         // semi-metric exponent (SoftSort only)
    double l2_coeff = 1.0 / 200.0;
    double learning_rate = 10.0;
    double momentum = 0.5;
    std::uint64_t seed = 0;
    bool reverse_init = false;  // start from rows sorted increasingly

    static BenchConfig task_defaults(Operator op);
};

struct BenchReport {
    double total_seconds = 0.0;
    double mean_epoch_seconds = 0.0;    // excluding the burn-in epoch
    double stddev_epoch_seconds = 0.0;
    std::vector<double> loss_curve;          // per epoch
    std::vector<double> spearman_mean_curve; // per epoch
    Vector final_spearman;                   // per batch row

    double final_spearman_min() const;
    std::string curves_csv() const;  // epoch,loss,spearman_mean
};

/// Trains a batch x n parameter matrix so each row sorts itself in
/// decreasing order: rows are min-max scaled to [0, 1], pushed through the
/// relaxed operator, and penalized with the diagonal cross-entropy plus an
/// L2 term on the parameters. The first epoch is burn-in and excluded from
/// the timing statistics.
BenchReport run_sort_yourself(const BenchConfig& cfg);

struct SpeedRow {
    std::string op;
    int n = 0;
    int batch = 0;
    int epochs = 0;
    double tau = 0.0;
    double power = 0.0;
    double mean_epoch_seconds = 0.0;
    double stddev_seconds = 0.0;
    double final_spearman_min = 0.0;
};

std::vector<SpeedRow> run_speed_compare(const std::vector<int>& n_list,
                                        const std::vector<Operator>& ops,
                                        int batch, int epochs, std::uint64_t seed);

std::string speed_table_csv(const std::vector<SpeedRow>& rows);

struct LearnToSortConfig {
    int n = 5;
    int train_size = 2000;
    int test_size = 500;
    int epochs = 50;
    Operator op = Operator::SoftSort;
    double tau = 1.0;
    double power = 1.0;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;
};

struct LearnToSortReport {
    int n = 0;
    double exact_perm_acc = 0.0;
    double elementwise_acc = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> loss_curve;
    double scorer_weight = 0.0;
    double scorer_bias = 0.0;

    std::string to_json(const LearnToSortConfig& cfg) const;
};

/// Supervised sorting of synthetic scalars: an affine scorer is trained with
/// the permutation cross-entropy on relaxed operator outputs; reports the
/// proportion of exactly recovered permutations and of correctly placed
/// elements on held-out episodes.
LearnToSortReport run_learn_to_sort(const LearnToSortConfig& cfg);

}  // namespace relaxsort
