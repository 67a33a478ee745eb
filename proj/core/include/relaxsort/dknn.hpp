#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relaxsort/ops.hpp"

namespace relaxsort {

/// One classification episode: a query point plus n labelled candidates.
struct Episode {
    Vector query;
    int query_label = 0;
    Matrix candidates;       // n x dim
    Eigen::VectorXi labels;  // n
};

/// Linear embedding x -> W x, optionally normalized to unit length.
class Embedding {
public:
    static Embedding identity(int dim);
    static Embedding linear(Matrix w);

    Embedding with_unit_norm() const;

    Vector apply(const Vector& x) const;
    const Matrix& weights() const { return w_; }
    Matrix& weights() { return w_; }
    bool unit_norm() const { return unit_norm_; }

private:
    Matrix w_;
    bool unit_norm_ = false;
};

/// s_i = -||phi(x_i) - phi(query)||^2
Vector neg_sq_distances(const Episode& ep, const Embedding& phi);

/// Relaxed kNN class probability: mean of the first k entries of
/// soft_sort(s) * indicator(labels == query_label).
double dknn_prob(const Episode& ep, const Embedding& phi, int k, Temperature tau,
                 const SemiMetric& d = SemiMetric::l1());

/// Training loss -dknn_prob (or -log dknn_prob with cross_entropy set).
double dknn_loss(const Episode& ep, const Embedding& phi, int k, Temperature tau,
                 const SemiMetric& d = SemiMetric::l1(), bool cross_entropy = false);

/// Gradient of dknn_loss with respect to the embedding weights. Requires a
/// plain (non-unit-norm) linear embedding.
Matrix dknn_loss_grad(const Episode& ep, const Embedding& phi, int k, Temperature tau,
                      const SemiMetric& d = SemiMetric::l1(), bool cross_entropy = false);

/// Seeded Gaussian-blob dataset spec.
struct BlobsSpec {
    int classes = 3;
    int dim = 2;
    int per_class = 60;
    double separation = 5.0;  // class-center spacing in units of sigma
    double sigma = 1.0;

    std::string to_json() const;
};

struct Dataset {
    Matrix points;  // rows
    Eigen::VectorXi labels;
};

Dataset make_blobs(const BlobsSpec& spec, std::uint64_t seed);

struct KnnTrainConfig {
    int k = 3;
    double tau = 16.0;
    double power = 1.0;
    int epochs = 50;
    int episodes_per_epoch = 50;
    int candidates_per_episode = 30;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    bool cross_entropy_loss = false;
};

struct KnnReport {
    std::vector<double> loss_curve;  // mean episode loss per epoch
    double test_accuracy = 0.0;
    Matrix weights;

    std::string to_json(const BlobsSpec& spec, const KnnTrainConfig& cfg) const;
    std::string curves_csv() const;
};

/// Trains a linear embedding (identity-initialized) on blob episodes and
/// reports hard-kNN test accuracy with the learned embedding.
KnnReport train_dknn(const BlobsSpec& spec, const KnnTrainConfig& cfg);

/// Majority vote over the k nearest candidates in embedding space.
int hard_knn_predict(const Vector& query, const Dataset& candidates,
                     const Embedding& phi, int k);

double hard_knn_accuracy(const Dataset& test, const Dataset& train,
                         const Embedding& phi, int k);

}  // namespace relaxsort
