#include "relaxsort/dknn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "relaxsort/grad.hpp"
#include "relaxsort/stochastic.hpp"

namespace relaxsort {

Embedding Embedding::identity(int dim) {
    Embedding e;
    e.w_ = Matrix::Identity(dim, dim);
    return e;
}

Embedding Embedding::linear(Matrix w) {
    Embedding e;
    e.w_ = std::move(w);
    return e;
}

Embedding Embedding::with_unit_norm() const {
    Embedding e = *this;
    e.unit_norm_ = true;
    return e;
}

Vector Embedding::apply(const Vector& x) const {
    if (x.size() != w_.cols()) throw InvalidInput("embedding input dimension mismatch");
    Vector out = w_ * x;
    if (unit_norm_) {
        const double norm = out.norm();
        if (norm == 0.0) throw InvalidInput("cannot normalize a zero embedding");
        out /= norm;
    }
    return out;
}

Vector neg_sq_distances(const Episode& ep, const Embedding& phi) {
    const int n = static_cast<int>(ep.candidates.rows());
    if (n == 0) throw InvalidInput("episode has no candidates");
    if (ep.candidates.cols() != ep.query.size() || ep.labels.size() != n)
        throw InvalidInput("episode shapes are inconsistent");
    const Vector q = phi.apply(ep.query);
    Vector s(n);
    for (int i = 0; i < n; ++i)
        s[i] = -(phi.apply(ep.candidates.row(i).transpose()) - q).squaredNorm();
    return s;
}

namespace {

Matrix knn_upstream(const Episode& ep, int k) {
    const int n = static_cast<int>(ep.candidates.rows());
    if (k < 1 || k > n) throw InvalidInput("k must satisfy 1 <= k <= n");
    Matrix u = Matrix::Zero(n, n);
    for (int r = 0; r < k; ++r)
        for (int j = 0; j < n; ++j)
            if (ep.labels[j] == ep.query_label) u(r, j) = 1.0 / k;
    return u;
}

}  // namespace

double dknn_prob(const Episode& ep, const Embedding& phi, int k, Temperature tau,
                 const SemiMetric& d) {
    const Vector s = neg_sq_distances(ep, phi);
    const Matrix p = soft_sort(s, tau, d);
    double prob = 0.0;
    for (int r = 0; r < k && r < p.rows(); ++r)
        for (int j = 0; j < p.cols(); ++j)
            if (ep.labels[j] == ep.query_label) prob += p(r, j);
    if (k < 1 || k > p.rows()) throw InvalidInput("k must satisfy 1 <= k <= n");
    return prob / k;
}

double dknn_loss(const Episode& ep, const Embedding& phi, int k, Temperature tau,
                 const SemiMetric& d, bool cross_entropy) {
    const double prob = dknn_prob(ep, phi, k, tau, d);
    return cross_entropy ? -std::log(std::max(prob, 1e-30)) : -prob;
}

Matrix dknn_loss_grad(const Episode& ep, const Embedding& phi, int k, Temperature tau,
                      const SemiMetric& d, bool cross_entropy) {
    if (phi.unit_norm())
        throw InvalidInput("gradient path requires a plain linear embedding");
    const Vector s = neg_sq_distances(ep, phi);
    Matrix upstream = -knn_upstream(ep, k);
    if (cross_entropy) {
        const double prob = std::max(dknn_prob(ep, phi, k, tau, d), 1e-30);
        upstream /= prob;
    }
    const Vector ds = soft_sort_vjp(s, tau, d, upstream);

    const Matrix& w = phi.weights();
    Matrix dw = Matrix::Zero(w.rows(), w.cols());
    for (int i = 0; i < ds.size(); ++i) {
        // s_i = -||W (x_i - query)||^2
        const Vector u = ep.candidates.row(i).transpose() - ep.query;
        dw += ds[i] * -2.0 * (w * u) * u.transpose();
    }
    return dw;
}

Dataset make_blobs(const BlobsSpec& spec, std::uint64_t seed) {
    if (spec.classes < 2) throw InvalidInput("need at least two classes");
    if (spec.dim < 1 || spec.per_class < 1) throw InvalidInput("invalid blob geometry");
    detail::PortableRng rng(seed);
    const int total = spec.classes * spec.per_class;
    Dataset data;
    data.points.resize(total, spec.dim);
    data.labels.resize(total);
    int row = 0;
    for (int c = 0; c < spec.classes; ++c) {
        Vector center = Vector::Zero(spec.dim);
        if (spec.dim == 1) {
            center[0] = c * spec.separation * spec.sigma;
        } else {
            const double angle = 2.0 * M_PI * c / spec.classes;
            // ring layout keeps adjacent centers separation*sigma apart
            const double radius = spec.separation * spec.sigma /
                                  (2.0 * std::sin(M_PI / spec.classes));
            center[0] = radius * std::cos(angle);
            center[1] = radius * std::sin(angle);
        }
        for (int i = 0; i < spec.per_class; ++i, ++row) {
            for (int j = 0; j < spec.dim; ++j)
                data.points(row, j) = center[j] + spec.sigma * rng.normal();
            data.labels[row] = c;
        }
    }
    return data;
}

int hard_knn_predict(const Vector& query, const Dataset& candidates,
                     const Embedding& phi, int k) {
    const int n = static_cast<int>(candidates.points.rows());
    if (k < 1 || k > n) throw InvalidInput("k must satisfy 1 <= k <= n");
    const Vector q = phi.apply(query);
    std::vector<std::pair<double, int>> dist(n);
    for (int i = 0; i < n; ++i) {
        const double d2 =
            (phi.apply(candidates.points.row(i).transpose()) - q).squaredNorm();
        dist[i] = {d2, i};
    }
    std::stable_sort(dist.begin(), dist.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<int> votes(candidates.labels.maxCoeff() + 1, 0);
    for (int r = 0; r < k; ++r) ++votes[candidates.labels[dist[r].second]];
    return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

double hard_knn_accuracy(const Dataset& test, const Dataset& train,
                         const Embedding& phi, int k) {
    int correct = 0;
    for (Eigen::Index i = 0; i < test.points.rows(); ++i)
        if (hard_knn_predict(test.points.row(i).transpose(), train, phi, k) == test.labels[i])
            ++correct;
    return static_cast<double>(correct) / test.points.rows();
}

KnnReport train_dknn(const BlobsSpec& spec, const KnnTrainConfig& cfg) {
    const Dataset train = make_blobs(spec, detail::derive_seed(cfg.seed, 1));
    BlobsSpec test_spec = spec;
    test_spec.per_class = std::max(10, spec.per_class / 3);
    const Dataset test = make_blobs(test_spec, detail::derive_seed(cfg.seed, 2));

    Embedding phi = Embedding::identity(spec.dim);
    Matrix velocity = Matrix::Zero(spec.dim, spec.dim);
    const Temperature tau(cfg.tau);
    const SemiMetric metric{cfg.power};
    const int total = static_cast<int>(train.points.rows());
    const int n_cand = std::min(cfg.candidates_per_episode, total - 1);
    if (n_cand < cfg.k) throw InvalidInput("not enough candidates per episode for k");

    KnnReport report;
    detail::PortableRng rng(detail::derive_seed(cfg.seed, 3));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (int e = 0; e < cfg.episodes_per_epoch; ++e) {
            const int qi = rng.index(total);
            Episode ep;
            ep.query = train.points.row(qi).transpose();
            ep.query_label = train.labels[qi];
            ep.candidates.resize(n_cand, spec.dim);
            ep.labels.resize(n_cand);
            // distinct candidates: a repeated point would tie the distance
            // scores and leave the relaxed-sort gradient undefined
            std::vector<int> pool;
            pool.reserve(total - 1);
            for (int i = 0; i < total; ++i)
                if (i != qi) pool.push_back(i);
            for (int i = 0; i < n_cand; ++i) {
                std::swap(pool[i], pool[i + rng.index(static_cast<int>(pool.size()) - i)]);
                ep.candidates.row(i) = train.points.row(pool[i]);
                ep.labels[i] = train.labels[pool[i]];
            }
            const double loss =
                dknn_loss(ep, phi, cfg.k, tau, metric, cfg.cross_entropy_loss);
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "training diverged at epoch " << epoch;
                throw std::runtime_error(msg.str());
            }
            epoch_loss += loss;
            const Matrix grad =
                dknn_loss_grad(ep, phi, cfg.k, tau, metric, cfg.cross_entropy_loss);
            velocity = cfg.momentum * velocity + grad;
            phi.weights() -= cfg.learning_rate * velocity;
        }
        report.loss_curve.push_back(epoch_loss / cfg.episodes_per_epoch);
    }
    report.test_accuracy = hard_knn_accuracy(test, train, phi, cfg.k);
    report.weights = phi.weights();
    return report;
}

std::string BlobsSpec::to_json() const {
    nlohmann::json j{{"classes", classes},
                     {"dim", dim},
                     {"per_class", per_class},
                     {"separation", separation},
                     {"sigma", sigma}};
    return j.dump();
}

std::string KnnReport::to_json(const BlobsSpec& spec, const KnnTrainConfig& cfg) const {
    nlohmann::json j{{"test_accuracy", test_accuracy},
                     {"loss_curve", loss_curve},
                     {"dataset", nlohmann::json::parse(spec.to_json())},
                     {"config",
                      {{"k", cfg.k},
                       {"tau", cfg.tau},
                       {"power", cfg.power},
                       {"epochs", cfg.epochs},
                       {"episodes_per_epoch", cfg.episodes_per_epoch},
                       {"candidates_per_episode", cfg.candidates_per_episode},
                       {"learning_rate", cfg.learning_rate},
                       {"momentum", cfg.momentum},
                       {"seed", cfg.seed},
                       {"cross_entropy_loss", cfg.cross_entropy_loss}}}};
    return j.dump(2);
}

std::string KnnReport::curves_csv() const {
    std::ostringstream out;
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < loss_curve.size(); ++i)
        out << i + 1 << "," << loss_curve[i] << "\n";
    return out.str();
}

}  // namespace relaxsort
