// Command-line front end: demos, gradient checks, property suites,
// speed benchmarks and kNN training runs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "relaxsort/dknn.hpp"
#include "relaxsort/grad.hpp"
#include "relaxsort/harness.hpp"
#include "relaxsort/ops.hpp"
#include "relaxsort/properties.hpp"

namespace {

using namespace relaxsort;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::vector<double> parse_scores(const std::string& csv) {
    std::vector<double> values;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        const double v = std::stod(item, &pos);
        if (pos != item.size()) throw InvalidInput("cannot parse score: " + item);
        values.push_back(v);
    }
    if (values.empty()) throw InvalidInput("no scores given");
    return values;
}

int cmd_demo(const std::string& scores_csv, double tau, const std::string& metric,
             const std::string& op_name) {
    const std::vector<double> raw = parse_scores(scores_csv);
    Vector s = Eigen::Map<const Vector>(raw.data(), raw.size());
    if (has_ties(s))
        std::cout << "warning: tied scores; stable order (smaller index first) applies\n";
    const SemiMetric d = metric == "l2" ? SemiMetric::l2() : SemiMetric::l1();
    const Matrix p = relaxed_sort(operator_from_name(op_name), s, Temperature(tau), d);

    std::cout << operator_name(operator_from_name(op_name)) << "(s), tau=" << tau
              << ", metric=" << metric << "\n";
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        std::printf("[");
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            std::printf(j ? " %.4f" : "%.4f", p(i, j));
        std::printf("]  row sum %.12f\n", p.row(i).sum());
    }
    // at exact ties the row argmaxes collide; fall back to the stable argsort
    const Permutation hard = has_ties(s) ? argsort_desc(s) : hard_project(p);
    std::cout << "hard projection (1-based):";
    for (Eigen::Index i = 0; i < hard.size(); ++i) std::cout << " " << hard[i] + 1;
    std::cout << "\n";
    return kExitOk;
}

int cmd_gradcheck(const std::string& op_name, double power, int n, int trials,
                  double tol, std::uint64_t seed) {
    const GradCheckReport report =
        gradcheck(operator_from_name(op_name), SemiMetric{power}, n, trials, tol, seed);
    std::cout << report.to_json() << "\n";
    return report.pass ? kExitOk : kExitFailure;
}

int cmd_bench(const std::string& n_list_csv, const std::string& operators, int batch,
              int epochs, std::uint64_t seed, const std::string& out_path) {
    std::vector<int> n_list;
    for (double v : parse_scores(n_list_csv)) n_list.push_back(static_cast<int>(v));
    std::vector<Operator> ops;
    if (operators == "both" || operators == "softsort") ops.push_back(Operator::SoftSort);
    if (operators == "both" || operators == "neuralsort")
        ops.push_back(Operator::NeuralSort);
    if (ops.empty()) throw InvalidInput("unknown operator selection: " + operators);

    const auto rows = run_speed_compare(n_list, ops, batch, epochs, seed);
    const std::string csv = speed_table_csv(rows);
    if (out_path.empty() || out_path == "-") {
        std::cout << csv;
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "cannot write " << out_path << "\n";
            return kExitFailure;
        }
        out << csv;
        std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
    }
    return kExitOk;
}

int cmd_knn(int classes, int dim, int k, double tau, int epochs, std::uint64_t seed,
            double lr, bool cross_entropy) {
    BlobsSpec spec;
    spec.classes = classes;
    spec.dim = dim;
    KnnTrainConfig cfg;
    cfg.k = k;
    cfg.tau = tau;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.learning_rate = lr;
    cfg.cross_entropy_loss = cross_entropy;
    const KnnReport report = train_dknn(spec, cfg);
    std::cout << report.to_json(spec, cfg) << "\n";
    return kExitOk;
}

int cmd_properties(const std::string& suite, std::uint64_t seed) {
    const auto results = run_properties(suite, seed);
    bool all_pass = true;
    std::vector<std::string> failing;
    for (const PropertyResult& r : results) {
        std::printf("%-4s %-14s %-55s %s\n", r.pass ? "ok" : "FAIL", r.suite.c_str(),
                    r.name.c_str(), r.detail.c_str());
        if (!r.pass) {
            all_pass = false;
            failing.push_back(r.name);
        }
    }
    std::cout << results.size() << " properties, "
              << (all_pass ? "all passed" : "FAILURES:") << "\n";
    for (const auto& name : failing) std::cout << "  " << name << "\n";
    return all_pass ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continuous relaxations of argsort: demos, checks and benchmarks"};
    app.require_subcommand(1);
    app.set_config("--config");

    std::string scores = "2,5,4", metric = "l1", op_name = "softsort";
    double tau = 1.0;
    auto* demo = app.add_subcommand("demo", "Print a relaxed permutation matrix");
    demo->add_option("--scores", scores, "comma-separated scores");
    demo->add_option("--tau", tau, "temperature > 0");
    demo->add_option("--metric", metric)->check(CLI::IsMember({"l1", "l2"}));
    demo->add_option("--operator", op_name)
        ->check(CLI::IsMember({"softsort", "neuralsort"}));

    std::string gc_op = "softsort";
    double gc_power = 1.0, gc_tol = 1e-5;
    int gc_n = 10, gc_trials = 100;
    std::uint64_t gc_seed = 0;
    auto* gc = app.add_subcommand("gradcheck", "Analytic VJP vs finite differences");
    gc->add_option("--operator", gc_op)
        ->check(CLI::IsMember({"softsort", "neuralsort"}));
    gc->add_option("--p", gc_power, "semi-metric exponent");
    gc->add_option("--n", gc_n);
    gc->add_option("--trials", gc_trials);
    gc->add_option("--tol", gc_tol);
    gc->add_option("--seed", gc_seed)->envname("RELAXSORT_SEED");

    std::string bench_ns = "100,500,1000,2000", bench_ops = "both", bench_out = "bench.csv";
    int bench_batch = 20, bench_epochs = 100;
    std::uint64_t bench_seed = 0;
    auto* bench = app.add_subcommand("bench", "Speed/learning comparison table");
    bench->add_option("--n-list", bench_ns, "comma-separated sizes");
    bench->add_option("--operators", bench_ops)
        ->check(CLI::IsMember({"both", "softsort", "neuralsort"}));
    bench->add_option("--batch", bench_batch);
    bench->add_option("--epochs", bench_epochs);
    bench->add_option("--seed", bench_seed)->envname("RELAXSORT_SEED");
    bench->add_option("--out", bench_out, "output CSV path ('-' for stdout)");

    int knn_classes = 3, knn_dim = 2, knn_k = 3, knn_epochs = 50;
    double knn_tau = 16.0, knn_lr = 0.05;
    std::uint64_t knn_seed = 0;
    bool knn_ce = false;
    auto* knn = app.add_subcommand("knn", "Train the differentiable kNN head on blobs");
    knn->add_option("--classes", knn_classes)->check(CLI::PositiveNumber);
    knn->add_option("--dim", knn_dim)->check(CLI::PositiveNumber);
    knn->add_option("--k", knn_k)->check(CLI::PositiveNumber);
    knn->add_option("--tau", knn_tau);
    knn->add_option("--epochs", knn_epochs)->check(CLI::NonNegativeNumber);
    knn->add_option("--lr", knn_lr);
    knn->add_option("--seed", knn_seed)->envname("RELAXSORT_SEED");
    knn->add_flag("--cross-entropy", knn_ce, "use -log p instead of -p as the loss");

    std::string prop_suite = "all";
    std::uint64_t prop_seed = 0;
    auto* props = app.add_subcommand("properties", "Run the operator property suites");
    props->add_option("--suite", prop_suite, "all or one of the suite names");
    props->add_option("--seed", prop_seed)->envname("RELAXSORT_SEED");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (demo->parsed()) return cmd_demo(scores, tau, metric, op_name);
        if (gc->parsed())
            return cmd_gradcheck(gc_op, gc_power, gc_n, gc_trials, gc_tol, gc_seed);
        if (bench->parsed())
            return cmd_bench(bench_ns, bench_ops, bench_batch, bench_epochs, bench_seed,
                             bench_out);
        if (knn->parsed())
            return cmd_knn(knn_classes, knn_dim, knn_k, knn_tau, knn_epochs, knn_seed,
                           knn_lr, knn_ce);
        if (props->parsed()) return cmd_properties(prop_suite, prop_seed);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
