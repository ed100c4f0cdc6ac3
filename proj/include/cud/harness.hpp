#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cud/baselines.hpp"
#include "cud/cud.hpp"
#include "cud/dataset.hpp"
#include "cud/interval.hpp"
#include "cud/model.hpp"
#include "cud/rng.hpp"

namespace cud {

// Per-column z-scoring fit on the training split only; constant columns are
// left unscaled.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Standardizer fit(const Dataset& train) {
        Standardizer s;
        s.mean = train.features.colwise().mean();
        const Eigen::Index n = train.features.rows();
        s.scale.resize(train.features.cols());
        for (Eigen::Index c = 0; c < train.features.cols(); ++c) {
            const double var =
                (train.features.col(c).array() - s.mean[c]).square().sum() /
                std::max<double>(1.0, static_cast<double>(n - 1));
            const double sd = std::sqrt(var);
            s.scale[c] = sd > 1e-12 ? sd : 1.0;
        }
        return s;
    }

    Dataset apply(const Dataset& data) const {
        Dataset out = data;
        out.features = (data.features.rowwise() - mean.transpose()).array().rowwise() /
                       scale.transpose().array();
        return out;
    }
};

inline const std::vector<std::string>& all_methods() {
    static const std::vector<std::string> m = {"cud", "bs1", "bs2", "k", "m", "y", "l"};
    return m;
}

struct ExperimentConfig {
    std::optional<SimSpec> sim;       // simulated source ...
    std::optional<Dataset> csv_data;  // ... or a pre-loaded real dataset
    std::string csv_path;             // provenance only
    int n_train = 30;
    int repetitions = 200;
    int truth_size = 5000;  // fresh truth draw per repetition (simulated only)
    double delta = 0.05;
    std::vector<std::string> methods = all_methods();
    uint64_t seed = 1;
    CudConfig cud;
    BaselineConfig baseline;
    BasisSpec basis = BasisSpec::raw_affine();
    bool standardize = true;
    int workers = 1;

    void validate() const {
        if (!sim && !csv_data)
            throw std::invalid_argument("ExperimentConfig: need a simulated family or a dataset");
        if (sim) sim->validate();
        if (repetitions < 1) throw std::invalid_argument("ExperimentConfig: repetitions must be >= 1");
        if (truth_size < 1) throw std::invalid_argument("ExperimentConfig: truth_size must be >= 1");
        if (methods.empty()) throw std::invalid_argument("ExperimentConfig: method list is empty");
        if (!(delta > 0.0 && delta <= 1.0))
            throw std::invalid_argument("ExperimentConfig: delta must be in (0, 1]");
        if (n_train < 1) throw std::invalid_argument("ExperimentConfig: n_train must be >= 1");
        if (csv_data && n_train >= csv_data->n())
            throw std::invalid_argument("ExperimentConfig: n_train must be < dataset size");
        if (workers < 1) throw std::invalid_argument("ExperimentConfig: workers must be >= 1");
        for (const auto& m : methods) {
            const auto& known = all_methods();
            const bool ok = std::find(known.begin(), known.end(), m) != known.end() ||
                            m == "oracle" || m == "trainpoint";
            if (!ok) throw std::invalid_argument("ExperimentConfig: unknown method '" + m + "'");
        }
    }

    // Copies with the shared knobs resolved into the per-method configs.
    CudConfig resolved_cud() const {
        CudConfig c = cud;
        c.delta = delta;
        c.workers = 1;  // parallelism lives at the repetition level
        return c;
    }
    BaselineConfig resolved_baseline() const {
        BaselineConfig b = baseline;
        b.delta = delta;
        return b;
    }
};

struct MethodOutcome {
    ConfidenceInterval interval;
    bool covered = false;
    bool failed = false;
    std::string error;
};

struct RepRecord {
    double truth = 0.0;
    double training_error = 0.0;
    std::map<std::string, MethodOutcome> methods;
};

struct MethodAggregate {
    long evaluated = 0;  // repetitions with a usable interval
    long covered = 0;
    long failures = 0;
    double coverage = 0.0;
    double mean_diameter = 0.0;
    std::map<std::string, long> flag_counts;
};

struct CoverageReport {
    std::vector<RepRecord> reps;
    std::map<std::string, MethodAggregate> per_method;
    std::optional<double> kurtosis;  // of training errors across repetitions
};

// Standardized central fourth moment minus 3; undefined for short or
// zero-variance sequences.
inline std::optional<double> kurtosis(const std::vector<double>& values) {
    if (values.size() < 4) return std::nullopt;
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    if (m2 <= 0.0) return std::nullopt;
    return m4 / (m2 * m2) - 3.0;
}

namespace detail {

inline uint64_t method_tag(const std::string& name) {
    uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace detail

// Builds one confidence interval from the training data alone. Shared by the
// harness and the CLI `ci` command.
inline ConfidenceInterval build_interval(const std::string& method, const Dataset& train,
                                         const BasisSpec& basis, const CudConfig& cud_cfg,
                                         const BaselineConfig& base_cfg, uint64_t seed,
                                         const PointEstimate632* pre632 = nullptr) {
    if (method == "cud") return cud_interval(train, basis, cud_cfg, seed);
    if (method == "bs1") return ci_quantile_bootstrap(train, basis, base_cfg, seed);
    if (method == "bs2") return ci_corrected_bootstrap(train, basis, base_cfg, seed, pre632);
    if (method == "k") return ci_normal_kohavi(train, basis, base_cfg, seed, pre632);
    if (method == "m") return ci_bayes_martin(train, basis, base_cfg, seed, pre632);
    if (method == "y") return ci_cv_normal_yang(train, basis, base_cfg, seed);
    if (method == "l") return ci_inverted_binomial_langford(train, basis, base_cfg, seed, pre632);
    throw std::invalid_argument("unknown method '" + method + "'");
}

// One Monte-Carlo repetition: draw or split data, fit once, score the truth on
// the held-out set, and build every configured interval from the training
// partition alone. The truth set never reaches a method.
inline RepRecord run_repetition(const ExperimentConfig& cfg, int rep_index) {
    const uint64_t rep_seed =
        derive_seed(cfg.seed, streams::repetition, static_cast<uint64_t>(rep_index));

    Dataset train, truth_set;
    if (cfg.sim) {
        train = generate_simulated(*cfg.sim, cfg.n_train, derive_seed(rep_seed, streams::train));
        truth_set =
            generate_simulated(*cfg.sim, cfg.truth_size, derive_seed(rep_seed, streams::truth));
    } else {
        auto parts = split(*cfg.csv_data, cfg.n_train, derive_seed(rep_seed, streams::split));
        train = std::move(parts.first);
        truth_set = std::move(parts.second);
    }
    if (cfg.standardize) {
        const Standardizer st = Standardizer::fit(train);
        train = st.apply(train);
        truth_set = st.apply(truth_set);
    }

    BasisSpec basis = cfg.basis;
    basis.freeze(train);
    const Eigen::MatrixXd design = expand(basis, train);
    const Coefficients beta_hat = fit_least_squares(design, train.labels);

    RepRecord rec;
    rec.training_error = empirical_error(design, train.labels, beta_hat);
    rec.truth = empirical_error(expand(basis, truth_set), truth_set.labels, beta_hat);

    const CudConfig cud_cfg = cfg.resolved_cud();
    const BaselineConfig base_cfg = cfg.resolved_baseline();

    // The .632 estimate is shared by the methods that center on it.
    std::optional<PointEstimate632> pre632;
    for (const auto& m : cfg.methods) {
        if (m == "bs2" || m == "k" || m == "m" || m == "l") {
            pre632 = estimate_632(train, basis, base_cfg,
                                  derive_seed(rep_seed, streams::estimate632));
            break;
        }
    }

    for (const auto& name : cfg.methods) {
        const uint64_t ms = derive_seed(rep_seed, streams::method, detail::method_tag(name));
        MethodOutcome out;
        try {
            if (name == "oracle") {
                // Harness self-test: a point interval exactly at the truth.
                out.interval = ConfidenceInterval::from_bounds(rec.truth, rec.truth, rec.truth,
                                                               "oracle", 1.0 - cfg.delta);
            } else if (name == "trainpoint") {
                // Deliberately miscalibrated: a point interval at the training error.
                out.interval = ConfidenceInterval::from_bounds(
                    rec.training_error, rec.training_error, rec.training_error, "trainpoint",
                    1.0 - cfg.delta);
            } else {
                out.interval = build_interval(name, train, basis, cud_cfg, base_cfg, ms,
                                              pre632 ? &*pre632 : nullptr);
            }
            out.covered = out.interval.contains(rec.truth);
        } catch (const std::exception& e) {
            out.failed = true;
            out.error = e.what();
        }
        rec.methods.emplace(name, std::move(out));
    }
    return rec;
}

// Repeats run_repetition with per-repetition derived seeds. Records land in
// indexed slots, so the report is identical for any worker count.
inline CoverageReport run_coverage_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    CoverageReport report;
    report.reps.resize(static_cast<size_t>(cfg.repetitions));

    if (cfg.workers <= 1 || cfg.repetitions < 2) {
        for (int r = 0; r < cfg.repetitions; ++r)
            report.reps[static_cast<size_t>(r)] = run_repetition(cfg, r);
    } else {
        const int workers = std::min(cfg.workers, cfg.repetitions);
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const int r = next.fetch_add(1);
                    if (r >= cfg.repetitions) return;
                    report.reps[static_cast<size_t>(r)] = run_repetition(cfg, r);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    for (const auto& name : cfg.methods) {
        MethodAggregate agg;
        double diameter_sum = 0.0;
        for (const auto& rec : report.reps) {
            const auto& out = rec.methods.at(name);
            if (out.failed) {
                ++agg.failures;
                continue;
            }
            ++agg.evaluated;
            if (out.covered) ++agg.covered;
            diameter_sum += out.interval.diameter();
            for (const auto& f : out.interval.flags) ++agg.flag_counts[f];
        }
        if (agg.evaluated > 0) {
            agg.coverage = static_cast<double>(agg.covered) / static_cast<double>(agg.evaluated);
            agg.mean_diameter = diameter_sum / static_cast<double>(agg.evaluated);
        }
        report.per_method.emplace(name, std::move(agg));
    }

    std::vector<double> train_errors;
    train_errors.reserve(report.reps.size());
    for (const auto& rec : report.reps) train_errors.push_back(rec.training_error);
    report.kurtosis = kurtosis(train_errors);
    return report;
}

}  // namespace cud
