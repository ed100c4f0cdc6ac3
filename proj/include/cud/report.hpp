#pragma once

#include <json.hpp>

#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>

#include "cud/harness.hpp"

namespace cud {

using ordered_json = nlohmann::ordered_json;

inline ordered_json config_to_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["schema_version"] = 1;
    if (cfg.sim) {
        j["source"] = {{"kind", "simulated"}, {"family", family_name(cfg.sim->family)}};
    } else {
        j["source"] = {{"kind", "csv"}, {"path", cfg.csv_path}};
    }
    j["n_train"] = cfg.n_train;
    j["repetitions"] = cfg.repetitions;
    j["truth_size"] = cfg.truth_size;
    j["delta"] = cfg.delta;
    j["methods"] = cfg.methods;
    j["seed"] = cfg.seed;
    j["basis"] = cfg.basis.describe();
    j["standardize"] = cfg.standardize;
    j["cud"] = {{"replicates", cfg.cud.replicates},
                {"alpha_n", cfg.cud.alpha_n > 0 ? ordered_json(cfg.cud.alpha_n) : ordered_json("n")},
                {"solver_tol", cfg.cud.solver_tol},
                {"max_nodes", cfg.cud.max_nodes}};
    j["baseline"] = {{"replicates", cfg.baseline.replicates},
                     {"folds", cfg.baseline.folds},
                     {"prior", {cfg.baseline.prior_a, cfg.baseline.prior_b}}};
    // Worker count is an execution detail, not part of the experiment identity;
    // leaving it out keeps reports byte-identical across --workers settings.
    return j;
}

inline ordered_json interval_to_json(const ConfidenceInterval& ci) {
    ordered_json j;
    j["center"] = ci.center;
    j["half_width"] = ci.half_width;
    j["lower"] = ci.lower;
    j["upper"] = ci.upper;
    j["level"] = ci.level;
    j["flags"] = ci.flags;
    return j;
}

inline ordered_json report_to_json(const CoverageReport& report, const ExperimentConfig& cfg) {
    ordered_json j;
    j["config"] = config_to_json(cfg);

    ordered_json methods = ordered_json::object();
    for (const auto& name : cfg.methods) {
        const auto& agg = report.per_method.at(name);
        ordered_json m;
        m["coverage"] = agg.coverage;
        m["mean_diameter"] = agg.mean_diameter;
        m["evaluated"] = agg.evaluated;
        m["failures"] = agg.failures;
        ordered_json flags = ordered_json::object();
        for (const auto& [f, c] : agg.flag_counts) flags[f] = c;
        m["flags"] = flags;
        methods[name] = m;
    }
    j["per_method"] = methods;

    ordered_json reps = ordered_json::array();
    for (size_t r = 0; r < report.reps.size(); ++r) {
        const auto& rec = report.reps[r];
        ordered_json rj;
        rj["rep"] = r;
        rj["truth"] = rec.truth;
        rj["training_error"] = rec.training_error;
        ordered_json iv = ordered_json::object();
        for (const auto& name : cfg.methods) {
            const auto& out = rec.methods.at(name);
            if (out.failed) {
                iv[name] = {{"failed", true}, {"error", out.error}};
            } else {
                ordered_json one = interval_to_json(out.interval);
                one["covered"] = out.covered;
                iv[name] = one;
            }
        }
        rj["intervals"] = iv;
        reps.push_back(rj);
    }
    j["per_rep"] = reps;
    j["kurtosis"] = report.kurtosis ? ordered_json(*report.kurtosis) : ordered_json(nullptr);
    return j;
}

// Aligned two-block table: coverage then mean diameter, one column per method.
inline std::string render_table(const CoverageReport& report, const ExperimentConfig& cfg) {
    const std::string row_label =
        cfg.sim ? family_name(cfg.sim->family) : (cfg.csv_path.empty() ? "csv" : cfg.csv_path);
    std::ostringstream os;
    auto print_block = [&](const std::string& title, auto value_of) {
        os << title << " (n_train=" << cfg.n_train << ", reps=" << cfg.repetitions
           << ", level=" << std::fixed << std::setprecision(3) << 1.0 - cfg.delta << ")\n";
        os << std::left << std::setw(16) << "data";
        for (const auto& name : cfg.methods) os << std::right << std::setw(10) << name;
        os << "\n" << std::left << std::setw(16) << row_label;
        for (const auto& name : cfg.methods) {
            const auto& agg = report.per_method.at(name);
            if (agg.evaluated == 0) {
                os << std::right << std::setw(10) << "fail";
            } else {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.3f", value_of(agg));
                std::string cell(buf);
                if (agg.failures > 0) cell += "*";
                os << std::right << std::setw(10) << cell;
            }
        }
        os << "\n";
    };
    print_block("coverage", [](const MethodAggregate& a) { return a.coverage; });
    os << "\n";
    print_block("mean diameter", [](const MethodAggregate& a) { return a.mean_diameter; });
    if (report.kurtosis) {
        os << "\ntraining-error kurtosis: " << std::setprecision(4) << *report.kurtosis << "\n";
    } else {
        os << "\ntraining-error kurtosis: undefined\n";
    }
    return os.str();
}

// (kurtosis, method, coverage) rows; concatenate across runs for trend plots.
inline std::string render_kurtosis_csv(const CoverageReport& report, const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "kurtosis,method,coverage\n";
    char buf[64];
    for (const auto& name : cfg.methods) {
        const auto& agg = report.per_method.at(name);
        if (report.kurtosis) {
            std::snprintf(buf, sizeof(buf), "%.17g", *report.kurtosis);
            os << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g", agg.coverage);
        os << "," << name << "," << buf << "\n";
    }
    return os.str();
}

}  // namespace cud
