// Command-line front door: `gen` materializes simulated datasets, `ci`
// computes one confidence interval, `coverage` runs the Monte-Carlo protocol.
// Exit codes: 0 success, 2 usage/config error, 3 I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "cud/dataset.hpp"
#include "cud/harness.hpp"
#include "cud/report.hpp"

namespace {

constexpr const char* kArtifactVersion = "1.0.0";

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw cud::IoError("cannot open for writing: " + path);
    os << content;
    if (!os) throw cud::IoError("write failed: " + path);
}

// Every output file is listed in exactly one manifest.
void write_manifest(const std::string& path, const std::string& command,
                    const nlohmann::ordered_json& config, uint64_t seed,
                    const std::string& started, const std::vector<std::string>& outputs) {
    nlohmann::ordered_json m;
    m["command"] = command;
    m["artifact_version"] = kArtifactVersion;
    m["config"] = config;
    m["seed"] = seed;
    m["started"] = started;
    m["finished"] = iso_timestamp();
    m["outputs"] = outputs;
    write_text_file(path, m.dump(2) + "\n");
}

std::vector<std::string> parse_method_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

struct CommonFlags {
    double delta = 0.05;
    int cud_b = 500;
    int baseline_b = 500;
    double alpha_n = 0.0;
    std::string basis = "affine";
    uint64_t seed = 1;
    int workers = 1;
    bool no_standardize = false;
    std::string label_column = "label";
    std::string positive_label = "1";
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--delta", f.delta, "miss probability (interval level is 1-delta)")
        ->check(CLI::Range(1e-9, 1.0));
    cmd->add_option("--b", f.cud_b, "bootstrap replicates for the cud method")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--baseline-b", f.baseline_b, "bootstrap replicates for bs1/bs2/.632")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--alpha-n", f.alpha_n, "neighborhood scale in g (0 = use n)");
    cmd->add_option("--basis", f.basis, "affine, poly:<deg>, or pca:<k>");
    cmd->add_option("--seed", f.seed, "root seed (all randomness derives from it)");
    cmd->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--no-standardize", f.no_standardize,
                  "skip per-column z-scoring of raw features");
    cmd->add_option("--label-column", f.label_column, "CSV label column (name or index)");
    cmd->add_option("--positive-label", f.positive_label, "raw value mapped to +1");
}

int run_gen(const std::string& family, int n, uint64_t seed, const std::string& out_path) {
    const auto fam = cud::parse_family(family);
    if (!fam) throw std::invalid_argument("unknown family '" + family + "'");
    cud::SimSpec spec;
    spec.family = *fam;
    const std::string started = iso_timestamp();
    const cud::Dataset data = cud::generate_simulated(spec, n, seed);
    cud::write_csv(data, out_path);

    nlohmann::ordered_json config;
    config["family"] = family;
    config["n"] = n;
    write_manifest(out_path + ".manifest.json", "gen", config, seed, started, {out_path});
    std::cout << "wrote " << out_path << " (" << n << " rows)\n";
    return 0;
}

int run_ci(const std::string& method, const std::string& data_path, const CommonFlags& f,
           bool as_json) {
    cud::Dataset data = cud::load_csv(data_path, f.label_column, f.positive_label);
    if (!f.no_standardize) {
        const cud::Standardizer st = cud::Standardizer::fit(data);
        data = st.apply(data);
    }
    cud::BasisSpec basis = cud::parse_basis(f.basis);
    basis.freeze(data);

    cud::CudConfig cud_cfg;
    cud_cfg.replicates = f.cud_b;
    cud_cfg.delta = f.delta;
    cud_cfg.alpha_n = f.alpha_n;
    cud_cfg.workers = f.workers;
    cud_cfg.validate();
    cud::BaselineConfig base_cfg;
    base_cfg.replicates = f.baseline_b;
    base_cfg.delta = f.delta;
    base_cfg.validate();

    const cud::ConfidenceInterval ci =
        cud::build_interval(method, data, basis, cud_cfg, base_cfg, f.seed);

    if (as_json) {
        nlohmann::ordered_json j = cud::interval_to_json(ci);
        j["method"] = ci.method;
        std::cout << j.dump() << "\n";
    } else {
        char buf[256];
        std::string flags;
        for (const auto& fl : ci.flags) flags += (flags.empty() ? "" : ",") + fl;
        std::snprintf(buf, sizeof(buf),
                      "method=%s center=%.6f lower=%.6f upper=%.6f half_width=%.6f level=%.3f "
                      "flags=%s\n",
                      ci.method.c_str(), ci.center, ci.lower, ci.upper, ci.half_width, ci.level,
                      flags.c_str());
        std::cout << buf;
    }
    return 0;
}

int run_coverage(const std::string& family, const std::string& data_path, int n_train, int reps,
                 int truth_size, const std::string& methods_csv, const CommonFlags& f,
                 const std::string& out_prefix, bool print_json) {
    cud::ExperimentConfig cfg;
    if (!family.empty()) {
        const auto fam = cud::parse_family(family);
        if (!fam) throw std::invalid_argument("unknown family '" + family + "'");
        cud::SimSpec spec;
        spec.family = *fam;
        cfg.sim = spec;
    } else if (!data_path.empty()) {
        cfg.csv_data = cud::load_csv(data_path, f.label_column, f.positive_label);
        cfg.csv_path = data_path;
    } else {
        throw std::invalid_argument("coverage needs --family or --data");
    }
    cfg.n_train = n_train;
    cfg.repetitions = reps;
    cfg.truth_size = truth_size;
    cfg.delta = f.delta;
    cfg.methods = parse_method_list(methods_csv);
    cfg.seed = f.seed;
    cfg.cud.replicates = f.cud_b;
    cfg.cud.alpha_n = f.alpha_n;
    cfg.baseline.replicates = f.baseline_b;
    cfg.basis = cud::parse_basis(f.basis);
    cfg.standardize = !f.no_standardize;
    cfg.workers = f.workers;
    cfg.validate();

    const std::string started = iso_timestamp();
    const cud::CoverageReport report = cud::run_coverage_experiment(cfg);

    const std::string table = cud::render_table(report, cfg);
    const std::string json_text = cud::report_to_json(report, cfg).dump(2) + "\n";
    const std::string kurt_csv = cud::render_kurtosis_csv(report, cfg);

    const std::string table_path = out_prefix + ".txt";
    const std::string json_path = out_prefix + ".json";
    const std::string kurt_path = out_prefix + ".kurtosis.csv";
    write_text_file(table_path, table);
    write_text_file(json_path, json_text);
    write_text_file(kurt_path, kurt_csv);
    write_manifest(out_prefix + ".manifest.json", "coverage", cud::config_to_json(cfg), f.seed,
                   started, {table_path, json_path, kurt_path});

    std::cout << table;
    if (print_json) std::cout << json_text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"confidence sets for small-sample generalization error"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "write a simulated dataset as CSV");
    std::string gen_family = "donut", gen_out = "data.csv";
    int gen_n = 30;
    uint64_t gen_seed = 1;
    gen->add_option("--family", gen_family, "donut, outlier, threepoints, chisquare")->required();
    gen->add_option("--n", gen_n, "number of rows")->required()->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "root seed");
    gen->add_option("--out", gen_out, "output CSV path")->required();

    // ci
    auto* ci = app.add_subcommand("ci", "one confidence interval from a CSV dataset");
    std::string ci_method = "cud", ci_data;
    bool ci_json = false;
    CommonFlags ci_flags;
    ci->add_option("--method", ci_method, "cud, bs1, bs2, k, m, y, l")->required();
    ci->add_option("--data", ci_data, "input CSV path")->required();
    ci->add_flag("--json", ci_json, "print JSON instead of a text line");
    add_common_flags(ci, ci_flags);

    // coverage
    auto* cov = app.add_subcommand("coverage", "Monte-Carlo coverage/diameter experiment");
    std::string cov_family, cov_data, cov_methods = "cud,bs1,bs2,k,m,y,l";
    std::string cov_out = "coverage_report";
    int cov_n_train = 30, cov_reps = 200, cov_truth = 5000;
    bool cov_json = false;
    CommonFlags cov_flags;
    cov->add_option("--family", cov_family, "simulated family");
    cov->add_option("--data", cov_data, "real dataset CSV (split each repetition)");
    cov->add_option("--n-train", cov_n_train, "training-set size")->check(CLI::PositiveNumber);
    cov->add_option("--reps", cov_reps, "Monte-Carlo repetitions")->check(CLI::PositiveNumber);
    cov->add_option("--truth-size", cov_truth, "fresh truth draw size (simulated data)")
        ->check(CLI::PositiveNumber);
    cov->add_option("--methods", cov_methods, "comma-separated method list");
    cov->add_option("--out", cov_out, "output path prefix");
    cov->add_flag("--json", cov_json, "also print the JSON report to stdout");
    cov->set_config("--config", "", "read options from an INI/TOML file");
    add_common_flags(cov, cov_flags);

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return run_gen(gen_family, gen_n, gen_seed, gen_out);
        if (ci->parsed()) return run_ci(ci_method, ci_data, ci_flags, ci_json);
        if (cov->parsed())
            return run_coverage(cov_family, cov_data, cov_n_train, cov_reps, cov_truth,
                                cov_methods, cov_flags, cov_out, cov_json);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const cud::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
