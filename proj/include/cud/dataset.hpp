#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cud/rng.hpp"

namespace cud {

// I/O and parse failures; mapped to a distinct CLI exit code.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A labeled sample: n rows of q raw features, labels exactly -1 or +1.
struct Dataset {
    Eigen::MatrixXd features;  // n x q
    Eigen::VectorXd labels;    // entries in {-1, +1}

    Eigen::Index n() const { return features.rows(); }
    Eigen::Index q() const { return features.cols(); }

    void validate() const {
        if (features.rows() < 1 || features.cols() < 1)
            throw std::invalid_argument("Dataset: need n >= 1 and q >= 1");
        if (labels.size() != features.rows())
            throw std::invalid_argument("Dataset: label count must match row count");
        for (Eigen::Index i = 0; i < labels.size(); ++i) {
            if (labels[i] != 1.0 && labels[i] != -1.0)
                throw std::invalid_argument("Dataset: labels must be exactly -1 or +1");
        }
        if (!features.allFinite())
            throw std::invalid_argument("Dataset: features must be finite");
    }
};

enum class SimFamily { Donut, Outlier, ThreePoints, ChiSquareSmall };

inline const char* family_name(SimFamily f) {
    switch (f) {
        case SimFamily::Donut: return "donut";
        case SimFamily::Outlier: return "outlier";
        case SimFamily::ThreePoints: return "threepoints";
        case SimFamily::ChiSquareSmall: return "chisquare";
    }
    return "?";
}

inline std::optional<SimFamily> parse_family(const std::string& s) {
    if (s == "donut") return SimFamily::Donut;
    if (s == "outlier") return SimFamily::Outlier;
    if (s == "threepoints") return SimFamily::ThreePoints;
    if (s == "chisquare") return SimFamily::ChiSquareSmall;
    return std::nullopt;
}

// Simulated-distribution parameters. Defaults define the four families used
// throughout; see README for the geometry of each.
//
//   donut        two concentric annuli in the plane, label = annulus, with a
//                small label-flip rate. P(+1) = p_outer*(1-flip) + (1-p_outer)*flip.
//   outlier      two Gaussian blobs at (+/-2, 0) labeled by side, plus a distant
//                high-leverage cluster at (10, 0) labeled -1 that drags the
//                least-squares fit. P(+1) = (1 - p_outlier) / 2.
//   threepoints  one feature, atoms {-1, 0, +1} with labels (+1, -1, +1) and
//                unequal probabilities; no affine rule in one variable gets all
//                three right. P(+1) = p1 + p3.
//   chisquare    one chi-square feature; labels are independent fair coin flips,
//                so the population least-squares coefficients are exactly zero.
struct SimSpec {
    SimFamily family = SimFamily::Donut;

    // donut
    double donut_inner_r0 = 0.6, donut_inner_r1 = 1.0;
    double donut_outer_r0 = 1.4, donut_outer_r1 = 1.8;
    double donut_p_outer = 0.6;  // probability of the outer (+1) annulus
    double donut_flip = 0.05;    // label-flip noise

    // outlier
    double outlier_blob_sigma = 0.5;
    double outlier_p = 0.1;          // probability of the leverage cluster
    double outlier_x = 10.0;         // cluster center (outlier_x, 0), label -1
    double outlier_cluster_sigma = 0.5;

    // threepoints
    double tp_p1 = 0.5, tp_p2 = 0.3, tp_p3 = 0.2;  // atoms -1, 0, +1

    // chisquare
    int chisq_df = 3;
    double chisq_p_pos = 0.5;  // keep at 0.5 for zero population coefficients

    void validate() const {
        auto check_prob = [](double p, const char* what) {
            if (!(p >= 0.0 && p <= 1.0))
                throw std::invalid_argument(std::string("SimSpec: ") + what + " must be in [0, 1]");
        };
        switch (family) {
            case SimFamily::Donut:
                if (!(donut_inner_r0 > 0 && donut_inner_r1 > donut_inner_r0 &&
                      donut_outer_r0 > 0 && donut_outer_r1 > donut_outer_r0))
                    throw std::invalid_argument("SimSpec: donut radii must be positive and increasing");
                check_prob(donut_p_outer, "donut_p_outer");
                check_prob(donut_flip, "donut_flip");
                break;
            case SimFamily::Outlier:
                if (!(outlier_blob_sigma > 0 && outlier_cluster_sigma > 0))
                    throw std::invalid_argument("SimSpec: outlier sigmas must be positive");
                check_prob(outlier_p, "outlier_p");
                break;
            case SimFamily::ThreePoints: {
                check_prob(tp_p1, "tp_p1");
                check_prob(tp_p2, "tp_p2");
                check_prob(tp_p3, "tp_p3");
                const double s = tp_p1 + tp_p2 + tp_p3;
                if (std::fabs(s - 1.0) > 1e-12)
                    throw std::invalid_argument("SimSpec: threepoints probabilities must sum to 1");
                break;
            }
            case SimFamily::ChiSquareSmall:
                if (chisq_df < 1) throw std::invalid_argument("SimSpec: chisq_df must be >= 1");
                check_prob(chisq_p_pos, "chisq_p_pos");
                break;
        }
    }

    int feature_dim() const {
        switch (family) {
            case SimFamily::Donut:
            case SimFamily::Outlier: return 2;
            case SimFamily::ThreePoints:
            case SimFamily::ChiSquareSmall: return 1;
        }
        return 0;
    }

    static SimSpec donut() { return SimSpec{.family = SimFamily::Donut}; }
    static SimSpec outlier() { return SimSpec{.family = SimFamily::Outlier}; }
    static SimSpec three_points() { return SimSpec{.family = SimFamily::ThreePoints}; }
    static SimSpec chi_square_small() { return SimSpec{.family = SimFamily::ChiSquareSmall}; }
};

// n i.i.d. draws from the family. The per-point draw order is fixed, so a
// (spec, n, seed) triple always produces the identical dataset.
inline Dataset generate_simulated(const SimSpec& spec, int n, uint64_t seed) {
    spec.validate();
    if (n < 1) throw std::invalid_argument("generate_simulated: n must be >= 1");

    const int q = spec.feature_dim();
    Dataset out;
    out.features.resize(n, q);
    out.labels.resize(n);
    Rng rng(seed);
    constexpr double two_pi = 6.283185307179586476925286766559;

    for (int i = 0; i < n; ++i) {
        switch (spec.family) {
            case SimFamily::Donut: {
                const bool outer = rng.next_double() < spec.donut_p_outer;
                const double r0 = outer ? spec.donut_outer_r0 : spec.donut_inner_r0;
                const double r1 = outer ? spec.donut_outer_r1 : spec.donut_inner_r1;
                // uniform on the annulus area
                const double r = std::sqrt(r0 * r0 + rng.next_double() * (r1 * r1 - r0 * r0));
                const double theta = two_pi * rng.next_double();
                double label = outer ? 1.0 : -1.0;
                if (rng.next_double() < spec.donut_flip) label = -label;
                out.features(i, 0) = r * std::cos(theta);
                out.features(i, 1) = r * std::sin(theta);
                out.labels[i] = label;
                break;
            }
            case SimFamily::Outlier: {
                const double u = rng.next_double();
                double cx, cy = 0.0, sigma, label;
                if (u < spec.outlier_p) {
                    cx = spec.outlier_x;
                    sigma = spec.outlier_cluster_sigma;
                    label = -1.0;
                } else if (u < spec.outlier_p + (1.0 - spec.outlier_p) / 2.0) {
                    cx = 2.0;
                    sigma = spec.outlier_blob_sigma;
                    label = 1.0;
                } else {
                    cx = -2.0;
                    sigma = spec.outlier_blob_sigma;
                    label = -1.0;
                }
                out.features(i, 0) = cx + sigma * rng.next_normal();
                out.features(i, 1) = cy + sigma * rng.next_normal();
                out.labels[i] = label;
                break;
            }
            case SimFamily::ThreePoints: {
                const double u = rng.next_double();
                if (u < spec.tp_p1) {
                    out.features(i, 0) = -1.0;
                    out.labels[i] = 1.0;
                } else if (u < spec.tp_p1 + spec.tp_p2) {
                    out.features(i, 0) = 0.0;
                    out.labels[i] = -1.0;
                } else {
                    out.features(i, 0) = 1.0;
                    out.labels[i] = 1.0;
                }
                break;
            }
            case SimFamily::ChiSquareSmall: {
                out.features(i, 0) = rng.next_chi_square(spec.chisq_df);
                out.labels[i] = rng.next_double() < spec.chisq_p_pos ? 1.0 : -1.0;
                break;
            }
        }
    }
    return out;
}

namespace detail {

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    return *end == '\0';
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    for (auto& c : cells) {
        const auto a = c.find_first_not_of(" \t");
        const auto b = c.find_last_not_of(" \t");
        c = (a == std::string::npos) ? std::string{} : c.substr(a, b - a + 1);
    }
    return cells;
}

}  // namespace detail

// Comma-delimited numeric CSV with an optional single header row, auto-detected
// by a non-numeric first row. label_column is a header name or a 0-based column
// index; rows whose label cell equals positive_label map to +1, all others to -1.
inline Dataset load_csv(const std::string& path, const std::string& label_column,
                        const std::string& positive_label) {
    std::ifstream in(path);
    if (!in) throw IoError("load_csv: cannot open file: " + path);

    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(detail::split_line(line));
    }
    if (rows.empty()) throw IoError("load_csv: empty file: " + path);

    // Header detection: any non-numeric cell in the first row.
    bool has_header = false;
    for (const auto& cell : rows.front()) {
        double v;
        if (!detail::parse_double(cell, v)) {
            has_header = true;
            break;
        }
    }

    const size_t ncols = rows.front().size();
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != ncols)
            throw IoError("load_csv: row " + std::to_string(r + 1) + " has " +
                          std::to_string(rows[r].size()) + " cells, expected " +
                          std::to_string(ncols));
    }

    // Resolve the label column.
    long label_idx = -1;
    if (has_header) {
        for (size_t c = 0; c < ncols; ++c) {
            if (rows.front()[c] == label_column) {
                label_idx = static_cast<long>(c);
                break;
            }
        }
    }
    if (label_idx < 0) {
        double idx;
        if (detail::parse_double(label_column, idx) && idx == std::floor(idx) && idx >= 0 &&
            idx < static_cast<double>(ncols)) {
            label_idx = static_cast<long>(idx);
        }
    }
    if (label_idx < 0)
        throw IoError("load_csv: label column absent: '" + label_column + "'");

    const size_t first_data = has_header ? 1 : 0;
    const size_t n = rows.size() - first_data;
    if (n < 1) throw IoError("load_csv: no data rows in " + path);
    const size_t q = ncols - 1;
    if (q < 1) throw IoError("load_csv: need at least one feature column");

    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
    out.labels.resize(static_cast<Eigen::Index>(n));
    bool saw_positive = false, saw_negative = false;
    for (size_t r = 0; r < n; ++r) {
        const auto& cells = rows[first_data + r];
        size_t fc = 0;
        for (size_t c = 0; c < ncols; ++c) {
            if (static_cast<long>(c) == label_idx) continue;
            double v;
            if (!detail::parse_double(cells[c], v))
                throw IoError("load_csv: non-numeric feature cell '" + cells[c] + "' at row " +
                              std::to_string(first_data + r + 1) + ", column " + std::to_string(c + 1));
            out.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(fc++)) = v;
        }
        const bool pos = cells[static_cast<size_t>(label_idx)] == positive_label;
        out.labels[static_cast<Eigen::Index>(r)] = pos ? 1.0 : -1.0;
        (pos ? saw_positive : saw_negative) = true;
    }
    if (!saw_positive || !saw_negative)
        throw IoError("load_csv: degenerate labels (single class after mapping)");
    out.validate();
    return out;
}

// Writes the CSV dialect load_csv reads back: header x1..xq plus a final
// `label` column holding +/-1. %.17g keeps the round trip bit-exact.
inline void write_csv(const Dataset& data, std::ostream& os) {
    for (Eigen::Index c = 0; c < data.q(); ++c) os << "x" << (c + 1) << ",";
    os << "label\n";
    char buf[64];
    for (Eigen::Index r = 0; r < data.n(); ++r) {
        for (Eigen::Index c = 0; c < data.q(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", data.features(r, c));
            os << buf << ",";
        }
        os << (data.labels[r] > 0 ? "1" : "-1") << "\n";
    }
}

inline void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("write_csv: cannot open for writing: " + path);
    write_csv(data, os);
    if (!os) throw IoError("write_csv: write failed: " + path);
}

// Uniform train/test partition: n_train rows without replacement (original
// order preserved within each part), remainder in the second output.
inline std::pair<Dataset, Dataset> split(const Dataset& data, int n_train, uint64_t seed) {
    const auto n = static_cast<int>(data.n());
    if (n_train < 1 || n_train >= n)
        throw std::invalid_argument("split: need 1 <= n_train < n");

    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    Rng rng(seed);
    for (int i = 0; i < n_train; ++i) {
        const auto j = i + static_cast<int>(rng.next_below(static_cast<uint64_t>(n - i)));
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    std::vector<char> in_train(static_cast<size_t>(n), 0);
    for (int i = 0; i < n_train; ++i) in_train[static_cast<size_t>(idx[static_cast<size_t>(i)])] = 1;

    Dataset train, test;
    train.features.resize(n_train, data.q());
    train.labels.resize(n_train);
    test.features.resize(n - n_train, data.q());
    test.labels.resize(n - n_train);
    Eigen::Index ti = 0, si = 0;
    for (int i = 0; i < n; ++i) {
        if (in_train[static_cast<size_t>(i)]) {
            train.features.row(ti) = data.features.row(i);
            train.labels[ti++] = data.labels[i];
        } else {
            test.features.row(si) = data.features.row(i);
            test.labels[si++] = data.labels[i];
        }
    }
    return {std::move(train), std::move(test)};
}

}  // namespace cud
