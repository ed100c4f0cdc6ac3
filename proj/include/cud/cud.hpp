#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "cud/bootstrap.hpp"
#include "cud/interval.hpp"
#include "cud/model.hpp"
#include "cud/region_opt.hpp"
#include "cud/rng.hpp"
#include "cud/stats.hpp"

namespace cud {

// The smoothing function g(x) = (x + 1) ∧ 1: identically 1 on [0, inf),
// a continuous stand-in for the indicator that keeps the supremum near the
// fitted classifier.
inline double g(double x) { return std::min(x + 1.0, 1.0); }

struct CudConfig {
    double alpha_n = 0.0;   // loss-neighborhood scale; <= 0 means "use n"
    int replicates = 500;   // bootstrap replicates B
    double delta = 0.05;    // 1 - confidence level
    double solver_tol = 1e-8;
    enum class NodeOrder { WeightDesc, InputOrder };
    NodeOrder node_order = NodeOrder::WeightDesc;
    long max_nodes = 100000;  // per-replicate branch-and-bound budget
    int workers = 1;          // threads over replicates
    bool exhaustive = false;  // walk the full tree, no pruning (testing)

    void validate() const {
        if (replicates < 1) throw std::invalid_argument("CudConfig: replicates must be >= 1");
        if (!(delta > 0.0 && delta <= 1.0))
            throw std::invalid_argument("CudConfig: delta must be in (0, 1]");
        if (!(solver_tol > 0.0)) throw std::invalid_argument("CudConfig: solver_tol must be > 0");
        if (max_nodes < 1) throw std::invalid_argument("CudConfig: max_nodes must be >= 1");
        if (workers < 1) throw std::invalid_argument("CudConfig: workers must be >= 1");
        if (alpha_n < 0.0) throw std::invalid_argument("CudConfig: alpha_n must be >= 0");
    }

    double resolved_alpha(int n) const {
        return alpha_n > 0.0 ? alpha_n : static_cast<double>(n);
    }
};

// One distinct off-support feature vector in expanded (design) space, with the
// integer mass bookkeeping needed for the deviation bounds. Coincident points
// share one sign constraint but keep their own label-dependent contributions.
struct BranchPoint {
    Eigen::VectorXd xtil;  // expanded feature vector
    long contrib_plus = 0;   // added to F when the decided sign is +1 (misclassifies y = -1)
    long contrib_minus = 0;  // added to F when the decided sign is -1 (misclassifies y = +1)
    long pos_mass = 0;       // sum of (phi - 1) over members with phi > 1
    long neg_mass = 0;       // sum of (phi - 1) over members with phi = 0 (negative)
    long total_abs_weight = 0;
};

// Preprocessed per-replicate problem for the Q^(b) supremum.
struct QReplicateProblem {
    Eigen::MatrixXd design;   // n x p
    Eigen::VectorXd labels;
    Eigen::VectorXd weights;  // multiplicities as doubles
    Coefficients beta_hat;    // fit on the unweighted original sample
    double loss_hat = 0.0;    // replicate-weighted loss at beta_hat
    double alpha = 0.0;
    int n = 0;
    long base_f = 0;  // contributions of zero expanded vectors (classified +1 always)
    std::vector<BranchPoint> points;          // branch order
    std::vector<std::pair<int, int>> off;     // (row index, net weight) for exact objectives
};

inline QReplicateProblem build_q_problem(const Eigen::MatrixXd& design,
                                         const Eigen::VectorXd& labels,
                                         const Coefficients& beta_hat, const Multiplicities& m,
                                         const CudConfig& cfg) {
    const int n = m.n();
    if (design.rows() != n || labels.size() != n)
        throw std::invalid_argument("q_replicate: shape mismatch");

    QReplicateProblem prob;
    prob.design = design;
    prob.labels = labels;
    prob.beta_hat = beta_hat;
    prob.n = n;
    prob.alpha = cfg.resolved_alpha(n);
    prob.weights.resize(n);
    for (int i = 0; i < n; ++i) prob.weights[i] = static_cast<double>(m.phi[static_cast<size_t>(i)]);
    prob.loss_hat = surrogate_loss(design, labels, prob.weights, beta_hat);

    // Group off-support rows by exact bitwise equality of the expanded vector.
    std::unordered_map<std::string, size_t> seen;
    for (int i = 0; i < n; ++i) {
        const int net = m.phi[static_cast<size_t>(i)] - 1;
        if (net == 0) continue;
        prob.off.emplace_back(i, net);
        const Eigen::VectorXd row = design.row(i);
        const bool is_zero = row.isZero(0.0);
        const long to_plus = labels[i] < 0 ? net : 0;   // sign +1 misclassifies y = -1
        const long to_minus = labels[i] > 0 ? net : 0;  // sign -1 misclassifies y = +1
        if (is_zero) {
            prob.base_f += to_plus;  // sign(0) = +1, fixed for every beta
            continue;
        }
        const std::string key = detail::row_key(row);
        auto it = seen.find(key);
        if (it == seen.end()) {
            seen.emplace(key, prob.points.size());
            BranchPoint bp;
            bp.xtil = row;
            prob.points.push_back(std::move(bp));
            it = seen.find(key);
        }
        BranchPoint& bp = prob.points[it->second];
        bp.contrib_plus += to_plus;
        bp.contrib_minus += to_minus;
        if (net > 0) {
            bp.pos_mass += net;
        } else {
            bp.neg_mass += net;
        }
        bp.total_abs_weight += std::labs(static_cast<long>(net));
    }

    if (cfg.node_order == CudConfig::NodeOrder::WeightDesc) {
        std::stable_sort(prob.points.begin(), prob.points.end(),
                         [](const BranchPoint& a, const BranchPoint& b) {
                             return a.total_abs_weight > b.total_abs_weight;
                         });
    }
    return prob;
}

// The exact objective O(beta) = |error deviation| * g(alpha (L_b(beta_hat) - L_b(beta)))
// at a concrete coefficient vector, with sign(0) = +1.
inline double exact_objective(const QReplicateProblem& prob, const Coefficients& beta) {
    long dev = 0;
    for (const auto& [row, net] : prob.off) {
        const double pred = prob.design.row(row).dot(beta.beta);
        const bool mis = sign_pos(pred) != prob.labels[row];
        if (mis) dev += net;
    }
    const double deviation = std::fabs(static_cast<double>(dev)) / static_cast<double>(prob.n);
    const double loss = surrogate_loss(prob.design, prob.labels, prob.weights, beta);
    return deviation * g(prob.alpha * (prob.loss_hat - loss));
}

// A branch-and-bound node: sign decisions for the first `depth` branch points,
// the fixed deviation sum F they imply, and the undecided masses P and N.
struct SignNode {
    int depth = 0;
    std::vector<int8_t> signs;  // +1 / -1 per decided branch point
    long f = 0;                 // fixed part of sum (phi - 1) z
    long p = 0;                 // remaining positive mass
    long n_mass = 0;            // remaining negative mass (<= 0)
    double loss_inf = 0.0;      // inf of the weighted loss over the node's closure
    Coefficients cone_min;      // minimizer attaining loss_inf
    double upper = 0.0;         // U(S)
    long id = 0;
};

inline SignConstraints make_constraints(const QReplicateProblem& prob,
                                        const std::vector<int8_t>& signs) {
    SignConstraints cs;
    cs.reserve(signs.size());
    for (size_t j = 0; j < signs.size(); ++j)
        cs.push_back(SignConstraint{prob.points[j].xtil, signs[j]});
    return cs;
}

// U(S): worst remaining deviation times the best g value over the closure.
inline double node_upper_bound(const SignNode& node, double loss_inf_over_closure,
                               const QReplicateProblem& prob) {
    const double dev_bound =
        std::max({static_cast<double>(node.f + node.p),
                  -static_cast<double>(node.f + node.n_mass), 0.0}) /
        static_cast<double>(prob.n);
    const double gmax = std::max(0.0, g(prob.alpha * (prob.loss_hat - loss_inf_over_closure)));
    return dev_bound * gmax;
}

// L(S): exact objective at a strictly feasible point of the node's open
// region, located by pushing the candidate inward. No strict point, no value.
inline std::optional<double> node_incumbent(const QReplicateProblem& prob,
                                            const SignConstraints& constraints,
                                            const Coefficients& candidate,
                                            int feasibility_budget = 2000) {
    const auto sf = strictly_feasible_point(constraints, candidate, feasibility_budget);
    if (!sf) return std::nullopt;
    return exact_objective(prob, *sf);
}

struct QReplicateResult {
    double value = 0.0;
    bool inexact = false;
    long nodes_expanded = 0;
    long qp_solves = 0;
};

// sup over coefficient space of |replicate error - original error| * g(...),
// computed exactly (to solver tolerance) by best-first branch-and-bound over
// the sign-pattern equivalence classes of the off-support points.
inline QReplicateResult q_replicate(const Eigen::MatrixXd& design, const Eigen::VectorXd& labels,
                                    const Coefficients& beta_hat, const Multiplicities& m,
                                    const CudConfig& cfg) {
    cfg.validate();
    QReplicateProblem prob = build_q_problem(design, labels, beta_hat, m, cfg);
    QReplicateResult res;

    if (prob.points.empty()) {
        // Every classifier induces the same flags; the g factor is 1 at beta_hat.
        res.value = std::fabs(static_cast<double>(prob.base_f)) / static_cast<double>(prob.n);
        return res;
    }

    const int depth_max = static_cast<int>(prob.points.size());
    const double prune_slack = 2.0 * prob.alpha * cfg.solver_tol + 1e-12;

    long total_pos = 0, total_neg = 0;
    for (const auto& bp : prob.points) {
        total_pos += bp.pos_mass;
        total_neg += bp.neg_mass;
    }

    double incumbent = std::max(0.0, exact_objective(prob, beta_hat));

    auto cmp = [](const SignNode& a, const SignNode& b) {
        if (a.upper != b.upper) return a.upper < b.upper;  // max-heap on U
        return a.id > b.id;                                // then FIFO
    };
    std::priority_queue<SignNode, std::vector<SignNode>, decltype(cmp)> queue(cmp);
    long next_id = 0;

    SignNode root;
    root.f = prob.base_f;
    root.p = total_pos;
    root.n_mass = total_neg;
    {
        const auto qp = min_loss_over_cone(prob.design, prob.labels, prob.weights, {},
                                           cfg.solver_tol);
        ++res.qp_solves;
        root.loss_inf = qp.value;
        root.cone_min = qp.minimizer;
        root.upper = node_upper_bound(root, root.loss_inf, prob);
        root.id = next_id++;
        if (const auto inc = node_incumbent(prob, {}, qp.minimizer))
            incumbent = std::max(incumbent, *inc);
    }
    queue.push(std::move(root));

    bool budget_hit = false;
    while (!queue.empty()) {
        if (!cfg.exhaustive && queue.top().upper <= incumbent + prune_slack) break;
        SignNode node = queue.top();
        queue.pop();

        if (node.depth == depth_max) {
            // Leaf: P = N = 0, so U(S) is the exact class value C(M) * g.
            incumbent = std::max(incumbent, node.upper);
            continue;
        }
        if (++res.nodes_expanded > cfg.max_nodes) {
            budget_hit = true;
            incumbent = std::max(incumbent, node.upper);
            break;
        }

        const BranchPoint& bp = prob.points[static_cast<size_t>(node.depth)];
        for (const int8_t s : {int8_t{1}, int8_t{-1}}) {
            SignNode child;
            child.depth = node.depth + 1;
            child.signs = node.signs;
            child.signs.push_back(s);
            child.f = node.f + (s > 0 ? bp.contrib_plus : bp.contrib_minus);
            child.p = node.p - bp.pos_mass;
            child.n_mass = node.n_mass - bp.neg_mass;

            // Deviation bound alone (g <= 1) decides cheap pruning before the QP.
            const double dev_bound =
                std::max({static_cast<double>(child.f + child.p),
                          -static_cast<double>(child.f + child.n_mass), 0.0}) /
                static_cast<double>(prob.n);
            if (!cfg.exhaustive && dev_bound <= incumbent + prune_slack) continue;

            const auto constraints = make_constraints(prob, child.signs);
            const auto qp = min_loss_over_cone(prob.design, prob.labels, prob.weights,
                                               constraints, cfg.solver_tol);
            ++res.qp_solves;
            child.loss_inf = qp.value;
            child.cone_min = qp.minimizer;
            child.upper = node_upper_bound(child, child.loss_inf, prob);
            if (!cfg.exhaustive && child.upper <= incumbent + prune_slack) continue;

            if (const auto inc = node_incumbent(prob, constraints, qp.minimizer))
                incumbent = std::max(incumbent, *inc);

            child.id = next_id++;
            queue.push(std::move(child));
        }
    }

    if (budget_hit) {
        // Report the global upper bound so the confidence set stays conservative.
        double bound = incumbent;
        while (!queue.empty()) {
            bound = std::max(bound, queue.top().upper);
            queue.pop();
        }
        res.value = bound;
        res.inexact = true;
        return res;
    }
    res.value = incumbent;
    return res;
}

// Independent oracle: exhaustively enumerates all 2^d sign patterns of the
// distinct off-support points and takes the best class value. Usable only for
// small d; q_replicate must agree with this to solver tolerance.
inline double brute_force_q(const Eigen::MatrixXd& design, const Eigen::VectorXd& labels,
                            const Coefficients& beta_hat, const Multiplicities& m,
                            const CudConfig& cfg) {
    cfg.validate();
    QReplicateProblem prob = build_q_problem(design, labels, beta_hat, m, cfg);
    const int d = static_cast<int>(prob.points.size());
    if (d > 20) throw std::invalid_argument("brute_force_q: too many distinct points (d > 20)");
    if (d == 0) return std::fabs(static_cast<double>(prob.base_f)) / static_cast<double>(prob.n);

    double best = 0.0;
    std::vector<int8_t> signs(static_cast<size_t>(d));
    for (uint32_t mask = 0; mask < (uint32_t{1} << d); ++mask) {
        long f = prob.base_f;
        for (int j = 0; j < d; ++j) {
            const bool plus = (mask >> j) & 1u;
            signs[static_cast<size_t>(j)] = plus ? int8_t{1} : int8_t{-1};
            f += plus ? prob.points[static_cast<size_t>(j)].contrib_plus
                      : prob.points[static_cast<size_t>(j)].contrib_minus;
        }
        const auto qp = min_loss_over_cone(prob.design, prob.labels, prob.weights,
                                           make_constraints(prob, signs), cfg.solver_tol);
        const double gmax = std::max(0.0, g(prob.alpha * (prob.loss_hat - qp.value)));
        const double value =
            std::fabs(static_cast<double>(f)) / static_cast<double>(prob.n) * gmax;
        best = std::max(best, value);
    }
    return best;
}

// Bootstrap quantile of the per-replicate suprema: the ceil((1-delta) B)-th
// order statistic, with the degenerate convention Q = 0 at delta = 1.
inline double cud_quantile(const std::vector<double>& q_values, double delta) {
    if (!(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("cud_quantile: delta must be in (0, 1]");
    if (delta == 1.0) return 0.0;
    return order_statistic_quantile(q_values, 1.0 - delta);
}

struct CudIntervalResult {
    ConfidenceInterval interval;
    std::vector<double> q_values;  // per-replicate suprema Q^(1..B)
    long inexact_replicates = 0;
};

// The full pipeline: fit on the sample, bootstrap B multiplicity replicates,
// compute each Q^(b) by branch-and-bound, and center the quantile half-width
// at the training error.
inline CudIntervalResult cud_interval_detail(const Dataset& data, const BasisSpec& basis,
                                             const CudConfig& cfg, uint64_t seed) {
    cfg.validate();
    BasisSpec frozen = basis;
    if (!frozen.frozen) frozen.freeze(data);
    const Eigen::MatrixXd design = expand(frozen, data);
    const Eigen::VectorXd& labels = data.labels;
    const int n = static_cast<int>(data.n());

    const Coefficients beta_hat = fit_least_squares(design, labels);
    const double train_error = empirical_error(design, labels, beta_hat);

    std::vector<double> q_values(static_cast<size_t>(cfg.replicates), 0.0);
    std::atomic<long> inexact{0};

    auto run_range = [&](int begin, int end) {
        for (int b = begin; b < end; ++b) {
            const uint64_t sb = derive_seed(seed, streams::replicate, static_cast<uint64_t>(b));
            const Multiplicities m = draw_multiplicities(n, sb);
            const auto r = q_replicate(design, labels, beta_hat, m, cfg);
            q_values[static_cast<size_t>(b)] = r.value;
            if (r.inexact) ++inexact;
        }
    };

    if (cfg.workers <= 1 || cfg.replicates < 2) {
        run_range(0, cfg.replicates);
    } else {
        const int workers = std::min(cfg.workers, cfg.replicates);
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        std::atomic<int> next{0};
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const int b = next.fetch_add(1);
                    if (b >= cfg.replicates) return;
                    run_range(b, b + 1);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    const double q_hat = cud_quantile(q_values, cfg.delta);
    std::vector<std::string> flags;
    if (inexact.load() > 0) flags.push_back("inexact");

    CudIntervalResult out;
    out.interval = ConfidenceInterval::from_center_half_width(train_error, q_hat, "cud",
                                                              1.0 - cfg.delta, std::move(flags));
    out.q_values = std::move(q_values);
    out.inexact_replicates = inexact.load();
    return out;
}

inline ConfidenceInterval cud_interval(const Dataset& data, const BasisSpec& basis,
                                       const CudConfig& cfg, uint64_t seed) {
    return cud_interval_detail(data, basis, cfg, seed).interval;
}

}  // namespace cud
