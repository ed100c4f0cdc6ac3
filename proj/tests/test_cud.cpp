#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cud/cud.hpp"
#include "helpers.hpp"

using namespace cud;
using testutil::QInstance;
using testutil::random_q_instance;

namespace {

CudConfig small_cfg() {
    CudConfig cfg;
    cfg.replicates = 4;
    cfg.delta = 0.05;
    return cfg;
}

// Independent route to the objective value at a point: materialized replicate
// rows for the loss, a raw sign loop for the deviation.
double objective_by_materialization(const QInstance& inst, const Eigen::VectorXd& beta,
                                    double alpha) {
    const int n = inst.mult.n();
    Eigen::MatrixXd rep_design(n, inst.design.cols());
    Eigen::VectorXd rep_labels(n);
    int r = 0;
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < inst.mult.phi[static_cast<size_t>(i)]; ++c) {
            rep_design.row(r) = inst.design.row(i);
            rep_labels[r++] = inst.labels[i];
        }
    auto mean_loss = [&](const Eigen::VectorXd& b) {
        return (rep_design * b - rep_labels).squaredNorm() / n;
    };
    double dev = 0;
    for (int i = 0; i < n; ++i) {
        const double pred = inst.design.row(i).dot(beta);
        const bool mis = (pred >= 0 ? 1.0 : -1.0) != inst.labels[i];
        if (mis) dev += inst.mult.phi[static_cast<size_t>(i)] - 1;
    }
    dev = std::fabs(dev) / n;
    return dev * g(alpha * (mean_loss(inst.beta_hat.beta) - mean_loss(beta)));
}

}  // namespace

TEST_CASE("g identities") {
    CHECK(g(0.0) == 1.0);
    CHECK(g(-0.5) == 0.5);
    CHECK(g(-2.0) == -1.0);
    CHECK(g(7.0) == 1.0);
    Rng rng(1);
    double prev_x = -10.0, prev_g = g(prev_x);
    for (int i = 0; i < 100; ++i) {
        const double x = prev_x + rng.next_double();
        CHECK(g(x) >= prev_g);
        if (x >= 0) CHECK(g(x) == 1.0);
        prev_x = x;
        prev_g = g(x);
    }
}

TEST_CASE("identity replicate gives zero supremum") {
    const QInstance inst = random_q_instance(8, 3);
    Multiplicities ones;
    ones.phi.assign(8, 1);
    const auto r = q_replicate(inst.design, inst.labels, inst.beta_hat, ones, small_cfg());
    CHECK(r.value == 0.0);
    CHECK_FALSE(r.inexact);
}

TEST_CASE("supremum dominates the value at beta_hat") {
    for (uint64_t seed = 0; seed < 30; ++seed) {
        const QInstance inst = random_q_instance(8, 100 + seed);
        const CudConfig cfg = small_cfg();
        const auto r = q_replicate(inst.design, inst.labels, inst.beta_hat, inst.mult, cfg);
        const double at_hat =
            deviation(inst.mult, misclassified(inst.design, inst.labels, inst.beta_hat));
        CHECK(r.value >= at_hat - 1e-9);
    }
}

TEST_CASE("branch and bound equals brute force") {
    Rng rng(9);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 6 + static_cast<int>(rng.next_below(7));
        const QInstance inst = random_q_instance(n, 5000 + static_cast<uint64_t>(trial));
        const CudConfig cfg = small_cfg();
        const auto bb = q_replicate(inst.design, inst.labels, inst.beta_hat, inst.mult, cfg);
        const double bf = brute_force_q(inst.design, inst.labels, inst.beta_hat, inst.mult, cfg);
        INFO("trial " << trial << " n " << n);
        CHECK_FALSE(bb.inexact);
        CHECK(bb.value == Catch::Approx(bf).margin(1e-6));
    }
}

TEST_CASE("node ordering does not change the value") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const QInstance inst = random_q_instance(9, 7770 + seed);
        CudConfig by_weight = small_cfg();
        CudConfig by_input = small_cfg();
        by_input.node_order = CudConfig::NodeOrder::InputOrder;
        const auto a = q_replicate(inst.design, inst.labels, inst.beta_hat, inst.mult, by_weight);
        const auto b = q_replicate(inst.design, inst.labels, inst.beta_hat, inst.mult, by_input);
        CHECK(a.value == Catch::Approx(b.value).margin(1e-9));
    }
}

TEST_CASE("pruning does not change the value") {
    for (uint64_t seed = 0; seed < 100; ++seed) {
        const QInstance inst = random_q_instance(8, 31000 + seed);
        CudConfig pruned = small_cfg();
        CudConfig walk_all = small_cfg();
        walk_all.exhaustive = true;
        const auto a = q_replicate(inst.design, inst.labels, inst.beta_hat, inst.mult, pruned);
        const auto b = q_replicate(inst.design, inst.labels, inst.beta_hat, inst.mult, walk_all);
        INFO("seed " << seed);
        CHECK(a.value == Catch::Approx(b.value).margin(1e-9));
    }
}

TEST_CASE("supremum dominates pointwise objective values") {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 6 + static_cast<int>(rng.next_below(5));
        const QInstance inst = random_q_instance(n, 40000 + static_cast<uint64_t>(trial));
        const CudConfig cfg = small_cfg();
        const auto r = q_replicate(inst.design, inst.labels, inst.beta_hat, inst.mult, cfg);
        const QReplicateProblem prob =
            build_q_problem(inst.design, inst.labels, inst.beta_hat, inst.mult, cfg);
        for (int probe = 0; probe < 1000; ++probe) {
            Eigen::VectorXd b(2);
            b << rng.next_normal() * 3, rng.next_normal() * 3;
            CHECK(r.value >= exact_objective(prob, {b}) - 1e-9);
        }
    }
}

TEST_CASE("exact objective agrees with materialized-row evaluation") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const QInstance inst = random_q_instance(9, 60000 + static_cast<uint64_t>(trial));
        const CudConfig cfg = small_cfg();
        const QReplicateProblem prob =
            build_q_problem(inst.design, inst.labels, inst.beta_hat, inst.mult, cfg);
        Eigen::VectorXd b(2);
        b << rng.next_normal(), rng.next_normal();
        CHECK(exact_objective(prob, {b}) ==
              Catch::Approx(objective_by_materialization(inst, b, prob.alpha)).margin(1e-12));
    }
}

TEST_CASE("brute force degenerate cases") {
    // d = 0: all multiplicities one.
    const QInstance inst = random_q_instance(6, 77);
    Multiplicities ones;
    ones.phi.assign(6, 1);
    CHECK(brute_force_q(inst.design, inst.labels, inst.beta_hat, ones, small_cfg()) == 0.0);

    // d = 1: one point duplicated, one dropped, both sharing a feature vector
    // forces a two-pattern enumeration.
    Eigen::MatrixXd design(2, 2);
    design << 1, 5, 1, 5;
    Eigen::VectorXd labels(2);
    labels << 1, 1;
    const Coefficients beta_hat = fit_least_squares(design, labels);
    Multiplicities m{{2, 0}};
    const CudConfig cfg = small_cfg();
    const double bf = brute_force_q(design, labels, beta_hat, m, cfg);
    const auto bb = q_replicate(design, labels, beta_hat, m, cfg);
    CHECK(bf == Catch::Approx(bb.value).margin(1e-9));
    // The sign pattern misclassifying the (duplicated minus dropped) point has
    // net weight 0 here, so the supremum is 0.
    CHECK(bf == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("node upper bound shapes") {
    const QInstance inst = random_q_instance(10, 88);
    const CudConfig cfg = small_cfg();
    const QReplicateProblem prob =
        build_q_problem(inst.design, inst.labels, inst.beta_hat, inst.mult, cfg);
    if (prob.points.empty()) return;

    long total_pos = 0, total_neg = 0;
    for (const auto& bp : prob.points) {
        total_pos += bp.pos_mass;
        total_neg += bp.neg_mass;
    }

    SignNode root;
    root.f = prob.base_f;
    root.p = total_pos;
    root.n_mass = total_neg;
    const auto qp =
        min_loss_over_cone(prob.design, prob.labels, prob.weights, {}, cfg.solver_tol);
    // Root: F = 0, the g term is exactly 1 because beta_hat is feasible.
    const double u = node_upper_bound(root, qp.value, prob);
    CHECK(u == Catch::Approx(std::max(static_cast<double>(total_pos),
                                      -static_cast<double>(total_neg)) /
                             prob.n));

    // Non-positive g term zeroes the bound: pass a huge loss infimum.
    CHECK(node_upper_bound(root, prob.loss_hat + 10.0, prob) == 0.0);

    // Leaf: P = N = 0 gives C(M) * g exactly.
    SignNode leaf;
    leaf.f = 3;
    leaf.p = 0;
    leaf.n_mass = 0;
    const double gval = std::max(0.0, g(prob.alpha * (prob.loss_hat - qp.value)));
    CHECK(node_upper_bound(leaf, qp.value, prob) ==
          Catch::Approx(3.0 / prob.n * gval));
}

TEST_CASE("node incumbent respects strict feasibility") {
    const QInstance inst = random_q_instance(8, 99);
    const CudConfig cfg = small_cfg();
    const QReplicateProblem prob =
        build_q_problem(inst.design, inst.labels, inst.beta_hat, inst.mult, cfg);

    // At the root (no constraints) the candidate is returned as-is: the
    // incumbent is the exact objective at beta_hat, i.e. the deviation.
    const auto at_root = node_incumbent(prob, {}, inst.beta_hat);
    REQUIRE(at_root.has_value());
    const double dev_hat =
        deviation(inst.mult, misclassified(inst.design, inst.labels, inst.beta_hat));
    CHECK(*at_root == Catch::Approx(dev_hat).margin(1e-12));

    // A boundary-only cone yields no incumbent.
    Eigen::VectorXd dir(2);
    dir << 1, 2;
    SignConstraints opposing = {{dir, 1}, {dir, -1}};
    CHECK_FALSE(node_incumbent(prob, opposing, inst.beta_hat).has_value());
}

TEST_CASE("every ancestor bound dominates strictly feasible objectives") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        const QInstance inst = random_q_instance(7, 123456 + seed);
        const CudConfig cfg = small_cfg();
        const QReplicateProblem prob =
            build_q_problem(inst.design, inst.labels, inst.beta_hat, inst.mult, cfg);
        const int d = static_cast<int>(prob.points.size());
        if (d == 0 || d > 8) continue;

        for (uint32_t mask = 0; mask < (1u << d); ++mask) {
            std::vector<int8_t> signs;
            SignNode node;
            node.f = prob.base_f;
            node.p = 0;
            node.n_mass = 0;
            for (int j = 0; j < d; ++j) {
                const bool plus = (mask >> j) & 1u;
                signs.push_back(plus ? 1 : -1);
                node.f += plus ? prob.points[static_cast<size_t>(j)].contrib_plus
                               : prob.points[static_cast<size_t>(j)].contrib_minus;
            }
            node.depth = d;
            const auto constraints = make_constraints(prob, signs);
            const auto qp = min_loss_over_cone(prob.design, prob.labels, prob.weights,
                                               constraints, cfg.solver_tol);
            const double upper = node_upper_bound(node, qp.value, prob);
            const auto inc = node_incumbent(prob, constraints, qp.minimizer);
            if (inc) CHECK(upper >= *inc - 1e-9);
        }
    }
}

TEST_CASE("quantile rule") {
    CHECK(cud_quantile({0.1, 0.2, 0.3, 0.4}, 0.25) == Catch::Approx(0.3));
    CHECK(cud_quantile({0.5, 0.1}, 1.0) == 0.0);
    // Monotone nonincreasing in delta.
    std::vector<double> vals = {0.05, 0.2, 0.4, 0.8, 0.9, 0.33, 0.21, 0.11};
    double prev = 1e9;
    for (double delta : {0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.99, 1.0}) {
        const double q = cud_quantile(vals, delta);
        CHECK(q <= prev + 1e-15);
        prev = q;
    }
}

TEST_CASE("cud interval sanity on three points data") {
    const Dataset data = generate_simulated(SimSpec::three_points(), 30, 5);
    CudConfig cfg;
    cfg.replicates = 50;
    cfg.delta = 0.05;
    const auto res = cud_interval_detail(data, BasisSpec::raw_affine(), cfg, 11);
    const auto& ci = res.interval;
    CHECK(ci.method == "cud");
    CHECK(ci.lower >= 0.0);
    CHECK(ci.upper <= 1.0);
    CHECK(ci.lower <= ci.center);
    CHECK(ci.center <= ci.upper);
    CHECK(res.inexact_replicates == 0);
    REQUIRE(res.q_values.size() == 50);

    // Determinism, including across worker counts.
    CudConfig threaded = cfg;
    threaded.workers = 4;
    const auto res2 = cud_interval_detail(data, BasisSpec::raw_affine(), threaded, 11);
    CHECK(res.interval.lower == res2.interval.lower);
    CHECK(res.interval.upper == res2.interval.upper);
    CHECK(res.q_values == res2.q_values);
}

TEST_CASE("delta one gives a degenerate interval at the training error") {
    const Dataset data = generate_simulated(SimSpec::three_points(), 20, 6);
    CudConfig cfg;
    cfg.replicates = 10;
    cfg.delta = 1.0;
    const auto ci = cud_interval(data, BasisSpec::raw_affine(), cfg, 3);
    CHECK(ci.half_width == 0.0);
    CHECK(ci.lower == ci.upper);
}

TEST_CASE("config validation") {
    CudConfig cfg;
    cfg.delta = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = CudConfig{};
    cfg.replicates = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
