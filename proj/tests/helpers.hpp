#pragma once

// Shared instance generators and independent oracles for the test suites.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "cud/bootstrap.hpp"
#include "cud/model.hpp"
#include "cud/region_opt.hpp"
#include "cud/rng.hpp"

namespace testutil {

struct ConeInstance {
    Eigen::MatrixXd design;   // n x 2
    Eigen::VectorXd labels;
    Eigen::VectorXd weights;
    cud::SignConstraints constraints;
};

inline ConeInstance random_cone_instance(uint64_t seed) {
    cud::Rng rng(seed);
    const int n = 4 + static_cast<int>(rng.next_below(5));
    ConeInstance inst;
    inst.design.resize(n, 2);
    inst.labels.resize(n);
    inst.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        inst.design(i, 0) = rng.next_normal();
        inst.design(i, 1) = rng.next_normal();
        inst.labels[i] = rng.next_double() < 0.5 ? 1.0 : -1.0;
        inst.weights[i] = static_cast<double>(rng.next_below(4));
    }
    const int nc = 1 + static_cast<int>(rng.next_below(4));
    for (int j = 0; j < nc; ++j) {
        Eigen::VectorXd dir(2);
        dir << rng.next_normal(), rng.next_normal();
        inst.constraints.push_back(
            {dir, rng.next_double() < 0.5 ? 1 : -1});
    }
    return inst;
}

// Independent minimum over the cone restricted to the radius-10 disk: a
// 2001 x 2001 grid pass over [-10, 10]^2 followed by one zoomed 2001 x 2001
// pass around the best cell. Also reports the best point's norm so callers
// can reject instances whose minimum sits near the disk boundary.
struct GridOracleResult {
    double value = std::numeric_limits<double>::infinity();
    Eigen::Vector2d argmin = Eigen::Vector2d::Zero();
};

inline GridOracleResult grid_oracle(const ConeInstance& inst) {
    const Eigen::Index n = inst.design.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<Eigen::Vector2d> normals;
    for (const auto& c : inst.constraints)
        normals.push_back(static_cast<double>(c.sign) * Eigen::Vector2d(c.direction));

    auto loss = [&](const Eigen::Vector2d& b) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = inst.design(i, 0) * b[0] + inst.design(i, 1) * b[1] - inst.labels[i];
            s += inst.weights[i] * r * r;
        }
        return s * inv_n;
    };
    auto feasible = [&](const Eigen::Vector2d& b) {
        for (const auto& c : normals)
            if (c.dot(b) < 0.0) return false;
        return true;
    };
    auto sweep = [&](double cx, double cy, double half, GridOracleResult& best) {
        const int grid = 2001;
        const double step = 2.0 * half / (grid - 1);
        for (int i = 0; i < grid; ++i) {
            const double x = cx - half + i * step;
            for (int j = 0; j < grid; ++j) {
                const Eigen::Vector2d b(x, cy - half + j * step);
                if (b.norm() > 10.0 || !feasible(b)) continue;
                const double v = loss(b);
                if (v < best.value) {
                    best.value = v;
                    best.argmin = b;
                }
            }
        }
    };

    GridOracleResult best;
    sweep(0.0, 0.0, 10.0, best);
    if (std::isfinite(best.value)) {
        const double coarse_step = 20.0 / 2000.0;
        sweep(best.argmin[0], best.argmin[1], coarse_step, best);
    }
    return best;
}

// A small random classification instance for the branch-and-bound tests.
struct QInstance {
    Eigen::MatrixXd design;
    Eigen::VectorXd labels;
    cud::Coefficients beta_hat;
    cud::Multiplicities mult;
};

inline QInstance random_q_instance(int n, uint64_t seed) {
    cud::Rng rng(seed);
    QInstance inst;
    inst.design.resize(n, 2);
    inst.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        inst.design(i, 0) = 1.0;  // affine basis on one feature
        inst.design(i, 1) = rng.next_normal();
        inst.labels[i] = rng.next_double() < 0.5 ? 1.0 : -1.0;
    }
    inst.beta_hat = cud::fit_least_squares(inst.design, inst.labels);
    inst.mult = cud::draw_multiplicities(n, cud::mix64(seed ^ 0xabcdef));
    return inst;
}

}  // namespace testutil
