#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cud/model.hpp"

namespace cud {

// One homogeneous half-space: sign * (direction . beta) >= 0.
struct SignConstraint {
    Eigen::VectorXd direction;
    int sign;  // +1 or -1
};

using SignConstraints = std::vector<SignConstraint>;

struct ConeMinResult {
    double value = 0.0;         // infimum of the loss over the closed cone
    Coefficients minimizer;     // feasible point attaining value within tol
    std::vector<int> active_set;  // constraint indices tight at the minimizer
    bool converged = true;
    int iterations = 0;
};

// Minimizes (1/n) sum_i w_i (row_i . beta - y_i)^2 over the closed cone
// {beta : s_j (x_j . beta) >= 0 for all j} with a primal active-set method.
// beta = 0 is always feasible, so the loop starts there; equality-constrained
// subproblems are solved on the working set's null space with a min-norm
// least-squares solve, which also handles singular normal equations.
inline ConeMinResult min_loss_over_cone(const Eigen::MatrixXd& design,
                                        const Eigen::VectorXd& labels,
                                        const Eigen::VectorXd& weights,
                                        const SignConstraints& constraints, double tol = 1e-8) {
    if (!(tol > 0.0)) throw std::invalid_argument("min_loss_over_cone: tol must be positive");
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (labels.size() != n || weights.size() != n)
        throw std::invalid_argument("min_loss_over_cone: shape mismatch");

    const Eigen::VectorXd s = weights.cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd a = s.asDiagonal() * design;
    const Eigen::VectorXd b = s.cwiseProduct(labels);
    const double inv_n = 1.0 / static_cast<double>(n);
    auto loss_at = [&](const Eigen::VectorXd& x) { return (a * x - b).squaredNorm() * inv_n; };

    // Unit-normalized constraint rows; zero directions constrain nothing.
    const int nc = static_cast<int>(constraints.size());
    std::vector<Eigen::VectorXd> rows(static_cast<size_t>(nc));
    std::vector<bool> vacuous(static_cast<size_t>(nc), false);
    for (int j = 0; j < nc; ++j) {
        const auto& cj = constraints[static_cast<size_t>(j)];
        if (cj.direction.size() != p)
            throw std::invalid_argument("min_loss_over_cone: constraint dimension mismatch");
        const double norm = cj.direction.norm();
        if (norm == 0.0 || !std::isfinite(norm)) {
            vacuous[static_cast<size_t>(j)] = true;
            rows[static_cast<size_t>(j)] = Eigen::VectorXd::Zero(p);
        } else {
            rows[static_cast<size_t>(j)] =
                (static_cast<double>(cj.sign) / norm) * cj.direction;
        }
    }

    ConeMinResult res;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
    std::vector<int> working;  // sorted constraint indices held as equalities
    const int iter_cap = 100 + 50 * (nc + static_cast<int>(p));
    int iter = 0;
    bool converged = false;

    while (iter++ < iter_cap) {
        // Null space of the working-set rows.
        Eigen::MatrixXd z;
        if (working.empty()) {
            z = Eigen::MatrixXd::Identity(p, p);
        } else {
            Eigen::MatrixXd cw(static_cast<Eigen::Index>(working.size()), p);
            for (size_t r = 0; r < working.size(); ++r)
                cw.row(static_cast<Eigen::Index>(r)) = rows[static_cast<size_t>(working[r])];
            Eigen::FullPivLU<Eigen::MatrixXd> lu(cw);
            z = lu.kernel();
            if (lu.dimensionOfKernel() == 0) z.resize(p, 0);
        }

        // Equality-constrained minimizer on x + range(z).
        Eigen::VectorXd d = Eigen::VectorXd::Zero(p);
        if (z.cols() > 0) {
            const Eigen::MatrixXd az = a * z;
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(az);
            const Eigen::VectorXd u = cod.solve(b - a * x);
            d = z * u;
        }

        const double step_scale = 1.0 + x.norm();
        if (d.norm() <= 1e-11 * step_scale) {
            // Subspace optimum; inspect multipliers of grad f = sum lambda_j c_j.
            if (working.empty()) {
                converged = true;
                break;
            }
            const Eigen::VectorXd grad = 2.0 * inv_n * (a.transpose() * (a * x - b));
            Eigen::MatrixXd cwt(p, static_cast<Eigen::Index>(working.size()));
            for (size_t r = 0; r < working.size(); ++r)
                cwt.col(static_cast<Eigen::Index>(r)) = rows[static_cast<size_t>(working[r])];
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(cwt);
            const Eigen::VectorXd lambda = cod.solve(grad);
            int drop = -1;
            double most_negative = -1e-10 * (1.0 + grad.norm());
            for (Eigen::Index r = 0; r < lambda.size(); ++r) {
                if (lambda[r] < most_negative) {
                    most_negative = lambda[r];
                    drop = static_cast<int>(r);
                }
            }
            if (drop < 0) {
                converged = true;
                break;
            }
            working.erase(working.begin() + drop);
            continue;
        }

        // Longest feasible step toward the subspace optimum.
        double alpha = 1.0;
        int blocking = -1;
        for (int j = 0; j < nc; ++j) {
            if (vacuous[static_cast<size_t>(j)]) continue;
            if (std::find(working.begin(), working.end(), j) != working.end()) continue;
            const double v = rows[static_cast<size_t>(j)].dot(d);
            if (v >= -1e-14 * step_scale) continue;
            const double slack = std::max(0.0, rows[static_cast<size_t>(j)].dot(x));
            const double limit = slack / (-v);
            if (limit < alpha) {
                alpha = limit;
                blocking = j;
            }
        }
        x += alpha * d;
        if (blocking >= 0) {
            working.insert(std::upper_bound(working.begin(), working.end(), blocking), blocking);
        }
    }

    res.value = loss_at(x);
    res.minimizer = Coefficients{x};
    res.converged = converged;
    res.iterations = iter;
    const double tight_tol = 1e-9 * (1.0 + x.norm());
    for (int j = 0; j < nc; ++j) {
        if (vacuous[static_cast<size_t>(j)]) continue;
        if (std::fabs(rows[static_cast<size_t>(j)].dot(x)) <= tight_tol)
            res.active_set.push_back(j);
    }
    return res;
}

// A point satisfying every constraint with strictly positive slack, found by
// pushing the reference along an interior direction of the cone. The interior
// direction comes from a perceptron pass over the unit constraint normals,
// which terminates iff the open cone is nonempty (budget-capped otherwise).
inline std::optional<Coefficients> strictly_feasible_point(const SignConstraints& constraints,
                                                           const Coefficients& reference,
                                                           int budget = 20000) {
    if (constraints.empty()) return reference;
    const Eigen::Index p = constraints.front().direction.size();

    std::vector<Eigen::VectorXd> rows;
    rows.reserve(constraints.size());
    for (const auto& c : constraints) {
        if (c.direction.size() != p)
            throw std::invalid_argument("strictly_feasible_point: constraint dimension mismatch");
        const double norm = c.direction.norm();
        if (norm == 0.0 || !std::isfinite(norm)) return std::nullopt;  // open region empty
        rows.push_back((static_cast<double>(c.sign) / norm) * c.direction);
    }

    auto min_slack = [&](const Eigen::VectorXd& x) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& r : rows) m = std::min(m, r.dot(x));
        return m;
    };

    if (reference.beta.size() == p && min_slack(reference.beta) > 0.0) return reference;

    // Perceptron on the normals: w ends up with positive dot against every row.
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    bool found = false;
    for (int it = 0; it < budget; ++it) {
        bool violated = false;
        for (const auto& r : rows) {
            if (r.dot(w) <= 0.0) {
                w += r;
                violated = true;
                break;
            }
        }
        if (!violated) {
            found = true;
            break;
        }
    }
    if (!found) return std::nullopt;

    Eigen::VectorXd base =
        reference.beta.size() == p ? reference.beta : Eigen::VectorXd::Zero(p);
    const double target = 1e-8 * (1.0 + base.norm());
    double t = 0.0;
    for (const auto& r : rows) {
        const double ws = r.dot(w);
        const double need = (target - r.dot(base)) / ws;
        t = std::max(t, need);
    }
    Eigen::VectorXd cand = base + t * w;
    for (int tries = 0; tries < 8 && min_slack(cand) <= 0.0; ++tries) {
        t = (t == 0.0) ? target : t * 2.0;
        cand = base + t * w;
    }
    if (min_slack(cand) <= 0.0) return std::nullopt;
    return Coefficients{cand};
}

}  // namespace cud
