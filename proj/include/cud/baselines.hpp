#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cud/bootstrap.hpp"
#include "cud/dataset.hpp"
#include "cud/interval.hpp"
#include "cud/model.hpp"
#include "cud/rng.hpp"
#include "cud/stats.hpp"

namespace cud {

struct BaselineConfig {
    double delta = 0.05;
    int replicates = 500;  // bootstrap count for BS1/BS2 and the .632 estimate
    int folds = 5;         // cross-validation folds
    double prior_a = 1.0;  // Beta prior parameters
    double prior_b = 1.0;
    enum class EffectiveSizeRule { ExpectedUnique };
    EffectiveSizeRule effective_size_rule = EffectiveSizeRule::ExpectedUnique;

    void validate() const {
        if (!(delta > 0.0 && delta <= 1.0))
            throw std::invalid_argument("BaselineConfig: delta must be in (0, 1]");
        if (replicates < 1) throw std::invalid_argument("BaselineConfig: replicates must be >= 1");
        if (folds < 2) throw std::invalid_argument("BaselineConfig: folds must be >= 2");
        if (!(prior_a > 0.0 && prior_b > 0.0))
            throw std::invalid_argument("BaselineConfig: prior parameters must be positive");
    }
};

// Expected number of unique points in one bootstrap resample: n (1 - (1 - 1/n)^n).
inline double effective_sample_size(int n) {
    if (n < 1) throw std::invalid_argument("effective_sample_size: n must be >= 1");
    const double nd = static_cast<double>(n);
    return nd * (1.0 - std::pow(1.0 - 1.0 / nd, nd));
}

// 0.368 * training error + 0.632 * leave-one-out bootstrap error.
struct PointEstimate632 {
    double value = 0.0;
    double training_error = 0.0;
    double oob_error = 0.0;
};

namespace detail {

struct FrozenModel {
    BasisSpec basis;
    Eigen::MatrixXd design;
    Coefficients beta_hat;
    double training_error = 0.0;
};

inline FrozenModel freeze_and_fit(const Dataset& data, const BasisSpec& basis) {
    FrozenModel fm;
    fm.basis = basis;
    if (!fm.basis.frozen) fm.basis.freeze(data);
    fm.design = expand(fm.basis, data);
    fm.beta_hat = fit_least_squares(fm.design, data.labels);
    fm.training_error = empirical_error(fm.design, data.labels, fm.beta_hat);
    return fm;
}

// Out-of-bag estimates of the generalization error: one bootstrap refit per
// replicate, scored on the points the replicate omits. Replicates with an
// empty out-of-bag set (phi identically 1) are skipped.
struct OobEstimates {
    std::vector<double> estimates;
    int skipped = 0;
};

inline OobEstimates replicate_oob_estimates(const FrozenModel& fm, const Eigen::VectorXd& labels,
                                            int replicates, uint64_t seed) {
    const int n = static_cast<int>(fm.design.rows());
    OobEstimates out;
    out.estimates.reserve(static_cast<size_t>(replicates));
    Eigen::VectorXd weights(n);
    for (int b = 0; b < replicates; ++b) {
        const Multiplicities m =
            draw_multiplicities(n, derive_seed(seed, streams::replicate, static_cast<uint64_t>(b)));
        int oob = 0;
        for (int i = 0; i < n; ++i) {
            weights[i] = static_cast<double>(m.phi[static_cast<size_t>(i)]);
            if (m.phi[static_cast<size_t>(i)] == 0) ++oob;
        }
        if (oob == 0) {
            ++out.skipped;
            continue;
        }
        const Coefficients beta = fit_least_squares(fm.design, labels, weights);
        const Eigen::VectorXd pred = fm.design * beta.beta;
        int errs = 0;
        for (int i = 0; i < n; ++i) {
            if (m.phi[static_cast<size_t>(i)] != 0) continue;
            if (sign_pos(pred[i]) != labels[i]) ++errs;
        }
        out.estimates.push_back(static_cast<double>(errs) / static_cast<double>(oob));
    }
    return out;
}

}  // namespace detail

inline PointEstimate632 estimate_632(const Dataset& data, const BasisSpec& basis,
                                     const BaselineConfig& cfg, uint64_t seed) {
    cfg.validate();
    const auto fm = detail::freeze_and_fit(data, basis);
    const int n = static_cast<int>(data.n());

    std::vector<long> err_count(static_cast<size_t>(n), 0);
    std::vector<long> oob_count(static_cast<size_t>(n), 0);
    Eigen::VectorXd weights(n);
    for (int b = 0; b < cfg.replicates; ++b) {
        const Multiplicities m =
            draw_multiplicities(n, derive_seed(seed, streams::replicate, static_cast<uint64_t>(b)));
        bool any_oob = false;
        for (int i = 0; i < n; ++i) {
            weights[i] = static_cast<double>(m.phi[static_cast<size_t>(i)]);
            if (m.phi[static_cast<size_t>(i)] == 0) any_oob = true;
        }
        if (!any_oob) continue;
        const Coefficients beta = fit_least_squares(fm.design, data.labels, weights);
        const Eigen::VectorXd pred = fm.design * beta.beta;
        for (int i = 0; i < n; ++i) {
            if (m.phi[static_cast<size_t>(i)] != 0) continue;
            ++oob_count[static_cast<size_t>(i)];
            if (sign_pos(pred[i]) != data.labels[i]) ++err_count[static_cast<size_t>(i)];
        }
    }

    const auto train_flags = misclassified(fm.design, data.labels, fm.beta_hat);
    double oob_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (oob_count[static_cast<size_t>(i)] > 0) {
            oob_sum += static_cast<double>(err_count[static_cast<size_t>(i)]) /
                       static_cast<double>(oob_count[static_cast<size_t>(i)]);
        } else {
            // Never out of bag across all replicates: fall back to the
            // training-error indicator of the point.
            oob_sum += train_flags[static_cast<size_t>(i)];
        }
    }
    PointEstimate632 pe;
    pe.training_error = fm.training_error;
    pe.oob_error = oob_sum / static_cast<double>(n);
    pe.value = std::clamp(0.368 * pe.training_error + 0.632 * pe.oob_error, 0.0, 1.0);
    return pe;
}

// ---- interval builders on precomputed summaries (unit-testable directly) ----

// BS2's bias-corrected percentile positions. Falls back to plain quantiles
// when every estimate sits on one side of the point estimate.
struct BcInterval {
    double lower = 0.0, upper = 1.0, center = 0.0;
    bool fallback = false;
};

inline BcInterval bc_percentile_interval(const std::vector<double>& estimates, double point_est,
                                         double delta) {
    BcInterval out;
    out.center = point_est;
    if (estimates.empty()) throw std::invalid_argument("bc_percentile_interval: no estimates");
    long below = 0;
    for (double e : estimates)
        if (e < point_est) ++below;
    const double frac = static_cast<double>(below) / static_cast<double>(estimates.size());
    if (frac <= 0.0 || frac >= 1.0) {
        out.fallback = true;
        out.lower = order_statistic_quantile(estimates, delta / 2.0);
        out.upper = order_statistic_quantile(estimates, 1.0 - delta / 2.0);
        return out;
    }
    const double z0 = normal_quantile(frac);
    const double q_lo = normal_cdf(2.0 * z0 + normal_quantile(delta / 2.0));
    const double q_hi = normal_cdf(2.0 * z0 + normal_quantile(1.0 - delta / 2.0));
    out.lower = order_statistic_quantile(estimates, std::max(q_lo, 1e-12));
    out.upper = order_statistic_quantile(estimates, std::min(q_hi, 1.0));
    return out;
}

struct NormalApproxInterval {
    double center = 0.0, half_width = 0.0;
    bool variance_floor = false;
};

inline NormalApproxInterval normal_approx_interval(double xi, double n_star, double delta) {
    NormalApproxInterval out;
    out.center = xi;
    const double z = normal_quantile(1.0 - delta / 2.0);
    if (xi <= 0.0 || xi >= 1.0) {
        out.half_width = 1.0 / (2.0 * n_star);
        out.variance_floor = true;
    } else {
        out.half_width = z * std::sqrt(xi * (1.0 - xi) / n_star);
    }
    return out;
}

inline std::pair<double, double> cv_normal_interval(const std::vector<double>& fold_errors,
                                                    double delta) {
    const auto k = static_cast<double>(fold_errors.size());
    if (k < 2) throw std::invalid_argument("cv_normal_interval: need at least 2 folds");
    double mean = 0.0;
    for (double e : fold_errors) mean += e;
    mean /= k;
    double ss = 0.0;
    for (double e : fold_errors) ss += (e - mean) * (e - mean);
    const double sd = std::sqrt(ss / (k - 1.0));
    const double hw = normal_quantile(1.0 - delta / 2.0) * sd / std::sqrt(k);
    return {mean, hw};
}

struct BayesBetaInterval {
    double lower = 0.0, upper = 1.0, mean = 0.5;
};

inline BayesBetaInterval bayes_beta_interval(double xi, double n, double n_star, double prior_a,
                                             double prior_b, double delta) {
    const double pseudo = n - n_star;  // pseudo test-set size
    const double nu = prior_a + xi * pseudo;
    const double eta = prior_b + (1.0 - xi) * pseudo;
    BayesBetaInterval out;
    out.lower = beta_quantile(nu, eta, delta / 2.0);
    out.upper = beta_quantile(nu, eta, 1.0 - delta / 2.0);
    out.mean = nu / (nu + eta);
    return out;
}

// Exact binomial tail inversion for k errors out of m trials.
struct BinomialInversionInterval {
    double lower = 0.0, upper = 1.0;
    bool degenerate = false;  // m == 0
};

inline BinomialInversionInterval binomial_inversion_interval(int k, int m, double delta) {
    BinomialInversionInterval out;
    if (m <= 0) {
        out.degenerate = true;
        return out;
    }
    if (k < 0 || k > m) throw std::invalid_argument("binomial_inversion_interval: need 0 <= k <= m");
    out.lower = k == 0 ? 0.0
                       : beta_quantile(static_cast<double>(k), static_cast<double>(m - k + 1),
                                       delta / 2.0);
    out.upper = k == m ? 1.0
                       : beta_quantile(static_cast<double>(k + 1), static_cast<double>(m - k),
                                       1.0 - delta / 2.0);
    return out;
}

// ---- the six competitor confidence sets ----

// BS1: quantiles of the out-of-bag estimates of bootstrap-refit classifiers.
inline ConfidenceInterval ci_quantile_bootstrap(const Dataset& data, const BasisSpec& basis,
                                                const BaselineConfig& cfg, uint64_t seed) {
    cfg.validate();
    const auto fm = detail::freeze_and_fit(data, basis);
    const auto oob = detail::replicate_oob_estimates(fm, data.labels, cfg.replicates, seed);
    std::vector<std::string> flags;
    if (oob.skipped > 0) flags.push_back("oob_skipped");
    if (oob.estimates.empty()) {
        flags.push_back("no_oob");
        return ConfidenceInterval::from_bounds(0.0, 1.0, fm.training_error, "bs1",
                                               1.0 - cfg.delta, std::move(flags));
    }
    const double lower = order_statistic_quantile(oob.estimates, cfg.delta / 2.0);
    const double upper = order_statistic_quantile(oob.estimates, 1.0 - cfg.delta / 2.0);
    const double center = order_statistic_quantile(oob.estimates, 0.5);
    return ConfidenceInterval::from_bounds(lower, upper, center, "bs1", 1.0 - cfg.delta,
                                           std::move(flags));
}

// BS2: bias-corrected percentile interval around the .632 estimate.
inline ConfidenceInterval ci_corrected_bootstrap(const Dataset& data, const BasisSpec& basis,
                                                 const BaselineConfig& cfg, uint64_t seed,
                                                 const PointEstimate632* pre632 = nullptr) {
    cfg.validate();
    const auto fm = detail::freeze_and_fit(data, basis);
    const auto oob = detail::replicate_oob_estimates(fm, data.labels, cfg.replicates, seed);
    const PointEstimate632 pe =
        pre632 ? *pre632 : estimate_632(data, fm.basis, cfg, derive_seed(seed, streams::estimate632));
    std::vector<std::string> flags;
    if (oob.skipped > 0) flags.push_back("oob_skipped");
    if (oob.estimates.empty()) {
        flags.push_back("no_oob");
        return ConfidenceInterval::from_bounds(0.0, 1.0, pe.value, "bs2", 1.0 - cfg.delta,
                                               std::move(flags));
    }
    const BcInterval bc = bc_percentile_interval(oob.estimates, pe.value, cfg.delta);
    if (bc.fallback) flags.push_back("bc_fallback");
    return ConfidenceInterval::from_bounds(bc.lower, bc.upper, pe.value, "bs2", 1.0 - cfg.delta,
                                           std::move(flags));
}

// K: normal approximation with the .632 center and the effective sample size.
inline ConfidenceInterval ci_normal_kohavi(const Dataset& data, const BasisSpec& basis,
                                           const BaselineConfig& cfg, uint64_t seed,
                                           const PointEstimate632* pre632 = nullptr) {
    cfg.validate();
    const PointEstimate632 pe = pre632 ? *pre632 : estimate_632(data, basis, cfg, seed);
    const double n_star = effective_sample_size(static_cast<int>(data.n()));
    const auto na = normal_approx_interval(pe.value, n_star, cfg.delta);
    std::vector<std::string> flags;
    if (na.variance_floor) flags.push_back("variance_floor");
    return ConfidenceInterval::from_center_half_width(na.center, na.half_width, "k",
                                                      1.0 - cfg.delta, std::move(flags));
}

// Y: k-fold cross-validation mean with a normal-quantile standard error.
inline ConfidenceInterval ci_cv_normal_yang(const Dataset& data, const BasisSpec& basis,
                                            const BaselineConfig& cfg, uint64_t seed) {
    cfg.validate();
    const int n = static_cast<int>(data.n());
    if (n < cfg.folds) throw std::invalid_argument("ci_cv_normal_yang: need n >= folds");
    BasisSpec frozen = basis;
    if (!frozen.frozen) frozen.freeze(data);
    const Eigen::MatrixXd design = expand(frozen, data);

    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.next_below(static_cast<uint64_t>(i + 1)));
        std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }

    std::vector<double> fold_errors;
    fold_errors.reserve(static_cast<size_t>(cfg.folds));
    for (int f = 0; f < cfg.folds; ++f) {
        const int begin = static_cast<int>(static_cast<long>(f) * n / cfg.folds);
        const int end = static_cast<int>(static_cast<long>(f + 1) * n / cfg.folds);
        Eigen::VectorXd weights = Eigen::VectorXd::Ones(n);
        for (int i = begin; i < end; ++i) weights[order[static_cast<size_t>(i)]] = 0.0;
        const Coefficients beta = fit_least_squares(design, data.labels, weights);
        const Eigen::VectorXd pred = design * beta.beta;
        int errs = 0;
        for (int i = begin; i < end; ++i) {
            const int row = order[static_cast<size_t>(i)];
            if (sign_pos(pred[row]) != data.labels[row]) ++errs;
        }
        fold_errors.push_back(static_cast<double>(errs) / static_cast<double>(end - begin));
    }
    const auto [mean, hw] = cv_normal_interval(fold_errors, cfg.delta);
    return ConfidenceInterval::from_center_half_width(mean, hw, "y", 1.0 - cfg.delta);
}

// M: Beta posterior treating (n - n*) resampled points as a pseudo test set.
inline ConfidenceInterval ci_bayes_martin(const Dataset& data, const BasisSpec& basis,
                                          const BaselineConfig& cfg, uint64_t seed,
                                          const PointEstimate632* pre632 = nullptr) {
    cfg.validate();
    const PointEstimate632 pe = pre632 ? *pre632 : estimate_632(data, basis, cfg, seed);
    const int n = static_cast<int>(data.n());
    const auto bi = bayes_beta_interval(pe.value, static_cast<double>(n), effective_sample_size(n),
                                        cfg.prior_a, cfg.prior_b, cfg.delta);
    return ConfidenceInterval::from_bounds(bi.lower, bi.upper, bi.mean, "m", 1.0 - cfg.delta);
}

// L: exact binomial tail inversion on the rounded pseudo test set.
inline ConfidenceInterval ci_inverted_binomial_langford(const Dataset& data, const BasisSpec& basis,
                                                        const BaselineConfig& cfg, uint64_t seed,
                                                        const PointEstimate632* pre632 = nullptr) {
    cfg.validate();
    const PointEstimate632 pe = pre632 ? *pre632 : estimate_632(data, basis, cfg, seed);
    const int n = static_cast<int>(data.n());
    const int m = static_cast<int>(std::lround(static_cast<double>(n) - effective_sample_size(n)));
    const int k = m > 0 ? static_cast<int>(std::lround(m * pe.value)) : 0;
    const auto bi = binomial_inversion_interval(k, m, cfg.delta);
    std::vector<std::string> flags;
    if (bi.degenerate) flags.push_back("degenerate_m0");
    return ConfidenceInterval::from_bounds(bi.lower, bi.upper, pe.value, "l", 1.0 - cfg.delta,
                                           std::move(flags));
}

}  // namespace cud
