#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cud {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// Inverse standard normal CDF: Acklam's rational approximation polished with
// one Halley step against erfc, giving near machine precision over (0, 1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw std::invalid_argument("normal_quantile: p must be in [0, 1]");
    }
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= phigh) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement: e = CDF(x) - p.
    const double e = normal_cdf(x) - p;
    const double u = e * 2.5066282746310002 * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

namespace detail {

// Continued fraction for the regularized incomplete beta (Lentz's method).
inline double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    const int max_iter = 500;
    const double eps = 1e-16;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b) = P(Beta(a,b) <= x).
inline double beta_cdf(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("beta_cdf: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lnfront = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(lnfront);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::betacf(a, b, x) / a;
    }
    return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Quantile of Beta(a, b) by bracketed bisection on the monotone CDF.
inline double beta_quantile(double a, double b, double q) {
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("beta_quantile: a, b must be positive");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("beta_quantile: q must be in [0, 1]");
    if (q == 0.0) return 0.0;
    if (q == 1.0) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (beta_cdf(a, b, mid) < q) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-16) break;
    }
    return 0.5 * (lo + hi);
}

// Binomial tail probabilities through the incomplete beta identities.
// P(X >= k) for X ~ Binomial(m, p).
inline double binomial_upper_tail(int k, int m, double p) {
    if (k <= 0) return 1.0;
    if (k > m) return 0.0;
    return beta_cdf(static_cast<double>(k), static_cast<double>(m - k + 1), p);
}

// P(X <= k) for X ~ Binomial(m, p).
inline double binomial_lower_tail(int k, int m, double p) {
    if (k >= m) return 1.0;
    if (k < 0) return 0.0;
    return 1.0 - beta_cdf(static_cast<double>(k + 1), static_cast<double>(m - k), p);
}

// Empirical quantile as the ceil(q*B)-th order statistic (1-indexed), the
// conservative convention used for all bootstrap quantiles in this library.
inline double order_statistic_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("order_statistic_quantile: empty sample");
    if (!(q > 0.0 && q <= 1.0))
        throw std::invalid_argument("order_statistic_quantile: q must be in (0, 1]");
    const auto n = static_cast<std::ptrdiff_t>(values.size());
    auto k = static_cast<std::ptrdiff_t>(std::ceil(q * static_cast<double>(n)));
    k = std::max<std::ptrdiff_t>(1, std::min(k, n));
    std::nth_element(values.begin(), values.begin() + (k - 1), values.end());
    return values[k - 1];
}

}  // namespace cud
