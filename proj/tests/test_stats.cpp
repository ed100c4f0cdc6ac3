#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cud/stats.hpp"

using namespace cud;

TEST_CASE("normal quantile and cdf") {
    CHECK(normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-12));
    CHECK(normal_quantile(0.975) == Catch::Approx(1.959963984540054).epsilon(1e-10));
    CHECK(normal_quantile(0.025) == Catch::Approx(-1.959963984540054).epsilon(1e-10));
    for (double p : {0.001, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999}) {
        CHECK(normal_cdf(normal_quantile(p)) == Catch::Approx(p).margin(1e-12));
    }
}

TEST_CASE("beta quantile basics") {
    CHECK(beta_quantile(1, 1, 0.5) == Catch::Approx(0.5).margin(1e-10));
    // Beta(2,1) has CDF x^2, so the q-quantile is sqrt(q).
    CHECK(beta_quantile(2, 1, 0.25) == Catch::Approx(0.5).margin(1e-10));
    for (double a : {1.0, 2.0, 5.0}) {
        CHECK(beta_quantile(a, a, 0.5) == Catch::Approx(0.5).margin(1e-10));
    }
    CHECK(beta_quantile(3, 4, 0.0) == 0.0);
    CHECK(beta_quantile(3, 4, 1.0) == 1.0);
}

TEST_CASE("beta quantile round trip") {
    for (double a : {0.5, 1.0, 2.0, 5.0, 20.0}) {
        for (double b : {0.5, 1.0, 2.0, 5.0, 20.0}) {
            for (double q : {0.01, 0.025, 0.5, 0.975, 0.99}) {
                const double x = beta_quantile(a, b, q);
                CHECK(beta_cdf(a, b, x) == Catch::Approx(q).margin(1e-8));
            }
        }
    }
}

TEST_CASE("binomial tails against direct summation") {
    auto direct_upper = [](int k, int m, double p) {
        double s = 0.0;
        for (int j = k; j <= m; ++j) {
            double term = std::lgamma(m + 1.0) - std::lgamma(j + 1.0) - std::lgamma(m - j + 1.0);
            term += j * std::log(p) + (m - j) * std::log1p(-p);
            s += std::exp(term);
        }
        return s;
    };
    for (int m : {5, 12, 30}) {
        for (int k = 0; k <= m; k += 3) {
            for (double p : {0.1, 0.37, 0.5, 0.9}) {
                CHECK(binomial_upper_tail(k, m, p) ==
                      Catch::Approx(direct_upper(k, m, p)).margin(1e-10));
                CHECK(binomial_lower_tail(k, m, p) ==
                      Catch::Approx(1.0 - direct_upper(k + 1, m, p)).margin(1e-10));
            }
        }
    }
}

TEST_CASE("order statistic quantile convention") {
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
    CHECK(order_statistic_quantile(grid, 0.05) == Catch::Approx(0.05));
    CHECK(order_statistic_quantile(grid, 0.95) == Catch::Approx(0.95));
    CHECK(order_statistic_quantile(grid, 0.5) == Catch::Approx(0.5));

    std::vector<double> four = {0.1, 0.2, 0.3, 0.4};
    CHECK(order_statistic_quantile(four, 0.75) == Catch::Approx(0.3));
    CHECK(order_statistic_quantile(four, 1.0) == Catch::Approx(0.4));
    CHECK(order_statistic_quantile(four, 1e-9) == Catch::Approx(0.1));
}
