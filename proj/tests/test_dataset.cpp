#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cud/dataset.hpp"

using namespace cud;

namespace {

std::string temp_path(const std::string& name) {
    return std::string("/tmp/cud_test_") + name;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    os << content;
}

}  // namespace

TEST_CASE("three points degenerate distribution") {
    SimSpec spec = SimSpec::three_points();
    spec.tp_p1 = 1.0;
    spec.tp_p2 = 0.0;
    spec.tp_p3 = 0.0;
    const Dataset d = generate_simulated(spec, 5, 42);
    for (int i = 0; i < 5; ++i) {
        CHECK(d.features(i, 0) == -1.0);
        CHECK(d.labels[i] == 1.0);
    }
}

TEST_CASE("generators are deterministic per seed") {
    for (const SimSpec& spec : {SimSpec::donut(), SimSpec::outlier(), SimSpec::three_points(),
                                SimSpec::chi_square_small()}) {
        const Dataset a = generate_simulated(spec, 30, 7);
        const Dataset b = generate_simulated(spec, 30, 7);
        CHECK(a.features == b.features);
        CHECK(a.labels == b.labels);
        const Dataset c = generate_simulated(spec, 30, 8);
        CHECK(a.features != c.features);
    }
}

TEST_CASE("class balance of each family matches its exact integral") {
    // Expected positive-label probabilities, worked out from the generator
    // definitions: donut 0.6*0.95 + 0.4*0.05 = 0.59; outlier (1-0.1)/2 = 0.45;
    // threepoints p1 + p3 = 0.7; chisquare 0.5.
    struct Case {
        SimSpec spec;
        double balance;
    };
    const Case cases[] = {
        {SimSpec::donut(), 0.59},
        {SimSpec::outlier(), 0.45},
        {SimSpec::three_points(), 0.70},
        {SimSpec::chi_square_small(), 0.50},
    };
    const int n = 1000;
    for (const auto& c : cases) {
        const Dataset d = generate_simulated(c.spec, n, 123);
        double pos = 0;
        for (int i = 0; i < n; ++i) pos += d.labels[i] > 0 ? 1.0 : 0.0;
        const double frac = pos / n;
        const double se = std::sqrt(c.balance * (1 - c.balance) / n);
        INFO(family_name(c.spec.family) << " frac=" << frac);
        CHECK(std::fabs(frac - c.balance) <= 5 * se);
    }
}

TEST_CASE("labels valid and features finite for all families") {
    for (const SimSpec& spec : {SimSpec::donut(), SimSpec::outlier(), SimSpec::three_points(),
                                SimSpec::chi_square_small()}) {
        for (uint64_t seed : {1ull, 99ull, 31337ull}) {
            const Dataset d = generate_simulated(spec, 100, seed);
            CHECK_NOTHROW(d.validate());
        }
    }
}

TEST_CASE("three points support has exactly three feature values") {
    const Dataset d = generate_simulated(SimSpec::three_points(), 500, 5);
    std::set<double> values;
    for (int i = 0; i < 500; ++i) values.insert(d.features(i, 0));
    CHECK(values.size() == 3);
}

TEST_CASE("invalid sim parameters rejected") {
    SimSpec bad = SimSpec::donut();
    bad.donut_inner_r0 = -1.0;
    CHECK_THROWS_AS(generate_simulated(bad, 10, 1), std::invalid_argument);

    SimSpec bad2 = SimSpec::three_points();
    bad2.tp_p1 = 0.9;
    bad2.tp_p2 = 0.9;
    bad2.tp_p3 = 0.9;
    CHECK_THROWS_AS(generate_simulated(bad2, 10, 1), std::invalid_argument);

    CHECK_THROWS_AS(generate_simulated(SimSpec::donut(), 0, 1), std::invalid_argument);
}

TEST_CASE("split cardinality and partition") {
    const Dataset d = generate_simulated(SimSpec::donut(), 10, 3);
    const auto [train, test] = split(d, 9, 11);
    CHECK(train.n() == 9);
    CHECK(test.n() == 1);

    // Partition: row multisets must union back to the input.
    std::multiset<double> before, after;
    for (int i = 0; i < 10; ++i) before.insert(d.features(i, 0));
    for (int i = 0; i < 9; ++i) after.insert(train.features(i, 0));
    after.insert(test.features(0, 0));
    CHECK(before == after);

    const auto [train2, test2] = split(d, 9, 11);
    CHECK(train.features == train2.features);
    CHECK(test.labels == test2.labels);

    CHECK_THROWS_AS(split(d, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(split(d, 10, 1), std::invalid_argument);
}

TEST_CASE("split is uniform over rows") {
    const Dataset d = generate_simulated(SimSpec::donut(), 50, 17);
    const int trials = 1000;
    std::vector<int> in_train_count(50, 0);
    for (int t = 0; t < trials; ++t) {
        const auto [train, test] = split(d, 30, 1000 + static_cast<uint64_t>(t));
        // Identify training membership by matching feature values (rows unique a.s.).
        std::set<double> keys;
        for (int i = 0; i < 30; ++i) keys.insert(train.features(i, 0));
        for (int i = 0; i < 50; ++i)
            if (keys.count(d.features(i, 0))) ++in_train_count[static_cast<size_t>(i)];
    }
    const double se = std::sqrt(0.6 * 0.4 / trials);
    for (int i = 0; i < 50; ++i) {
        const double freq = in_train_count[static_cast<size_t>(i)] / static_cast<double>(trials);
        CHECK(std::fabs(freq - 0.6) <= 5 * se);
    }
}

TEST_CASE("csv label mapping") {
    const auto path = temp_path("labels.csv");
    write_file(path, "1.5,a\n2.5,b\n3.5,a\n");
    const Dataset d = load_csv(path, "1", "a");
    REQUIRE(d.n() == 3);
    CHECK(d.labels[0] == 1.0);
    CHECK(d.labels[1] == -1.0);
    CHECK(d.labels[2] == 1.0);
    CHECK(d.features(0, 0) == 1.5);
    std::remove(path.c_str());
}

TEST_CASE("csv degenerate labels rejected") {
    const auto path = temp_path("degenerate.csv");
    write_file(path, "1,a\n2,a\n3,a\n");
    CHECK_THROWS_WITH(load_csv(path, "1", "a"), Catch::Matchers::ContainsSubstring("degenerate"));
    std::remove(path.c_str());
}

TEST_CASE("csv header by name excludes label column") {
    const auto path = temp_path("header.csv");
    write_file(path, "x1,label,x2\n0.5,1,7\n0.25,-1,8\n");
    const Dataset d = load_csv(path, "label", "1");
    REQUIRE(d.q() == 2);
    CHECK(d.features(0, 0) == 0.5);
    CHECK(d.features(0, 1) == 7.0);
    CHECK(d.labels[0] == 1.0);
    CHECK(d.labels[1] == -1.0);
    std::remove(path.c_str());
}

TEST_CASE("csv error diagnostics") {
    CHECK_THROWS_AS(load_csv("/nonexistent/path.csv", "label", "1"), IoError);

    const auto path = temp_path("badcell.csv");
    write_file(path, "x,label\n1.0,1\nouch,-1\n");
    CHECK_THROWS_WITH(load_csv(path, "label", "1"),
                      Catch::Matchers::ContainsSubstring("non-numeric"));
    std::remove(path.c_str());

    const auto path2 = temp_path("nolabel.csv");
    write_file(path2, "x,y\n1.0,2.0\n");
    CHECK_THROWS_WITH(load_csv(path2, "label", "1"),
                      Catch::Matchers::ContainsSubstring("label column absent"));
    std::remove(path2.c_str());
}

TEST_CASE("csv round trip") {
    const Dataset d = generate_simulated(SimSpec::donut(), 25, 9);
    const auto path = temp_path("roundtrip.csv");
    write_csv(d, path);
    const Dataset back = load_csv(path, "label", "1");
    CHECK(back.features == d.features);
    CHECK(back.labels == d.labels);
    std::remove(path.c_str());
}
