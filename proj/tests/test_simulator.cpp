#include <doctest.h>

#include <cmath>

#include "nashcot/simulator.hpp"
#include "oracles.hpp"

using namespace nashcot;
using namespace nashcot::sim;

namespace {

// Independent binomial oracle for two-label majority votes with odd k.
double binomial_vote_accuracy(double p, int k) {
    double total = 0.0;
    for (int wins = (k / 2) + 1; wins <= k; ++wins) {
        double coeff = 1.0;
        for (int i = 0; i < wins; ++i) coeff = coeff * (k - i) / (i + 1);
        total += coeff * std::pow(p, wins) * std::pow(1.0 - p, k - wins);
    }
    return total;
}

}  // namespace

TEST_CASE("exact vote accuracy endpoints") {
    CHECK(exact_vote_accuracy({4, 1.0}, 3) == doctest::Approx(1.0));
    CHECK(exact_vote_accuracy({2, 0.0}, 3) == doctest::Approx(0.0));
}

TEST_CASE("exact vote accuracy matches the binomial oracle") {
    // frozen from the oracle: 0.6^3 + 3 * 0.6^2 * 0.4 = 0.648
    CHECK(exact_vote_accuracy({2, 0.6}, 3) == doctest::Approx(0.648).epsilon(1e-12));
    for (double p : {0.3, 0.5, 0.75}) {
        for (int k : {1, 3, 5, 7, 9, 11}) {
            CHECK(exact_vote_accuracy({2, p}, k) ==
                  doctest::Approx(binomial_vote_accuracy(p, k)).epsilon(1e-10));
        }
    }
}

TEST_CASE("exact vote accuracy handles even k through the tie rule") {
    // k=2, m=2: counts (2,0) win, (1,1) tie resolved by first occurrence (1/2)
    double p = 0.6;
    double expected = p * p + 0.5 * (2 * p * (1 - p));
    CHECK(exact_vote_accuracy({2, p}, 2) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("enumeration bounds are enforced") {
    CHECK_THROWS_AS(exact_vote_accuracy({2, 0.5}, 13), BoundExceeded);
    CHECK_THROWS_AS(exact_vote_accuracy({7, 0.5}, 3), BoundExceeded);
    CHECK_THROWS_AS(exact_vote_accuracy({2, 1.5}, 3), std::invalid_argument);
}

TEST_CASE("monte carlo self-consistency lands within 3 sigma of exact") {
    PathModel model{2, 0.6};
    double exact = exact_vote_accuracy(model, 3);
    const std::int64_t trials = 200000;
    SimReport report = simulate_self_consistency(model, 3, trials, 12345);
    double sigma = std::sqrt(exact * (1.0 - exact) / static_cast<double>(trials));
    CHECK(std::abs(report.accuracy - exact) < 3.0 * sigma);
    CHECK(report.path_budget == 3);
    CHECK(report.ci_half_width ==
          doctest::Approx(1.96 * std::sqrt(report.accuracy * (1 - report.accuracy) / trials)));
}

TEST_CASE("simulation reports are deterministic in the seed") {
    PathModel model{4, 0.5};
    TemplateModel tmpl{0.9, 0.75, 0.25};
    SimReport a = simulate_nash(model, tmpl, 3, 2, 20000, 777);
    SimReport b = simulate_nash(model, tmpl, 3, 2, 20000, 777);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.path_budget == 10);
    SimReport c = simulate_nash(model, tmpl, 3, 2, 20000, 778);
    CHECK(a.accuracy != c.accuracy);  // different substream
}

TEST_CASE("self-consistency accuracy is non-decreasing in k for p above chance") {
    // exact enumeration, so no Monte-Carlo noise in the comparison
    PathModel model{2, 0.6};
    double previous = 0.0;
    for (int k : {1, 3, 5, 7, 9, 11}) {
        double accuracy = exact_vote_accuracy(model, k);
        CHECK(accuracy >= previous);
        previous = accuracy;
    }
}

TEST_CASE("filter decisions are invariant under relabeling of wrong answers") {
    // swap wrong labels 1 and 2 everywhere: correctness must not change
    oracle::TestRng rng(808);
    auto relabel = [](int label) { return label == 1 ? 2 : (label == 2 ? 1 : label); };
    for (int round = 0; round < 2000; ++round) {
        int n_outer = 1 + rng.below(4);
        int n_mini = 1 + rng.below(3);
        std::vector<oracle::SimpleTrajectory> base, swapped;
        for (int i = 0; i < n_outer; ++i) {
            oracle::SimpleTrajectory t, s;
            int g = rng.below(3);
            t.guided = CanonicalAnswer{TaskKind::FreeForm, std::to_string(g)};
            s.guided = CanonicalAnswer{TaskKind::FreeForm, std::to_string(relabel(g))};
            for (int j = 0; j < n_mini; ++j) {
                int b = rng.below(3);
                t.batch.push_back(CanonicalAnswer{TaskKind::FreeForm, std::to_string(b)});
                s.batch.push_back(CanonicalAnswer{TaskKind::FreeForm, std::to_string(relabel(b))});
            }
            base.push_back(std::move(t));
            swapped.push_back(std::move(s));
        }
        auto a = filter(oracle::to_engine(base));
        auto b = filter(oracle::to_engine(swapped));
        REQUIRE(a.has_value());
        REQUIRE(b.has_value());
        CHECK((a->value == "0") == (b->value == "0"));
    }
}

TEST_CASE("sweep emits one report per cell plus references") {
    SweepConfig config;
    config.outer_values = {1, 2, 3, 4};
    config.mini_values = {1, 2, 3, 4};
    config.sc_reference_paths = {20};
    config.trials = 2000;
    config.seed = 3;
    std::vector<SimReport> reports = sweep(config);
    CHECK(reports.size() == 17);  // 16 nash cells + 1 reference
    int nash_cells = 0;
    for (const auto& r : reports) {
        if (r.strategy == "nash-cot") ++nash_cells;
    }
    CHECK(nash_cells == 16);

    std::string csv = sweep_table_csv(reports, config);
    CHECK(csv.find("strategy,n_outer,n_mini") != std::string::npos);
    // header + 17 rows
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 18);

    // identical seed, identical bytes
    CHECK(sweep_table_csv(sweep(config), config) == csv);
}

TEST_CASE("sweep validates its grid") {
    SweepConfig config;
    config.outer_values = {};
    config.mini_values = {1};
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    SweepConfig zero;
    zero.trials = 0;
    CHECK_THROWS_AS(zero.validate(), std::invalid_argument);
}
