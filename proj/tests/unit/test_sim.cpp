#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "qswitch/errors.hpp"
#include "qswitch/io.hpp"
#include "qswitch/sim.hpp"

using namespace qswitch;

namespace {

Scenario small_scenario(double intensity, PolicySpec policy = PolicySpec::mew()) {
    const auto config = SwitchConfig::uniform(4, 2, 0.8, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    Scenario sc{"small", config, ArrivalDirection::uniform(4), intensity, policy};
    sc.horizon = 400;
    sc.replications = 4;
    return sc;
}

ReplicationTrace synthetic(std::vector<std::int64_t> backlog) {
    ReplicationTrace t;
    t.total_backlog = std::move(backlog);
    return t;
}

}  // namespace

TEST_CASE("arrivals") {
    SplitMix64 rng(1);
    const std::vector<double> zero(5, 0.0);
    const std::vector<double> one(5, 1.0);
    for (int i = 0; i < 100; ++i) {
        CHECK(generate_arrivals(zero, rng) == ArrivalVector(5));
        CHECK(generate_arrivals(one, rng) == ArrivalVector(std::vector<std::uint8_t>(5, 1)));
    }
    const std::vector<double> rates{0.1, 0.5, 0.93};
    const int slots = 50'000;
    std::vector<int> hits(3, 0);
    for (int t = 0; t < slots; ++t) {
        const auto a = generate_arrivals(rates, rng);
        for (std::size_t r = 0; r < 3; ++r) {
            hits[r] += a.arrivals[r];
        }
    }
    for (std::size_t r = 0; r < 3; ++r) {
        const double sd = std::sqrt(rates[r] * (1.0 - rates[r]) / slots);
        CHECK(std::abs(hits[r] / static_cast<double>(slots) - rates[r]) <= 3.0 * sd);
    }
}

TEST_CASE("windows") {
    CHECK(final_quarter(100).begin == 75);
    CHECK(final_quarter(100).end == 100);
    CHECK(middle_quarter(100).begin == 37);
    CHECK(middle_quarter(100).end == 62);
    CHECK(last_half(100).begin == 50);
    CHECK(last_half(100).end == 100);
}

TEST_CASE("summary statistics") {
    std::vector<std::int64_t> ramp(200);
    for (std::size_t i = 0; i < ramp.size(); ++i) {
        ramp[i] = static_cast<std::int64_t>(3 * (i + 1));
    }
    const std::vector<ReplicationTrace> one{synthetic(ramp)};
    const TrajectoryStats st = summarize(one);
    CHECK(st.trend_slope == doctest::Approx(3.0));
    CHECK(st.trend_intercept == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(st.trend_r2 == doctest::Approx(1.0));
    CHECK_FALSE(st.passes_stability_proxy());
    for (std::size_t i = 0; i < ramp.size(); ++i) {
        CHECK(st.mean[i] == static_cast<double>(ramp[i]));
        CHECK(st.std_error[i] == 0.0);
    }

    const std::vector<ReplicationTrace> pair{synthetic(std::vector<std::int64_t>(8, 2)),
                                              synthetic(std::vector<std::int64_t>(8, 4))};
    const TrajectoryStats flat = summarize(pair);
    CHECK(flat.mean[0] == 3.0);
    CHECK(flat.std_error[0] == doctest::Approx(1.0));  // sd sqrt(2), divided by sqrt(2)
    CHECK(flat.time_average == 3.0);
    CHECK(flat.passes_stability_proxy());
    CHECK(flat.final_quarter_se() == doctest::Approx(1.0));
}

TEST_CASE("zero-rate scenario stays empty") {
    Scenario sc = small_scenario(0.0);
    const ExperimentResult res = run_experiment(sc, 1);
    for (double v : res.stats.mean) {
        CHECK(v == 0.0);
    }
    CHECK(res.resolved.inside);
}

TEST_CASE("single pair at rate one half") {
    const auto config = SwitchConfig::uniform(2, 2, 1.0, {{0, 1}});
    Scenario sc{"pair", config, ArrivalDirection::uniform(1), 0.5, PolicySpec::mew()};
    sc.horizon = 100'000;
    sc.replications = 1;
    const ExperimentResult res = run_experiment(sc, 1);
    CHECK(res.resolved.rho_star == doctest::Approx(1.0));
    // Q alternates between 0 and 1, with stationary mean 0.5.
    CHECK(res.stats.time_average <= 1.0);
    CHECK(res.stats.time_average == doctest::Approx(0.5).epsilon(0.02));
    const auto& trace = res.traces.front().total_backlog;
    CHECK(*std::max_element(trace.begin(), trace.end()) <= 1);
}

TEST_CASE("conservation of requests") {
    const Scenario sc = small_scenario(0.9);
    const ResolvedRates rates = resolve_rates(sc);
    const ReplicationTrace tr = run_replication(sc, rates.rates, 11);
    std::int64_t total = 0;
    for (std::size_t r = 0; r < tr.arrivals.size(); ++r) {
        CHECK(tr.arrivals[r] - tr.served[r] == tr.final_state.backlog[r]);
        total += tr.final_state.backlog[r];
    }
    CHECK(total == tr.total_backlog.back());
}

TEST_CASE("arrivals are shared across policies for a seed") {
    const Scenario a = small_scenario(0.9);
    const Scenario b = small_scenario(0.9, PolicySpec::approx(1));
    const ResolvedRates rates = resolve_rates(a);
    CHECK(run_replication(a, rates.rates, 5).arrivals == run_replication(b, rates.rates, 5).arrivals);
}

TEST_CASE("determinism and thread independence") {
    Scenario sc = small_scenario(0.95, PolicySpec::approx(2));
    const ExperimentResult one = run_experiment(sc, 1);
    const ExperimentResult four = run_experiment(sc, 4);
    const ExperimentResult again = run_experiment(sc, 2);
    CHECK(trace_csv(one.stats) == trace_csv(four.stats));
    CHECK(trace_csv(one.stats) == trace_csv(again.stats));
    CHECK(one.seeds == std::vector<std::uint64_t>{1, 2, 3, 4});
    sc.base_seed = 9;
    CHECK(trace_csv(run_experiment(sc, 1).stats) != trace_csv(one.stats));
}

TEST_CASE("single replication reproduces its trace") {
    Scenario sc = small_scenario(0.8);
    sc.replications = 1;
    const ExperimentResult res = run_experiment(sc, 1);
    for (std::size_t t = 0; t < res.stats.mean.size(); ++t) {
        CHECK(res.stats.mean[t] == static_cast<double>(res.traces.front().total_backlog[t]));
    }
}

TEST_CASE("scenario validation") {
    Scenario sc = small_scenario(0.8);
    sc.horizon = 0;
    CHECK_THROWS_AS(sc.validate(), ValidationError);
    Scenario neg = small_scenario(-0.1);
    CHECK_THROWS_AS(neg.validate(), ValidationError);
    Scenario mew2 = small_scenario(0.5, PolicySpec::mew2());
    CHECK_THROWS_AS(mew2.validate(), PreconditionError);
    Scenario huge = small_scenario(0.5);
    huge.rho_override = 10.0;
    CHECK_THROWS_AS(resolve_rates(huge), ValidationError);
}

TEST_CASE("presets") {
    const auto sim1 = preset("sim1");
    REQUIRE(sim1.size() == 3);
    CHECK(sim1[0].config.n_clients() == 6);
    CHECK(sim1[0].config.n_memories() == 3);
    CHECK(sim1[0].config.n_classes() == 8);
    CHECK(sim1[0].config.lle_success(0) == 0.9);
    CHECK(sim1[2].intensity == doctest::Approx(1.2));
    for (const auto& cls : sim1[0].config.classes()) {
        CHECK(cls.arity() == 3);
    }

    const auto sim2 = preset("sim2");
    CHECK(sim2.size() == 6);
    CHECK(sim2[0].config.n_classes() == 35);

    const auto sim3 = preset("sim3");
    REQUIRE(sim3.size() == 3);
    CHECK(sim3[0].config.n_clients() == 7);
    CHECK(sim3[0].config.n_memories() == 4);
    CHECK(sim3[0].config.n_classes() == 21);
    CHECK(sim3[0].config.all_bipartite());
    CHECK(sim3[0].config.all_lle_certain());
    CHECK(sim3[1].policy.kind == PolicyKind::mew2);
    for (const auto& sc : sim3) {
        CHECK(sc.horizon == kDefaultHorizon);
        CHECK(sc.replications == kDefaultReplications);
    }
    CHECK_THROWS_AS(preset("sim4"), ValidationError);
    CHECK(all_subsets(5, 2).size() == 10);
}
