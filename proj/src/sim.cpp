#include "qswitch/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "qswitch/errors.hpp"

namespace qswitch {

void Scenario::validate() const {
    if (!(intensity >= 0.0) || !std::isfinite(intensity)) {
        throw ValidationError("scenario '" + name + "': intensity must be finite and nonnegative");
    }
    if (horizon < 1) {
        throw ValidationError("scenario '" + name + "': horizon must be positive");
    }
    if (replications < 1) {
        throw ValidationError("scenario '" + name + "': replications must be positive");
    }
    if (direction.size() != static_cast<std::size_t>(config.n_classes())) {
        throw ValidationError("scenario '" + name + "': direction has " + std::to_string(direction.size()) +
                              " entries for " + std::to_string(config.n_classes()) + " classes");
    }
    if (rho_override && !(*rho_override >= 0.0)) {
        throw ValidationError("scenario '" + name + "': rho override must be nonnegative");
    }
    policy.validate(config);
    if (policy.kind == PolicyKind::mew2) {
        require_mew2_regime(config);
    }
}

ResolvedRates resolve_rates(const Scenario& scenario) {
    scenario.validate();
    const CapacityModel model = build_lp(scenario.config);
    ResolvedRates out;
    out.rho_star = scenario.rho_override ? *scenario.rho_override
                                         : max_intensity(scenario.config, scenario.direction, model).rho;
    out.rates.resize(scenario.direction.size());
    for (std::size_t r = 0; r < out.rates.size(); ++r) {
        out.rates[r] = scenario.intensity * out.rho_star * scenario.direction.rates()[r];
        if (out.rates[r] > 1.0) {
            throw ValidationError("scenario '" + scenario.name + "': class " + std::to_string(r + 1) +
                                  " would need arrival rate " + std::to_string(out.rates[r]) +
                                  " > 1 (Bernoulli arrivals cannot exceed one per slot)");
        }
    }
    const auto member = membership(scenario.config, out.rates, model);
    out.margin = member.margin;
    out.inside = member.inside;
    return out;
}

ArrivalVector generate_arrivals(std::span<const double> rates, SplitMix64& rng) {
    ArrivalVector a(rates.size());
    for (std::size_t r = 0; r < rates.size(); ++r) {
        a.arrivals[r] = rng.bernoulli(rates[r]) ? 1 : 0;
    }
    return a;
}

namespace {

template <class E>
[[noreturn]] void rethrow_at(const E& e, std::int64_t slot) {
    throw E("slot " + std::to_string(slot) + ": " + e.what());
}

}  // namespace

ReplicationTrace run_replication(const Scenario& scenario, std::span<const double> rates, std::uint64_t seed) {
    const auto r_count = static_cast<std::size_t>(scenario.config.n_classes());
    if (rates.size() != r_count) {
        throw ValidationError("rate vector length does not match the number of request classes");
    }
    ReplicationTrace trace;
    trace.seed = seed;
    trace.total_backlog.reserve(static_cast<std::size_t>(scenario.horizon));
    trace.arrivals.assign(r_count, 0);
    trace.served.assign(r_count, 0);

    PolicyStepper stepper(scenario.config, scenario.policy, seed);
    const SlotStream arrival_stream(seed, StreamPurpose::arrivals);
    QueueState q(r_count);

    std::int64_t slot = 1;
    try {
        for (; slot <= scenario.horizon; ++slot) {
            SplitMix64 rng = arrival_stream.at(static_cast<std::uint64_t>(slot));
            const ArrivalVector a = generate_arrivals(rates, rng);
            StepResult res = stepper.step(static_cast<std::uint64_t>(slot), q, a);
            for (std::size_t r = 0; r < r_count; ++r) {
                trace.arrivals[r] += a.arrivals[r];
                trace.served[r] += std::min<std::int64_t>(q.backlog[r], res.decision.service.served[r]);
            }
            q = std::move(res.next);
            trace.total_backlog.push_back(q.total());
        }
    } catch (const PreconditionError& e) {
        rethrow_at(e, slot);
    } catch (const CapacityExceeded& e) {
        rethrow_at(e, slot);
    } catch (const ValidationError& e) {
        rethrow_at(e, slot);
    }
    trace.final_state = std::move(q);
    return trace;
}

Window final_quarter(std::size_t horizon) noexcept { return {horizon * 3 / 4, horizon}; }
Window middle_quarter(std::size_t horizon) noexcept { return {horizon * 3 / 8, horizon * 5 / 8}; }
Window last_half(std::size_t horizon) noexcept { return {horizon / 2, horizon}; }

namespace {

template <class T>
double window_mean(std::span<const T> values, Window w) {
    if (w.end <= w.begin) {
        return values.empty() ? 0.0 : static_cast<double>(values.back());
    }
    double s = 0.0;
    for (std::size_t i = w.begin; i < w.end; ++i) {
        s += static_cast<double>(values[i]);
    }
    return s / static_cast<double>(w.end - w.begin);
}

}  // namespace

TrajectoryStats summarize(std::span<const ReplicationTrace> traces) {
    TrajectoryStats st;
    if (traces.empty()) {
        return st;
    }
    const std::size_t horizon = traces.front().total_backlog.size();
    const auto n = static_cast<double>(traces.size());
    st.mean.assign(horizon, 0.0);
    st.std_error.assign(horizon, 0.0);
    for (const auto& tr : traces) {
        if (tr.total_backlog.size() != horizon) {
            throw ValidationError("replications have different horizons");
        }
        for (std::size_t t = 0; t < horizon; ++t) {
            st.mean[t] += static_cast<double>(tr.total_backlog[t]);
        }
    }
    for (double& m : st.mean) {
        m /= n;
    }
    if (traces.size() > 1) {
        for (std::size_t t = 0; t < horizon; ++t) {
            double ss = 0.0;
            for (const auto& tr : traces) {
                const double d = static_cast<double>(tr.total_backlog[t]) - st.mean[t];
                ss += d * d;
            }
            st.std_error[t] = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
        }
    }

    const std::span<const double> mean(st.mean);
    st.time_average = window_mean(mean, {0, horizon});
    st.final_quarter_mean = window_mean(mean, final_quarter(horizon));
    st.middle_quarter_mean = window_mean(mean, middle_quarter(horizon));
    for (const auto& tr : traces) {
        st.replication_final_quarter_means.push_back(
            window_mean(std::span<const std::int64_t>(tr.total_backlog), final_quarter(horizon)));
    }

    // Least squares of mean backlog against slot number over the last half.
    const Window half = last_half(horizon);
    const double count = static_cast<double>(half.end - half.begin);
    if (count >= 2.0) {
        double sx = 0.0;
        double sy = 0.0;
        for (std::size_t i = half.begin; i < half.end; ++i) {
            sx += static_cast<double>(i + 1);
            sy += st.mean[i];
        }
        const double mx = sx / count;
        const double my = sy / count;
        double sxx = 0.0;
        double sxy = 0.0;
        double syy = 0.0;
        for (std::size_t i = half.begin; i < half.end; ++i) {
            const double dx = static_cast<double>(i + 1) - mx;
            const double dy = st.mean[i] - my;
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        st.trend_slope = sxy / sxx;
        st.trend_intercept = my - st.trend_slope * mx;
        st.trend_r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 0.0;
    }
    return st;
}

bool TrajectoryStats::passes_stability_proxy() const noexcept {
    return final_quarter_mean <= kStabilityRatio * middle_quarter_mean;
}

double TrajectoryStats::final_quarter_se() const noexcept {
    const auto n = replication_final_quarter_means.size();
    if (n < 2) {
        return 0.0;
    }
    const double mean = std::accumulate(replication_final_quarter_means.begin(),
                                        replication_final_quarter_means.end(), 0.0) /
                        static_cast<double>(n);
    double ss = 0.0;
    for (double v : replication_final_quarter_means) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

ExperimentResult run_experiment(const Scenario& scenario, unsigned threads) {
    return run_experiment(scenario, resolve_rates(scenario), threads);
}

ExperimentResult run_experiment(const Scenario& scenario, const ResolvedRates& resolved, unsigned threads) {
    scenario.validate();
    ExperimentResult out;
    out.resolved = resolved;
    const auto reps = static_cast<std::size_t>(scenario.replications);
    out.seeds.resize(reps);
    for (std::size_t i = 0; i < reps; ++i) {
        out.seeds[i] = scenario.base_seed + i;
    }
    out.traces.resize(reps);

    if (threads == 0) {
        threads = std::max(1U, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, reps));

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(reps);
    auto worker = [&]() {
        for (std::size_t i = next++; i < reps; i = next++) {
            try {
                out.traces[i] = run_replication(scenario, resolved.rates, out.seeds[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    for (std::size_t i = 0; i < reps; ++i) {
        if (errors[i]) {
            try {
                std::rethrow_exception(errors[i]);
            } catch (const PreconditionError& e) {
                throw PreconditionError("replication " + std::to_string(i) + ", " + e.what());
            } catch (const CapacityExceeded& e) {
                throw CapacityExceeded("replication " + std::to_string(i) + ", " + e.what());
            } catch (const ValidationError& e) {
                throw ValidationError("replication " + std::to_string(i) + ", " + e.what());
            }
        }
    }
    out.stats = summarize(out.traces);
    return out;
}

std::vector<std::vector<int>> all_subsets(int n_clients, int size) {
    std::vector<std::vector<int>> out;
    std::vector<int> current;
    auto visit = [&](auto&& self, int next) -> void {
        if (static_cast<int>(current.size()) == size) {
            out.push_back(current);
            return;
        }
        for (int c = next; c < n_clients; ++c) {
            current.push_back(c);
            self(self, c + 1);
            current.pop_back();
        }
    };
    visit(visit, 0);
    return out;
}

std::vector<Scenario> preset(const std::string& name) {
    auto make = [](std::string label, const SwitchConfig& config, double intensity, PolicySpec policy) {
        return Scenario{std::move(label), config, ArrivalDirection::uniform(config.n_classes()), intensity, policy};
    };
    auto percent = [](double intensity) { return std::to_string(static_cast<int>(std::lround(intensity * 100))); };
    auto slug = [](const PolicySpec& p) {
        switch (p.kind) {
            case PolicyKind::mew:
                return std::string("mew");
            case PolicyKind::mew2:
                return std::string("mew2");
            case PolicyKind::approx_mew:
                return "approx" + std::to_string(p.approx_budget.value_or(0));
        }
        return std::string("?");
    };

    std::vector<Scenario> out;
    if (name == "sim1") {
        auto triples = all_subsets(6, 3);
        triples.resize(8);
        const auto config = SwitchConfig::uniform(6, 3, 0.9, triples);
        for (double x : {0.70, 0.99, 1.20}) {
            out.push_back(make("sim1-mew-" + percent(x), config, x, PolicySpec::mew()));
        }
    } else if (name == "sim2") {
        auto classes = all_subsets(6, 2);
        const auto triples = all_subsets(6, 3);
        classes.insert(classes.end(), triples.begin(), triples.end());
        const auto config = SwitchConfig::uniform(6, 3, 0.9, classes);
        for (double x : {0.70, 0.99}) {
            for (const auto& p : {PolicySpec::mew(), PolicySpec::approx(1), PolicySpec::approx(10)}) {
                out.push_back(make("sim2-" + slug(p) + "-" + percent(x), config, x, p));
            }
        }
    } else if (name == "sim3") {
        const auto config = SwitchConfig::uniform(7, 4, 1.0, all_subsets(7, 2));
        for (const auto& p : {PolicySpec::mew(), PolicySpec::mew2(), PolicySpec::approx(1)}) {
            out.push_back(make("sim3-" + slug(p) + "-99", config, 0.99, p));
        }
    } else {
        throw ValidationError("unknown preset '" + name + "' (expected sim1, sim2 or sim3)");
    }
    return out;
}

}  // namespace qswitch
