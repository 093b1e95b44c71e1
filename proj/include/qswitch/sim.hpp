#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qswitch/capacity.hpp"
#include "qswitch/model.hpp"
#include "qswitch/policies.hpp"
#include "qswitch/rng.hpp"

namespace qswitch {

inline constexpr std::int64_t kDefaultHorizon = 20'000;
inline constexpr int kDefaultReplications = 10;
inline constexpr std::uint64_t kDefaultBaseSeed = 1;

/// Stability proxy: final-quarter mean at most this multiple of the middle-quarter mean.
inline constexpr double kStabilityRatio = 1.5;

struct Scenario {
    std::string name;
    SwitchConfig config;
    ArrivalDirection direction;
    double intensity = 1.0;  // fraction of rho*
    PolicySpec policy;
    std::int64_t horizon = kDefaultHorizon;
    int replications = kDefaultReplications;
    std::uint64_t base_seed = kDefaultBaseSeed;
    /// If set, used instead of solving the capacity LP (e.g. read from a certificate file).
    std::optional<double> rho_override;

    /// Throws ValidationError on negative intensity, nonpositive horizon/replications, or
    /// a direction of the wrong length; PreconditionError if the policy cannot
    /// run on this config.
    void validate() const;
};

/// Arrival rates a scenario actually uses, with the capacity figures behind them.
struct ResolvedRates {
    double rho_star = 0.0;
    std::vector<double> rates;  // intensity * rho* * direction
    double margin = 0.0;        // uniform slack of `rates` inside the region
    bool inside = false;
};

/// Computes rho* (unless overridden) and the scaled rates; throws
/// ValidationError if any scaled rate exceeds 1.
ResolvedRates resolve_rates(const Scenario& scenario);

/// Independent Bernoulli(rates_r) per class.
ArrivalVector generate_arrivals(std::span<const double> rates, SplitMix64& rng);

struct ReplicationTrace {
    std::uint64_t seed = 0;
    std::vector<std::int64_t> total_backlog;  // sum_r Q_r(t) after slot t, t = 1..T
    std::vector<std::int64_t> arrivals;       // cumulative per class
    std::vector<std::int64_t> served;         // cumulative effective service per class
    QueueState final_state;
};

/// One run from Q(0) = 0 for `horizon` slots. Errors are rethrown with the
/// failing slot index in the message.
ReplicationTrace run_replication(const Scenario& scenario, std::span<const double> rates, std::uint64_t seed);

struct TrajectoryStats {
    std::vector<double> mean;       // per slot, across replications
    std::vector<double> std_error;  // per slot
    double time_average = 0.0;      // mean over all slots of `mean`
    double final_quarter_mean = 0.0;
    double middle_quarter_mean = 0.0;
    double trend_slope = 0.0;  // least squares over the last half
    double trend_intercept = 0.0;
    double trend_r2 = 0.0;
    std::vector<double> replication_final_quarter_means;

    bool passes_stability_proxy() const noexcept;
    /// Mean and standard error of the per-replication final-quarter means.
    double final_quarter_se() const noexcept;
};

/// Window boundaries used by TrajectoryStats, as half-open index ranges into
/// a trace of length T: final = [3T/4, T), middle = [3T/8, 5T/8), trend = [T/2, T).
struct Window {
    std::size_t begin = 0;
    std::size_t end = 0;
};
Window final_quarter(std::size_t horizon) noexcept;
Window middle_quarter(std::size_t horizon) noexcept;
Window last_half(std::size_t horizon) noexcept;

TrajectoryStats summarize(std::span<const ReplicationTrace> traces);

struct ExperimentResult {
    ResolvedRates resolved;
    TrajectoryStats stats;
    std::vector<ReplicationTrace> traces;
    std::vector<std::uint64_t> seeds;
};

/// Runs replications with seeds base_seed .. base_seed + replications - 1 on
/// up to `threads` worker threads (0: hardware concurrency). Results do not
/// depend on the thread count.
ExperimentResult run_experiment(const Scenario& scenario, unsigned threads = 0);
ExperimentResult run_experiment(const Scenario& scenario, const ResolvedRates& resolved, unsigned threads = 0);

/// "sim1", "sim2", "sim3". Throws ValidationError for any other name.
std::vector<Scenario> preset(const std::string& name);

/// Lexicographically ordered client subsets of a given size (0-based).
std::vector<std::vector<int>> all_subsets(int n_clients, int size);

}  // namespace qswitch
