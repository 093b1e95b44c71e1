#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qswitch/matching.hpp"
#include "qswitch/model.hpp"
#include "qswitch/rng.hpp"

namespace qswitch {

enum class PolicyKind { mew, mew2, approx_mew };

std::string to_string(PolicyKind kind);
/// Accepts "MEW", "MEW2", "APPROX_MEW" (case-insensitive). Throws ValidationError.
PolicyKind parse_policy_kind(const std::string& text);

struct PolicySpec {
    PolicyKind kind = PolicyKind::mew;
    std::optional<int> approx_budget;  // l, only for approx_mew
    std::uint64_t rng_seed = 0;
    /// approx_mew only: keep last slot's allocation among the l candidates.
    bool carry_over = false;

    static PolicySpec mew() { return {}; }
    static PolicySpec mew2() { return {PolicyKind::mew2, std::nullopt, 0, false}; }
    static PolicySpec approx(int l) { return {PolicyKind::approx_mew, l, 0, false}; }

    /// Throws ValidationError unless approx_budget is present exactly for
    /// approx_mew and 1 <= l <= C(N, M).
    void validate(const SwitchConfig& config) const;

    /// "MEW", "MEW2", "10-Approx MEW".
    std::string label() const;
};

struct AllocationChoice {
    MemoryAllocation allocation;
    double objective = 0.0;
};

struct SlotDecision {
    MemoryAllocation allocation;
    Connectivity connectivity;
    ServiceVector service;
    double objective = 0.0;  // S1 value: sum_r Q_r mu_r(m, Q)
};

struct StepResult {
    SlotDecision decision;
    QueueState next;
};

/// Relative tolerance used when comparing expected-weight objectives.
inline constexpr double kObjectiveTolerance = 1e-12;

/// Static data MEW reuses every slot: the full allocations and their
/// connectivity distributions.
class AllocationTable {
public:
    explicit AllocationTable(const SwitchConfig& config);

    const SwitchConfig& config() const noexcept { return *config_; }
    std::size_t size() const noexcept { return allocations_.size(); }
    const std::vector<MemoryAllocation>& allocations() const noexcept { return allocations_; }
    const std::vector<WeightedOutcome>& support(std::size_t index) const { return supports_.at(index); }

    /// Expected weight of allocation `index` under the cache's queue state.
    double objective(std::size_t index, ServiceCache& cache) const;

    /// Maximize over the given allocation indices; earliest index wins ties
    /// (indices are scanned in ascending order regardless of input order).
    AllocationChoice best_of(std::vector<std::size_t> indices, ServiceCache& cache) const;

private:
    const SwitchConfig* config_;
    std::vector<MemoryAllocation> allocations_;
    std::vector<std::vector<WeightedOutcome>> supports_;
};

/// S1 of MEW over every full allocation; the lexicographically first one wins ties.
AllocationChoice mew_allocate(const QueueState& q, const SwitchConfig& config);

/// S1 restricted to l allocations drawn uniformly without replacement.
AllocationChoice approx_mew_allocate(const QueueState& q, const SwitchConfig& config, int l, SplitMix64& rng);

/// Indices of l allocations out of `total`, uniform without replacement,
/// returned in ascending order. `keep`, if set, is always included.
std::vector<std::size_t> sample_allocation_indices(std::size_t total, int l, SplitMix64& rng,
                                                   std::optional<std::size_t> keep = std::nullopt);

/// One slot of MEW or l-Approximate MEW. `policy_rng` feeds allocation
/// sampling, `lle_rng` the LLE attempts.
StepResult mew_step(const QueueState& q, const ArrivalVector& a, const SwitchConfig& config, const PolicySpec& spec,
                    SplitMix64& policy_rng, SplitMix64& lle_rng);
StepResult mew_step(const QueueState& q, const ArrivalVector& a, const SwitchConfig& config, const PolicySpec& spec,
                    SplitMix64& rng);

/// Throws PreconditionError unless every class is a pair, M is even and
/// every p_n is 1.
void require_mew2_regime(const SwitchConfig& config);

/// Client graph weighted by backlog: edge {i,j} carries Q_r of the class
/// {i,j}, or 0 if no such class is registered.
WeightedGraph backlog_graph(const QueueState& q, const SwitchConfig& config);

/// One slot of MEW2: capped matching with at most M/2 edges, memories on the
/// matched clients, serve the matched classes.
StepResult mew2_step(const QueueState& q, const ArrivalVector& a, const SwitchConfig& config, SplitMix64& lle_rng);

/// Per-replication policy driver. Owns its random streams; one owner at a time.
class PolicyStepper {
public:
    PolicyStepper(const SwitchConfig& config, PolicySpec spec, std::uint64_t seed);

    /// Decide slot `slot` for queue q with arrivals a.
    StepResult step(std::uint64_t slot, const QueueState& q, const ArrivalVector& a);

    const PolicySpec& spec() const noexcept { return spec_; }

private:
    const SwitchConfig& config_;
    PolicySpec spec_;
    AllocationTable table_;
    SlotStream policy_stream_;
    SlotStream lle_stream_;
    std::optional<std::size_t> previous_;
};

}  // namespace qswitch
