#include "qswitch/policies.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "qswitch/errors.hpp"

namespace qswitch {

std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::mew:
            return "MEW";
        case PolicyKind::mew2:
            return "MEW2";
        case PolicyKind::approx_mew:
            return "APPROX_MEW";
    }
    return "?";
}

PolicyKind parse_policy_kind(const std::string& text) {
    std::string up;
    for (char c : text) {
        up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    if (up == "MEW") {
        return PolicyKind::mew;
    }
    if (up == "MEW2") {
        return PolicyKind::mew2;
    }
    if (up == "APPROX_MEW") {
        return PolicyKind::approx_mew;
    }
    throw ValidationError("unknown policy kind '" + text + "' (expected MEW, MEW2 or APPROX_MEW)");
}

void PolicySpec::validate(const SwitchConfig& config) const {
    if (kind == PolicyKind::approx_mew) {
        if (!approx_budget) {
            throw ValidationError("APPROX_MEW requires approx_budget");
        }
        const auto total = binomial(config.n_clients(), config.n_memories());
        if (*approx_budget < 1 || static_cast<std::uint64_t>(*approx_budget) > total) {
            throw ValidationError("approx_budget must be in [1, " + std::to_string(total) + "]");
        }
    } else {
        if (approx_budget) {
            throw ValidationError("approx_budget is only meaningful for APPROX_MEW");
        }
        if (carry_over) {
            throw ValidationError("carry_over is only meaningful for APPROX_MEW");
        }
    }
}

std::string PolicySpec::label() const {
    switch (kind) {
        case PolicyKind::mew:
            return "MEW";
        case PolicyKind::mew2:
            return "MEW2";
        case PolicyKind::approx_mew:
            return std::to_string(approx_budget.value_or(0)) + "-Approx MEW";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// MEW allocation

AllocationTable::AllocationTable(const SwitchConfig& config)
    : config_(&config), allocations_(enumerate_allocations(config, true)) {
    supports_.reserve(allocations_.size());
    for (const auto& m : allocations_) {
        supports_.push_back(connectivity_support(m, config));
    }
}

double AllocationTable::objective(std::size_t index, ServiceCache& cache) const {
    double total = 0.0;
    for (const auto& outcome : supports_.at(index)) {
        total += outcome.probability * static_cast<double>(cache.at(outcome.connectivity).weight);
    }
    return total;
}

AllocationChoice AllocationTable::best_of(std::vector<std::size_t> indices, ServiceCache& cache) const {
    if (indices.empty()) {
        throw ValidationError("no candidate allocations");
    }
    std::sort(indices.begin(), indices.end());
    AllocationChoice best{allocations_.at(indices.front()), objective(indices.front(), cache)};
    for (std::size_t i = 1; i < indices.size(); ++i) {
        const double value = objective(indices[i], cache);
        if (value > best.objective + kObjectiveTolerance * std::max(1.0, std::abs(best.objective))) {
            best = {allocations_[indices[i]], value};
        }
    }
    return best;
}

AllocationChoice mew_allocate(const QueueState& q, const SwitchConfig& config) {
    AllocationTable table(config);
    ServiceCache cache(config, q);
    std::vector<std::size_t> all(table.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return table.best_of(std::move(all), cache);
}

std::vector<std::size_t> sample_allocation_indices(std::size_t total, int l, SplitMix64& rng,
                                                   std::optional<std::size_t> keep) {
    if (l < 1 || static_cast<std::size_t>(l) > total) {
        throw ValidationError("sample size must be in [1, " + std::to_string(total) + "]");
    }
    std::vector<std::size_t> pool(total);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::vector<std::size_t> out;
    auto want = static_cast<std::size_t>(l);
    if (keep) {
        out.push_back(*keep);
        std::swap(pool[*keep], pool.back());
        pool.pop_back();
        --want;
    }
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < want; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

AllocationChoice approx_mew_allocate(const QueueState& q, const SwitchConfig& config, int l, SplitMix64& rng) {
    AllocationTable table(config);
    ServiceCache cache(config, q);
    return table.best_of(sample_allocation_indices(table.size(), l, rng), cache);
}

namespace {

StepResult finish_mew_slot(const QueueState& q, const ArrivalVector& a, const SwitchConfig& config,
                           const AllocationChoice& s1, ServiceCache& cache, SplitMix64& lle_rng) {
    StepResult out;
    out.decision.allocation = s1.allocation;
    out.decision.objective = s1.objective;
    out.decision.connectivity = sample_connectivity(s1.allocation, config, lle_rng);
    out.decision.service = cache.at(out.decision.connectivity).service;
    out.next = queue_step(q, out.decision.service, a);
    return out;
}

StepResult mew_step_with(const AllocationTable& table, const QueueState& q, const ArrivalVector& a,
                         const PolicySpec& spec, SplitMix64& policy_rng, SplitMix64& lle_rng,
                         std::optional<std::size_t> keep, std::size_t* chosen_index) {
    const SwitchConfig& config = table.config();
    ServiceCache cache(config, q);
    std::vector<std::size_t> indices;
    if (spec.kind == PolicyKind::approx_mew) {
        indices = sample_allocation_indices(table.size(), *spec.approx_budget, policy_rng, keep);
    } else {
        indices.resize(table.size());
        std::iota(indices.begin(), indices.end(), std::size_t{0});
    }
    const AllocationChoice s1 = table.best_of(indices, cache);
    if (chosen_index != nullptr) {
        const auto& all = table.allocations();
        *chosen_index = static_cast<std::size_t>(std::find(all.begin(), all.end(), s1.allocation) - all.begin());
    }
    return finish_mew_slot(q, a, config, s1, cache, lle_rng);
}

}  // namespace

StepResult mew_step(const QueueState& q, const ArrivalVector& a, const SwitchConfig& config, const PolicySpec& spec,
                    SplitMix64& policy_rng, SplitMix64& lle_rng) {
    if (spec.kind == PolicyKind::mew2) {
        throw PreconditionError("mew_step handles MEW and APPROX_MEW only");
    }
    spec.validate(config);
    AllocationTable table(config);
    return mew_step_with(table, q, a, spec, policy_rng, lle_rng, std::nullopt, nullptr);
}

StepResult mew_step(const QueueState& q, const ArrivalVector& a, const SwitchConfig& config, const PolicySpec& spec,
                    SplitMix64& rng) {
    return mew_step(q, a, config, spec, rng, rng);
}

// ---------------------------------------------------------------------------
// MEW2

void require_mew2_regime(const SwitchConfig& config) {
    if (!config.all_bipartite()) {
        throw PreconditionError("MEW2 requires every request class to involve exactly two clients");
    }
    if (config.n_memories() % 2 != 0) {
        throw PreconditionError("MEW2 requires M to be even (got M=" + std::to_string(config.n_memories()) + ")");
    }
    if (!config.all_lle_certain()) {
        throw PreconditionError("MEW2 requires every LLE success probability to be 1");
    }
}

WeightedGraph backlog_graph(const QueueState& q, const SwitchConfig& config) {
    WeightedGraph g(config.n_clients());
    for (int r = 0; r < config.n_classes(); ++r) {
        const auto& cls = config.request_class(r);
        if (cls.arity() == 2) {
            g.set_weight(cls.clients[0], cls.clients[1], q.backlog.at(static_cast<std::size_t>(r)));
        }
    }
    return g;
}

StepResult mew2_step(const QueueState& q, const ArrivalVector& a, const SwitchConfig& config, SplitMix64& lle_rng) {
    require_mew2_regime(config);
    const Matching l = capped_matching(backlog_graph(q, config), config.n_memories() / 2);

    StepResult out;
    ClientMask matched = 0;
    out.decision.service = ServiceVector(static_cast<std::size_t>(config.n_classes()));
    for (auto [u, v] : l.edges) {
        const ClientMask pair = (ClientMask{1} << u) | (ClientMask{1} << v);
        matched |= pair;
        if (auto r = config.find_class(pair)) {
            out.decision.service.served[static_cast<std::size_t>(*r)] = 1;
        }
    }
    out.decision.service.witness = ServiceVector::canonical_witness(out.decision.service.served, config);
    out.decision.allocation = MemoryAllocation{matched};
    out.decision.connectivity = sample_connectivity(out.decision.allocation, config, lle_rng);
    out.decision.objective = static_cast<double>(l.total_weight);
    out.next = queue_step(q, out.decision.service, a);
    return out;
}

// ---------------------------------------------------------------------------
// PolicyStepper

PolicyStepper::PolicyStepper(const SwitchConfig& config, PolicySpec spec, std::uint64_t seed)
    : config_(config),
      spec_(spec),
      table_(config),
      policy_stream_(derive_key(seed, spec.rng_seed), StreamPurpose::policy),
      lle_stream_(seed, StreamPurpose::lle) {
    spec_.validate(config_);
    if (spec_.kind == PolicyKind::mew2) {
        require_mew2_regime(config_);
    }
}

StepResult PolicyStepper::step(std::uint64_t slot, const QueueState& q, const ArrivalVector& a) {
    SplitMix64 lle_rng = lle_stream_.at(slot);
    if (spec_.kind == PolicyKind::mew2) {
        return mew2_step(q, a, config_, lle_rng);
    }
    SplitMix64 policy_rng = policy_stream_.at(slot);
    std::size_t chosen = 0;
    const auto keep = spec_.carry_over ? previous_ : std::nullopt;
    StepResult out = mew_step_with(table_, q, a, spec_, policy_rng, lle_rng, keep, &chosen);
    previous_ = chosen;
    return out;
}

}  // namespace qswitch
