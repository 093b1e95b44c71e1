#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qswitch/model.hpp"

namespace qswitch {

using Weight = std::int64_t;

/// Largest vertex count accepted by the exact subset DP (memory is 9 * 2^n bytes).
inline constexpr int kMaxDpVertices = 22;
/// Largest vertex count accepted by the exhaustive oracle.
inline constexpr int kMaxBruteForceVertices = 12;

/// Complete graph on n vertices with a nonnegative integer weight per pair.
/// Pairs never assigned have weight 0.
class WeightedGraph {
public:
    explicit WeightedGraph(int n_vertices);

    int size() const noexcept { return n_; }
    Weight weight(int u, int v) const;
    void set_weight(int u, int v, Weight w);
    Weight total_weight() const noexcept;

private:
    int n_;
    std::vector<Weight> w_;  // row-major n x n, symmetric, zero diagonal
};

using Edge = std::pair<int, int>;  // first < second

struct Matching {
    std::vector<Edge> edges;  // sorted ascending
    Weight total_weight = 0;

    std::size_t size() const noexcept { return edges.size(); }
    bool is_valid_for(const WeightedGraph& g) const;

    friend bool operator==(const Matching&, const Matching&) = default;
};

/// Tie-break order: matchings compared as 0/1 incidence vectors over the
/// edges (0,1), (0,2), ..., (n-2,n-1); the vector with a 0 at the first
/// differing edge is smaller. The empty matching is the smallest.
bool incidence_less(const Matching& a, const Matching& b);

/// Maximum-weight matching; among optima, the smallest in incidence order.
Matching max_weight_matching(const WeightedGraph& g);

/// Maximum-weight matching with at most `max_edges` edges, found by adding
/// n - 2*max_edges virtual vertices tied to every real vertex with weight
/// 1 + (sum of real weights), solving the unconstrained problem, and
/// dropping virtual edges. Same tie-break as max_weight_matching, applied to
/// the real edges only.
Matching capped_matching(const WeightedGraph& g, int max_edges);

/// Exhaustive enumeration of every matching (optionally at most `max_edges`
/// edges). Test oracle; n <= kMaxBruteForceVertices.
Matching brute_force_matching(const WeightedGraph& g, std::optional<int> max_edges = std::nullopt);

// ---------------------------------------------------------------------------
// Hypergraph service selection

struct ServiceChoice {
    ServiceVector service;
    Weight weight = 0;
};

/// w(k, Q): an admissible b maximizing sum_r Q_r b_r, smallest in
/// lexicographic order among maximizers. Depth-first branch and bound over
/// request classes; never materializes the admissible set.
ServiceChoice max_weight_service(Connectivity k, const QueueState& q, const SwitchConfig& config);

/// Memoizes max_weight_service per connectivity for one fixed queue state.
/// Many allocations share connectivities, so one slot of MEW reuses a lot.
class ServiceCache {
public:
    ServiceCache(const SwitchConfig& config, const QueueState& q) : config_(config), q_(q) {}

    const ServiceChoice& at(Connectivity k);

private:
    const SwitchConfig& config_;
    const QueueState& q_;
    std::unordered_map<ClientMask, ServiceChoice> memo_;
};

/// mu(m, Q) = sum_k P(k; m) w(k, Q), one entry per class.
std::vector<double> expected_service(MemoryAllocation m, const QueueState& q, const SwitchConfig& config);

/// sum_r Q_r mu_r(m, Q), computed as sum_k P(k; m) * weight(w(k, Q)).
double expected_weight(MemoryAllocation m, const QueueState& q, const SwitchConfig& config, ServiceCache& cache);

/// Exhaustive maximum over admissible_services; test oracle.
ServiceChoice brute_force_service(Connectivity k, const QueueState& q, const SwitchConfig& config);

}  // namespace qswitch
