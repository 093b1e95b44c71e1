#include "qswitch/matching.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <string>

#include "qswitch/errors.hpp"

namespace qswitch {

// ---------------------------------------------------------------------------
// WeightedGraph

WeightedGraph::WeightedGraph(int n_vertices) : n_(n_vertices) {
    if (n_vertices < 0) {
        throw ValidationError("graph vertex count must be nonnegative");
    }
    w_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_), 0);
}

Weight WeightedGraph::weight(int u, int v) const {
    if (u < 0 || v < 0 || u >= n_ || v >= n_) {
        throw ValidationError("vertex out of range");
    }
    return w_[static_cast<std::size_t>(u) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(v)];
}

void WeightedGraph::set_weight(int u, int v, Weight w) {
    if (u < 0 || v < 0 || u >= n_ || v >= n_) {
        throw ValidationError("vertex out of range");
    }
    if (u == v) {
        throw ValidationError("self-loops are not allowed");
    }
    if (w < 0) {
        throw ValidationError("edge weights must be nonnegative");
    }
    const auto n = static_cast<std::size_t>(n_);
    w_[static_cast<std::size_t>(u) * n + static_cast<std::size_t>(v)] = w;
    w_[static_cast<std::size_t>(v) * n + static_cast<std::size_t>(u)] = w;
}

Weight WeightedGraph::total_weight() const noexcept {
    Weight s = 0;
    for (int u = 0; u < n_; ++u) {
        for (int v = u + 1; v < n_; ++v) {
            s += w_[static_cast<std::size_t>(u) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(v)];
        }
    }
    return s;
}

bool Matching::is_valid_for(const WeightedGraph& g) const {
    std::vector<bool> used(static_cast<std::size_t>(g.size()), false);
    Weight sum = 0;
    for (auto [u, v] : edges) {
        if (u < 0 || v >= g.size() || u >= v) {
            return false;
        }
        if (used[static_cast<std::size_t>(u)] || used[static_cast<std::size_t>(v)]) {
            return false;
        }
        used[static_cast<std::size_t>(u)] = used[static_cast<std::size_t>(v)] = true;
        sum += g.weight(u, v);
    }
    return std::is_sorted(edges.begin(), edges.end()) && sum == total_weight;
}

namespace {

// Incidence order on sorted edge lists: find the smallest edge present in
// exactly one list; the list holding it is the larger one.
bool edges_less(const std::vector<Edge>& a, const std::vector<Edge>& b) {
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++i;
            ++j;
        } else {
            return b[j] < a[i];
        }
    }
    if (i == a.size() && j == b.size()) {
        return false;
    }
    return i == a.size();
}

/*
 * Subset DP. best[S] is the maximum matching weight on vertex set S. The
 * lowest vertex v of S is either left unmatched or matched to some u in S;
 * both leave a strictly smaller subset, so masks are filled in increasing
 * order.
 *
 * Only edges with both endpoints below `real_count` take part in the
 * tie-break. Within S every such edge at v comes before any edge of the
 * remainder in incidence order, so:
 *   - options that use a real edge (v,u) lose to options that do not;
 *   - among real edges, the larger u wins (its 1 appears later);
 *   - "v unmatched" versus "v to a virtual vertex" is decided by the
 *     remainders, which are reconstructed and compared directly.
 */
class SubsetDp {
public:
    SubsetDp(const WeightedGraph& g, int real_count) : g_(g), real_(real_count) {
        const int n = g.size();
        if (n > kMaxDpVertices) {
            throw CapacityExceeded("matching DP supports at most " + std::to_string(kMaxDpVertices) +
                                   " vertices, got " + std::to_string(n));
        }
        const std::size_t states = std::size_t{1} << n;
        best_.assign(states, 0);
        partner_.assign(states, kUnmatched);
        for (std::size_t s = 1; s < states; ++s) {
            fill(static_cast<std::uint32_t>(s));
        }
    }

    Matching extract(std::uint32_t s, bool real_only) const {
        Matching m;
        m.total_weight = best_[s];
        m.edges = edges_of(s, real_only);
        return m;
    }

private:
    static constexpr std::int8_t kUnmatched = -1;

    std::vector<Edge> edges_of(std::uint32_t s, bool real_only) const {
        std::vector<Edge> out;
        while (s != 0) {
            const int v = std::countr_zero(s);
            const int u = partner_[s];
            s &= ~(1U << v);
            if (u != kUnmatched) {
                s &= ~(1U << u);
                if (!real_only || u < real_) {
                    out.emplace_back(v, u);
                }
            }
        }
        return out;  // v increases along the walk, so already sorted
    }

    void fill(std::uint32_t s) {
        const int v = std::countr_zero(s);
        const std::uint32_t rest = s & ~(1U << v);

        Weight top = best_[rest];
        for (std::uint32_t r = rest; r != 0; r &= r - 1) {
            const int u = std::countr_zero(r);
            top = std::max(top, g_.weight(v, u) + best_[rest & ~(1U << u)]);
        }
        best_[s] = top;

        if (v >= real_) {
            // Everything left is virtual; nothing here enters the tie-break.
            partner_[s] = best_[rest] == top ? kUnmatched : static_cast<std::int8_t>(first_optimal(v, rest, top));
            return;
        }

        // Group 1: v unmatched, or v on a virtual vertex.
        bool have_free = false;
        std::int8_t free_choice = kUnmatched;
        std::vector<Edge> free_edges;
        if (best_[rest] == top) {
            have_free = true;
            free_edges = edges_of(rest, true);
        }
        for (std::uint32_t r = rest & ~((1U << real_) - 1U); r != 0; r &= r - 1) {
            const int x = std::countr_zero(r);
            const std::uint32_t sub = rest & ~(1U << x);
            if (g_.weight(v, x) + best_[sub] != top) {
                continue;
            }
            auto cand = edges_of(sub, true);
            if (!have_free || edges_less(cand, free_edges)) {
                have_free = true;
                free_choice = static_cast<std::int8_t>(x);
                free_edges = std::move(cand);
            }
            // Virtual vertices are interchangeable; the first optimal one
            // stands for all of them.
            break;
        }
        if (have_free) {
            partner_[s] = free_choice;
            return;
        }

        // Group 2: the largest real partner attaining the optimum.
        for (int u = real_ - 1; u > v; --u) {
            if (((rest >> u) & 1U) != 0 && g_.weight(v, u) + best_[rest & ~(1U << u)] == top) {
                partner_[s] = static_cast<std::int8_t>(u);
                return;
            }
        }
    }

    int first_optimal(int v, std::uint32_t rest, Weight top) const {
        for (std::uint32_t r = rest; r != 0; r &= r - 1) {
            const int u = std::countr_zero(r);
            if (g_.weight(v, u) + best_[rest & ~(1U << u)] == top) {
                return u;
            }
        }
        return kUnmatched;
    }

    const WeightedGraph& g_;
    int real_;
    std::vector<Weight> best_;
    std::vector<std::int8_t> partner_;
};

Weight checked_add(Weight a, Weight b) {
    Weight out = 0;
    if (__builtin_add_overflow(a, b, &out)) {
        throw CapacityExceeded("matching weight overflows 64-bit arithmetic");
    }
    return out;
}

}  // namespace

bool incidence_less(const Matching& a, const Matching& b) { return edges_less(a.edges, b.edges); }

Matching max_weight_matching(const WeightedGraph& g) {
    if (g.size() == 0) {
        return {};
    }
    SubsetDp dp(g, g.size());
    return dp.extract((g.size() == 32 ? 0U : (1U << g.size())) - 1U, false);
}

Matching capped_matching(const WeightedGraph& g, int max_edges) {
    if (max_edges < 1) {
        throw ValidationError("capped_matching needs max_edges >= 1");
    }
    const int n = g.size();
    if (n <= 2 * max_edges) {
        return max_weight_matching(g);
    }
    const int virtual_count = n - 2 * max_edges;
    const Weight real_total = g.total_weight();
    const Weight surrogate = checked_add(real_total, 1);
    // Dominance: every virtual vertex gets matched at the optimum.
    Weight bound = real_total;
    for (int i = 0; i < virtual_count; ++i) {
        bound = checked_add(bound, surrogate);
    }

    WeightedGraph augmented(n + virtual_count);
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            augmented.set_weight(u, v, g.weight(u, v));
        }
        for (int x = n; x < n + virtual_count; ++x) {
            augmented.set_weight(u, x, surrogate);
        }
    }
    SubsetDp dp(augmented, n);
    const std::uint32_t all = (1U << (n + virtual_count)) - 1U;
    Matching m = dp.extract(all, true);
    m.total_weight = 0;
    for (auto [u, v] : m.edges) {
        m.total_weight += g.weight(u, v);
    }
    return m;
}

Matching brute_force_matching(const WeightedGraph& g, std::optional<int> max_edges) {
    const int n = g.size();
    if (n > kMaxBruteForceVertices) {
        throw ValidationError("brute_force_matching supports at most " + std::to_string(kMaxBruteForceVertices) +
                              " vertices");
    }
    const int cap = max_edges.value_or(n);
    Matching best;
    std::vector<Edge> current;
    auto visit = [&](auto&& self, std::uint32_t free, Weight w) -> void {
        if (free == 0 || static_cast<int>(current.size()) == cap) {
            Matching cand{current, w};
            std::sort(cand.edges.begin(), cand.edges.end());
            if (cand.total_weight > best.total_weight ||
                (cand.total_weight == best.total_weight && incidence_less(cand, best))) {
                best = std::move(cand);
            }
            return;
        }
        const int v = std::countr_zero(free);
        const std::uint32_t rest = free & ~(1U << v);
        self(self, rest, w);
        for (std::uint32_t r = rest; r != 0; r &= r - 1) {
            const int u = std::countr_zero(r);
            current.emplace_back(v, u);
            self(self, rest & ~(1U << u), w + g.weight(v, u));
            current.pop_back();
        }
    };
    visit(visit, n == 0 ? 0U : (1U << n) - 1U, 0);
    return best;
}

// ---------------------------------------------------------------------------
// Hypergraph service selection

ServiceChoice max_weight_service(Connectivity k, const QueueState& q, const SwitchConfig& config) {
    const int r_count = config.n_classes();
    if (q.size() != static_cast<std::size_t>(r_count)) {
        throw ValidationError("queue length does not match the number of request classes");
    }
    // Only classes that fit inside k and have backlog can raise the weight;
    // including a zero-backlog class would only make b lexicographically larger.
    struct Candidate {
        int r;
        ClientMask need;
        Weight q;
    };
    std::vector<Candidate> cands;
    for (int r = 0; r < r_count; ++r) {
        const auto& cls = config.request_class(r);
        const Weight qr = q.backlog[static_cast<std::size_t>(r)];
        if (qr > 0 && is_subset(cls.mask, k.active)) {
            cands.push_back({r, cls.mask, qr});
        }
    }

    std::vector<std::uint8_t> chosen(cands.size(), 0);
    std::vector<std::uint8_t> best_chosen(cands.size(), 0);
    Weight best = 0;

    // Exclude-first DFS visits b in ascending lexicographic order, so keeping
    // only strict improvements yields the smallest maximizer, and subtrees whose
    // bound cannot beat `best` are cut.
    auto visit = [&](auto&& self, std::size_t i, ClientMask residual, Weight acc) -> void {
        if (acc > best) {
            best = acc;
            best_chosen = chosen;
        }
        if (i == cands.size()) {
            return;
        }
        Weight bound = acc;
        for (std::size_t j = i; j < cands.size(); ++j) {
            if (is_subset(cands[j].need, residual)) {
                bound += cands[j].q;
            }
        }
        if (bound <= best) {
            return;
        }
        self(self, i + 1, residual, acc);
        if (is_subset(cands[i].need, residual)) {
            chosen[i] = 1;
            self(self, i + 1, residual & ~cands[i].need, acc + cands[i].q);
            chosen[i] = 0;
        }
    };
    visit(visit, 0, k.active, 0);

    ServiceChoice out;
    out.service = ServiceVector(static_cast<std::size_t>(r_count));
    for (std::size_t i = 0; i < cands.size(); ++i) {
        if (best_chosen[i]) {
            out.service.served[static_cast<std::size_t>(cands[i].r)] = 1;
        }
    }
    out.service.witness = ServiceVector::canonical_witness(out.service.served, config);
    out.weight = best;
    return out;
}

const ServiceChoice& ServiceCache::at(Connectivity k) {
    auto it = memo_.find(k.active);
    if (it == memo_.end()) {
        it = memo_.emplace(k.active, max_weight_service(k, q_, config_)).first;
    }
    return it->second;
}

std::vector<double> expected_service(MemoryAllocation m, const QueueState& q, const SwitchConfig& config) {
    ServiceCache cache(config, q);
    std::vector<double> mu(static_cast<std::size_t>(config.n_classes()), 0.0);
    for (const auto& outcome : connectivity_support(m, config)) {
        const auto& choice = cache.at(outcome.connectivity);
        for (std::size_t r = 0; r < mu.size(); ++r) {
            if (choice.service.served[r]) {
                mu[r] += outcome.probability;
            }
        }
    }
    return mu;
}

double expected_weight(MemoryAllocation m, const QueueState& q, const SwitchConfig& config, ServiceCache& cache) {
    double total = 0.0;
    for (const auto& outcome : connectivity_support(m, config)) {
        total += outcome.probability * static_cast<double>(cache.at(outcome.connectivity).weight);
    }
    return total;
}

ServiceChoice brute_force_service(Connectivity k, const QueueState& q, const SwitchConfig& config) {
    ServiceChoice best;
    bool first = true;
    for (auto& b : admissible_services(k, config)) {
        const Weight w = b.weight(q);
        if (first || w > best.weight) {
            best.service = std::move(b);
            best.weight = w;
            first = false;
        }
    }
    return best;
}

}  // namespace qswitch
