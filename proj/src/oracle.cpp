#include "qswitch/oracle.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "qswitch/policies.hpp"
#include "qswitch/rng.hpp"
#include "qswitch/sim.hpp"

namespace qswitch {

namespace {

std::int64_t draw(SplitMix64& rng, std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

WeightedGraph random_graph(int n, Weight max_weight, SplitMix64& rng) {
    WeightedGraph g(n);
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            // Roughly a third of the pairs stay absent; small weights force ties.
            if (rng.below(3) != 0) {
                g.set_weight(u, v, draw(rng, 0, max_weight));
            }
        }
    }
    return g;
}

QueueState random_queue(std::size_t r, std::int64_t max_backlog, SplitMix64& rng) {
    QueueState q(r);
    for (auto& x : q.backlog) {
        x = rng.below(4) == 0 ? 0 : draw(rng, 0, max_backlog);
    }
    return q;
}

std::string describe_queue(const QueueState& q) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < q.size(); ++i) {
        os << (i ? "," : "") << q.backlog[i];
    }
    os << ']';
    return os.str();
}

std::string bits(const std::vector<std::uint8_t>& v) {
    std::string s;
    for (auto x : v) {
        s += x ? '1' : '0';
    }
    return s;
}

}  // namespace

std::string describe_graph(const WeightedGraph& g) {
    std::ostringstream os;
    os << "graph n=" << g.size() << " edges:";
    for (int u = 0; u < g.size(); ++u) {
        for (int v = u + 1; v < g.size(); ++v) {
            if (g.weight(u, v) != 0) {
                os << " (" << u << ',' << v << ")=" << g.weight(u, v);
            }
        }
    }
    return os.str();
}

std::string describe_matching(const Matching& m) {
    std::ostringstream os;
    os << "weight " << m.total_weight << " {";
    for (std::size_t i = 0; i < m.edges.size(); ++i) {
        os << (i ? " " : "") << '(' << m.edges[i].first << ',' << m.edges[i].second << ')';
    }
    os << '}';
    return os.str();
}

OracleReport check_matchings(const MatchingSweep& sweep) {
    OracleReport rep{"matching vs brute force"};
    if (sweep.max_vertices < 2) {
        return rep;
    }
    const int max_n = std::min(sweep.max_vertices, kMaxBruteForceVertices);
    SplitMix64 rng(sweep.seed);
    for (int i = 0; i < sweep.instances; ++i) {
        const int n = static_cast<int>(draw(rng, 2, max_n));
        const WeightedGraph g = random_graph(n, sweep.max_weight, rng);

        auto compare = [&](const Matching& got, const Matching& want, const std::string& what) {
            ++rep.checks;
            if (got == want && got.is_valid_for(g)) {
                return true;
            }
            rep.passed = false;
            rep.counterexample = what + "\n  " + describe_graph(g) + "\n  got  " + describe_matching(got) +
                                 "\n  want " + describe_matching(want);
            return false;
        };

        if (!compare(max_weight_matching(g), brute_force_matching(g), "max_weight_matching")) {
            return rep;
        }
        for (int cap = 1; cap <= n / 2; ++cap) {
            const int used = sweep.fault == OracleFault::capped_off_by_one ? cap + 1 : cap;
            if (!compare(capped_matching(g, used), brute_force_matching(g, cap),
                         "capped_matching cap=" + std::to_string(cap))) {
                return rep;
            }
        }
    }
    return rep;
}

OracleReport check_hypergraph_services(const HypergraphSweep& sweep) {
    OracleReport rep{"hypergraph service vs exhaustive search"};
    if (sweep.max_clients < 2) {
        return rep;
    }
    SplitMix64 rng(sweep.seed);
    for (int i = 0; i < sweep.instances; ++i) {
        const int n = static_cast<int>(draw(rng, 2, sweep.max_clients));
        const std::size_t distinct = (std::size_t{1} << n) - 1 - static_cast<std::size_t>(n);
        const auto r = static_cast<std::size_t>(
            std::min<std::int64_t>(draw(rng, 1, sweep.max_classes), static_cast<std::int64_t>(distinct)));
        std::set<ClientMask> masks;
        while (masks.size() < r) {
            const auto m = static_cast<ClientMask>(draw(rng, 1, (std::int64_t{1} << n) - 1));
            if (popcount(m) >= 2) {
                masks.insert(m);
            }
        }
        std::vector<std::vector<int>> classes;
        for (ClientMask m : masks) {
            classes.push_back(members(m));
        }
        const SwitchConfig config = SwitchConfig::uniform(n, n, 1.0, classes);
        const QueueState q = random_queue(r, sweep.max_backlog, rng);
        const Connectivity k{static_cast<ClientMask>(draw(rng, 0, (std::int64_t{1} << n) - 1))};

        const ServiceChoice got = max_weight_service(k, q, config);
        const ServiceChoice want = brute_force_service(k, q, config);
        ++rep.checks;
        const bool witness_ok = got.service.witness ? witness_valid(got.service, k, config) : false;
        if (got.weight != want.weight || !(got.service == want.service) || !witness_ok) {
            std::ostringstream os;
            os << "max_weight_service\n  N=" << n << " classes " << config.describe_classes() << "\n  k="
               << bits(k.to_binary(n)) << "\n  Q=" << describe_queue(q) << "\n  got  " << got.weight << " b="
               << bits(got.service.served) << (witness_ok ? "" : " (bad witness)") << "\n  want "
               << want.weight << " b=" << bits(want.service.served);
            rep.passed = false;
            rep.counterexample = os.str();
            return rep;
        }
    }
    return rep;
}

OracleReport check_mew_matching_equivalence(const EquivalenceSweep& sweep) {
    OracleReport rep{"MEW objective vs capped matching"};
    SplitMix64 rng(sweep.seed);
    for (int m : {2, 4, 6}) {
        for (int n = m; n <= sweep.max_clients; ++n) {
            const SwitchConfig config = SwitchConfig::uniform(n, m, 1.0, all_subsets(n, 2));
            const AllocationTable table(config);
            for (int s = 0; s < sweep.states_per_config; ++s) {
                const QueueState q = random_queue(static_cast<std::size_t>(config.n_classes()), sweep.max_backlog, rng);
                ServiceCache cache(config, q);
                std::vector<std::size_t> all(table.size());
                for (std::size_t i = 0; i < all.size(); ++i) {
                    all[i] = i;
                }
                const AllocationChoice mew = table.best_of(all, cache);
                const Matching l = capped_matching(backlog_graph(q, config), m / 2);
                // With p = 1 each allocation has a single outcome k = m, so the
                // objective is an integer service weight.
                Weight best = 0;
                for (const auto& alloc : table.allocations()) {
                    best = std::max(best, cache.at(Connectivity{alloc.assigned}).weight);
                }
                ++rep.checks;
                if (best != l.total_weight || mew.objective != static_cast<double>(best)) {
                    std::ostringstream os;
                    os << "N=" << n << " M=" << m << " Q=" << describe_queue(q) << "\n  MEW objective "
                       << mew.objective << " (integer " << best << ")" << " vs matching " << describe_matching(l);
                    rep.passed = false;
                    rep.counterexample = os.str();
                    return rep;
                }
            }
        }
    }
    return rep;
}

}  // namespace qswitch
