#pragma once

#include <cstdint>
#include <string>

#include "qswitch/matching.hpp"
#include "qswitch/model.hpp"

namespace qswitch {

/// Deliberate defects for mutation-testing the sweeps themselves.
enum class OracleFault { none, capped_off_by_one };

struct OracleReport {
    std::string name;
    std::int64_t checks = 0;
    bool passed = true;
    std::string counterexample;  // empty when passed
};

struct MatchingSweep {
    int instances = 200;
    int max_vertices = 8;
    Weight max_weight = 20;
    std::uint64_t seed = 1;
    OracleFault fault = OracleFault::none;
};

/// Unconstrained and capped (caps 1..n/2) matchings against brute force.
OracleReport check_matchings(const MatchingSweep& sweep);

struct HypergraphSweep {
    int instances = 200;
    int max_clients = 8;
    int max_classes = 10;
    std::int64_t max_backlog = 20;
    std::uint64_t seed = 2;
};

/// max_weight_service against exhaustive enumeration of admissible services.
OracleReport check_hypergraph_services(const HypergraphSweep& sweep);

struct EquivalenceSweep {
    int max_clients = 8;
    int states_per_config = 500;
    std::int64_t max_backlog = 50;
    std::uint64_t seed = 3;
};

/// With p = 1 and all pairs as classes, MEW's objective must equal the
/// capped-matching weight exactly for every even M in {2, 4, 6} up to N.
OracleReport check_mew_matching_equivalence(const EquivalenceSweep& sweep);

std::string describe_graph(const WeightedGraph& g);
std::string describe_matching(const Matching& m);

}  // namespace qswitch
