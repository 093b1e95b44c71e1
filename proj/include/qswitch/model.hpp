#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qswitch/rng.hpp"

namespace qswitch {

/// Set of clients as a bit mask; bit n is client n (0-based).
using ClientMask = std::uint64_t;

inline constexpr int kMaxClients = 63;

/// Default guard on how many admissible service vectors may be materialized.
inline constexpr std::size_t kDefaultServiceCap = std::size_t{1} << 20;

constexpr bool contains(ClientMask set, int client) noexcept { return ((set >> client) & 1U) != 0; }
constexpr bool is_subset(ClientMask sub, ClientMask super) noexcept { return (sub & ~super) == 0; }

int popcount(ClientMask set) noexcept;
std::vector<int> members(ClientMask set);
ClientMask mask_of(std::span<const int> clients);

/// Binomial coefficient; throws CapacityExceeded on 64-bit overflow.
std::uint64_t binomial(int n, int k);

/// One end-to-end request type: the clients that must be entangled together.
struct RequestClass {
    std::vector<int> clients;  // 0-based, sorted, unique
    ClientMask mask = 0;

    std::size_t arity() const noexcept { return clients.size(); }
};

/// Static switch instance: N clients, M memories, per-client LLE success
/// probability, and R request classes. Immutable once constructed.
class SwitchConfig {
public:
    /// Classes are given with 0-based client indices in any order; they are
    /// canonicalized to sorted lists. Throws ValidationError on any invariant
    /// violation (M out of range, p outside [0,1], class with < 2 members,
    /// out-of-range client, duplicate class).
    SwitchConfig(int n_clients, int n_memories, std::vector<double> lle_success,
                 std::vector<std::vector<int>> request_classes);

    /// Same, but with a single success probability shared by every client.
    static SwitchConfig uniform(int n_clients, int n_memories, double p,
                                std::vector<std::vector<int>> request_classes);

    int n_clients() const noexcept { return n_clients_; }
    int n_memories() const noexcept { return n_memories_; }
    int n_classes() const noexcept { return static_cast<int>(classes_.size()); }
    std::span<const double> lle_success() const noexcept { return lle_success_; }
    double lle_success(int client) const { return lle_success_.at(static_cast<std::size_t>(client)); }
    const std::vector<RequestClass>& classes() const noexcept { return classes_; }
    const RequestClass& request_class(int r) const { return classes_.at(static_cast<std::size_t>(r)); }

    ClientMask all_clients() const noexcept;
    bool all_lle_certain() const noexcept;
    bool all_bipartite() const noexcept;

    /// Index of the class whose client set is exactly `set`, if registered.
    std::optional<int> find_class(ClientMask set) const noexcept;

    /// Human-readable class list, 1-based, e.g. "{1,2,3} {1,2,4}".
    std::string describe_classes() const;

private:
    int n_clients_;
    int n_memories_;
    std::vector<double> lle_success_;
    std::vector<RequestClass> classes_;
};

/// Backlog Q_r(t) per request class.
struct QueueState {
    std::vector<std::int64_t> backlog;

    QueueState() = default;
    explicit QueueState(std::size_t n_classes) : backlog(n_classes, 0) {}
    explicit QueueState(std::vector<std::int64_t> values);

    std::size_t size() const noexcept { return backlog.size(); }
    std::int64_t total() const noexcept;
    bool empty_queues() const noexcept;

    friend bool operator==(const QueueState&, const QueueState&) = default;
};

/// Requests arriving in one slot; each entry is 0 or 1.
struct ArrivalVector {
    std::vector<std::uint8_t> arrivals;

    ArrivalVector() = default;
    explicit ArrivalVector(std::size_t n_classes) : arrivals(n_classes, 0) {}
    explicit ArrivalVector(std::vector<std::uint8_t> values);

    std::size_t size() const noexcept { return arrivals.size(); }

    friend bool operator==(const ArrivalVector&, const ArrivalVector&) = default;
};

/// m: which clients hold one of the switch's memories this slot.
struct MemoryAllocation {
    ClientMask assigned = 0;

    int size() const noexcept;
    std::vector<std::uint8_t> to_binary(int n_clients) const;

    friend bool operator==(const MemoryAllocation&, const MemoryAllocation&) = default;
};

/// k: which allocated clients ended up with a live LLE this slot.
struct Connectivity {
    ClientMask active = 0;

    std::vector<std::uint8_t> to_binary(int n_clients) const;

    friend bool operator==(const Connectivity&, const Connectivity&) = default;
};

/// Row r of the assignment matrix S: the clients whose LLE is given to class r.
using ServiceWitness = std::vector<ClientMask>;

/// b: which classes are served this slot, optionally with the LLE assignment
/// that shows the choice is feasible.
struct ServiceVector {
    std::vector<std::uint8_t> served;
    std::optional<ServiceWitness> witness;

    ServiceVector() = default;
    explicit ServiceVector(std::size_t n_classes) : served(n_classes, 0) {}

    std::size_t size() const noexcept { return served.size(); }
    bool is_zero() const noexcept;
    std::int64_t weight(const QueueState& q) const;

    /// Canonical witness: class r takes exactly the LLEs of its own clients.
    static ServiceWitness canonical_witness(std::span<const std::uint8_t> served, const SwitchConfig& config);

    /// Lexicographic order on the binary vector b (b_1 most significant).
    friend bool operator<(const ServiceVector& a, const ServiceVector& b) { return a.served < b.served; }
    friend bool operator==(const ServiceVector& a, const ServiceVector& b) { return a.served == b.served; }
};

/// One point of the connectivity distribution of an allocation.
struct WeightedOutcome {
    Connectivity connectivity;
    double probability = 0.0;
};

/// All m with sum(m) == M (full_only) or sum(m) <= M, ordered
/// lexicographically by their sorted client lists.
std::vector<MemoryAllocation> enumerate_allocations(const SwitchConfig& config, bool full_only = true);

/// Support of the product-Bernoulli distribution of k given m. Outcomes of
/// probability zero are dropped. Ordered by k read as a binary number over the
/// uncertain clients, largest first (all-success first, all-fail last).
std::vector<WeightedOutcome> connectivity_support(MemoryAllocation m, const SwitchConfig& config);

/// One draw of k given m: one Bernoulli(p_n) per allocated client, in client order.
Connectivity sample_connectivity(MemoryAllocation m, const SwitchConfig& config, SplitMix64& rng);

/// Every b whose served classes use pairwise disjoint live LLEs, in ascending
/// lexicographic order (zero vector first), each with its canonical witness.
/// Throws CapacityExceeded if more than `cap` vectors would be produced.
std::vector<ServiceVector> admissible_services(Connectivity k, const SwitchConfig& config,
                                               std::size_t cap = kDefaultServiceCap);

/// Checks b against k using b's own witness: rows of served classes cover
/// their clients, rows of unserved classes do not, and no client's LLE is
/// used more often than k allows. Vectors without a witness are checked
/// against the canonical one.
bool witness_valid(const ServiceVector& b, Connectivity k, const SwitchConfig& config);

/// Q(t+1) = [Q(t) - b(t)]^+ + A(t).
QueueState queue_step(const QueueState& q, const ServiceVector& b, const ArrivalVector& a);

/// Number of requests actually removed: min(Q_r, b_r) per class.
std::vector<std::int64_t> effective_service(const QueueState& q, const ServiceVector& b);

}  // namespace qswitch
