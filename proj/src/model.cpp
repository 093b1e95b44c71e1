#include "qswitch/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <sstream>

#include "qswitch/errors.hpp"

namespace qswitch {

int popcount(ClientMask set) noexcept { return std::popcount(set); }

std::vector<int> members(ClientMask set) {
    std::vector<int> out;
    while (set != 0) {
        out.push_back(std::countr_zero(set));
        set &= set - 1;
    }
    return out;
}

ClientMask mask_of(std::span<const int> clients) {
    ClientMask m = 0;
    for (int c : clients) {
        m |= ClientMask{1} << c;
    }
    return m;
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) {
        return 0;
    }
    k = std::min(k, n - k);
    unsigned __int128 acc = 1;
    for (int i = 1; i <= k; ++i) {
        acc = acc * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
        if (acc > std::numeric_limits<std::uint64_t>::max()) {
            throw CapacityExceeded("binomial(" + std::to_string(n) + "," + std::to_string(k) + ") overflows");
        }
    }
    return static_cast<std::uint64_t>(acc);
}

// ---------------------------------------------------------------------------
// SwitchConfig

SwitchConfig::SwitchConfig(int n_clients, int n_memories, std::vector<double> lle_success,
                           std::vector<std::vector<int>> request_classes)
    : n_clients_(n_clients), n_memories_(n_memories), lle_success_(std::move(lle_success)) {
    if (n_clients < 1 || n_clients > kMaxClients) {
        throw ValidationError("n_clients must be in [1, " + std::to_string(kMaxClients) + "], got " +
                              std::to_string(n_clients));
    }
    if (n_memories < 1 || n_memories > n_clients) {
        throw ValidationError("n_memories must be in [1, n_clients], got " + std::to_string(n_memories));
    }
    if (lle_success_.size() != static_cast<std::size_t>(n_clients)) {
        throw ValidationError("lle_success needs one probability per client (" + std::to_string(n_clients) +
                              "), got " + std::to_string(lle_success_.size()));
    }
    for (std::size_t n = 0; n < lle_success_.size(); ++n) {
        const double p = lle_success_[n];
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ValidationError("lle_success of client " + std::to_string(n + 1) + " is outside [0,1]");
        }
    }
    if (request_classes.empty()) {
        throw ValidationError("at least one request class is required");
    }
    std::set<ClientMask> seen;
    classes_.reserve(request_classes.size());
    for (std::size_t r = 0; r < request_classes.size(); ++r) {
        auto clients = std::move(request_classes[r]);
        std::sort(clients.begin(), clients.end());
        if (std::adjacent_find(clients.begin(), clients.end()) != clients.end()) {
            throw ValidationError("request class " + std::to_string(r + 1) + " lists a client twice");
        }
        if (clients.size() < 2) {
            throw ValidationError("request class " + std::to_string(r + 1) + " needs at least 2 clients");
        }
        if (clients.front() < 0 || clients.back() >= n_clients) {
            throw ValidationError("request class " + std::to_string(r + 1) + " references a client outside 1.." +
                                  std::to_string(n_clients));
        }
        const ClientMask mask = mask_of(clients);
        if (!seen.insert(mask).second) {
            throw ValidationError("request class " + std::to_string(r + 1) + " duplicates an earlier class");
        }
        classes_.push_back(RequestClass{std::move(clients), mask});
    }
}

SwitchConfig SwitchConfig::uniform(int n_clients, int n_memories, double p,
                                   std::vector<std::vector<int>> request_classes) {
    return SwitchConfig(n_clients, n_memories, std::vector<double>(static_cast<std::size_t>(std::max(n_clients, 0)), p),
                        std::move(request_classes));
}

ClientMask SwitchConfig::all_clients() const noexcept {
    return n_clients_ >= 64 ? ~ClientMask{0} : (ClientMask{1} << n_clients_) - 1;
}

bool SwitchConfig::all_lle_certain() const noexcept {
    return std::all_of(lle_success_.begin(), lle_success_.end(), [](double p) { return p == 1.0; });
}

bool SwitchConfig::all_bipartite() const noexcept {
    return std::all_of(classes_.begin(), classes_.end(), [](const RequestClass& c) { return c.arity() == 2; });
}

std::optional<int> SwitchConfig::find_class(ClientMask set) const noexcept {
    for (std::size_t r = 0; r < classes_.size(); ++r) {
        if (classes_[r].mask == set) {
            return static_cast<int>(r);
        }
    }
    return std::nullopt;
}

std::string SwitchConfig::describe_classes() const {
    std::ostringstream os;
    for (std::size_t r = 0; r < classes_.size(); ++r) {
        if (r != 0) {
            os << ' ';
        }
        os << '{';
        for (std::size_t i = 0; i < classes_[r].clients.size(); ++i) {
            os << (i ? "," : "") << classes_[r].clients[i] + 1;
        }
        os << '}';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Value types

QueueState::QueueState(std::vector<std::int64_t> values) : backlog(std::move(values)) {
    for (auto v : backlog) {
        if (v < 0) {
            throw ValidationError("queue backlog must be nonnegative");
        }
    }
}

std::int64_t QueueState::total() const noexcept {
    std::int64_t s = 0;
    for (auto v : backlog) {
        s += v;
    }
    return s;
}

bool QueueState::empty_queues() const noexcept {
    return std::all_of(backlog.begin(), backlog.end(), [](std::int64_t v) { return v == 0; });
}

ArrivalVector::ArrivalVector(std::vector<std::uint8_t> values) : arrivals(std::move(values)) {
    for (auto v : arrivals) {
        if (v > 1) {
            throw ValidationError("arrival entries must be 0 or 1");
        }
    }
}

int MemoryAllocation::size() const noexcept { return popcount(assigned); }

namespace {

std::vector<std::uint8_t> binary_of(ClientMask set, int n) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = contains(set, i) ? 1 : 0;
    }
    return out;
}

}  // namespace

std::vector<std::uint8_t> MemoryAllocation::to_binary(int n_clients) const { return binary_of(assigned, n_clients); }
std::vector<std::uint8_t> Connectivity::to_binary(int n_clients) const { return binary_of(active, n_clients); }

bool ServiceVector::is_zero() const noexcept {
    return std::all_of(served.begin(), served.end(), [](std::uint8_t v) { return v == 0; });
}

std::int64_t ServiceVector::weight(const QueueState& q) const {
    std::int64_t w = 0;
    for (std::size_t r = 0; r < served.size(); ++r) {
        if (served[r]) {
            w += q.backlog.at(r);
        }
    }
    return w;
}

ServiceWitness ServiceVector::canonical_witness(std::span<const std::uint8_t> served, const SwitchConfig& config) {
    ServiceWitness rows(served.size(), 0);
    for (std::size_t r = 0; r < served.size(); ++r) {
        if (served[r]) {
            rows[r] = config.request_class(static_cast<int>(r)).mask;
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Operations

std::vector<MemoryAllocation> enumerate_allocations(const SwitchConfig& config, bool full_only) {
    const int n = config.n_clients();
    const int m = config.n_memories();
    std::vector<MemoryAllocation> out;
    if (full_only) {
        out.reserve(static_cast<std::size_t>(binomial(n, m)));
    }
    // Depth-first over sorted client lists yields lexicographic order directly.
    auto visit = [&](auto&& self, int next, int used, ClientMask chosen) -> void {
        if (!full_only || used == m) {
            out.push_back(MemoryAllocation{chosen});
        }
        if (used == m) {
            return;
        }
        for (int c = next; c < n; ++c) {
            if (full_only && n - c < m - used) {
                break;
            }
            self(self, c + 1, used + 1, chosen | (ClientMask{1} << c));
        }
    };
    visit(visit, 0, 0, 0);
    return out;
}

std::vector<WeightedOutcome> connectivity_support(MemoryAllocation m, const SwitchConfig& config) {
    ClientMask certain = 0;
    std::vector<int> uncertain;
    for (int c : members(m.assigned)) {
        const double p = config.lle_success(c);
        if (p == 1.0) {
            certain |= ClientMask{1} << c;
        } else if (p > 0.0) {
            uncertain.push_back(c);
        }
    }
    const std::size_t u = uncertain.size();
    if (u >= 63) {
        throw CapacityExceeded("connectivity support too large");
    }
    const std::uint64_t count = std::uint64_t{1} << u;
    std::vector<WeightedOutcome> out;
    out.reserve(count);
    // Bit i of `pattern` (most significant first) decides uncertain[i].
    for (std::uint64_t step = 0; step < count; ++step) {
        const std::uint64_t pattern = count - 1 - step;
        ClientMask active = certain;
        double prob = 1.0;
        for (std::size_t i = 0; i < u; ++i) {
            const bool up = ((pattern >> (u - 1 - i)) & 1U) != 0;
            const double p = config.lle_success(uncertain[i]);
            if (up) {
                active |= ClientMask{1} << uncertain[i];
                prob *= p;
            } else {
                prob *= 1.0 - p;
            }
        }
        out.push_back(WeightedOutcome{Connectivity{active}, prob});
    }
    return out;
}

Connectivity sample_connectivity(MemoryAllocation m, const SwitchConfig& config, SplitMix64& rng) {
    ClientMask active = 0;
    for (int c : members(m.assigned)) {
        if (rng.bernoulli(config.lle_success(c))) {
            active |= ClientMask{1} << c;
        }
    }
    return Connectivity{active};
}

std::vector<ServiceVector> admissible_services(Connectivity k, const SwitchConfig& config, std::size_t cap) {
    const int r_count = config.n_classes();
    std::vector<ServiceVector> out;
    std::vector<std::uint8_t> current(static_cast<std::size_t>(r_count), 0);

    // Lexicographic ascending: branch b_r = 0 before b_r = 1.
    auto visit = [&](auto&& self, int r, ClientMask residual) -> void {
        if (r == r_count) {
            if (out.size() >= cap) {
                throw CapacityExceeded("admissible service set exceeds cap of " + std::to_string(cap) +
                                       " vectors");
            }
            ServiceVector b;
            b.served = current;
            b.witness = ServiceVector::canonical_witness(current, config);
            out.push_back(std::move(b));
            return;
        }
        self(self, r + 1, residual);
        const ClientMask need = config.request_class(r).mask;
        if (is_subset(need, residual)) {
            current[static_cast<std::size_t>(r)] = 1;
            self(self, r + 1, residual & ~need);
            current[static_cast<std::size_t>(r)] = 0;
        }
    };
    visit(visit, 0, k.active);
    return out;
}

bool witness_valid(const ServiceVector& b, Connectivity k, const SwitchConfig& config) {
    const auto r_count = static_cast<std::size_t>(config.n_classes());
    if (b.served.size() != r_count) {
        return false;
    }
    const ServiceWitness rows = b.witness ? *b.witness : ServiceVector::canonical_witness(b.served, config);
    if (rows.size() != r_count) {
        return false;
    }
    std::vector<int> usage(static_cast<std::size_t>(config.n_clients()), 0);
    for (std::size_t r = 0; r < r_count; ++r) {
        if (b.served[r] > 1) {
            return false;
        }
        if ((rows[r] & ~config.all_clients()) != 0) {
            return false;
        }
        const bool covers = is_subset(config.request_class(static_cast<int>(r)).mask, rows[r]);
        if (covers != (b.served[r] == 1)) {
            return false;
        }
        for (int c : members(rows[r])) {
            ++usage[static_cast<std::size_t>(c)];
        }
    }
    for (int c = 0; c < config.n_clients(); ++c) {
        if (usage[static_cast<std::size_t>(c)] > (contains(k.active, c) ? 1 : 0)) {
            return false;
        }
    }
    return true;
}

QueueState queue_step(const QueueState& q, const ServiceVector& b, const ArrivalVector& a) {
    if (q.size() != b.size() || q.size() != a.size()) {
        throw ValidationError("queue_step: queue, service and arrival vectors differ in length");
    }
    QueueState next(q.size());
    for (std::size_t r = 0; r < q.size(); ++r) {
        next.backlog[r] = std::max<std::int64_t>(q.backlog[r] - b.served[r], 0) + a.arrivals[r];
    }
    return next;
}

std::vector<std::int64_t> effective_service(const QueueState& q, const ServiceVector& b) {
    std::vector<std::int64_t> out(q.size(), 0);
    for (std::size_t r = 0; r < q.size(); ++r) {
        out[r] = std::min<std::int64_t>(q.backlog[r], b.served.at(r));
    }
    return out;
}

}  // namespace qswitch
