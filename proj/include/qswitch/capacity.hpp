#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "qswitch/model.hpp"
#include "qswitch/simplex.hpp"

namespace qswitch {

inline constexpr std::size_t kDefaultColumnCap = 1'000'000;

/// Tolerances for the floating-point LP and for certificate checks.
inline constexpr double kLpTolerance = 1e-9;

/// One (m, k) pair of the capacity region: its probability and the
/// admissible service vectors that are the columns gamma^{m,k}_b.
struct ServiceBlock {
    std::size_t allocation = 0;  // index into CapacityModel::allocations
    Connectivity connectivity;
    double probability = 0.0;
    std::vector<ServiceVector> services;
    std::size_t first_column = 0;  // index of the first gamma column of this block
};

/// Column structure of the capacity-region LP after the substitution
/// gamma = theta * delta. Columns are theta_m (one per allocation) followed by
/// gamma^{m,k}_b, block by block.
struct CapacityModel {
    std::vector<MemoryAllocation> allocations;
    std::vector<ServiceBlock> blocks;
    std::size_t n_theta = 0;
    std::size_t n_gamma = 0;
    int n_classes = 0;

    std::size_t column_count() const noexcept { return n_theta + n_gamma; }
};

/// Enumerate allocations, their connectivity support and admissible service
/// sets. Throws CapacityExceeded (message carries the column count) if the
/// model would have more than `column_cap` columns.
CapacityModel build_lp(const SwitchConfig& config, bool full_only = true, std::size_t column_cap = kDefaultColumnCap);

/// Direction lambda-hat along which intensity is measured. Normalized so the
/// entries sum to 1.
class ArrivalDirection {
public:
    explicit ArrivalDirection(std::vector<double> rates);
    static ArrivalDirection uniform(int n_classes);

    std::span<const double> rates() const noexcept { return rates_; }
    std::size_t size() const noexcept { return rates_.size(); }

private:
    std::vector<double> rates_;
};

/// delta^{m,k}_b for one block, one entry per admissible service vector.
struct BlockMix {
    std::vector<double> weights;
};

/// A point of the capacity region together with how to realize it.
struct CapacityCertificate {
    std::vector<double> theta;          // per allocation
    std::vector<BlockMix> delta;        // per block, sums to 1
    std::vector<double> achieved_rate;  // f, per class, as reported by the LP
    double intensity = 0.0;             // rho
    double stability_margin = 0.0;      // largest eps with target_r + eps <= f_r
    std::vector<double> target;         // the rate vector the margin refers to
};

struct IntensityResult {
    double rho = 0.0;
    CapacityCertificate certificate;
};

/// rho* = max { rho : rho * direction in the capacity region }.
IntensityResult max_intensity(const SwitchConfig& config, const ArrivalDirection& direction,
                              const CapacityModel& model);
IntensityResult max_intensity(const SwitchConfig& config, const ArrivalDirection& direction);

struct MembershipResult {
    bool inside = false;
    double rho = 0.0;     // max intensity along rates / |rates| (0 rates: +inf reported as 0)
    double margin = 0.0;  // eps of the uniform-slack LP; negative when outside
    CapacityCertificate certificate;  // realizes the margin
};

/// Is `rates` in the capacity region, and by what uniform margin?
MembershipResult membership(const SwitchConfig& config, std::span<const double> rates, const CapacityModel& model);
MembershipResult membership(const SwitchConfig& config, std::span<const double> rates);

/// f = sum_m theta_m sum_k P(k;m) sum_b delta_b b, recomputed from the mixing
/// weights alone.
std::vector<double> reconstruct_rate(const CapacityModel& model, const CapacityCertificate& cert);

/// Largest |reconstructed - reported| entry.
double reconstruction_residual(const CapacityModel& model, const CapacityCertificate& cert);

/// JSON export: rho, epsilon, f, nonzero theta, and delta as sparse
/// (allocation, connectivity, service, weight) entries, clients and classes 1-based.
nlohmann::json certificate_to_json(const CapacityCertificate& cert, const CapacityModel& model,
                                   const SwitchConfig& config);

}  // namespace qswitch
