#pragma once

// Exact-rational capacity computation for tiny instances. Every double input
// (probabilities, direction) is converted to the rational it represents
// exactly, so the answer is the exact optimum of the stated LP.

#include <boost/multiprecision/cpp_int.hpp>

#include "qswitch/capacity.hpp"
#include "qswitch/capacity_lp.hpp"
#include "qswitch/errors.hpp"

namespace qswitch {

using Rational = boost::multiprecision::cpp_rational;

inline constexpr std::size_t kMaxExactVariables = 100;

inline Rational to_rational(double v) { return Rational(v); }

inline Rational max_intensity_exact(const SwitchConfig& config, const ArrivalDirection& direction) {
    const CapacityModel model = build_lp(config);
    if (model.column_count() + 1 > kMaxExactVariables) {
        throw CapacityExceeded("exact LP mode is limited to " + std::to_string(kMaxExactVariables) +
                               " variables, model has " + std::to_string(model.column_count() + 1));
    }
    auto prog = capacity_lp::intensity_program<Rational>(model, config, direction.rates(), to_rational);
    const auto sol = lp::solve(prog, lp::Tolerance<Rational>{});
    if (sol.status != lp::Status::optimal) {
        throw CapacityExceeded(std::string("exact capacity LP is ") + lp::to_string(sol.status));
    }
    return sol.objective;
}

}  // namespace qswitch
