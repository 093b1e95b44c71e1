#pragma once

// LP assembly shared by the floating-point and exact-rational capacity solvers.

#include <cstddef>
#include <span>
#include <vector>

#include "qswitch/capacity.hpp"
#include "qswitch/simplex.hpp"

namespace qswitch::capacity_lp {

/// P(k; m) evaluated in T from the per-client probabilities.
template <class T, class Convert>
T block_probability(const CapacityModel& model, const ServiceBlock& block, const SwitchConfig& config,
                    Convert&& to_scalar) {
    T prob{1};
    for (int c : members(model.allocations[block.allocation].assigned)) {
        const T p = to_scalar(config.lle_success(c));
        prob *= contains(block.connectivity.active, c) ? p : T{1} - p;
    }
    return prob;
}

/// Adds theta and gamma columns plus the normalization rows; returns the
/// per-class rate expressions f_r as sparse rows (to be completed by the caller).
template <class T, class Convert>
std::vector<std::vector<std::pair<std::size_t, T>>> add_region(lp::Program<T>& prog, const CapacityModel& model,
                                                               const SwitchConfig& config, Convert&& to_scalar) {
    for (std::size_t i = 0; i < model.column_count(); ++i) {
        prog.add_variable(T{});
    }
    std::vector<std::vector<std::pair<std::size_t, T>>> rate(static_cast<std::size_t>(model.n_classes));
    for (const auto& block : model.blocks) {
        const T prob = block_probability<T>(model, block, config, to_scalar);
        std::vector<std::pair<std::size_t, T>> norm;
        norm.reserve(block.services.size() + 1);
        for (std::size_t j = 0; j < block.services.size(); ++j) {
            const std::size_t col = model.n_theta + block.first_column + j;
            norm.emplace_back(col, T{1});
            const auto& served = block.services[j].served;
            for (std::size_t r = 0; r < served.size(); ++r) {
                if (served[r]) {
                    rate[r].emplace_back(col, prob);
                }
            }
        }
        norm.emplace_back(block.allocation, T{-1});
        prog.add_row(std::move(norm), lp::Relation::eq, T{});
    }
    std::vector<std::pair<std::size_t, T>> simplex_row;
    for (std::size_t m = 0; m < model.n_theta; ++m) {
        simplex_row.emplace_back(m, T{1});
    }
    prog.add_row(std::move(simplex_row), lp::Relation::eq, T{1});
    return rate;
}

/// maximize rho  s.t.  f_r >= rho * direction_r.  rho is the last variable.
template <class T, class Convert>
lp::Program<T> intensity_program(const CapacityModel& model, const SwitchConfig& config,
                                 std::span<const double> direction, Convert&& to_scalar) {
    lp::Program<T> prog;
    auto rate = add_region<T>(prog, model, config, to_scalar);
    const std::size_t rho = prog.add_variable(T{1});
    for (std::size_t r = 0; r < rate.size(); ++r) {
        auto row = std::move(rate[r]);
        if (direction[r] != 0.0) {
            row.emplace_back(rho, -to_scalar(direction[r]));
        }
        prog.add_row(std::move(row), lp::Relation::ge, T{});
    }
    return prog;
}

/// maximize e  s.t.  f_r - e >= rates_r - shift, where eps = e - shift.
template <class T, class Convert>
lp::Program<T> margin_program(const CapacityModel& model, const SwitchConfig& config, std::span<const double> rates,
                              double shift, Convert&& to_scalar) {
    lp::Program<T> prog;
    auto rate = add_region<T>(prog, model, config, to_scalar);
    const std::size_t e = prog.add_variable(T{1});
    for (std::size_t r = 0; r < rate.size(); ++r) {
        auto row = std::move(rate[r]);
        row.emplace_back(e, T{-1});
        prog.add_row(std::move(row), lp::Relation::ge, to_scalar(rates[r]) - to_scalar(shift));
    }
    return prog;
}

}  // namespace qswitch::capacity_lp
