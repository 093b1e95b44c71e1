#include "qswitch/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qswitch/capacity_lp.hpp"
#include "qswitch/errors.hpp"

namespace qswitch {

namespace {

double identity(double v) { return v; }

std::vector<int> one_based(ClientMask set) {
    auto out = members(set);
    for (int& c : out) {
        ++c;
    }
    return out;
}

}  // namespace

CapacityModel build_lp(const SwitchConfig& config, bool full_only, std::size_t column_cap) {
    auto too_big = [&](const std::string& count) {
        return CapacityExceeded("capacity LP needs " + count + " columns, cap is " + std::to_string(column_cap));
    };
    // Every allocation contributes a theta column plus at least one gamma column.
    std::uint64_t allocation_count = 0;
    for (int size = full_only ? config.n_memories() : 0; size <= config.n_memories(); ++size) {
        allocation_count += binomial(config.n_clients(), size);
    }
    if (allocation_count > column_cap / 2) {
        throw too_big("at least " + std::to_string(2 * allocation_count));
    }

    CapacityModel model;
    model.n_classes = config.n_classes();
    model.allocations = enumerate_allocations(config, full_only);
    model.n_theta = model.allocations.size();

    for (std::size_t a = 0; a < model.allocations.size(); ++a) {
        for (const auto& outcome : connectivity_support(model.allocations[a], config)) {
            const std::size_t room = column_cap - model.n_theta - model.n_gamma;
            std::vector<ServiceVector> services;
            try {
                services = admissible_services(outcome.connectivity, config, room);
            } catch (const CapacityExceeded&) {
                throw too_big("more than " + std::to_string(column_cap));
            }
            ServiceBlock block;
            block.allocation = a;
            block.connectivity = outcome.connectivity;
            block.probability = outcome.probability;
            block.first_column = model.n_gamma;
            model.n_gamma += services.size();
            block.services = std::move(services);
            model.blocks.push_back(std::move(block));
        }
    }
    return model;
}

ArrivalDirection::ArrivalDirection(std::vector<double> rates) : rates_(std::move(rates)) {
    double sum = 0.0;
    for (double r : rates_) {
        if (!(r >= 0.0) || !std::isfinite(r)) {
            throw ValidationError("arrival direction entries must be finite and nonnegative");
        }
        sum += r;
    }
    if (sum <= 0.0) {
        throw ValidationError("arrival direction needs at least one positive entry");
    }
    for (double& r : rates_) {
        r /= sum;
    }
}

ArrivalDirection ArrivalDirection::uniform(int n_classes) {
    return ArrivalDirection(std::vector<double>(static_cast<std::size_t>(n_classes), 1.0));
}

namespace {

// Recover delta = gamma / theta; blocks of unused allocations get a uniform
// placeholder. Also fills f from the gamma values.
CapacityCertificate certificate_from(const CapacityModel& model, const std::vector<double>& x) {
    CapacityCertificate cert;
    cert.theta.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(model.n_theta));
    for (double& t : cert.theta) {
        t = std::max(t, 0.0);
    }
    cert.achieved_rate.assign(static_cast<std::size_t>(model.n_classes), 0.0);
    cert.delta.reserve(model.blocks.size());
    for (const auto& block : model.blocks) {
        BlockMix mix;
        const double theta = cert.theta[block.allocation];
        const std::size_t count = block.services.size();
        mix.weights.assign(count, 0.0);
        double total = 0.0;
        for (std::size_t j = 0; j < count; ++j) {
            const double gamma = std::max(x[model.n_theta + block.first_column + j], 0.0);
            mix.weights[j] = gamma;
            total += gamma;
            const auto& served = block.services[j].served;
            for (std::size_t r = 0; r < served.size(); ++r) {
                if (served[r]) {
                    cert.achieved_rate[r] += block.probability * gamma;
                }
            }
        }
        if (theta > kLpTolerance && total > 0.0) {
            for (double& w : mix.weights) {
                w /= total;
            }
        } else {
            std::fill(mix.weights.begin(), mix.weights.end(), 1.0 / static_cast<double>(count));
        }
        cert.delta.push_back(std::move(mix));
    }
    return cert;
}

double uniform_slack(const std::vector<double>& f, std::span<const double> target) {
    double eps = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < f.size(); ++r) {
        eps = std::min(eps, f[r] - target[r]);
    }
    return eps;
}

lp::Solution<double> solve_or_throw(const lp::Program<double>& prog) {
    auto sol = lp::solve(prog, lp::default_tolerance());
    if (sol.status != lp::Status::optimal) {
        // The region always contains theta on one allocation with delta on b = 0,
        // and every objective here is bounded, so this indicates a modeling bug.
        throw std::logic_error(std::string("capacity LP unexpectedly ") + lp::to_string(sol.status));
    }
    return sol;
}

}  // namespace

IntensityResult max_intensity(const SwitchConfig& config, const ArrivalDirection& direction,
                              const CapacityModel& model) {
    if (direction.size() != static_cast<std::size_t>(config.n_classes())) {
        throw ValidationError("direction length does not match the number of request classes");
    }
    const auto prog = capacity_lp::intensity_program<double>(model, config, direction.rates(), identity);
    const auto sol = solve_or_throw(prog);
    IntensityResult out;
    out.rho = sol.x.back();
    out.certificate = certificate_from(model, sol.x);
    out.certificate.intensity = out.rho;
    out.certificate.target.resize(direction.size());
    for (std::size_t r = 0; r < direction.size(); ++r) {
        out.certificate.target[r] = out.rho * direction.rates()[r];
    }
    out.certificate.stability_margin = uniform_slack(out.certificate.achieved_rate, out.certificate.target);
    return out;
}

IntensityResult max_intensity(const SwitchConfig& config, const ArrivalDirection& direction) {
    return max_intensity(config, direction, build_lp(config));
}

MembershipResult membership(const SwitchConfig& config, std::span<const double> rates, const CapacityModel& model) {
    if (rates.size() != static_cast<std::size_t>(config.n_classes())) {
        throw ValidationError("rate vector length does not match the number of request classes");
    }
    double shift = 0.0;
    bool any_positive = false;
    for (double r : rates) {
        if (!(r >= 0.0) || !std::isfinite(r)) {
            throw ValidationError("rates must be finite and nonnegative");
        }
        shift = std::max(shift, r);
        any_positive = any_positive || r > 0.0;
    }

    MembershipResult out;
    if (any_positive) {
        const double norm = std::accumulate(rates.begin(), rates.end(), 0.0);
        const auto along = max_intensity(config, ArrivalDirection({rates.begin(), rates.end()}), model);
        out.rho = along.rho / norm;
        out.inside = out.rho >= 1.0 - kLpTolerance;
    } else {
        out.inside = true;
    }

    const auto prog = capacity_lp::margin_program<double>(model, config, rates, shift, identity);
    const auto sol = solve_or_throw(prog);
    out.margin = sol.x.back() - shift;
    out.certificate = certificate_from(model, sol.x);
    out.certificate.target.assign(rates.begin(), rates.end());
    out.certificate.stability_margin = uniform_slack(out.certificate.achieved_rate, rates);
    out.certificate.intensity = out.rho;
    return out;
}

MembershipResult membership(const SwitchConfig& config, std::span<const double> rates) {
    return membership(config, rates, build_lp(config));
}

std::vector<double> reconstruct_rate(const CapacityModel& model, const CapacityCertificate& cert) {
    std::vector<double> f(static_cast<std::size_t>(model.n_classes), 0.0);
    for (std::size_t i = 0; i < model.blocks.size(); ++i) {
        const auto& block = model.blocks[i];
        const double scale = cert.theta.at(block.allocation) * block.probability;
        const auto& weights = cert.delta.at(i).weights;
        for (std::size_t j = 0; j < block.services.size(); ++j) {
            const auto& served = block.services[j].served;
            for (std::size_t r = 0; r < served.size(); ++r) {
                if (served[r]) {
                    f[r] += scale * weights[j];
                }
            }
        }
    }
    return f;
}

double reconstruction_residual(const CapacityModel& model, const CapacityCertificate& cert) {
    const auto f = reconstruct_rate(model, cert);
    double worst = 0.0;
    for (std::size_t r = 0; r < f.size(); ++r) {
        worst = std::max(worst, std::abs(f[r] - cert.achieved_rate.at(r)));
    }
    return worst;
}

nlohmann::json certificate_to_json(const CapacityCertificate& cert, const CapacityModel& model,
                                   const SwitchConfig& config) {
    using nlohmann::json;
    json theta = json::array();
    for (std::size_t a = 0; a < model.allocations.size(); ++a) {
        if (cert.theta[a] > kLpTolerance) {
            theta.push_back({{"allocation", one_based(model.allocations[a].assigned)}, {"weight", cert.theta[a]}});
        }
    }
    json delta = json::array();
    for (std::size_t i = 0; i < model.blocks.size(); ++i) {
        const auto& block = model.blocks[i];
        if (cert.theta[block.allocation] <= kLpTolerance) {
            continue;
        }
        for (std::size_t j = 0; j < block.services.size(); ++j) {
            const double w = cert.delta[i].weights[j];
            if (w <= kLpTolerance) {
                continue;
            }
            std::vector<int> served;
            for (std::size_t r = 0; r < block.services[j].served.size(); ++r) {
                if (block.services[j].served[r]) {
                    served.push_back(static_cast<int>(r) + 1);
                }
            }
            delta.push_back({{"allocation", one_based(model.allocations[block.allocation].assigned)},
                             {"connectivity", one_based(block.connectivity.active)},
                             {"service", served},
                             {"weight", w}});
        }
    }
    return json{{"rho", cert.intensity},
                {"epsilon", cert.stability_margin},
                {"achieved_rate", cert.achieved_rate},
                {"target_rate", cert.target},
                {"theta", theta},
                {"delta", delta},
                {"classes", config.describe_classes()},
                {"columns", model.column_count()}};
}

}  // namespace qswitch
