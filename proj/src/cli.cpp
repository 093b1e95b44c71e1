#include "qswitch/cli.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>

#include "qswitch/capacity.hpp"
#include "qswitch/errors.hpp"
#include "qswitch/io.hpp"
#include "qswitch/sim.hpp"

namespace qswitch::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const CapacityExceeded& e) {
        err << "error: resource cap exceeded: " << e.what() << '\n';
        return kResourceCap;
    } catch (const PreconditionError& e) {
        err << "error: policy precondition violated: " << e.what() << '\n';
        return kPrecondition;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
}

namespace {

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

std::string percent_label(double intensity) {
    return std::to_string(static_cast<int>(std::lround(intensity * 100))) + "%";
}

void write_run(const fs::path& out_dir, const std::string& stem, const Scenario& sc, const ExperimentResult& res) {
    write_file_atomic(out_dir / (stem + ".csv"), trace_csv(res.stats));
    write_file_atomic(out_dir / (stem + ".json"), dump(experiment_metadata(sc, res)));
    const std::string title = sc.policy.label() + " at " + percent_label(sc.intensity) + " of capacity";
    write_file_atomic(out_dir / (stem + ".svg"), line_chart_svg(title, {{sc.policy.label(), res.stats.mean}}));
}

json run_summary(const Scenario& sc, const ExperimentResult& res) {
    const auto& st = res.stats;
    return json{{"name", sc.name},
                {"policy", sc.policy.label()},
                {"intensity", sc.intensity},
                {"rho_star", res.resolved.rho_star},
                {"epsilon", res.resolved.margin},
                {"time_average", st.time_average},
                {"middle_quarter_mean", st.middle_quarter_mean},
                {"final_quarter_mean", st.final_quarter_mean},
                {"final_quarter_se", st.final_quarter_se()},
                {"trend_slope", st.trend_slope},
                {"trend_r2", st.trend_r2},
                {"passes_stability_proxy", st.passes_stability_proxy()}};
}

void print_run(std::ostream& out, const Scenario& sc, const ExperimentResult& res) {
    const auto& st = res.stats;
    out << sc.name << ": " << sc.policy.label() << " at " << percent_label(sc.intensity)
        << "  time-avg " << format_fixed(st.time_average, 3) << "  middle " << format_fixed(st.middle_quarter_mean, 3)
        << "  final " << format_fixed(st.final_quarter_mean, 3) << "  slope " << format_fixed(st.trend_slope, 6)
        << " (R2 " << format_fixed(st.trend_r2, 3) << ")  " << (st.passes_stability_proxy() ? "bounded" : "growing")
        << '\n';
}

}  // namespace

int cmd_capacity(const fs::path& scenario_path, const fs::path& out_dir, Streams io) {
    const Scenario sc = load_scenario(scenario_path);
    const CapacityModel model = build_lp(sc.config);
    const IntensityResult top = max_intensity(sc.config, sc.direction, model);

    std::vector<double> rates(sc.direction.size());
    for (std::size_t r = 0; r < rates.size(); ++r) {
        rates[r] = sc.intensity * top.rho * sc.direction.rates()[r];
    }
    const MembershipResult member = membership(sc.config, rates, model);
    const double residual =
        std::max(reconstruction_residual(model, top.certificate), reconstruction_residual(model, member.certificate));

    json doc{{"tool_version", kToolVersion},
             {"config_hash", config_hash(sc.config)},
             {"config", config_to_json(sc.config)},
             {"direction", std::vector<double>(sc.direction.rates().begin(), sc.direction.rates().end())},
             {"rho_star", top.rho},
             {"intensity", sc.intensity},
             {"rates", rates},
             {"epsilon", member.margin},
             {"inside", member.inside},
             {"lp_columns", model.column_count()},
             {"reconstruction_residual", residual},
             {"max_intensity_certificate", certificate_to_json(top.certificate, model, sc.config)},
             {"margin_certificate", certificate_to_json(member.certificate, model, sc.config)}};
    write_file_atomic(out_dir / "certificate.json", dump(doc));

    std::string summary;
    summary += "scenario: " + sc.name + "\n";
    summary += "clients: " + std::to_string(sc.config.n_clients()) + ", memories: " +
               std::to_string(sc.config.n_memories()) + ", classes: " + std::to_string(sc.config.n_classes()) + "\n";
    summary += "classes: " + sc.config.describe_classes() + "\n";
    summary += "LP columns: " + std::to_string(model.column_count()) + "\n";
    summary += "rho* = " + format_fixed(top.rho) + "\n";
    summary += "intensity = " + format_fixed(sc.intensity) + " of rho*\n";
    summary += "epsilon = " + format_fixed(member.margin) + (member.inside ? " (inside region)" : " (outside region)") +
               "\n";
    summary += "certificate residual = " + std::to_string(residual) + "\n";
    write_file_atomic(out_dir / "capacity_summary.txt", summary);
    io.out << summary;
    return kOk;
}

int cmd_simulate(const fs::path& scenario_path, const fs::path& out_dir, const SimulateOptions& opts, Streams io) {
    Scenario sc = load_scenario(scenario_path);
    if (opts.seed) {
        sc.base_seed = *opts.seed;
    }
    if (opts.horizon) {
        sc.horizon = *opts.horizon;
    }
    sc.validate();
    const ExperimentResult res = run_experiment(sc, opts.threads);
    write_run(out_dir, "trace", sc, res);
    print_run(io.out, sc, res);
    return kOk;
}

int cmd_reproduce(const std::string& name, const fs::path& out_dir, const ReproduceOptions& opts, Streams io) {
    std::vector<Scenario> scenarios = preset(name);
    std::map<std::string, double> rho_by_config;
    for (auto& sc : scenarios) {
        if (opts.horizon) {
            sc.horizon = *opts.horizon;
        }
        if (opts.replications) {
            sc.replications = *opts.replications;
        }
        if (opts.seed) {
            sc.base_seed = *opts.seed;
        }
        const std::string key = config_hash(sc.config);
        auto it = rho_by_config.find(key);
        if (it == rho_by_config.end()) {
            it = rho_by_config.emplace(key, max_intensity(sc.config, sc.direction).rho).first;
            io.out << name << ": rho* = " << format_fixed(it->second) << '\n';
        }
        sc.rho_override = it->second;
        sc.validate();
    }

    bool one_policy = true;
    for (const auto& sc : scenarios) {
        one_policy = one_policy && sc.policy.label() == scenarios.front().policy.label();
    }

    json curves = json::array();
    std::map<std::string, std::vector<ChartSeries>> figures;  // figure stem -> series
    for (const auto& sc : scenarios) {
        const ExperimentResult res = run_experiment(sc, opts.threads);
        write_run(out_dir, sc.name, sc, res);
        print_run(io.out, sc, res);
        curves.push_back(run_summary(sc, res));
        const std::string pct = std::to_string(static_cast<int>(std::lround(sc.intensity * 100)));
        const std::string figure = one_policy ? name : name + "-" + pct;
        const std::string label = one_policy ? percent_label(sc.intensity) : sc.policy.label();
        figures[figure].push_back({label, res.stats.mean});
    }
    for (const auto& [stem, series] : figures) {
        std::string title = name + ": mean total backlog";
        if (!one_policy) {
            title += " at " + stem.substr(name.size() + 1) + "% of capacity";
        }
        write_file_atomic(out_dir / (stem + "-combined.svg"), line_chart_svg(title, series));
    }
    json summary{{"tool_version", kToolVersion}, {"preset", name}, {"curves", curves}};
    write_file_atomic(out_dir / (name + "-summary.json"), dump(summary));
    return kOk;
}

int cmd_oracle_check(const OracleOptions& opts, Streams io) {
    if (opts.max_n < 0 || opts.max_n > kMaxBruteForceVertices) {
        throw ValidationError("--max-n must be in [0, " + std::to_string(kMaxBruteForceVertices) + "]");
    }
    if (opts.max_n < 2) {
        io.err << "warning: --max-n " << opts.max_n << " leaves no instance to check; passing vacuously\n";
        return kOk;
    }
    MatchingSweep ms;
    ms.max_vertices = opts.max_n;
    ms.fault = opts.fault;
    HypergraphSweep hs;
    hs.max_clients = opts.max_n;
    EquivalenceSweep es;
    es.max_clients = opts.max_n;

    bool ok = true;
    for (const auto& rep : {check_matchings(ms), check_hypergraph_services(hs), check_mew_matching_equivalence(es)}) {
        io.out << (rep.passed ? "ok    " : "FAIL  ") << rep.name << " (" << rep.checks << " checks)\n";
        if (!rep.passed) {
            io.out << "counterexample: " << rep.counterexample << '\n';
            ok = false;
        }
    }
    return ok ? kOk : kOracleMismatch;
}

}  // namespace qswitch::cli
