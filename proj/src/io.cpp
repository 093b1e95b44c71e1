#include "qswitch/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qswitch/errors.hpp"

namespace qswitch {

using nlohmann::json;

namespace {

template <class T>
T required(const json& doc, const char* key) {
    if (!doc.contains(key)) {
        throw ValidationError(std::string("scenario is missing required field '") + key + "'");
    }
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scenario field '") + key + "': " + e.what());
    }
}

template <class T>
T optional_field(const json& doc, const char* key, T fallback) {
    if (!doc.contains(key) || doc.at(key).is_null()) {
        return fallback;
    }
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scenario field '") + key + "': " + e.what());
    }
}

std::vector<std::vector<int>> classes_from(const json& doc, int n_clients) {
    const bool explicit_list = doc.contains("request_classes");
    const bool family = doc.contains("class_family");
    if (explicit_list == family) {
        throw ValidationError("scenario needs exactly one of 'request_classes' or 'class_family'");
    }
    std::vector<std::vector<int>> out;
    if (explicit_list) {
        const auto raw = required<std::vector<std::vector<int>>>(doc, "request_classes");
        for (auto cls : raw) {
            for (int& c : cls) {
                c -= 1;  // 1-based on disk
            }
            out.push_back(std::move(cls));
        }
        return out;
    }
    const json& fam = doc.at("class_family");
    const auto sizes = required<std::vector<int>>(fam, "sizes");
    for (int s : sizes) {
        if (s < 2 || s > n_clients) {
            throw ValidationError("class_family size " + std::to_string(s) + " is outside [2, n_clients]");
        }
        auto subsets = all_subsets(n_clients, s);
        out.insert(out.end(), subsets.begin(), subsets.end());
    }
    if (fam.contains("count")) {
        const auto count = required<int>(fam, "count");
        if (count < 1 || static_cast<std::size_t>(count) > out.size()) {
            throw ValidationError("class_family count must be in [1, " + std::to_string(out.size()) + "]");
        }
        out.resize(static_cast<std::size_t>(count));
    }
    return out;
}

}  // namespace

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) {
        throw ValidationError("scenario must be a JSON object");
    }
    const int n = required<int>(doc, "n_clients");
    const int m = required<int>(doc, "n_memories");
    std::vector<double> p;
    if (!doc.contains("lle_success")) {
        throw ValidationError("scenario is missing required field 'lle_success'");
    }
    if (doc.at("lle_success").is_number()) {
        p.assign(static_cast<std::size_t>(std::max(n, 0)), doc.at("lle_success").get<double>());
    } else {
        p = required<std::vector<double>>(doc, "lle_success");
    }
    SwitchConfig config(n, m, std::move(p), classes_from(doc, n));

    std::vector<double> direction = optional_field<std::vector<double>>(
        doc, "direction", std::vector<double>(static_cast<std::size_t>(config.n_classes()), 1.0));

    PolicySpec policy;
    if (doc.contains("policy")) {
        const json& pol = doc.at("policy");
        policy.kind = parse_policy_kind(required<std::string>(pol, "kind"));
        if (pol.contains("approx_budget")) {
            policy.approx_budget = required<int>(pol, "approx_budget");
        }
        policy.rng_seed = optional_field<std::uint64_t>(pol, "rng_seed", 0);
        policy.carry_over = optional_field<bool>(pol, "carry_over", false);
    }

    Scenario sc{optional_field<std::string>(doc, "name", "scenario"), std::move(config),
                ArrivalDirection(std::move(direction)), required<double>(doc, "intensity"), policy};
    sc.horizon = optional_field<std::int64_t>(doc, "horizon", kDefaultHorizon);
    sc.replications = optional_field<int>(doc, "replications", kDefaultReplications);
    sc.base_seed = optional_field<std::uint64_t>(doc, "base_seed", kDefaultBaseSeed);

    if (doc.contains("certificate")) {
        auto path = std::filesystem::path(required<std::string>(doc, "certificate"));
        if (path.is_relative()) {
            path = base_dir / path;
        }
        std::ifstream in(path);
        if (!in) {
            throw ValidationError("cannot open certificate file " + path.string());
        }
        json cert;
        try {
            cert = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ValidationError("certificate " + path.string() + ": " + e.what());
        }
        const auto hash = required<std::string>(cert, "config_hash");
        if (hash != config_hash(sc.config)) {
            throw ValidationError("certificate " + path.string() + " was computed for a different switch config");
        }
        sc.rho_override = required<double>(cert, "rho_star");
    }
    sc.validate();
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open scenario file " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        // e.what() carries the byte offset of the failure.
        throw ValidationError(path.string() + ": " + e.what());
    }
    return parse_scenario(doc, path.parent_path());
}

json config_to_json(const SwitchConfig& config) {
    json classes = json::array();
    for (const auto& cls : config.classes()) {
        std::vector<int> one_based = cls.clients;
        for (int& c : one_based) {
            ++c;
        }
        classes.push_back(one_based);
    }
    return json{{"n_clients", config.n_clients()},
                {"n_memories", config.n_memories()},
                {"lle_success", std::vector<double>(config.lle_success().begin(), config.lle_success().end())},
                {"request_classes", classes}};
}

json scenario_to_json(const Scenario& sc) {
    json policy{{"kind", to_string(sc.policy.kind)}, {"rng_seed", sc.policy.rng_seed}};
    if (sc.policy.approx_budget) {
        policy["approx_budget"] = *sc.policy.approx_budget;
        policy["carry_over"] = sc.policy.carry_over;
    }
    json doc = config_to_json(sc.config);
    doc["name"] = sc.name;
    doc["direction"] = std::vector<double>(sc.direction.rates().begin(), sc.direction.rates().end());
    doc["intensity"] = sc.intensity;
    doc["policy"] = policy;
    doc["horizon"] = sc.horizon;
    doc["replications"] = sc.replications;
    doc["base_seed"] = sc.base_seed;
    return doc;
}

std::string config_hash(const SwitchConfig& config) {
    const std::string text = config_to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::filesystem::filesystem_error("cannot open for writing", tmp,
                                                    std::make_error_code(std::errc::io_error));
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw std::filesystem::filesystem_error("write failed", tmp, std::make_error_code(std::errc::io_error));
        }
    }
    fs::rename(tmp, path);
}

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    // Avoid "-0.000000".
    std::string s(buf);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') {
        s.erase(0, 1);
    }
    return s;
}

std::string trace_csv(const TrajectoryStats& stats) {
    std::string out = "slot,mean_total_backlog,stderr\n";
    out.reserve(stats.mean.size() * 28 + out.size());
    for (std::size_t t = 0; t < stats.mean.size(); ++t) {
        out += std::to_string(t + 1);
        out += ',';
        out += format_fixed(stats.mean[t]);
        out += ',';
        out += format_fixed(stats.std_error[t]);
        out += '\n';
    }
    return out;
}

json experiment_metadata(const Scenario& scenario, const ExperimentResult& result) {
    const auto& st = result.stats;
    return json{{"tool_version", kToolVersion},
                {"scenario", scenario_to_json(scenario)},
                {"config_hash", config_hash(scenario.config)},
                {"class_sets", scenario.config.describe_classes()},
                {"direction_note", "direction normalized to sum 1"},
                {"rho_star", result.resolved.rho_star},
                {"rates", result.resolved.rates},
                {"epsilon", result.resolved.margin},
                {"inside_capacity_region", result.resolved.inside},
                {"seeds", result.seeds},
                {"seed_scheme", "replication i uses seed base_seed+i; per-slot generators keyed by "
                                "(seed, purpose, slot) with purposes arrivals=1, lle=2, policy=3"},
                {"diagnostics",
                 {{"time_average", st.time_average},
                  {"final_quarter_mean", st.final_quarter_mean},
                  {"middle_quarter_mean", st.middle_quarter_mean},
                  {"final_quarter_se", st.final_quarter_se()},
                  {"trend_slope", st.trend_slope},
                  {"trend_r2", st.trend_r2},
                  {"passes_stability_proxy", st.passes_stability_proxy()}}}};
}

// ---------------------------------------------------------------------------
// SVG

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&':
                out += "&amp;";
                break;
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '"':
                out += "&quot;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

// 1, 2 or 5 times a power of ten, giving roughly `target` intervals.
double nice_step(double span, int target) {
    if (span <= 0.0) {
        return 1.0;
    }
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double f : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= f * mag) {
            return f * mag;
        }
    }
    return 10.0 * mag;
}

std::string tick_label(double v) {
    char buf[32];
    if (std::abs(v - std::round(v)) < 1e-9) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
    } else {
        std::snprintf(buf, sizeof buf, "%g", v);
    }
    return buf;
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::vector<ChartSeries>& series) {
    constexpr double width = 800;
    constexpr double height = 480;
    constexpr double left = 70;
    constexpr double right = 20;
    constexpr double top = 40;
    constexpr double bottom = 50;
    constexpr std::size_t max_points = 1000;
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    std::size_t slots = 1;
    double ymax = 0.0;
    for (const auto& s : series) {
        slots = std::max(slots, s.values.size());
        for (double v : s.values) {
            ymax = std::max(ymax, v);
        }
    }
    const double ystep = nice_step(ymax > 0.0 ? ymax : 1.0, 5);
    const double ytop = std::max(ystep, std::ceil(ymax / ystep) * ystep);
    const double xstep = nice_step(static_cast<double>(slots), 5);
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    auto px = [&](double slot) { return left + plot_w * (slot / static_cast<double>(slots)); };
    auto py = [&](double y) { return top + plot_h * (1.0 - y / ytop); };
    auto num = [](double v) { return format_fixed(v, 2); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
       << "</text>\n";
    // Grid and y ticks.
    for (double y = 0.0; y <= ytop + 1e-9; y += ystep) {
        os << "<line x1=\"" << num(left) << "\" y1=\"" << num(py(y)) << "\" x2=\"" << num(width - right)
           << "\" y2=\"" << num(py(y)) << "\" stroke=\"#e0e0e0\"/>\n";
        os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">"
           << tick_label(y) << "</text>\n";
    }
    for (double x = 0.0; x <= static_cast<double>(slots) + 1e-9; x += xstep) {
        os << "<text x=\"" << num(px(x)) << "\" y=\"" << num(height - bottom + 18)
           << "\" text-anchor=\"middle\">" << tick_label(x) << "</text>\n";
    }
    os << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
       << num(height - bottom) << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << num(left) << "\" y1=\"" << num(height - bottom) << "\" x2=\"" << num(width - right)
       << "\" y2=\"" << num(height - bottom) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(left + plot_w / 2) << "\" y=\"" << num(height - 12)
       << "\" text-anchor=\"middle\">time slot</text>\n";
    os << "<text x=\"16\" y=\"" << num(top + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << num(top + plot_h / 2) << ")\">mean total backlog</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* color = palette[i % (sizeof palette / sizeof palette[0])];
        const std::size_t stride = std::max<std::size_t>(1, (s.values.size() + max_points - 1) / max_points);
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t t = 0; t < s.values.size(); t += stride) {
            os << num(px(static_cast<double>(t + 1))) << ',' << num(py(s.values[t])) << ' ';
        }
        if (!s.values.empty() && (s.values.size() - 1) % stride != 0) {
            os << num(px(static_cast<double>(s.values.size()))) << ',' << num(py(s.values.back()));
        }
        os << "\"/>\n";
        const double ly = top + 14 + 16 * static_cast<double>(i);
        os << "<line x1=\"" << num(left + 12) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(left + 36)
           << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << num(left + 42) << "\" y=\"" << num(ly) << "\">" << xml_escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace qswitch
