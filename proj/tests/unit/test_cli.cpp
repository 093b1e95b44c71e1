#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

class Workspace {
public:
    explicit Workspace(const std::string& name) : root_(fs::temp_directory_path() / ("qswitch_cli_" + name)) {
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    ~Workspace() { fs::remove_all(root_); }

    fs::path path(const std::string& rel) const { return root_ / rel; }

    fs::path write(const std::string& rel, const std::string& text) const {
        const fs::path p = path(rel);
        fs::create_directories(p.parent_path());
        std::ofstream(p, std::ios::binary) << text;
        return p;
    }

    Run run(const std::string& args) const {
        const fs::path out = path("stdout.txt");
        const fs::path err = path("stderr.txt");
        const std::string cmd = std::string(QSWITCH_BINARY) + " " + args + " >" + out.string() + " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        Run r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

private:
    fs::path root_;
};

const char* kToy = R"({"name": "toy", "n_clients": 2, "n_memories": 2, "lle_success": 1.0,
  "request_classes": [[1, 2]], "intensity": 0.5, "horizon": 300, "replications": 2})";

const char* kSim1 = R"({"name": "sim1", "n_clients": 6, "n_memories": 3, "lle_success": 0.9,
  "class_family": {"sizes": [3], "count": 8}, "intensity": 0.7, "horizon": 400, "replications": 2})";

bool no_temp_files(const fs::path& dir) {
    if (!fs::exists(dir)) {
        return true;
    }
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.path().extension() == ".tmp") {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("capacity on the two-client switch") {
    Workspace ws("capacity");
    const auto scenario = ws.write("toy.json", kToy);
    const Run r = ws.run("capacity --scenario " + scenario.string() + " --out " + ws.path("out").string());
    CHECK(r.code == 0);
    const std::string summary = slurp(ws.path("out/capacity_summary.txt"));
    CHECK(summary.find("rho* = 1.000000") != std::string::npos);
    const auto cert = nlohmann::json::parse(slurp(ws.path("out/certificate.json")));
    CHECK(cert.at("rho_star").get<double>() == doctest::Approx(1.0));
    CHECK(cert.at("epsilon").get<double>() == doctest::Approx(0.5));
    CHECK(cert.at("reconstruction_residual").get<double>() <= 1e-9);
    CHECK(no_temp_files(ws.path("out")));
}

TEST_CASE("malformed scenario exits 1 with a position") {
    Workspace ws("malformed");
    const auto scenario = ws.write("bad.json", R"({"name": "x", "n_clients": 3,, })");
    const Run r = ws.run("capacity --scenario " + scenario.string() + " --out " + ws.path("out").string());
    CHECK(r.code == 1);
    CHECK(r.err.find("line 1, column") != std::string::npos);
    CHECK_FALSE(fs::exists(ws.path("out/certificate.json")));

    const Run missing = ws.run("simulate --scenario " + ws.path("nope.json").string() + " --out " +
                               ws.path("out").string());
    CHECK(missing.code == 1);
    const Run usage = ws.run("simulate --out " + ws.path("out").string());
    CHECK(usage.code == 1);
}

TEST_CASE("MEW2 with odd M exits 3") {
    Workspace ws("mew2");
    const auto scenario = ws.write("odd.json", R"({"name": "odd", "n_clients": 5, "n_memories": 3,
      "lle_success": 1.0, "class_family": {"sizes": [2]}, "intensity": 0.5, "policy": {"kind": "MEW2"}})");
    const Run r = ws.run("simulate --scenario " + scenario.string() + " --out " + ws.path("out").string());
    CHECK(r.code == 3);
    CHECK(r.err.find("M to be even") != std::string::npos);
    CHECK_FALSE(fs::exists(ws.path("out/trace.csv")));
}

TEST_CASE("LP column cap exits 2") {
    Workspace ws("cap");
    const auto scenario = ws.write("big.json", R"({"name": "big", "n_clients": 22, "n_memories": 11,
      "lle_success": 1.0, "class_family": {"sizes": [2]}, "intensity": 0.5})");
    const Run r = ws.run("capacity --scenario " + scenario.string() + " --out " + ws.path("out").string());
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(ws.path("out")));
}

TEST_CASE("simulate is byte-identical for a fixed seed") {
    Workspace ws("determinism");
    const auto scenario = ws.write("toy.json", kSim1);
    const Run a = ws.run("simulate --scenario " + scenario.string() + " --out " + ws.path("a").string() +
                         " --seed 7 --threads 1");
    const Run b = ws.run("simulate --scenario " + scenario.string() + " --out " + ws.path("b").string() +
                         " --seed 7 --threads 3");
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    for (const char* f : {"trace.csv", "trace.json", "trace.svg"}) {
        CHECK(slurp(ws.path("a") / f) == slurp(ws.path("b") / f));
    }
    const std::string csv = slurp(ws.path("a/trace.csv"));
    CHECK(csv.rfind("slot,mean_total_backlog,stderr\n", 0) == 0);
    const auto meta = nlohmann::json::parse(slurp(ws.path("a/trace.json")));
    CHECK(meta.at("seeds") == nlohmann::json::array({7, 8}));
    CHECK(meta.at("config_hash").get<std::string>().size() == 16);
    CHECK(meta.at("scenario").at("horizon") == 400);

    const Run c = ws.run("simulate --scenario " + scenario.string() + " --out " + ws.path("c").string() +
                         " --seed 8 --horizon 200");
    REQUIRE(c.code == 0);
    CHECK(slurp(ws.path("c/trace.csv")) != csv);
    CHECK(nlohmann::json::parse(slurp(ws.path("c/trace.json"))).at("scenario").at("horizon") == 200);
}

TEST_CASE("zero-rate scenario gives a flat chart at zero") {
    Workspace ws("zero");
    const auto scenario = ws.write("zero.json", R"({"name": "zero", "n_clients": 3, "n_memories": 2,
      "lle_success": 0.9, "request_classes": [[1, 2], [2, 3]], "intensity": 0, "horizon": 50, "replications": 2})");
    const Run r = ws.run("simulate --scenario " + scenario.string() + " --out " + ws.path("out").string());
    REQUIRE(r.code == 0);
    std::istringstream csv(slurp(ws.path("out/trace.csv")));
    std::string line;
    std::getline(csv, line);
    int rows = 0;
    while (std::getline(csv, line)) {
        CHECK(line.substr(line.find(',')) == ",0.000000,0.000000");
        ++rows;
    }
    CHECK(rows == 50);
    const std::string svg = slurp(ws.path("out/trace.svg"));
    CHECK(svg.rfind("<svg", 0) == 0);
    const auto start = svg.find("points=\"");
    REQUIRE(start != std::string::npos);
    const auto end = svg.find('"', start + 8);
    std::istringstream pts(svg.substr(start + 8, end - start - 8));
    std::string pt;
    std::string y0;
    while (pts >> pt) {
        const std::string y = pt.substr(pt.find(',') + 1);
        if (y0.empty()) {
            y0 = y;
        }
        CHECK(y == y0);
    }
}

TEST_CASE("certificate round trip into simulate") {
    Workspace ws("roundtrip");
    const auto scenario = ws.write("sim1.json", kSim1);
    REQUIRE(ws.run("capacity --scenario " + scenario.string() + " --out " + ws.path("cap").string()).code == 0);
    const auto cert = nlohmann::json::parse(slurp(ws.path("cap/certificate.json")));
    const double rho = cert.at("rho_star").get<double>();
    CHECK(rho == doctest::Approx(0.729).epsilon(1e-9));

    for (const char* pct : {"0.7", "0.99", "1.2"}) {
        auto doc = nlohmann::json::parse(kSim1);
        doc["intensity"] = std::stod(pct);
        doc["certificate"] = "cap/certificate.json";
        const auto s = ws.write(std::string("run_") + pct + ".json", doc.dump());
        const auto out = ws.path(std::string("out_") + pct);
        REQUIRE(ws.run("simulate --scenario " + s.string() + " --out " + out.string()).code == 0);
        const auto meta = nlohmann::json::parse(slurp(out / "trace.json"));
        CHECK(meta.at("rho_star").get<double>() == rho);
    }

    auto other = nlohmann::json::parse(kSim1);
    other["lle_success"] = 0.8;
    other["certificate"] = "cap/certificate.json";
    const auto s = ws.write("mismatch.json", other.dump());
    CHECK(ws.run("simulate --scenario " + s.string() + " --out " + ws.path("x").string()).code == 1);
}

TEST_CASE("reproduce writes per-curve and combined artifacts") {
    Workspace ws("reproduce");
    const Run r = ws.run("reproduce sim3 --out " + ws.path("out").string() + " --horizon 300 --replications 2");
    REQUIRE(r.code == 0);
    for (const char* stem : {"sim3-mew-99", "sim3-mew2-99", "sim3-approx1-99"}) {
        for (const char* ext : {".csv", ".svg", ".json"}) {
            CHECK(fs::exists(ws.path("out") / (std::string(stem) + ext)));
        }
    }
    CHECK(fs::exists(ws.path("out/sim3-99-combined.svg")));
    const auto summary = nlohmann::json::parse(slurp(ws.path("out/sim3-summary.json")));
    CHECK(summary.at("curves").size() == 3);

    const Run two = ws.run("reproduce sim2 --out " + ws.path("two").string() + " --horizon 200 --replications 1");
    REQUIRE(two.code == 0);
    CHECK(fs::exists(ws.path("two/sim2-70-combined.svg")));
    CHECK(fs::exists(ws.path("two/sim2-99-combined.svg")));
    CHECK(ws.run("reproduce sim9 --out " + ws.path("x").string()).code == 1);
}

TEST_CASE("oracle check") {
    Workspace ws("oracle");
    const Run ok = ws.run("oracle-check --max-n 6");
    CHECK(ok.code == 0);
    const Run fault = ws.run("oracle-check --max-n 6 --inject-fault capped-off-by-one");
    CHECK(fault.code == 4);
    CHECK(fault.out.find("graph n=") != std::string::npos);
    const Run vacuous = ws.run("oracle-check --max-n 0");
    CHECK(vacuous.code == 0);
    CHECK(vacuous.err.find("warning") != std::string::npos);
}
