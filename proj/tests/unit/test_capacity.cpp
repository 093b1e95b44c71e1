#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"

#include "qswitch/capacity.hpp"
#include "qswitch/capacity_exact.hpp"
#include "qswitch/errors.hpp"
#include "qswitch/matching.hpp"
#include "qswitch/rng.hpp"
#include "qswitch/sim.hpp"
#include "qswitch/simplex.hpp"

using namespace qswitch;

namespace {

using Dense = std::vector<std::vector<double>>;

// Solves a square system by Gaussian elimination with partial pivoting.
std::optional<std::vector<double>> solve_square(Dense a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[p][c])) {
                p = r;
            }
        }
        if (std::abs(a[p][c]) < 1e-12) {
            return std::nullopt;
        }
        std::swap(a[p], a[c]);
        std::swap(b[p], b[c]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) {
                continue;
            }
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        b[i] /= a[i][i];
    }
    return b;
}

// max c'x s.t. A x <= b, x >= 0, by enumerating every basic point.
double vertex_enumeration(const Dense& a, const std::vector<double>& b, const std::vector<double>& c) {
    const std::size_t n = c.size();
    const std::size_t m = b.size();
    Dense rows = a;
    std::vector<double> rhs = b;
    for (std::size_t j = 0; j < n; ++j) {  // x_j >= 0 as -x_j <= 0
        std::vector<double> row(n, 0.0);
        row[j] = -1.0;
        rows.push_back(row);
        rhs.push_back(0.0);
    }
    double best = -std::numeric_limits<double>::infinity();
    const std::size_t total = m + n;
    std::vector<bool> pick(total, false);
    std::fill(pick.begin(), pick.begin() + static_cast<long>(n), true);
    do {
        Dense sub;
        std::vector<double> sub_rhs;
        for (std::size_t i = 0; i < total; ++i) {
            if (pick[i]) {
                sub.push_back(rows[i]);
                sub_rhs.push_back(rhs[i]);
            }
        }
        const auto x = solve_square(sub, sub_rhs);
        if (!x) {
            continue;
        }
        bool feasible = true;
        for (std::size_t i = 0; i < total && feasible; ++i) {
            double lhs = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                lhs += rows[i][j] * (*x)[j];
            }
            feasible = lhs <= rhs[i] + 1e-9;
        }
        if (feasible) {
            double value = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                value += c[j] * (*x)[j];
            }
            best = std::max(best, value);
        }
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return best;
}

// Capacity along `direction` using only matchings of at most M/2 registered
// pairs as service patterns (valid when p = 1 and every class is a pair).
double matching_polytope_rho(const SwitchConfig& config, std::span<const double> direction) {
    const int cap = config.n_memories() / 2;
    const int r_count = config.n_classes();
    std::vector<std::vector<int>> patterns;
    std::vector<int> current;
    auto extend = [&](auto&& self, int start, ClientMask used) -> void {
        patterns.push_back(current);
        if (static_cast<int>(current.size()) == cap) {
            return;
        }
        for (int r = start; r < r_count; ++r) {
            const ClientMask m = config.request_class(r).mask;
            if ((m & used) == 0) {
                current.push_back(r);
                self(self, r + 1, used | m);
                current.pop_back();
            }
        }
    };
    extend(extend, 0, 0);

    lp::Program<double> prog;
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        prog.add_variable(0.0);
    }
    const std::size_t rho = prog.add_variable(1.0);
    std::vector<std::pair<std::size_t, double>> total;
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        total.emplace_back(i, 1.0);
    }
    prog.add_row(total, lp::Relation::eq, 1.0);
    for (int r = 0; r < r_count; ++r) {
        std::vector<std::pair<std::size_t, double>> row;
        for (std::size_t i = 0; i < patterns.size(); ++i) {
            if (std::find(patterns[i].begin(), patterns[i].end(), r) != patterns[i].end()) {
                row.emplace_back(i, 1.0);
            }
        }
        row.emplace_back(rho, -direction[static_cast<std::size_t>(r)]);
        prog.add_row(row, lp::Relation::ge, 0.0);
    }
    const auto sol = lp::solve(prog, lp::default_tolerance(), 1'000'000);
    REQUIRE(sol.status == lp::Status::optimal);
    return sol.objective;
}

SwitchConfig toy(double p) { return SwitchConfig::uniform(2, 2, p, {{0, 1}}); }

}  // namespace

TEST_CASE("simplex: one variable") {
    lp::Program<double> prog;
    const auto x = prog.add_variable(1.0);
    prog.add_row({{x, 1.0}}, lp::Relation::le, 3.0);
    const auto sol = lp::solve(prog, lp::default_tolerance(), 1000);
    REQUIRE(sol.status == lp::Status::optimal);
    CHECK(sol.objective == doctest::Approx(3.0));
    CHECK(sol.x[x] == doctest::Approx(3.0));
}

TEST_CASE("simplex: degenerate equality toy") {
    // max x + y  s.t.  x + y = 2,  x - y = 0,  x <= 1 (tight at the optimum).
    lp::Program<double> prog;
    const auto x = prog.add_variable(1.0);
    const auto y = prog.add_variable(1.0);
    prog.add_row({{x, 1.0}, {y, 1.0}}, lp::Relation::eq, 2.0);
    prog.add_row({{x, 1.0}, {y, -1.0}}, lp::Relation::eq, 0.0);
    prog.add_row({{x, 1.0}}, lp::Relation::le, 1.0);
    const auto sol = lp::solve(prog, lp::default_tolerance(), 1000);
    REQUIRE(sol.status == lp::Status::optimal);
    CHECK(sol.objective == doctest::Approx(2.0));
    CHECK(sol.x[x] == doctest::Approx(1.0));
    CHECK(sol.x[y] == doctest::Approx(1.0));

    lp::Program<Rational> exact;
    const auto a = exact.add_variable(Rational(1));
    const auto b = exact.add_variable(Rational(1));
    exact.add_row({{a, Rational(1)}, {b, Rational(1)}}, lp::Relation::eq, Rational(2));
    exact.add_row({{a, Rational(1)}, {b, Rational(-1)}}, lp::Relation::eq, Rational(0));
    exact.add_row({{a, Rational(1)}}, lp::Relation::le, Rational(1));
    const auto es = lp::solve(exact, lp::Tolerance<Rational>{}, 1000);
    REQUIRE(es.status == lp::Status::optimal);
    CHECK(es.objective == Rational(2));
}

TEST_CASE("simplex: infeasible and unbounded") {
    lp::Program<double> bad;
    const auto x = bad.add_variable(1.0);
    bad.add_row({{x, 1.0}}, lp::Relation::ge, 2.0);
    bad.add_row({{x, 1.0}}, lp::Relation::le, 1.0);
    CHECK(lp::solve(bad, lp::default_tolerance(), 1000).status == lp::Status::infeasible);

    lp::Program<double> open;
    const auto y = open.add_variable(1.0);
    open.add_row({{y, -1.0}}, lp::Relation::le, 1.0);
    CHECK(lp::solve(open, lp::default_tolerance(), 1000).status == lp::Status::unbounded);
}

TEST_CASE("simplex matches vertex enumeration on random LPs") {
    SplitMix64 rng(12);
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t n = 1 + rng.below(4);
        const std::size_t m = 1 + rng.below(5);
        Dense a(m, std::vector<double>(n));
        std::vector<double> b(m);
        std::vector<double> c(n);
        for (auto& row : a) {
            for (auto& v : row) {
                v = std::round(rng.uniform() * 8.0 - 3.0);
            }
        }
        for (auto& v : b) {
            v = std::round(rng.uniform() * 10.0);
        }
        for (auto& v : c) {
            v = std::round(rng.uniform() * 6.0 - 1.0);
        }
        // Box rows keep every instance bounded.
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> row(n, 0.0);
            row[j] = 1.0;
            a.push_back(row);
            b.push_back(10.0);
        }
        lp::Program<double> prog;
        for (double cj : c) {
            prog.add_variable(cj);
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            std::vector<std::pair<std::size_t, double>> coeffs;
            for (std::size_t j = 0; j < n; ++j) {
                if (a[i][j] != 0.0) {
                    coeffs.emplace_back(j, a[i][j]);
                }
            }
            prog.add_row(coeffs, lp::Relation::le, b[i]);
        }
        const auto sol = lp::solve(prog, lp::default_tolerance(), 10'000);
        REQUIRE(sol.status == lp::Status::optimal);
        CHECK(std::abs(sol.objective - vertex_enumeration(a, b, c)) <= 1e-9);
    }
}

TEST_CASE("LP structure") {
    const CapacityModel t = build_lp(toy(1.0));
    CHECK(t.allocations.size() == 1);
    CHECK(t.blocks.size() == 1);
    CHECK(t.blocks[0].services.size() == 2);
    CHECK(t.column_count() == 3);

    auto triples = all_subsets(6, 3);
    triples.resize(8);
    const CapacityModel lossy = build_lp(SwitchConfig::uniform(6, 3, 0.9, triples));
    CHECK(lossy.allocations.size() == 20);
    CHECK(lossy.blocks.size() == 20 * 8);
    const CapacityModel sure = build_lp(SwitchConfig::uniform(6, 3, 1.0, triples));
    CHECK(sure.blocks.size() == 20);

    CHECK_THROWS_AS(build_lp(SwitchConfig::uniform(6, 3, 0.9, triples), true, 50), CapacityExceeded);
}

TEST_CASE("closed-form capacities") {
    const auto dir = ArrivalDirection::uniform(1);
    CHECK(max_intensity(toy(1.0), dir).rho == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(max_intensity(toy(0.9), dir).rho == doctest::Approx(0.81).epsilon(1e-9));
    CHECK(max_intensity_exact(toy(1.0), dir) == Rational(1));
    CHECK(std::abs(static_cast<double>(max_intensity_exact(toy(0.9), dir)) - 0.81) < 1e-15);

    // Sim-1: every class is a triple through client 1, so one class per slot, all three LLEs needed.
    auto triples = all_subsets(6, 3);
    triples.resize(8);
    const auto sim1 = SwitchConfig::uniform(6, 3, 0.9, triples);
    CHECK(max_intensity(sim1, ArrivalDirection::uniform(8)).rho == doctest::Approx(0.729).epsilon(1e-9));

    // Sim-3: two disjoint pairs per slot.
    const auto sim3 = SwitchConfig::uniform(7, 4, 1.0, all_subsets(7, 2));
    CHECK(max_intensity(sim3, ArrivalDirection::uniform(21)).rho == doctest::Approx(2.0).epsilon(1e-9));

    // Sim-2: one class per slot, served whenever at least two of three LLEs succeed.
    auto classes = all_subsets(6, 2);
    const auto t = all_subsets(6, 3);
    classes.insert(classes.end(), t.begin(), t.end());
    const auto sim2 = SwitchConfig::uniform(6, 3, 0.9, classes);
    const double at_least_two = 0.9 * 0.9 * 0.9 + 3 * 0.9 * 0.9 * 0.1;
    CHECK(max_intensity(sim2, ArrivalDirection::uniform(35)).rho == doctest::Approx(at_least_two).epsilon(1e-9));
}

TEST_CASE("capacity agrees with the capped-matching polytope when p = 1") {
    for (auto [n, m] : {std::pair{4, 2}, std::pair{5, 2}, std::pair{6, 4}, std::pair{5, 4}}) {
        const auto config = SwitchConfig::uniform(n, m, 1.0, all_subsets(n, 2));
        const auto dir = ArrivalDirection::uniform(config.n_classes());
        CHECK(max_intensity(config, dir).rho == doctest::Approx(matching_polytope_rho(config, dir.rates())).epsilon(1e-9));
    }
    const auto config = SwitchConfig::uniform(5, 4, 1.0, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}, {0, 2}});
    const ArrivalDirection skew({3, 1, 1, 2, 1, 5});
    CHECK(max_intensity(config, skew).rho == doctest::Approx(matching_polytope_rho(config, skew.rates())).epsilon(1e-9));
}

TEST_CASE("certificates reconstruct the achieved rate") {
    auto triples = all_subsets(6, 3);
    triples.resize(8);
    const auto config = SwitchConfig::uniform(6, 3, 0.9, triples);
    const CapacityModel model = build_lp(config);
    const auto top = max_intensity(config, ArrivalDirection::uniform(8), model);
    CHECK(reconstruction_residual(model, top.certificate) <= 1e-9);
    double theta = 0.0;
    for (double v : top.certificate.theta) {
        CHECK(v >= -1e-12);
        theta += v;
    }
    CHECK(theta == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& mix : top.certificate.delta) {
        double s = 0.0;
        for (double w : mix.weights) {
            s += w;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    const auto json = certificate_to_json(top.certificate, model, config);
    CHECK(json.contains("theta"));
}

TEST_CASE("membership") {
    const CapacityModel model = build_lp(toy(1.0));
    const auto zero = membership(toy(1.0), std::vector<double>{0.0}, model);
    CHECK(zero.inside);
    CHECK(zero.margin == doctest::Approx(1.0));  // max over the region of min_r f_r

    const auto outside = membership(toy(1.0), std::vector<double>{1.2}, model);
    CHECK_FALSE(outside.inside);
    CHECK(outside.margin < 0.0);

    auto triples = all_subsets(6, 3);
    triples.resize(8);
    const auto config = SwitchConfig::uniform(6, 3, 0.9, triples);
    const CapacityModel big = build_lp(config);
    const double rho = max_intensity(config, ArrivalDirection::uniform(8), big).rho;
    std::vector<double> boundary(8, rho / 8.0);
    std::vector<double> over = boundary;
    for (auto& v : over) {
        v *= 1.2;
    }
    CHECK_FALSE(membership(config, over, big).inside);

    // Componentwise dominated by an inside point: inside.
    std::vector<double> inner = boundary;
    for (std::size_t r = 0; r < inner.size(); ++r) {
        inner[r] *= 0.5 + 0.05 * static_cast<double>(r);
    }
    const auto m = membership(config, inner, big);
    CHECK(m.inside);
    CHECK(m.margin > 0.0);
    CHECK(reconstruction_residual(big, m.certificate) <= 1e-9);
    CHECK(m.certificate.stability_margin == doctest::Approx(m.margin).epsilon(1e-9));
}

TEST_CASE("capacity is monotone in p and the region is convex") {
    const auto dir = ArrivalDirection::uniform(6);
    double previous = 0.0;
    for (double p : {0.5, 0.7, 0.9, 1.0}) {
        const auto config = SwitchConfig::uniform(4, 3, p, {{0, 1}, {1, 2}, {2, 3}, {0, 1, 2}, {1, 2, 3}, {0, 3}});
        const double rho = max_intensity(config, dir).rho;
        CHECK(rho >= previous - 1e-12);
        previous = rho;
    }

    const auto config = SwitchConfig::uniform(4, 3, 0.8, {{0, 1}, {1, 2}, {2, 3}, {0, 1, 2}});
    const CapacityModel model = build_lp(config);
    SplitMix64 rng(4);
    for (int i = 0; i < 20; ++i) {
        std::vector<double> d1(4);
        std::vector<double> d2(4);
        for (std::size_t r = 0; r < 4; ++r) {
            d1[r] = 0.1 + rng.uniform();
            d2[r] = 0.1 + rng.uniform();
        }
        const double r1 = max_intensity(config, ArrivalDirection(d1), model).rho;
        const double r2 = max_intensity(config, ArrivalDirection(d2), model).rho;
        const ArrivalDirection n1(d1);
        const ArrivalDirection n2(d2);
        std::vector<double> mid(4);
        for (std::size_t r = 0; r < 4; ++r) {
            mid[r] = 0.5 * (r1 * n1.rates()[r] + r2 * n2.rates()[r]);
        }
        CHECK(membership(config, mid, model).inside);
    }
}
