#pragma once

// Dense two-phase primal simplex with Bland's rule.
//
// Solves   maximize c'x   subject to   row_i(x) {<=, >=, =} rhs_i,   x >= 0.
//
// Templated on the scalar: `double` for production instances, an exact
// rational type (boost::multiprecision::cpp_rational) for small certification
// runs, where the tolerance is zero.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qswitch/errors.hpp"

namespace qswitch::lp {

enum class Relation { le, ge, eq };
enum class Status { optimal, infeasible, unbounded };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::optimal:
            return "optimal";
        case Status::infeasible:
            return "infeasible";
        case Status::unbounded:
            return "unbounded";
    }
    return "?";
}

template <class T>
struct Row {
    std::vector<std::pair<std::size_t, T>> coeffs;  // sparse (variable, coefficient)
    Relation relation = Relation::le;
    T rhs{};
};

template <class T>
struct Program {
    std::size_t n_vars = 0;
    std::vector<T> objective;  // length n_vars, maximized
    std::vector<Row<T>> rows;

    std::size_t add_variable(T cost = T{}) {
        objective.push_back(cost);
        return n_vars++;
    }
    void add_row(std::vector<std::pair<std::size_t, T>> coeffs, Relation rel, T rhs) {
        rows.push_back(Row<T>{std::move(coeffs), rel, std::move(rhs)});
    }
};

template <class T>
struct Solution {
    Status status = Status::infeasible;
    T objective{};
    std::vector<T> x;
    std::size_t pivots = 0;
};

template <class T>
struct Tolerance {
    T pivot{};      // entries with |a| <= pivot are treated as zero
    T feasible{};   // phase-one residual accepted as feasible
};

inline Tolerance<double> default_tolerance() { return {1e-11, 1e-9}; }

namespace detail {

template <class T>
T abs_value(const T& v) {
    return v < T{} ? -v : v;
}

template <class T>
class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1)) {}

    T& at(std::size_t r, std::size_t c) { return data_[r * (cols_ + 1) + c]; }
    const T& at(std::size_t r, std::size_t c) const { return data_[r * (cols_ + 1) + c]; }
    T& rhs(std::size_t r) { return at(r, cols_); }
    T& obj(std::size_t c) { return at(rows_, c); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    void pivot(std::size_t pr, std::size_t pc, const T& eps) {
        const T inv = T{1} / at(pr, pc);
        for (std::size_t c = 0; c <= cols_; ++c) {
            at(pr, c) *= inv;
        }
        at(pr, pc) = T{1};
        for (std::size_t r = 0; r <= rows_; ++r) {
            if (r == pr) {
                continue;
            }
            const T factor = at(r, pc);
            if (abs_value(factor) <= eps) {
                at(r, pc) = T{};
                continue;
            }
            for (std::size_t c = 0; c <= cols_; ++c) {
                if (at(pr, c) != T{}) {
                    at(r, c) -= factor * at(pr, c);
                }
            }
            at(r, pc) = T{};
        }
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<T> data_;
};

}  // namespace detail

/// Throws CapacityExceeded if the pivot count passes `max_pivots`.
template <class T>
Solution<T> solve(const Program<T>& prog, const Tolerance<T>& tol, std::size_t max_pivots = 5'000'000) {
    using detail::abs_value;
    const std::size_t m = prog.rows.size();
    const std::size_t n = prog.n_vars;
    if (prog.objective.size() != n) {
        throw ValidationError("objective length does not match variable count");
    }

    // Column layout: structural | slack or surplus (one per inequality) | artificial (one per >= or = row).
    std::vector<int> sign(m, 1);
    std::size_t n_slack = 0;
    std::size_t n_art = 0;
    std::vector<Relation> rel(m);
    for (std::size_t i = 0; i < m; ++i) {
        rel[i] = prog.rows[i].relation;
        if (prog.rows[i].rhs < T{}) {
            sign[i] = -1;
            if (rel[i] == Relation::le) {
                rel[i] = Relation::ge;
            } else if (rel[i] == Relation::ge) {
                rel[i] = Relation::le;
            }
        }
        if (rel[i] != Relation::eq) {
            ++n_slack;
        }
        if (rel[i] != Relation::le) {
            ++n_art;
        }
    }
    const std::size_t art_begin = n + n_slack;
    const std::size_t cols = art_begin + n_art;
    detail::Tableau<T> tab(m, cols);
    std::vector<std::size_t> basis(m);

    std::size_t next_slack = n;
    std::size_t next_art = art_begin;
    for (std::size_t i = 0; i < m; ++i) {
        const T s = sign[i] > 0 ? T{1} : T{-1};
        for (const auto& [var, coef] : prog.rows[i].coeffs) {
            if (var >= n) {
                throw ValidationError("row references unknown variable " + std::to_string(var));
            }
            tab.at(i, var) += s * coef;
        }
        tab.rhs(i) = s * prog.rows[i].rhs;
        if (rel[i] == Relation::le) {
            tab.at(i, next_slack) = T{1};
            basis[i] = next_slack++;
        } else {
            if (rel[i] == Relation::ge) {
                tab.at(i, next_slack++) = T{-1};
            }
            tab.at(i, next_art) = T{1};
            basis[i] = next_art++;
        }
    }

    Solution<T> out;
    std::vector<bool> barred(cols, false);

    // Bland's rule: lowest-index improving column, ties in the ratio test go
    // to the lowest-index basic variable.
    auto run = [&]() -> Status {
        for (;;) {
            std::size_t enter = cols;
            for (std::size_t c = 0; c < cols; ++c) {
                if (!barred[c] && tab.obj(c) < -tol.pivot) {
                    enter = c;
                    break;
                }
            }
            if (enter == cols) {
                return Status::optimal;
            }
            std::size_t leave = m;
            T best_ratio{};
            for (std::size_t r = 0; r < m; ++r) {
                const T& a = tab.at(r, enter);
                if (a > tol.pivot) {
                    const T ratio = tab.rhs(r) / a;
                    if (leave == m || ratio < best_ratio ||
                        (!(best_ratio < ratio) && basis[r] < basis[leave])) {
                        leave = r;
                        best_ratio = ratio;
                    }
                }
            }
            if (leave == m) {
                return Status::unbounded;
            }
            tab.pivot(leave, enter, tol.pivot);
            basis[leave] = enter;
            if (++out.pivots > max_pivots) {
                throw CapacityExceeded("simplex exceeded " + std::to_string(max_pivots) + " pivots");
            }
        }
    };

    auto load_objective = [&](const std::vector<T>& cost) {
        for (std::size_t c = 0; c <= cols; ++c) {
            tab.obj(c) = T{};
        }
        for (std::size_t c = 0; c < cols; ++c) {
            tab.obj(c) = -cost[c];
        }
        // Price out the basic columns.
        for (std::size_t r = 0; r < m; ++r) {
            const T cb = cost[basis[r]];
            if (cb == T{}) {
                continue;
            }
            for (std::size_t c = 0; c <= cols; ++c) {
                tab.obj(c) += cb * tab.at(r, c);
            }
        }
    };

    // Phase one: maximize -(sum of artificials).
    if (n_art > 0) {
        std::vector<T> cost(cols, T{});
        for (std::size_t c = art_begin; c < cols; ++c) {
            cost[c] = T{-1};
        }
        load_objective(cost);
        run();
        if (tab.obj(cols) < -tol.feasible) {
            out.status = Status::infeasible;
            return out;
        }
        // Drive remaining artificials out of the basis where possible.
        for (std::size_t r = 0; r < m; ++r) {
            if (basis[r] < art_begin) {
                continue;
            }
            for (std::size_t c = 0; c < art_begin; ++c) {
                if (abs_value(tab.at(r, c)) > tol.pivot) {
                    tab.pivot(r, c, tol.pivot);
                    basis[r] = c;
                    ++out.pivots;
                    break;
                }
            }
        }
        for (std::size_t c = art_begin; c < cols; ++c) {
            barred[c] = true;
        }
    }

    // Phase two.
    std::vector<T> cost(cols, T{});
    for (std::size_t c = 0; c < n; ++c) {
        cost[c] = prog.objective[c];
    }
    load_objective(cost);
    if (run() == Status::unbounded) {
        out.status = Status::unbounded;
        return out;
    }

    out.status = Status::optimal;
    out.x.assign(n, T{});
    for (std::size_t r = 0; r < m; ++r) {
        if (basis[r] < n) {
            out.x[basis[r]] = tab.rhs(r);
        }
    }
    out.objective = T{};
    for (std::size_t c = 0; c < n; ++c) {
        out.objective += prog.objective[c] * out.x[c];
    }
    return out;
}

}  // namespace qswitch::lp
