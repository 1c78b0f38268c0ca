#pragma once

/**
 * @file oracle.hpp
 * @brief Brute-force enumeration of stationary points on small instances.
 *
 * census_quadratic() is exhaustive for quadratic f with affine h and g: for
 * every support J (|J| <= s) and active set A of inequalities, the stationarity
 * equation restricted to J together with h = 0 and g_A = 0 is a square linear
 * system. census_t_quadratic() adds the finitely many y-patterns a T-point can
 * have (n-s-1 entries at 1+eps, one at 1-(n-s-1)eps). census_newton() runs
 * damped Newton on the same pattern systems for general smooth instances.
 */

#include "bridge.hpp"
#include "census.hpp"
#include "regmpoc.hpp"

#include <Eigen/QR>

#include <bit>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace ccopt {

class NotQuadraticError : public std::runtime_error {
public:
    explicit NotQuadraticError(const std::string& what) : std::runtime_error(what) {}
};

/// f(x) = f0 + b'x + x'Hx/2, h(x) = Ah x + h0, g(x) = Ag x + g0.
struct QuadraticModel {
    Matrix hessian;
    Vector linear;
    Matrix a_eq;
    Vector b_eq;
    Matrix a_in;
    Vector b_in;
};

inline QuadraticModel quadratic_model(const Problem& pr) {
    if (!is_quadratic_affine(pr))
        throw NotQuadraticError("pattern enumeration needs a quadratic objective and affine constraints");
    const int n = pr.n();
    const Vector zero = Vector::Zero(n);
    QuadraticModel m;
    const Jet2 jf = eval2(pr.f(), zero);
    m.hessian = jf.hessian;
    m.linear = jf.gradient;
    m.a_eq.resize(pr.num_eq(), n);
    m.b_eq.resize(pr.num_eq());
    for (int p = 0; p < pr.num_eq(); ++p) {
        const Jet2 j = eval2(*pr.h()[p], zero);
        m.a_eq.row(p) = j.gradient.transpose();
        m.b_eq(p) = j.value;
    }
    m.a_in.resize(pr.num_ineq(), n);
    m.b_in.resize(pr.num_ineq());
    for (int q = 0; q < pr.num_ineq(); ++q) {
        const Jet2 j = eval2(*pr.g()[q], zero);
        m.a_in.row(q) = j.gradient.transpose();
        m.b_in(q) = j.value;
    }
    return m;
}

namespace detail {

inline IndexSet mask_members(std::uint32_t mask, int n) {
    IndexSet out;
    for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) out.push_back(i);
    return out;
}

inline std::string set_text(const IndexSet& s) {
    std::string out = "{";
    for (std::size_t k = 0; k < s.size(); ++k) out += (k ? "," : "") + std::to_string(s[k] + 1);
    return out + "}";
}

inline std::vector<std::uint32_t> supports_up_to(int n, int s) {
    if (n > 24) throw InputError("pattern enumeration is limited to n <= 24");
    std::vector<std::uint32_t> out;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask)
        if (std::popcount(mask) <= s) out.push_back(mask);
    return out;
}

// Solves the stationarity system of one (support, active set) pattern.
// Returns nullopt when the system is singular.
inline std::optional<Vector> solve_pattern(const QuadraticModel& m, const IndexSet& support, const IndexSet& active,
                                           const Tolerances& tol) {
    const int n = static_cast<int>(m.hessian.rows());
    const int k = static_cast<int>(support.size());
    const int p = static_cast<int>(m.a_eq.rows());
    const int a = static_cast<int>(active.size());
    const int dim = k + p + a;
    Vector x = Vector::Zero(n);
    if (dim == 0) return x;

    Matrix kkt = Matrix::Zero(dim, dim);
    Vector rhs = Vector::Zero(dim);
    for (int r = 0; r < k; ++r) {
        const int i = support[r];
        for (int c = 0; c < k; ++c) kkt(r, c) = m.hessian(i, support[c]);
        for (int c = 0; c < p; ++c) kkt(r, k + c) = -m.a_eq(c, i);
        for (int c = 0; c < a; ++c) kkt(r, k + p + c) = -m.a_in(active[c], i);
        rhs(r) = -m.linear(i);
    }
    for (int r = 0; r < p; ++r) {
        for (int c = 0; c < k; ++c) kkt(k + r, c) = m.a_eq(r, support[c]);
        rhs(k + r) = -m.b_eq(r);
    }
    for (int r = 0; r < a; ++r) {
        for (int c = 0; c < k; ++c) kkt(k + p + r, c) = m.a_in(active[r], support[c]);
        rhs(k + p + r) = -m.b_in(active[r]);
    }
    if (rank_and_nullbasis(kkt, tol).rank < dim) return std::nullopt;
    const Vector z = kkt.fullPivLu().solve(rhs);
    for (int r = 0; r < k; ++r) x(support[r]) = z(r);
    return x;
}

inline bool contains_point(const std::vector<MCertificate>& pts, const Vector& x, double radius) {
    for (const auto& c : pts)
        if (inf_distance(c.x, x) <= radius) return true;
    return false;
}

inline bool contains_point(const std::vector<TCertificate>& pts, const Vector& x, const Vector& y, double radius) {
    for (const auto& c : pts)
        if (inf_distance(c.x, x) <= radius && inf_distance(c.y, y) <= radius) return true;
    return false;
}

inline void sort_points(CensusReport& rep) {
    std::sort(rep.m_points.begin(), rep.m_points.end(),
              [](const MCertificate& a, const MCertificate& b) { return lex_less(a.x, b.x); });
    std::sort(rep.t_points.begin(), rep.t_points.end(), [](const TCertificate& a, const TCertificate& b) {
        if (a.x != b.x) return lex_less(a.x, b.x);
        return lex_less(a.y, b.y);
    });
}

// Feeds every canonical y-pattern supported on the vanishing coordinates of x.
inline void for_each_canonical_y(const RegularizedProblem& rp, const IndexSet& zeros,
                              const std::function<void(const Vector&)>& fn) {
    const int n = rp.n(), s = rp.s();
    for (int ibar : zeros) {
        IndexSet pool;
        for (int i : zeros)
            if (i != ibar) pool.push_back(i);
        for_each_subset(pool, n - s - 1, [&](const IndexSet& ebar) { fn(lift_y(rp, ebar, ibar)); });
    }
}

inline void add_t_candidates(const RegularizedProblem& rp, const Vector& x, const Tolerances& tol, CensusReport& rep) {
    const double radius = 10.0 * tol.tol_act;
    IndexSet zeros;
    for (int i = 0; i < rp.n(); ++i)
        if (std::abs(x(i)) <= tol.tol_act) zeros.push_back(i);
    Vector xz = x;
    for (int i : zeros) xz(i) = 0.0;
    for_each_canonical_y(rp, zeros, [&](const Vector& y) {
        if (contains_point(rep.t_points, xz, y, radius)) return;
        auto cert = certify_t(rp, xz, y, tol);
        if (cert.stationary) rep.t_points.push_back(std::move(cert));
    });
}

}  // namespace detail

/// Exhaustive M-stationary census of a quadratic-affine CCOP.
inline CensusReport census_quadratic(const Problem& pr, const Tolerances& tol) {
    const QuadraticModel model = quadratic_model(pr);
    CensusReport rep;
    rep.method = "quadratic";
    rep.has_m = true;
    const double radius = 10.0 * tol.tol_act;
    const int n = pr.n();
    const auto ineq_masks = std::uint32_t{1} << pr.num_ineq();
    for (std::uint32_t smask : detail::supports_up_to(n, pr.s())) {
        const IndexSet support = detail::mask_members(smask, n);
        for (std::uint32_t amask = 0; amask < ineq_masks; ++amask) {
            const IndexSet active = detail::mask_members(amask, pr.num_ineq());
            auto x = detail::solve_pattern(model, support, active, tol);
            if (!x) {
                rep.log.push_back("singular pattern J=" + detail::set_text(support) + " A=" + detail::set_text(active));
                continue;
            }
            if (detail::contains_point(rep.m_points, *x, radius)) continue;
            auto cert = certify_m(pr, *x, tol);
            if (cert.stationary) rep.m_points.push_back(std::move(cert));
        }
    }
    rep.m_complete = true;
    detail::sort_points(rep);
    rep.tally();
    return rep;
}

namespace detail {

// Vertices of {0 <= y <= 1+eps on the zero coordinates, y = 0 elsewhere, sum y >= n-s}
// plus uniform samples from it.
inline std::vector<Vector> sample_polytope(const RegularizedProblem& rp, const IndexSet& zeros, std::mt19937_64& rng,
                                           int random_samples) {
    const int n = rp.n();
    const double upper = 1.0 + rp.eps;
    const double need = rp.n() - rp.s();
    const int m = static_cast<int>(zeros.size());
    std::vector<Vector> out;
    if (m > 16) return out;
    // vertices: every coordinate at a bound, or all but one at a bound and the sum tight
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        Vector y = Vector::Zero(n);
        for (int k = 0; k < m; ++k)
            if (mask & (1u << k)) y(zeros[k]) = upper;
        if (y.sum() >= need) out.push_back(y);
        for (int k = 0; k < m; ++k) {
            if (mask & (1u << k)) continue;
            const double rest = need - y.sum();
            if (rest > 0.0 && rest < upper) {
                Vector z = y;
                z(zeros[k]) = rest;
                out.push_back(z);
            }
        }
    }
    std::uniform_real_distribution<double> unif(0.0, upper);
    for (int t = 0, tries = 0; t < random_samples && tries < 100 * random_samples; ++tries) {
        Vector y = Vector::Zero(n);
        for (int i : zeros) y(i) = unif(rng);
        if (y.sum() < need) continue;
        out.push_back(y);
        ++t;
    }
    return out;
}

}  // namespace detail

/// T-stationary census of R(c, eps) for a quadratic-affine base problem.
/// Under the regularization assumption the y-patterns are finite and the
/// census is exhaustive. With the override (e.g. c = 0, eps = 0) the
/// y-polytope above every M-point is sampled instead and the report is
/// marked incomplete.
inline CensusReport census_t_quadratic(const RegularizedProblem& rp, const Tolerances& tol, int samples_per_point = 24,
                                       std::uint64_t seed = 20240521) {
    rp.require_certifiable();
    const QuadraticModel model = quadratic_model(rp.base);
    CensusReport rep;
    rep.method = "quadratic";
    rep.has_t = true;
    const int n = rp.n();
    const double radius = 10.0 * tol.tol_act;

    if (rp.assumption1_ok) {
        const auto ineq_masks = std::uint32_t{1} << rp.base.num_ineq();
        for (std::uint32_t smask : detail::supports_up_to(n, rp.s())) {
            const IndexSet support = detail::mask_members(smask, n);
            for (std::uint32_t amask = 0; amask < ineq_masks; ++amask) {
                const IndexSet active = detail::mask_members(amask, rp.base.num_ineq());
                auto x = detail::solve_pattern(model, support, active, tol);
                if (!x) {
                    rep.log.push_back("singular pattern J=" + detail::set_text(support) + " A=" + detail::set_text(active));
                    continue;
                }
                detail::add_t_candidates(rp, *x, tol, rep);
            }
        }
        rep.t_complete = true;
    } else {
        rep.log.push_back("regularization assumption violated: sampling the y-polytope, census incomplete");
        const auto base = census_quadratic(rp.base, tol);
        std::mt19937_64 rng(seed);
        for (const auto& mc : base.m_points) {
            const Vector& x = mc.x;
            for (const Vector& y : detail::sample_polytope(rp, mc.activity.i0, rng, samples_per_point)) {
                if (detail::contains_point(rep.t_points, x, y, radius)) continue;
                auto cert = certify_t(rp, x, y, tol);
                if (cert.stationary) rep.t_points.push_back(std::move(cert));
            }
        }
        rep.t_complete = false;
    }
    detail::sort_points(rep);
    rep.tally();
    return rep;
}

/// Both sides of a quadratic-affine instance in one report.
inline CensusReport census_both_quadratic(const RegularizedProblem& rp, const Tolerances& tol) {
    CensusReport rep = census_quadratic(rp.base, tol);
    CensusReport t = census_t_quadratic(rp, tol);
    rep.has_t = true;
    rep.t_complete = t.t_complete;
    rep.t_points = std::move(t.t_points);
    rep.log.insert(rep.log.end(), t.log.begin(), t.log.end());
    rep.tally();
    return rep;
}

/// Multistart grid: `counts[i]` starts on axis i (a single entry applies to
/// every axis), spread evenly over [lower, upper].
struct MultistartGrid {
    std::vector<int> counts;
    double lower = -2.0;
    double upper = 2.0;

    int count(int axis) const {
        if (counts.empty()) return 0;
        return counts.size() == 1 ? counts[0] : counts.at(static_cast<std::size_t>(axis));
    }
    double coordinate(int axis, int k) const {
        const int c = count(axis);
        return c == 1 ? 0.5 * (lower + upper) : lower + (upper - lower) * k / (c - 1);
    }
};

namespace detail {

struct NewtonOutcome {
    bool converged = false;
    Vector x;
};

// Damped Newton on F(x_J, lambda, mu_A) = [grad_J L; h; g_A] with x = 0 off J.
inline NewtonOutcome newton_pattern(const Problem& pr, const IndexSet& support, const IndexSet& active,
                                    const Vector& start) {
    const int n = pr.n();
    const int k = static_cast<int>(support.size());
    const int p = pr.num_eq();
    const int a = static_cast<int>(active.size());
    const int dim = k + p + a;

    auto unpack = [&](const Vector& z) {
        Vector x = Vector::Zero(n);
        for (int r = 0; r < k; ++r) x(support[r]) = z(r);
        return x;
    };
    auto residual = [&](const Vector& z, Matrix* jac) {
        const Vector x = unpack(z);
        const auto jets = evaluate_all(pr, x);
        Vector f = Vector::Zero(dim);
        Matrix hl = jets.f.hessian;
        Vector gl = jets.f.gradient;
        for (int c = 0; c < p; ++c) {
            gl -= z(k + c) * jets.h[c].gradient;
            hl -= z(k + c) * jets.h[c].hessian;
        }
        for (int c = 0; c < a; ++c) {
            gl -= z(k + p + c) * jets.g[active[c]].gradient;
            hl -= z(k + p + c) * jets.g[active[c]].hessian;
        }
        for (int r = 0; r < k; ++r) f(r) = gl(support[r]);
        for (int r = 0; r < p; ++r) f(k + r) = jets.h[r].value;
        for (int r = 0; r < a; ++r) f(k + p + r) = jets.g[active[r]].value;
        if (jac) {
            jac->setZero(dim, dim);
            for (int r = 0; r < k; ++r) {
                for (int c = 0; c < k; ++c) (*jac)(r, c) = hl(support[r], support[c]);
                for (int c = 0; c < p; ++c) (*jac)(r, k + c) = -jets.h[c].gradient(support[r]);
                for (int c = 0; c < a; ++c) (*jac)(r, k + p + c) = -jets.g[active[c]].gradient(support[r]);
            }
            for (int r = 0; r < p; ++r)
                for (int c = 0; c < k; ++c) (*jac)(k + r, c) = jets.h[r].gradient(support[c]);
            for (int r = 0; r < a; ++r)
                for (int c = 0; c < k; ++c) (*jac)(k + p + r, c) = jets.g[active[r]].gradient(support[c]);
        }
        return f;
    };

    NewtonOutcome out;
    Vector z = Vector::Zero(dim);
    for (int r = 0; r < k; ++r) z(r) = start(support[r]);
    constexpr double converged_norm = 1e-12;
    try {
        Matrix jac;
        Vector f = residual(z, &jac);
        double merit = f.norm();
        for (int it = 0; it < 100 && merit > converged_norm; ++it) {
            const Vector step = -jac.completeOrthogonalDecomposition().solve(f);
            double t = 1.0;
            bool improved = false;
            for (int halving = 0; halving <= 30; ++halving, t *= 0.5) {
                const Vector trial = z + t * step;
                Matrix trial_jac;
                Vector trial_f;
                try {
                    trial_f = residual(trial, &trial_jac);
                } catch (const DomainError&) {
                    continue;
                }
                if (trial_f.norm() < merit) {
                    z = trial;
                    f = trial_f;
                    jac = trial_jac;
                    merit = f.norm();
                    improved = true;
                    break;
                }
            }
            if (!improved) break;
        }
        out.converged = merit <= converged_norm * (1.0 + z.norm());
    } catch (const DomainError&) {
        out.converged = false;
    }
    out.x = unpack(z);
    return out;
}

inline std::vector<Vector> grid_starts(const MultistartGrid& grid, const IndexSet& support, int n) {
    std::vector<Vector> starts;
    for (int i : support)
        if (grid.count(i) <= 0) return starts;
    std::vector<int> idx(support.size(), 0);
    for (;;) {
        Vector x = Vector::Zero(n);
        for (std::size_t r = 0; r < support.size(); ++r) x(support[r]) = grid.coordinate(support[r], idx[r]);
        starts.push_back(x);
        std::size_t r = 0;
        while (r < support.size() && ++idx[r] == grid.count(support[r])) idx[r++] = 0;
        if (r == support.size()) break;
    }
    return starts;
}

}  // namespace detail

/// Multistart damped-Newton census of M-stationary points. Never complete.
inline CensusReport census_newton(const Problem& pr, const MultistartGrid& grid, const Tolerances& tol) {
    CensusReport rep;
    rep.method = "newton";
    rep.has_m = true;
    const int n = pr.n();
    bool empty = grid.counts.empty();
    for (int i = 0; i < n && !empty; ++i) empty = grid.count(i) <= 0;
    if (empty) {
        rep.log.push_back("empty multistart grid");
        return rep;
    }
    const double radius = 10.0 * tol.tol_act;
    const auto ineq_masks = std::uint32_t{1} << pr.num_ineq();
    for (std::uint32_t smask : detail::supports_up_to(n, pr.s())) {
        const IndexSet support = detail::mask_members(smask, n);
        for (std::uint32_t amask = 0; amask < ineq_masks; ++amask) {
            const IndexSet active = detail::mask_members(amask, pr.num_ineq());
            int failures = 0;
            for (const Vector& start : detail::grid_starts(grid, support, n)) {
                const auto res = detail::newton_pattern(pr, support, active, start);
                if (!res.converged) {
                    ++failures;
                    continue;
                }
                MCertificate cert;
                try {
                    cert = certify_m(pr, res.x, tol);
                } catch (const DomainError&) {
                    ++failures;
                    continue;
                }
                if (!cert.stationary) continue;
                bool merged = false;
                for (const auto& other : rep.m_points) {
                    if (inf_distance(other.x, res.x) > radius) continue;
                    merged = true;
                    if (other.m_index != cert.m_index)
                        rep.log.push_back("nearby points with different indices near " + format_number(res.x(0)));
                    break;
                }
                if (!merged) rep.m_points.push_back(std::move(cert));
            }
            if (failures > 0)
                rep.log.push_back(std::to_string(failures) + " non-converged starts for J=" + detail::set_text(support) +
                                  " A=" + detail::set_text(active));
        }
    }
    rep.m_complete = false;
    detail::sort_points(rep);
    rep.tally();
    return rep;
}

/// Newton census of R(c, eps): M-points by Newton, then every admissible
/// y-pattern above them (sampled under the override).
inline CensusReport census_newton(const RegularizedProblem& rp, const MultistartGrid& grid, const Tolerances& tol,
                                  int samples_per_point = 24, std::uint64_t seed = 20240521) {
    rp.require_certifiable();
    CensusReport rep = census_newton(rp.base, grid, tol);
    rep.has_t = true;
    if (rp.assumption1_ok) {
        for (const auto& mc : rep.m_points) detail::add_t_candidates(rp, mc.x, tol, rep);
    } else {
        std::mt19937_64 rng(seed);
        for (const auto& mc : rep.m_points)
            for (const Vector& y : detail::sample_polytope(rp, mc.activity.i0, rng, samples_per_point)) {
                if (detail::contains_point(rep.t_points, mc.x, y, 10.0 * tol.tol_act)) continue;
                auto cert = certify_t(rp, mc.x, y, tol);
                if (cert.stationary) rep.t_points.push_back(std::move(cert));
            }
    }
    rep.t_complete = false;
    detail::sort_points(rep);
    rep.tally();
    return rep;
}

}  // namespace ccopt
