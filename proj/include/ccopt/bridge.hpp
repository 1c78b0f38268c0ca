#pragma once

/**
 * @file bridge.hpp
 * @brief Correspondence between M-stationary points of a CCOP and
 * T-stationary points of its regularization R(c, eps).
 *
 * lift() builds every companion y of an M-stationary x: with ibar the index
 * of the largest c_i over the vanishing coordinates I0(x) and Ebar any subset
 * of I0(x) \ {ibar} of size n-s-1,
 *
 *   y_i = 1 + eps             for i in Ebar,
 *   y_i = 1 - (n-s-1) eps     for i = ibar,
 *   y_i = 0                   otherwise.
 *
 * project() goes the other way and maps the T-multipliers back to
 * M-multipliers. verify_counts() checks the companion counts and index
 * relations on a census.
 */

#include "census.hpp"
#include "regmpoc.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ccopt {

class NotStationaryError : public std::runtime_error {
public:
    explicit NotStationaryError(const std::string& what) : std::runtime_error(what) {}
};

/// Multipliers of a lifted point given in closed form by the lift construction.
struct LiftMultipliers {
    std::vector<Multiplier> lambda, mu1, mu2, sigma1, sigma2, rho1, rho2;
    double mu3 = 0.0;
};

struct LiftCompanion {
    IndexSet ebar;
    Vector y;
    LiftMultipliers closed_form;
    TCertificate certificate;
    /// max deviation between closed-form and solved multipliers; only
    /// meaningful when the solved multipliers are unique
    double multiplier_deviation = 0.0;
    bool closed_form_agrees = false;
};

struct LiftSet {
    Vector base_point;
    MCertificate base_certificate;
    int ibar = -1;
    unsigned long long expected_count = 0;
    std::vector<LiftCompanion> companions;
    bool count_asserted = false;  // base point nondegenerate
    bool count_ok = false;
};

namespace detail {

inline void for_each_subset(const IndexSet& pool, int size, const std::function<void(const IndexSet&)>& fn) {
    if (size < 0 || size > static_cast<int>(pool.size())) return;
    std::vector<int> pick(static_cast<std::size_t>(size));
    for (int k = 0; k < size; ++k) pick[k] = k;
    IndexSet subset(static_cast<std::size_t>(size));
    const int m = static_cast<int>(pool.size());
    for (;;) {
        for (int k = 0; k < size; ++k) subset[k] = pool[pick[k]];
        fn(subset);
        int k = size - 1;
        while (k >= 0 && pick[k] == m - size + k) --k;
        if (k < 0) return;
        ++pick[k];
        for (int j = k + 1; j < size; ++j) pick[j] = pick[j - 1] + 1;
    }
}

inline double lookup(const std::vector<Multiplier>& ms, int index, bool& found) {
    for (const auto& m : ms)
        if (m.index == index) {
            found = true;
            return m.value;
        }
    found = false;
    return 0.0;
}

// Largest |a_i - b_i| over matching indices; +inf if the index sets differ.
inline double deviation(const std::vector<Multiplier>& a, const std::vector<Multiplier>& b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    double d = 0.0;
    for (const auto& m : a) {
        bool found = false;
        const double v = lookup(b, m.index, found);
        if (!found) return std::numeric_limits<double>::infinity();
        d = std::max(d, std::abs(v - m.value));
    }
    return d;
}

}  // namespace detail

/// y-vector of the lift for a given (ebar, ibar).
inline Vector lift_y(const RegularizedProblem& rp, const IndexSet& ebar, int ibar) {
    Vector y = Vector::Zero(rp.n());
    for (int i : ebar) y(i) = 1.0 + rp.eps;
    y(ibar) = 1.0 - (rp.n() - rp.s() - 1) * rp.eps;
    return y;
}

/// Enumerates all T-stationary companions of the M-stationary point x.
/// Coordinates of x inside the activity tolerance are set to exactly zero.
inline LiftSet lift(const RegularizedProblem& rp, const Vector& x, const Tolerances& tol) {
    if (!rp.assumption1_ok)
        throw AssumptionError("lift requires c positive and pairwise distinct and 0 < eps <= 1/(n-s)");
    LiftSet out;
    out.base_certificate = certify_m(rp.base, x, tol);
    const auto& mc = out.base_certificate;
    if (!mc.stationary)
        throw NotStationaryError("point is not M-stationary (" + mc.degenerate_reason.value_or("unknown") + ")");

    const int n = rp.n(), s = rp.s();
    const IndexSet& i0 = mc.activity.i0;
    out.base_point = x;
    for (int i : i0) out.base_point(i) = 0.0;
    if (static_cast<int>(i0.size()) < n - s) throw NotStationaryError("too few vanishing coordinates for a lift");

    out.ibar = *std::max_element(i0.begin(), i0.end(), [&](int a, int b) { return rp.c(a) < rp.c(b); });
    const double cbar = rp.c(out.ibar);
    out.expected_count = binomial(n - mc.activity.x_norm0 - 1, n - s - 1);

    IndexSet pool;
    for (int i : i0)
        if (i != out.ibar) pool.push_back(i);

    detail::for_each_subset(pool, n - s - 1, [&](const IndexSet& ebar) {
        LiftCompanion comp;
        comp.ebar = ebar;
        comp.y = lift_y(rp, ebar, out.ibar);

        auto& cf = comp.closed_form;
        cf.lambda = mc.lambda;
        cf.mu1 = mc.mu;
        cf.mu3 = cbar;
        for (int i : ebar) cf.mu2.push_back({i, cbar - rp.c(i)});
        for (int i = 0; i < n; ++i) {
            const bool vanishing = std::find(i0.begin(), i0.end(), i) != i0.end();
            bool found = false;
            const double gamma = detail::lookup(mc.gamma, i, found);
            if (!vanishing) {
                cf.sigma2.push_back({i, rp.c(i) - cbar});
            } else if (i == out.ibar || std::find(ebar.begin(), ebar.end(), i) != ebar.end()) {
                cf.sigma1.push_back({i, gamma});
            } else {
                cf.rho1.push_back({i, gamma});
                cf.rho2.push_back({i, rp.c(i) - cbar});
            }
        }

        comp.certificate = certify_t(rp, out.base_point, comp.y, tol);
        const auto& tc = comp.certificate;
        double dev = std::abs(tc.mu3 - cf.mu3);
        for (auto [a, b] : {std::pair{&cf.lambda, &tc.lambda}, {&cf.mu1, &tc.mu1}, {&cf.mu2, &tc.mu2},
                            {&cf.sigma1, &tc.sigma1}, {&cf.sigma2, &tc.sigma2}, {&cf.rho1, &tc.rho1},
                            {&cf.rho2, &tc.rho2}})
            dev = std::max(dev, detail::deviation(*a, *b));
        comp.multiplier_deviation = dev;
        comp.closed_form_agrees = tc.unique_multipliers && dev <= 1e-8;
        out.companions.push_back(std::move(comp));
    });

    out.count_asserted = mc.nondegenerate();
    out.count_ok = out.companions.size() == out.expected_count;
    return out;
}

struct ProjectionResult {
    TCertificate t_certificate;
    MCertificate m_certificate;
    std::vector<Multiplier> mapped_gamma;  // sigma1 on a01, rho1 on a00
    std::optional<bool> multipliers_match;  // set when both multiplier sets are unique
    bool transfer_asserted = false;        // T nondegenerate and NDT5
    bool transfer_ok = true;
};

/// Maps a T-stationary (x, y) to the CCOP and certifies x independently.
inline ProjectionResult project(const RegularizedProblem& rp, const Vector& x, const Vector& y, const Tolerances& tol) {
    ProjectionResult out;
    out.t_certificate = certify_t(rp, x, y, tol);
    const auto& tc = out.t_certificate;
    if (!tc.stationary)
        throw NotStationaryError("point is not T-stationary (" + tc.degenerate_reason.value_or("unknown") + ")");
    out.m_certificate = certify_m(rp.base, x, tol);
    const auto& mc = out.m_certificate;

    out.mapped_gamma = tc.sigma1;
    out.mapped_gamma.insert(out.mapped_gamma.end(), tc.rho1.begin(), tc.rho1.end());
    std::sort(out.mapped_gamma.begin(), out.mapped_gamma.end(),
              [](const Multiplier& a, const Multiplier& b) { return a.index < b.index; });

    if (tc.unique_multipliers && mc.unique_multipliers) {
        const double dev = std::max({detail::deviation(out.mapped_gamma, mc.gamma), detail::deviation(tc.mu1, mc.mu),
                                     detail::deviation(tc.lambda, mc.lambda)});
        out.multipliers_match = dev <= 1e-8;
    }
    out.transfer_asserted = tc.nondegenerate() && tc.ndt[4];
    if (out.transfer_asserted)
        out.transfer_ok = mc.nondegenerate() && mc.m_index && tc.t_index && *mc.m_index == *tc.t_index;
    return out;
}

struct CountCheck {
    std::string name;
    bool applicable = false;
    bool passed = false;
    std::string detail;
};

struct CountReport {
    bool complete = false;
    std::vector<CountCheck> checks;

    bool passed() const {
        for (const auto& c : checks)
            if (c.applicable && !c.passed) return false;
        return true;
    }
};

/// f a strictly convex quadratic, constraints affine and feasible at the origin.
inline bool mountain_pass_hypothesis(const Problem& pr, const Tolerances& tol) {
    if (!is_quadratic_affine(pr)) return false;
    const Vector origin = Vector::Zero(pr.n());
    const Matrix hess = eval2(pr.f(), origin).hessian;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(hess, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= tol.tol_strict) return false;
    for (const auto& h : pr.h())
        if (std::abs(eval(*h, origin)) > tol.tol_feas) return false;
    for (const auto& g : pr.g())
        if (eval(*g, origin) < -tol.tol_feas) return false;
    return true;
}

/// Checks companion counts, the binomial identity, equal numbers of
/// minimizers and the mountain-pass inequality on a two-sided census.
inline CountReport verify_counts(const RegularizedProblem& rp, const CensusReport& census, const Tolerances& tol) {
    CountReport rep;
    rep.complete = census.complete();
    const bool full = census.has_m && census.has_t && rep.complete;
    const double radius = 10.0 * tol.tol_act;
    const int n = rp.n(), s = rp.s();

    CountCheck lifts{"companion count", full && rp.assumption1_ok, true, ""};
    CountCheck ident{"binomial identity", census.has_m, true, ""};
    for (const auto& mc : census.m_points) {
        const int k = mc.activity.x_norm0;
        const auto lhs = binomial(n - k - 1, n - s - 1);
        const auto rhs = binomial(n - k - 1, s - k);
        if (lhs != rhs) {
            ident.passed = false;
            ident.detail += "C(" + std::to_string(n - k - 1) + "," + std::to_string(n - s - 1) + ") != C(" +
                            std::to_string(n - k - 1) + "," + std::to_string(s - k) + "); ";
        }
        if (!lifts.applicable || !mc.nondegenerate()) continue;
        std::size_t above = 0;
        for (const auto& tc : census.t_points)
            if (inf_distance(tc.x, mc.x) <= radius) ++above;
        if (above != lhs) {
            lifts.passed = false;
            lifts.detail += "point with ||x||_0=" + std::to_string(k) + " has " + std::to_string(above) +
                            " T-points, expected " + std::to_string(lhs) + "; ";
        }
    }

    int m_min = 0, t_min = 0, t_one = 0;
    for (const auto& mc : census.m_points)
        if (mc.m_index && *mc.m_index == 0) ++m_min;
    for (const auto& tc : census.t_points) {
        if (!tc.nondegenerate() || !tc.t_index) continue;
        if (*tc.t_index == 0) ++t_min;
        if (*tc.t_index == 1) ++t_one;
    }
    CountCheck minimizers{"minimizer count", full, m_min == t_min,
                          "M-index 0: " + std::to_string(m_min) + ", T-index 0: " + std::to_string(t_min)};
    CountCheck pass{"mountain pass",
                    census.has_t && census.t_complete && census.t_degenerate == 0 && census.m_degenerate == 0 &&
                        mountain_pass_hypothesis(rp.base, tol),
                    t_one >= t_min - 1,
                    "T-index 1: " + std::to_string(t_one) + ", T-index 0: " + std::to_string(t_min)};

    CountCheck index{"index preservation", full, true, ""};
    if (full) {
        for (const auto& tc : census.t_points) {
            if (!(tc.nondegenerate() && tc.ndt[4])) continue;
            const MCertificate* match = nullptr;
            for (const auto& mc : census.m_points)
                if (inf_distance(tc.x, mc.x) <= radius) match = &mc;
            if (!match || !match->m_index || *match->m_index != *tc.t_index) {
                index.passed = false;
                index.detail += "T-point without an M-point of equal index; ";
            }
        }
    }

    // with c = 0 and eps = 0 every T-stationary point is degenerate
    const bool unregularized = rp.eps == 0.0 && (rp.c.size() == 0 || rp.c.cwiseAbs().maxCoeff() == 0.0);
    CountCheck intrinsic{"unregularized degeneracy", census.has_t && unregularized, true, ""};
    if (intrinsic.applicable) {
        int nondeg = 0;
        for (const auto& tc : census.t_points) nondeg += tc.nondegenerate() ? 1 : 0;
        intrinsic.passed = nondeg == 0;
        intrinsic.detail = std::to_string(census.t_points.size()) + " T-points, " + std::to_string(nondeg) + " nondegenerate";
    }

    rep.checks = {lifts, ident, minimizers, pass, index, intrinsic};
    return rep;
}

}  // namespace ccopt
