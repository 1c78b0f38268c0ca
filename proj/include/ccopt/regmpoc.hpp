#pragma once

/**
 * @file regmpoc.hpp
 * @brief The regularized continuous reformulation R(c, eps) of a CCOP.
 *
 *   min f(x) + c'y  s.t.  h(x) = 0,  g(x) >= 0,
 *                         sum_i y_i >= n - s,  x_i y_i = 0,  0 <= y_i <= 1 + eps.
 *
 * R(c, eps) is a program with orthogonality type constraints. This header
 * certifies T-stationarity, the five nondegeneracy conditions NDT1..NDT5 and
 * the T-index at a point (x, y). Setting c = 0 and eps = 0 (with the
 * override flag) gives the unregularized reformulation.
 */

#include "ccop.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ccopt {

/// Raised when certification is requested for parameters violating the
/// regularization assumption without the override flag.
class AssumptionError : public std::runtime_error {
public:
    explicit AssumptionError(const std::string& what) : std::runtime_error(what) {}
};

struct RegularizedProblem {
    Problem base;
    Vector c;
    double eps = 0.0;
    bool assumption1_ok = false;
    bool override_assumption1 = false;

    int n() const noexcept { return base.n(); }
    int s() const noexcept { return base.s(); }

    void require_certifiable() const {
        if (!assumption1_ok && !override_assumption1)
            throw AssumptionError(
                "regularization parameters violate the assumption (c positive and pairwise distinct, "
                "0 < eps <= 1/(n-s)); pass the override flag to certify anyway");
    }
};

/// c positive and pairwise distinct (gap > tol_strict), 0 < eps <= 1/(n-s).
inline bool regularization_assumption_holds(const Vector& c, double eps, int n, int s, const Tolerances& tol) {
    if (!(eps > 0.0) || !(eps <= 1.0 / static_cast<double>(n - s))) return false;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        if (!(c(i) > 0.0)) return false;
        for (Eigen::Index j = i + 1; j < c.size(); ++j)
            if (!(std::abs(c(i) - c(j)) > tol.tol_strict)) return false;
    }
    return true;
}

inline RegularizedProblem make_regularized(Problem pr, Vector c, double eps, bool override_assumption1 = false,
                                           const Tolerances& tol = {}) {
    if (c.size() != pr.n())
        throw InputError("regularization vector c has length " + std::to_string(c.size()) + ", expected " +
                         std::to_string(pr.n()));
    if (eps < 0.0) throw InputError("eps must be nonnegative");
    const bool ok = regularization_assumption_holds(c, eps, pr.n(), pr.s(), tol);
    return RegularizedProblem{std::move(pr), std::move(c), eps, ok, override_assumption1};
}

struct MpocActivity {
    IndexSet a00, a01, a10;
    IndexSet conflict;  // x_i != 0 and y_i != 0 (violates orthogonality)
    IndexSet ecal;      // y_i at the upper bound 1 + eps
    IndexSet q0;
    bool sum_active = false;
};

inline MpocActivity mpoc_activity(const RegularizedProblem& rp, const Vector& x, const Vector& y,
                                  const Tolerances& tol) {
    MpocActivity act;
    act.q0 = ccop_activity(rp.base, x, tol).q0;
    for (int i = 0; i < rp.n(); ++i) {
        const bool x0 = std::abs(x(i)) <= tol.tol_act;
        const bool y0 = std::abs(y(i)) <= tol.tol_act;
        if (x0 && y0) act.a00.push_back(i);
        else if (x0) act.a01.push_back(i);
        else if (y0) act.a10.push_back(i);
        else act.conflict.push_back(i);
        if (x0 && !y0 && std::abs(y(i) - (1.0 + rp.eps)) <= tol.tol_act) act.ecal.push_back(i);
    }
    act.sum_active = std::abs(y.sum() - (rp.n() - rp.s())) <= tol.tol_act;
    return act;
}

struct FeasibilityResultR {
    bool feasible = false;
    MpocActivity activity;
};

inline FeasibilityResultR check_feasible_r(const RegularizedProblem& rp, const Vector& x, const Vector& y,
                                           const Tolerances& tol) {
    check_dimension(x, rp.n(), "x");
    check_dimension(y, rp.n(), "y");
    FeasibilityResultR out;
    out.activity = mpoc_activity(rp, x, y, tol);
    bool ok = true;
    for (const auto& e : rp.base.h()) ok = ok && std::abs(eval(*e, x)) <= tol.tol_feas;
    for (const auto& e : rp.base.g()) ok = ok && eval(*e, x) >= -tol.tol_feas;
    ok = ok && y.sum() >= (rp.n() - rp.s()) - tol.tol_feas;
    for (int i = 0; i < rp.n(); ++i) {
        ok = ok && std::abs(x(i) * y(i)) <= tol.tol_feas;
        ok = ok && y(i) >= -tol.tol_feas && y(i) <= 1.0 + rp.eps + tol.tol_feas;
    }
    out.feasible = ok;
    return out;
}

namespace detail {

enum class TBlock { Lambda, Mu1, Mu2, Mu3, Sigma1, Sigma2, Rho1, Rho2 };

struct TColumn {
    TBlock block;
    int index;
};

// Columns of the T-stationarity system in multiplier order. The mu2 columns
// carry a minus sign; the remaining columns are exactly the MPOC-LICQ vectors.
inline Matrix t_columns(const RegularizedProblem& rp, const ConstraintJets& jets, const MpocActivity& act,
                        std::vector<TColumn>& layout) {
    const int n = rp.n();
    layout.clear();
    for (int p = 0; p < rp.base.num_eq(); ++p) layout.push_back({TBlock::Lambda, p});
    for (int q : act.q0) layout.push_back({TBlock::Mu1, q});
    for (int i : act.ecal) layout.push_back({TBlock::Mu2, i});
    if (act.sum_active) layout.push_back({TBlock::Mu3, -1});
    for (int i : act.a01) layout.push_back({TBlock::Sigma1, i});
    for (int i : act.a10) layout.push_back({TBlock::Sigma2, i});
    for (int i : act.a00) layout.push_back({TBlock::Rho1, i});
    for (int i : act.a00) layout.push_back({TBlock::Rho2, i});

    Matrix cols = Matrix::Zero(2 * n, static_cast<Eigen::Index>(layout.size()));
    for (std::size_t k = 0; k < layout.size(); ++k) {
        const auto [block, i] = layout[k];
        const auto col = static_cast<Eigen::Index>(k);
        switch (block) {
            case TBlock::Lambda: cols.col(col).head(n) = jets.h[i].gradient; break;
            case TBlock::Mu1: cols.col(col).head(n) = jets.g[i].gradient; break;
            case TBlock::Mu2: cols(n + i, col) = -1.0; break;
            case TBlock::Mu3: cols.col(col).tail(n).setOnes(); break;
            case TBlock::Sigma1:
            case TBlock::Rho1: cols(i, col) = 1.0; break;
            case TBlock::Sigma2:
            case TBlock::Rho2: cols(n + i, col) = 1.0; break;
        }
    }
    return cols;
}

}  // namespace detail

/// MPOC-LICQ at a feasible point (x, y).
inline bool check_mpoc_licq(const RegularizedProblem& rp, const Vector& x, const Vector& y, const Tolerances& tol) {
    check_dimension(x, rp.n(), "x");
    check_dimension(y, rp.n(), "y");
    const auto act = mpoc_activity(rp, x, y, tol);
    const auto jets = evaluate_all(rp.base, x);
    std::vector<detail::TColumn> layout;
    const Matrix cols = detail::t_columns(rp, jets, act, layout);
    return rank_and_nullbasis(cols.transpose(), tol).rank == cols.cols();
}

/// Which side of the biactive disjunction holds at an index of a00.
struct BiactiveBranch {
    int index = 0;
    bool rho1_zero = false;     // |rho1| <= tol_strict
    bool rho2_nonpos = false;   // rho2 <= tol_strict
};

struct TCertificate {
    Vector x, y;
    bool feasible = false;
    bool stationary = false;
    bool unique_multipliers = false;
    MpocActivity activity;
    std::vector<Multiplier> lambda;
    std::vector<Multiplier> mu1;
    std::vector<Multiplier> mu2;
    double mu3 = 0.0;
    std::vector<Multiplier> sigma1;
    std::vector<Multiplier> sigma2;
    std::vector<Multiplier> rho1;
    std::vector<Multiplier> rho2;
    std::vector<BiactiveBranch> branches;
    double residual = 0.0;
    bool ndt[5] = {false, false, false, false, false};
    int quadratic_index = 0;
    int biactive_index = 0;
    std::optional<int> t_index;  // set when stationary and NDT1..NDT4 hold
    std::optional<std::string> degenerate_reason;
    std::vector<std::string> failed_conditions;
    Matrix tangent_basis;

    bool nondegenerate() const { return stationary && ndt[0] && ndt[1] && ndt[2] && ndt[3]; }
};

/// Certifies T-stationarity at (x, y). Multipliers are the least-squares
/// (minimum-norm when NDT1 fails) solution of the stationarity equation,
/// unless that solution violates a sign condition and another one does not.
inline TCertificate certify_t(const RegularizedProblem& rp, const Vector& x, const Vector& y, const Tolerances& tol) {
    rp.require_certifiable();
    const int n = rp.n();
    TCertificate cert;
    const auto fr = check_feasible_r(rp, x, y, tol);
    cert.x = x;
    cert.y = y;
    cert.feasible = fr.feasible;
    cert.activity = fr.activity;
    const auto& act = fr.activity;
    cert.biactive_index = static_cast<int>(act.a00.size());
    if (!cert.feasible) {
        cert.degenerate_reason = "infeasible";
        return cert;
    }

    const auto jets = evaluate_all(rp.base, x);
    std::vector<detail::TColumn> layout;
    const Matrix cols = detail::t_columns(rp, jets, act, layout);
    Vector target(2 * n);
    target << jets.f.gradient, rp.c;
    const auto solve = solve_multipliers(cols, target, tol);
    cert.residual = solve.residual_norm;
    const auto rk = rank_and_nullbasis(cols.transpose(), tol);
    cert.unique_multipliers = rk.rank == cols.cols();
    cert.tangent_basis = rk.null_basis;

    auto assign = [&](const Vector& coeffs) {
        cert.lambda.clear();
        cert.mu1.clear();
        cert.mu2.clear();
        cert.mu3 = 0.0;
        cert.sigma1.clear();
        cert.sigma2.clear();
        cert.rho1.clear();
        cert.rho2.clear();
        for (std::size_t k = 0; k < layout.size(); ++k) {
            const double v = coeffs(static_cast<Eigen::Index>(k));
            const int i = layout[k].index;
            switch (layout[k].block) {
                case detail::TBlock::Lambda: cert.lambda.push_back({i, v}); break;
                case detail::TBlock::Mu1: cert.mu1.push_back({i, v}); break;
                case detail::TBlock::Mu2: cert.mu2.push_back({i, v}); break;
                case detail::TBlock::Mu3: cert.mu3 = v; break;
                case detail::TBlock::Sigma1: cert.sigma1.push_back({i, v}); break;
                case detail::TBlock::Sigma2: cert.sigma2.push_back({i, v}); break;
                case detail::TBlock::Rho1: cert.rho1.push_back({i, v}); break;
                case detail::TBlock::Rho2: cert.rho2.push_back({i, v}); break;
            }
        }
    };
    bool signs_ok = false, disjunction_ok = false;
    auto judge = [&]() {
        signs_ok = cert.mu3 >= -tol.tol_strict;
        for (const auto& m : cert.mu1) signs_ok = signs_ok && m.value >= -tol.tol_strict;
        for (const auto& m : cert.mu2) signs_ok = signs_ok && m.value >= -tol.tol_strict;
        disjunction_ok = true;
        cert.branches.clear();
        for (std::size_t k = 0; k < act.a00.size(); ++k) {
            BiactiveBranch b{act.a00[k], std::abs(cert.rho1[k].value) <= tol.tol_strict,
                             cert.rho2[k].value <= tol.tol_strict};
            disjunction_ok = disjunction_ok && (b.rho1_zero || b.rho2_nonpos);
            cert.branches.push_back(b);
        }
    };
    assign(solve.coeffs);
    judge();

    const bool equation_holds = cert.residual <= tol.tol_feas * (1.0 + target.norm());
    if (equation_holds && !(signs_ok && disjunction_ok) && !cert.unique_multipliers) {
        // Other solutions exist. Each sign-constrained column is either kept
        // (and must have the right sign) or zeroed; each biactive index picks
        // rho1 = 0, rho2 = 0, or rho2 <= 0 with both kept.
        std::vector<std::size_t> signed_cols, rho1_cols, rho2_cols;
        for (std::size_t k = 0; k < layout.size(); ++k) {
            const auto b = layout[k].block;
            if (b == detail::TBlock::Mu1 || b == detail::TBlock::Mu2 || b == detail::TBlock::Mu3) signed_cols.push_back(k);
            if (b == detail::TBlock::Rho1) rho1_cols.push_back(k);
            if (b == detail::TBlock::Rho2) rho2_cols.push_back(k);
        }
        double combos = std::pow(2.0, static_cast<double>(signed_cols.size())) *
                        std::pow(3.0, static_cast<double>(rho1_cols.size()));
        const double residual_cap = tol.tol_feas * (1.0 + target.norm());
        for (long long code = 0; combos <= 65536.0 && code < static_cast<long long>(combos); ++code) {
            std::vector<int> sign(layout.size(), 0);  // 0 free, 1 >= 0, -1 <= 0
            std::vector<bool> drop(layout.size(), false);
            long long rest = code;
            for (std::size_t c : signed_cols) {
                if (rest % 2 == 0) drop[c] = true;
                else sign[c] = 1;
                rest /= 2;
            }
            for (std::size_t k = 0; k < rho1_cols.size(); ++k) {
                const long long opt = rest % 3;
                rest /= 3;
                if (opt == 0) drop[rho1_cols[k]] = true;
                else if (opt == 1) drop[rho2_cols[k]] = true;
                else sign[rho2_cols[k]] = -1;
            }
            std::vector<Eigen::Index> keep;
            for (std::size_t k = 0; k < layout.size(); ++k)
                if (!drop[k]) keep.push_back(static_cast<Eigen::Index>(k));
            Matrix sub(cols.rows(), static_cast<Eigen::Index>(keep.size()));
            for (std::size_t c = 0; c < keep.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = cols.col(keep[c]);
            const auto trial = solve_multipliers(sub, target, tol);
            if (trial.residual_norm > residual_cap) continue;
            Vector full = Vector::Zero(cols.cols());
            for (std::size_t c = 0; c < keep.size(); ++c) full(keep[c]) = trial.coeffs(static_cast<Eigen::Index>(c));
            bool ok = true;
            for (std::size_t k = 0; k < layout.size(); ++k)
                ok = ok && full(static_cast<Eigen::Index>(k)) * sign[k] >= -tol.tol_strict;
            if (!ok) continue;
            assign(full);
            judge();
            cert.residual = trial.residual_norm;
            break;
        }
    }
    cert.stationary = equation_holds && signs_ok && disjunction_ok;
    if (!cert.stationary) {
        cert.degenerate_reason = !equation_holds ? "stationarity residual"
                                 : !signs_ok     ? "negative inequality multiplier"
                                                 : "biactive sign condition";
        return cert;
    }

    // The y-variables enter L^R linearly, so only the x-block of the Hessian is nonzero.
    Matrix hess = Matrix::Zero(2 * n, 2 * n);
    Matrix hx = jets.f.hessian;
    for (const auto& l : cert.lambda) hx -= l.value * jets.h[l.index].hessian;
    for (const auto& m : cert.mu1) hx -= m.value * jets.g[m.index].hessian;
    hess.topLeftCorner(n, n) = hx;
    const Inertia in = restricted_inertia(hess, rk.null_basis, tol);

    cert.ndt[0] = cert.unique_multipliers;
    bool sc = !act.sum_active || cert.mu3 > tol.tol_strict;
    for (const auto& m : cert.mu1) sc = sc && m.value > tol.tol_strict;
    for (const auto& m : cert.mu2) sc = sc && m.value > tol.tol_strict;
    cert.ndt[1] = sc;
    bool biactive = true;
    for (std::size_t k = 0; k < act.a00.size(); ++k)
        biactive = biactive && std::abs(cert.rho1[k].value) > tol.tol_strict && cert.rho2[k].value < -tol.tol_strict;
    cert.ndt[2] = biactive;
    cert.ndt[3] = in.zero == 0;
    bool ndt5 = true;
    if (!act.a00.empty())
        for (const auto& sg : cert.sigma1) ndt5 = ndt5 && std::abs(sg.value) > tol.tol_strict;
    cert.ndt[4] = ndt5;
    cert.quadratic_index = in.neg;

    static constexpr const char* names[] = {"NDT1", "NDT2", "NDT3", "NDT4", "NDT5"};
    for (int c = 0; c < 5; ++c)
        if (!cert.ndt[c]) cert.failed_conditions.emplace_back(names[c]);
    if (cert.ndt[0] && cert.ndt[1] && cert.ndt[2] && cert.ndt[3])
        cert.t_index = cert.quadratic_index + cert.biactive_index;
    if (!cert.failed_conditions.empty()) cert.degenerate_reason = cert.failed_conditions.front();
    return cert;
}

/// The y-pattern every T-stationary point has under the regularization
/// assumption: n-s-1 entries at 1+eps, one at 1-(n-s-1)eps, s zeros, sum n-s.
inline bool check_y_structure(const RegularizedProblem& rp, const Vector& y, const Tolerances& tol) {
    check_dimension(y, rp.n(), "y");
    const int n = rp.n(), s = rp.s();
    std::vector<double> nonzero;
    for (int i = 0; i < n; ++i)
        if (std::abs(y(i)) > tol.tol_act) nonzero.push_back(y(i));
    if (static_cast<int>(nonzero.size()) != n - s) return false;
    std::sort(nonzero.begin(), nonzero.end(), std::greater<>());
    for (int k = 0; k < n - s - 1; ++k)
        if (std::abs(nonzero[k] - (1.0 + rp.eps)) > tol.tol_act) return false;
    if (std::abs(nonzero.back() - (1.0 - (n - s - 1) * rp.eps)) > tol.tol_act) return false;
    return std::abs(y.sum() - (n - s)) <= tol.tol_feas;
}

}  // namespace ccopt
