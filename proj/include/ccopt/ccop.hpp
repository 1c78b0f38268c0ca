#pragma once

/**
 * @file ccop.hpp
 * @brief Cardinality-constrained problems: feasibility, CC-LICQ, M-stationarity.
 *
 *   min f(x)  s.t.  h(x) = 0,  g(x) >= 0,  ||x||_0 <= s
 *
 * Index sets and multipliers are 0-based throughout the library.
 */

#include "expr.hpp"
#include "numkern.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccopt {

using IndexSet = std::vector<int>;

/// A multiplier attached to a constraint index.
struct Multiplier {
    int index = 0;
    double value = 0.0;
};

/// Input shape errors: dimension mismatches, bad budgets, malformed vectors.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A CCOP instance.
class Problem {
public:
    Problem(int n, int s, ExprPtr f, std::vector<ExprPtr> h = {}, std::vector<ExprPtr> g = {})
        : n_(n), s_(s), f_(std::move(f)), h_(std::move(h)), g_(std::move(g)) {
        if (n_ < 1) throw InputError("dimension n must be at least 1");
        if (s_ < 0 || s_ > n_ - 1) throw InputError("sparsity budget s must lie in {0,...,n-1}");
        check_expr(*f_, "f");
        for (const auto& e : h_) check_expr(*e, "h");
        for (const auto& e : g_) check_expr(*e, "g");
    }

    /// Builds a problem from expression text.
    static Problem from_text(int n, int s, const std::string& f, const std::vector<std::string>& h = {},
                             const std::vector<std::string>& g = {}) {
        if (n < 1) throw InputError("dimension n must be at least 1");
        std::vector<ExprPtr> hp, gp;
        for (const auto& t : h) hp.push_back(parse(t, n));
        for (const auto& t : g) gp.push_back(parse(t, n));
        return Problem(n, s, parse(f, n), std::move(hp), std::move(gp));
    }

    int n() const noexcept { return n_; }
    int s() const noexcept { return s_; }
    const Expr& f() const noexcept { return *f_; }
    const std::vector<ExprPtr>& h() const noexcept { return h_; }
    const std::vector<ExprPtr>& g() const noexcept { return g_; }
    int num_eq() const noexcept { return static_cast<int>(h_.size()); }
    int num_ineq() const noexcept { return static_cast<int>(g_.size()); }

    /// Same constraints, objective multiplied by `alpha`.
    Problem scaled_objective(double alpha) const {
        return Problem(n_, s_, Expr::binary(BinaryOp::Mul, Expr::number(alpha), f_), h_, g_);
    }

private:
    void check_expr(const Expr& e, const char* what) const {
        if (max_variable(e) >= n_) throw InputError(std::string(what) + " references a variable beyond x" + std::to_string(n_));
    }

    int n_;
    int s_;
    ExprPtr f_;
    std::vector<ExprPtr> h_;
    std::vector<ExprPtr> g_;
};

inline void check_dimension(const Vector& x, int n, const char* what) {
    if (x.size() != n)
        throw InputError(std::string(what) + " has length " + std::to_string(x.size()) + ", expected " + std::to_string(n));
}

struct CcopActivity {
    IndexSet q0;  // active inequalities
    IndexSet i0;  // vanishing coordinates
    int x_norm0 = 0;
};

inline CcopActivity ccop_activity(const Problem& pr, const Vector& x, const Tolerances& tol) {
    CcopActivity act;
    for (int q = 0; q < pr.num_ineq(); ++q)
        if (std::abs(eval(*pr.g()[q], x)) <= tol.tol_act) act.q0.push_back(q);
    for (int i = 0; i < pr.n(); ++i)
        if (std::abs(x(i)) <= tol.tol_act) act.i0.push_back(i);
    act.x_norm0 = pr.n() - static_cast<int>(act.i0.size());
    return act;
}

struct FeasibilityResult {
    bool feasible = false;
    CcopActivity activity;
};

inline FeasibilityResult check_feasible(const Problem& pr, const Vector& x, const Tolerances& tol) {
    check_dimension(x, pr.n(), "point");
    FeasibilityResult out;
    out.activity = ccop_activity(pr, x, tol);
    bool ok = out.activity.x_norm0 <= pr.s();
    for (const auto& e : pr.h()) ok = ok && std::abs(eval(*e, x)) <= tol.tol_feas;
    for (const auto& e : pr.g()) ok = ok && eval(*e, x) >= -tol.tol_feas;
    out.feasible = ok;
    return out;
}

/// Jets of all constraint functions at a point.
struct ConstraintJets {
    Jet2 f;
    std::vector<Jet2> h;
    std::vector<Jet2> g;
};

inline ConstraintJets evaluate_all(const Problem& pr, const Vector& x) {
    ConstraintJets j{eval2(pr.f(), x), {}, {}};
    for (const auto& e : pr.h()) j.h.push_back(eval2(*e, x));
    for (const auto& e : pr.g()) j.g.push_back(eval2(*e, x));
    return j;
}

/// Rows: grad h_p (p in P), grad g_q (q in Q0), e_i (i in I0).
inline Matrix cc_active_matrix(const Problem& pr, const ConstraintJets& jets, const CcopActivity& act) {
    const int rows = pr.num_eq() + static_cast<int>(act.q0.size() + act.i0.size());
    Matrix a = Matrix::Zero(rows, pr.n());
    int r = 0;
    for (const auto& jh : jets.h) a.row(r++) = jh.gradient.transpose();
    for (int q : act.q0) a.row(r++) = jets.g[q].gradient.transpose();
    for (int i : act.i0) a(r++, i) = 1.0;
    return a;
}

/// CC-LICQ: the active gradients together with the unit vectors of I0 are
/// linearly independent.
inline bool check_cc_licq(const Problem& pr, const Vector& x, const Tolerances& tol) {
    check_dimension(x, pr.n(), "point");
    const auto act = ccop_activity(pr, x, tol);
    const auto jets = evaluate_all(pr, x);
    const Matrix a = cc_active_matrix(pr, jets, act);
    return rank_and_nullbasis(a, tol).rank == a.rows();
}

struct MCertificate {
    Vector x;
    bool feasible = false;
    bool stationary = false;
    bool unique_multipliers = false;
    CcopActivity activity;
    std::vector<Multiplier> lambda;  // per equality
    std::vector<Multiplier> mu;      // per active inequality
    std::vector<Multiplier> gamma;   // per vanishing coordinate
    double residual = 0.0;
    bool ndm[4] = {false, false, false, false};
    int quadratic_index = 0;
    int sparsity_index = 0;
    std::optional<int> m_index;  // set only for nondegenerate M-stationary points
    std::optional<std::string> degenerate_reason;
    std::vector<std::string> failed_conditions;
    Matrix tangent_basis;

    bool nondegenerate() const { return stationary && ndm[0] && ndm[1] && ndm[2] && ndm[3]; }
};

/// f of degree at most 2, every constraint affine.
inline bool is_quadratic_affine(const Problem& pr) {
    auto deg = polynomial_degree(pr.f());
    if (!deg || *deg > 2) return false;
    for (const auto& e : pr.h()) {
        auto d = polynomial_degree(*e);
        if (!d || *d > 1) return false;
    }
    for (const auto& e : pr.g()) {
        auto d = polynomial_degree(*e);
        if (!d || *d > 1) return false;
    }
    return true;
}

/// Certifies M-stationarity of `x` and, if stationary, nondegeneracy and M-index.
/// Infeasible or non-stationary points yield a negative certificate, not an error.
inline MCertificate certify_m(const Problem& pr, const Vector& x, const Tolerances& tol) {
    check_dimension(x, pr.n(), "point");
    MCertificate cert;
    cert.x = x;
    const auto fr = check_feasible(pr, x, tol);
    cert.feasible = fr.feasible;
    cert.activity = fr.activity;
    const auto& act = fr.activity;
    cert.sparsity_index = pr.s() - act.x_norm0;
    if (!cert.feasible) {
        cert.degenerate_reason = "infeasible";
        return cert;
    }

    const auto jets = evaluate_all(pr, x);
    const Matrix rows = cc_active_matrix(pr, jets, act);
    const auto solve = solve_multipliers(rows.transpose(), jets.f.gradient, tol);
    cert.residual = solve.residual_norm;
    const auto rk = rank_and_nullbasis(rows, tol);
    cert.unique_multipliers = rk.rank == rows.rows();
    cert.tangent_basis = rk.null_basis;

    int k = 0;
    for (int p = 0; p < pr.num_eq(); ++p) cert.lambda.push_back({p, solve.coeffs(k++)});
    for (int q : act.q0) cert.mu.push_back({q, solve.coeffs(k++)});
    for (int i : act.i0) cert.gamma.push_back({i, solve.coeffs(k++)});

    const bool equation_holds = cert.residual <= tol.tol_feas * (1.0 + jets.f.gradient.norm());
    bool signs_ok = true;
    for (const auto& m : cert.mu) signs_ok = signs_ok && m.value >= -tol.tol_strict;
    if (equation_holds && !signs_ok && !cert.unique_multipliers && act.q0.size() < 20) {
        // the min-norm solution is one of many; look for one with mu >= 0 by
        // keeping a subset of the inequality columns and zeroing the rest
        const Matrix cols = rows.transpose();
        const int ne = pr.num_eq(), nq = static_cast<int>(act.q0.size());
        const int ni = static_cast<int>(act.i0.size());
        for (unsigned mask = 0; mask < (1u << nq) && !signs_ok; ++mask) {
            std::vector<int> keep;
            for (int c = 0; c < ne; ++c) keep.push_back(c);
            for (int q = 0; q < nq; ++q)
                if (mask & (1u << q)) keep.push_back(ne + q);
            for (int c = 0; c < ni; ++c) keep.push_back(ne + nq + c);
            Matrix sub(cols.rows(), static_cast<Eigen::Index>(keep.size()));
            for (std::size_t c = 0; c < keep.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = cols.col(keep[c]);
            const auto trial = solve_multipliers(sub, jets.f.gradient, tol);
            if (trial.residual_norm > tol.tol_feas * (1.0 + jets.f.gradient.norm())) continue;
            Vector full = Vector::Zero(cols.cols());
            for (std::size_t c = 0; c < keep.size(); ++c) full(keep[c]) = trial.coeffs(static_cast<Eigen::Index>(c));
            bool ok = true;
            for (int q = 0; q < nq; ++q) ok = ok && full(ne + q) >= -tol.tol_strict;
            if (!ok) continue;
            for (int p = 0; p < ne; ++p) cert.lambda[static_cast<std::size_t>(p)].value = full(p);
            for (int q = 0; q < nq; ++q) cert.mu[static_cast<std::size_t>(q)].value = full(ne + q);
            for (int c = 0; c < ni; ++c) cert.gamma[static_cast<std::size_t>(c)].value = full(ne + nq + c);
            cert.residual = trial.residual_norm;
            signs_ok = true;
        }
    }
    cert.stationary = equation_holds && signs_ok;
    if (!cert.stationary) {
        cert.degenerate_reason = equation_holds ? "negative inequality multiplier" : "stationarity residual";
        return cert;
    }

    // D^2 L = D^2 f - sum lambda D^2 h - sum mu D^2 g
    Matrix hess = jets.f.hessian;
    for (const auto& l : cert.lambda) hess -= l.value * jets.h[l.index].hessian;
    for (const auto& m : cert.mu) hess -= m.value * jets.g[m.index].hessian;
    const Inertia in = restricted_inertia(hess, rk.null_basis, tol);

    cert.ndm[0] = cert.unique_multipliers;
    cert.ndm[1] = true;
    for (const auto& m : cert.mu) cert.ndm[1] = cert.ndm[1] && m.value > tol.tol_strict;
    cert.ndm[2] = act.x_norm0 == pr.s();
    if (!cert.ndm[2]) {
        cert.ndm[2] = true;
        for (const auto& gm : cert.gamma) cert.ndm[2] = cert.ndm[2] && std::abs(gm.value) > tol.tol_strict;
    }
    cert.ndm[3] = in.zero == 0;
    cert.quadratic_index = in.neg;

    static constexpr const char* names[] = {"NDM1", "NDM2", "NDM3", "NDM4"};
    for (int c = 0; c < 4; ++c)
        if (!cert.ndm[c]) cert.failed_conditions.emplace_back(names[c]);
    if (cert.failed_conditions.empty()) cert.m_index = cert.quadratic_index + cert.sparsity_index;
    else cert.degenerate_reason = cert.failed_conditions.front();
    return cert;
}

}  // namespace ccopt
