// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "support/oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace ccopt;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool passed = true;
    std::string detail;
    double seconds = 0.0;
    double budget = 0.0;  // 0: no runtime bound

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (passed) detail = what;
            passed = false;
        }
    }
};

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) out(i++) = d;
    return out;
}

double value_at(const std::vector<Multiplier>& ms, int index, bool& found) {
    for (const auto& m : ms)
        if (m.index == index) {
            found = true;
            return m.value;
        }
    found = false;
    return 0.0;
}

bool near(const std::vector<Multiplier>& ms, int index, double want, double tol) {
    bool found = false;
    const double v = value_at(ms, index, found);
    return found && std::abs(v - want) <= tol;
}

bool has_point(const std::vector<MCertificate>& pts, const Vector& x) {
    for (const auto& p : pts)
        if (inf_distance(p.x, x) <= 1e-8) return true;
    return false;
}

std::multiset<int> indices(const std::map<int, int>& by_index) {
    std::multiset<int> out;
    for (const auto& [k, v] : by_index)
        for (int i = 0; i < v; ++i) out.insert(k);
    return out;
}

// T-stationary certificates met anywhere in the suite, for the y-structure sweep.
struct TRecord {
    std::shared_ptr<RegularizedProblem> rp;
    TCertificate cert;
};
std::vector<TRecord> t_seen;

void record(const std::shared_ptr<RegularizedProblem>& rp, const TCertificate& c) {
    if (c.stationary && rp->assumption1_ok) t_seen.push_back({rp, c});
}

void record(const std::shared_ptr<RegularizedProblem>& rp, const CensusReport& rep) {
    for (const auto& c : rep.t_points) record(rp, c);
}

Outcome criterion1() {
    Outcome o;
    o.budget = 1.0;
    auto rp = std::make_shared<RegularizedProblem>(
        make_regularized(Problem::from_text(2, 1, "(x1-1)^2 + x2^2"), vec({0.3, 0.7}), 0.5));
    const auto c = certify_t(*rp, vec({0, 0}), vec({0, 1}), {});
    record(rp, c);
    o.require(c.stationary, "not T-stationary");
    o.require(std::abs(c.mu3 - 0.7) <= 1e-8, "mu3 != 0.7");
    o.require(near(c.sigma1, 1, 0.0, 1e-8), "sigma1_2 != 0");
    o.require(near(c.rho1, 0, -2.0, 1e-8), "rho1_1 != -2");
    o.require(near(c.rho2, 0, -0.4, 1e-8), "rho2_1 != -0.4");
    o.require(c.ndt[0] && c.ndt[1] && c.ndt[2] && c.ndt[3], "NDT1-4 not all satisfied");
    o.require(!c.ndt[4], "NDT5 unexpectedly satisfied");
    const auto p = project(*rp, vec({0, 0}), vec({0, 1}), {});
    o.require(near(p.mapped_gamma, 0, -2.0, 1e-8) && near(p.mapped_gamma, 1, 0.0, 1e-8), "projected gamma != (-2, 0)");
    o.require(near(p.m_certificate.gamma, 0, -2.0, 1e-8) && near(p.m_certificate.gamma, 1, 0.0, 1e-8),
              "re-solved gamma != (-2, 0)");
    o.require(!p.m_certificate.ndm[2] && p.m_certificate.degenerate_reason == "NDM3", "NDM3 failure not flagged");
    o.detail = o.passed ? "mu3=0.7 sigma1_2=0 rho1_1=-2 rho2_1=-0.4, NDT1-4 hold, NDT5 fails; gamma=(-2,0), NDM3 flagged"
                        : o.detail;
    return o;
}

Outcome criterion2() {
    Outcome o;
    o.budget = 5.0;
    const auto pr = Problem::from_text(2, 1, "(x1-1)^2 + (x2-1)^2");
    const auto m = census_quadratic(pr, {});
    o.require(m.m_points.size() == 3 && has_point(m.m_points, vec({1, 0})) && has_point(m.m_points, vec({0, 1})) &&
                  has_point(m.m_points, vec({0, 0})),
              "M-census is not {(1,0),(0,1),(0,0)}");
    o.require(m.m_degenerate == 0, "degenerate M-point");
    o.require(indices(m.m_by_index) == std::multiset<int>{0, 0, 1}, "M-indices != {0,0,1}");

    auto rp = std::make_shared<RegularizedProblem>(make_regularized(pr, vec({0.3, 0.7}), 0.5));
    const auto t = census_t_quadratic(*rp, {});
    record(rp, t);
    o.require(t.t_complete && t.t_points.size() == 3, "T-census does not have exactly 3 points");
    o.require(indices(t.t_by_index) == std::multiset<int>{0, 0, 1}, "T-indices != {0,0,1}");

    auto raw = std::make_shared<RegularizedProblem>(make_regularized(pr, vec({0, 0}), 0, true));
    const auto s = census_t_quadratic(*raw, {});
    int nondegenerate = 0;
    for (const auto& c : s.t_points) nondegenerate += c.nondegenerate() ? 1 : 0;
    o.require(s.t_points.size() >= 3, "override sampler found fewer than 3 T-points");
    o.require(nondegenerate == 0, "nondegenerate T-point under c=0, eps=0");
    std::ostringstream d;
    d << "M {(0,0),(0,1),(1,0)} indices {0,0,1}; T 3 points indices {0,0,1}; override: " << s.t_points.size()
      << " sampled T-points, " << nondegenerate << " nondegenerate";
    if (o.passed) o.detail = d.str();
    return o;
}

Outcome criterion3() {
    Outcome o;
    std::mt19937_64 rng(20240601);
    int instances = 0, pairs = 0, agree = 0, failing = 0;
    for (; instances < 200; ++instances) {
        const int n = support::uniform_int(rng, 2, 6), s = support::uniform_int(rng, 1, n - 1);
        const auto inst = support::licq_instance(rng, n, s);
        const auto rp = make_regularized(inst.problem, support::random_c(rng, n), support::random_eps(rng, n, s));
        o.require(check_feasible(inst.problem, inst.anchor, {}).feasible, "anchor infeasible");
        const bool cc = check_cc_licq(inst.problem, inst.anchor, {});
        failing += cc ? 0 : 1;
        for (int k = 0; k < 4; ++k) {
            const Vector y = support::random_feasible_y(rng, rp, inst.anchor, k > 0);
            o.require(check_feasible_r(rp, inst.anchor, y, {}).feasible, "generated (x, y) infeasible");
            ++pairs;
            agree += check_mpoc_licq(rp, inst.anchor, y, {}) == cc ? 1 : 0;
        }
    }
    o.require(agree == pairs, "verdicts disagree");
    std::ostringstream d;
    d << agree << "/" << pairs << " feasible pairs agree over " << instances << " instances (" << failing
      << " with CC-LICQ failing)";
    if (o.passed) o.detail = d.str();
    else o.detail += "; " + d.str();
    return o;
}

Outcome criterion4() {
    Outcome o;
    o.budget = 60.0;
    std::mt19937_64 rng(20240602);
    int instances = 0, points = 0, companions = 0, violations = 0;
    std::string first;
    auto violation = [&](const std::string& what) {
        if (violations++ == 0) first = what;
    };
    for (; instances < 60; ++instances) {
        const int n = support::uniform_int(rng, 2, 8), s = support::uniform_int(rng, 1, n - 1);
        const auto inst = support::random_instance(rng, n, s, support::uniform_int(rng, 0, 1),
                                                   support::uniform_int(rng, 0, 2), support::uniform_int(rng, 0, 1));
        auto rp = std::make_shared<RegularizedProblem>(
            make_regularized(inst.problem, support::random_c(rng, n), support::random_eps(rng, n, s)));
        for (const auto& mc : census_quadratic(inst.problem, {}).m_points) {
            if (!mc.nondegenerate()) continue;
            ++points;
            const auto set = lift(*rp, mc.x, {});
            if (set.companions.size() != binomial(n - mc.activity.x_norm0 - 1, n - s - 1)) violation("companion count");
            for (const auto& comp : set.companions) {
                ++companions;
                const auto& tc = comp.certificate;
                record(rp, tc);
                if (!tc.nondegenerate()) violation("degenerate companion");
                if (!tc.ndt[4]) violation("NDT5 fails on a companion");
                if (tc.t_index != mc.m_index) violation("TI != MI");
                const auto p = project(*rp, set.base_point, comp.y, {});
                if (inf_distance(p.m_certificate.x, mc.x) > 1e-8) violation("projection moved the point");
                if (!p.m_certificate.m_index || p.m_certificate.m_index != tc.t_index) violation("projected MI != TI");
            }
        }
    }
    std::ostringstream d;
    d << instances << " instances, " << points << " nondegenerate M-points, " << companions << " companions, "
      << violations << " violations";
    o.require(violations == 0, first);
    o.require(points >= 50, "too few nondegenerate M-points exercised");
    o.detail = o.passed ? d.str() : o.detail + "; " + d.str();
    return o;
}

Outcome criterion6() {
    Outcome o;
    std::vector<std::pair<std::string, std::shared_ptr<RegularizedProblem>>> cases;
    auto add = [&](const std::string& name, Problem pr, Vector c, double eps) {
        cases.emplace_back(name, std::make_shared<RegularizedProblem>(make_regularized(std::move(pr), c, eps)));
    };
    add("example 2", Problem::from_text(2, 1, "(x1-1)^2 + (x2-1)^2"), vec({0.3, 0.7}), 0.5);
    add("example 2 with g = x1", Problem::from_text(2, 1, "(x1-1)^2 + (x2-1)^2", {}, {"x1"}), vec({0.3, 0.7}), 0.5);
    add("n=5 s=3", Problem::from_text(5, 3, "(x1-1)^2 + (x2+1)^2 + (x3-2)^2 + (x4+2)^2 + (x5-3)^2"),
        vec({0.1, 0.2, 0.3, 0.4, 0.5}), 0.2);
    std::mt19937_64 rng(20240603);
    for (int k = 0; k < 40; ++k) {
        const int n = support::uniform_int(rng, 2, 6), s = support::uniform_int(rng, 1, n - 1);
        const auto inst = support::random_instance(rng, n, s, support::uniform_int(rng, 0, 1),
                                                   support::uniform_int(rng, 0, 2), true);
        add("random " + std::to_string(k), inst.problem, support::random_c(rng, n), support::random_eps(rng, n, s));
    }
    // strictly convex f, inequalities strictly satisfied at the origin
    for (int k = 0; k < 40; ++k) {
        const int n = support::uniform_int(rng, 2, 6), s = support::uniform_int(rng, 1, n - 1);
        Vector q1 = support::random_vector(rng, n, -2, 2);
        for (int i = 0; i < n; ++i) q1(i) = std::round(q1(i) * 1e4) / 1e4;
        const std::string f = support::quadratic_text(support::random_hessian(rng, n, true), q1, 0.0);
        std::vector<std::string> g;
        for (int q = support::uniform_int(rng, 0, 2); q > 0; --q) {
            Vector a = support::random_vector(rng, n, -1, 1);
            for (int i = 0; i < n; ++i) a(i) = std::round(a(i) * 100) / 100;
            g.push_back(support::affine_text(a, std::round(support::uniform(rng, 0.2, 2.0) * 100) / 100));
        }
        add("star " + std::to_string(k), Problem::from_text(n, s, f, {}, g), support::random_c(rng, n),
            support::random_eps(rng, n, s));
    }
    int complete = 0, connected = 0;
    for (const auto& [name, rp] : cases) {
        const auto census = census_both_quadratic(*rp, {});
        record(rp, census);
        if (!census.complete()) continue;
        ++complete;
        const int m0 = census.m_by_index.count(0) ? census.m_by_index.at(0) : 0;
        const int t0 = census.t_by_index.count(0) ? census.t_by_index.at(0) : 0;
        const int t1 = census.t_by_index.count(1) ? census.t_by_index.at(1) : 0;
        o.require(m0 == t0, name + ": #MI0 != #TI0");
        // mountain-pass bound only under its hypotheses
        if (census.m_degenerate == 0 && census.t_degenerate == 0 && mountain_pass_hypothesis(rp->base, {})) {
            ++connected;
            o.require(t1 >= t0 - 1, name + ": #TI1 < #TI0 - 1");
        }
        o.require(verify_counts(*rp, census, {}).passed(), name + ": verify_counts failed");
    }
    o.require(connected >= 20, "too few censuses with certified connected feasible set");
    if (o.passed)
        o.detail = std::to_string(complete) + " complete censuses with #MI0 = #TI0; mountain-pass bound on " +
                   std::to_string(connected) + " with certified connected feasible set";
    return o;
}

Outcome criterion5() {
    Outcome o;
    // extra probes: random feasible y above every M-point, most off the canonical pattern
    std::mt19937_64 rng(20240604);
    for (int k = 0; k < 40; ++k) {
        const int n = support::uniform_int(rng, 2, 6), s = support::uniform_int(rng, 1, n - 1);
        const auto inst = support::random_instance(rng, n, s, support::uniform_int(rng, 0, 1),
                                                   support::uniform_int(rng, 0, 2), false);
        auto rp = std::make_shared<RegularizedProblem>(
            make_regularized(inst.problem, support::random_c(rng, n), support::random_eps(rng, n, s)));
        for (const auto& mc : census_quadratic(inst.problem, {}).m_points) {
            Vector x = mc.x;
            for (int i = 0; i < n; ++i)
                if (std::abs(x(i)) <= 1e-8) x(i) = 0.0;
            for (int j = 0; j < 8; ++j) record(rp, certify_t(*rp, x, support::random_feasible_y(rng, *rp, x, j % 2), {}));
        }
    }
    MultistartGrid grid;
    grid.counts = {3};
    auto cosine = std::make_shared<RegularizedProblem>(
        make_regularized(Problem::from_text(2, 1, "(x1-1)^2 + cos(x2) + x2^2"), vec({0.3, 0.7}), 0.5));
    record(cosine, census_newton(*cosine, grid, {}));

    int violations = 0;
    for (const auto& r : t_seen) violations += check_y_structure(*r.rp, r.cert.y, {}) ? 0 : 1;
    o.require(violations == 0, std::to_string(violations) + " T-stationary points violate the y-structure");
    o.require(t_seen.size() >= 100, "too few T-stationary points seen");
    if (o.passed) o.detail = std::to_string(t_seen.size()) + " T-stationary points, 0 violations";
    return o;
}

Outcome criterion7() {
    Outcome o;
    std::mt19937_64 rng(20240605);
    int worst_case = -1;
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const int n = support::uniform_int(rng, 1, 5);
        const auto e = support::random_polynomial(rng, n, 4);
        const Vector x = support::random_vector(rng, n, -1.5, 1.5);
        const auto j = eval2(*e, x);
        auto f = [&](const Vector& p) { return eval(*e, p); };
        auto g = [&](const Vector& p) { return eval2(*e, p).gradient; };
        const double err = std::max(support::relative_error(j.gradient, support::fd_gradient(f, x, 1e-5)),
                                    support::relative_error(j.hessian, support::fd_jacobian(g, x, 1e-5)));
        if (err > worst) {
            worst = err;
            worst_case = k;
        }
    }
    o.require(worst <= 1e-6, "derivative mismatch in case " + std::to_string(worst_case));

    const Tolerances tol;
    int mismatches = 0;
    for (int k = 0; k < 200; ++k) {
        const int n = support::uniform_int(rng, 1, 8), r = support::uniform_int(rng, 1, n);
        Vector ev(n);
        for (int i = 0; i < n; ++i) {
            const int kind = support::uniform_int(rng, 0, 4);
            ev(i) = kind == 0 ? 0.0 : (kind % 2 ? 1 : -1) * support::uniform(rng, 0.1, 3);
        }
        const Matrix q = support::random_orthonormal(rng, n);
        const Matrix h = q * ev.asDiagonal() * q.transpose();
        const Matrix basis = support::random_orthonormal(rng, n).leftCols(r);
        const Matrix rot = support::random_orthonormal(rng, r);
        mismatches += restricted_inertia(h, basis, tol) == restricted_inertia(h, basis * rot, tol) ? 0 : 1;
    }
    o.require(mismatches == 0, std::to_string(mismatches) + " inertia mismatches under rebasing");
    std::ostringstream d;
    d << "1000 polynomials, worst relative derivative error " << worst << "; 200 rebasings, " << mismatches
      << " inertia mismatches";
    o.detail = o.passed ? d.str() : o.detail + "; " + d.str();
    return o;
}

Outcome timed(const std::function<Outcome()>& fn) {
    const auto start = Clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o.passed = false;
        o.detail = std::string("exception: ") + e.what();
    }
    o.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (o.budget > 0.0 && o.seconds >= o.budget) {
        o.passed = false;
        o.detail += "; runtime over budget";
    }
    return o;
}

}  // namespace

int main() {
    const char* names[] = {"Example 1 regression", "Example 2 regression", "LICQ equivalence",
                           "lift/project round trip", "y-structure", "index counts", "numerical hygiene"};
    Outcome results[7];
    results[0] = timed(criterion1);
    results[1] = timed(criterion2);
    results[2] = timed(criterion3);
    results[3] = timed(criterion4);
    results[5] = timed(criterion6);
    results[4] = timed(criterion5);  // sweeps T-points recorded by the others
    results[6] = timed(criterion7);

    bool all = true;
    for (int k = 0; k < 7; ++k) {
        const auto& r = results[k];
        all = all && r.passed;
        std::printf("%s criterion %d (%s) [%.3f s%s]: %s\n", r.passed ? "PASS" : "FAIL", k + 1, names[k], r.seconds,
                    r.budget > 0 ? (" of " + std::to_string(static_cast<int>(r.budget)) + " s").c_str() : "",
                    r.detail.c_str());
    }
    std::printf("%s\n", all ? "ALL ACCEPTANCE CRITERIA PASS" : "ACCEPTANCE FAILED");
    return all ? 0 : 1;
}
