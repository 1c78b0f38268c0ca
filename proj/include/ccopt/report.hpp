#pragma once

/**
 * @file report.hpp
 * @brief Structured reports for certificates, lifts, projections and censuses.
 *
 * Every report is an ordered JSON document. Indices are 1-based in reports
 * (x1..xn), matching the expression syntax. Values whose magnitude is below
 * 1e-12 are written as 0. The human format is an indented rendering of the
 * same document, so both formats carry identical content.
 */

#include "bridge.hpp"
#include "census.hpp"
#include "oracle.hpp"

#include <json.hpp>

#include <string>

namespace ccopt {

using Json = nlohmann::ordered_json;

inline double clean(double v) { return std::abs(v) < 1e-12 ? 0.0 : v; }

inline Json to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(clean(v(i)));
    return a;
}

inline Json to_json(const IndexSet& s) {
    Json a = Json::array();
    for (int i : s) a.push_back(i + 1);
    return a;
}

inline Json to_json(const std::vector<Multiplier>& ms) {
    Json o = Json::object();
    for (const auto& m : ms) o[std::to_string(m.index + 1)] = clean(m.value);
    return o;
}

inline Json to_json(const Tolerances& t) {
    return Json{{"tol_feas", t.tol_feas}, {"tol_act", t.tol_act}, {"tol_rank", t.tol_rank}, {"tol_strict", t.tol_strict}};
}

inline Json to_json(const MCertificate& c) {
    Json j;
    j["kind"] = "m-certificate";
    j["x"] = to_json(c.x);
    j["feasible"] = c.feasible;
    j["stationary"] = c.stationary;
    j["nondegenerate"] = c.nondegenerate();
    j["activity"] = {{"Q0", to_json(c.activity.q0)}, {"I0", to_json(c.activity.i0)}, {"x_norm0", c.activity.x_norm0}};
    j["residual"] = clean(c.residual);
    j["unique_multipliers"] = c.unique_multipliers;
    j["multipliers"] = {{"lambda", to_json(c.lambda)}, {"mu", to_json(c.mu)}, {"gamma", to_json(c.gamma)}};
    j["conditions"] = {{"NDM1", c.ndm[0]}, {"NDM2", c.ndm[1]}, {"NDM3", c.ndm[2]}, {"NDM4", c.ndm[3]}};
    j["quadratic_index"] = c.quadratic_index;
    j["sparsity_index"] = c.sparsity_index;
    j["m_index"] = c.m_index ? Json(*c.m_index) : Json(nullptr);
    j["reason"] = c.degenerate_reason ? Json(*c.degenerate_reason) : Json(nullptr);
    return j;
}

inline Json to_json(const TCertificate& c) {
    Json j;
    j["kind"] = "t-certificate";
    j["x"] = to_json(c.x);
    j["y"] = to_json(c.y);
    j["feasible"] = c.feasible;
    j["stationary"] = c.stationary;
    j["nondegenerate"] = c.nondegenerate();
    j["activity"] = {{"a00", to_json(c.activity.a00)}, {"a01", to_json(c.activity.a01)},
                     {"a10", to_json(c.activity.a10)}, {"E", to_json(c.activity.ecal)},
                     {"Q0", to_json(c.activity.q0)},   {"sum_active", c.activity.sum_active}};
    j["residual"] = clean(c.residual);
    j["unique_multipliers"] = c.unique_multipliers;
    Json branches = Json::object();
    for (const auto& b : c.branches)
        branches[std::to_string(b.index + 1)] = {{"rho1_zero", b.rho1_zero}, {"rho2_nonpositive", b.rho2_nonpos}};
    j["multipliers"] = {{"lambda", to_json(c.lambda)}, {"mu1", to_json(c.mu1)},       {"mu2", to_json(c.mu2)},
                        {"mu3", clean(c.mu3)},         {"sigma1", to_json(c.sigma1)}, {"sigma2", to_json(c.sigma2)},
                        {"rho1", to_json(c.rho1)},     {"rho2", to_json(c.rho2)}};
    j["biactive_branches"] = branches;
    j["conditions"] = {{"NDT1", c.ndt[0]}, {"NDT2", c.ndt[1]}, {"NDT3", c.ndt[2]}, {"NDT4", c.ndt[3]}, {"NDT5", c.ndt[4]}};
    j["quadratic_index"] = c.quadratic_index;
    j["biactive_index"] = c.biactive_index;
    j["t_index"] = c.t_index ? Json(*c.t_index) : Json(nullptr);
    j["reason"] = c.degenerate_reason ? Json(*c.degenerate_reason) : Json(nullptr);
    return j;
}

inline Json to_json(const LiftSet& l) {
    Json j;
    j["kind"] = "lift";
    j["x"] = to_json(l.base_point);
    j["m_certificate"] = to_json(l.base_certificate);
    j["ibar"] = l.ibar + 1;
    j["expected_count"] = l.expected_count;
    j["count"] = l.companions.size();
    j["count_asserted"] = l.count_asserted;
    j["count_ok"] = l.count_ok;
    Json comps = Json::array();
    for (const auto& c : l.companions) {
        Json cj;
        cj["Ebar"] = to_json(c.ebar);
        cj["y"] = to_json(c.y);
        cj["closed_form_agrees"] = c.closed_form_agrees;
        cj["t_certificate"] = to_json(c.certificate);
        comps.push_back(cj);
    }
    j["companions"] = comps;
    return j;
}

inline Json to_json(const ProjectionResult& p) {
    Json j;
    j["kind"] = "projection";
    j["t_certificate"] = to_json(p.t_certificate);
    j["mapped_gamma"] = to_json(p.mapped_gamma);
    j["multipliers_match"] = p.multipliers_match ? Json(*p.multipliers_match) : Json(nullptr);
    j["transfer_asserted"] = p.transfer_asserted;
    j["transfer_ok"] = p.transfer_ok;
    j["m_certificate"] = to_json(p.m_certificate);
    return j;
}

inline Json to_json(const CountReport& r) {
    Json j;
    j["complete"] = r.complete;
    j["passed"] = r.passed();
    Json checks = Json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"applicable", c.applicable}, {"passed", c.passed}, {"detail", c.detail}});
    j["checks"] = checks;
    return j;
}

inline Json to_json(const CensusReport& r) {
    Json j;
    j["kind"] = "census";
    j["instance"] = r.instance_id;
    j["method"] = r.method;
    auto by_index = [](const std::map<int, int>& m) {
        Json o = Json::object();
        for (const auto& [k, v] : m) o[std::to_string(k)] = v;
        return o;
    };
    if (r.has_m) {
        Json pts = Json::array();
        for (const auto& c : r.m_points) pts.push_back(to_json(c));
        j["m_side"] = {{"complete", r.m_complete},
                       {"count", r.m_points.size()},
                       {"by_index", by_index(r.m_by_index)},
                       {"degenerate", r.m_degenerate},
                       {"points", pts}};
    }
    if (r.has_t) {
        Json pts = Json::array();
        for (const auto& c : r.t_points) pts.push_back(to_json(c));
        j["t_side"] = {{"complete", r.t_complete},
                       {"count", r.t_points.size()},
                       {"by_index", by_index(r.t_by_index)},
                       {"degenerate", r.t_degenerate},
                       {"points", pts}};
    }
    j["log"] = r.log;
    return j;
}

namespace detail {

inline bool is_flat(const Json& j) {
    if (!j.is_array()) return false;
    for (const auto& e : j)
        if (e.is_structured()) return false;
    return true;
}

inline void render(const Json& j, int depth, std::string& out) {
    const std::string pad(static_cast<std::size_t>(2 * depth), ' ');
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) {
            out += pad + k + ":";
            if (v.is_structured() && !is_flat(v) && !v.empty()) {
                out += "\n";
                render(v, depth + 1, out);
            } else {
                out += " " + v.dump() + "\n";
            }
        }
    } else if (j.is_array()) {
        std::size_t k = 0;
        for (const auto& v : j) {
            out += pad + "- [" + std::to_string(k++) + "]";
            if (v.is_structured() && !is_flat(v)) {
                out += "\n";
                render(v, depth + 1, out);
            } else {
                out += " " + v.dump() + "\n";
            }
        }
    } else {
        out += pad + j.dump() + "\n";
    }
}

}  // namespace detail

/// Indented key: value rendering of a report document.
inline std::string render_human(const Json& j) {
    std::string out;
    detail::render(j, 0, out);
    return out;
}

}  // namespace ccopt
