// ccopt: certify, lift, project and enumerate stationary points of
// cardinality-constrained problems and their regularized reformulation.
//
// Exit codes
//   certify      0 stationary and nondegenerate, 1 stationary but degenerate,
//                2 not stationary
//   lift         0 ok, 1 count or multiplier check failed, 2 not M-stationary
//   project      0 ok, 1 multiplier or index transfer failed, 2 not T-stationary
//   census       0 all applicable checks pass, 1 otherwise, 4 quadratic method
//                on a non-quadratic instance
//   check-licq   0 holds, 1 fails, 2 point infeasible
//   verify       0 all checks pass, 1 otherwise
//   any          3 input error

#include <ccopt/ccopt.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace ccopt;

constexpr int kInputError = 3;
constexpr int kNotQuadratic = 4;

struct GlobalOptions {
    std::optional<double> tol_feas, tol_act, tol_rank, tol_strict;
    bool override_assumption1 = false;
    std::string format = "human";
};

struct Context {
    std::string command;
    std::string path;
    ProblemFile file;
    Tolerances tol;
    bool override_assumption1 = false;
    std::string format;

    RegularizedProblem regularized() const {
        if (!file.regularization) throw InputError("the file has no [regularization] section");
        const auto& r = *file.regularization;
        return make_regularized(file.problem, r.c, r.eps, r.override_assumption1 || override_assumption1, tol);
    }

    const NamedPoint& point(const std::string& name) const {
        const NamedPoint* p = file.find_point(name);
        if (!p) throw InputError("no point named '" + name + "' in [points]");
        return *p;
    }

    Vector x_part(const NamedPoint& p) const { return p.values.head(file.problem.n()); }

    std::pair<Vector, Vector> xy_parts(const NamedPoint& p) const {
        const int n = file.problem.n();
        if (p.values.size() != 2 * n) throw InputError("point '" + p.name + "' must have length 2n = " + std::to_string(2 * n));
        return {p.values.head(n), p.values.tail(n)};
    }
};

Context load(const std::string& command, const std::string& path, const GlobalOptions& g) {
    Context ctx{command, path, load_problem_file(path), {}, g.override_assumption1, g.format};
    ctx.tol = ctx.file.tolerances;
    if (g.tol_feas) ctx.tol.tol_feas = *g.tol_feas;
    if (g.tol_act) ctx.tol.tol_act = *g.tol_act;
    if (g.tol_rank) ctx.tol.tol_rank = *g.tol_rank;
    if (g.tol_strict) ctx.tol.tol_strict = *g.tol_strict;
    ctx.tol.validate();
    return ctx;
}

void emit(const Context& ctx, const Json& result, int exit_code) {
    Json doc;
    doc["tool"] = "ccopt";
    doc["schema"] = 1;
    doc["command"] = ctx.command;
    doc["file"] = ctx.path;
    doc["tolerances"] = to_json(ctx.tol);
    doc["override_assumption1"] = ctx.override_assumption1;
    doc["exit_code"] = exit_code;
    doc["result"] = result;
    if (ctx.format == "machine") std::cout << doc.dump(2) << "\n";
    else std::cout << render_human(doc);
}

int cmd_certify(const Context& ctx, const std::string& point, const std::string& side) {
    const NamedPoint& p = ctx.point(point);
    if (side == "m") {
        const auto cert = certify_m(ctx.file.problem, ctx.x_part(p), ctx.tol);
        const int code = !cert.stationary ? 2 : cert.nondegenerate() ? 0 : 1;
        emit(ctx, to_json(cert), code);
        return code;
    }
    const auto rp = ctx.regularized();
    const auto [x, y] = ctx.xy_parts(p);
    const auto cert = certify_t(rp, x, y, ctx.tol);
    const int code = !cert.stationary ? 2 : (cert.nondegenerate() && cert.ndt[4]) ? 0 : 1;
    Json result = to_json(cert);
    result["assumption1_ok"] = rp.assumption1_ok;
    emit(ctx, result, code);
    return code;
}

int cmd_lift(const Context& ctx, const std::string& point) {
    const auto rp = ctx.regularized();
    const Vector x = ctx.x_part(ctx.point(point));
    LiftSet set;
    try {
        set = lift(rp, x, ctx.tol);
    } catch (const NotStationaryError& e) {
        Json result{{"kind", "lift"}, {"error", e.what()}, {"m_certificate", to_json(certify_m(rp.base, x, ctx.tol))}};
        emit(ctx, result, 2);
        return 2;
    }
    bool ok = !set.count_asserted || set.count_ok;
    for (const auto& c : set.companions)
        ok = ok && c.certificate.stationary && (!c.certificate.unique_multipliers || c.closed_form_agrees);
    const int code = ok ? 0 : 1;
    emit(ctx, to_json(set), code);
    return code;
}

int cmd_project(const Context& ctx, const std::string& point) {
    const auto rp = ctx.regularized();
    const auto [x, y] = ctx.xy_parts(ctx.point(point));
    ProjectionResult res;
    try {
        res = project(rp, x, y, ctx.tol);
    } catch (const NotStationaryError& e) {
        Json result{{"kind", "projection"}, {"error", e.what()}, {"t_certificate", to_json(certify_t(rp, x, y, ctx.tol))}};
        emit(ctx, result, 2);
        return 2;
    }
    const bool ok = res.m_certificate.stationary && res.multipliers_match.value_or(true) && res.transfer_ok;
    const int code = ok ? 0 : 1;
    emit(ctx, to_json(res), code);
    return code;
}

MultistartGrid make_grid(int per_axis, double lo, double hi) {
    MultistartGrid g;
    g.counts = {per_axis};
    g.lower = lo;
    g.upper = hi;
    return g;
}

int cmd_census(const Context& ctx, const std::string& method, const std::string& side, const MultistartGrid& grid) {
    CensusReport census;
    const bool want_t = side != "m";
    const bool want_m = side != "t";
    if (method == "quadratic") {
        if (!is_quadratic_affine(ctx.file.problem)) {
            emit(ctx, Json{{"kind", "census"}, {"error", "quadratic method needs a quadratic objective and affine constraints"}},
                 kNotQuadratic);
            return kNotQuadratic;
        }
        if (want_t) {
            const auto rp = ctx.regularized();
            census = want_m ? census_both_quadratic(rp, ctx.tol) : census_t_quadratic(rp, ctx.tol);
        } else {
            census = census_quadratic(ctx.file.problem, ctx.tol);
        }
    } else {
        census = want_t ? census_newton(ctx.regularized(), grid, ctx.tol) : census_newton(ctx.file.problem, grid, ctx.tol);
        if (!want_m) {
            census.has_m = false;
            census.m_points.clear();
            census.tally();
        }
    }
    census.instance_id = ctx.path;

    Json result = to_json(census);
    bool ok = true;
    if (ctx.file.regularization) {
        const auto rp = ctx.regularized();
        const auto counts = verify_counts(rp, census, ctx.tol);
        result["assumption1_ok"] = rp.assumption1_ok;
        result["checks"] = to_json(counts);
        ok = counts.passed();
    } else {
        result["checks"] = Json{{"complete", census.complete()}, {"passed", true}, {"checks", Json::array()}};
    }
    const int code = ok ? 0 : 1;
    emit(ctx, result, code);
    return code;
}

int cmd_check_licq(const Context& ctx, const std::string& point, const std::string& side) {
    const NamedPoint& p = ctx.point(point);
    Json result{{"kind", "licq"}, {"side", side}};
    bool feasible = false, holds = false;
    if (side == "m") {
        const Vector x = ctx.x_part(p);
        feasible = check_feasible(ctx.file.problem, x, ctx.tol).feasible;
        holds = check_cc_licq(ctx.file.problem, x, ctx.tol);
        result["x"] = to_json(x);
        result["condition"] = "CC-LICQ";
    } else {
        const auto rp = ctx.regularized();
        const auto [x, y] = ctx.xy_parts(p);
        feasible = check_feasible_r(rp, x, y, ctx.tol).feasible;
        holds = check_mpoc_licq(rp, x, y, ctx.tol);
        result["x"] = to_json(x);
        result["y"] = to_json(y);
        result["condition"] = "MPOC-LICQ";
    }
    result["feasible"] = feasible;
    result["holds"] = holds;
    const int code = !feasible ? 2 : holds ? 0 : 1;
    emit(ctx, result, code);
    return code;
}

// Census on both sides plus lift/project round trips on every nondegenerate M-point.
int cmd_verify(const Context& ctx, const MultistartGrid& grid) {
    const auto rp = ctx.regularized();
    const bool quadratic = is_quadratic_affine(rp.base);
    CensusReport census = quadratic ? census_both_quadratic(rp, ctx.tol) : census_newton(rp, grid, ctx.tol);
    census.instance_id = ctx.path;
    const auto counts = verify_counts(rp, census, ctx.tol);

    Json round_trips = Json::array();
    bool ok = counts.passed();
    if (rp.assumption1_ok) {
        for (const auto& mc : census.m_points) {
            if (!mc.nondegenerate()) continue;
            const auto set = lift(rp, mc.x, ctx.tol);
            bool trip_ok = set.count_ok;
            for (const auto& comp : set.companions) {
                const auto& tc = comp.certificate;
                trip_ok = trip_ok && tc.nondegenerate() && tc.ndt[4] && tc.t_index == mc.m_index && comp.closed_form_agrees;
                const auto pr = project(rp, set.base_point, comp.y, ctx.tol);
                trip_ok = trip_ok && pr.transfer_ok && pr.multipliers_match.value_or(false) &&
                          pr.m_certificate.m_index == mc.m_index;
            }
            ok = ok && trip_ok;
            round_trips.push_back({{"x", to_json(mc.x)},
                                   {"m_index", *mc.m_index},
                                   {"companions", set.companions.size()},
                                   {"expected", set.expected_count},
                                   {"passed", trip_ok}});
        }
    }
    Json result{{"kind", "verify"},
                {"method", quadratic ? "quadratic" : "newton"},
                {"assumption1_ok", rp.assumption1_ok},
                {"m_by_index", to_json(census)["m_side"]["by_index"]},
                {"t_by_index", to_json(census)["t_side"]["by_index"]},
                {"checks", to_json(counts)},
                {"round_trips", round_trips},
                {"passed", ok}};
    const int code = ok ? 0 : 1;
    emit(ctx, result, code);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stationarity certification for cardinality-constrained problems and their regularization"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--tol-feas", g.tol_feas, "feasibility tolerance");
    app.add_option("--tol-act", g.tol_act, "activity detection tolerance");
    app.add_option("--tol-rank", g.tol_rank, "relative singular value cutoff");
    app.add_option("--tol-strict", g.tol_strict, "strict sign margin");
    app.add_flag("--override-assumption1", g.override_assumption1,
                 "certify even when c, eps violate the regularization assumption");
    app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"human", "machine"}));

    std::string file, point, side = "m", method = "quadratic";
    int grid_points = 5;
    double box_lo = -2.0, box_hi = 2.0;

    auto* certify = app.add_subcommand("certify", "certify M- or T-stationarity of a named point");
    certify->add_option("file", file, "problem file")->required();
    certify->add_option("--point", point, "point name")->required();
    certify->add_option("--side", side, "m (CCOP) or t (regularization)")->check(CLI::IsMember({"m", "t"}));

    auto* lift_cmd = app.add_subcommand("lift", "list all T-stationary companions of an M-stationary point");
    lift_cmd->add_option("file", file, "problem file")->required();
    lift_cmd->add_option("--point", point, "point name")->required();

    auto* project_cmd = app.add_subcommand("project", "map a T-stationary point (x, y) to the CCOP");
    project_cmd->add_option("file", file, "problem file")->required();
    project_cmd->add_option("--point", point, "point name (length 2n)")->required();

    auto* census = app.add_subcommand("census", "enumerate stationary points");
    census->add_option("file", file, "problem file")->required();
    census->add_option("--method", method, "quadratic or newton")->check(CLI::IsMember({"quadratic", "newton"}));
    census->add_option("--side", side, "m, t or both")->check(CLI::IsMember({"m", "t", "both"}));
    census->add_option("--grid", grid_points, "Newton starts per axis");
    census->add_option("--box-lo", box_lo, "lower corner of the start box");
    census->add_option("--box-hi", box_hi, "upper corner of the start box");

    auto* licq = app.add_subcommand("check-licq", "test CC-LICQ (side m) or MPOC-LICQ (side t)");
    licq->add_option("file", file, "problem file")->required();
    licq->add_option("--point", point, "point name")->required();
    licq->add_option("--side", side, "m or t")->check(CLI::IsMember({"m", "t"}));

    auto* verify = app.add_subcommand("verify", "census, count checks and lift/project round trips");
    verify->add_option("file", file, "problem file")->required();
    verify->add_option("--grid", grid_points, "Newton starts per axis (non-quadratic instances)");
    verify->add_option("--box-lo", box_lo, "lower corner of the start box");
    verify->add_option("--box-hi", box_hi, "upper corner of the start box");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kInputError;
    }

    try {
        const std::string command = app.get_subcommands().front()->get_name();
        const Context ctx = load(command, file, g);
        const auto grid = make_grid(grid_points, box_lo, box_hi);
        if (command == "certify") return cmd_certify(ctx, point, side);
        if (command == "lift") return cmd_lift(ctx, point);
        if (command == "project") return cmd_project(ctx, point);
        if (command == "census") return cmd_census(ctx, method, side, grid);
        if (command == "check-licq") return cmd_check_licq(ctx, point, side);
        if (command == "verify") return cmd_verify(ctx, grid);
    } catch (const NotQuadraticError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNotQuadratic;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
    return kInputError;
}
