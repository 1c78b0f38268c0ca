#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace ccopt;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) out(i++) = d;
    return out;
}

double value_at(const std::vector<Multiplier>& ms, int index) {
    for (const auto& m : ms)
        if (m.index == index) return m.value;
    ADD_FAILURE() << "no multiplier for index " << index;
    return 0.0;
}

RegularizedProblem example1() {
    return make_regularized(Problem::from_text(2, 1, "(x1-1)^2 + x2^2"), vec({0.3, 0.7}), 0.5);
}

RegularizedProblem example2() {
    return make_regularized(Problem::from_text(2, 1, "(x1-1)^2 + (x2-1)^2"), vec({0.3, 0.7}), 0.5);
}

RegularizedProblem sparse5() {
    return make_regularized(
        Problem::from_text(5, 3, "(x1-1)^2 + (x2+1)^2 + (x3-2)^2 + (x4+2)^2 + (x5-3)^2"),
        vec({0.1, 0.2, 0.3, 0.4, 0.5}), 0.2);
}

}  // namespace

TEST(Subsets, LexicographicEnumeration) {
    std::vector<IndexSet> seen;
    detail::for_each_subset({1, 3, 4, 7}, 2, [&](const IndexSet& s) { seen.push_back(s); });
    const std::vector<IndexSet> want{{1, 3}, {1, 4}, {1, 7}, {3, 4}, {3, 7}, {4, 7}};
    EXPECT_EQ(seen, want);
    seen.clear();
    detail::for_each_subset({2, 5}, 0, [&](const IndexSet& s) { seen.push_back(s); });
    ASSERT_EQ(seen.size(), 1u);
    EXPECT_TRUE(seen[0].empty());
    seen.clear();
    detail::for_each_subset({2}, 2, [&](const IndexSet& s) { seen.push_back(s); });
    EXPECT_TRUE(seen.empty());
}

TEST(Lift, ExampleTwoOrigin) {
    const auto set = lift(example2(), vec({0, 0}), {});
    EXPECT_EQ(set.ibar, 1);
    EXPECT_EQ(set.expected_count, 1u);
    ASSERT_EQ(set.companions.size(), 1u);
    const auto& comp = set.companions[0];
    EXPECT_TRUE(comp.ebar.empty());
    EXPECT_EQ(comp.y, vec({0, 1}));
    EXPECT_TRUE(comp.certificate.nondegenerate());
    EXPECT_EQ(comp.certificate.t_index, 1);
    EXPECT_TRUE(comp.closed_form_agrees);
    EXPECT_TRUE(set.count_asserted && set.count_ok);
}

TEST(Lift, ExampleTwoMinimizers) {
    for (const auto& x : {vec({1, 0}), vec({0, 1})}) {
        const auto set = lift(example2(), x, {});
        ASSERT_EQ(set.companions.size(), 1u);
        EXPECT_EQ(set.companions[0].certificate.t_index, 0);
        EXPECT_TRUE(check_y_structure(example2(), set.companions[0].y, {}));
    }
}

TEST(Lift, SparseFiveHasThreeCompanions) {
    const auto rp = sparse5();
    const auto set = lift(rp, vec({1, 0, 0, 0, 0}), {});
    EXPECT_EQ(set.base_certificate.m_index, 2);
    EXPECT_EQ(set.expected_count, 3u);
    ASSERT_EQ(set.companions.size(), 3u);
    EXPECT_EQ(set.ibar, 4);
    std::set<std::vector<double>> distinct;
    for (const auto& comp : set.companions) {
        EXPECT_TRUE(check_y_structure(rp, comp.y, {}));
        EXPECT_EQ(comp.y(0), 0.0);
        EXPECT_TRUE(comp.certificate.nondegenerate());
        EXPECT_TRUE(comp.certificate.ndt[4]);
        EXPECT_EQ(comp.certificate.t_index, 2);
        EXPECT_TRUE(comp.closed_form_agrees) << comp.multiplier_deviation;
        distinct.insert(std::vector<double>(comp.y.data(), comp.y.data() + comp.y.size()));
    }
    EXPECT_EQ(distinct.size(), 3u);
}

TEST(Lift, Errors) {
    EXPECT_THROW(lift(example2(), vec({0.5, 0}), {}), NotStationaryError);
    const auto override = make_regularized(example2().base, vec({0, 0}), 0, true);
    EXPECT_THROW(lift(override, vec({0, 0}), {}), AssumptionError);
}

TEST(Lift, DegenerateBaseReportsBothCounts) {
    const auto set = lift(example1(), vec({0, 0}), {});
    EXPECT_FALSE(set.count_asserted);
    EXPECT_EQ(set.expected_count, 1u);
    ASSERT_EQ(set.companions.size(), 1u);
    EXPECT_FALSE(set.companions[0].certificate.ndt[4]);
}

TEST(Lift, SnapsTinyCoordinates) {
    const auto set = lift(example2(), vec({1, 1e-12}), {});
    EXPECT_EQ(set.base_point(1), 0.0);
    ASSERT_EQ(set.companions.size(), 1u);
    EXPECT_TRUE(set.companions[0].certificate.nondegenerate());
}

TEST(Project, ExampleOne) {
    const auto p = project(example1(), vec({0, 0}), vec({0, 1}), {});
    EXPECT_NEAR(value_at(p.mapped_gamma, 0), -2.0, 1e-8);
    EXPECT_NEAR(value_at(p.mapped_gamma, 1), 0.0, 1e-8);
    EXPECT_TRUE(p.m_certificate.stationary);
    EXPECT_FALSE(p.m_certificate.ndm[2]);
    EXPECT_EQ(p.m_certificate.degenerate_reason, "NDM3");
    EXPECT_FALSE(p.transfer_asserted);
    EXPECT_EQ(p.multipliers_match, true);
}

TEST(Project, ExampleTwo) {
    const auto p = project(example2(), vec({0, 0}), vec({0, 1}), {});
    EXPECT_TRUE(p.transfer_asserted);
    EXPECT_TRUE(p.transfer_ok);
    EXPECT_EQ(p.m_certificate.m_index, 1);
    EXPECT_EQ(p.multipliers_match, true);
    EXPECT_THROW(project(example2(), vec({0.5, 0}), vec({0, 1}), {}), NotStationaryError);
}

TEST(RoundTrip, RandomInstances) {
    std::mt19937_64 rng(41);
    int trips = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const int n = support::uniform_int(rng, 2, 6), s = support::uniform_int(rng, 1, n - 1);
        const auto inst = support::random_instance(rng, n, s, support::uniform_int(rng, 0, 1),
                                                   support::uniform_int(rng, 0, 2), false);
        const auto rp = make_regularized(inst.problem, support::random_c(rng, n), support::random_eps(rng, n, s));
        for (const auto& mc : census_quadratic(inst.problem, {}).m_points) {
            if (!mc.nondegenerate()) continue;
            const auto set = lift(rp, mc.x, {});
            EXPECT_EQ(set.companions.size(), binomial(n - mc.activity.x_norm0 - 1, n - s - 1));
            for (const auto& comp : set.companions) {
                EXPECT_TRUE(comp.certificate.nondegenerate());
                EXPECT_TRUE(comp.certificate.ndt[4]);
                EXPECT_EQ(comp.certificate.t_index, mc.m_index);
                EXPECT_TRUE(comp.closed_form_agrees) << comp.multiplier_deviation;
                const auto p = project(rp, set.base_point, comp.y, {});
                EXPECT_TRUE(p.transfer_ok);
                EXPECT_EQ(p.multipliers_match, true);
                EXPECT_LE(inf_distance(p.m_certificate.x, mc.x), 1e-8);
                ++trips;
            }
        }
    }
    EXPECT_GT(trips, 30);
}

TEST(VerifyCounts, ExampleTwo) {
    const auto rp = example2();
    const auto census = census_both_quadratic(rp, {});
    const auto rep = verify_counts(rp, census, {});
    EXPECT_TRUE(rep.complete);
    EXPECT_TRUE(rep.passed());
    for (const auto& c : rep.checks) {
        if (c.name == "unregularized degeneracy") EXPECT_FALSE(c.applicable);
        else EXPECT_TRUE(c.applicable) << c.name;
    }
}

TEST(VerifyCounts, DetectsMissingCompanion) {
    const auto rp = example2();
    auto census = census_both_quadratic(rp, {});
    ASSERT_FALSE(census.t_points.empty());
    census.t_points.pop_back();
    census.tally();
    const auto rep = verify_counts(rp, census, {});
    EXPECT_FALSE(rep.passed());
}

TEST(VerifyCounts, UnregularizedDegeneracy) {
    const auto rp = make_regularized(example2().base, vec({0, 0}), 0, true);
    const auto census = census_t_quadratic(rp, {});
    EXPECT_FALSE(census.complete());
    const auto rep = verify_counts(rp, census, {});
    bool seen = false;
    for (const auto& c : rep.checks)
        if (c.name == "unregularized degeneracy") {
            seen = true;
            EXPECT_TRUE(c.applicable);
            EXPECT_TRUE(c.passed) << c.detail;
        }
    EXPECT_TRUE(seen);
    EXPECT_TRUE(rep.passed());
}

TEST(VerifyCounts, MountainPassHypothesis) {
    EXPECT_TRUE(mountain_pass_hypothesis(example2().base, {}));
    EXPECT_TRUE(mountain_pass_hypothesis(Problem::from_text(2, 1, "x1^2 + x2^2", {}, {"x1 + 1"}), {}));
    // two isolated feasible points
    EXPECT_FALSE(mountain_pass_hypothesis(Problem::from_text(2, 1, "x1^2 + x2^2", {"x1 + x2 - 1"}), {}));
    EXPECT_FALSE(mountain_pass_hypothesis(Problem::from_text(2, 1, "x1^2 + x2^2", {}, {"x1 + x2 - 1"}), {}));
    EXPECT_FALSE(mountain_pass_hypothesis(Problem::from_text(2, 1, "x1^2 - x2^2"), {}));
    EXPECT_FALSE(mountain_pass_hypothesis(Problem::from_text(2, 1, "x1^4 + x2^2"), {}));
}
