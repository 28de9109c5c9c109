#include <gtest/gtest.h>

#include <cmath>
#include <variant>
#include <vector>

#include "bohrlab/kk.hpp"

using namespace bohrlab;

namespace {

// Three-level nest on Z/n: B = whole group, B' a regular dilate of a
// single-frequency Bohr set of the given width, B'' a regular dilate of
// B'_{rho_pp_base}.  rho_pp records the exact parameter witnessing the
// containment of B'' in a dilate of B'.
struct Nest {
    Group g;
    BohrSet B, Bp, Bpp;
    double rho_p = 1.0, rho_pp = 0.0;
};

Nest make_nest(std::int64_t n, double width, double rho_pp_base, const RunConfig& cfg) {
    Group g = Group::parse("Z" + std::to_string(n));
    BohrSet base(g, {1}, {width});
    RegularityCertificate c1 = find_regular_dilate(base, cfg.C_regular);
    BohrSet bp = base.dilate(c1.lambda);
    BohrSet cand = bp.dilate(rho_pp_base);
    RegularityCertificate c2 = find_regular_dilate(cand, cfg.C_regular);
    Nest out{g, BohrSet::whole_group(g), bp, cand.dilate(c2.lambda), 1.0,
             rho_pp_base * c2.lambda};
    return out;
}

// random subset of a member set, walking its elements in index order
ElementSet thin_out(const ElementSet& members, double density, Rng& rng) {
    ElementSet out(members.group());
    for (std::int64_t x : members.elements())
        if (rng.next_double() < density) out.add(x);
    return out;
}

std::vector<std::int64_t> brute_pair_counts(const ElementSet& u, const ElementSet& v) {
    const Group& g = u.group();
    std::vector<std::int64_t> out(static_cast<std::size_t>(g.size()), 0);
    for (std::int64_t a : u.elements())
        for (std::int64_t b : v.elements()) ++out[static_cast<std::size_t>(g.add(a, b))];
    return out;
}

std::int64_t overlap(const ElementSet& l, const ElementSet& a, std::int64_t x) {
    return l.intersect(a.translate(x)).size();
}

std::int64_t window(const ElementSet& s, const ElementSet& ap, std::int64_t x) {
    return s.intersect(ap.translate(ap.group().neg(x))).size();
}

TEST(KKInit, FullApPicksZeroAndKeepsAllOfBpp) {
    RunConfig cfg;
    Nest n = make_nest(2003, 0.8, 0.1, cfg);
    ElementSet a = ElementSet::full(n.g);
    ElementSet ap = n.Bp.members();
    KKState st = kk_init(n.B, n.Bp, n.Bpp, a, ap, n.rho_p, n.rho_pp, cfg);
    EXPECT_EQ(st.last_x, 0);
    EXPECT_TRUE(st.S == n.Bpp.members());
    EXPECT_EQ(st.L.size(), 0);
    EXPECT_EQ(st.step_index, 0);
    EXPECT_DOUBLE_EQ(st.sigma(), 1.0);
    EXPECT_DOUBLE_EQ(st.alpha, 1.0);
}

TEST(KKInit, SingletonApIsDegenerate) {
    RunConfig cfg;
    Group g = Group::parse("Z2003");
    BohrSet base(g, {1}, {0.8});
    RegularityCertificate c1 = find_regular_dilate(base, cfg.C_regular);
    BohrSet bp = base.dilate(c1.lambda);
    // alpha' = 1/|B'|, so keeping rho'' under c1 alpha' / k forces B'' = {0}
    double rho_base = 0.9 * cfg.c1_kk / static_cast<double>(bp.member_count());
    BohrSet cand = bp.dilate(rho_base);
    RegularityCertificate c2 = find_regular_dilate(cand, cfg.C_regular);
    BohrSet bpp = cand.dilate(c2.lambda);
    ElementSet a = ElementSet::full(g);
    ElementSet ap(g);
    ap.add(bp.members().elements()[1]);
    EXPECT_THROW(kk_init(BohrSet::whole_group(g), bp, bpp, a, ap, 1.0, rho_base * c2.lambda, cfg),
                 InitFailed);
}

TEST(KKInit, MatchesExhaustiveScanOnZ3001) {
    RunConfig cfg;
    Nest n = make_nest(3001, 0.8, 0.07, cfg);
    Rng rng(11);
    ElementSet a = thin_out(n.B.members(), 0.5, rng);
    ElementSet ap = thin_out(n.Bp.members(), 0.3, rng);
    KKState st = kk_init(n.B, n.Bp, n.Bpp, a, ap, n.rho_p, n.rho_pp, cfg);

    std::int64_t best = -1, best_x = -1;
    for (std::int64_t x : n.Bp.members().elements()) {
        std::int64_t c = window(n.Bpp.members(), ap, x);
        if (c > best) {
            best = c;
            best_x = x;
        }
    }
    EXPECT_EQ(st.last_x, best_x);
    EXPECT_EQ(st.S.size(), best);
    EXPECT_GE(2.0 * st.sigma(), st.alpha_p);
    EXPECT_TRUE(st.S.subset_of(n.Bpp.members()));
}

TEST(KKStep, EmptyLTakesThePairBranch) {
    RunConfig cfg;
    Nest n = make_nest(2003, 0.8, 0.1, cfg);
    Rng rng(5);
    ElementSet a = thin_out(n.B.members(), 0.3, rng);
    ElementSet ap = thin_out(n.Bp.members(), 0.4, rng);
    KKState st = kk_init(n.B, n.Bp, n.Bpp, a, ap, n.rho_p, n.rho_pp, cfg);
    auto r = kk_step(st, cfg, 1);
    ASSERT_TRUE(std::holds_alternative<KKState>(r));
    const KKState& next = std::get<KKState>(r);
    EXPECT_EQ(next.step_index, 1);
    EXPECT_GT(next.L.size(), 0);
}

TEST(KKStep, FullDensityAJumpsPastAQuarter) {
    RunConfig cfg;
    Nest n = make_nest(2003, 0.8, 0.1, cfg);
    ElementSet a = ElementSet::full(n.g);
    ElementSet ap = n.Bp.members();
    KKState st = kk_init(n.B, n.Bp, n.Bpp, a, ap, n.rho_p, n.rho_pp, cfg);
    auto r = kk_step(st, cfg, 1);
    ASSERT_TRUE(std::holds_alternative<KKState>(r));
    EXPECT_GE(std::get<KKState>(r).lambda(), 0.25);
}

// one step of a random Z/2003 instance, re-checked by direct set arithmetic
TEST(KKStep, RandomInstanceStepVerifiedBruteForce) {
    RunConfig cfg;
    Nest n = make_nest(2003, 0.8, 0.1, cfg);
    Rng rng(23);
    ElementSet a = thin_out(n.B.members(), 0.3, rng);
    ElementSet ap = thin_out(n.Bp.members(), 0.4, rng);
    KKState st = kk_init(n.B, n.Bp, n.Bpp, a, ap, n.rho_p, n.rho_pp, cfg);

    auto r1 = kk_step(st, cfg, 1);
    ASSERT_TRUE(std::holds_alternative<KKState>(r1));
    KKState s1 = std::get<KKState>(r1);

    std::int64_t expected_x = -1;
    for (std::int64_t x : n.Bp.members().elements()) {
        ASSERT_LT(2 * overlap(st.L, a, x), a.size()); // L empty: script L empty
        bool in_s = 2 * window(st.S, ap, x) * n.Bp.member_count() >= ap.size() * st.S.size();
        if (expected_x < 0 && in_s) expected_x = x;
    }
    EXPECT_EQ(s1.last_x, expected_x);
    EXPECT_TRUE(s1.L == a.translate(expected_x).intersect(n.B.members()));
    EXPECT_GE(4 * s1.L.size(), a.size());
    EXPECT_GE(2 * s1.S.size() * n.Bp.member_count(), ap.size() * st.S.size());

    std::vector<std::int64_t> lhs = brute_pair_counts(s1.L, s1.S);
    std::vector<std::int64_t> base = brute_pair_counts(a, ap);
    for (std::size_t z = 0; z < lhs.size(); ++z) ASSERT_LE(lhs[z], base[z]) << "z = " << z;
}

// at lower density two steps fit under c1, making the second step's claims
// nontrivial (L already populated)
TEST(KKStep, SecondStepVerifiedBruteForce) {
    RunConfig cfg;
    Nest n = make_nest(2003, 0.8, 0.1, cfg);
    Rng rng(23);
    ElementSet a = thin_out(n.B.members(), 0.15, rng);
    ElementSet ap = thin_out(n.Bp.members(), 0.4, rng);
    KKState st = kk_init(n.B, n.Bp, n.Bpp, a, ap, n.rho_p, n.rho_pp, cfg);

    auto r1 = kk_step(st, cfg, 1);
    ASSERT_TRUE(std::holds_alternative<KKState>(r1));
    KKState s1 = std::get<KKState>(r1);
    ASSERT_LE(s1.lambda(), cfg.c1_kk);
    auto r2 = kk_step(s1, cfg, 2);
    ASSERT_TRUE(std::holds_alternative<KKState>(r2));
    KKState s2 = std::get<KKState>(r2);

    // the branch and the chosen x, recomputed element by element
    std::int64_t expected_x = -1;
    std::int64_t script_l = 0;
    for (std::int64_t x : n.Bp.members().elements()) {
        bool in_l = 2 * overlap(s1.L, a, x) >= a.size();
        if (in_l) ++script_l;
        bool in_s = 2 * window(s1.S, ap, x) * n.Bp.member_count() >= ap.size() * s1.S.size();
        if (expected_x < 0 && in_s && !in_l) expected_x = x;
    }
    EXPECT_LT(8 * script_l, ap.size()); // pair branch was forced
    EXPECT_EQ(s2.last_x, expected_x);

    EXPECT_TRUE(s2.L == s1.L.unite(a.translate(expected_x).intersect(n.B.members())));
    EXPECT_TRUE(s2.S == s1.S.intersect(ap.translate(n.g.neg(expected_x))));
    EXPECT_GE(4 * (s2.L.size() - s1.L.size()), a.size());
    EXPECT_GE(2 * s2.S.size() * n.Bp.member_count(), ap.size() * s1.S.size());

    std::vector<std::int64_t> lhs = brute_pair_counts(s2.L, s2.S);
    std::vector<std::int64_t> mid = brute_pair_counts(s1.L, s1.S);
    std::vector<std::int64_t> base = brute_pair_counts(a, ap);
    for (std::size_t z = 0; z < lhs.size(); ++z) {
        ASSERT_LE(lhs[z], mid[z] + base[z]) << "z = " << z;
        ASSERT_LE(lhs[z], 2 * base[z]) << "z = " << z;
    }
}

TEST(KKStep, RejectsLambdaAboveC1) {
    RunConfig cfg;
    Nest n = make_nest(2003, 0.8, 0.1, cfg);
    ElementSet a = ElementSet::full(n.g);
    ElementSet ap = n.Bp.members();
    KKState st = kk_init(n.B, n.Bp, n.Bpp, a, ap, n.rho_p, n.rho_pp, cfg);
    st.L = ElementSet::full(n.g);
    EXPECT_THROW(kk_step(st, cfg, 1), BadInput);
}

TEST(KKInit, RejectsRhoPrimeAboveCap) {
    RunConfig cfg;
    Group g = Group::parse("Z2003");
    BohrSet base(g, {1}, {1.6});
    RegularityCertificate c1 = find_regular_dilate(base, cfg.C_regular);
    BohrSet b = base.dilate(c1.lambda);
    BohrSet cand = b.dilate(0.4);
    RegularityCertificate c2 = find_regular_dilate(cand, cfg.C_regular);
    BohrSet bp = cand.dilate(c2.lambda);
    double rho_p = 0.4 * c2.lambda; // way above c1 alpha / d for alpha ~ 0.3, d ~ 1
    BohrSet cand2 = bp.dilate(0.1);
    RegularityCertificate c3 = find_regular_dilate(cand2, cfg.C_regular);
    BohrSet bpp = cand2.dilate(c3.lambda);

    Rng rng(7);
    ElementSet a = thin_out(b.members(), 0.3, rng);
    ElementSet ap = thin_out(bp.members(), 0.5, rng);
    ASSERT_GT(b.estimate_dimension(cfg.dim_grid), 0.0);
    EXPECT_THROW(kk_init(b, bp, bpp, a, ap, rho_p, 0.1 * c3.lambda, cfg), BadInput);
}

TEST(KKIterate, FullDensityTerminatesInOneStep) {
    RunConfig cfg;
    Nest n = make_nest(2003, 0.8, 0.1, cfg);
    ElementSet a = ElementSet::full(n.g);
    ElementSet ap = n.Bp.members();
    std::vector<nlohmann::json> trace;
    KKOutcome out = kk_iterate(n.B, n.Bp, n.Bpp, a, ap, n.rho_p, n.rho_pp, 0, cfg, 1, &trace);
    ASSERT_EQ(out.tag, KKOutcome::Tag::Pair);
    EXPECT_EQ(out.steps, 1);
    EXPECT_DOUBLE_EQ(out.lambda, 1.0);
    EXPECT_DOUBLE_EQ(out.domination_C, 1.0);
    EXPECT_EQ(trace.size(), 1u);
    EXPECT_EQ(trace[0]["case"], "pair");
    EXPECT_EQ(trace[0]["i"], 1);
}

TEST(KKIterate, SigmaFloorHoldsAtFullApDensity) {
    RunConfig cfg;
    Nest n = make_nest(2003, 0.8, 0.2, cfg);
    Rng rng(31);
    ElementSet a = thin_out(n.B.members(), 0.1, rng);
    ElementSet ap = n.Bp.members();
    std::vector<nlohmann::json> trace;
    KKOutcome out = kk_iterate(n.B, n.Bp, n.Bpp, a, ap, n.rho_p, n.rho_pp, 0, cfg, 2, &trace);
    ASSERT_EQ(out.tag, KKOutcome::Tag::Pair);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        double sigma = trace[i]["sigma"].get<double>();
        EXPECT_GE(sigma, std::pow(0.5, static_cast<double>(i) + 2.0) * (1.0 - 1e-9));
    }
}

// full run with the final pair recounted from scratch
TEST(KKIterate, FinalPairRecountedOnZ3001) {
    RunConfig cfg;
    Nest n = make_nest(3001, 0.8, 0.12, cfg);
    Rng rng(43);
    ElementSet a = thin_out(n.B.members(), 0.25, rng);
    ElementSet ap = thin_out(n.Bp.members(), 0.5, rng);
    std::vector<nlohmann::json> trace;
    KKOutcome out = kk_iterate(n.B, n.Bp, n.Bpp, a, ap, n.rho_p, n.rho_pp, 0, cfg, 3, &trace);
    ASSERT_EQ(out.tag, KKOutcome::Tag::Pair);
    ASSERT_TRUE(out.L && out.S);

    double alpha = a.density();
    EXPECT_LE(out.steps, static_cast<int>(std::ceil(cfg.C_iter / alpha)));
    EXPECT_GT(out.lambda, cfg.c1_kk);
    EXPECT_GE(4 * out.L->size(), a.size() * out.steps);
    double sigma = static_cast<double>(out.S->size()) / static_cast<double>(n.Bpp.member_count());
    double alpha_p = static_cast<double>(ap.size()) / static_cast<double>(n.Bp.member_count());
    EXPECT_GE(sigma, std::pow(alpha_p / 2.0, out.steps + 1) * (1.0 - 1e-9));
    EXPECT_DOUBLE_EQ(out.domination_C, out.steps * alpha);
    EXPECT_DOUBLE_EQ(out.sigma_exponent_C, alpha * (out.steps + 1));
    EXPECT_TRUE(out.L->subset_of(n.B.members()));
    EXPECT_TRUE(out.S->subset_of(n.Bpp.members()));

    std::vector<std::int64_t> lhs = brute_pair_counts(*out.L, *out.S);
    std::vector<std::int64_t> base = brute_pair_counts(a, ap);
    for (std::size_t z = 0; z < lhs.size(); ++z)
        ASSERT_LE(lhs[z], out.steps * base[z]) << "z = " << z;
}

TEST(KKIterate, TracesAreDeterministic) {
    RunConfig cfg;
    Nest n = make_nest(2003, 0.8, 0.1, cfg);
    Rng rng1(77), rng2(77);
    ElementSet a1 = thin_out(n.B.members(), 0.2, rng1);
    ElementSet ap1 = thin_out(n.Bp.members(), 0.5, rng1);
    ElementSet a2 = thin_out(n.B.members(), 0.2, rng2);
    ElementSet ap2 = thin_out(n.Bp.members(), 0.5, rng2);

    std::vector<nlohmann::json> t1, t2;
    KKOutcome o1 = kk_iterate(n.B, n.Bp, n.Bpp, a1, ap1, n.rho_p, n.rho_pp, 0, cfg, 9, &t1);
    KKOutcome o2 = kk_iterate(n.B, n.Bp, n.Bpp, a2, ap2, n.rho_p, n.rho_pp, 0, cfg, 9, &t2);
    ASSERT_EQ(t1.size(), t2.size());
    for (std::size_t i = 0; i < t1.size(); ++i) EXPECT_EQ(t1[i].dump(), t2[i].dump());
    EXPECT_EQ(o1.to_json().dump(), o2.to_json().dump());
    ASSERT_EQ(o1.tag, KKOutcome::Tag::Pair);
    EXPECT_TRUE(*o1.L == *o2.L);
    EXPECT_TRUE(*o1.S == *o2.S);
}

// an interval A makes L an interval after one step, so script L swallows B'
// and the iteration must hand over a density increment
TEST(KKIterate, StructuredADetectsIncrement) {
    RunConfig cfg;
    Nest n = make_nest(2003, 0.8, 0.1, cfg);
    ElementSet a(n.g);
    for (std::int64_t x = 0; x < 401; ++x) a.add(x);
    Rng rng(3);
    ElementSet ap = thin_out(n.Bp.members(), 0.4, rng);

    std::vector<nlohmann::json> trace;
    KKOutcome out = kk_iterate(n.B, n.Bp, n.Bpp, a, ap, n.rho_p, n.rho_pp, 0, cfg, 17, &trace);
    ASSERT_EQ(out.tag, KKOutcome::Tag::Increment);
    ASSERT_TRUE(out.evidence && out.increment);
    double alpha = a.density();
    double alpha_p = static_cast<double>(ap.size()) / static_cast<double>(n.Bp.member_count());
    EXPECT_GE(out.script_l_measure, alpha_p / 8.0);
    EXPECT_DOUBLE_EQ(out.evidence->eta, std::sqrt(alpha) / 16.0);
    EXPECT_GT(out.evidence->nu, 0.0);
    EXPECT_GE(out.increment->measured_increment, cfg.c_inc * out.evidence->nu * (1.0 - 1e-9));
    EXPECT_EQ(trace.back()["case"], "increment");
    EXPECT_TRUE(trace.back()["x"].is_null());
}

} // namespace
