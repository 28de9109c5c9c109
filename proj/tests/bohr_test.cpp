#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bohrlab/bohr.hpp"
#include "bohrlab/rng.hpp"

using namespace bohrlab;

namespace {

// Random Bohr set with nonzero frequencies and widths away from thresholds.
BohrSet random_bohr(const Group& g, std::size_t rank, Rng& rng,
                    double wlo = 0.2, double whi = 2.0) {
    std::vector<std::int64_t> freq;
    std::vector<double> width;
    for (std::size_t r = 0; r < rank; ++r) {
        freq.push_back(1 + static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(g.size() - 1))));
        width.push_back(wlo + (whi - wlo) * rng.next_double());
    }
    return BohrSet(g, freq, width);
}

} // namespace

TEST(BohrMembers, EmptyFrequencySetIsWholeGroup) {
    Group g = Group::parse("Z30");
    BohrSet b = BohrSet::whole_group(g);
    EXPECT_EQ(b.member_count(1.0), 30);
    EXPECT_EQ(b.member_count(0.001), 30);
    EXPECT_EQ(b.rank(), 0u);
}

TEST(BohrMembers, ClampedWidthsCoverEverything) {
    Group g = Group::parse("Z17");
    BohrSet b(g, {1, 5}, {2.0, 2.0});
    EXPECT_EQ(b.member_count(1.0), 17);
    EXPECT_EQ(b.member_count(7.0), 17); // clamp holds for any rho
}

TEST(BohrMembers, KnownSmallExample) {
    // width 0.6 on Z/12: 2 sin(pi/12) = 0.5176 is in, 2 sin(2pi/12) = 1 is out
    Group g = Group::parse("Z12");
    BohrSet b(g, {1}, {0.6});
    const ElementSet& m = b.members(1.0);
    EXPECT_EQ(m.size(), 3);
    EXPECT_TRUE(m.contains(0));
    EXPECT_TRUE(m.contains(1));
    EXPECT_TRUE(m.contains(11));
}

TEST(BohrMembers, RejectsNonPositiveRho) {
    Group g = Group::parse("Z12");
    BohrSet b(g, {1}, {0.6});
    EXPECT_THROW(b.members(0.0), BadInput);
    EXPECT_THROW(b.members(-1.0), BadInput);
    EXPECT_THROW(b.dilate(0.0), BadInput);
}

TEST(BohrMembers, ContainsZeroAndSymmetric) {
    Rng rng(11);
    Group g = Group::parse("Z720");
    for (int rep = 0; rep < 20; ++rep) {
        BohrSet b = random_bohr(g, 1 + rep % 3, rng);
        for (double rho : {0.1, 0.37, 1.0, 1.9}) {
            const ElementSet& m = b.members(rho);
            ASSERT_TRUE(m.contains(0));
            for (std::int64_t x : m.elements()) ASSERT_TRUE(m.contains(g.neg(x)));
        }
    }
}

TEST(BohrMembers, MonotoneInRhoAndWidth) {
    Rng rng(23);
    Group g = Group::parse("Z1999");
    for (int rep = 0; rep < 10; ++rep) {
        BohrSet b = random_bohr(g, 2, rng);
        std::int64_t prev = 0;
        for (double rho : {0.05, 0.1, 0.2, 0.5, 0.9, 1.0, 1.5, 2.0, 4.0}) {
            const ElementSet& m = b.members(rho);
            ASSERT_GE(m.size(), prev);
            ASSERT_TRUE(b.members(rho * 0.5).subset_of(m));
            prev = m.size();
        }
        ASSERT_EQ(b.members(1e9).size(), g.size()); // every width clamps at 2

        // pointwise larger widths give supersets
        std::vector<double> wider = b.width();
        for (double& w : wider) w = std::min(2.0, w * 1.25);
        BohrSet b2(g, b.freq(), wider);
        ASSERT_TRUE(b.members(1.0).subset_of(b2.members(1.0)));
    }
}

TEST(BohrDilate, IdentityAndComposition) {
    Rng rng(37);
    Group g = Group::parse("Z1009");
    for (int rep = 0; rep < 50; ++rep) {
        BohrSet b = random_bohr(g, 1 + rep % 3, rng, 0.2, 1.9);
        EXPECT_TRUE(b.dilate(1.0).members(1.0) == b.members(1.0));
        // multiplicativity below the clamp
        double r1 = 0.3, r2 = 0.6;
        EXPECT_TRUE(b.dilate(r1).dilate(r2).members(1.0) == b.members(r1 * r2));
        // nesting over a rho grid
        for (double rho : {0.1, 0.25, 0.5, 0.75, 1.0})
            EXPECT_TRUE(b.members(rho * 0.5).subset_of(b.members(rho)));
    }
}

TEST(BohrBeta, NormalizationAndSpecialCases) {
    Group g = Group::parse("Z100");
    BohrSet whole = BohrSet::whole_group(g);
    DensityFn beta = whole.beta(1.0);
    for (std::int64_t x = 0; x < g.size(); ++x) EXPECT_DOUBLE_EQ(beta[x].real(), 1.0);

    BohrSet tight(g, {1}, {0.01});
    EXPECT_EQ(tight.member_count(1.0), 1); // just {0}
    DensityFn point = tight.beta(1.0);
    EXPECT_DOUBLE_EQ(point[0].real(), 100.0);

    Rng rng(5);
    BohrSet b = random_bohr(g, 2, rng);
    EXPECT_NEAR(integrate(b.beta(0.8)).real(), 1.0, 1e-12);
}

TEST(BohrDimension, SpecialCasesAndMonotonicity) {
    Group g = Group::parse("Z1009");
    EXPECT_DOUBLE_EQ(BohrSet::whole_group(g).estimate_dimension(default_dim_grid()), 0.0);

    BohrSet b(g, {1}, {0.5});
    double d = b.estimate_dimension(default_dim_grid());
    EXPECT_GT(d, 0.0);
    EXPECT_LE(d, 3.0);

    // fewer grid points can only lower the max
    double d_small = b.estimate_dimension({0.25, 0.5});
    EXPECT_LE(d_small, d + 1e-15);

    EXPECT_THROW(b.estimate_dimension({}), BadInput);
    EXPECT_THROW(b.estimate_dimension({1.5}), BadInput);
}

TEST(RegularDilate, WholeGroupPassesImmediately) {
    Group g = Group::parse("Z101");
    RegularityCertificate cert = find_regular_dilate(BohrSet::whole_group(g), 64.0);
    EXPECT_DOUBLE_EQ(cert.lambda, 0.5);
    EXPECT_DOUBLE_EQ(cert.dimension_d, 0.0);
    for (double r : cert.ratio_bounds) EXPECT_DOUBLE_EQ(r, 1.0);
}

TEST(RegularDilate, RandomRankTwoFoundAndRevalidates) {
    Rng rng(541);
    Group g = Group::parse("Z4001");
    for (int rep = 0; rep < 5; ++rep) {
        BohrSet b = random_bohr(g, 2, rng);
        RegularityCertificate cert = find_regular_dilate(b, 64.0);
        ASSERT_GE(cert.lambda, 0.5);
        ASSERT_LT(cert.lambda, 1.0);
        ASSERT_EQ(cert.eta_grid.size(), cert.ratio_bounds.size());
        for (std::size_t i = 0; i < cert.eta_grid.size(); ++i)
            ASSERT_TRUE(regularity_ratio_ok(cert.ratio_bounds[i], cert.constant_C,
                                            cert.dimension_d, cert.eta_grid[i]));
        ASSERT_TRUE(revalidate_certificate(b, cert));
    }
}

TEST(RegularDilate, FlatProfilePassesAnyC) {
    // B_lambda = {0} for every lambda in the grid: all ratios exactly 1.
    Group g = Group::parse("Z64");
    BohrSet b(g, {1}, {0.05});
    RegularityCertificate cert = find_regular_dilate(b, 1.0);
    EXPECT_DOUBLE_EQ(cert.lambda, 0.5);
    for (double r : cert.ratio_bounds) EXPECT_DOUBLE_EQ(r, 1.0);
}

TEST(RegularDilate, ThrowsWhenGridTooStrict) {
    // On Z/8 with width 2 the count drops from 3 to 1 between lambda = 0.5
    // and lambda * (1 - 0.48): ratio 1/3 is below the C = 1 lower band.
    Group g = Group::parse("Z8");
    BohrSet b(g, {1}, {2.0});
    EXPECT_THROW(find_regular_dilate(b, 1.0, {-0.48}, {0.5}), NoRegularDilate);
}

TEST(BohrScaled, MatchesElementwiseScaling) {
    Group g = Group::parse("Z35");
    BohrSet b(g, {3}, {0.7});
    for (std::int64_t k : {2, 3, 4, 8}) {
        ElementSet want = b.members(1.0).scaled(k);
        ElementSet got = b.scaled(k).members(1.0);
        ASSERT_TRUE(got == want) << "k=" << k;
    }
    Group even = Group::parse("Z8");
    EXPECT_THROW(BohrSet(even, {1}, {0.7}).scaled(2), BadInput);
}

TEST(BohrJson, RoundTrip) {
    Group g = Group::parse("Z4xZ9");
    BohrSet b(g, {g.index_of(std::vector<std::int64_t>{1, 2}),
                  g.index_of(std::vector<std::int64_t>{0, 5})},
              {0.8, 1.3});
    nlohmann::json j = b.to_json();
    EXPECT_EQ(j["group"], "Z4xZ9");
    BohrSet back = BohrSet::from_json(j);
    EXPECT_TRUE(back.members(1.0) == b.members(1.0));
    EXPECT_TRUE(back.members(0.4) == b.members(0.4));
    EXPECT_THROW(BohrSet::from_json(nlohmann::json{{"group", "Z4"}}), BadInput);
}

TEST(BohrSetCtor, Validation) {
    Group g = Group::parse("Z12");
    EXPECT_THROW(BohrSet(g, {1}, {0.0}), BadInput);
    EXPECT_THROW(BohrSet(g, {1}, {2.5}), BadInput);
    EXPECT_THROW(BohrSet(g, {1, 2}, {0.5}), BadInput);
    EXPECT_THROW(BohrSet(g, {12}, {0.5}), BadInput);
    // duplicate frequencies collapse to the tighter width
    BohrSet dup(g, {1, 1}, {0.6, 1.4});
    EXPECT_EQ(dup.rank(), 1u);
    EXPECT_EQ(dup.member_count(1.0), 3);
}
