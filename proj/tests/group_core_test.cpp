#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "bohrlab/density.hpp"
#include "bohrlab/fourier.hpp"
#include "bohrlab/group.hpp"
#include "bohrlab/rng.hpp"
#include "bohrlab/sets.hpp"

using namespace bohrlab;

namespace {

DensityFn random_fn(const Group& g, Rng& rng, bool complex_valued = true) {
    DensityFn f(g);
    for (std::int64_t x = 0; x < g.size(); ++x) {
        double re = 2.0 * rng.next_double() - 1.0;
        double im = complex_valued ? 2.0 * rng.next_double() - 1.0 : 0.0;
        f[x] = cplx(re, im);
    }
    return f;
}

double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST(Group, ProductSizes) {
    EXPECT_EQ(Group::product({3, 3}).size(), 9);
    EXPECT_EQ(Group::product({1}).size(), 1);
    EXPECT_EQ(Group::product({2, 3, 5}).size(), 30);
    EXPECT_THROW(Group::product({0, 2}), BadInput);
    EXPECT_THROW(Group::product({-3}), BadInput);
    EXPECT_THROW(Group::product({1 << 11, 1 << 11}), SizeCapExceeded);
}

TEST(Group, LexicographicEnumeration) {
    // Independent nested-loop oracle for the index <-> coords bijection.
    Group g = Group::product({2, 3, 5});
    std::int64_t idx = 0;
    for (std::int64_t a = 0; a < 2; ++a)
        for (std::int64_t b = 0; b < 3; ++b)
            for (std::int64_t c = 0; c < 5; ++c) {
                std::vector<std::int64_t> coords = {a, b, c};
                EXPECT_EQ(g.index_of(coords), idx);
                EXPECT_EQ(g.coords_of(idx), coords);
                ++idx;
            }
    EXPECT_EQ(idx, g.size());
}

TEST(Group, ParseAndPrint) {
    EXPECT_EQ(Group::parse("Z3^4").size(), 81);
    EXPECT_EQ(Group::parse("Z3^4").str(), "Z3^4");
    EXPECT_EQ(Group::parse("Z101").str(), "Z101");
    EXPECT_EQ(Group::parse("Z4xZ9").orders(), (std::vector<std::int64_t>{4, 9}));
    EXPECT_EQ(Group::parse("z10^2Xz7").str(), "Z10^2xZ7");
    EXPECT_THROW(Group::parse(""), BadInput);
    EXPECT_THROW(Group::parse("Q8"), BadInput);
    EXPECT_THROW(Group::parse("Z"), BadInput);
    EXPECT_THROW(Group::parse("Z4x"), BadInput);
    EXPECT_THROW(Group::parse("Z4^"), BadInput);
}

TEST(Group, Arithmetic) {
    Group g = Group::parse("Z4xZ9");
    std::int64_t a = g.index_of(std::vector<std::int64_t>{3, 7});
    std::int64_t b = g.index_of(std::vector<std::int64_t>{2, 5});
    EXPECT_EQ(g.coords_of(g.add(a, b)), (std::vector<std::int64_t>{1, 3}));
    EXPECT_EQ(g.coords_of(g.neg(a)), (std::vector<std::int64_t>{1, 2}));
    EXPECT_EQ(g.add(a, g.neg(a)), 0);
    EXPECT_EQ(g.coords_of(g.scale(2, a)), (std::vector<std::int64_t>{2, 5}));
    EXPECT_EQ(g.scale(-1, a), g.neg(a));
    // negative coordinates wrap
    EXPECT_EQ(g.index_of(std::vector<std::int64_t>{-1, -2}), g.index_of(std::vector<std::int64_t>{3, 7}));
}

TEST(Group, InvMod) {
    EXPECT_EQ(inv_mod(2, 9), 5);
    EXPECT_EQ(inv_mod(3, 7), 5);
    EXPECT_THROW(inv_mod(2, 4), BadInput);
}

TEST(CharEval, KnownValues) {
    auto chi = [](const Group& g, std::int64_t gamma, std::int64_t x) {
        return std::polar(1.0, 2.0 * std::numbers::pi * g.phase(gamma, x));
    };
    Group z2 = Group::parse("Z2");
    EXPECT_NEAR(std::abs(chi(z2, 1, 1) - cplx(-1.0, 0.0)), 0.0, 1e-12);
    Group z4 = Group::parse("Z4");
    EXPECT_NEAR(std::abs(chi(z4, 1, 1) - cplx(0.0, 1.0)), 0.0, 1e-12);
    Group g = Group::parse("Z4xZ9");
    for (std::int64_t x = 0; x < g.size(); x += 5) {
        EXPECT_NEAR(std::abs(chi(g, 0, x) - cplx(1.0, 0.0)), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(chi(g, 7, x)), 1.0, 1e-12);
    }
}

TEST(CharEval, OrthogonalityExhaustive) {
    // (1/N) sum_x gamma(x) conj(gamma'(x)) = [gamma = gamma'] for all pairs,
    // on every group of size <= 64 we care about.
    for (const char* spec : {"Z12", "Z2^3xZ3", "Z64", "Z5xZ7"}) {
        Group g = Group::parse(spec);
        for (std::int64_t ga = 0; ga < g.size(); ++ga)
            for (std::int64_t gb = 0; gb < g.size(); ++gb) {
                cplx s(0.0, 0.0);
                for (std::int64_t x = 0; x < g.size(); ++x)
                    s += std::polar(1.0, 2.0 * std::numbers::pi * (g.phase(ga, x) - g.phase(gb, x)));
                s /= static_cast<double>(g.size());
                cplx want = (ga == gb) ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
                ASSERT_NEAR(std::abs(s - want), 0.0, 1e-10)
                    << spec << " gamma=" << ga << " gamma'=" << gb;
            }
    }
}

TEST(Fourier, ConstantAndPointMass) {
    Group g = Group::parse("Z12");
    DensityFn ones(g, cplx(1.0, 0.0));
    auto oh = fourier(ones);
    EXPECT_NEAR(std::abs(oh[0] - cplx(1.0, 0.0)), 0.0, 1e-12);
    for (std::int64_t gamma = 1; gamma < g.size(); ++gamma)
        EXPECT_NEAR(std::abs(oh[static_cast<std::size_t>(gamma)]), 0.0, 1e-12);

    DensityFn delta(g);
    delta[0] = 1.0;
    auto dh = fourier(delta);
    for (std::int64_t gamma = 0; gamma < g.size(); ++gamma)
        EXPECT_NEAR(std::abs(dh[static_cast<std::size_t>(gamma)] - cplx(1.0 / 12.0, 0.0)), 0.0, 1e-12);
}

TEST(Fourier, MatchesDirectOracle) {
    Rng rng(2024);
    // Mixed radix, prime, power of two, multi-factor.
    for (const char* spec : {"Z8", "Z7", "Z12", "Z101", "Z4xZ9", "Z2^4", "Z3^4", "Z256", "Z6xZ35"}) {
        Group g = Group::parse(spec);
        for (int rep = 0; rep < 12; ++rep) {
            DensityFn f = random_fn(g, rng);
            auto fast = fourier(f);
            auto slow = fourier_direct(f);
            ASSERT_LT(max_abs_diff(fast, slow), 1e-9) << spec;
        }
    }
}

TEST(Fourier, InverseRoundTrip) {
    Rng rng(7);
    for (const char* spec : {"Z12", "Z101", "Z4xZ9", "Z3^4", "Z1000"}) {
        Group g = Group::parse(spec);
        DensityFn f = random_fn(g, rng);
        DensityFn back = inverse_fourier(g, fourier(f));
        double m = 0.0;
        for (std::int64_t x = 0; x < g.size(); ++x) m = std::max(m, std::abs(f[x] - back[x]));
        ASSERT_LT(m, 1e-9) << spec;
    }
}

TEST(Fourier, Parseval) {
    Rng rng(99);
    Group g = Group::parse("Z4xZ9");
    DensityFn f = random_fn(g, rng);
    auto fh = fourier_direct(f); // independent of the fast path
    double lhs = 0.0;
    for (const cplx& c : fh) lhs += std::norm(c);
    double rhs = lp_norm(f, 2.0);
    EXPECT_NEAR(lhs, rhs * rhs, 1e-9);
}

TEST(Fourier, TransformCap) {
    EXPECT_THROW(fourier_direct(DensityFn(Group::parse("Z8192"))), SizeCapExceeded);
}

TEST(Convolve, PointMassAndConstant) {
    Group g = Group::parse("Z16");
    ElementSet a(g);
    a.add(1); a.add(5); a.add(6);
    DensityFn ind = DensityFn::indicator(a);
    DensityFn delta(g);
    delta[0] = 1.0;
    DensityFn got = convolve(ind, delta);
    for (std::int64_t x = 0; x < g.size(); ++x)
        EXPECT_NEAR(std::abs(got[x] - ind[x] * (1.0 / 16.0)), 0.0, 1e-12);

    DensityFn ones(g, cplx(1.0, 0.0));
    Rng rng(5);
    DensityFn f = random_fn(g, rng);
    DensityFn fc = convolve(f, ones);
    cplx mean = f.mean();
    for (std::int64_t x = 0; x < g.size(); ++x)
        EXPECT_NEAR(std::abs(fc[x] - mean), 0.0, 1e-10);
}

TEST(Convolve, MatchesDoubleSumOracle) {
    Rng rng(31);
    Group g = Group::parse("Z32");
    for (int rep = 0; rep < 10; ++rep) {
        DensityFn f = random_fn(g, rng);
        DensityFn h = random_fn(g, rng);
        DensityFn fast = convolve(f, h);
        DensityFn slow = convolve_direct(f, h);
        double m = 0.0;
        for (std::int64_t x = 0; x < g.size(); ++x) m = std::max(m, std::abs(fast[x] - slow[x]));
        ASSERT_LT(m, 1e-9);
    }
    EXPECT_THROW(convolve(random_fn(g, rng), random_fn(Group::parse("Z31"), rng)), BadInput);
}

TEST(Convolve, TheoremPointwise) {
    Rng rng(17);
    const char* specs[] = {"Z16", "Z7", "Z12", "Z4xZ9", "Z3^4", "Z256", "Z245"};
    int done = 0;
    while (done < 100) {
        Group g = Group::parse(specs[done % 7]);
        DensityFn f = random_fn(g, rng);
        DensityFn h = random_fn(g, rng);
        auto lhs = fourier(convolve(f, h));
        auto fh = fourier(f);
        auto hh = fourier(h);
        double m = 0.0;
        for (std::size_t i = 0; i < lhs.size(); ++i) m = std::max(m, std::abs(lhs[i] - fh[i] * hh[i]));
        ASSERT_LT(m, 1e-9);
        ++done;
    }
}

TEST(Translate, Basics) {
    Group g = Group::parse("Z24");
    Rng rng(12);
    DensityFn f = random_fn(g, rng);
    DensityFn same = f.translate(0);
    for (std::int64_t x = 0; x < g.size(); ++x) EXPECT_EQ(f[x], same[x]);

    // translate(1_{a}, x) = 1_{a-x}
    ElementSet s(g);
    s.add(9);
    DensityFn moved = DensityFn::indicator(s).translate(4);
    for (std::int64_t y = 0; y < g.size(); ++y)
        EXPECT_DOUBLE_EQ(moved[y].real(), y == 5 ? 1.0 : 0.0);

    for (double p : {1.0, 2.0, 7.5}) {
        EXPECT_NEAR(lp_norm(f.translate(13), p), lp_norm(f, p), 1e-12);
    }
    EXPECT_NEAR(lp_norm(f.translate(13), HUGE_VAL), lp_norm(f, HUGE_VAL), 1e-12);

    // Haar invariance is an exact rearrangement.
    for (std::int64_t x = 0; x < g.size(); ++x) {
        cplx a = f.translate(x).mean();
        cplx b = f.mean();
        EXPECT_NEAR(std::abs(a - b), 0.0, 1e-13);
    }
}

TEST(LpNorm, KnownValues) {
    Group g = Group::parse("Z10");
    DensityFn c(g, cplx(-2.5, 0.0));
    DensityFn haar(g, cplx(1.0, 0.0));
    EXPECT_NEAR(lp_norm(c, 1.0, &haar), 2.5, 1e-12);
    EXPECT_NEAR(lp_norm(c, 3.0), 2.5, 1e-12);
    EXPECT_NEAR(lp_norm(c, HUGE_VAL), 2.5, 1e-12);

    ElementSet a(g);
    a.add(0); a.add(3); a.add(7); a.add(9);
    EXPECT_NEAR(lp_norm(DensityFn::indicator(a), 2.0), std::sqrt(0.4), 1e-12);

    EXPECT_THROW(lp_norm(c, 0.5), BadInput);
    DensityFn not_prob(g, cplx(2.0, 0.0));
    EXPECT_THROW(lp_norm(c, 2.0, &not_prob), BadInput);
    DensityFn negative(g, cplx(1.0, 0.0));
    negative[0] = -1.0;
    negative[1] = 3.0;
    EXPECT_THROW(lp_norm(c, 2.0, &negative), BadInput);
}

TEST(LpNorm, SupOverWeightSupport) {
    Group g = Group::parse("Z8");
    ElementSet a(g);
    a.add(2); a.add(3);
    DensityFn w = DensityFn::normalized_indicator(a);
    DensityFn f(g);
    f[1] = 100.0; // outside supp(w), must be ignored
    f[2] = 3.0;
    f[3] = -5.0;
    EXPECT_NEAR(lp_norm(f, HUGE_VAL, &w), 5.0, 1e-12);
}

TEST(InnerProduct, KnownValuesAndOracle) {
    Group g = Group::parse("Z20");
    Rng rng(3);
    DensityFn f = random_fn(g, rng);
    ElementSet s(g);
    for (std::int64_t x = 0; x < g.size(); x += 3) s.add(x);
    DensityFn w = DensityFn::normalized_indicator(s);
    double n2 = lp_norm(f, 2.0, &w);
    cplx self = inner_product(f, f, &w);
    EXPECT_NEAR(self.real(), n2 * n2, 1e-10);
    EXPECT_NEAR(self.imag(), 0.0, 1e-12);

    ElementSet a(g), b(g);
    for (std::int64_t x : {0, 1, 2, 3, 8, 12}) a.add(x);
    for (std::int64_t x : {2, 3, 4, 12, 19}) b.add(x);
    cplx ip = inner_product(DensityFn::indicator(a), DensityFn::indicator(b));
    EXPECT_NEAR(ip.real(), static_cast<double>(a.intersection_size(b)) / 20.0, 1e-12);

    DensityFn h = random_fn(g, rng);
    cplx got = inner_product(f, h, &w);
    cplx want(0.0, 0.0);
    for (std::int64_t x = 0; x < g.size(); ++x)
        want += f[x] * std::conj(h[x]) * w[x];
    want /= 20.0;
    EXPECT_NEAR(std::abs(got - want), 0.0, 1e-12);
}

TEST(ElementSets, BasicOps) {
    Group g = Group::parse("Z4xZ9");
    ElementSet a(g);
    a.add(5); a.add(11); a.add(35);
    EXPECT_EQ(a.size(), 3);
    EXPECT_TRUE(a.contains(11));
    a.remove(11);
    EXPECT_FALSE(a.contains(11));
    EXPECT_EQ(a.first(), 5);
    EXPECT_EQ(a.negate().size(), 2);
    EXPECT_TRUE(a.negate().contains(g.neg(5)));
    EXPECT_EQ(a.translate(7).size(), 2);
    EXPECT_TRUE(a.translate(7).contains(g.add(7, 5)));

    ElementSet b(g);
    b.add(5); b.add(20);
    EXPECT_EQ(a.intersect(b).size(), 1);
    EXPECT_EQ(a.unite(b).size(), 3);
    EXPECT_EQ(a.difference(b).size(), 1);
    EXPECT_TRUE(a.intersect(b).subset_of(a));
    EXPECT_EQ(a.intersection_size(b), 1);

    ElementSet sum = sumset(a, b);
    EXPECT_TRUE(sum.contains(g.add(5, 20)));
    EXPECT_TRUE(sum.contains(g.add(35, 5)));
}

TEST(ElementSets, LineIo) {
    Group g = Group::parse("Z4xZ9");
    ElementSet a(g);
    a.add(g.index_of(std::vector<std::int64_t>{1, 2}));
    a.add(g.index_of(std::vector<std::int64_t>{3, 8}));
    std::ostringstream os;
    a.write_lines(os);
    std::istringstream is("# comment\n1, 2\n\n3 8\n");
    ElementSet back = ElementSet::read_lines(g, is);
    EXPECT_TRUE(back == a);
    std::istringstream round(os.str());
    EXPECT_TRUE(ElementSet::read_lines(g, round) == a);
    std::istringstream bad("1\n");
    EXPECT_THROW(ElementSet::read_lines(g, bad), BadInput);
}

TEST(ElementSets, BlabIo) {
    Group g = Group::parse("Z10^2xZ7");
    Rng rng(404);
    ElementSet a = ElementSet::random(g, 0.37, rng);
    std::ostringstream os(std::ios::binary);
    a.write_blab(os);
    std::string blob = os.str();
    EXPECT_EQ(blob.substr(0, 4), "BLAB");
    std::istringstream is(blob, std::ios::binary);
    ElementSet back = ElementSet::read_blab(is);
    EXPECT_TRUE(back == a);
    EXPECT_EQ(back.group().str(), "Z10^2xZ7");

    std::istringstream junk("BLOB....", std::ios::binary);
    EXPECT_THROW(ElementSet::read_blab(junk), BadInput);
}

TEST(Rng, DeterministicStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
    Rng c(42);
    std::uint64_t seen = 0;
    for (int i = 0; i < 1000; ++i) {
        std::uint64_t v = c.next_below(10);
        ASSERT_LT(v, 10u);
        seen |= 1ULL << v;
    }
    EXPECT_EQ(seen, 0x3ffULL); // all residues hit
}
