// 3AP counting, Freiman embedding of integer sets, and the density
// increment driver: repeated Bohr-set refinement of a dense subset of an
// odd-order group that ends in a terminal certificate whose measured
// factors multiply into a lower bound on the set's 3AP count.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bohr.hpp"
#include "config.hpp"
#include "croot_sisask.hpp"
#include "density.hpp"
#include "errors.hpp"
#include "fourier.hpp"
#include "group.hpp"
#include "kk.hpp"
#include "sets.hpp"
#include "spectra.hpp"
#include "util.hpp"

namespace bohrlab {

enum class APCountMode { Fourier, Brute };

inline const char* to_string(APCountMode m) {
    return m == APCountMode::Fourier ? "fourier" : "brute";
}

inline void require_odd_order(const Group& g, const char* who) {
    if (g.size() % 2 == 0)
        throw BadInput(std::string(who) + ": group order must be odd, got " +
                       std::to_string(g.size()));
}

// Ordered triples (a1, a2, a3) in A^3 with a1 + a3 = 2 a2, normalised as
// value = <1_A * 1_{-2.A}, 1_{-A}>_{L2(mu_G)} = triple_count / N^2.  In odd
// order a1 = a3 forces a1 = a2 = a3, so a 3AP-free set scores exactly |A|.
struct APCount {
    Group group;
    APCountMode mode = APCountMode::Fourier;
    double alpha = 0.0;
    double value = 0.0;
    std::int64_t triple_count = 0;

    nlohmann::json to_json() const {
        return nlohmann::json{{"group", group.str()},
                              {"mode", to_string(mode)},
                              {"alpha", alpha},
                              {"value", value},
                              {"triple_count", triple_count}};
    }
};

inline APCount count_3ap(const Group& g, const ElementSet& a,
                         APCountMode mode = APCountMode::Fourier) {
    require_odd_order(g, "count_3ap");
    if (a.group() != g) throw BadInput("count_3ap: set lives in a different group");
    const double n = static_cast<double>(g.size());
    APCount out;
    out.group = g;
    out.mode = mode;
    out.alpha = static_cast<double>(a.size()) / n;
    if (mode == APCountMode::Brute) {
        std::int64_t cnt = 0;
        const auto& elems = a.elements();
        for (std::int64_t a1 : elems)
            for (std::int64_t a2 : elems)
                if (a.contains(g.sub(g.scale(2, a2), a1))) ++cnt;
        out.triple_count = cnt;
        out.value = static_cast<double>(cnt) / (n * n);
        return out;
    }
    std::vector<std::complex<double>> fa = fourier(DensityFn::indicator(a));
    std::vector<std::complex<double>> fb = fourier(DensityFn::indicator(a.scaled(-2)));
    std::vector<std::complex<double>> fc = fourier(DensityFn::indicator(a.negate()));
    std::complex<double> s = 0.0;
    for (std::size_t x = 0; x < fa.size(); ++x) s += fa[x] * fb[x] * std::conj(fc[x]);
    if (std::fabs(s.imag()) > 1e-7)
        throw PostconditionFailed("count_3ap: triple sum has imaginary part " +
                                  format_double(s.imag()));
    double raw = s.real() * n * n;
    out.triple_count = std::llround(raw);
    if (std::fabs(raw - static_cast<double>(out.triple_count)) >
        1e-5 * std::max(1.0, std::fabs(raw)))
        throw PostconditionFailed("count_3ap: " + format_double(raw) +
                                  " is not near an integer");
    out.value = s.real();
    return out;
}

// Image of A ⊆ {1..N} in Z_{2N+1}.  Sums of two elements never wrap, so
// (a1, a2, a3) is a progression over the integers iff its image is one in
// the group; the cyclic triple count equals the integer triple count.
struct FreimanImage {
    Group group;
    ElementSet image;
    std::int64_t n_bound = 0;
    std::int64_t modulus = 0;

    nlohmann::json to_json() const {
        return nlohmann::json{{"group", group.str()},
                              {"n", n_bound},
                              {"modulus", modulus},
                              {"size", image.size()}};
    }
};

inline FreimanImage freiman_embed(const std::vector<std::int64_t>& a, std::int64_t n) {
    if (n < 1) throw BadInput("freiman_embed: N must be positive");
    FreimanImage out;
    out.n_bound = n;
    out.modulus = 2 * n + 1;
    out.group = Group::product({out.modulus});
    out.image = ElementSet(out.group);
    for (std::int64_t x : a) {
        if (x < 1 || x > n)
            throw BadInput("freiman_embed: element " + std::to_string(x) +
                           " outside {1.." + std::to_string(n) + "}");
        out.image.add(x);
    }
    return out;
}

// 2.B = {2y : y in B}.  Substituting gamma -> inv2 * gamma (componentwise)
// keeps the phase integers, so membership transfers bit-exactly and every
// dilate satisfies |2.B_rho| = |B_rho| with 2.(B_rho) = (2.B)_rho.
inline BohrSet doubled_bohr(const BohrSet& b) {
    const Group& g = b.group();
    require_odd_order(g, "doubled_bohr");
    std::int64_t inv2 = inv_mod(2, g.size());
    std::vector<std::int64_t> f;
    f.reserve(b.freq().size());
    for (std::int64_t gamma : b.freq()) f.push_back(g.scale(inv2, gamma));
    BohrSet out(g, std::move(f), b.width());
    if (!(out.members() == b.members().scaled(2)))
        throw PostconditionFailed("doubled_bohr: member image mismatch");
    return out;
}

// One stage of the driver.  Fields after `mu` record the choices of the
// step that produced the state ("init" for the starting stage).
struct IterationState {
    int i = 0;
    BohrSet B;
    RegularityCertificate cert;
    std::size_t k = 0;   // rank of B
    double d = 0.0;      // measured dimension
    double alpha = 0.0;  // ||1_A * beta^{(i)}||_inf
    double mu = 0.0;     // mu_G(B^{(i)})
    std::string branch = "init";
    double rho_p = 0.0;
    double rho_pp = 0.0;
    std::int64_t x = -1;
    ElementSet A1, A2;

    nlohmann::json to_json() const {
        return nlohmann::json{{"i", i},
                              {"branch", branch},
                              {"rank", k},
                              {"dimension", d},
                              {"alpha", alpha},
                              {"mu", mu},
                              {"rho_p", rho_p},
                              {"rho_pp", rho_pp},
                              {"x", x},
                              {"A1_size", A1.group().size() ? A1.size() : 0},
                              {"A2_size", A2.group().size() ? A2.size() : 0},
                              {"bohr", B.to_json()}};
    }
};

// Terminal certificate.  Every factor is a measured quantity; `claimed`
// multiplies them into a lower bound that is checked against the directly
// counted value before the certificate is released.  `claimed_symbolic`
// replaces the measured pair density sigma by its guaranteed floor
// (alpha2/2)^{i0+1} and is reported, never asserted against the count.
struct APCountEvidence {
    int i = 0;
    double alpha_i = 0.0;
    BohrSet Bp, Bpp, Bkk;  // B', B'' = 2.(B'_{rho''}), and the pair level
    double rho_p = 0.0, rho_pp = 0.0, rho_kk = 0.0, rho_dich = 0.0;
    std::int64_t x = -1;
    ElementSet A1, A2, L, S;
    double alpha1 = 0.0, alpha2 = 0.0;
    int kk_steps = 0;  // i0: the pointwise domination constant
    double kk_lambda = 0.0, kk_sigma = 0.0, sigma_exponent = 0.0;
    double dich_inner = 0.0, dich_threshold = 0.0;
    double mu_bp = 0.0, mu_bpp = 0.0;  // mu_G(B'), mu_G(B'')
    double mu_ratio = 0.0;             // |B_kk| / |B''|
    double inner_local = 0.0;  // <1_{A1} * (1_{A2} d beta''), 1_{-A1}>_{L2(beta')}
    double lower_local = 0.0;  // (mu_ratio / i0) * dich_inner
    double claimed = 0.0;      // mu_bp * mu_bpp * lower_local
    double claimed_symbolic = 0.0;
    APCount count;

    nlohmann::json to_json() const {
        return nlohmann::json{{"i", i},
                              {"alpha_i", alpha_i},
                              {"rho_p", rho_p},
                              {"rho_pp", rho_pp},
                              {"rho_kk", rho_kk},
                              {"rho_dich", rho_dich},
                              {"x", x},
                              {"A1_size", A1.size()},
                              {"A2_size", A2.size()},
                              {"L_size", L.size()},
                              {"S_size", S.size()},
                              {"alpha1", alpha1},
                              {"alpha2", alpha2},
                              {"kk_steps", kk_steps},
                              {"kk_lambda", kk_lambda},
                              {"kk_sigma", kk_sigma},
                              {"sigma_exponent", sigma_exponent},
                              {"dich_inner", dich_inner},
                              {"dich_threshold", dich_threshold},
                              {"mu_bp", mu_bp},
                              {"mu_bpp", mu_bpp},
                              {"mu_ratio", mu_ratio},
                              {"inner_local", inner_local},
                              {"lower_local", lower_local},
                              {"claimed", claimed},
                              {"claimed_symbolic", claimed_symbolic},
                              {"count", count.to_json()}};
    }
};

struct IterationLog {
    std::vector<IterationState> states;
    APCountEvidence terminal;
    double alpha0 = 0.0;
    int budget = 0;

    nlohmann::json to_json() const {
        nlohmann::json st = nlohmann::json::array();
        for (const auto& s : states) st.push_back(s.to_json());
        return nlohmann::json{{"alpha0", alpha0},
                              {"budget", budget},
                              {"states", std::move(st)},
                              {"terminal", terminal.to_json()}};
    }
};

inline IterationState initial_state(const Group& g, const ElementSet& a, const RunConfig& cfg) {
    require_odd_order(g, "initial_state");
    if (a.group() != g) throw BadInput("initial_state: set lives in a different group");
    if (a.empty()) throw BadInput("initial_state: empty set");
    BohrSet whole = BohrSet::whole_group(g);
    RegularityCertificate cert =
        find_regular_dilate(whole, cfg.C_regular, {}, cfg.lambda_grid(), cfg.dim_grid);
    IterationState st;
    st.B = whole.dilate(cert.lambda);  // rank 0: still the whole group
    st.cert = cert;
    st.k = st.B.rank();
    st.d = cert.dimension_d;
    st.alpha = convolve(DensityFn::indicator(a), st.B.beta()).max_real();
    st.mu = st.B.measure();
    return st;
}

// One refinement step.  Returns the next state on a density increment and
// the terminal certificate otherwise; throws StepStalled when no branch
// certifies at the current scale.
inline std::variant<IterationState, APCountEvidence>
increment_step(const IterationState& st, const ElementSet& a, const RunConfig& cfg) {
    const Group& g = st.B.group();
    require_odd_order(g, "increment_step");
    if (a.group() != g) throw BadInput("increment_step: set lives in a different group");
    if (a.empty()) throw BadInput("increment_step: empty set");
    const std::string tag = "increment_step i=" + std::to_string(st.i);
    const double n = static_cast<double>(g.size());
    const double alpha_g = static_cast<double>(a.size()) / n;
    const double c = cfg.c_main;
    const std::uint64_t step_seed =
        cfg.seed + 7919ull * (static_cast<std::uint64_t>(st.i) + 1ull);
    constexpr double kWitnessSlack = 1e-9;

    DensityFn one_a = DensityFn::indicator(a);
    DensityFn g0 = convolve(one_a, st.B.beta());
    const double alpha_i = g0.max_real();
    const double half_budget = c * alpha_g / 8.0;  // each smoothing term gets half
    const double quick_bar = alpha_i * (1.0 + c / 4.0) * (1.0 - cfg.tolerance);

    auto regular_dilate = [&](const BohrSet& base, double rho, RegularityCertificate& cert,
                              double& eff) -> std::optional<BohrSet> {
        try {
            cert = find_regular_dilate(base.dilate(rho), cfg.C_regular, {}, cfg.lambda_grid(),
                                       cfg.dim_grid);
        } catch (const NoRegularDilate&) {
            return std::nullopt;
        }
        eff = rho * cert.lambda;
        return base.dilate(rho).dilate(cert.lambda);
    };

    auto promote = [&](const EnergyIncrementResult& inc, const char* branch, double rho_p,
                       double rho_pp, std::int64_t x, ElementSet a1,
                       ElementSet a2) -> IterationState {
        double alpha_new = convolve(one_a, inc.b_pp.beta()).max_real();
        if (alpha_new < alpha_i * (1.0 + c / 4.0) * (1.0 - cfg.tolerance))
            throw StepStalled(tag + ": " + branch + " raised the local density but ||1_A * beta|| = " +
                              format_double(alpha_new) + " misses the floor " +
                              format_double(alpha_i * (1.0 + c / 4.0)));
        IterationState nxt;
        nxt.i = st.i + 1;
        nxt.B = inc.b_pp;
        nxt.cert = inc.b_pp_cert;
        nxt.k = inc.b_pp.rank();
        nxt.d = inc.b_pp_cert.dimension_d;
        nxt.alpha = alpha_new;
        nxt.mu = inc.b_pp.measure();
        nxt.branch = branch;
        nxt.rho_p = rho_p;
        nxt.rho_pp = rho_pp;
        nxt.x = x;
        nxt.A1 = std::move(a1);
        nxt.A2 = std::move(a2);
        return nxt;
    };

    // --- rho': a regular dilate past the first half of the smoothing budget.
    BohrSet bP;
    RegularityCertificate certP;
    double rhoP_eff = 0.0;
    bool haveP = false;
    DensityFn f1;
    for (int h = 0; h < 70 && !haveP; ++h) {
        RegularityCertificate cert;
        double eff = 0.0;
        auto cand = regular_dilate(st.B, std::ldexp(1.0, -h), cert, eff);
        if (!cand) continue;
        if ((convolve(g0, cand->beta()) - g0).sup_norm() > half_budget + 1e-12) continue;
        bP = *cand;
        certP = cert;
        rhoP_eff = eff;
        haveP = true;
    }
    if (!haveP) throw StepStalled(tag + ": no rho' dilate passed the smoothing budget");
    f1 = convolve(one_a, bP.beta());
    if (f1.max_real() >= quick_bar) {
        IterationState nxt;
        nxt.i = st.i + 1;
        nxt.B = bP;
        nxt.cert = certP;
        nxt.k = bP.rank();
        nxt.d = certP.dimension_d;
        nxt.alpha = f1.max_real();
        nxt.mu = bP.measure();
        nxt.branch = "quick-rho-prime";
        nxt.rho_p = rhoP_eff;
        return nxt;
    }
    const double dP = bP.estimate_dimension(cfg.dim_grid);  // matches the pair stage's measurement

    // --- rho'': second smoothing level on B', doubled to house 2x - 2.A.
    // Shrinks until the middle containment witness 2 rho'' clears the pair
    // stage's dilate cap (vacuous when B' has dimension zero).
    BohrSet bund, bpp;
    RegularityCertificate cert2;
    double rho2_eff = 0.0;
    DensityFn f2;
    std::int64_t x = -1;
    ElementSet A1, A2;
    double alpha1 = 0.0, alpha2 = 0.0;
    bool settled = false;
    for (int h = 0; h < 70 && !settled; ++h) {
        RegularityCertificate cert;
        double eff = 0.0;
        auto cand = regular_dilate(bP, std::ldexp(1.0, -h), cert, eff);
        if (!cand) continue;
        if ((convolve(g0, cand->beta()) - g0).sup_norm() > half_budget + 1e-12) continue;
        DensityFn f2c = convolve(one_a, cand->beta());
        if (f2c.max_real() >= quick_bar) {
            IterationState nxt;
            nxt.i = st.i + 1;
            nxt.B = *cand;
            nxt.cert = cert;
            nxt.k = cand->rank();
            nxt.d = cert.dimension_d;
            nxt.alpha = f2c.max_real();
            nxt.mu = cand->measure();
            nxt.branch = "quick-rho-double";
            nxt.rho_p = rhoP_eff;
            nxt.rho_pp = eff;
            return nxt;
        }
        // recentring point: both averages stay within c/2 of alpha_i there
        DensityFn mn(g);
        for (std::int64_t t = 0; t < g.size(); ++t)
            mn[t] = std::min(f1[t].real(), f2c[t].real());
        std::int64_t xc = mn.argmax_real();
        double floor_v = alpha_i * (1.0 - c / 2.0);
        if (mn[xc].real() < floor_v * (1.0 - cfg.tolerance) - 1e-12)
            throw PostconditionFailed(tag + ": recentring floor violated: min = " +
                                      format_double(mn[xc].real()) + " < " +
                                      format_double(floor_v));
        ElementSet a1c = a.translate(g.neg(xc)).intersect(bP.members());
        double dens1 = static_cast<double>(a1c.size()) / static_cast<double>(bP.member_count());
        if (!near(dens1, f1[xc].real(), 1e-6, 1e-9))
            throw PostconditionFailed(tag + ": beta'(A1) = " + format_double(dens1) +
                                      " disagrees with the convolution " +
                                      format_double(f1[xc].real()));
        BohrSet dd = doubled_bohr(*cand);
        ElementSet a2c = a.scaled(-2).translate(g.scale(2, xc)).intersect(dd.members());
        double dens2 = static_cast<double>(a2c.size()) / static_cast<double>(dd.member_count());
        if (!near(dens2, f2c[xc].real(), 1e-6, 1e-9))
            throw PostconditionFailed(tag + ": beta''(A2) = " + format_double(dens2) +
                                      " disagrees with the convolution " +
                                      format_double(f2c[xc].real()));
        if (dP > 0.0 && 2.0 * eff * (1.0 + 3.0 * kWitnessSlack) > cfg.c1_kk * dens1 / dP)
            continue;  // containment witness would breach the pair-stage cap
        bund = *cand;
        cert2 = cert;
        rho2_eff = eff;
        bpp = dd;
        f2 = f2c;
        x = xc;
        A1 = a1c;
        A2 = a2c;
        alpha1 = dens1;
        alpha2 = dens2;
        settled = true;
    }
    if (!settled) throw StepStalled(tag + ": no rho'' dilate cleared the smoothing and cap checks");
    if (A1.empty() || A2.empty())
        throw StepStalled(tag + ": recentred sets are empty at this scale");

    // combined smoothing error, the quantity the budget actually bounds
    double err_total =
        (convolve(g0, bP.beta()) + convolve(g0, bund.beta()) - g0 * 2.0).sup_norm();
    if (err_total > c * alpha_g / 4.0 + 3e-12)
        throw PostconditionFailed(tag + ": smoothing error " + format_double(err_total) +
                                  " exceeds the budget " + format_double(c * alpha_g / 4.0));

    // --- pair level inside B''
    double kk_cap = 1.0;
    if (bpp.rank() > 0)
        kk_cap = std::min(1.0, cfg.c1_kk * alpha2 / static_cast<double>(bpp.rank()));
    BohrSet bkk;
    RegularityCertificate cert3;
    double rho3_eff = 0.0;
    bool havekk = false;
    for (int h = 0; h < 70 && !havekk; ++h) {
        RegularityCertificate cert;
        double eff = 0.0;
        auto cand = regular_dilate(bpp, kk_cap * std::ldexp(1.0, -h), cert, eff);
        if (!cand) continue;
        bkk = *cand;
        cert3 = cert;
        rho3_eff = eff;
        havekk = true;
    }
    if (!havekk) throw StepStalled(tag + ": no regular pair-level dilate of B''");

    const double rho_kk1 = std::min(1.0, 2.0 * rho2_eff * (1.0 + kWitnessSlack));
    const double rho_kk2 = std::min(1.0, rho3_eff * (1.0 + kWitnessSlack));
    KKOutcome kk;
    try {
        kk = kk_iterate(bP, bpp, bkk, A1, A2, rho_kk1, rho_kk2, 0, cfg, step_seed);
    } catch (const PostconditionFailed&) {
        throw;
    } catch (const Error& e) {
        throw StepStalled(tag + ": pair iteration: " + e.what());
    }
    if (kk.tag == KKOutcome::Tag::Increment) {
        if (!kk.increment) throw PostconditionFailed(tag + ": increment outcome without payload");
        return promote(*kk.increment, "increment-kk", rhoP_eff, rho2_eff, x, std::move(A1),
                       std::move(A2));
    }

    // --- dichotomy over the returned pair, applied to -A1
    const ElementSet& L = *kk.L;
    const ElementSet& S = *kk.S;
    const double rho_dich = std::min(1.0, 2.0 * rho2_eff * rho3_eff * (1.0 + kWitnessSlack));
    if (dP > 0.0 && rho_dich > cfg.c_cs * kk.lambda * alpha1 / dP)
        throw StepStalled(tag + ": dichotomy dilate witness " + format_double(rho_dich) +
                          " exceeds the cap " +
                          format_double(cfg.c_cs * kk.lambda * alpha1 / dP));
    CSDichotomy dich;
    try {
        dich = cs_dichotomy(bP, bkk, rho_dich, L, S, A1.negate(), cfg, step_seed + 1,
                            CSMode::Exhaustive);
    } catch (const PostconditionFailed&) {
        throw;
    } catch (const Error& e) {
        throw StepStalled(tag + ": dichotomy: " + e.what());
    }
    if (dich.tag == CSDichotomy::Tag::Increment) {
        if (!dich.increment) throw PostconditionFailed(tag + ": increment outcome without payload");
        return promote(*dich.increment, "increment-cs", rhoP_eff, rho2_eff, x, std::move(A1),
                       std::move(A2));
    }

    // --- terminal: multiply the measured factors and check them against
    // the directly counted value.
    APCountEvidence ev;
    ev.i = st.i;
    ev.alpha_i = alpha_i;
    ev.Bp = bP;
    ev.Bpp = bpp;
    ev.Bkk = bkk;
    ev.rho_p = rhoP_eff;
    ev.rho_pp = rho2_eff;
    ev.rho_kk = rho3_eff;
    ev.rho_dich = rho_dich;
    ev.x = x;
    ev.A1 = A1;
    ev.A2 = A2;
    ev.L = L;
    ev.S = S;
    ev.alpha1 = alpha1;
    ev.alpha2 = alpha2;
    ev.kk_steps = kk.steps;
    ev.kk_lambda = kk.lambda;
    ev.kk_sigma = kk.sigma;
    ev.sigma_exponent = kk.sigma_exponent_C;
    ev.dich_inner = dich.inner;
    ev.dich_threshold = dich.inner_threshold;
    ev.mu_bp = bP.measure();
    ev.mu_bpp = bpp.measure();
    ev.mu_ratio = static_cast<double>(bkk.member_count()) /
                  static_cast<double>(bpp.member_count());

    const auto pc = pair_counts(A1, A2);
    double inner = 0.0;
    for (std::int64_t w : A1.elements())
        inner += static_cast<double>(pc[static_cast<std::size_t>(g.neg(w))]);
    inner /= static_cast<double>(bP.member_count()) * static_cast<double>(bpp.member_count());
    ev.inner_local = inner;
    ev.lower_local = dich.inner * ev.mu_ratio / static_cast<double>(kk.steps);
    if (ev.inner_local < ev.lower_local * (1.0 - cfg.tolerance) - 1e-15)
        throw PostconditionFailed(tag + ": domination chain broke: inner " +
                                  format_double(ev.inner_local) + " < " +
                                  format_double(ev.lower_local));
    ev.claimed = ev.mu_bp * ev.mu_bpp * ev.lower_local;
    double sigma_floor = std::pow(alpha2 / 2.0, static_cast<double>(kk.steps + 1));
    ev.claimed_symbolic = ev.mu_bp * ev.mu_bpp * (ev.mu_ratio / kk.steps) * dich.lambda *
                          sigma_floor * alpha1 / 2.0;
    ev.count = count_3ap(g, a, g.size() <= cfg.brute_cap ? APCountMode::Brute
                                                         : APCountMode::Fourier);
    double global = ev.mu_bp * ev.mu_bpp * ev.inner_local;
    if (global > ev.count.value * (1.0 + cfg.tolerance) + 1e-15)
        throw PostconditionFailed(tag + ": subcounting failed: mu mu inner = " +
                                  format_double(global) + " exceeds the count " +
                                  format_double(ev.count.value));
    if (ev.claimed > ev.count.value * (1.0 + cfg.tolerance) + 1e-15)
        throw PostconditionFailed(tag + ": claimed bound " + format_double(ev.claimed) +
                                  " exceeds the count " + format_double(ev.count.value));
    return ev;
}

// Full driver: refine from the whole group until a terminal certificate
// appears, checking the density ratchet and the step budget throughout.
inline IterationLog run_main_iteration(const Group& g, const ElementSet& a, const RunConfig& cfg,
                                       std::vector<nlohmann::json>* trace = nullptr) {
    IterationState st = initial_state(g, a, cfg);
    const double alpha_g = static_cast<double>(a.size()) / static_cast<double>(g.size());
    IterationLog log;
    log.alpha0 = st.alpha;
    log.budget = std::max(1, static_cast<int>(std::ceil(cfg.C_steps * std::log(2.0 / alpha_g))));
    for (;;) {
        log.states.push_back(st);
        if (trace) trace->push_back(st.to_json());
        if (st.i >= log.budget)
            throw MaxStepsExceeded("run_main_iteration: no terminal certificate within " +
                                   std::to_string(log.budget) + " steps (alpha = " +
                                   format_double(st.alpha) + ")");
        auto res = increment_step(st, a, cfg);
        if (std::holds_alternative<APCountEvidence>(res)) {
            log.terminal = std::get<APCountEvidence>(std::move(res));
            if (log.terminal.claimed >
                log.terminal.count.value * (1.0 + cfg.tolerance) + 1e-15)
                throw PostconditionFailed("run_main_iteration: claimed bound exceeds the count");
            if (trace) trace->push_back(log.terminal.to_json());
            return log;
        }
        IterationState nxt = std::get<IterationState>(std::move(res));
        if (nxt.alpha < st.alpha * (1.0 + cfg.c_main / 4.0) * (1.0 - cfg.tolerance))
            throw PostconditionFailed("run_main_iteration: alpha " + format_double(nxt.alpha) +
                                      " did not grow from " + format_double(st.alpha) +
                                      " by the required factor");
        if (nxt.alpha > 1.0 + 1e-9)
            throw PostconditionFailed("run_main_iteration: alpha " + format_double(nxt.alpha) +
                                      " above one");
        st = std::move(nxt);
    }
}

} // namespace bohrlab
