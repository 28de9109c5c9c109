#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bohrlab/bohr.hpp"
#include "bohrlab/config.hpp"
#include "bohrlab/density.hpp"
#include "bohrlab/errors.hpp"
#include "bohrlab/fourier.hpp"
#include "bohrlab/rng.hpp"
#include "bohrlab/sets.hpp"
#include "bohrlab/spectra.hpp"
#include "bohrlab/util.hpp"

#include "json.hpp"

namespace bohrlab {

enum class CSMode { Exhaustive, Sampled };

inline const char* to_string(CSMode m) {
    return m == CSMode::Exhaustive ? "exhaustive" : "sampled";
}

// One almost-periodicity run: average f over A_set, then carve a core T out
// of S_set whose translates barely move the average.
struct CSInstance {
    DensityFn f;
    ElementSet A_set;       // convolving set; g = f * mu_A
    ElementSet S_set;       // translate pool the core is carved from
    double K = 1.0;         // measured |S + A| / |A|
    double p = 2.0;
    double epsilon = 0.25;
    std::int64_t k_samples = 1;
    std::uint64_t seed = 0;
};

inline double measured_sumset_ratio(const ElementSet& s_set, const ElementSet& a_set) {
    if (a_set.empty()) throw BadInput("sumset ratio: A is empty");
    return static_cast<double>(sumset(s_set, a_set).size()) /
           static_cast<double>(a_set.size());
}

// k = ceil(C_k * eps^-2 * p).  Can be astronomically large for tiny eps;
// only the sampled path ever draws that many, and it refuses past 2^28.
inline std::int64_t sample_count(double eps, double p, const RunConfig& cfg) {
    if (!(eps > 0.0)) throw BadInput("sample count: eps must be positive");
    double k = std::ceil(cfg.C_k / (eps * eps) * p);
    if (!(k >= 1.0)) throw BadInput("sample count came out below 1");
    if (k >= 9.0e18) throw BadInput("sample count overflows: eps = " + format_double(eps));
    return static_cast<std::int64_t>(k);
}

inline CSInstance make_cs_instance(DensityFn f, ElementSet a_set, ElementSet s_set,
                                   double eps, double p, const RunConfig& cfg,
                                   std::uint64_t seed) {
    if (a_set.group() != f.group() || s_set.group() != f.group())
        throw BadInput("cs instance: f, A, S live on different groups");
    if (a_set.empty() || s_set.empty())
        throw BadInput("cs instance: A and S must be nonempty");
    if (!(p >= 2.0)) throw BadInput("cs instance: p must be >= 2");
    if (!(eps > 0.0 && eps <= 1.0)) throw BadInput("cs instance: eps must lie in (0, 1]");
    CSInstance inst;
    inst.K = measured_sumset_ratio(s_set, a_set);
    inst.k_samples = sample_count(eps, p, cfg);
    inst.f = std::move(f);
    inst.A_set = std::move(a_set);
    inst.S_set = std::move(s_set);
    inst.p = p;
    inst.epsilon = eps;
    inst.seed = seed;
    return inst;
}

struct CSResult {
    CSMode mode = CSMode::Exhaustive;
    std::int64_t s = 0;
    ElementSet T;
    // t in T -> measured ||tau_{t-s}(g) - g||_{L^p(mu_G)}
    std::map<std::int64_t, double> per_t_norms;
    double f_norm = 0.0;
    double threshold = 0.0;   // eps ||f||_p + 1e-9, the acceptance line
    double worst_norm = 0.0;
    double K = 1.0;
    std::int64_t k_samples = 1;
    double epsilon = 0.0, p = 2.0;
    double mu_S_T = 0.0;
    // |T|/|S| measured against both readings of the density guarantee
    double bound = 0.0;       // (2K)^-k
    double bound_alt = 0.0;   // (1/2) K^-k
    double log2_bound = 0.0;  // -k log2(2K), finite when bound underflows

    nlohmann::json to_json() const {
        return {{"mode", to_string(mode)},
                {"K", K},
                {"k_samples", k_samples},
                {"s", s},
                {"T_size", T.size()},
                {"mu_S_T", mu_S_T},
                {"bound", bound},
                {"bound_alt", bound_alt},
                {"log2_bound", log2_bound},
                {"eps", epsilon},
                {"p", p},
                {"f_norm", f_norm},
                {"worst_norm", worst_norm}};
    }
};

// Translate lemma.  Exhaustive mode scans every base point s in S and keeps
// the one whose core is largest; sampled mode follows the probabilistic
// argument: draw k points of A, average the translates, and keep the base
// points whose diagonal shift stays close to the true average.  Either way
// every returned t is re-verified against g = f * mu_A directly.
inline CSResult cs_translates(const CSInstance& inst, CSMode mode) {
    const Group& g = inst.f.group();
    if (inst.A_set.group() != g || inst.S_set.group() != g)
        throw BadInput("cs_translates: f, A, S live on different groups");
    if (inst.A_set.empty() || inst.S_set.empty())
        throw BadInput("cs_translates: A and S must be nonempty");
    if (!(inst.p >= 2.0)) throw BadInput("cs_translates: p must be >= 2");
    if (!(inst.epsilon > 0.0 && inst.epsilon <= 1.0))
        throw BadInput("cs_translates: eps must lie in (0, 1]");
    if (inst.k_samples < 1) throw BadInput("cs_translates: k_samples must be >= 1");
    double k_meas = measured_sumset_ratio(inst.S_set, inst.A_set);
    if (!near(inst.K, k_meas, 1e-9, 1e-12))
        throw BadInput("cs_translates: K = " + format_double(inst.K) +
                       " is not the measured sumset ratio " + format_double(k_meas));

    double fnorm = lp_norm(inst.f, inst.p);
    if (!(fnorm > 0.0)) throw BadInput("cs_translates: f vanishes identically");

    DensityFn gfun = convolve(inst.f, DensityFn::normalized_indicator(inst.A_set));
    const double thr = inst.epsilon * fnorm + 1e-9;

    // ||tau_u(g) - g||_p depends only on u; memoize across base points.
    std::vector<double> memo(static_cast<std::size_t>(g.size()), -1.0);
    auto norm_at = [&](std::int64_t u) {
        double& slot = memo[static_cast<std::size_t>(u)];
        if (slot < 0.0) slot = lp_norm(gfun.translate(u) - gfun, inst.p);
        return slot;
    };

    const std::vector<std::int64_t> pool = inst.S_set.elements();
    std::int64_t s_star = 0;
    std::vector<std::int64_t> core;

    if (mode == CSMode::Exhaustive) {
        std::size_t best = 0;
        bool have = false;
        for (std::int64_t s : pool) {
            std::size_t n = 0;
            for (std::int64_t t : pool)
                if (norm_at(g.sub(t, s)) <= thr) ++n;
            if (!have || n > best) {
                have = true;
                best = n;
                s_star = s;
            }
        }
        for (std::int64_t t : pool)
            if (norm_at(g.sub(t, s_star)) <= thr) core.push_back(t);
    } else {
        if (inst.k_samples > (std::int64_t{1} << 28))
            throw BadInput("cs_translates: k_samples = " + std::to_string(inst.k_samples) +
                           " is too large to draw; use exhaustive mode");
        Rng rng(inst.seed);
        const std::vector<std::int64_t> a_elems = inst.A_set.elements();
        // Empirical measure of the draws; h = f * emp is the averaged
        // (1/k) sum of translates assembled in one convolution.
        DensityFn emp(g);
        double w = static_cast<double>(g.size()) / static_cast<double>(inst.k_samples);
        for (std::int64_t i = 0; i < inst.k_samples; ++i) {
            std::uint64_t j = rng.next_below(static_cast<std::uint64_t>(a_elems.size()));
            emp[a_elems[static_cast<std::size_t>(j)]] += w;
        }
        DensityFn h = convolve(inst.f, emp);
        const double half_thr = 0.5 * inst.epsilon * fnorm + 1e-9;
        std::vector<std::int64_t> good;
        for (std::int64_t u : pool)
            if (lp_norm(h.translate(g.neg(u)) - gfun, inst.p) <= half_thr)
                good.push_back(u);
        if (good.empty())
            throw EmptyResult("cs_translates: sampled run certified no translate; "
                              "retry with a fresh seed or use exhaustive mode");
        s_star = good.front();
        for (std::int64_t t : good)
            if (norm_at(g.sub(t, s_star)) <= thr) core.push_back(t);
        if (core.empty())
            throw EmptyResult("cs_translates: sampled core emptied under re-verification");
    }

    CSResult res;
    res.mode = mode;
    res.s = s_star;
    res.T = ElementSet(g);
    res.f_norm = fnorm;
    res.threshold = thr;
    res.K = inst.K;
    res.k_samples = inst.k_samples;
    res.epsilon = inst.epsilon;
    res.p = inst.p;
    for (std::int64_t t : core) {
        res.T.add(t);
        double n = norm_at(g.sub(t, s_star));
        res.per_t_norms[t] = n;
        res.worst_norm = std::max(res.worst_norm, n);
    }
    res.mu_S_T = static_cast<double>(res.T.size()) / static_cast<double>(inst.S_set.size());
    double k = static_cast<double>(inst.k_samples);
    res.bound = std::pow(2.0 * inst.K, -k);
    res.bound_alt = 0.5 * std::pow(inst.K, -k);
    res.log2_bound = -k * std::log2(2.0 * inst.K);
    if (!(res.mu_S_T > 0.0))
        throw PostconditionFailed("cs_translates: returned an empty core");
    if (!res.T.subset_of(inst.S_set))
        throw PostconditionFailed("cs_translates: core escaped the translate pool");
    return res;
}

// l-fold smoothing kernel mu_T^{*l} * mu_{-T}^{*l}.
struct SmoothingKernel {
    ElementSet T;
    int l = 1;
    DensityFn kernel;
};

inline SmoothingKernel make_smoothing_kernel(const ElementSet& t_set, int l) {
    if (t_set.empty()) throw BadInput("smoothing kernel: T must be nonempty");
    if (l < 1) throw BadInput("smoothing kernel: l must be >= 1");
    const Group& g = t_set.group();
    DensityFn mu = DensityFn::normalized_indicator(t_set);
    DensityFn ker = mu;
    for (int i = 1; i < l; ++i) ker = convolve(ker, mu);
    DensityFn mur = mu.reflect();
    for (int i = 0; i < l; ++i) ker = convolve(ker, mur);
    require_probability_density(ker);
    if (g.size() <= kDirectCap) {
        // support must stay inside lT - lT
        ElementSet fold = t_set;
        for (int i = 1; i < l; ++i) fold = sumset(fold, t_set);
        ElementSet body = sumset(fold, fold.negate());
        for (std::int64_t x = 0; x < g.size(); ++x)
            if (std::abs(ker[x]) > 1e-9 && !body.contains(x))
                throw PostconditionFailed("smoothing kernel has mass at " + std::to_string(x) +
                                          " outside its difference body");
    }
    SmoothingKernel out;
    out.T = t_set;
    out.l = l;
    out.kernel = std::move(ker);
    return out;
}

inline DensityFn smooth_by_kernel(const DensityFn& gfun, const SmoothingKernel& ker) {
    if (gfun.group() != ker.kernel.group())
        throw BadInput("smooth_by_kernel: group mismatch");
    return convolve(gfun, ker.kernel);
}

inline DensityFn smooth_by_kernel(const DensityFn& gfun, const ElementSet& t_set, int l) {
    return smooth_by_kernel(gfun, make_smoothing_kernel(t_set, l));
}

// Certified variant: when every translate of T - s moves gfun by at most
// eps * sigma in L^p(beta), the l-fold cascade keeps the smoothed function
// within 2 l eps sigma.  eps and sigma are the measured values.
inline DensityFn smooth_by_kernel(const DensityFn& gfun, const SmoothingKernel& ker,
                                  double p, double eps, double sigma,
                                  const DensityFn& beta) {
    DensityFn out = smooth_by_kernel(gfun, ker);
    double bound = 2.0 * static_cast<double>(ker.l) * eps * sigma;
    double err = lp_norm(out - gfun, p, &beta);
    if (err > bound * (1.0 + 1e-9) + 1e-12)
        throw PostconditionFailed("smoothing moved g by " + format_double(err) +
                                  " in L^p(beta), above 2 l eps sigma = " + format_double(bound));
    return out;
}

// Dichotomy: either the inner product <1_L * (1_S dbeta'), 1_A>_{L^2(beta)}
// is at least lambda sigma alpha / 2, or the spectrum of the almost-periodic
// core T carries enough of (1_A - alpha)1_B's energy to buy a density
// increment on a further Bohr set.
struct CSDichotomy {
    enum class Tag { LargeInnerProduct, Increment };
    Tag tag = Tag::LargeInnerProduct;

    double lambda = 0.0, alpha = 0.0, sigma = 0.0;
    int l = 1;
    double p = 2.0, eps = 0.0, eta = 0.0;
    double rho_pp = 0.0;       // accepted grid point; B'' = regular (rho''/2l)-dilate of B'
    double sumset_ratio = 0.0; // measured |B'' + B'| / |B'|
    BohrSet b_pp;
    CSResult translates;
    double inner = 0.0;
    double inner_threshold = 0.0; // lambda sigma alpha / 2
    double smoothed_inner = 0.0;
    double holder_bound = 0.0;    // 2 l eps sigma ||1_A||_{L^q(beta)}
    std::optional<EnergyIncrementInput> evidence;
    std::optional<EnergyIncrementResult> increment;

    nlohmann::json to_json() const {
        nlohmann::json j{{"case", tag == Tag::LargeInnerProduct ? "large_inner_product"
                                                                : "increment"},
                         {"lambda", lambda},
                         {"alpha", alpha},
                         {"sigma", sigma},
                         {"l", l},
                         {"p", p},
                         {"eps", eps},
                         {"eta", eta},
                         {"rho_pp", rho_pp},
                         {"sumset_ratio", sumset_ratio},
                         {"b_pp", b_pp.to_json()},
                         {"translates", translates.to_json()},
                         {"inner", inner},
                         {"inner_threshold", inner_threshold},
                         {"smoothed_inner", smoothed_inner},
                         {"holder_bound", holder_bound}};
        if (increment) j["increment"] = increment->to_json();
        return j;
    }
};

inline CSDichotomy cs_dichotomy(const BohrSet& b, const BohrSet& bp, double rho_p,
                                const ElementSet& l_set, const ElementSet& s_set,
                                const ElementSet& a_set, const RunConfig& cfg,
                                std::uint64_t seed, CSMode mode = CSMode::Exhaustive) {
    const Group& g = b.group();
    if (bp.group() != g || l_set.group() != g || s_set.group() != g || a_set.group() != g)
        throw BadInput("cs_dichotomy: group mismatch");
    if (!(rho_p > 0.0 && rho_p <= 1.0))
        throw BadInput("cs_dichotomy: rho' must lie in (0, 1]");
    const ElementSet& b_members = b.members();
    const ElementSet& bp_members = bp.members();
    if (!l_set.subset_of(b_members)) throw BadInput("cs_dichotomy: L must lie in B");
    if (!a_set.subset_of(b_members)) throw BadInput("cs_dichotomy: A must lie in B");
    if (!s_set.subset_of(bp_members)) throw BadInput("cs_dichotomy: S must lie in B'");
    if (!bp_members.subset_of(b.members(rho_p)))
        throw BadInput("cs_dichotomy: B' is not inside B_{rho'}");
    if (l_set.empty() || s_set.empty() || a_set.empty())
        throw BadInput("cs_dichotomy: L, S, A must be nonempty");

    CSDichotomy out;
    out.lambda = static_cast<double>(l_set.size()) / static_cast<double>(b.member_count());
    out.alpha = static_cast<double>(a_set.size()) / static_cast<double>(b.member_count());
    out.sigma = static_cast<double>(s_set.size()) / static_cast<double>(bp.member_count());

    double d = b.estimate_dimension(cfg.dim_grid);
    if (d > 0.0) {
        double cap = cfg.c_cs * out.lambda * out.alpha / d;
        if (rho_p > cap * (1.0 + cfg.tolerance))
            throw BadInput("cs_dichotomy: rho' = " + format_double(rho_p) +
                           " exceeds c_cs lambda alpha / d = " + format_double(cap));
    }

    out.l = std::max(1, static_cast<int>(std::ceil(std::log(2.0 / (out.lambda * out.alpha)))));
    out.p = 2.0 + std::log(1.0 / out.alpha);
    out.eps = out.lambda / (8.0 * std::exp(1.0) * static_cast<double>(out.l));

    // rho'' grid: halve from 1/rank until B'' := regular (rho''/2l)-dilate of
    // B' measurably satisfies |B'' + B'| <= 2 |B'|.  Hits the trivial dilate
    // {0} in the worst case, so the loop terminates with a witness.
    int k_rank = bp.rank() > 0 ? static_cast<int>(bp.rank()) : 1;
    double rho_grid = 1.0 / static_cast<double>(k_rank);
    bool found = false;
    for (int halvings = 0; halvings < 60 && !found; ++halvings, rho_grid *= 0.5) {
        BohrSet cand = bp.dilate(rho_grid / (2.0 * static_cast<double>(out.l)));
        RegularityCertificate cert;
        try {
            cert = find_regular_dilate(cand, cfg.C_regular, {}, cfg.lambda_grid(), cfg.dim_grid);
        } catch (const NoRegularDilate&) {
            continue;
        }
        BohrSet reg = cand.dilate(cert.lambda);
        std::int64_t grow = sumset(reg.members(), bp_members).size();
        if (grow <= 2 * bp.member_count()) {
            out.rho_pp = rho_grid;
            out.sumset_ratio = static_cast<double>(grow) / static_cast<double>(bp.member_count());
            out.b_pp = reg;
            found = true;
        }
    }
    if (!found)
        throw DichotomyFailed("cs_dichotomy: no rho'' grid point kept |B'' + B'| <= 2 |B'|");

    // translate lemma with (A, S, f) := (S, B'', 1_L)
    CSInstance inst = make_cs_instance(DensityFn::indicator(l_set), s_set,
                                       out.b_pp.members(), out.eps, out.p, cfg, seed);
    out.translates = cs_translates(inst, mode);

    DensityFn beta = b.beta();
    double mu_b = b.measure();
    DensityFn s_meas = DensityFn::indicator(s_set) *
                       cplx(static_cast<double>(g.size()) / static_cast<double>(bp.member_count()), 0.0);
    DensityFn g_conv = convolve(DensityFn::indicator(l_set), s_meas);

    // rescaling sanity on the worst surviving translate:
    // ||.||^p_{L^p(beta)} <= mu(B)^-1 ||.||^p_{L^p(mu_G)}
    {
        auto worst = std::max_element(out.translates.per_t_norms.begin(),
                                      out.translates.per_t_norms.end(),
                                      [](const auto& a, const auto& c) { return a.second < c.second; });
        std::int64_t u = g.sub(worst->first, out.translates.s);
        DensityFn diff = g_conv.translate(u) - g_conv;
        double lhs = std::pow(lp_norm(diff, out.p, &beta), out.p);
        double rhs = std::pow(lp_norm(diff, out.p), out.p) / mu_b;
        if (lhs > rhs * (1.0 + 1e-9) + 1e-15)
            throw PostconditionFailed("cs_dichotomy: L^p rescaling bound failed: " +
                                      format_double(lhs) + " > " + format_double(rhs));
    }

    // the certified per-translate line is eps ||f|| + 1e-9, so the effective
    // eps carries that slack through the cascade
    double eps_eff = out.translates.threshold / out.translates.f_norm;
    SmoothingKernel ker = make_smoothing_kernel(out.translates.T, out.l);
    DensityFn smoothed = smooth_by_kernel(g_conv, ker, out.p, eps_eff, out.sigma, beta);

    DensityFn a_ind = DensityFn::indicator(a_set);
    out.inner = inner_product(g_conv, a_ind, &beta).real();
    out.inner_threshold = 0.5 * out.lambda * out.sigma * out.alpha;
    out.smoothed_inner = inner_product(smoothed, a_ind, &beta).real();

    double q = out.p / (out.p - 1.0);
    double a_q = lp_norm(a_ind, q, &beta);
    out.holder_bound = 2.0 * static_cast<double>(out.l) * eps_eff * out.sigma * a_q;
    if (std::abs(out.smoothed_inner - out.inner) > out.holder_bound * (1.0 + 1e-9) + 1e-12)
        throw PostconditionFailed("cs_dichotomy: smoothing moved the inner product by " +
                                  format_double(std::abs(out.smoothed_inner - out.inner)) +
                                  ", above the Holder bound " + format_double(out.holder_bound));
    // by the choice of eps and p the Holder error sits under lambda sigma alpha / 4
    if (2.0 * static_cast<double>(out.l) * out.eps * out.sigma * a_q >
        0.25 * out.lambda * out.sigma * out.alpha * (1.0 + 1e-9))
        throw PostconditionFailed("cs_dichotomy: Holder budget exceeds lambda sigma alpha / 4");

    if (out.inner >= out.inner_threshold) {
        out.tag = CSDichotomy::Tag::LargeInnerProduct;
        return out;
    }

    out.eta = std::pow(out.lambda * out.alpha, 1.0 / (2.0 * static_cast<double>(out.l))) /
              std::pow(16.0, 1.0 / static_cast<double>(out.l));
    DensityFn beta_pp = out.b_pp.beta();
    SpectrumSet spec = spectrum(DensityFn::indicator(out.translates.T), beta_pp, out.eta);
    DensityFn gdiff = DensityFn::indicator(a_set) -
                      DensityFn::indicator(b_members) * cplx(out.alpha, 0.0);
    std::vector<cplx> gh = fourier(gdiff);
    double energy = 0.0;
    for (std::int64_t ch : spec.chars) energy += std::norm(gh[static_cast<std::size_t>(ch)]);

    EnergyIncrementInput ev;
    ev.B = b;
    ev.A = a_set;
    ev.Bp = out.b_pp;
    ev.rho_p = rho_p;
    ev.T = out.translates.T;
    ev.eta = out.eta;
    ev.nu = energy / (out.alpha * out.alpha * mu_b);
    out.evidence = ev;
    try {
        out.increment = energy_increment(ev, cfg, seed);
    } catch (const IncrementTooSmall& e) {
        throw DichotomyFailed("cs_dichotomy: inner product " + format_double(out.inner) +
                              " fell below " + format_double(out.inner_threshold) +
                              " and the spectral branch failed: " + e.what());
    } catch (const HypothesisFailed& e) {
        throw DichotomyFailed("cs_dichotomy: inner product " + format_double(out.inner) +
                              " fell below " + format_double(out.inner_threshold) +
                              " and the spectral branch failed: " + e.what());
    } catch (const BadInput& e) {
        // the only reachable BadInput here is the measured-nu rho' cap, which
        // means the spectral energy fell short of the guaranteed fraction
        throw DichotomyFailed("cs_dichotomy: inner product " + format_double(out.inner) +
                              " fell below " + format_double(out.inner_threshold) +
                              " and the spectral branch refused: " + e.what());
    }
    out.tag = CSDichotomy::Tag::Increment;
    return out;
}

} // namespace bohrlab
