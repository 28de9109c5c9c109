#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bohrlab/bohr.hpp"
#include "bohrlab/config.hpp"
#include "bohrlab/density.hpp"
#include "bohrlab/errors.hpp"
#include "bohrlab/fourier.hpp"
#include "bohrlab/sets.hpp"
#include "bohrlab/spectra.hpp"

namespace bohrlab {

// The inner L/S iteration.  Starting from dense sets A inside B and A'
// inside B', it grows a thick set L inside B and shrinks a set S inside B''
// while keeping the convolution 1_L * (1_S dbeta'') pointwise dominated by
// step_index copies of 1_A * (1_{A'} dbeta'), or it detects along the way
// that A has a density increment on a sub-Bohr set.
//
// All thresholds are evaluated as exact integer comparisons on member
// counts, so a state either satisfies its invariants exactly or an error
// with diagnostics is thrown; nothing depends on float rounding.
struct KKState {
    BohrSet B, Bp, Bpp;               // ambient set, B' in B_{rho'}, B'' in B'_{rho''}
    double rho_p = 0.0, rho_pp = 0.0; // the dilate parameters witnessing containment
    ElementSet A, Ap;                 // A in B with density alpha, A' in B' with alpha'
    ElementSet L, S;                  // the evolving pair, L in B and S in B''
    int step_index = 0;

    double alpha = 0.0, alpha_p = 0.0;
    double dimension_d = 0.0; // measured dimension of B, fixed at init
    std::int64_t last_x = -1; // translate chosen by the most recent step

    double lambda() const { return static_cast<double>(L.size()) / static_cast<double>(B.member_count()); }
    double sigma() const { return static_cast<double>(S.size()) / static_cast<double>(Bpp.member_count()); }

    nlohmann::json to_json() const {
        return nlohmann::json{{"group", B.group().str()},
                              {"B", B.to_json()},
                              {"Bp", Bp.to_json()},
                              {"Bpp", Bpp.to_json()},
                              {"rho_p", rho_p},
                              {"rho_pp", rho_pp},
                              {"sizes",
                               {{"B", B.member_count()},
                                {"Bp", Bp.member_count()},
                                {"Bpp", Bpp.member_count()},
                                {"A", A.size()},
                                {"Ap", Ap.size()},
                                {"L", L.size()},
                                {"S", S.size()}}},
                              {"alpha", alpha},
                              {"alpha_p", alpha_p},
                              {"dimension_d", dimension_d},
                              {"lambda", lambda()},
                              {"sigma", sigma()},
                              {"step_index", step_index},
                              {"last_x", last_x}};
    }
};

struct KKOutcome {
    enum class Tag { Increment, Pair };
    Tag tag = Tag::Pair;
    int steps = 0; // pair steps completed before the outcome

    // Increment: the spectral evidence handed to energy_increment and the
    // increment it produced (holds the new Bohr set).
    std::optional<EnergyIncrementInput> evidence;
    std::optional<EnergyIncrementResult> increment;
    double script_l_measure = 0.0; // beta'(script L) that triggered the case

    // Pair: the final sets with their measured densities.  The domination
    // constant C satisfies 1_L * (1_S dbeta'') <= (C / alpha) mu_{B'}(B'')^{-1}
    // 1_A * (1_{A'} dbeta') pointwise, and sigma >= (alpha'/2)^{C_sigma/alpha}.
    std::optional<ElementSet> L, S;
    double lambda = 0.0, sigma = 0.0;
    double domination_C = 0.0;
    double sigma_exponent_C = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json j{{"tag", tag == Tag::Increment ? "increment" : "pair"}, {"steps", steps}};
        if (tag == Tag::Increment) {
            j["script_l_measure"] = script_l_measure;
            j["eta"] = evidence ? evidence->eta : 0.0;
            j["nu"] = evidence ? evidence->nu : 0.0;
            if (increment) j["increment"] = increment->to_json();
        } else {
            j["lambda"] = lambda;
            j["sigma"] = sigma;
            j["L_size"] = L ? L->size() : 0;
            j["S_size"] = S ? S->size() : 0;
            j["domination_C"] = domination_C;
            j["sigma_exponent_C"] = sigma_exponent_C;
        }
        return j;
    }
};

namespace detail {

// counts[x] = |L cap (x + A)| for every x, as exact integers
inline std::vector<std::int64_t> overlap_counts(const ElementSet& l, const ElementSet& a) {
    return pair_counts(l, a.negate());
}

// counts[x] = |S cap (A' - x)| for every x
inline std::vector<std::int64_t> window_counts(const ElementSet& ap, const ElementSet& s) {
    return pair_counts(ap, s.negate());
}

} // namespace detail

inline KKState kk_init(const BohrSet& b, const BohrSet& bp, const BohrSet& bpp,
                       const ElementSet& a, const ElementSet& ap, double rho_p, double rho_pp,
                       const RunConfig& cfg) {
    const Group& g = b.group();
    if (bp.group() != g || bpp.group() != g || a.group() != g || ap.group() != g)
        throw BadInput("kk_init: group mismatch");
    if (!(rho_p > 0.0) || rho_p > 1.0 || !(rho_pp > 0.0) || rho_pp > 1.0)
        throw BadInput("kk_init: dilate parameters must lie in (0, 1]");
    if (a.empty()) throw BadInput("kk_init: A is empty");
    if (ap.empty()) throw BadInput("kk_init: A' is empty");
    if (!a.subset_of(b.members())) throw BadInput("kk_init: A must lie in B");
    if (!ap.subset_of(bp.members())) throw BadInput("kk_init: A' must lie in B'");
    if (!bp.members().subset_of(b.members(rho_p)))
        throw BadInput("kk_init: B' is not inside B_{rho'}");
    if (!bpp.members().subset_of(bp.members(rho_pp)))
        throw BadInput("kk_init: B'' is not inside B'_{rho''}");

    KKState st;
    st.B = b;
    st.Bp = bp;
    st.Bpp = bpp;
    st.rho_p = rho_p;
    st.rho_pp = rho_pp;
    st.A = a;
    st.Ap = ap;
    st.alpha = static_cast<double>(a.size()) / static_cast<double>(b.member_count());
    st.alpha_p = static_cast<double>(ap.size()) / static_cast<double>(bp.member_count());
    st.dimension_d = b.estimate_dimension(cfg.dim_grid);

    // rho' <= c1 alpha / d and rho'' <= c1 alpha' / k, vacuous at d = 0
    // (every dilate of B is all of B) resp. rank 0
    if (st.dimension_d > 0.0) {
        double cap = cfg.c1_kk * st.alpha / st.dimension_d;
        if (rho_p > cap * (1.0 + cfg.tolerance))
            throw BadInput("kk_init: rho' = " + format_double(rho_p) +
                           " exceeds c1 alpha / d = " + format_double(cap));
    }
    if (bp.rank() > 0) {
        double cap = cfg.c1_kk * st.alpha_p / static_cast<double>(bp.rank());
        if (rho_pp > cap * (1.0 + cfg.tolerance))
            throw BadInput("kk_init: rho'' = " + format_double(rho_pp) +
                           " exceeds c1 alpha' / k = " + format_double(cap));
    }

    // First x in B' (index order) maximizing |B'' cap (A' - x)|; the mean of
    // that count over B' is the integral of 1_{A'} * beta'' against beta',
    // which regularity keeps near alpha' |B''|, so the max clears alpha'/2
    // whenever rho'' left slack.
    std::vector<std::int64_t> win = detail::window_counts(ap, bpp.members());
    const std::vector<std::int64_t> bp_elems = bp.members().elements();
    std::int64_t best_x = -1, best = -1, total = 0;
    for (std::int64_t x : bp_elems) {
        std::int64_t c = win[static_cast<std::size_t>(x)];
        total += c;
        if (c > best) {
            best = c;
            best_x = x;
        }
    }
    const std::int64_t bp_n = bp.member_count(), bpp_n = bpp.member_count();
    double integral = static_cast<double>(total) / static_cast<double>(bp_n) / static_cast<double>(bpp_n);
    if (2 * best * bp_n < ap.size() * bpp_n)
        throw InitFailed("kk_init: best beta''(B'' cap (A' - x)) = " +
                         format_double(static_cast<double>(best) / static_cast<double>(bpp_n)) +
                         " < alpha'/2 = " + format_double(st.alpha_p / 2.0) +
                         " (mean over B' = " + format_double(integral) +
                         "; rho'' = " + format_double(rho_pp) + " left no slack)");
    // A meaningful S-threshold needs alpha' sigma_0 |B''| / 2 >= 1 -- below
    // one element any single shared point qualifies and the iteration carries
    // no information (the singleton-A' degeneracy).
    if (ap.size() * best < 2 * bp_n)
        throw InitFailed("kk_init: alpha' sigma_0 |B''| / 2 = " +
                         format_double(st.alpha_p * static_cast<double>(best) / 2.0) +
                         " < 1: the S-threshold cannot separate a single shared element "
                         "(degenerate thin instance)");

    st.L = ElementSet(g);
    st.S = bpp.members().intersect(ap.translate(g.neg(best_x)));
    if (st.S.size() != best)
        throw PostconditionFailed("kk_init: window recount mismatch: " + std::to_string(st.S.size()) +
                                  " vs " + std::to_string(best));
    st.step_index = 0;
    st.last_x = best_x;
    return st;
}

inline std::variant<KKState, KKOutcome> kk_step(const KKState& st, const RunConfig& cfg,
                                                std::uint64_t seed) {
    const Group& g = st.B.group();
    const std::int64_t b_n = st.B.member_count(), bp_n = st.Bp.member_count();
    if (st.lambda() > cfg.c1_kk * (1.0 + cfg.tolerance))
        throw BadInput("kk_step: lambda = " + format_double(st.lambda()) +
                       " exceeds c1 = " + format_double(cfg.c1_kk));
    if (st.dimension_d > 0.0 &&
        st.rho_p > cfg.c1_kk * st.alpha / st.dimension_d * (1.0 + cfg.tolerance))
        throw BadInput("kk_step: rho' exceeds c1 alpha / d");
    if (st.Bp.rank() > 0 &&
        st.rho_pp > cfg.c1_kk * st.alpha_p / static_cast<double>(st.Bp.rank()) * (1.0 + cfg.tolerance))
        throw BadInput("kk_step: rho'' exceeds c1 alpha' / k");
    if (st.S.empty()) throw BadInput("kk_step: S is empty");

    // script L = { x in B' : |L cap (x + A)| / |B| >= alpha/2 }, exactly
    // 2 |L cap (x+A)| >= |A|
    std::vector<std::int64_t> lcounts = detail::overlap_counts(st.L, st.A);
    const std::vector<std::int64_t> bp_elems = st.Bp.members().elements();
    ElementSet script_l(g);
    for (std::int64_t x : bp_elems)
        if (2 * lcounts[static_cast<std::size_t>(x)] >= st.A.size()) script_l.add(x);
    double script_l_measure = static_cast<double>(script_l.size()) / static_cast<double>(bp_n);

    if (8 * script_l.size() >= st.Ap.size()) {
        // beta'(script L) >= alpha'/8: the overlap counts are biased, which
        // forces (1_A - alpha)1_B to hold nu alpha^2 mu(B) of spectral energy
        // on Spec_eta(1_{-script L}, beta') with eta = sqrt(alpha)/16; measure
        // nu and hand the evidence to the energy increment.
        EnergyIncrementInput ev;
        ev.B = st.B;
        ev.A = st.A;
        ev.Bp = st.Bp;
        ev.rho_p = st.rho_p;
        ev.T = script_l.negate();
        ev.eta = std::sqrt(st.alpha) / 16.0;
        DensityFn beta_p = st.Bp.beta();
        SpectrumSet spec = spectrum(DensityFn::indicator(ev.T), beta_p, ev.eta);
        DensityFn gfun = DensityFn::indicator(st.A) -
                         DensityFn::indicator(st.B.members()) * cplx(st.alpha, 0.0);
        std::vector<cplx> gh = fourier(gfun);
        double energy = 0.0;
        for (std::int64_t gamma : spec.chars) energy += std::norm(gh[static_cast<std::size_t>(gamma)]);
        double mu_b = static_cast<double>(b_n) / static_cast<double>(g.size());
        ev.nu = energy / (st.alpha * st.alpha * mu_b);

        KKOutcome out;
        out.tag = KKOutcome::Tag::Increment;
        out.steps = st.step_index;
        out.script_l_measure = script_l_measure;
        out.evidence = ev;
        out.increment = energy_increment(ev, cfg, seed);
        return out;
    }

    // script S = { x in B' : |S cap (A' - x)| / |B''| >= alpha' sigma / 2 },
    // exactly 2 |S cap (A'-x)| |B'| >= |A'| |S|
    std::vector<std::int64_t> scounts = detail::window_counts(st.Ap, st.S);
    std::int64_t chosen = -1, script_s_size = 0;
    for (std::int64_t x : bp_elems) {
        if (2 * scounts[static_cast<std::size_t>(x)] * bp_n < st.Ap.size() * st.S.size()) continue;
        ++script_s_size;
        if (chosen < 0 && !script_l.contains(x)) chosen = x;
    }
    if (chosen < 0) {
        double script_s_measure = static_cast<double>(script_s_size) / static_cast<double>(bp_n);
        throw CaseSplitFailed(
            "kk_step: script S minus script L is empty: beta'(script S) = " +
            format_double(script_s_measure) + " (averaging predicts >= alpha'/4 = " +
            format_double(st.alpha_p / 4.0) + "), beta'(script L) = " + format_double(script_l_measure) +
            (script_s_measure < st.alpha_p / 4.0
                 ? "; regularity erosion on B''_{rho''} exceeded its slack -- shrink rho''"
                 : "; script S is swallowed by script L -- inconsistent case split") +
            "\nstate: " + st.to_json().dump());
    }

    KKState next = st;
    ElementSet shifted = st.A.translate(chosen).intersect(st.B.members());
    next.L = st.L.unite(shifted);
    next.S = st.S.intersect(st.Ap.translate(g.neg(chosen)));
    next.step_index = st.step_index + 1;
    next.last_x = chosen;

    // beta(L') >= lambda + alpha/4, exactly 4 (|L'| - |L|) >= |A|
    if (4 * (next.L.size() - st.L.size()) < st.A.size()) {
        bool erosion = 4 * shifted.size() < 3 * st.A.size();
        throw PostconditionFailed(
            "kk_step: growth 4 (|L'| - |L|) = " + std::to_string(4 * (next.L.size() - st.L.size())) +
            " < |A| = " + std::to_string(st.A.size()) + "; |(x+A) cap B| = " +
            std::to_string(shifted.size()) +
            (erosion ? " < 3|A|/4: regularity erosion on B_{rho'} exceeded its slack -- shrink rho'"
                     : " held, so the x not in script L bookkeeping is violated") +
            "\nstate: " + st.to_json().dump());
    }
    // cumulative eqn.u: lambda_i >= alpha i / 4, exactly 4 |L_i| >= |A| i
    if (4 * next.L.size() < st.A.size() * next.step_index)
        throw PostconditionFailed("kk_step: lambda_" + std::to_string(next.step_index) +
                                  " fell below alpha i / 4\nstate: " + next.to_json().dump());

    // beta''(S') >= alpha' sigma / 2, exactly 2 |S'| |B'| >= |A'| |S|; the
    // chosen x is in script S so this is its membership test restated
    if (next.S.size() != scounts[static_cast<std::size_t>(chosen)] ||
        2 * next.S.size() * bp_n < st.Ap.size() * st.S.size())
        throw PostconditionFailed("kk_step: sigma update violated at x = " + std::to_string(chosen) +
                                  "\nstate: " + st.to_json().dump());
    // cumulative: sigma_i >= (alpha'/2)^{i+1}, a float compare since the
    // right side is not rational in the counts
    if (next.sigma() < std::pow(st.alpha_p / 2.0, next.step_index + 1) * (1.0 - cfg.tolerance))
        throw PostconditionFailed("kk_step: sigma_" + std::to_string(next.step_index) +
                                  " fell below (alpha'/2)^{i+1}\nstate: " + next.to_json().dump());

    // eqn.v, step form: |L' cap (z - S')|-type counts obey
    // pc(L',S') <= pc(L,S) + pc(A,A') at every z, and cumulatively
    // pc(L_i,S_i) <= i pc(A,A'); both exact integer comparisons
    std::vector<std::int64_t> lhs = pair_counts(next.L, next.S);
    std::vector<std::int64_t> prev = pair_counts(st.L, st.S);
    std::vector<std::int64_t> base = pair_counts(st.A, st.Ap);
    for (std::size_t z = 0; z < lhs.size(); ++z) {
        if (lhs[z] > prev[z] + base[z])
            throw PostconditionFailed("kk_step: pointwise domination step bound fails at z = " +
                                      std::to_string(z) + ": " + std::to_string(lhs[z]) + " > " +
                                      std::to_string(prev[z]) + " + " + std::to_string(base[z]) +
                                      "\nstate: " + st.to_json().dump());
        if (lhs[z] > static_cast<std::int64_t>(next.step_index) * base[z])
            throw PostconditionFailed("kk_step: pointwise domination invariant fails at z = " +
                                      std::to_string(z) + "\nstate: " + next.to_json().dump());
    }
    return next;
}

inline KKOutcome kk_iterate(const BohrSet& b, const BohrSet& bp, const BohrSet& bpp,
                            const ElementSet& a, const ElementSet& ap, double rho_p, double rho_pp,
                            int max_steps, const RunConfig& cfg, std::uint64_t seed,
                            std::vector<nlohmann::json>* trace = nullptr) {
    KKState st = kk_init(b, bp, bpp, a, ap, rho_p, rho_pp, cfg);
    int budget = static_cast<int>(std::ceil(cfg.C_iter / st.alpha));
    int allowed = max_steps > 0 ? std::min(max_steps, budget) : budget;

    while (st.lambda() <= cfg.c1_kk) {
        if (st.step_index >= allowed)
            throw MaxStepsExceeded("kk_iterate: lambda = " + format_double(st.lambda()) +
                                   " has not passed c1 = " + format_double(cfg.c1_kk) + " after " +
                                   std::to_string(st.step_index) + " steps (budget " +
                                   std::to_string(allowed) + ")");
        auto r = kk_step(st, cfg, seed + static_cast<std::uint64_t>(st.step_index));
        if (std::holds_alternative<KKOutcome>(r)) {
            KKOutcome out = std::get<KKOutcome>(std::move(r));
            if (trace)
                trace->push_back(nlohmann::json{{"i", st.step_index + 1},
                                                {"lambda", st.lambda()},
                                                {"sigma", st.sigma()},
                                                {"case", "increment"},
                                                {"x", nullptr}});
            return out;
        }
        st = std::get<KKState>(std::move(r));
        if (trace)
            trace->push_back(nlohmann::json{{"i", st.step_index},
                                            {"lambda", st.lambda()},
                                            {"sigma", st.sigma()},
                                            {"case", "pair"},
                                            {"x", st.last_x}});
    }

    // final pair: re-verify eqn.u and eqn.v from scratch and record the
    // measured constants of the conclusion
    const int i0 = st.step_index;
    if (4 * st.L.size() < st.A.size() * i0)
        throw PostconditionFailed("kk_iterate: final lambda below alpha i0 / 4");
    if (st.sigma() < std::pow(st.alpha_p / 2.0, i0 + 1) * (1.0 - cfg.tolerance))
        throw PostconditionFailed("kk_iterate: final sigma below (alpha'/2)^{i0+1}");
    std::vector<std::int64_t> lhs = pair_counts(st.L, st.S);
    std::vector<std::int64_t> base = pair_counts(st.A, st.Ap);
    for (std::size_t z = 0; z < lhs.size(); ++z)
        if (lhs[z] > static_cast<std::int64_t>(i0) * base[z])
            throw PostconditionFailed("kk_iterate: final pointwise domination fails at z = " +
                                      std::to_string(z));

    KKOutcome out;
    out.tag = KKOutcome::Tag::Pair;
    out.steps = i0;
    out.L = st.L;
    out.S = st.S;
    out.lambda = st.lambda();
    out.sigma = st.sigma();
    out.domination_C = static_cast<double>(i0) * st.alpha;
    out.sigma_exponent_C = st.alpha * static_cast<double>(i0 + 1);
    return out;
}

} // namespace bohrlab
