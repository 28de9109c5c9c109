#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bohrlab/cli.hpp"

namespace bohrlab {
namespace acceptance {

// The acceptance battery: ten numbered criteria covering every module, run
// with pinned seeds so the whole battery is deterministic.  Each criterion is
// a self-contained function returning a pass/fail verdict plus a one-line
// metric summary; exceptions are converted into failures, never crashes.

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    std::string detail;

    nlohmann::json to_json() const {
        return nlohmann::json{{"id", id},
                              {"name", name},
                              {"pass", pass},
                              {"seconds", seconds},
                              {"detail", detail}};
    }
};

namespace detail {

// Collects requirement outcomes; keeps the first failure message.
struct Checker {
    int checks = 0;
    int failures = 0;
    std::string first;

    void require(bool cond, const std::string& msg) {
        ++checks;
        if (!cond) {
            ++failures;
            if (first.empty()) first = msg;
        }
    }
    bool ok() const { return failures == 0; }
    std::string summary(const std::string& metrics) const {
        std::ostringstream os;
        os << metrics << "; " << checks << " checks";
        if (failures > 0) os << ", " << failures << " FAILED: " << first;
        return os.str();
    }
};

inline bool cnear(cplx a, cplx b, double rel) {
    return std::abs(a - b) <= rel * std::max(1.0, std::abs(b));
}

inline std::vector<std::int64_t> brute_pair_counts(const ElementSet& u, const ElementSet& v) {
    const Group& g = u.group();
    std::vector<std::int64_t> out(static_cast<std::size_t>(g.size()), 0);
    auto vs = v.elements();
    for (std::int64_t x : u.elements())
        for (std::int64_t y : vs) ++out[static_cast<std::size_t>(g.add(x, y))];
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

} // namespace detail

// 1. Fourier transform against a direct DFT, Parseval, convolution theorem.
inline CriterionResult c1_transforms(const RunConfig& cfg) {
    detail::Checker ck;
    const std::vector<std::string> catalog = {"Z2",        "Z3",       "Z16",      "Z17",
                                              "Z64",       "Z100",     "Z128",     "Z255",
                                              "Z256",      "Z2xZ2xZ2", "Z3xZ5xZ7", "Z4xZ9",
                                              "Z6xZ6",     "Z13xZ19",  "Z5xZ5",    "Z241"};
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Group g = Group::parse(catalog[static_cast<std::size_t>(trial) % catalog.size()],
                               cfg.size_cap);
        const std::int64_t n = g.size();
        DensityFn f(g), h(g);
        for (std::int64_t x = 0; x < n; ++x) {
            f[x] = cplx(2.0 * rng.next_double() - 1.0, 2.0 * rng.next_double() - 1.0);
            h[x] = cplx(2.0 * rng.next_double() - 1.0, 2.0 * rng.next_double() - 1.0);
        }
        std::vector<cplx> fh = fourier(f);
        // direct DFT; phase() is the fraction of a full turn
        for (std::int64_t gamma = 0; gamma < n; ++gamma) {
            cplx acc = 0.0;
            for (std::int64_t x = 0; x < n; ++x)
                acc += f[x] * std::polar(1.0, -2.0 * std::numbers::pi * g.phase(gamma, x));
            acc /= static_cast<double>(n);
            worst = std::max(worst, std::abs(fh[static_cast<std::size_t>(gamma)] - acc));
            ck.require(detail::cnear(fh[static_cast<std::size_t>(gamma)], acc, 1e-9),
                       "transform mismatch on " + g.str());
        }
        // Parseval
        double lhs = 0.0, rhs = 0.0;
        for (std::int64_t x = 0; x < n; ++x) lhs += std::norm(f[x]);
        lhs /= static_cast<double>(n);
        for (const cplx& c : fh) rhs += std::norm(c);
        ck.require(near(lhs, rhs, 1e-9, 1e-12), "Parseval failed on " + g.str());
        // convolution theorem
        std::vector<cplx> hh = fourier(h);
        std::vector<cplx> ch = fourier(convolve(f, h));
        for (std::int64_t gamma = 0; gamma < n; ++gamma)
            ck.require(detail::cnear(ch[static_cast<std::size_t>(gamma)],
                                     fh[static_cast<std::size_t>(gamma)] *
                                         hh[static_cast<std::size_t>(gamma)],
                                     1e-9),
                       "convolution theorem failed on " + g.str());
    }
    std::ostringstream m;
    m << "100 functions, worst DFT deviation " << format_double(worst);
    return {1, "transform-identities", ck.ok(), 0.0, ck.summary(m.str())};
}

// 2. count_3ap: Fourier vs brute on random sets; 3AP-free sets score |A|.
inline CriterionResult c2_count_equivalence(const RunConfig& cfg) {
    detail::Checker ck;
    Rng rng(202);
    for (int trial = 0; trial < 200; ++trial) {
        std::int64_t n = 3 + 2 * static_cast<std::int64_t>(rng.next_below(1001)); // odd <= 2003
        Group g = Group::product({n}, cfg.size_cap);
        double density = 0.05 + 0.55 * rng.next_double();
        ElementSet a = ElementSet::random(g, density, rng);
        APCount f = count_3ap(g, a, APCountMode::Fourier);
        APCount b = count_3ap(g, a, APCountMode::Brute);
        ck.require(f.triple_count == b.triple_count,
                   "triple count mismatch on Z" + std::to_string(n));
        ck.require(near(f.value, b.value, 1e-9, 1e-12), "value mismatch on Z" + std::to_string(n));
    }
    int certified = 0;
    std::vector<ConstructionResult> frees;
    for (std::int64_t n : {2L, 5L, 8L, 14L, 20L, 41L, 50L, 80L, 100L, 122L, 200L, 365L, 500L,
                           730L, 1000L, 1094L})
        frees.push_back(ternary_free_set(n));
    for (std::int64_t n : {100L, 1000L, 3000L, 10000L}) frees.push_back(behrend_set(n));
    for (const ConstructionResult& r : frees) {
        ck.require(r.certified_free, "construction not certified at N = " + std::to_string(r.n));
        FreimanImage img = freiman_embed(r.a, r.n);
        APCount c = count_3ap(img.group, img.image, APCountMode::Brute);
        ck.require(c.triple_count == r.size,
                   "free set scored extra triples at N = " + std::to_string(r.n));
        ++certified;
    }
    std::ostringstream m;
    m << "200 random sets, " << certified << " certified 3AP-free sets";
    return {2, "3ap-count-equivalence", ck.ok(), 0.0, ck.summary(m.str())};
}

// 3. Freiman embedding: integer nontrivial count == embedded nontrivial count.
inline CriterionResult c3_freiman(const RunConfig& cfg) {
    (void)cfg;
    detail::Checker ck;
    Rng rng(303);
    auto integer_nontrivial = [](const std::vector<std::int64_t>& a) {
        std::int64_t cnt = 0;
        std::unordered_set<std::int64_t> s(a.begin(), a.end());
        for (std::int64_t a1 : a)
            for (std::int64_t a2 : a)
                if (a1 != a2 && s.count(2 * a2 - a1)) ++cnt;
        return cnt;
    };
    for (int trial = 0; trial < 500; ++trial) {
        double density = 0.05 + 0.6 * rng.next_double();
        std::vector<std::int64_t> a;
        for (std::int64_t v = 1; v <= 60; ++v)
            if (rng.next_double() < density) a.push_back(v);
        FreimanImage img = freiman_embed(a, 60);
        APCount c = count_3ap(img.group, img.image, APCountMode::Brute);
        std::int64_t embedded = c.triple_count - static_cast<std::int64_t>(a.size());
        ck.require(integer_nontrivial(a) == embedded,
                   "sampled mismatch at trial " + std::to_string(trial));
        if (!ck.ok()) break;
    }
    // exhaustive over every subset of {1..N} for N <= 20
    std::int64_t masks = 0;
    for (int n = 1; n <= 20 && ck.ok(); ++n) {
        for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
            std::vector<std::int64_t> a;
            for (int i = 0; i < n; ++i)
                if (mask & (1u << i)) a.push_back(i + 1);
            FreimanImage img = freiman_embed(a, n);
            APCount c = count_3ap(img.group, img.image, APCountMode::Brute);
            std::int64_t embedded = c.triple_count - static_cast<std::int64_t>(a.size());
            if (integer_nontrivial(a) != embedded) {
                ck.require(false, "exhaustive mismatch at n = " + std::to_string(n) + " mask " +
                                      std::to_string(mask));
                break;
            }
            ++masks;
        }
        ck.require(true, "");
    }
    std::ostringstream m;
    m << "500 samples in {1..60}, " << masks << " exhaustive subsets with N <= 20";
    return {3, "freiman-exactness", ck.ok(), 0.0, ck.summary(m.str())};
}

// 4. Bohr set membership laws and regular-dilate certificates.
inline CriterionResult c4_bohr_laws(const RunConfig& cfg) {
    detail::Checker ck;
    Group g = Group::parse("Z2003", cfg.size_cap);
    Rng rng(404);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t rank = 1 + rng.next_below(3);
        std::vector<std::int64_t> freq;
        std::vector<double> width;
        for (std::size_t j = 0; j < rank; ++j) {
            freq.push_back(1 + static_cast<std::int64_t>(rng.next_below(2002)));
            width.push_back(0.05 + 1.95 * rng.next_double());
        }
        BohrSet b(g, freq, width);
        const ElementSet& mem = b.members();
        ck.require(mem.contains(0), "0 not a member");
        bool symmetric = true;
        for (std::int64_t x : mem.elements())
            if (!mem.contains(g.neg(x))) symmetric = false;
        ck.require(symmetric, "membership not symmetric");
        ck.require(b.dilate(0.3).members().subset_of(b.dilate(0.7).members()),
                   "dilates do not nest");
        ck.require(b.dilate(0.7).members().subset_of(mem), "dilate exceeds base");
        ck.require(b.dilate(1000.0).member_count() == g.size(), "width clamp misses elements");
    }
    int found = 0, revalidated = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t rank = 1 + rng.next_below(3);
        std::vector<std::int64_t> freq;
        std::vector<double> width;
        for (std::size_t j = 0; j < rank; ++j) {
            freq.push_back(1 + static_cast<std::int64_t>(rng.next_below(2002)));
            width.push_back(0.2 + 1.3 * rng.next_double());
        }
        BohrSet b(g, freq, width);
        try {
            RegularityCertificate cert = find_regular_dilate(b, cfg.C_regular);
            ++found;
            ck.require(cert.lambda >= 0.5 && cert.lambda < 1.0, "lambda outside [1/2, 1)");
            if (revalidate_certificate(b, cert)) ++revalidated;
            else ck.require(false, "certificate failed raw recount");
        } catch (const NoRegularDilate&) {
            // counted against the 90% floor below
        }
    }
    ck.require(found >= 90, "regular dilate found only " + std::to_string(found) + "/100 times");
    ck.require(revalidated == found, "revalidation losses");
    std::ostringstream m;
    m << "100 law instances; regular dilate " << found << "/100, all revalidated";
    return {4, "bohr-laws-regularity", ck.ok(), 0.0, ck.summary(m.str())};
}

// 5. Croot–Sisask translates, exhaustive and sampled modes.
inline CriterionResult c5_croot_sisask(const RunConfig& cfg) {
    detail::Checker ck;
    Group g = Group::parse("Z4001", cfg.size_cap);
    const double eps_grid[2] = {0.25, 0.125};
    const double p_grid[2] = {2.0, 4.0};
    const double widths[5] = {0.10, 0.15, 0.20, 0.25, 0.30};
    Rng rng(505);
    int sampled_valid = 0, pairs = 0;
    std::size_t verified_t = 0;
    for (int inst = 0; inst < 20; ++inst) {
        double eps = eps_grid[inst % 2];
        double p = p_grid[(inst / 2) % 2];
        double w = widths[static_cast<std::size_t>(inst) % 5];
        ElementSet a_set = BohrSet(g, {1}, {w}).members();
        ElementSet s_set = BohrSet(g, {1}, {1.5 * w}).members();
        ElementSet f_set = ElementSet::random(g, 0.3, rng);
        DensityFn f = DensityFn::indicator(f_set);

        CSInstance inst_ex = make_cs_instance(f, a_set, s_set, eps, p, cfg, 0);
        CSResult ex = cs_translates(inst_ex, CSMode::Exhaustive);
        ck.require(ex.T.size() > 0, "exhaustive T empty");
        ck.require(ex.mu_S_T >= ex.bound, "mu_S(T) below reported bound");
        // direct re-verification of the returned translates
        DensityFn gfun = convolve(f, DensityFn::normalized_indicator(a_set));
        double fp = lp_norm(f, p);
        double line = eps * fp + 1e-9;
        double recomputed_worst = 0.0;
        std::size_t checked = 0;
        for (std::int64_t t : ex.T.elements()) {
            if (checked >= 150) break;
            double nrm = lp_norm(gfun.translate(g.sub(t, ex.s)) - gfun, p);
            recomputed_worst = std::max(recomputed_worst, nrm);
            ck.require(nrm <= line + 1e-12, "exhaustive translate fails Lp bound");
            ++checked;
            ++verified_t;
        }
        if (static_cast<std::int64_t>(checked) == ex.T.size())
            ck.require(near(recomputed_worst, ex.worst_norm, 1e-9, 1e-12),
                       "reported worst norm disagrees with recomputation");

        CSInstance inst_s = make_cs_instance(f, a_set, s_set, eps, p, cfg,
                                             1000 + static_cast<std::uint64_t>(inst));
        ++pairs;
        try {
            CSResult sa = cs_translates(inst_s, CSMode::Sampled);
            bool valid = sa.T.size() > 0;
            std::size_t schecked = 0;
            for (std::int64_t t : sa.T.elements()) {
                if (schecked >= 150) break;
                double nrm = lp_norm(gfun.translate(g.sub(t, sa.s)) - gfun, p);
                ck.require(nrm <= line + 1e-12, "sampled translate fails direct verification");
                ++schecked;
                ++verified_t;
            }
            if (valid) ++sampled_valid;
        } catch (const EmptyResult&) {
            // an unlucky draw; scored against the 80% floor
        }
    }
    ck.require(sampled_valid * 5 >= pairs * 4,
               "sampled success rate " + std::to_string(sampled_valid) + "/" +
                   std::to_string(pairs));
    std::ostringstream m;
    m << "20 instances, sampled valid " << sampled_valid << "/" << pairs << ", " << verified_t
      << " translates re-verified";
    return {5, "croot-sisask-translates", ck.ok(), 0.0, ck.summary(m.str())};
}

// 6. Katz–Koester iteration: growth laws, domination, termination budget.
inline CriterionResult c6_kk_laws(const RunConfig& cfg) {
    detail::Checker ck;
    const std::int64_t groups[4] = {2003, 3001, 1601, 2501};
    const double widths[4] = {0.8, 1.0, 1.2, 1.4};
    const double rho_bases[3] = {0.1, 0.12, 0.15};
    const double dens_a[3] = {0.25, 0.35, 0.5};
    const double dens_ap[3] = {0.35, 0.45, 0.6};
    int completed = 0, increments = 0;
    int worst_steps = 0;
    for (int inst = 0; inst < 20; ++inst) {
        Group g = Group::product({groups[inst % 4]}, cfg.size_cap);
        BohrSet whole = BohrSet::whole_group(g);
        BohrSet base(g, {1}, {widths[(inst / 4) % 4]});
        RegularityCertificate c1 = find_regular_dilate(base, cfg.C_regular);
        BohrSet bp = base.dilate(c1.lambda);
        BohrSet cand = bp.dilate(rho_bases[inst % 3]);
        RegularityCertificate c2 = find_regular_dilate(cand, cfg.C_regular);
        BohrSet bpp = cand.dilate(c2.lambda);
        double rho_pp = rho_bases[inst % 3] * c2.lambda;

        Rng rng(200 + static_cast<std::uint64_t>(inst));
        ElementSet a = cli::thin_set(whole.members(), dens_a[(inst / 3) % 3], rng);
        ElementSet ap = cli::thin_set(bp.members(), dens_ap[(inst / 5) % 3], rng);
        try {
            KKState st = kk_init(whole, bp, bpp, a, ap, 1.0, rho_pp, cfg);
            std::vector<std::int64_t> basecnt = detail::brute_pair_counts(a, ap);
            int budget = static_cast<int>(std::ceil(cfg.C_iter / st.alpha));
            bool done = false;
            while (true) {
                int i = st.step_index;
                ck.require(4 * st.L.size() >= a.size() * static_cast<std::int64_t>(i),
                           "lambda_i below alpha i/4");
                ck.require(st.sigma() >= std::pow(st.alpha_p / 2.0, i + 1) * (1.0 - 1e-9),
                           "sigma_i below (alpha'/2)^(i+1)");
                std::vector<std::int64_t> lhs = detail::brute_pair_counts(st.L, st.S);
                for (std::size_t z = 0; z < lhs.size(); ++z)
                    if (lhs[z] > static_cast<std::int64_t>(i) * basecnt[z]) {
                        ck.require(false, "pointwise domination fails at step " +
                                              std::to_string(i));
                        break;
                    }
                if (st.lambda() > cfg.c1_kk) { done = true; break; }   // pair termination
                if (i >= budget) break;
                auto r = kk_step(st, cfg, 600 + static_cast<std::uint64_t>(i));
                if (std::holds_alternative<KKOutcome>(r)) {
                    ++increments;
                    done = true;
                    break;
                }
                st = std::get<KKState>(r);
            }
            ck.require(done, "no termination within ceil(8/alpha) = " + std::to_string(budget) +
                                 " steps");
            worst_steps = std::max(worst_steps, st.step_index);
            if (done) ++completed;
        } catch (const Error& e) {
            ck.require(false, std::string("instance ") + std::to_string(inst) + ": " + e.what());
        }
    }
    std::ostringstream m;
    m << completed << "/20 terminated (" << increments << " increments), max steps "
      << worst_steps;
    return {6, "kk-iteration-laws", ck.ok(), 0.0, ck.summary(m.str())};
}

// 7. Energy increment delivers the promised sup-norm gain.
inline CriterionResult c7_energy_increment(const RunConfig& cfg) {
    detail::Checker ck;
    Group g = Group::parse("Z2003", cfg.size_cap);
    const double base_widths[3] = {0.35, 0.4, 0.45};
    const int intervals[3] = {250, 300, 350};
    const double noises[3] = {0.03, 0.05, 0.08};
    double worst_margin = 1e9;
    for (int inst = 0; inst < 10; ++inst) {
        BohrSet whole = BohrSet::whole_group(g);
        BohrSet base(g, {1}, {base_widths[inst % 3]});
        RegularityCertificate cert = find_regular_dilate(base, cfg.C_regular);
        BohrSet bp = base.dilate(cert.lambda);

        Rng rng(300 + static_cast<std::uint64_t>(inst));
        ElementSet a(g);
        for (std::int64_t x = 0; x < intervals[(inst / 3) % 3]; ++x) a.add(x);
        for (std::int64_t x = 0; x < g.size(); ++x)
            if (rng.next_double() < noises[inst % 3]) a.add(x);

        EnergyIncrementInput inp;
        inp.B = whole;
        inp.A = a;
        inp.Bp = bp;
        inp.rho_p = 1.0;
        inp.T = bp.members(1.0);
        inp.eta = 0.25;
        double alpha = a.density();
        SpectrumSet spec = spectrum(DensityFn::indicator(inp.T), bp.beta(1.0), inp.eta);
        DensityFn gfun = DensityFn::indicator(a) - DensityFn(g, cplx(alpha, 0.0));
        std::vector<cplx> gh = fourier(gfun);
        double hyp = 0.0;
        for (std::int64_t gamma : spec.chars) hyp += std::norm(gh[static_cast<std::size_t>(gamma)]);
        double nu = 0.999 * hyp / (alpha * alpha);
        inp.nu = nu;
        try {
            EnergyIncrementResult res = energy_increment(inp, cfg, 700 + static_cast<std::uint64_t>(inst));
            double sup = convolve(DensityFn::indicator(a), res.b_pp.beta()).max_real();
            double floor = alpha * (1.0 + nu / 16.0) * (1.0 - 1e-9);
            worst_margin = std::min(worst_margin, sup - floor);
            ck.require(sup >= floor, "sup-norm gain missing on instance " + std::to_string(inst));
        } catch (const Error& e) {
            ck.require(false, std::string("instance ") + std::to_string(inst) + ": " + e.what());
        }
    }
    std::ostringstream m;
    m << "10 instances, slimmest margin " << format_double(worst_margin);
    return {7, "energy-increment", ck.ok(), 0.0, ck.summary(m.str())};
}

// 8. End-to-end driver runs: growth, budget, terminal soundness.
inline CriterionResult c8_end_to_end(const RunConfig& cfg) {
    detail::Checker ck;
    struct RunSpec { std::int64_t m; double density; std::uint64_t seed; };
    std::vector<RunSpec> runs;
    for (std::int64_t m : {101L, 1001L, 2003L})
        for (double d : {0.1, 0.2, 0.5})
            for (std::uint64_t s : {11ull, 12ull}) runs.push_back({m, d, s});
    runs.push_back({101, 0.2, 13});
    runs.push_back({2003, 0.5, 13});

    int terminal_runs = 0, stalled = 0, budget_exceeded = 0;
    for (const RunSpec& r : runs) {
        RunConfig rc = cfg;
        rc.seed = r.seed;
        Group g = Group::product({r.m}, cfg.size_cap);
        Rng rng(r.seed);
        ElementSet a = ElementSet::random(g, r.density, rng);
        std::vector<nlohmann::json> trace;
        auto check_growth = [&](const std::vector<nlohmann::json>& states) {
            for (std::size_t j = 1; j < states.size(); ++j) {
                if (!states[j].contains("branch")) continue; // terminal evidence line
                std::string branch = states[j]["branch"];
                double prev = states[j - 1]["alpha"];
                double cur = states[j]["alpha"];
                if (branch.rfind("increment", 0) == 0)
                    ck.require(cur >= prev * (1.0 + cfg.c_main / 4.0) * (1.0 - cfg.tolerance),
                               "growth floor violated");
                ck.require(cur > prev * (1.0 - cfg.tolerance), "alpha not increasing");
            }
        };
        try {
            IterationLog log = run_main_iteration(g, a, rc, &trace);
            ++terminal_runs;
            double a0 = log.alpha0;
            ck.require(log.budget <= static_cast<int>(std::ceil(
                                         16.0 * std::log(2.0 / a0))) +
                                         1,
                       "budget exceeds 16 log(2/alpha)");
            ck.require(static_cast<int>(log.states.size()) - 1 <= log.budget,
                       "more steps than budget");
            check_growth(trace);
            APCount brute = count_3ap(g, a, APCountMode::Brute);
            ck.require(log.terminal.claimed <= brute.value * (1.0 + 1e-12) + 1e-15,
                       "terminal bound exceeds brute value on Z" + std::to_string(r.m));
        } catch (const StepStalled&) {
            ++stalled;
            check_growth(trace);
        } catch (const MaxStepsExceeded&) {
            ++budget_exceeded;
            check_growth(trace);
        }
    }
    ck.require(terminal_runs >= 1, "no run reached a terminal certificate");
    std::ostringstream m;
    m << terminal_runs << "/" << runs.size() << " terminal, " << stalled << " stalled, "
      << budget_exceeded << " out of budget";
    return {8, "end-to-end-soundness", ck.ok(), 0.0, ck.summary(m.str())};
}

// 9. Constructions and Chang-report ratios.
inline CriterionResult c9_constructions(const RunConfig& cfg) {
    detail::Checker ck;
    ConstructionResult t14 = ternary_free_set(14);
    ck.require(t14.a == std::vector<std::int64_t>({1, 2, 4, 5, 10, 11, 13, 14}),
               "ternary(14) wrong");
    ConstructionResult be = behrend_set(10000);
    ck.require(be.certified_free, "behrend(10^4) not certified");
    ck.require(be.size >= 20, "behrend(10^4) too small");
    ck.require(is_3ap_free(be.a), "behrend(10^4) has a 3AP");

    Group g = Group::parse("Z2003", cfg.size_cap);
    DensityFn mu(g, cplx(1.0, 0.0));
    Rng rng(909);
    const double eps_grid[4] = {0.15, 0.2, 0.3, 0.4};
    double min_ratio = 1e300, max_ratio = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        double density = 0.1 + 0.5 * rng.next_double();
        ElementSet set = ElementSet::random(g, density, rng);
        DensityFn f = DensityFn::indicator(set);
        ChangReport rep = chang_entropy_check(f, mu, eps_grid[inst % 4], cfg.C_chang,
                                              cfg.omega_trials,
                                              900 + static_cast<std::uint64_t>(inst));
        ck.require(std::isfinite(rep.ratio), "ratio not finite");
        ck.require(rep.bound > 0.0, "bound not positive");
        min_ratio = std::min(min_ratio, rep.ratio);
        max_ratio = std::max(max_ratio, rep.ratio);
    }
    std::ostringstream m;
    m << "ternary(14) ok, behrend(10^4) size " << be.size << ", 20 Chang ratios in ["
      << format_double(min_ratio) << ", " << format_double(max_ratio) << "]";
    return {9, "constructions", ck.ok(), 0.0, ck.summary(m.str())};
}

// 10. Byte-identical replay of seeded commands, output files included.
inline CriterionResult c10_replay(const RunConfig& cfg) {
    (void)cfg;
    detail::Checker ck;
    namespace fs = std::filesystem;
    fs::path tmp = fs::temp_directory_path() / "bohrlab-acceptance-c10";
    std::error_code ec;
    fs::remove_all(tmp, ec);
    fs::create_directories(tmp);
    auto path = [&](const std::string& name) { return (tmp / name).string(); };

    // fixture set files
    {
        Group g4 = Group::parse("Z4001");
        BohrSet(g4, {1}, {0.2}).members().save(path("A.txt"));
        BohrSet(g4, {1}, {0.3}).members().save(path("S.txt"));
        Rng rng(42);
        ElementSet::random(g4, 0.3, rng).save(path("f.txt"));
        Group g2 = Group::parse("Z2003");
        Rng rng2(43);
        ElementSet::random(g2, 0.25, rng2).save(path("r.txt"));
    }

    auto run = [&](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = cli::run_dispatch(args, out, err);
        return std::make_pair(code, out.str() + "\x1e" + err.str());
    };
    auto replay = [&](const std::string& label, const std::vector<std::string>& args,
                      const std::vector<std::pair<std::string, std::string>>& file_pairs) {
        auto first = run(args);
        std::vector<std::string> out1;
        for (const auto& fp : file_pairs) out1.push_back(detail::read_file(fp.first));
        std::vector<std::string> args2;
        for (const std::string& s : args) {
            std::string r = s;
            for (const auto& fp : file_pairs) {
                std::size_t at = r.find(fp.first);
                if (at != std::string::npos) r.replace(at, fp.first.size(), fp.second);
            }
            args2.push_back(r);
        }
        auto second = run(args2);
        // the replay writes to sibling paths; normalize them before comparing
        std::string snd = second.second;
        for (const auto& fp : file_pairs) {
            std::size_t at;
            while ((at = snd.find(fp.second)) != std::string::npos)
                snd.replace(at, fp.second.size(), fp.first);
        }
        ck.require(first.first == second.first, label + ": exit codes differ");
        ck.require(first.second == snd, label + ": stdout/stderr differ");
        for (std::size_t i = 0; i < file_pairs.size(); ++i) {
            std::string again = detail::read_file(file_pairs[i].second);
            ck.require(out1[i] == again, label + ": output file bytes differ");
            ck.require(!out1[i].empty(), label + ": output file empty");
        }
    };

    replay("construct",
           {"construct", "--method", "ternary", "--N", "1000", "--out", path("c1.txt"), "--json"},
           {{path("c1.txt"), path("c2.txt")}});
    replay("count", {"count", "--group", "Z2001", "--set", path("c1.txt"), "--mode", "fourier",
                     "--json"},
           {});
    replay("chang-report", {"chang-report", "--group", "Z2003", "--set", path("r.txt"), "--eps",
                            "0.25", "--seed", "11", "--json"},
           {});
    replay("cs-verify",
           {"cs-verify", "--group", "Z4001", "--f", path("f.txt"), "--A", path("A.txt"), "--S",
            path("S.txt"), "--eps", "0.25", "--p", "2", "--mode", "sampled", "--seed", "5",
            "--json"},
           {});
    replay("roth-run",
           {"roth-run", "--group", "Z101", "--density", "0.2", "--seed", "7", "--log",
            path("log1.jsonl"), "--json"},
           {{path("log1.jsonl"), path("log2.jsonl")}});
    replay("kk-run",
           {"kk-run", "--seed", "3", "--log", path("kk1.jsonl"), "--json"},
           {{path("kk1.jsonl"), path("kk2.jsonl")}});

    fs::remove_all(tmp, ec);
    return {10, "replay-determinism", ck.ok(), 0.0,
            ck.summary("6 commands replayed byte-for-byte")};
}

inline CriterionResult run_one(int id, const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
        switch (id) {
            case 1: r = c1_transforms(cfg); break;
            case 2: r = c2_count_equivalence(cfg); break;
            case 3: r = c3_freiman(cfg); break;
            case 4: r = c4_bohr_laws(cfg); break;
            case 5: r = c5_croot_sisask(cfg); break;
            case 6: r = c6_kk_laws(cfg); break;
            case 7: r = c7_energy_increment(cfg); break;
            case 8: r = c8_end_to_end(cfg); break;
            case 9: r = c9_constructions(cfg); break;
            case 10: r = c10_replay(cfg); break;
            default: throw BadInput("no such criterion: " + std::to_string(id));
        }
    } catch (const std::exception& e) {
        r.id = id;
        r.name = "criterion-" + std::to_string(id);
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline std::vector<CriterionResult> run_acceptance(const RunConfig& cfg,
                                                   const std::vector<int>& only = {},
                                                   std::ostream* progress = nullptr) {
    std::vector<int> ids = only;
    if (ids.empty())
        for (int i = 1; i <= 10; ++i) ids.push_back(i);
    std::vector<CriterionResult> out;
    for (int id : ids) {
        CriterionResult r = run_one(id, cfg);
        if (progress) {
            char line[160];
            std::snprintf(line, sizeof line, "%2d  %-24s  %s  %8.2fs  %s", r.id, r.name.c_str(),
                          r.pass ? "PASS" : "FAIL", r.seconds, r.detail.c_str());
            (*progress) << line << "\n";
        }
        out.push_back(std::move(r));
    }
    return out;
}

// Full front end: the verify-suite subcommand plus everything in cli.hpp.
inline int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    if (!args.empty() && args[0] == "verify-suite") {
        CLI::App app{"run the acceptance battery"};
        app.name("bohrlab verify-suite");
        std::string only_csv, out_path, config_path;
        bool json_only = false;
        app.add_option("--only", only_csv, "comma-separated criterion ids (default: all)");
        app.add_option("--out", out_path, "write the JSON report here");
        app.add_option("--config", config_path, "TOML config file");
        app.add_flag("--json", json_only, "machine output only");
        std::vector<std::string> rest(args.begin() + 1, args.end());
        std::reverse(rest.begin(), rest.end());
        try {
            app.parse(rest);
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) {
                app.exit(e, out, err);
                return 0;
            }
            err << "usage error: " << e.what() << "\n";
            return 2;
        }
        try {
            RunConfig cfg = config_path.empty() ? RunConfig{} : load_config_file(config_path);
            std::vector<int> ids;
            std::stringstream ss(only_csv);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) ids.push_back(std::stoi(tok));
            out << cli::header_json("verify-suite", cfg).dump() << "\n";
            if (!json_only)
                out << " #  criterion                 verdict   seconds  detail\n";
            std::vector<CriterionResult> results =
                run_acceptance(cfg, ids, json_only ? nullptr : &out);
            bool all = true;
            nlohmann::json arr = nlohmann::json::array();
            for (const CriterionResult& r : results) {
                all = all && r.pass;
                arr.push_back(r.to_json());
            }
            nlohmann::json report{{"criteria", std::move(arr)}, {"all_pass", all}};
            out << report.dump() << "\n";
            if (!out_path.empty()) cli::write_json_file(out_path, report);
            return 0;
        } catch (const std::exception& e) {
            err << nlohmann::json{{"error", {{"what", e.what()}}}}.dump() << "\n";
            return 1;
        }
    }
    return cli::run_dispatch(std::move(args), out, err);
}

} // namespace acceptance
} // namespace bohrlab
