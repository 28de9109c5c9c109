#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "bohrlab/bohr.hpp"
#include "bohrlab/config.hpp"
#include "bohrlab/density.hpp"
#include "bohrlab/errors.hpp"
#include "bohrlab/fourier.hpp"
#include "bohrlab/rng.hpp"

namespace bohrlab {

// Spec_eps(f, mu) = {gamma : |(f dmu)^(gamma)| >= eps ||f||_{L1(mu)}},
// characters ordered by decreasing coefficient magnitude.
struct SpectrumSet {
    std::vector<std::int64_t> chars;
    std::vector<cplx> coeffs; // aligned with chars
    double epsilon = 0.0;
    double l1 = 0.0;

    bool contains(std::int64_t gamma) const {
        return std::find(chars.begin(), chars.end(), gamma) != chars.end();
    }
};

inline SpectrumSet spectrum(const DensityFn& f, const DensityFn& mu, double epsilon) {
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw BadInput("spectrum: epsilon must lie in (0, 1]");
    require_probability_density(mu);
    if (f.group() != mu.group()) throw BadInput("spectrum: group mismatch");
    double l1 = lp_norm(f, 1.0, &mu);
    if (l1 == 0.0) throw BadInput("spectrum: f vanishes on the support of mu");
    std::vector<cplx> fh = fourier(f.times(mu));
    double threshold = epsilon * l1;

    std::vector<std::int64_t> idx;
    for (std::int64_t gamma = 0; gamma < f.size(); ++gamma)
        if (std::abs(fh[static_cast<std::size_t>(gamma)]) + 1e-12 >= threshold)
            idx.push_back(gamma);
    std::stable_sort(idx.begin(), idx.end(), [&](std::int64_t a, std::int64_t b) {
        double ma = std::abs(fh[static_cast<std::size_t>(a)]);
        double mb = std::abs(fh[static_cast<std::size_t>(b)]);
        if (ma != mb) return ma > mb;
        return a < b;
    });

    SpectrumSet out;
    out.epsilon = epsilon;
    out.l1 = l1;
    out.chars = std::move(idx);
    out.coeffs.reserve(out.chars.size());
    for (std::int64_t gamma : out.chars) out.coeffs.push_back(fh[static_cast<std::size_t>(gamma)]);
    return out;
}

// Evidence that Lambda has (K, mu)-relative entropy certified against a
// finite omega set: all sign patterns when |Lambda| <= 12, plus the stored
// random disc-valued omegas.
struct DissociationCertificate {
    std::vector<std::int64_t> lambda;
    double K = 0.0;
    bool signs_enumerated = false;
    std::vector<std::vector<cplx>> random_omegas; // each aligned with lambda
    double max_integral = 1.0;

    nlohmann::json to_json() const {
        return nlohmann::json{{"lambda_size", lambda.size()},
                              {"K", K},
                              {"signs_enumerated", signs_enumerated},
                              {"random_trials", random_omegas.size()},
                              {"max_integral", max_integral}};
    }
};

inline constexpr std::size_t kSignEnumerationLimit = 12;

namespace detail {

struct CharTable {
    std::vector<double> c, s; // cos/sin of 2 pi <gamma, x>
};

inline CharTable char_table(const Group& g, std::int64_t gamma) {
    CharTable t;
    t.c.resize(static_cast<std::size_t>(g.size()));
    t.s.resize(static_cast<std::size_t>(g.size()));
    for (std::int64_t x = 0; x < g.size(); ++x) {
        double a = 2.0 * std::numbers::pi * g.phase(gamma, x);
        t.c[static_cast<std::size_t>(x)] = std::cos(a);
        t.s[static_cast<std::size_t>(x)] = std::sin(a);
    }
    return t;
}

// integral of prod (1 + Re(omega_r * gamma_r(x))) d mu for one omega
inline double riesz_integral(const DensityFn& mu, const std::vector<CharTable>& rows,
                             const std::vector<cplx>& omega) {
    std::int64_t n = mu.size();
    double total = 0.0;
    for (std::int64_t x = 0; x < n; ++x) {
        double p = 1.0;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            // Re(omega * gamma(x)) = Re(omega) cos - Im(omega) sin
            p *= 1.0 + omega[r].real() * rows[r].c[static_cast<std::size_t>(x)] -
                 omega[r].imag() * rows[r].s[static_cast<std::size_t>(x)];
        }
        total += p * mu[x].real();
    }
    return total / static_cast<double>(n);
}

// max over all 2^k sign patterns, by branching on each factor once
inline double riesz_max_over_signs(const DensityFn& mu, const std::vector<CharTable>& rows) {
    std::int64_t n = mu.size();
    double best = -HUGE_VAL;
    std::vector<std::vector<double>> stack(rows.size() + 1,
                                           std::vector<double>(static_cast<std::size_t>(n)));
    for (std::int64_t x = 0; x < n; ++x) stack[0][static_cast<std::size_t>(x)] = 1.0;
    std::function<void(std::size_t)> walk = [&](std::size_t depth) {
        if (depth == rows.size()) {
            double total = 0.0;
            for (std::int64_t x = 0; x < n; ++x)
                total += stack[depth][static_cast<std::size_t>(x)] * mu[x].real();
            best = std::max(best, total / static_cast<double>(n));
            return;
        }
        for (double sign : {1.0, -1.0}) {
            const auto& cur = stack[depth];
            auto& next = stack[depth + 1];
            const auto& row = rows[depth].c;
            for (std::int64_t x = 0; x < n; ++x)
                next[static_cast<std::size_t>(x)] =
                    cur[static_cast<std::size_t>(x)] * (1.0 + sign * row[static_cast<std::size_t>(x)]);
            walk(depth + 1);
        }
    };
    walk(0);
    return best;
}

inline std::vector<cplx> random_disc_omega(std::size_t k, Rng& rng) {
    std::vector<cplx> w(k);
    for (std::size_t i = 0; i < k; ++i) {
        // uniform on the unit disc by rejection
        double re, im;
        do {
            re = 2.0 * rng.next_double() - 1.0;
            im = 2.0 * rng.next_double() - 1.0;
        } while (re * re + im * im > 1.0);
        w[i] = cplx(re, im);
    }
    return w;
}

} // namespace detail

// Worst Riesz-product integral of cert.lambda against mu over the
// certificate's omega test set, recomputed from scratch.
inline double revalidate_dissociation(const DissociationCertificate& cert, const DensityFn& mu) {
    std::vector<detail::CharTable> rows;
    for (std::int64_t gamma : cert.lambda) rows.push_back(detail::char_table(mu.group(), gamma));
    double worst = rows.empty() ? 1.0 : -HUGE_VAL;
    if (cert.signs_enumerated && !rows.empty())
        worst = std::max(worst, detail::riesz_max_over_signs(mu, rows));
    for (const auto& omega : cert.random_omegas)
        worst = std::max(worst, detail::riesz_integral(mu, rows, omega));
    if (rows.empty()) worst = 1.0;
    return worst;
}

// Greedy maximal subset of delta (in the given order) whose Riesz-product
// integrals stay <= exp(K) on the tested omegas.  Not the maximum subset --
// the certificate records exactly what was tested.
inline DissociationCertificate dissociated_subset(const std::vector<std::int64_t>& delta,
                                                  const DensityFn& mu, double K,
                                                  int omega_trials, std::uint64_t seed) {
    if (K < 0.0) throw BadInput("dissociated_subset: K must be >= 0");
    if (omega_trials < 1) throw BadInput("dissociated_subset: omega_trials must be >= 1");
    require_probability_density(mu);
    double bound = std::exp(K) * (1.0 + 1e-9);
    Rng rng(seed);

    std::vector<std::int64_t> lambda;
    std::vector<detail::CharTable> rows;
    auto worst_for = [&](const std::vector<detail::CharTable>& r) {
        double worst = r.size() <= kSignEnumerationLimit && !r.empty()
                           ? detail::riesz_max_over_signs(mu, r)
                           : 1.0;
        for (int t = 0; t < omega_trials; ++t)
            worst = std::max(worst, detail::riesz_integral(mu, r, detail::random_disc_omega(r.size(), rng)));
        return worst;
    };

    for (std::int64_t gamma : delta) {
        rows.push_back(detail::char_table(mu.group(), gamma));
        if (worst_for(rows) <= bound) lambda.push_back(gamma);
        else rows.pop_back();
    }

    DissociationCertificate cert;
    cert.lambda = std::move(lambda);
    cert.K = K;
    cert.signs_enumerated = cert.lambda.size() <= kSignEnumerationLimit;
    double worst = cert.lambda.empty() ? 1.0 : -HUGE_VAL;
    if (cert.signs_enumerated && !rows.empty())
        worst = std::max(worst, detail::riesz_max_over_signs(mu, rows));
    for (int t = 0; t < omega_trials; ++t) {
        auto omega = detail::random_disc_omega(cert.lambda.size(), rng);
        worst = std::max(worst, detail::riesz_integral(mu, rows, omega));
        cert.random_omegas.push_back(std::move(omega));
    }
    if (cert.lambda.empty()) worst = 1.0;
    cert.max_integral = worst;
    if (cert.max_integral > bound)
        throw PostconditionFailed("dissociated_subset: final certificate exceeds exp(K): " +
                                  format_double(cert.max_integral));
    return cert;
}

struct ChangReport {
    std::int64_t lambda_size = 0;
    double bound = 0.0;
    double ratio = 0.0;
    bool pass = false;
    double epsilon = 0.0;
    double l1 = 0.0, l2 = 0.0;
    std::size_t spectrum_size = 0;
    DissociationCertificate cert;

    nlohmann::json to_json() const {
        return nlohmann::json{{"lambda_size", lambda_size}, {"bound", bound},
                              {"ratio", ratio},           {"pass", pass},
                              {"epsilon", epsilon},       {"l1", l1},
                              {"l2", l2},                 {"spectrum_size", spectrum_size},
                              {"certificate", cert.to_json()}};
    }
};

// Measures |Lambda| for the greedy dissociated hull of Spec_eps(f, mu) at
// entropy level K = 1 and compares against C_chang * eps^-2 * log(2 l2/l1).
inline ChangReport chang_entropy_check(const DensityFn& f, const DensityFn& mu, double epsilon,
                                       double C_chang, int omega_trials, std::uint64_t seed) {
    SpectrumSet spec = spectrum(f, mu, epsilon);
    double l2 = lp_norm(f, 2.0, &mu);
    ChangReport rep;
    rep.epsilon = epsilon;
    rep.l1 = spec.l1;
    rep.l2 = l2;
    rep.spectrum_size = spec.chars.size();
    rep.cert = dissociated_subset(spec.chars, mu, 1.0, omega_trials, seed);
    rep.lambda_size = static_cast<std::int64_t>(rep.cert.lambda.size());
    rep.bound = C_chang * std::pow(epsilon, -2.0) * std::log(2.0 * l2 / spec.l1);
    rep.ratio = static_cast<double>(rep.lambda_size) / rep.bound;
    rep.pass = static_cast<double>(rep.lambda_size) <= rep.bound;
    return rep;
}

// B' = B with the characters of delta adjoined at width 1/2 (tightening an
// existing width when the character is already present).  The <= 1/2
// property is verified member by member.
inline BohrSet majorize_by_bohr(const BohrSet& b, const std::vector<std::int64_t>& delta,
                                int entropy_k = 0) {
    (void)entropy_k; // rank/measure bounds are reported by callers, not enforced
    std::vector<std::int64_t> freq = b.freq();
    std::vector<double> width = b.width();
    for (std::int64_t gamma : delta) {
        auto it = std::find(freq.begin(), freq.end(), gamma);
        if (it == freq.end()) {
            freq.push_back(gamma);
            width.push_back(0.5);
        } else {
            std::size_t i = static_cast<std::size_t>(it - freq.begin());
            width[i] = std::min(width[i], 0.5);
        }
    }
    BohrSet out(b.group(), std::move(freq), std::move(width));
    const Group& g = out.group();
    for (std::int64_t x : out.members(1.0).elements())
        for (std::int64_t gamma : delta) {
            double s = 2.0 * std::fabs(std::sin(std::numbers::pi * g.phase(gamma, x)));
            if (s > 0.5 + kBohrGuard)
                throw PostconditionFailed("majorize_by_bohr: |1-gamma(x)| = " + format_double(s) +
                                          " > 1/2 on a member");
        }
    return out;
}

struct EnergyIncrementInput {
    BohrSet B;     // regular, the increment's ambient Bohr set
    ElementSet A;  // subset of B's members
    BohrSet Bp;    // regular sub-Bohr set of B_{rho_p}
    double rho_p;  // dilate parameter with members(Bp) inside members(B, rho_p)
    ElementSet T;  // subset of Bp's members
    double eta;
    double nu;
};

struct EnergyIncrementResult {
    BohrSet b_pp;
    RegularityCertificate b_pp_cert;
    double measured_increment = 0.0; // ||1_A * beta''||_inf / alpha - 1
    double alpha = 0.0;
    double dimension_d = 0.0;
    double hypothesis_sum = 0.0;
    double hypothesis_required = 0.0;
    double parseval_sum = 0.0;   // sum_gamma |g^|^2 |beta''^|^2
    double parseval_norm = 0.0;  // ||g * beta''||_{L2}^2
    double energy_on_spectrum = 0.0;
    double correction = 0.0;     // alpha * rho' * d * mu_G(B)
    double sup_conv = 0.0;
    std::size_t spectrum_size = 0;
    std::size_t lambda_size = 0;
    double mu_bp_bpp = 0.0; // measured mu_{B'}(B'')
    DissociationCertificate hull;

    nlohmann::json to_json() const {
        return nlohmann::json{{"measured_increment", measured_increment},
                              {"alpha", alpha},
                              {"dimension", dimension_d},
                              {"hypothesis_sum", hypothesis_sum},
                              {"hypothesis_required", hypothesis_required},
                              {"parseval_sum", parseval_sum},
                              {"parseval_norm", parseval_norm},
                              {"energy_on_spectrum", energy_on_spectrum},
                              {"correction", correction},
                              {"sup_conv", sup_conv},
                              {"spectrum_size", spectrum_size},
                              {"lambda_size", lambda_size},
                              {"mu_bp_bpp", mu_bp_bpp},
                              {"b_pp", b_pp.to_json()},
                              {"b_pp_rank", b_pp.rank()}};
    }
};

// Energy increment: large spectral energy of (1_A - alpha) 1_B on the
// spectrum of 1_T w.r.t. beta' yields a regular Bohr set B'' on which A's
// convolution density rises to alpha (1 + Omega(nu)).  The construction
// follows the proof: dissociated hull of the spectrum, width-1/2
// majorization of B', regularization, then a directly measured sup norm.
inline EnergyIncrementResult energy_increment(const EnergyIncrementInput& inp,
                                              const RunConfig& cfg, std::uint64_t seed) {
    const Group& g = inp.B.group();
    if (inp.A.group() != g || inp.Bp.group() != g || inp.T.group() != g)
        throw BadInput("energy_increment: group mismatch");
    const ElementSet& b_members = inp.B.members(1.0);
    if (!inp.A.subset_of(b_members)) throw BadInput("energy_increment: A must lie in B");
    if (!inp.T.subset_of(inp.Bp.members(1.0)))
        throw BadInput("energy_increment: T must lie in B'");
    if (inp.T.empty()) throw BadInput("energy_increment: T is empty");
    if (inp.A.empty()) throw BadInput("energy_increment: A is empty");
    if (!(inp.eta > 0.0) || inp.eta > 1.0) throw BadInput("energy_increment: eta must lie in (0,1]");
    if (inp.nu < 0.0) throw BadInput("energy_increment: nu must be >= 0");
    if (!inp.Bp.members(1.0).subset_of(inp.B.members(inp.rho_p)))
        throw BadInput("energy_increment: B' is not inside B_{rho'}");

    EnergyIncrementResult res;
    res.alpha = static_cast<double>(inp.A.size()) / static_cast<double>(b_members.size());
    res.dimension_d = inp.B.estimate_dimension(cfg.dim_grid);

    // rho' <= c_rho * nu * alpha / d; vacuous when nu = 0 (the conclusion is
    // trivial there) or d = 0 (no regularity error to control)
    if (inp.nu > 0.0 && res.dimension_d > 0.0) {
        double cap = cfg.c_rho * inp.nu * res.alpha / res.dimension_d;
        if (inp.rho_p > cap * (1.0 + cfg.tolerance))
            throw BadInput("energy_increment: rho' = " + format_double(inp.rho_p) +
                           " exceeds c_rho nu alpha / d = " + format_double(cap));
    }

    double mu_b = static_cast<double>(b_members.size()) / static_cast<double>(g.size());
    DensityFn beta_p = inp.Bp.beta(1.0);
    SpectrumSet spec = spectrum(DensityFn::indicator(inp.T), beta_p, inp.eta);
    res.spectrum_size = spec.chars.size();

    DensityFn gfun = DensityFn::indicator(inp.A) - DensityFn::indicator(b_members) * cplx(res.alpha, 0.0);
    std::vector<cplx> gh = fourier(gfun);
    double hyp = 0.0;
    for (std::int64_t gamma : spec.chars) hyp += std::norm(gh[static_cast<std::size_t>(gamma)]);
    res.hypothesis_sum = hyp;
    res.hypothesis_required = inp.nu * res.alpha * res.alpha * mu_b;
    if (hyp < res.hypothesis_required * (1.0 - cfg.tolerance) - 1e-15)
        throw HypothesisFailed("energy_increment: spectral energy " + format_double(hyp) +
                               " < required " + format_double(res.hypothesis_required));

    res.hull = dissociated_subset(spec.chars, beta_p, cfg.K_entropy, cfg.omega_trials, seed);
    res.lambda_size = res.hull.lambda.size();

    BohrSet maj = majorize_by_bohr(inp.Bp, res.hull.lambda);
    res.b_pp_cert = find_regular_dilate(maj, cfg.C_regular, {}, cfg.lambda_grid(), cfg.dim_grid);
    res.b_pp = maj.dilate(res.b_pp_cert.lambda);
    res.mu_bp_bpp = static_cast<double>(res.b_pp.member_count(1.0)) /
                    static_cast<double>(inp.Bp.member_count(1.0));

    DensityFn beta_pp = res.b_pp.beta(1.0);
    std::vector<cplx> bh = fourier(beta_pp);
    double split_sum = 0.0;
    for (std::size_t i = 0; i < gh.size(); ++i) split_sum += std::norm(gh[i]) * std::norm(bh[i]);
    res.parseval_sum = split_sum;
    DensityFn conv_centered = convolve(gfun, beta_pp);
    double n2 = lp_norm(conv_centered, 2.0);
    res.parseval_norm = n2 * n2;
    if (!near(res.parseval_sum, res.parseval_norm, cfg.tolerance, 1e-12))
        throw PostconditionFailed("energy_increment: Parseval split mismatch: " +
                                  format_double(res.parseval_sum) + " vs " +
                                  format_double(res.parseval_norm));

    double on_spec = 0.0;
    for (std::int64_t gamma : spec.chars)
        on_spec += std::norm(gh[static_cast<std::size_t>(gamma)]) * std::norm(bh[static_cast<std::size_t>(gamma)]);
    res.energy_on_spectrum = on_spec;
    res.correction = res.alpha * inp.rho_p * res.dimension_d * mu_b;

    DensityFn conv = convolve(DensityFn::indicator(inp.A), beta_pp);
    res.sup_conv = conv.max_real();
    if (g.size() <= cfg.brute_cap) {
        // direct window maximum: max_x |A cap (x - B'')| / |B''|
        const ElementSet& bpp_members = res.b_pp.members(1.0);
        std::int64_t best = 0;
        for (std::int64_t x = 0; x < g.size(); ++x) {
            std::int64_t m = 0;
            for (std::int64_t y : bpp_members.elements())
                if (inp.A.contains(g.sub(x, y))) ++m;
            best = std::max(best, m);
        }
        double direct = static_cast<double>(best) / static_cast<double>(bpp_members.size());
        if (!near(res.sup_conv, direct, cfg.tolerance, 1e-12))
            throw PostconditionFailed("energy_increment: sup norm cross-check failed: " +
                                      format_double(res.sup_conv) + " vs " + format_double(direct));
    }

    res.measured_increment = res.sup_conv / res.alpha - 1.0;
    if (res.measured_increment + cfg.tolerance < cfg.c_inc * inp.nu)
        throw IncrementTooSmall(
            "measured increment " + format_double(res.measured_increment) + " < c_inc * nu = " +
            format_double(cfg.c_inc * inp.nu) +
            " (hypothesis_sum " + format_double(res.hypothesis_sum) +
            ", energy_on_spectrum " + format_double(res.energy_on_spectrum) +
            ", parseval_norm " + format_double(res.parseval_norm) +
            ", correction " + format_double(res.correction) +
            "; energy chain " + (res.energy_on_spectrum >= 0.25 * res.hypothesis_sum * (1.0 - cfg.tolerance)
                                     ? "held -- constant tuning shortfall"
                                     : "broke -- majorant too weak on the spectrum") + ")");
    return res;
}

} // namespace bohrlab
