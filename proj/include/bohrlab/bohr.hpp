#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "bohrlab/density.hpp"
#include "bohrlab/errors.hpp"
#include "bohrlab/group.hpp"
#include "bohrlab/sets.hpp"
#include "bohrlab/util.hpp"

namespace bohrlab {

// Membership in a Bohr set compares 2|sin(pi*theta)| against the width.
// The comparison is inclusive with a small additive guard so that equal
// phases on different machines make the same call; test widths stay away
// from exact thresholds anyway.
inline constexpr double kBohrGuard = 1e-12;

// B(Gamma, delta) = {x : |1 - gamma(x)| <= delta_gamma for all gamma}.
// Dilates B_rho use width min(rho * delta_gamma, 2).  Instances are
// immutable; the phase table is shared across dilates (it depends only on
// the frequency set) and member bitmaps are memoized per requested rho.
class BohrSet {
public:
    BohrSet() = default;

    BohrSet(Group g, std::vector<std::int64_t> freq, std::vector<double> width)
        : group_(std::move(g)) {
        if (freq.size() != width.size())
            throw BadInput("BohrSet: frequency and width counts differ");
        // Duplicate frequencies act as one constraint with the tighter width.
        std::map<std::int64_t, double> merged;
        for (std::size_t i = 0; i < freq.size(); ++i) {
            double w = width[i];
            if (!(w > 0.0) || w > 2.0)
                throw BadInput("BohrSet: width must lie in (0, 2], got " + format_double(w));
            if (freq[i] < 0 || freq[i] >= group_.size())
                throw BadInput("BohrSet: frequency index out of range");
            auto it = merged.find(freq[i]);
            if (it == merged.end()) merged.emplace(freq[i], w);
            else it->second = std::min(it->second, w);
        }
        for (auto& [f, w] : merged) {
            freq_.push_back(f);
            width_.push_back(w);
        }
        phases_ = std::make_shared<PhaseTable>();
        memo_ = std::make_shared<Memo>();
    }

    static BohrSet whole_group(Group g) { return BohrSet(std::move(g), {}, {}); }

    const Group& group() const { return group_; }
    const std::vector<std::int64_t>& freq() const { return freq_; }
    const std::vector<double>& width() const { return width_; }
    std::size_t rank() const { return freq_.size(); }

    // Width function of the dilate B_rho.
    std::vector<double> dilated_width(double rho) const {
        std::vector<double> w(width_.size());
        for (std::size_t i = 0; i < width_.size(); ++i)
            w[i] = std::min(rho * width_[i], 2.0);
        return w;
    }

    BohrSet dilate(double rho) const {
        require_positive(rho);
        BohrSet out;
        out.group_ = group_;
        out.freq_ = freq_;
        out.width_ = dilated_width(rho);
        out.phases_ = phases_; // same frequencies, same table
        out.memo_ = std::make_shared<Memo>();
        return out;
    }

    const ElementSet& members(double rho = 1.0) const {
        require_positive(rho);
        {
            std::lock_guard<std::mutex> lock(memo_->m);
            auto it = memo_->sets.find(rho);
            if (it != memo_->sets.end()) return *it->second;
        }
        auto set = std::make_shared<ElementSet>(compute_members(rho));
        std::lock_guard<std::mutex> lock(memo_->m);
        auto [it, inserted] = memo_->sets.emplace(rho, std::move(set));
        (void)inserted;
        return *it->second;
    }

    std::int64_t member_count(double rho = 1.0) const { return members(rho).size(); }

    double measure(double rho = 1.0) const {
        return static_cast<double>(member_count(rho)) / static_cast<double>(group_.size());
    }

    // Density of the uniform probability measure on B_rho.
    DensityFn beta(double rho = 1.0) const {
        return DensityFn::normalized_indicator(members(rho));
    }

    // Least d with mu(B_{2 rho}) <= 2^d mu(B_rho) over the grid.
    double estimate_dimension(const std::vector<double>& rho_grid) const {
        if (rho_grid.empty()) throw BadInput("estimate_dimension: empty grid");
        double d = 0.0;
        for (double rho : rho_grid) {
            if (!(rho > 0.0) || rho > 1.0)
                throw BadInput("estimate_dimension: grid values must lie in (0, 1]");
            double c1 = static_cast<double>(member_count(rho));
            double c2 = static_cast<double>(member_count(2.0 * rho));
            d = std::max(d, std::log2(c2 / c1));
        }
        return d;
    }

    // {k.x : x in B} is the Bohr set with substituted frequencies
    // gamma_j -> gamma_j * k^{-1} mod n_j; needs gcd(k, n_j) = 1 throughout.
    BohrSet scaled(std::int64_t k) const {
        std::vector<std::int64_t> f(freq_.size());
        std::vector<std::int64_t> inv_coords(group_.num_factors());
        for (std::size_t j = 0; j < group_.num_factors(); ++j)
            inv_coords[j] = inv_mod(k, group_.orders()[j]);
        for (std::size_t i = 0; i < freq_.size(); ++i) {
            std::int64_t gamma = freq_[i];
            std::vector<std::int64_t> c = group_.coords_of(gamma);
            for (std::size_t j = 0; j < c.size(); ++j)
                c[j] = (c[j] * inv_coords[j]) % group_.orders()[j];
            f[i] = group_.index_of(c);
        }
        return BohrSet(group_, std::move(f), width_);
    }

    nlohmann::json to_json() const {
        nlohmann::json freq = nlohmann::json::array();
        for (std::int64_t gamma : freq_) freq.push_back(group_.coords_of(gamma));
        return nlohmann::json{{"group", group_.str()}, {"freq", freq}, {"width", width_}};
    }

    static BohrSet from_json(const nlohmann::json& j,
                             std::int64_t size_cap = Group::kDefaultSizeCap) {
        if (!j.contains("group") || !j.contains("freq") || !j.contains("width"))
            throw BadInput("Bohr set JSON needs keys group, freq, width");
        Group g = Group::parse(j.at("group").get<std::string>(), size_cap);
        std::vector<std::int64_t> freq;
        for (const auto& coords : j.at("freq")) {
            std::vector<std::int64_t> c = coords.get<std::vector<std::int64_t>>();
            freq.push_back(g.index_of(c));
        }
        std::vector<double> width = j.at("width").get<std::vector<double>>();
        return BohrSet(g, std::move(freq), std::move(width));
    }

    // Member set computed directly from phases, bypassing every cache.
    ElementSet compute_members(double rho) const {
        require_positive(rho);
        ensure_phases();
        const auto& s = phases_->s;
        std::vector<double> w = dilated_width(rho);
        ElementSet out(group_);
        for (std::int64_t x = 0; x < group_.size(); ++x) {
            bool in = true;
            for (std::size_t r = 0; r < freq_.size() && in; ++r)
                in = s[r][static_cast<std::size_t>(x)] <= w[r] + kBohrGuard;
            if (in) out.add(x);
        }
        return out;
    }

private:
    struct PhaseTable {
        std::mutex m;
        bool ready = false;
        std::vector<std::vector<double>> s; // s[r][x] = 2|sin(pi theta_r(x))|
    };
    struct Memo {
        std::mutex m;
        std::map<double, std::shared_ptr<const ElementSet>> sets;
    };

    static void require_positive(double rho) {
        if (!(rho > 0.0)) throw BadInput("Bohr dilate parameter must be positive, got " + format_double(rho));
    }

    void ensure_phases() const {
        std::lock_guard<std::mutex> lock(phases_->m);
        if (phases_->ready) return;
        phases_->s.assign(freq_.size(), std::vector<double>(static_cast<std::size_t>(group_.size())));
        for (std::size_t r = 0; r < freq_.size(); ++r) {
            std::int64_t gamma = freq_[r];
            auto& row = phases_->s[r];
            parallel_for(group_.size(), [&](std::int64_t lo, std::int64_t hi) {
                for (std::int64_t x = lo; x < hi; ++x)
                    row[static_cast<std::size_t>(x)] =
                        2.0 * std::fabs(std::sin(std::numbers::pi * group_.phase(gamma, x)));
            });
        }
        phases_->ready = true;
    }

    Group group_;
    std::vector<std::int64_t> freq_;
    std::vector<double> width_;
    std::shared_ptr<PhaseTable> phases_;
    std::shared_ptr<Memo> memo_;
};

struct RegularityCertificate {
    double lambda = 0.0;
    double constant_C = 0.0;
    std::vector<double> eta_grid;
    std::vector<double> ratio_bounds;   // measured mu(B_{lambda(1+eta)}) / mu(B_lambda)
    double dimension_d = 0.0;
    std::int64_t base_count = 0;
    std::vector<std::int64_t> eta_counts;
    std::vector<double> dim_grid;

    nlohmann::json to_json() const {
        return nlohmann::json{{"lambda", lambda},
                              {"C", constant_C},
                              {"eta_grid", eta_grid},
                              {"ratio_bounds", ratio_bounds},
                              {"dimension", dimension_d},
                              {"base_count", base_count},
                              {"eta_counts", eta_counts}};
    }
};

inline std::vector<double> default_lambda_grid() {
    std::vector<double> g(64);
    for (int i = 0; i < 64; ++i) g[static_cast<std::size_t>(i)] = 0.5 + 0.5 * i / 64.0;
    return g;
}

inline std::vector<double> default_dim_grid() {
    return {1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0};
}

// +-k/(8 C d) for k = 1..8; d = 0 falls back to spacing 1/(8C), where the
// band is the single ratio 1 and only an exactly flat profile passes.
inline std::vector<double> default_eta_grid(double C, double d) {
    double denom = 8.0 * C * std::max(d, 1.0);
    std::vector<double> etas;
    for (int k = 8; k >= 1; --k)
        if (-k / denom > -1.0) etas.push_back(-k / denom); // eta <= -1 would empty the dilate
    for (int k = 1; k <= 8; ++k) etas.push_back(k / denom);
    return etas;
}

inline bool regularity_ratio_ok(double ratio, double C, double d, double eta) {
    double band = 1.0 + C * d * std::fabs(eta);
    return ratio >= 1.0 / band - 1e-12 && ratio <= band + 1e-12;
}

// Search the lambda grid (ascending) for a dilate B_lambda that is
// C-regular: every measured ratio mu(B_{lambda(1+eta)}) / mu(B_lambda) lies
// in [1/(1+Cd|eta|), 1+Cd|eta|], with d the measured dimension of B_lambda.
// An empty eta/lambda/dim grid selects the documented default.
inline RegularityCertificate find_regular_dilate(const BohrSet& b, double C,
                                                 std::vector<double> eta_grid = {},
                                                 std::vector<double> lambda_grid = {},
                                                 std::vector<double> dim_grid = {}) {
    if (C < 1.0) throw BadInput("find_regular_dilate: C must be >= 1");
    if (lambda_grid.empty()) lambda_grid = default_lambda_grid();
    if (dim_grid.empty()) dim_grid = default_dim_grid();
    for (double l : lambda_grid)
        if (l < 0.5 || l >= 1.0)
            throw BadInput("find_regular_dilate: lambda grid must lie in [1/2, 1)");

    for (double lambda : lambda_grid) {
        BohrSet cand = b.dilate(lambda);
        double d = cand.estimate_dimension(dim_grid);
        std::vector<double> etas = eta_grid.empty() ? default_eta_grid(C, d) : eta_grid;
        {
            // keep only etas the certificate invariant allows (and eta > -1,
            // below which the dilate is empty)
            std::vector<double> kept;
            for (double e : etas)
                if (e > -1.0 && (d <= 0.0 || std::fabs(e) <= 1.0 / (C * d) + 1e-15))
                    kept.push_back(e);
            etas = std::move(kept);
        }
        std::int64_t base = b.member_count(lambda);
        bool ok = true;
        std::vector<double> ratios;
        std::vector<std::int64_t> counts;
        for (double eta : etas) {
            std::int64_t c = b.member_count(lambda * (1.0 + eta));
            double ratio = static_cast<double>(c) / static_cast<double>(base);
            ratios.push_back(ratio);
            counts.push_back(c);
            if (!regularity_ratio_ok(ratio, C, d, eta)) { ok = false; break; }
        }
        if (!ok) continue;
        RegularityCertificate cert;
        cert.lambda = lambda;
        cert.constant_C = C;
        cert.eta_grid = etas;
        cert.ratio_bounds = std::move(ratios);
        cert.dimension_d = d;
        cert.base_count = base;
        cert.eta_counts = std::move(counts);
        cert.dim_grid = dim_grid;
        return cert;
    }
    throw NoRegularDilate("no lambda in [" + format_double(lambda_grid.front()) + ", " +
                          format_double(lambda_grid.back()) + "] passes the C=" +
                          format_double(C) + " regularity check (rank " +
                          std::to_string(b.rank()) + ")");
}

// Recompute every count in the certificate from raw phase evaluation with no
// cached state; true iff all counts match bit-identically.
inline bool revalidate_certificate(const BohrSet& b, const RegularityCertificate& cert) {
    BohrSet fresh(b.group(), b.freq(), b.width());
    if (fresh.compute_members(cert.lambda).size() != cert.base_count) return false;
    for (std::size_t i = 0; i < cert.eta_grid.size(); ++i) {
        std::int64_t c = fresh.compute_members(cert.lambda * (1.0 + cert.eta_grid[i])).size();
        if (c != cert.eta_counts[i]) return false;
    }
    BohrSet cand = fresh.dilate(cert.lambda);
    if (cand.estimate_dimension(cert.dim_grid.empty() ? default_dim_grid() : cert.dim_grid) !=
        cert.dimension_d)
        return false;
    return true;
}

} // namespace bohrlab
