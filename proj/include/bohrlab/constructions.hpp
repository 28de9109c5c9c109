#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "bohrlab/errors.hpp"

namespace bohrlab {

// Explicit 3AP-free subsets of {1, ..., N}: the greedy ternary-digit set and
// Behrend's sphere construction.  Results carry a certification flag that is
// set only after an actual brute-force scan of the produced set; large outputs
// where the scan would be too expensive are returned uncertified.

enum class ConstructionMethod { Ternary, BehrendSphere };

inline std::string to_string(ConstructionMethod m) {
    return m == ConstructionMethod::Ternary ? "ternary" : "behrend-sphere";
}

// Tie-break rule when several radii share the maximal sphere population.
// There is a single supported policy (prefer the smallest squared radius); it
// is named so the choice is visible at call sites and in serialized output.
enum class RadiusPolicy { SmallestOnTie };

struct ConstructionResult {
    std::int64_t n = 0;                 // ambient interval {1..n}
    std::vector<std::int64_t> a;        // ascending, subset of {1..n}
    ConstructionMethod method = ConstructionMethod::Ternary;
    std::int64_t size = 0;              // == a.size()
    bool certified_free = false;        // true only after a brute scan passed

    // Behrend bookkeeping (all zero / -1 for the ternary method).
    int dim_d = 0;
    std::int64_t base_m = 0;            // digits range over [0, base_m)
    std::int64_t radius_sq = -1;        // selected sphere

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (auto v : a) arr.push_back(v);
        nlohmann::json j{{"n", n},
                         {"method", to_string(method)},
                         {"size", size},
                         {"certified_free", certified_free},
                         {"set", arr}};
        if (method == ConstructionMethod::BehrendSphere) {
            j["dim_d"] = dim_d;
            j["base_m"] = base_m;
            j["radius_sq"] = radius_sq;
        }
        return j;
    }
};

// Scan for a nontrivial three-term progression a1, a2, a3 = 2*a2 - a1 inside
// the set.  Pairs with a1 == a2 are the trivial progressions and are skipped;
// a hit with a1 != a2 can never be trivial (2*a2 - a1 == a2 forces a1 == a2).
// Quadratic in the number of distinct elements.
inline bool is_3ap_free(const std::vector<std::int64_t>& a) {
    std::vector<std::int64_t> u(a);
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    std::unordered_set<std::int64_t> s(u.begin(), u.end());
    for (auto a1 : u) {
        for (auto a2 : u) {
            if (a1 == a2) continue;
            if (s.count(2 * a2 - a1)) return false;
        }
    }
    return true;
}

namespace detail {

// Largest set size for which the constructions run the quadratic scan before
// claiming certification: |A|^2 <= 10^8 pair tests.
inline constexpr std::int64_t kCertifyPairBudget = 100000000;

inline void certify(ConstructionResult& r) {
    if (r.size * r.size > kCertifyPairBudget) {
        r.certified_free = false;
        return;
    }
    if (!is_3ap_free(r.a))
        throw PostconditionFailed("construction produced a set with a nontrivial 3AP");
    r.certified_free = true;
}

// b^d with overflow guard; returns -1 if the power exceeds `cap`.
inline std::int64_t pow_capped(std::int64_t b, int d, std::int64_t cap) {
    std::int64_t v = 1;
    for (int i = 0; i < d; ++i) {
        if (v > cap / b) return -1;
        v *= b;
    }
    return v;
}

} // namespace detail

// Elements n in {1..N} such that n - 1 has only digits 0 and 1 in base 3.
// Sums of distinct powers of 3 contain no nontrivial progression: a1 + a3 =
// 2*a2 compares base-3 digits in {0,1,2} without carries on the left and
// digits {0,2} on the right, forcing digit-wise equality and a1 = a3.
// Reinterpreting the binary digits of t = 0, 1, 2, ... in base 3 enumerates
// the sums in increasing order, so the run time depends on the output size,
// not on N.
inline ConstructionResult ternary_free_set(std::int64_t n) {
    if (n < 1) throw BadInput("ternary_free_set: N must be at least 1");
    ConstructionResult r;
    r.n = n;
    r.method = ConstructionMethod::Ternary;
    for (std::uint64_t t = 0;; ++t) {
        std::int64_t v = 0;
        std::int64_t p = 1;
        bool over = false;
        for (std::uint64_t bits = t; bits != 0; bits >>= 1) {
            if (bits & 1) {
                if (v > n - 1 - p) { over = true; break; }
                v += p;
            }
            if (bits > 1) {
                if (p > (n - 1) / 3 + 1) { over = true; break; }
                p *= 3;
            }
        }
        if (over || v > n - 1) break;
        r.a.push_back(v + 1);
    }
    r.size = static_cast<std::int64_t>(r.a.size());
    detail::certify(r);
    return r;
}

// Behrend's construction: digits x in [0, m)^d, base b = 2m - 1 chosen as
// large as possible with b^d <= N, elements mapped through the base-b value
// of x plus one.  Digit sums x_i + z_i <= 2(m - 1) < b never carry, so an
// integer progression pulls back to a lattice progression, and three distinct
// collinear points cannot share a sphere |x|^2 = r^2.  The most populous
// sphere is selected; ties go to the smallest squared radius.
//
// dim_d == 0 picks the dimension automatically as floor(sqrt(log N)).
inline ConstructionResult behrend_set(std::int64_t n, int dim_d = 0,
                                      RadiusPolicy policy = RadiusPolicy::SmallestOnTie) {
    (void)policy;
    if (n < 8) throw BadInput("behrend_set: N must be at least 8");
    int d = dim_d;
    if (d < 0) throw BadInput("behrend_set: dimension must be nonnegative");
    if (d == 0)
        d = std::max(1, static_cast<int>(std::floor(std::sqrt(std::log(static_cast<double>(n))))));

    // Largest odd base b >= 3 with b^d <= N; digits then range over [0, (b+1)/2).
    if (detail::pow_capped(3, d, n) < 0)
        throw BadInput("behrend_set: N too small for any valid base in dimension " +
                       std::to_string(d));
    std::int64_t b = 3;
    while (true) {
        std::int64_t next = detail::pow_capped(b + 2, d, n);
        if (next < 0) break;
        b += 2;
    }
    std::int64_t m = (b + 1) / 2;

    std::int64_t rmax = static_cast<std::int64_t>(d) * (m - 1) * (m - 1);
    std::vector<std::int64_t> pop(static_cast<std::size_t>(rmax) + 1, 0);
    std::vector<std::int64_t> x(static_cast<std::size_t>(d), 0);
    // Odometer over the lattice [0, m)^d, tallying sphere populations.
    while (true) {
        std::int64_t rsq = 0;
        for (auto xi : x) rsq += xi * xi;
        ++pop[static_cast<std::size_t>(rsq)];
        int i = 0;
        while (i < d && ++x[static_cast<std::size_t>(i)] == m) {
            x[static_cast<std::size_t>(i)] = 0;
            ++i;
        }
        if (i == d) break;
    }
    std::int64_t best_r = 0;
    for (std::int64_t rsq = 1; rsq <= rmax; ++rsq)
        if (pop[static_cast<std::size_t>(rsq)] > pop[static_cast<std::size_t>(best_r)])
            best_r = rsq;  // strict: ties keep the smaller radius

    ConstructionResult r;
    r.n = n;
    r.method = ConstructionMethod::BehrendSphere;
    r.dim_d = d;
    r.base_m = m;
    r.radius_sq = best_r;
    std::fill(x.begin(), x.end(), 0);
    while (true) {
        std::int64_t rsq = 0;
        for (auto xi : x) rsq += xi * xi;
        if (rsq == best_r) {
            std::int64_t v = 0;
            for (int i = d - 1; i >= 0; --i) v = v * b + x[static_cast<std::size_t>(i)];
            r.a.push_back(v + 1);
        }
        int i = 0;
        while (i < d && ++x[static_cast<std::size_t>(i)] == m) {
            x[static_cast<std::size_t>(i)] = 0;
            ++i;
        }
        if (i == d) break;
    }
    std::sort(r.a.begin(), r.a.end());
    r.size = static_cast<std::int64_t>(r.a.size());
    detail::certify(r);
    return r;
}

} // namespace bohrlab
