#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "bohrlab/errors.hpp"
#include "bohrlab/group.hpp"
#include "bohrlab/sets.hpp"

namespace bohrlab {

using cplx = std::complex<double>;

// Function on a group, one complex value per element index.  Measures are
// handled as densities against the uniform probability measure: integration
// is always (1/N) * sum, so the constant function 1 is the Haar density and
// normalized_indicator(A) is the induced measure on A.
class DensityFn {
public:
    DensityFn() = default;
    explicit DensityFn(Group g, cplx fill = cplx(0.0, 0.0))
        : group_(std::move(g)), v_(static_cast<std::size_t>(group_.size()), fill) {}

    static DensityFn indicator(const ElementSet& s) {
        DensityFn f(s.group());
        for (std::int64_t x : s.elements()) f[x] = 1.0;
        return f;
    }

    // Density of the uniform probability measure on A: (N/|A|) * 1_A.
    static DensityFn normalized_indicator(const ElementSet& s) {
        if (s.empty()) throw BadInput("normalized_indicator of empty set");
        DensityFn f(s.group());
        double w = static_cast<double>(s.group().size()) / static_cast<double>(s.size());
        for (std::int64_t x : s.elements()) f[x] = w;
        return f;
    }

    const Group& group() const { return group_; }
    std::int64_t size() const { return group_.size(); }
    cplx& operator[](std::int64_t i) { return v_[static_cast<std::size_t>(i)]; }
    const cplx& operator[](std::int64_t i) const { return v_[static_cast<std::size_t>(i)]; }
    std::vector<cplx>& values() { return v_; }
    const std::vector<cplx>& values() const { return v_; }

    cplx mean() const {
        cplx s(0.0, 0.0);
        for (const cplx& x : v_) s += x;
        return s / static_cast<double>(group_.size());
    }

    double sup_norm() const {
        double m = 0.0;
        for (const cplx& x : v_) m = std::max(m, std::abs(x));
        return m;
    }

    double max_real() const {
        double m = -HUGE_VAL;
        for (const cplx& x : v_) m = std::max(m, x.real());
        return m;
    }

    // First index attaining the maximum real part (deterministic tie-break).
    std::int64_t argmax_real() const {
        std::int64_t best = 0;
        double m = v_[0].real();
        for (std::int64_t i = 1; i < group_.size(); ++i)
            if (v_[static_cast<std::size_t>(i)].real() > m) {
                m = v_[static_cast<std::size_t>(i)].real();
                best = i;
            }
        return best;
    }

    // x -> f(x + t)
    DensityFn translate(std::int64_t t) const {
        DensityFn out(group_);
        for (std::int64_t x = 0; x < group_.size(); ++x)
            out[x] = v_[static_cast<std::size_t>(group_.add(x, t))];
        return out;
    }

    DensityFn conj() const {
        DensityFn out(group_);
        for (std::int64_t x = 0; x < group_.size(); ++x)
            out[x] = std::conj(v_[static_cast<std::size_t>(x)]);
        return out;
    }

    // x -> f(-x)
    DensityFn reflect() const {
        DensityFn out(group_);
        for (std::int64_t x = 0; x < group_.size(); ++x)
            out[x] = v_[static_cast<std::size_t>(group_.neg(x))];
        return out;
    }

    DensityFn times(const DensityFn& w) const {
        require_same_group(w);
        DensityFn out(group_);
        for (std::size_t i = 0; i < v_.size(); ++i) out.v_[i] = v_[i] * w.v_[i];
        return out;
    }

    DensityFn& operator+=(const DensityFn& o) {
        require_same_group(o);
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
        return *this;
    }

    DensityFn& operator-=(const DensityFn& o) {
        require_same_group(o);
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
        return *this;
    }

    DensityFn& operator*=(cplx c) {
        for (auto& x : v_) x *= c;
        return *this;
    }

    DensityFn& operator-=(cplx c) {
        for (auto& x : v_) x -= c;
        return *this;
    }

    friend DensityFn operator+(DensityFn a, const DensityFn& b) { a += b; return a; }
    friend DensityFn operator-(DensityFn a, const DensityFn& b) { a -= b; return a; }
    friend DensityFn operator*(DensityFn a, cplx c) { a *= c; return a; }
    friend DensityFn operator*(cplx c, DensityFn a) { a *= c; return a; }

private:
    void require_same_group(const DensityFn& o) const {
        if (group_ != o.group_)
            throw BadInput("function operation across different groups: " + group_.str() +
                           " vs " + o.group_.str());
    }

    Group group_;
    std::vector<cplx> v_;
};

// Weights passed to norms and inner products must be probability densities:
// real, nonnegative, mean 1 under the uniform measure.
inline void require_probability_density(const DensityFn& w) {
    double mass = 0.0;
    for (std::int64_t x = 0; x < w.size(); ++x) {
        const cplx& v = w[x];
        if (std::fabs(v.imag()) > 1e-9 || v.real() < -1e-9)
            throw BadInput("weight is not a nonnegative real density");
        mass += v.real();
    }
    mass /= static_cast<double>(w.size());
    if (std::fabs(mass - 1.0) > 1e-6)
        throw BadInput("weight is not a probability density (mean " + std::to_string(mass) + ")");
}

// integral of f against the measure with density w: (1/N) sum f(x) w(x).
// Pass w = nullptr for Haar.
inline cplx integrate(const DensityFn& f, const DensityFn* w = nullptr) {
    cplx s(0.0, 0.0);
    if (w) {
        if (f.group() != w->group()) throw BadInput("integrate: group mismatch");
        for (std::int64_t x = 0; x < f.size(); ++x) s += f[x] * (*w)[x];
    } else {
        for (std::int64_t x = 0; x < f.size(); ++x) s += f[x];
    }
    return s / static_cast<double>(f.size());
}

// <f, g>_{L^2(mu_w)} = integral of f * conj(g) d mu_w.
inline cplx inner_product(const DensityFn& f, const DensityFn& g, const DensityFn* w = nullptr) {
    if (f.group() != g.group()) throw BadInput("inner_product: group mismatch");
    if (w && f.group() != w->group()) throw BadInput("inner_product: weight group mismatch");
    cplx s(0.0, 0.0);
    for (std::int64_t x = 0; x < f.size(); ++x) {
        cplx t = f[x] * std::conj(g[x]);
        if (w) t *= (*w)[x];
        s += t;
    }
    return s / static_cast<double>(f.size());
}

// ||f||_{L^p(mu_w)}; p = infinity is the sup over the support of w.
inline double lp_norm(const DensityFn& f, double p, const DensityFn* w = nullptr) {
    if (w && f.group() != w->group()) throw BadInput("lp_norm: group mismatch");
    if (w) require_probability_density(*w);
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::int64_t x = 0; x < f.size(); ++x) {
            if (w && (*w)[x].real() <= 0.0) continue;
            m = std::max(m, std::abs(f[x]));
        }
        return m;
    }
    if (p < 1.0) throw BadInput("lp_norm: p must be >= 1");
    double s = 0.0;
    for (std::int64_t x = 0; x < f.size(); ++x) {
        double t = std::pow(std::abs(f[x]), p);
        if (w) t *= (*w)[x].real();
        s += t;
    }
    return std::pow(s / static_cast<double>(f.size()), 1.0 / p);
}

} // namespace bohrlab
