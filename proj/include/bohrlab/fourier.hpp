#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "bohrlab/density.hpp"
#include "bohrlab/errors.hpp"
#include "bohrlab/group.hpp"
#include "bohrlab/util.hpp"

namespace bohrlab {

// Normalization used throughout:
//   forward   fhat(gamma) = (1/N) * sum_x f(x) * exp(-2*pi*i*<gamma,x>)
//   inverse   f(x)        = sum_gamma fhat(gamma) * exp(+2*pi*i*<gamma,x>)
//   convolve  (f*g)(x)    = (1/N) * sum_y f(y) g(x-y),  (f*g)^ = fhat * ghat
// Fast transforms factor over the axes; each axis uses an iterative radix-2
// kernel when its length is a power of two and Bluestein's chirp-z otherwise.

inline constexpr std::int64_t kTransformCap = std::int64_t{1} << 20;
inline constexpr std::int64_t kDirectCap = std::int64_t{1} << 12;

namespace detail {

inline bool is_pow2(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

inline std::vector<cplx> make_twiddles(std::int64_t n, int sign) {
    std::vector<cplx> tw(static_cast<std::size_t>(n / 2));
    for (std::int64_t k = 0; k < n / 2; ++k)
        tw[static_cast<std::size_t>(k)] =
            std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    return tw;
}

// In-place power-of-two FFT; tw must come from make_twiddles(n, sign).
inline void fft_pow2(cplx* a, std::int64_t n, const std::vector<cplx>& tw) {
    for (std::int64_t i = 1, j = 0; i < n; ++i) {
        std::int64_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::int64_t len = 2; len <= n; len <<= 1) {
        std::int64_t half = len / 2;
        std::int64_t step = n / len;
        for (std::int64_t i = 0; i < n; i += len)
            for (std::int64_t k = 0; k < half; ++k) {
                cplx w = tw[static_cast<std::size_t>(k * step)];
                cplx u = a[i + k];
                cplx v = a[i + k + half] * w;
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
    }
}

// One-axis DFT plan of length n with the given sign (-1 forward).
struct Dft1D {
    std::int64_t n;
    int sign;
    bool pow2;
    std::vector<cplx> tw;       // pow2 path
    std::int64_t m = 0;         // Bluestein: pow2 length >= 2n-1
    std::vector<cplx> chirp;    // exp(sign * pi * i * k^2 / n)
    std::vector<cplx> vhat;     // forward FFT_m of the padded inverse chirp
    std::vector<cplx> tw_fwd, tw_inv;

    Dft1D(std::int64_t len, int s) : n(len), sign(s), pow2(is_pow2(len)) {
        if (n == 1) return;
        if (pow2) {
            tw = make_twiddles(n, sign);
            return;
        }
        m = 1;
        while (m < 2 * n - 1) m <<= 1;
        chirp.resize(static_cast<std::size_t>(n));
        // k^2 is reduced mod 2n before the angle is formed so the chirp stays
        // exact for large n (exp(i*pi*(k^2 + 2n t)/n) has period 2n in k^2).
        for (std::int64_t k = 0; k < n; ++k) {
            std::int64_t q = (k * k) % (2 * n);
            chirp[static_cast<std::size_t>(k)] =
                std::polar(1.0, sign * std::numbers::pi * static_cast<double>(q) / static_cast<double>(n));
        }
        tw_fwd = make_twiddles(m, -1);
        tw_inv = make_twiddles(m, +1);
        std::vector<cplx> v(static_cast<std::size_t>(m), cplx(0.0, 0.0));
        for (std::int64_t j = 0; j < n; ++j) {
            cplx c = std::conj(chirp[static_cast<std::size_t>(j)]);
            v[static_cast<std::size_t>(j)] = c;
            if (j > 0) v[static_cast<std::size_t>(m - j)] = c;
        }
        fft_pow2(v.data(), m, tw_fwd);
        vhat = std::move(v);
    }

    // x: n values, contiguous.  scratch is resized as needed.
    void apply(cplx* x, std::vector<cplx>& scratch) const {
        if (n == 1) return;
        if (pow2) {
            fft_pow2(x, n, tw);
            return;
        }
        scratch.assign(static_cast<std::size_t>(m), cplx(0.0, 0.0));
        for (std::int64_t k = 0; k < n; ++k)
            scratch[static_cast<std::size_t>(k)] = x[k] * chirp[static_cast<std::size_t>(k)];
        fft_pow2(scratch.data(), m, tw_fwd);
        for (std::int64_t i = 0; i < m; ++i)
            scratch[static_cast<std::size_t>(i)] *= vhat[static_cast<std::size_t>(i)];
        fft_pow2(scratch.data(), m, tw_inv);
        double inv_m = 1.0 / static_cast<double>(m);
        for (std::int64_t k = 0; k < n; ++k)
            x[k] = scratch[static_cast<std::size_t>(k)] * chirp[static_cast<std::size_t>(k)] * inv_m;
    }
};

inline void dft_all_axes(const Group& g, std::vector<cplx>& v, int sign) {
    std::int64_t stride = 1;
    for (int j = static_cast<int>(g.num_factors()) - 1; j >= 0; --j) {
        std::int64_t n = g.orders()[static_cast<std::size_t>(j)];
        if (n > 1) {
            Dft1D plan(n, sign);
            std::int64_t lines = g.size() / n;
            std::int64_t local_stride = stride;
            parallel_for(lines, [&](std::int64_t lo, std::int64_t hi) {
                std::vector<cplx> line(static_cast<std::size_t>(n));
                std::vector<cplx> scratch;
                for (std::int64_t li = lo; li < hi; ++li) {
                    std::int64_t block = li / local_stride;
                    std::int64_t off = li % local_stride;
                    std::int64_t base = block * n * local_stride + off;
                    for (std::int64_t k = 0; k < n; ++k)
                        line[static_cast<std::size_t>(k)] = v[static_cast<std::size_t>(base + k * local_stride)];
                    plan.apply(line.data(), scratch);
                    for (std::int64_t k = 0; k < n; ++k)
                        v[static_cast<std::size_t>(base + k * local_stride)] = line[static_cast<std::size_t>(k)];
                }
            });
        }
        stride *= n;
    }
}

} // namespace detail

inline std::vector<cplx> fourier(const DensityFn& f) {
    if (f.size() > kTransformCap)
        throw SizeCapExceeded("transform size " + std::to_string(f.size()) +
                              " exceeds cap " + std::to_string(kTransformCap));
    std::vector<cplx> v = f.values();
    detail::dft_all_axes(f.group(), v, -1);
    double inv_n = 1.0 / static_cast<double>(f.size());
    for (cplx& c : v) c *= inv_n;
    return v;
}

inline DensityFn inverse_fourier(const Group& g, std::vector<cplx> coeffs) {
    if (static_cast<std::int64_t>(coeffs.size()) != g.size())
        throw BadInput("inverse_fourier: coefficient count does not match group size");
    detail::dft_all_axes(g, coeffs, +1);
    DensityFn f(g);
    f.values() = std::move(coeffs);
    return f;
}

// Quadratic-time reference transform; the oracle the fast path is tested
// against.  Deliberately capped small.
inline std::vector<cplx> fourier_direct(const DensityFn& f) {
    const Group& g = f.group();
    if (g.size() > kDirectCap)
        throw SizeCapExceeded("direct transform size " + std::to_string(g.size()) +
                              " exceeds cap " + std::to_string(kDirectCap));
    std::vector<cplx> out(static_cast<std::size_t>(g.size()));
    for (std::int64_t gamma = 0; gamma < g.size(); ++gamma) {
        cplx s(0.0, 0.0);
        for (std::int64_t x = 0; x < g.size(); ++x)
            s += f[x] * std::polar(1.0, -2.0 * std::numbers::pi * g.phase(gamma, x));
        out[static_cast<std::size_t>(gamma)] = s / static_cast<double>(g.size());
    }
    return out;
}

inline DensityFn convolve(const DensityFn& f, const DensityFn& g) {
    if (f.group() != g.group()) throw BadInput("convolve: group mismatch");
    std::vector<cplx> fh = fourier(f);
    std::vector<cplx> gh = fourier(g);
    for (std::size_t i = 0; i < fh.size(); ++i) fh[i] *= gh[i];
    return inverse_fourier(f.group(), std::move(fh));
}

inline DensityFn convolve_direct(const DensityFn& f, const DensityFn& g) {
    if (f.group() != g.group()) throw BadInput("convolve: group mismatch");
    const Group& gr = f.group();
    if (gr.size() > kDirectCap)
        throw SizeCapExceeded("direct convolution size " + std::to_string(gr.size()) +
                              " exceeds cap " + std::to_string(kDirectCap));
    DensityFn out(gr);
    for (std::int64_t x = 0; x < gr.size(); ++x) {
        cplx s(0.0, 0.0);
        for (std::int64_t y = 0; y < gr.size(); ++y) s += f[y] * g[gr.sub(x, y)];
        out[x] = s / static_cast<double>(gr.size());
    }
    return out;
}

// N * (1_A * 1_B)(x) = #{(a,b) : a+b = x} -- convolution counts as exact
// integers (rounded; the transform error is far below 1/2 at our caps).
inline std::vector<std::int64_t> pair_counts(const ElementSet& a, const ElementSet& b) {
    DensityFn c = convolve(DensityFn::indicator(a), DensityFn::indicator(b));
    std::vector<std::int64_t> out(static_cast<std::size_t>(c.size()));
    for (std::int64_t x = 0; x < c.size(); ++x)
        out[static_cast<std::size_t>(x)] =
            std::llround(c[x].real() * static_cast<double>(c.size()));
    return out;
}

} // namespace bohrlab
