#pragma once
// Self-contained complex FFT plus the centered orthonormal 2-D transforms used
// for k-space.  Power-of-two lengths run an iterative radix-2; everything else
// goes through Bluestein's chirp-z embedding, so any grid size works.  All
// paths are single-threaded and bit-deterministic.

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <vector>

#include "varno/errors.hpp"
#include "varno/tensor.hpp"

namespace varno {
namespace detail {

inline bool is_pow2(int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

struct Pow2Plan {
    int64_t n;
    std::vector<int32_t> rev;          // bit-reversal permutation
    std::vector<cd> tw;                // twiddles, grouped per stage
    std::vector<int64_t> stage_offset;

    explicit Pow2Plan(int64_t n_) : n(n_) {
        rev.resize(static_cast<size_t>(n));
        int lg = 0;
        while ((int64_t{1} << lg) < n) ++lg;
        for (int64_t i = 0; i < n; ++i) {
            int64_t r = 0;
            for (int b = 0; b < lg; ++b)
                if (i & (int64_t{1} << b)) r |= int64_t{1} << (lg - 1 - b);
            rev[static_cast<size_t>(i)] = static_cast<int32_t>(r);
        }
        for (int64_t len = 2; len <= n; len <<= 1) {
            stage_offset.push_back(static_cast<int64_t>(tw.size()));
            int64_t half = len / 2;
            for (int64_t j = 0; j < half; ++j) {
                double ang = -2.0 * std::numbers::pi * static_cast<double>(j) /
                             static_cast<double>(len);
                tw.push_back(cd(std::cos(ang), std::sin(ang)));
            }
        }
    }
};

inline const Pow2Plan& pow2_plan(int64_t n) {
    static std::map<int64_t, std::unique_ptr<Pow2Plan>> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::make_unique<Pow2Plan>(n)).first;
    return *it->second;
}

// In-place unnormalized DFT of power-of-two length; inverse uses conjugated
// twiddles (still unnormalized).
inline void fft_pow2(cd* x, int64_t n, bool inverse) {
    const Pow2Plan& p = pow2_plan(n);
    for (int64_t i = 0; i < n; ++i) {
        int64_t r = p.rev[static_cast<size_t>(i)];
        if (i < r) std::swap(x[i], x[r]);
    }
    int stage = 0;
    for (int64_t len = 2; len <= n; len <<= 1, ++stage) {
        int64_t half = len / 2;
        const cd* tw = p.tw.data() + p.stage_offset[static_cast<size_t>(stage)];
        for (int64_t i = 0; i < n; i += len) {
            for (int64_t j = 0; j < half; ++j) {
                cd w = inverse ? std::conj(tw[j]) : tw[j];
                cd u = x[i + j];
                cd v = x[i + j + half] * w;
                x[i + j] = u + v;
                x[i + j + half] = u - v;
            }
        }
    }
}

struct BluesteinPlan {
    int64_t n, m;
    std::vector<cd> chirp;   // w^{k^2/2}: exp(-i*pi*k^2/n)
    std::vector<cd> bhat;    // FFT of the chirp filter, length m

    explicit BluesteinPlan(int64_t n_) : n(n_) {
        m = 1;
        while (m < 2 * n - 1) m <<= 1;
        chirp.resize(static_cast<size_t>(n));
        for (int64_t k = 0; k < n; ++k) {
            // k^2 mod 2n keeps the twiddle angle exact for large k.
            int64_t k2 = (k * k) % (2 * n);
            double ang = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
            chirp[static_cast<size_t>(k)] = cd(std::cos(ang), std::sin(ang));
        }
        std::vector<cd> b(static_cast<size_t>(m), cd(0, 0));
        b[0] = std::conj(chirp[0]);
        for (int64_t k = 1; k < n; ++k) {
            b[static_cast<size_t>(k)] = std::conj(chirp[static_cast<size_t>(k)]);
            b[static_cast<size_t>(m - k)] = std::conj(chirp[static_cast<size_t>(k)]);
        }
        fft_pow2(b.data(), m, false);
        bhat = std::move(b);
    }
};

inline const BluesteinPlan& bluestein_plan(int64_t n) {
    static std::map<int64_t, std::unique_ptr<BluesteinPlan>> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::make_unique<BluesteinPlan>(n)).first;
    return *it->second;
}

inline void fft_bluestein(cd* x, int64_t n, bool inverse) {
    const BluesteinPlan& p = bluestein_plan(n);
    std::vector<cd> a(static_cast<size_t>(p.m), cd(0, 0));
    for (int64_t k = 0; k < n; ++k) {
        cd c = inverse ? std::conj(p.chirp[static_cast<size_t>(k)])
                       : p.chirp[static_cast<size_t>(k)];
        a[static_cast<size_t>(k)] = x[k] * c;
    }
    fft_pow2(a.data(), p.m, false);
    if (!inverse) {
        for (int64_t i = 0; i < p.m; ++i) a[static_cast<size_t>(i)] *= p.bhat[static_cast<size_t>(i)];
    } else {
        // The inverse chirp filter is the conjugate; reuse the forward table.
        for (int64_t i = 0; i < p.m; ++i) {
            int64_t j = i == 0 ? 0 : p.m - i;
            a[static_cast<size_t>(i)] *= std::conj(p.bhat[static_cast<size_t>(j)]);
        }
    }
    fft_pow2(a.data(), p.m, true);
    double inv_m = 1.0 / static_cast<double>(p.m);
    for (int64_t k = 0; k < n; ++k) {
        cd c = inverse ? std::conj(p.chirp[static_cast<size_t>(k)])
                       : p.chirp[static_cast<size_t>(k)];
        x[k] = a[static_cast<size_t>(k)] * inv_m * c;
    }
}

}  // namespace detail

// In-place unnormalized complex DFT (inverse: conjugated kernel, no 1/n).
inline void fft_inplace(cd* x, int64_t n, bool inverse) {
    if (n <= 0) throw InvalidArgument("fft: length must be positive");
    if (n == 1) return;
    if (detail::is_pow2(n))
        detail::fft_pow2(x, n, inverse);
    else
        detail::fft_bluestein(x, n, inverse);
}

namespace detail {

// Centered orthonormal 2-D transform over the last two axes of a (..., H, W)
// tensor: shift the center sample to the origin, transform both axes, shift
// back, and scale by 1/sqrt(H*W) in each direction.
inline CTensor fft2c_impl(const CTensor& in, bool inverse) {
    if (in.rank() < 2) throw InvalidArgument("fft2c: rank must be >= 2");
    const int64_t W = in.shape[static_cast<size_t>(in.rank() - 1)];
    const int64_t H = in.shape[static_cast<size_t>(in.rank() - 2)];
    const int64_t batch = in.numel() / (H * W);
    const int64_t sh = H / 2, sw = W / 2;  // ifftshift offset (floor works for both parities
                                           // because we shift forward by H - H/2 below)
    CTensor out(in.shape);
    std::vector<cd> col(static_cast<size_t>(H));
    const double scale = 1.0 / std::sqrt(static_cast<double>(H) * static_cast<double>(W));
    for (int64_t b = 0; b < batch; ++b) {
        const cd* src = in.ptr() + b * H * W;
        cd* dst = out.ptr() + b * H * W;
        // ifftshift: index i reads from (i + ceil(N/2)) mod N == (i + N - N/2) mod N inverted;
        // writing dst[i] = src[(i + sh') mod N] with sh' = ceil(N/2) moves the center to 0.
        const int64_t ch = (H + 1) / 2, cw = (W + 1) / 2;
        for (int64_t r = 0; r < H; ++r) {
            const cd* srow = src + ((r + ch) % H) * W;
            cd* drow = dst + r * W;
            for (int64_t c = 0; c < W; ++c) drow[c] = srow[(c + cw) % W];
        }
        for (int64_t r = 0; r < H; ++r) fft_inplace(dst + r * W, W, inverse);
        for (int64_t c = 0; c < W; ++c) {
            for (int64_t r = 0; r < H; ++r) col[static_cast<size_t>(r)] = dst[r * W + c];
            fft_inplace(col.data(), H, inverse);
            for (int64_t r = 0; r < H; ++r) dst[r * W + c] = col[static_cast<size_t>(r)];
        }
        // fftshift: move the origin back to the center bin (floor(N/2)).
        std::vector<cd> tmp(static_cast<size_t>(H * W));
        for (int64_t r = 0; r < H; ++r) {
            cd* trow = tmp.data() + ((r + sh) % H) * W;
            const cd* drow = dst + r * W;
            for (int64_t c = 0; c < W; ++c) trow[(c + sw) % W] = drow[c] * scale;
        }
        std::copy(tmp.begin(), tmp.end(), dst);
    }
    return out;
}

}  // namespace detail

inline CTensor fft2c(const CTensor& x) { return detail::fft2c_impl(x, false); }
inline CTensor ifft2c(const CTensor& x) { return detail::fft2c_impl(x, true); }

}  // namespace varno
