#pragma once
// Deterministic synthetic data: randomized ellipse phantoms with smooth
// complex coil sensitivities, fully sampled multi-coil k-space consistent
// with the measurement physics by construction, and the masked/noisy
// measurement simulator.  Replaces external scan data so the whole pipeline
// is self-contained and bit-reproducible from a seed.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "varno/errors.hpp"
#include "varno/kspace.hpp"
#include "varno/masks.hpp"
#include "varno/rng.hpp"
#include "varno/tensor.hpp"

namespace varno {

struct PhantomSlice {
    RTensor image;   // (H, W) nonnegative ground truth
    CTensor maps;    // (coils, H, W), RSS = 1 everywhere
    CTensor kspace;  // (coils, H, W) fully sampled, = fft2c(maps * image)
};

struct PhantomDataset {
    std::vector<PhantomSlice> slices;
    uint64_t seed = 0;
    int64_t resolution = 0;
    int n_coils = 0;
};

namespace detail {

// Separable Gaussian blur, zero-padded at the borders.
inline RTensor gaussian_blur(const RTensor& x, double sigma) {
    const int64_t H = x.dim(0), W = x.dim(1);
    const int64_t rad = static_cast<int64_t>(std::ceil(3.0 * sigma));
    std::vector<double> w(static_cast<size_t>(2 * rad + 1));
    double sum = 0;
    for (int64_t i = -rad; i <= rad; ++i)
        sum += (w[static_cast<size_t>(i + rad)] =
                    std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma)));
    for (auto& v : w) v /= sum;

    RTensor tmp({H, W}), out({H, W});
    for (int64_t y = 0; y < H; ++y)
        for (int64_t xx = 0; xx < W; ++xx) {
            double a = 0;
            for (int64_t i = -rad; i <= rad; ++i) {
                const int64_t c = xx + i;
                if (c >= 0 && c < W) a += w[static_cast<size_t>(i + rad)] * x(y, c);
            }
            tmp(y, xx) = a;
        }
    for (int64_t y = 0; y < H; ++y)
        for (int64_t xx = 0; xx < W; ++xx) {
            double a = 0;
            for (int64_t i = -rad; i <= rad; ++i) {
                const int64_t r = y + i;
                if (r >= 0 && r < H) a += w[static_cast<size_t>(i + rad)] * tmp(r, xx);
            }
            out(y, xx) = a;
        }
    return out;
}

inline RTensor phantom_image(int64_t res, Rng& rng) {
    RTensor img({res, res});
    const int n_ell = 6 + static_cast<int>(rng.below(7));  // 6..12
    for (int e = 0; e < n_ell; ++e) {
        const double cx = rng.uniform(0.2, 0.8) * static_cast<double>(res);
        const double cy = rng.uniform(0.2, 0.8) * static_cast<double>(res);
        const double a = rng.uniform(0.05, 0.25) * static_cast<double>(res);
        const double b = rng.uniform(0.05, 0.25) * static_cast<double>(res);
        const double th = rng.uniform(0.0, std::numbers::pi);
        const double val = rng.uniform(0.1, 1.0);
        const double ct = std::cos(th), st = std::sin(th);
        for (int64_t y = 0; y < res; ++y)
            for (int64_t x = 0; x < res; ++x) {
                const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
                const double u = (dx * ct + dy * st) / a, v = (-dx * st + dy * ct) / b;
                if (u * u + v * v <= 1.0) img(y, x) += val;
            }
    }
    return gaussian_blur(img, 2.0);
}

// Smooth complex bumps centered on a circle just outside the image, then
// RSS-normalized.
inline CTensor phantom_maps(int64_t res, int n_coils, Rng& rng) {
    CTensor maps({n_coils, res, res});
    const double c0 = static_cast<double>(res) / 2;
    const double ring = 0.6 * static_cast<double>(res);
    const double sigma = 0.5 * static_cast<double>(res);
    for (int c = 0; c < n_coils; ++c) {
        const double ang = 2.0 * std::numbers::pi *
                               (static_cast<double>(c) / static_cast<double>(n_coils)) +
                           rng.uniform(-0.1, 0.1);
        const double bx = c0 + ring * std::cos(ang), by = c0 + ring * std::sin(ang);
        const double phase0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double ramp = rng.uniform(-1.0, 1.0) * std::numbers::pi / static_cast<double>(res);
        for (int64_t y = 0; y < res; ++y)
            for (int64_t x = 0; x < res; ++x) {
                const double d2 = (static_cast<double>(x) - bx) * (static_cast<double>(x) - bx) +
                                  (static_cast<double>(y) - by) * (static_cast<double>(y) - by);
                const double mag = std::exp(-d2 / (2.0 * sigma * sigma));
                const double ph = phase0 + ramp * static_cast<double>(x + y);
                maps(c, y, x) = cd(mag * std::cos(ph), mag * std::sin(ph));
            }
    }
    return normalize_maps(maps);
}

}  // namespace detail

inline PhantomDataset generate_phantoms(int n, int64_t resolution, int n_coils, uint64_t seed) {
    if (n < 1) throw InvalidArgument("generate_phantoms: need at least one slice");
    if (resolution < 16 || resolution % 16 != 0)
        throw InvalidArgument("generate_phantoms: resolution must be a positive multiple of 16");
    if (n_coils < 1) throw InvalidArgument("generate_phantoms: need at least one coil");

    PhantomDataset ds;
    ds.seed = seed;
    ds.resolution = resolution;
    ds.n_coils = n_coils;
    ds.slices.reserve(static_cast<size_t>(n));
    RTensor full = RTensor::full({resolution, resolution}, 1.0);
    for (int i = 0; i < n; ++i) {
        Rng rng(seed, "phantom/slice-" + std::to_string(i));
        PhantomSlice s;
        s.image = detail::phantom_image(resolution, rng);
        s.maps = detail::phantom_maps(resolution, n_coils, rng);
        CTensor x({resolution, resolution});
        for (int64_t j = 0; j < x.numel(); ++j)
            x.data[static_cast<size_t>(j)] = cd(s.image.data[static_cast<size_t>(j)], 0);
        s.kspace = forward_A(x, s.maps, full);
        ds.slices.push_back(std::move(s));
    }
    return ds;
}

// k_tilde = M (k + eps) with eps i.i.d. complex Gaussian, std noise_sigma per
// real component.  The noise field depends only on (seed, shape), not on the
// mask contents.
inline CoilKSpace simulate_measurement(const CTensor& kspace, const Mask& m, double noise_sigma,
                                       uint64_t seed) {
    detail::check_coil_stack(kspace, "simulate_measurement: k-space");
    detail::check_mask_geometry(kspace, m.bits, "simulate_measurement");
    if (noise_sigma < 0) throw InvalidArgument("simulate_measurement: noise sigma must be >= 0");
    CoilKSpace out;
    out.noise_sigma = noise_sigma;
    out.data = kspace;
    if (noise_sigma > 0) {
        Rng rng(seed, "measurement/noise");
        for (auto& v : out.data.data)
            v += cd(noise_sigma * rng.next_gaussian(), noise_sigma * rng.next_gaussian());
    }
    out.data = apply_mask(out.data, m.bits);
    return out;
}

}  // namespace varno
