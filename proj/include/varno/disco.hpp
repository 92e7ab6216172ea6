#pragma once
// Discrete-continuous convolution: a continuous kernel (a learned combination
// of basis members) is sampled on the pixel lattice of the evaluation grid and
// applied by midpoint quadrature,
//
//   (k * g)(v_i) ~= sum_j kappa(u_j - v_i) g(u_j) q,   q = h^2.
//
// The tap footprint therefore scales with resolution while the physical
// support radius stays fixed.  A plain fixed-tap convolution (footprint pinned
// in pixels, offsets z_i = h*(i - (S-1)/2)) is also provided for comparisons.

#include <cmath>
#include <cstdint>
#include <vector>

#include "varno/errors.hpp"
#include "varno/kernel_basis.hpp"
#include "varno/tensor.hpp"

namespace varno {

struct KernelSpec {
    int in_channels = 1;
    int out_channels = 1;
    BasisSpec basis;
};

// Basis members tabulated on the tap lattice of one grid: row per tap
// (row-major over the (2w+1)^2 footprint), column per member, quadrature
// weight folded in.  Taps outside the radius-r disc are exactly zero.
struct BasisTable {
    int half_width = 0;                 // w = floor(r / h)
    RTensor values;                     // ((2w+1)^2, L)
};

inline BasisTable tabulate_basis(const BasisSpec& spec, const GridSpec& grid) {
    spec.validate();
    const double hx = grid.spacing(1), hy = grid.spacing(0);
    if (std::abs(hx - hy) > 1e-12 * std::max(std::abs(hx), std::abs(hy)))
        throw InvalidArgument("kernel synthesis requires equal grid spacing on both axes");
    const double h = hx;
    if (spec.radius < h * (1.0 - 1e-12))
        throw InvalidArgument("kernel under-resolved: radius " + std::to_string(spec.radius) +
                              " is below the grid spacing " + std::to_string(h));
    const int w = static_cast<int>(std::floor(spec.radius / h * (1.0 + 1e-12)));
    const int S = 2 * w + 1;
    const int L = spec.count();
    const double q = grid.quad_weight();

    BasisTable table;
    table.half_width = w;
    table.values = RTensor({static_cast<int64_t>(S) * S, L});
    std::vector<double> vals(static_cast<size_t>(L));
    for (int py = -w; py <= w; ++py) {
        for (int px = -w; px <= w; ++px) {
            const int64_t row = static_cast<int64_t>(py + w) * S + (px + w);
            const double ox = px * h, oy = py * h;
            if (std::hypot(ox, oy) > spec.radius * (1.0 + 1e-12)) {
                for (int l = 0; l < L; ++l) table.values(row, l) = 0.0;
                continue;
            }
            eval_basis(spec, ox, oy, vals.data());
            for (int l = 0; l < L; ++l) table.values(row, l) = q * vals[static_cast<size_t>(l)];
        }
    }
    return table;
}

struct DiscoKernel {
    KernelSpec spec;
    GridSpec grid;
    int half_width = 0;
    RTensor weights;  // (out, in, 2w+1, 2w+1), quadrature weight included
};

// theta: (out, in, L) coefficients over the basis members.
inline DiscoKernel synthesize_kernel(const KernelSpec& spec, const GridSpec& grid,
                                     const RTensor& theta) {
    const int L = spec.basis.count();
    if (theta.rank() != 3 || theta.dim(0) != spec.out_channels || theta.dim(1) != spec.in_channels ||
        theta.dim(2) != L)
        throw InvalidArgument("synthesize_kernel: theta must be (out, in, L)");
    BasisTable table = tabulate_basis(spec.basis, grid);
    const int S = 2 * table.half_width + 1;

    DiscoKernel k;
    k.spec = spec;
    k.grid = grid;
    k.half_width = table.half_width;
    k.weights = RTensor({spec.out_channels, spec.in_channels, S, S});
    for (int64_t o = 0; o < spec.out_channels; ++o)
        for (int64_t i = 0; i < spec.in_channels; ++i) {
            const double* th = theta.ptr() + (o * spec.in_channels + i) * L;
            double* wout = k.weights.ptr() + ((o * spec.in_channels + i) * S) * S;
            for (int64_t t = 0; t < static_cast<int64_t>(S) * S; ++t) {
                double acc = 0;
                const double* row = table.values.ptr() + t * L;
                for (int l = 0; l < L; ++l) acc += th[l] * row[l];
                wout[t] = acc;
            }
        }
    return k;
}

// Same-size zero-padded correlation of (in, H, W) with taps (out, in, S, S).
inline RTensor conv2d_taps(const RTensor& taps, const RTensor& x) {
    if (taps.rank() != 4 || x.rank() != 3)
        throw InvalidArgument("conv2d: taps must be (out,in,S,S) and input (in,H,W)");
    const int64_t O = taps.dim(0), I = taps.dim(1), S = taps.dim(2);
    if (taps.dim(3) != S || (S % 2) == 0) throw InvalidArgument("conv2d: taps must be odd square");
    if (x.dim(0) != I) throw InvalidArgument("conv2d: input channel count mismatch");
    const int64_t H = x.dim(1), W = x.dim(2);
    const int64_t c = S / 2;

    RTensor out({O, H, W});
    for (int64_t o = 0; o < O; ++o) {
        double* op = out.ptr() + o * H * W;
        for (int64_t i = 0; i < I; ++i) {
            const double* ip = x.ptr() + i * H * W;
            const double* wp = taps.ptr() + (o * I + i) * S * S;
            for (int64_t dy = -c; dy <= c; ++dy) {
                for (int64_t dx = -c; dx <= c; ++dx) {
                    const double w = wp[(dy + c) * S + (dx + c)];
                    if (w == 0.0) continue;  // disc corners are exact zeros
                    const int64_t y0 = std::max<int64_t>(0, -dy), y1 = std::min(H, H - dy);
                    const int64_t x0 = std::max<int64_t>(0, -dx), x1 = std::min(W, W - dx);
                    for (int64_t y = y0; y < y1; ++y) {
                        double* orow = op + y * W;
                        const double* irow = ip + (y + dy) * W + dx;
                        for (int64_t xx = x0; xx < x1; ++xx) orow[xx] += w * irow[xx];
                    }
                }
            }
        }
    }
    return out;
}

inline RTensor disco_conv2d(const DiscoKernel& k, const RTensor& x) {
    if (x.rank() != 3 || x.dim(1) != k.grid.res[0] || x.dim(2) != k.grid.res[1])
        throw InvalidArgument("disco_conv2d: input does not live on the kernel's grid");
    return conv2d_taps(k.weights, x);
}

// Resample fixed taps onto a larger odd footprint by bilinear interpolation,
// preserving the sum of absolute values per (out, in) pair.
inline RTensor rescale_kernel_bilinear(const RTensor& taps, int new_S) {
    if (taps.rank() != 4) throw InvalidArgument("rescale: taps must be (out,in,S,S)");
    const int64_t O = taps.dim(0), I = taps.dim(1), S = taps.dim(2);
    if (taps.dim(3) != S) throw InvalidArgument("rescale: taps must be square");
    if (new_S < 1 || (new_S % 2) == 0) throw InvalidArgument("rescale: new size must be odd");
    if (new_S == static_cast<int>(S)) return taps;

    RTensor out({O, I, new_S, new_S});
    const double step = new_S > 1 ? static_cast<double>(S - 1) / static_cast<double>(new_S - 1) : 0.0;
    for (int64_t o = 0; o < O; ++o)
        for (int64_t i = 0; i < I; ++i) {
            const double* src = taps.ptr() + (o * I + i) * S * S;
            double* dst = out.ptr() + (o * I + i) * new_S * new_S;
            double old_norm = 0, new_norm = 0;
            for (int64_t t = 0; t < S * S; ++t) old_norm += std::abs(src[t]);
            for (int a = 0; a < new_S; ++a) {
                const double fy = a * step;
                const int64_t y0 = std::min<int64_t>(static_cast<int64_t>(fy), S - 1);
                const int64_t y1 = std::min<int64_t>(y0 + 1, S - 1);
                const double wy = fy - static_cast<double>(y0);
                for (int b = 0; b < new_S; ++b) {
                    const double fx = b * step;
                    const int64_t x0 = std::min<int64_t>(static_cast<int64_t>(fx), S - 1);
                    const int64_t x1 = std::min<int64_t>(x0 + 1, S - 1);
                    const double wx = fx - static_cast<double>(x0);
                    double v = (1 - wy) * ((1 - wx) * src[y0 * S + x0] + wx * src[y0 * S + x1]) +
                               wy * ((1 - wx) * src[y1 * S + x0] + wx * src[y1 * S + x1]);
                    dst[a * new_S + b] = v;
                    new_norm += std::abs(v);
                }
            }
            if (new_norm > 0) {
                const double scale = old_norm / new_norm;
                for (int64_t t = 0; t < static_cast<int64_t>(new_S) * new_S; ++t) dst[t] *= scale;
            }
        }
    return out;
}

// Fixed-tap footprint suited to a resolution change: scale the linear extent
// and keep it odd (3 -> 7 under a 2x transfer).
inline int rescaled_odd_size(int S, double scale) {
    int n = static_cast<int>(std::lround(S * scale));
    if (n < 1) n = 1;
    if ((n % 2) == 0) ++n;
    return n;
}

}  // namespace varno
