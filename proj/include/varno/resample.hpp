#pragma once
// Resampling utilities shared by the transfer harnesses and the convergence
// oracles: centered k-space embedding/cropping (intensity-preserving under the
// orthonormal transforms), trigonometric upsampling for band-limited fields,
// and align-corners-false bilinear interpolation.

#include <cmath>
#include <cstdint>

#include "varno/fft.hpp"
#include "varno/tensor.hpp"

namespace varno {

// Embed (..., h, w) k-space into the center of (..., H, W), scaled so that the
// orthonormal inverse transform of the result is the trigonometric upsample of
// the original image (values preserved at coincident physical locations).
inline CTensor embed_kspace_center(const CTensor& k, int64_t H, int64_t W) {
    const int64_t h = k.shape[static_cast<size_t>(k.rank() - 2)];
    const int64_t w = k.shape[static_cast<size_t>(k.rank() - 1)];
    if (H < h || W < w) throw InvalidArgument("embed_kspace_center: target smaller than source");
    std::vector<int64_t> shape = k.shape;
    shape[static_cast<size_t>(k.rank() - 2)] = H;
    shape[static_cast<size_t>(k.rank() - 1)] = W;
    CTensor out(shape);
    const int64_t oy = H / 2 - h / 2, ox = W / 2 - w / 2;
    const int64_t batch = k.numel() / (h * w);
    const double scale = std::sqrt(static_cast<double>(H) * static_cast<double>(W) /
                                   (static_cast<double>(h) * static_cast<double>(w)));
    for (int64_t b = 0; b < batch; ++b)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x)
                out.data[static_cast<size_t>((b * H + y + oy) * W + x + ox)] =
                    k.data[static_cast<size_t>((b * h + y) * w + x)] * scale;
    return out;
}

// Centered crop of (..., H, W) k-space to (..., h, w), scaled so the
// orthonormal inverse is the intensity-preserving downsample.
inline CTensor crop_kspace_center(const CTensor& k, int64_t h, int64_t w) {
    const int64_t H = k.shape[static_cast<size_t>(k.rank() - 2)];
    const int64_t W = k.shape[static_cast<size_t>(k.rank() - 1)];
    if (h > H || w > W) throw InvalidArgument("crop_kspace_center: crop larger than source");
    std::vector<int64_t> shape = k.shape;
    shape[static_cast<size_t>(k.rank() - 2)] = h;
    shape[static_cast<size_t>(k.rank() - 1)] = w;
    CTensor out(shape);
    const int64_t oy = H / 2 - h / 2, ox = W / 2 - w / 2;
    const int64_t batch = k.numel() / (H * W);
    const double scale = std::sqrt(static_cast<double>(h) * static_cast<double>(w) /
                                   (static_cast<double>(H) * static_cast<double>(W)));
    for (int64_t b = 0; b < batch; ++b)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x)
                out.data[static_cast<size_t>((b * h + y) * w + x)] =
                    k.data[static_cast<size_t>((b * H + y + oy) * W + x + ox)] * scale;
    return out;
}

// Exact resampling of a band-limited real field onto a factor-times-finer grid
// (spectrum zero-padding).  The tiny imaginary residue from the Nyquist bin of
// even grids is discarded.
inline RTensor trig_upsample2d(const RTensor& x, int64_t factor) {
    const int64_t H = x.dim(0), W = x.dim(1);
    CTensor c({H, W});
    for (size_t i = 0; i < x.data.size(); ++i) c.data[i] = cd(x.data[i], 0.0);
    CTensor up = ifft2c(embed_kspace_center(fft2c(c), H * factor, W * factor));
    RTensor out({H * factor, W * factor});
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = up.data[i].real();
    return out;
}

// Keep only the centered block x block of the spectrum (projection on the same
// grid); the complement of this is the "high band" used by annulus metrics.
inline RTensor lowpass_center(const RTensor& x, int64_t block_h, int64_t block_w) {
    const int64_t H = x.dim(0), W = x.dim(1);
    CTensor c({H, W});
    for (size_t i = 0; i < x.data.size(); ++i) c.data[i] = cd(x.data[i], 0.0);
    CTensor k = fft2c(c);
    const int64_t oy = H / 2 - block_h / 2, ox = W / 2 - block_w / 2;
    for (int64_t y = 0; y < H; ++y)
        for (int64_t xx = 0; xx < W; ++xx)
            if (y < oy || y >= oy + block_h || xx < ox || xx >= ox + block_w)
                k(y, xx) = cd(0, 0);
    CTensor back = ifft2c(k);
    RTensor out({H, W});
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = back.data[i].real();
    return out;
}

namespace detail {

// align-corners-false source coordinate and interpolation weights.
inline void bilinear_coord(int64_t out_i, int64_t scale, int64_t n, int64_t& i0, int64_t& i1,
                           double& frac) {
    double u = (static_cast<double>(out_i) + 0.5) / static_cast<double>(scale) - 0.5;
    if (u <= 0.0) {
        i0 = i1 = 0;
        frac = 0.0;
        return;
    }
    i0 = static_cast<int64_t>(u);
    if (i0 >= n - 1) {
        i0 = i1 = n - 1;
        frac = 0.0;
        return;
    }
    i1 = i0 + 1;
    frac = u - static_cast<double>(i0);
}

}  // namespace detail

// Integer-factor bilinear upsample of (..., H, W), align-corners-false.
template <class T>
inline Tensor<T> bilinear_upsample2d(const Tensor<T>& x, int64_t scale) {
    if (scale < 1) throw InvalidArgument("bilinear_upsample2d: scale must be >= 1");
    const int64_t H = x.shape[static_cast<size_t>(x.rank() - 2)];
    const int64_t W = x.shape[static_cast<size_t>(x.rank() - 1)];
    std::vector<int64_t> shape = x.shape;
    shape[static_cast<size_t>(x.rank() - 2)] = H * scale;
    shape[static_cast<size_t>(x.rank() - 1)] = W * scale;
    Tensor<T> out(shape);
    const int64_t batch = x.numel() / (H * W);
    const int64_t Ho = H * scale, Wo = W * scale;
    for (int64_t b = 0; b < batch; ++b) {
        const T* src = x.ptr() + b * H * W;
        T* dst = out.ptr() + b * Ho * Wo;
        for (int64_t y = 0; y < Ho; ++y) {
            int64_t y0, y1;
            double wy;
            detail::bilinear_coord(y, scale, H, y0, y1, wy);
            for (int64_t xx = 0; xx < Wo; ++xx) {
                int64_t x0, x1;
                double wx;
                detail::bilinear_coord(xx, scale, W, x0, x1, wx);
                T v = src[y0 * W + x0] * ((1 - wy) * (1 - wx)) + src[y0 * W + x1] * ((1 - wy) * wx) +
                      src[y1 * W + x0] * (wy * (1 - wx)) + src[y1 * W + x1] * (wy * wx);
                dst[y * Wo + xx] = v;
            }
        }
    }
    return out;
}

}  // namespace varno
