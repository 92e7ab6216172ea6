#pragma once
// Orthonormal multi-level 2-D Haar transform (pyramid layout: each level
// rewrites the top-left low-pass block into four quadrants) and the l1
// proximal map (soft threshold; complex coefficients shrink in magnitude with
// phase preserved).  The same template serves real images and complex FISTA
// iterates, since the transform is linear.

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "varno/errors.hpp"
#include "varno/tensor.hpp"

namespace varno {

namespace detail {

template <class T>
void haar_rows(Tensor<T>& a, int64_t h, int64_t w, bool inverse) {
    const double s = std::sqrt(0.5);
    std::vector<T> tmp(static_cast<size_t>(w));
    const int64_t half = w / 2;
    for (int64_t r = 0; r < h; ++r) {
        if (!inverse) {
            for (int64_t c = 0; c < half; ++c) {
                const T x0 = a(r, 2 * c), x1 = a(r, 2 * c + 1);
                tmp[static_cast<size_t>(c)] = (x0 + x1) * s;
                tmp[static_cast<size_t>(half + c)] = (x0 - x1) * s;
            }
        } else {
            for (int64_t c = 0; c < half; ++c) {
                const T lo = a(r, c), hi = a(r, half + c);
                tmp[static_cast<size_t>(2 * c)] = (lo + hi) * s;
                tmp[static_cast<size_t>(2 * c + 1)] = (lo - hi) * s;
            }
        }
        for (int64_t c = 0; c < w; ++c) a(r, c) = tmp[static_cast<size_t>(c)];
    }
}

template <class T>
void haar_cols(Tensor<T>& a, int64_t h, int64_t w, bool inverse) {
    const double s = std::sqrt(0.5);
    std::vector<T> tmp(static_cast<size_t>(h));
    const int64_t half = h / 2;
    for (int64_t c = 0; c < w; ++c) {
        if (!inverse) {
            for (int64_t r = 0; r < half; ++r) {
                const T x0 = a(2 * r, c), x1 = a(2 * r + 1, c);
                tmp[static_cast<size_t>(r)] = (x0 + x1) * s;
                tmp[static_cast<size_t>(half + r)] = (x0 - x1) * s;
            }
        } else {
            for (int64_t r = 0; r < half; ++r) {
                const T lo = a(r, c), hi = a(half + r, c);
                tmp[static_cast<size_t>(2 * r)] = (lo + hi) * s;
                tmp[static_cast<size_t>(2 * r + 1)] = (lo - hi) * s;
            }
        }
        for (int64_t r = 0; r < h; ++r) a(r, c) = tmp[static_cast<size_t>(r)];
    }
}

template <class T>
void check_haar_shape(const Tensor<T>& x, int levels) {
    if (x.rank() != 2) throw InvalidArgument("haar: input must be a 2-D image");
    if (levels < 1) throw InvalidArgument("haar: levels must be >= 1");
    const int64_t div = int64_t{1} << levels;
    if (x.dim(0) % div != 0 || x.dim(1) % div != 0)
        throw InvalidArgument("haar: image extents must be divisible by 2^levels");
}

}  // namespace detail

template <class T>
Tensor<T> haar_dwt(const Tensor<T>& x, int levels) {
    detail::check_haar_shape(x, levels);
    Tensor<T> a = x;
    for (int l = 0; l < levels; ++l) {
        const int64_t h = x.dim(0) >> l, w = x.dim(1) >> l;
        detail::haar_rows(a, h, w, false);
        detail::haar_cols(a, h, w, false);
    }
    return a;
}

template <class T>
Tensor<T> haar_idwt(const Tensor<T>& c, int levels) {
    detail::check_haar_shape(c, levels);
    Tensor<T> a = c;
    for (int l = levels - 1; l >= 0; --l) {
        const int64_t h = c.dim(0) >> l, w = c.dim(1) >> l;
        detail::haar_cols(a, h, w, true);
        detail::haar_rows(a, h, w, true);
    }
    return a;
}

inline double soft_threshold(double c, double t) {
    if (t < 0) throw InvalidArgument("soft_threshold: threshold must be >= 0");
    const double m = std::abs(c) - t;
    return m > 0 ? (c < 0 ? -m : m) : 0.0;
}

inline cd soft_threshold(cd c, double t) {
    if (t < 0) throw InvalidArgument("soft_threshold: threshold must be >= 0");
    const double m = std::abs(c);
    return m > t ? c * ((m - t) / m) : cd(0, 0);
}

template <class T>
Tensor<T> soft_threshold(const Tensor<T>& c, double t) {
    Tensor<T> out(c.shape);
    for (size_t i = 0; i < c.data.size(); ++i) out.data[i] = soft_threshold(c.data[i], t);
    return out;
}

}  // namespace varno
