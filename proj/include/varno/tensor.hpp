#pragma once
// Dense row-major tensors (real64 / complex128) and 2-D grid geometry.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "varno/errors.hpp"

namespace varno {

using cd = std::complex<double>;

template <class T>
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(count(shape)), T{});
    }
    Tensor(std::vector<int64_t> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<int64_t>(data.size()) != count(shape))
            throw InvalidArgument("tensor: data size does not match shape");
    }

    static Tensor zeros(std::vector<int64_t> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<int64_t> s, T v) {
        Tensor t(std::move(s));
        for (auto& x : t.data) x = v;
        return t;
    }

    static int64_t count(const std::vector<int64_t>& s) {
        int64_t n = 1;
        for (auto e : s) {
            if (e <= 0) throw InvalidArgument("tensor: extents must be positive");
            n *= e;
        }
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int64_t dim(int i) const { return shape[static_cast<size_t>(i)]; }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    T& operator()(int64_t i) { return data[static_cast<size_t>(i)]; }
    const T& operator()(int64_t i) const { return data[static_cast<size_t>(i)]; }
    T& operator()(int64_t i, int64_t j) { return data[static_cast<size_t>(i * shape[1] + j)]; }
    const T& operator()(int64_t i, int64_t j) const {
        return data[static_cast<size_t>(i * shape[1] + j)];
    }
    T& operator()(int64_t i, int64_t j, int64_t k) {
        return data[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
    }
    const T& operator()(int64_t i, int64_t j, int64_t k) const {
        return data[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
    }
    T& operator()(int64_t i, int64_t j, int64_t k, int64_t l) {
        return data[static_cast<size_t>(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
    }
    const T& operator()(int64_t i, int64_t j, int64_t k, int64_t l) const {
        return data[static_cast<size_t>(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
    }
};

using RTensor = Tensor<double>;
using CTensor = Tensor<cd>;

template <class T>
inline bool same_shape(const Tensor<T>& a, const Tensor<T>& b) {
    return a.shape == b.shape;
}
inline bool same_extents(const std::vector<int64_t>& a, const std::vector<int64_t>& b) {
    return a == b;
}

inline double sqr_norm(const RTensor& t) {
    double s = 0;
    for (double v : t.data) s += v * v;
    return s;
}
inline double sqr_norm(const CTensor& t) {
    double s = 0;
    for (const cd& v : t.data) s += std::norm(v);
    return s;
}
template <class T>
inline double l2_norm(const Tensor<T>& t) {
    return std::sqrt(sqr_norm(t));
}

// <a, b> with the first argument conjugated.
inline cd cdot(const CTensor& a, const CTensor& b) {
    cd s = 0;
    for (size_t i = 0; i < a.data.size(); ++i) s += std::conj(a.data[i]) * b.data[i];
    return s;
}
inline double rdot(const RTensor& a, const RTensor& b) {
    double s = 0;
    for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

template <class T>
inline double max_abs(const Tensor<T>& t) {
    double m = 0;
    for (const auto& v : t.data) m = std::max(m, std::abs(v));
    return m;
}

template <class T>
inline double rel_l2_diff(const Tensor<T>& a, const Tensor<T>& b) {
    if (!same_shape(a, b)) throw InvalidArgument("rel_l2_diff: shape mismatch");
    double num = 0, den = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        num += std::norm(static_cast<cd>(a.data[i]) - static_cast<cd>(b.data[i]));
        den += std::norm(static_cast<cd>(b.data[i]));
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

// Uniform 2-D grid over an axis-aligned physical domain; samples live at cell
// midpoints, so the product of spacings is the quadrature weight of one cell.
struct GridSpec {
    std::array<double, 2> lo{-1.0, -1.0};
    std::array<double, 2> hi{1.0, 1.0};
    std::array<int64_t, 2> res{0, 0};  // {H, W} = {rows (y), cols (x)}

    GridSpec() = default;
    GridSpec(int64_t h, int64_t w) : res{h, w} {}
    GridSpec(std::array<double, 2> lo_, std::array<double, 2> hi_, std::array<int64_t, 2> res_)
        : lo(lo_), hi(hi_), res(res_) {
        if (res[0] <= 0 || res[1] <= 0) throw InvalidArgument("grid: resolution must be positive");
        if (hi[0] <= lo[0] || hi[1] <= lo[1]) throw InvalidArgument("grid: empty domain");
    }

    double spacing(int axis) const {
        return (hi[static_cast<size_t>(axis)] - lo[static_cast<size_t>(axis)]) /
               static_cast<double>(res[static_cast<size_t>(axis)]);
    }
    double quad_weight() const { return spacing(0) * spacing(1); }
    double point(int axis, int64_t i) const {
        return lo[static_cast<size_t>(axis)] + (static_cast<double>(i) + 0.5) * spacing(axis);
    }
    GridSpec scaled(int64_t factor_num, int64_t factor_den = 1) const {
        GridSpec g = *this;
        g.res = {res[0] * factor_num / factor_den, res[1] * factor_num / factor_den};
        return g;
    }
};

}  // namespace varno
