#pragma once
// Multi-coil MRI measurement physics on top of the centered orthonormal FFT:
// the forward operator A x = M F (S_i x) per coil, its adjoint, root-sum-of-
// squares coil combination, and the data-consistency gradient step
// x - eta A*(A x - k).  With RSS-normalized maps and the orthonormal
// transform, ||A|| <= 1 and A* A = identity on a full mask.

#include <cmath>
#include <cstdint>

#include "varno/errors.hpp"
#include "varno/fft.hpp"
#include "varno/masks.hpp"
#include "varno/tensor.hpp"

namespace varno {

// Measured (possibly undersampled) k-space for one slice.
struct CoilKSpace {
    CTensor data;            // (coils, H, W); entries off the mask are zero
    double noise_sigma = 0;  // std of the i.i.d. complex Gaussian noise, if simulated
};

namespace detail {

inline void check_coil_stack(const CTensor& t, const char* what) {
    if (t.rank() != 3 || t.dim(0) < 1)
        throw InvalidArgument(std::string(what) + " must have shape (coils, H, W)");
}

inline void check_same_geometry(const CTensor& a, const CTensor& b, const char* what) {
    if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2) || a.dim(0) != b.dim(0))
        throw InvalidArgument(std::string(what) + ": coil stack shapes disagree");
}

inline void check_mask_geometry(const CTensor& t, const RTensor& mask, const char* what) {
    if (mask.rank() != 2 || mask.dim(0) != t.dim(1) || mask.dim(1) != t.dim(2))
        throw InvalidArgument(std::string(what) + ": mask shape disagrees with k-space");
}

}  // namespace detail

// Zero out every k-space sample off the mask, per coil.
inline CTensor apply_mask(const CTensor& k, const RTensor& mask) {
    detail::check_coil_stack(k, "apply_mask: k-space");
    detail::check_mask_geometry(k, mask, "apply_mask");
    const int64_t C = k.dim(0), HW = k.dim(1) * k.dim(2);
    CTensor out(k.shape);
    for (int64_t c = 0; c < C; ++c)
        for (int64_t i = 0; i < HW; ++i)
            out.data[static_cast<size_t>(c * HW + i)] =
                mask.data[static_cast<size_t>(i)] != 0.0
                    ? k.data[static_cast<size_t>(c * HW + i)]
                    : cd(0, 0);
    return out;
}

// A x: per coil i, M . fft2c(S_i . x).   x is (H, W), S is (coils, H, W).
inline CTensor forward_A(const CTensor& x, const CTensor& S, const RTensor& mask) {
    detail::check_coil_stack(S, "forward_A: sensitivity maps");
    if (x.rank() != 2 || x.dim(0) != S.dim(1) || x.dim(1) != S.dim(2))
        throw InvalidArgument("forward_A: image shape disagrees with the maps");
    detail::check_mask_geometry(S, mask, "forward_A");
    const int64_t C = S.dim(0), HW = x.numel();
    CTensor coil_images(S.shape);
    for (int64_t c = 0; c < C; ++c)
        for (int64_t i = 0; i < HW; ++i)
            coil_images.data[static_cast<size_t>(c * HW + i)] =
                S.data[static_cast<size_t>(c * HW + i)] * x.data[static_cast<size_t>(i)];
    return apply_mask(fft2c(coil_images), mask);
}

// A* k = sum_i conj(S_i) . ifft2c(M . k_i), a (H, W) image.
inline CTensor adjoint_A(const CTensor& k, const CTensor& S, const RTensor& mask) {
    detail::check_coil_stack(k, "adjoint_A: k-space");
    detail::check_coil_stack(S, "adjoint_A: sensitivity maps");
    detail::check_same_geometry(k, S, "adjoint_A");
    detail::check_mask_geometry(k, mask, "adjoint_A");
    CTensor coil_images = ifft2c(apply_mask(k, mask));
    const int64_t C = k.dim(0), HW = k.dim(1) * k.dim(2);
    CTensor out({k.dim(1), k.dim(2)});
    for (int64_t c = 0; c < C; ++c)
        for (int64_t i = 0; i < HW; ++i)
            out.data[static_cast<size_t>(i)] +=
                std::conj(S.data[static_cast<size_t>(c * HW + i)]) *
                coil_images.data[static_cast<size_t>(c * HW + i)];
    return out;
}

// Pixelwise sqrt(sum_i |c_i|^2) over a (coils, H, W) stack.
inline RTensor rss_combine(const CTensor& coil_images) {
    detail::check_coil_stack(coil_images, "rss_combine: coil images");
    const int64_t C = coil_images.dim(0), HW = coil_images.dim(1) * coil_images.dim(2);
    RTensor out({coil_images.dim(1), coil_images.dim(2)});
    for (int64_t c = 0; c < C; ++c)
        for (int64_t i = 0; i < HW; ++i)
            out.data[static_cast<size_t>(i)] +=
                std::norm(coil_images.data[static_cast<size_t>(c * HW + i)]);
    for (auto& v : out.data) v = std::sqrt(v);
    return out;
}

// Divide each coil by the pixelwise RSS so that sum_i |S_i|^2 = 1 everywhere.
// The epsilon inside the square root keeps all-zero pixels finite (they stay
// zero rather than dividing 0/0).
inline CTensor normalize_maps(const CTensor& maps, double eps = 1e-24) {
    detail::check_coil_stack(maps, "normalize_maps: maps");
    const int64_t C = maps.dim(0), HW = maps.dim(1) * maps.dim(2);
    RTensor rss({maps.dim(1), maps.dim(2)});
    for (int64_t c = 0; c < C; ++c)
        for (int64_t i = 0; i < HW; ++i)
            rss.data[static_cast<size_t>(i)] +=
                std::norm(maps.data[static_cast<size_t>(c * HW + i)]);
    for (auto& v : rss.data) v = std::sqrt(v + eps);
    CTensor out(maps.shape);
    for (int64_t c = 0; c < C; ++c)
        for (int64_t i = 0; i < HW; ++i)
            out.data[static_cast<size_t>(c * HW + i)] =
                maps.data[static_cast<size_t>(c * HW + i)] / rss.data[static_cast<size_t>(i)];
    return out;
}

// One data-consistency gradient step: x - eta * A*(A x - k).
inline CTensor dc_step(const CTensor& x, const CTensor& kspace, const CTensor& S,
                       const RTensor& mask, double eta) {
    if (!std::isfinite(eta)) throw InvalidArgument("dc_step: eta must be finite");
    detail::check_coil_stack(kspace, "dc_step: k-space");
    detail::check_same_geometry(kspace, S, "dc_step");
    CTensor residual = forward_A(x, S, mask);
    for (size_t i = 0; i < residual.data.size(); ++i) residual.data[i] -= kspace.data[i];
    CTensor grad = adjoint_A(residual, S, mask);
    CTensor out(x.shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = x.data[i] - eta * grad.data[i];
    return out;
}

}  // namespace varno
