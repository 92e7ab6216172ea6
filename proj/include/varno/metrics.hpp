#pragma once
// Reconstruction quality metrics: NMSE, PSNR, and SSIM with a 7x7 uniform
// window evaluated over the valid (fully interior) region.  The SSIM
// constants follow the standard convention C1 = (0.01 dr)^2, C2 = (0.03 dr)^2
// with dr the caller-supplied data range; the differentiable loss used in
// training composes the same arithmetic on the autodiff tape, so the two
// paths agree to rounding.

#include <cmath>
#include <cstdint>
#include <limits>

#include "varno/errors.hpp"
#include "varno/tensor.hpp"

namespace varno {

struct Metrics {
    double nmse = 0;
    double psnr_db = 0;
    double ssim = 0;
};

inline double ssim_uniform7(const RTensor& x, const RTensor& y, double data_range) {
    if (!same_shape(x, y)) throw InvalidArgument("ssim: shape mismatch");
    if (!(data_range > 0)) throw InvalidArgument("ssim: data range must be positive");
    const int64_t H = x.dim(0), W = x.dim(1), win = 7;
    if (H < win || W < win) throw InvalidArgument("ssim: image smaller than the 7x7 window");
    const double c1 = (0.01 * data_range) * (0.01 * data_range);
    const double c2 = (0.03 * data_range) * (0.03 * data_range);
    const double inv_n = 1.0 / (win * win);

    double acc = 0;
    int64_t count = 0;
    for (int64_t oy = 0; oy + win <= H; ++oy)
        for (int64_t ox = 0; ox + win <= W; ++ox) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (int64_t dy = 0; dy < win; ++dy)
                for (int64_t dx = 0; dx < win; ++dx) {
                    const double a = x(oy + dy, ox + dx), b = y(oy + dy, ox + dx);
                    sx += a;
                    sy += b;
                    sxx += a * a;
                    syy += b * b;
                    sxy += a * b;
                }
            const double mx = sx * inv_n, my = sy * inv_n;
            const double vx = sxx * inv_n - mx * mx;
            const double vy = syy * inv_n - my * my;
            const double cov = sxy * inv_n - mx * my;
            acc += ((2 * mx * my + c1) * (2 * cov + c2)) /
                   ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    return acc / static_cast<double>(count);
}

// nmse and psnr against the reference x_ref; ssim with the supplied data
// range (conventionally the per-slice max of the reference).
inline Metrics evaluate_metrics(const RTensor& x_hat, const RTensor& x_ref, double data_range) {
    if (!same_shape(x_hat, x_ref)) throw InvalidArgument("evaluate_metrics: shape mismatch");
    if (!(data_range > 0)) throw InvalidArgument("evaluate_metrics: data range must be positive");
    const double ref_sq = sqr_norm(x_ref);
    if (ref_sq == 0.0) throw InvalidArgument("nmse undefined: reference image has zero norm");

    double err_sq = 0;
    for (size_t i = 0; i < x_hat.data.size(); ++i) {
        const double d = x_hat.data[i] - x_ref.data[i];
        err_sq += d * d;
    }
    Metrics m;
    m.nmse = err_sq / ref_sq;
    const double mse = err_sq / static_cast<double>(x_ref.numel());
    m.psnr_db = mse == 0.0 ? std::numeric_limits<double>::infinity()
                           : 10.0 * std::log10(data_range * data_range / mse);
    m.ssim = ssim_uniform7(x_hat, x_ref, data_range);
    return m;
}

}  // namespace varno
