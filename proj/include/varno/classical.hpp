#pragma once
// Learning-free baselines: the zero-filled reconstruction and FISTA-solved
// l1-wavelet compressed sensing,  min_x 1/2 ||A x - k||^2 + lambda ||W x||_1,
// with W the orthonormal multi-level Haar transform applied to the complex
// iterate and the proximal map a magnitude soft threshold.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "varno/kspace.hpp"
#include "varno/tensor.hpp"
#include "varno/wavelet.hpp"

namespace varno {

// RSS of the per-coil inverse transforms of the (already masked) k-space.
inline RTensor zero_filled(const CTensor& kspace) {
    detail::check_coil_stack(kspace, "zero_filled: k-space");
    return rss_combine(ifft2c(kspace));
}

struct FistaConfig {
    double lambda = 1e-3;    // l1 weight (>= 0; the CLI defaults it from the zero-filled scale)
    int max_iters = 100;     // >= 1
    double tau = 1.0;        // gradient step; (0, 1] is safe for RSS-normalized coils
    double tolerance = 1e-6; // stop when the relative iterate change falls below this
    int levels = 3;          // wavelet decomposition depth

    void validate() const {
        if (!(lambda >= 0) || !std::isfinite(lambda))
            throw InvalidArgument("fista: lambda must be finite and >= 0");
        if (max_iters < 1) throw InvalidArgument("fista: max_iters must be >= 1");
        if (!(tau > 0) || tau > 1.0) throw InvalidArgument("fista: tau must lie in (0, 1]");
        if (!(tolerance >= 0)) throw InvalidArgument("fista: tolerance must be >= 0");
        if (levels < 1) throw InvalidArgument("fista: levels must be >= 1");
    }
};

struct FistaResult {
    RTensor image;                  // magnitude of the converged complex iterate
    int iterations = 0;             // iterations actually run
    std::vector<double> objective;  // objective value after each iteration
};

namespace detail {

inline double l1_wavelet_norm(const CTensor& x, int levels) {
    CTensor c = haar_dwt(x, levels);
    double s = 0;
    for (const cd& v : c.data) s += std::abs(v);
    return s;
}

inline double data_term(const CTensor& x, const CTensor& k, const CTensor& S,
                        const RTensor& mask) {
    CTensor r = forward_A(x, S, mask);
    for (size_t i = 0; i < r.data.size(); ++i) r.data[i] -= k.data[i];
    return 0.5 * sqr_norm(r);
}

}  // namespace detail

inline FistaResult fista_l1wavelet(const CTensor& kspace, const CTensor& S, const RTensor& mask,
                                   const FistaConfig& cfg) {
    cfg.validate();
    detail::check_coil_stack(kspace, "fista: k-space");
    detail::check_coil_stack(S, "fista: sensitivity maps");
    detail::check_same_geometry(kspace, S, "fista");
    detail::check_mask_geometry(kspace, mask, "fista");
    detail::check_haar_shape(RTensor({kspace.dim(1), kspace.dim(2)}), cfg.levels);

    auto objective = [&](const CTensor& x) {
        return detail::data_term(x, kspace, S, mask) +
               cfg.lambda * detail::l1_wavelet_norm(x, cfg.levels);
    };
    auto prox_grad_step = [&](const CTensor& y) {
        CTensor stepped = dc_step(y, kspace, S, mask, cfg.tau);
        return haar_idwt(soft_threshold(haar_dwt(stepped, cfg.levels), cfg.tau * cfg.lambda),
                         cfg.levels);
    };

    CTensor x_prev = adjoint_A(kspace, S, mask);
    CTensor y = x_prev;
    double t = 1.0;
    FistaResult res;
    int consecutive_up = 0;
    for (int n = 0; n < cfg.max_iters; ++n) {
        CTensor x = prox_grad_step(y);
        const double f = objective(x);
        if (!res.objective.empty() && f > res.objective.back()) {
            if (++consecutive_up >= 10) {
                std::ostringstream msg;
                msg << "fista diverged: objective rose for 10 consecutive iterations; trace:";
                const size_t n_obj = res.objective.size();
                for (size_t i = n_obj > 11 ? n_obj - 11 : 0; i < n_obj; ++i)
                    msg << ' ' << res.objective[i];
                msg << ' ' << f;
                throw NumericError(msg.str());
            }
            // momentum restart keeps the objective monotone when the step
            // itself is stable
            t = 1.0;
            y = x_prev;
            x = prox_grad_step(y);
        } else {
            consecutive_up = 0;
        }
        res.objective.push_back(objective(x));
        res.iterations = n + 1;

        CTensor diff(x.shape);
        for (size_t i = 0; i < x.data.size(); ++i) diff.data[i] = x.data[i] - x_prev.data[i];
        const double denom = l2_norm(x_prev);
        const double rel = denom > 0 ? l2_norm(diff) / denom : l2_norm(diff);

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x;
        const double beta = (t - 1.0) / t_next;
        for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += beta * diff.data[i];
        t = t_next;
        x_prev = x;

        if (rel < cfg.tolerance) break;
    }

    const int64_t H = kspace.dim(1), W = kspace.dim(2);
    res.image = RTensor({H, W});
    for (int64_t i = 0; i < H * W; ++i)
        res.image.data[static_cast<size_t>(i)] = std::abs(x_prev.data[static_cast<size_t>(i)]);
    return res;
}

}  // namespace varno
