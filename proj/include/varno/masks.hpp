#pragma once
// K-space undersampling masks.
//
// Six patterns, deterministic in (pattern, R, cf, shape, seed).  Rectilinear
// patterns (equispaced / random / magic) keep whole columns and carry a fully
// sampled band of n_c = round(W*cf) center columns; irregular patterns
// (gaussian / radial / poisson) keep individual points and carry a fully
// sampled center disc of radius cf*min(H,W)/2.  Every pattern is calibrated so
// the achieved sampling fraction stays within +-20% of 1/R (+-10% for
// poisson, which is calibrated to that gate by construction).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "varno/errors.hpp"
#include "varno/rng.hpp"
#include "varno/tensor.hpp"

namespace varno {

enum class MaskPattern { equispaced, random_cols, magic, gaussian, radial, poisson };

inline std::string_view to_string(MaskPattern p) {
    switch (p) {
        case MaskPattern::equispaced: return "equispaced";
        case MaskPattern::random_cols: return "random";
        case MaskPattern::magic: return "magic";
        case MaskPattern::gaussian: return "gaussian";
        case MaskPattern::radial: return "radial";
        case MaskPattern::poisson: return "poisson";
    }
    throw InvalidArgument("unknown mask pattern");
}

inline MaskPattern mask_pattern_from_string(std::string_view s) {
    if (s == "equispaced") return MaskPattern::equispaced;
    if (s == "random") return MaskPattern::random_cols;
    if (s == "magic") return MaskPattern::magic;
    if (s == "gaussian") return MaskPattern::gaussian;
    if (s == "radial") return MaskPattern::radial;
    if (s == "poisson") return MaskPattern::poisson;
    throw InvalidArgument("unknown mask pattern '" + std::string(s) +
                          "' (expected equispaced|random|magic|gaussian|radial|poisson)");
}

struct Mask {
    MaskPattern pattern = MaskPattern::equispaced;
    int R = 1;
    double cf = 0;
    uint64_t seed = 0;
    RTensor bits;  // (H, W), entries exactly 0.0 or 1.0
};

struct MaskStats {
    double achieved_fraction = 0;
    int64_t center_width = 0;  // contiguous fully sampled columns around W/2
};

namespace detail {

// Number of fully sampled center columns and the index of the first one.
inline int64_t center_cols(int64_t W, double cf) { return std::lround(static_cast<double>(W) * cf); }
// Ceil placement so the band always covers the DC column at W/2 (an odd-width
// band on an even grid would otherwise sit one column left of it).
inline int64_t center_start(int64_t W, int64_t n_c) { return (W - n_c + 1) / 2; }

inline void fill_columns(RTensor& bits, int64_t first, int64_t count) {
    const int64_t H = bits.dim(0), W = bits.dim(1);
    for (int64_t y = 0; y < H; ++y)
        for (int64_t c = 0; c < count; ++c) bits(y, first + c) = 1.0;
}

inline void fill_column(RTensor& bits, int64_t col) {
    const int64_t H = bits.dim(0);
    for (int64_t y = 0; y < H; ++y) bits(y, col) = 1.0;
}

inline void fill_center_disc(RTensor& bits, double radius) {
    const int64_t H = bits.dim(0), W = bits.dim(1);
    const double cy = static_cast<double>(H) / 2, cx = static_cast<double>(W) / 2;
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x)
            if (std::hypot(static_cast<double>(y) - cy, static_cast<double>(x) - cx) <= radius)
                bits(y, x) = 1.0;
}

// Budgeted stride over the non-center columns: with k = W/R - n_c extra
// columns to place among the W - n_c outside the band, the stride is
// (W - n_c) / k = (W - n_c) R / (W - n_c R).  When the band alone meets or
// exceeds the budget no extra columns are added.
inline int64_t equispaced_step(int64_t W, int R, int64_t n_c) {
    const double budget = static_cast<double>(W) / R - static_cast<double>(n_c);
    if (budget < 0.5) return 0;  // no extra columns
    const double denom = static_cast<double>(W - n_c * R);
    int64_t step = std::lround(static_cast<double>(W - n_c) * R / std::max(1.0, denom));
    return std::max<int64_t>(1, step);
}

// Visit non-center columns in index order j = 0 .. W-n_c-1 and sample those
// with j mod step == phase.
template <class Keep>
inline void stride_columns(RTensor& bits, int64_t n_c, int64_t start, Keep&& keep) {
    const int64_t W = bits.dim(1);
    int64_t j = 0;
    for (int64_t col = 0; col < W; ++col) {
        if (col >= start && col < start + n_c) continue;
        if (keep(j)) fill_column(bits, col);
        ++j;
    }
}

inline void mark_spokes(RTensor& bits, int64_t n_spokes, double phase) {
    const int64_t H = bits.dim(0), W = bits.dim(1);
    const double cy = static_cast<double>(H) / 2, cx = static_cast<double>(W) / 2;
    const int64_t t_max = static_cast<int64_t>(std::ceil(std::hypot(H, W)));
    for (int64_t k = 0; k < n_spokes; ++k) {
        const double phi = phase + std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_spokes);
        const double dy = std::sin(phi), dx = std::cos(phi);
        for (int64_t t = -t_max; t <= t_max; ++t) {
            const int64_t y = std::lround(cy + t * dy), x = std::lround(cx + t * dx);
            if (y >= 0 && y < H && x >= 0 && x < W) bits(y, x) = 1.0;
        }
    }
}

inline double ones_fraction(const RTensor& bits) {
    double s = 0;
    for (double v : bits.data) s += v;
    return s / static_cast<double>(bits.numel());
}

// One full dart-throwing pass with the candidate order fixed: accept a
// candidate if no earlier acceptance lies within its local minimum distance
// d(p) = s * (1 + 3 rho/rho_max).  Returns the accepted-point mask.
inline RTensor poisson_throw(int64_t H, int64_t W, const std::vector<int64_t>& order, double s) {
    const double cy = static_cast<double>(H) / 2, cx = static_cast<double>(W) / 2;
    const double rho_max = std::hypot(cy, cx);
    const double d_max = 4.0 * s;
    const int64_t cell = std::max<int64_t>(1, static_cast<int64_t>(std::ceil(d_max)));
    const int64_t gh = (H + cell - 1) / cell, gw = (W + cell - 1) / cell;
    std::vector<std::vector<int32_t>> buckets(static_cast<size_t>(gh * gw));
    std::vector<int32_t> ys, xs;
    RTensor bits({H, W});
    for (int64_t idx : order) {
        const int64_t y = idx / W, x = idx % W;
        const double rho = std::hypot(static_cast<double>(y) - cy, static_cast<double>(x) - cx);
        const double d = s * (1.0 + 3.0 * rho / rho_max);
        const double d2 = d * d;
        const int64_t by = y / cell, bx = x / cell;
        const int64_t reach = static_cast<int64_t>(std::ceil(d / static_cast<double>(cell)));
        bool blocked = false;
        for (int64_t gy = std::max<int64_t>(0, by - reach); !blocked && gy <= std::min(gh - 1, by + reach); ++gy)
            for (int64_t gx = std::max<int64_t>(0, bx - reach); !blocked && gx <= std::min(gw - 1, bx + reach); ++gx)
                for (int32_t p : buckets[static_cast<size_t>(gy * gw + gx)]) {
                    const double ddy = static_cast<double>(ys[static_cast<size_t>(p)]) - static_cast<double>(y);
                    const double ddx = static_cast<double>(xs[static_cast<size_t>(p)]) - static_cast<double>(x);
                    if (ddy * ddy + ddx * ddx < d2) {
                        blocked = true;
                        break;
                    }
                }
        if (blocked) continue;
        buckets[static_cast<size_t>(by * gw + bx)].push_back(static_cast<int32_t>(ys.size()));
        ys.push_back(static_cast<int32_t>(y));
        xs.push_back(static_cast<int32_t>(x));
        bits(y, x) = 1.0;
    }
    return bits;
}

}  // namespace detail

inline Mask generate_mask(MaskPattern pattern, int R, double cf, int64_t H, int64_t W,
                          uint64_t seed) {
    if (R < 1) throw InvalidArgument("acceleration must be a positive integer");
    if (!(cf > 0.0 && cf < 1.0)) throw InvalidArgument("center fraction must lie in (0, 1)");
    if (H < 1 || W < 1) throw InvalidArgument("mask shape must be positive");
    if (cf * static_cast<double>(W) < 1.0) throw InvalidArgument("empty calibration region");

    Mask m;
    m.pattern = pattern;
    m.R = R;
    m.cf = cf;
    m.seed = seed;
    m.bits = RTensor({H, W});

    if (R == 1) {
        std::fill(m.bits.data.begin(), m.bits.data.end(), 1.0);
        return m;
    }

    const int64_t n_c = detail::center_cols(W, cf);
    const int64_t start = detail::center_start(W, n_c);
    const double target = 1.0 / static_cast<double>(R);
    const double disc_radius = cf * static_cast<double>(std::min(H, W)) / 2.0;

    switch (pattern) {
        case MaskPattern::equispaced: {
            detail::fill_columns(m.bits, start, n_c);
            if (const int64_t step = detail::equispaced_step(W, R, n_c)) {
                const int64_t phase = static_cast<int64_t>(seed % static_cast<uint64_t>(step));
                detail::stride_columns(m.bits, n_c, start,
                                       [&](int64_t j) { return j % step == phase; });
            }
            break;
        }
        case MaskPattern::magic: {
            // The offset variant of equispaced: same budgeted stride, phase
            // tied to the acceleration rate instead of raw seed.
            detail::fill_columns(m.bits, start, n_c);
            if (const int64_t step = detail::equispaced_step(W, R, n_c)) {
                const int64_t phase =
                    static_cast<int64_t>((seed % static_cast<uint64_t>(R)) % static_cast<uint64_t>(step));
                detail::stride_columns(m.bits, n_c, start,
                                       [&](int64_t j) { return j % step == phase; });
            }
            break;
        }
        case MaskPattern::random_cols: {
            // i.i.d. column draws; a draw whose achieved fraction falls
            // outside the +-20% gate is redrawn (the stream continues, so the
            // result is still a pure function of the seed).
            detail::fill_columns(m.bits, start, n_c);
            const double p = (static_cast<double>(W) * target - static_cast<double>(n_c)) /
                             static_cast<double>(W - n_c);
            Rng rng(seed, "mask/random");
            std::vector<char> keep(static_cast<size_t>(W - n_c));
            for (int attempt = 0;; ++attempt) {
                if (attempt == 1000)
                    throw NumericError("random mask calibration failed to reach the +-20% gate");
                int64_t k = 0;
                for (auto& b : keep) k += (b = rng.next_double() < p);
                const double f = static_cast<double>(n_c + k) / static_cast<double>(W);
                if (f >= 0.8 * target && f <= 1.2 * target) break;
            }
            detail::stride_columns(m.bits, n_c, start,
                                   [&](int64_t j) { return keep[static_cast<size_t>(j)] != 0; });
            break;
        }
        case MaskPattern::gaussian: {
            // Keep probability min(1, c*g) with g the centered Gaussian
            // density; c is bisected so the expected fraction (including the
            // always-on disc) equals 1/R.
            const double cy = static_cast<double>(H) / 2, cx = static_cast<double>(W) / 2;
            const double sigma = static_cast<double>(std::min(H, W)) / 4.0;
            std::vector<double> g(static_cast<size_t>(H * W));
            std::vector<uint8_t> in_disc(static_cast<size_t>(H * W));
            int64_t n_disc = 0;
            for (int64_t y = 0; y < H; ++y)
                for (int64_t x = 0; x < W; ++x) {
                    const double r2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                    const size_t i = static_cast<size_t>(y * W + x);
                    g[i] = std::exp(-r2 / (2.0 * sigma * sigma));
                    if (std::sqrt(r2) <= disc_radius) {
                        in_disc[i] = 1;
                        ++n_disc;
                    }
                }
            const double want = target * static_cast<double>(H * W);
            auto expected = [&](double c) {
                double e = static_cast<double>(n_disc);
                for (size_t i = 0; i < g.size(); ++i)
                    if (!in_disc[i]) e += std::min(1.0, c * g[i]);
                return e;
            };
            double lo = 0.0, hi = 1.0;
            while (expected(hi) < want && hi < 1e12) hi *= 2.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (expected(mid) < want ? lo : hi) = mid;
            }
            const double c = 0.5 * (lo + hi);
            Rng rng(seed, "mask/gaussian");
            for (size_t i = 0; i < g.size(); ++i) {
                const double u = rng.next_double();
                if (in_disc[i] || u < std::min(1.0, c * g[i]))
                    m.bits.data[i] = 1.0;
            }
            break;
        }
        case MaskPattern::radial: {
            Rng rng(seed, "mask/radial");
            const int64_t n0 = std::lround(std::numbers::pi * static_cast<double>(std::max(H, W)) /
                                           (2.0 * static_cast<double>(R)));
            const double phase = rng.next_double() * std::numbers::pi /
                                 static_cast<double>(std::max<int64_t>(1, n0));
            auto fraction_at = [&](int64_t n) {
                RTensor b({H, W});
                detail::mark_spokes(b, n, phase);
                detail::fill_center_disc(b, disc_radius);
                return std::pair(detail::ones_fraction(b), std::move(b));
            };
            auto [f0, b0] = fraction_at(std::max<int64_t>(1, n0));
            if (f0 >= 0.8 * target && f0 <= 1.2 * target) {
                m.bits = std::move(b0);
                break;
            }
            // The nominal spoke count lands outside the gate (digital spokes
            // overlap heavily near the center); bisect the count towards 1/R.
            int64_t lo = 1, hi = std::max<int64_t>(2, 4 * n0);
            while (fraction_at(hi).first < target && hi < 16 * std::max(H, W)) hi *= 2;
            RTensor best;
            double best_err = 1e300;
            while (lo <= hi) {
                const int64_t mid = lo + (hi - lo) / 2;
                auto [f, b] = fraction_at(mid);
                if (std::abs(f - target) < best_err) {
                    best_err = std::abs(f - target);
                    best = std::move(b);
                }
                if (f < target)
                    lo = mid + 1;
                else
                    hi = mid - 1;
            }
            m.bits = std::move(best);
            break;
        }
        case MaskPattern::poisson: {
            Rng rng(seed, "mask/poisson");
            std::vector<int64_t> order(static_cast<size_t>(H * W));
            for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);
            rng.shuffle(order);
            auto with_disc = [&](RTensor b) {
                detail::fill_center_disc(b, disc_radius);
                return b;
            };
            double lo = 0.0, hi = 1.0;
            while (detail::ones_fraction(with_disc(detail::poisson_throw(H, W, order, hi))) >
                       target &&
                   hi < 4.0 * static_cast<double>(std::max(H, W)))
                hi *= 2.0;
            RTensor chosen;
            bool landed = false;
            for (int it = 0; it < 80 && !landed; ++it) {
                const double s = 0.5 * (lo + hi);
                RTensor b = with_disc(detail::poisson_throw(H, W, order, s));
                const double f = detail::ones_fraction(b);
                if (std::abs(f - target) <= 0.1 * target) {
                    chosen = std::move(b);
                    landed = true;
                } else if (f > target) {
                    lo = s;
                } else {
                    hi = s;
                }
            }
            if (!landed)
                throw NumericError("poisson mask calibration failed to reach the +-10% gate");
            m.bits = std::move(chosen);
            break;
        }
    }
    return m;
}

inline MaskStats mask_stats(const Mask& m) {
    const int64_t H = m.bits.dim(0), W = m.bits.dim(1);
    MaskStats st;
    st.achieved_fraction = detail::ones_fraction(m.bits);
    auto column_full = [&](int64_t c) {
        for (int64_t y = 0; y < H; ++y)
            if (m.bits(y, c) == 0.0) return false;
        return true;
    };
    int64_t lo = W / 2, hi = W / 2;
    if (W > 0 && column_full(W / 2)) {
        while (lo > 0 && column_full(lo - 1)) --lo;
        while (hi + 1 < W && column_full(hi + 1)) ++hi;
        st.center_width = hi - lo + 1;
    }
    return st;
}

}  // namespace varno
