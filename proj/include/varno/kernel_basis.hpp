#pragma once
// Fixed function-space bases for learned convolution kernels.  Every family is
// compactly supported on the disc |offset| <= radius; a kernel is a learned
// linear combination of the members.
//
//  - piecewise_linear: one isotropic radial hat at the origin plus n_rings
//    rings of n_per_ring (radial hat x periodic angular hat) members; the hats
//    form a partition of unity out to the last ring node.
//  - zernike: real-valued Zernike functions on the unit disc (offset scaled by
//    1/radius), ordered by degree n ascending then angular index l ascending;
//    l >= 0 pairs with cos(l phi), l < 0 with sin(|l| phi).
//  - morlet: Gaussian envelope (sigma = radius/2) times cosine carriers whose
//    wave-vectors sit on the same ring/sector lattice as the piecewise-linear
//    nodes (the isotropic member carries k = 0).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "varno/errors.hpp"

namespace varno {

enum class BasisFamily { piecewise_linear, zernike, morlet };

inline const char* to_string(BasisFamily f) {
    switch (f) {
        case BasisFamily::piecewise_linear: return "piecewise_linear";
        case BasisFamily::zernike: return "zernike";
        case BasisFamily::morlet: return "morlet";
    }
    return "?";
}
inline BasisFamily basis_family_from_string(const std::string& s) {
    if (s == "piecewise_linear") return BasisFamily::piecewise_linear;
    if (s == "zernike") return BasisFamily::zernike;
    if (s == "morlet") return BasisFamily::morlet;
    throw InvalidArgument("unknown basis family: " + s);
}

struct BasisSpec {
    BasisFamily family = BasisFamily::piecewise_linear;
    double radius = 0.1;  // physical support cutoff r
    int n_rings = 5;      // ring/sector lattice (piecewise_linear, morlet)
    int n_per_ring = 7;
    int n_zernike = 36;   // member count for the zernike family

    int count() const {
        switch (family) {
            case BasisFamily::zernike: return n_zernike;
            default: return 1 + n_rings * n_per_ring;
        }
    }
    void validate() const {
        if (radius <= 0) throw InvalidArgument("basis: radius must be positive");
        if (family == BasisFamily::zernike) {
            if (n_zernike < 1) throw InvalidArgument("basis: zernike count must be >= 1");
        } else if (n_rings < 1 || n_per_ring < 1) {
            throw InvalidArgument("basis: ring lattice must be non-empty");
        }
    }
};

namespace detail {

// Wrap an angle difference into [-pi, pi].
inline double wrap_angle(double a) {
    const double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a > std::numbers::pi) a -= two_pi;
    if (a < -std::numbers::pi) a += two_pi;
    return a;
}

inline double radial_hat(double rho, double node, double spacing) {
    double v = 1.0 - std::abs(rho - node) / spacing;
    return v > 0 ? v : 0.0;
}

inline double angular_hat(double phi, double node, double spacing) {
    double v = 1.0 - std::abs(wrap_angle(phi - node)) / spacing;
    return v > 0 ? v : 0.0;
}

// Radial Zernike polynomial R_n^m (m >= 0, n >= m, n - m even).
inline double zernike_radial(int n, int m, double rho) {
    double sum = 0;
    auto fact = [](int k) {
        double f = 1;
        for (int i = 2; i <= k; ++i) f *= i;
        return f;
    };
    for (int k = 0; k <= (n - m) / 2; ++k) {
        double c = fact(n - k) / (fact(k) * fact((n + m) / 2 - k) * fact((n - m) / 2 - k));
        if (k & 1) c = -c;
        sum += c * std::pow(rho, n - 2 * k);
    }
    return sum;
}

// Enumerate zernike (n, l) pairs: n ascending, l ascending within n.
inline void zernike_index(int idx, int& n, int& l) {
    int n_ = 0;
    while (idx >= n_ + 1) {
        idx -= n_ + 1;
        ++n_;
    }
    n = n_;
    l = -n_ + 2 * idx;
}

}  // namespace detail

// Evaluate all members of the family at physical offset (ox, oy); `out` must
// hold spec.count() doubles.  Members vanish outside |offset| <= radius.
inline void eval_basis(const BasisSpec& spec, double ox, double oy, double* out) {
    spec.validate();
    const int L = spec.count();
    const double rho = std::hypot(ox, oy);
    if (rho > spec.radius * (1.0 + 1e-12)) {
        for (int i = 0; i < L; ++i) out[i] = 0.0;
        return;
    }
    const double phi = std::atan2(oy, ox);

    switch (spec.family) {
        case BasisFamily::piecewise_linear: {
            const double d_rho = spec.radius / static_cast<double>(spec.n_rings + 1);
            const double d_phi = 2.0 * std::numbers::pi / static_cast<double>(spec.n_per_ring);
            out[0] = detail::radial_hat(rho, 0.0, d_rho);
            int idx = 1;
            for (int j = 1; j <= spec.n_rings; ++j) {
                double rad = detail::radial_hat(rho, j * d_rho, d_rho);
                for (int m = 0; m < spec.n_per_ring; ++m)
                    out[idx++] = rad == 0.0 ? 0.0 : rad * detail::angular_hat(phi, m * d_phi, d_phi);
            }
            break;
        }
        case BasisFamily::zernike: {
            const double rn = rho / spec.radius;
            for (int i = 0; i < L; ++i) {
                int n, l;
                detail::zernike_index(i, n, l);
                double radial = detail::zernike_radial(n, std::abs(l), rn);
                out[i] = l >= 0 ? radial * std::cos(l * phi)
                                : radial * std::sin(-l * phi);
            }
            break;
        }
        case BasisFamily::morlet: {
            const double sigma = spec.radius / 2.0;
            const double env = std::exp(-(ox * ox + oy * oy) / (2.0 * sigma * sigma));
            const double d_rho = spec.radius / static_cast<double>(spec.n_rings + 1);
            const double d_phi = 2.0 * std::numbers::pi / static_cast<double>(spec.n_per_ring);
            out[0] = env;  // k = 0
            int idx = 1;
            for (int j = 1; j <= spec.n_rings; ++j) {
                for (int m = 0; m < spec.n_per_ring; ++m) {
                    double kx = j * d_rho * std::cos(m * d_phi);
                    double ky = j * d_rho * std::sin(m * d_phi);
                    out[idx++] = env * std::cos(kx * ox + ky * oy);
                }
            }
            break;
        }
    }
}

}  // namespace varno
