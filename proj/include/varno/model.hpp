#pragma once
// The unrolled reconstruction model: a k-space refinement network applied per
// coil, a learned sensitivity estimator seeded from the fully-sampled
// calibration region, and a cascade of data-consistency steps each followed by
// an image-space refinement network,
//
//   x^{t+1} = x^t - eta^t A*(A x^t - k~) + lambda * NO_i^t(x^t),
//
// with learnable per-cascade step sizes eta^t (initialized to 1), a fixed
// image-term weight lambda, per-cascade image networks, and shared-across-coil
// k-space/sensitivity networks.  All three networks act residually (k~ + NO_k,
// S0 + NO_s, x + lambda NO_i), so zero-initialized output layers start the
// model at the plain data-consistency cascade.  The initial iterate is the RSS
// combination of the refined k-space, and the output is the magnitude of the
// final iterate.
//
// `bypass_no` turns off all three networks (refinements become identities),
// which reduces the model to plain data-consistency iterations from the
// zero-filled image — the degenerate baseline used in tests.

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "varno/autodiff.hpp"
#include "varno/kspace.hpp"
#include "varno/masks.hpp"
#include "varno/udno.hpp"

namespace varno {

struct ModelConfig {
    int cascades = 2;
    double lambda = 1.0;   // fixed weight of the image-network term
    UdnoConfig k_net;      // k-space refinement, per coil on (re, im) channels
    UdnoConfig i_net;      // image refinement, per cascade
    UdnoConfig s_net;      // sensitivity refinement, per coil
    bool bypass_no = false;

    void validate() const {
        if (cascades < 1) throw InvalidArgument("model: cascade count must be >= 1");
        for (const UdnoConfig* c : {&k_net, &i_net, &s_net}) {
            c->validate();
            if (c->in_channels != 2 || c->out_channels != 2)
                throw InvalidArgument("model: component networks use 2 in/out channels");
        }
    }

    static ModelConfig desk_default() {
        ModelConfig cfg;
        cfg.cascades = 2;
        for (UdnoConfig* c : {&cfg.k_net, &cfg.i_net, &cfg.s_net}) {
            c->in_channels = 2;
            c->out_channels = 2;
            c->hidden_channels = 8;
            c->depth = 1;
            c->basis.radius = 0.1;
            c->basis.n_rings = 2;
            c->basis.n_per_ring = 5;
        }
        return cfg;
    }
};

namespace detail {

constexpr double kSensEps = 1e-12;  // RSS floor in sensitivity normalization
constexpr double kMagEps = 1e-24;   // magnitude floor for outputs

}  // namespace detail

// Indicator of the fully-sampled calibration region at the center of the
// mask: the contiguous band of fully-sampled columns when one exists
// (rectilinear patterns), otherwise the largest fully-sampled centered disc
// (point patterns force one by construction).
inline RTensor acs_indicator(const Mask& m) {
    const int64_t H = m.bits.dim(0), W = m.bits.dim(1);
    RTensor ind({H, W});
    auto column_full = [&](int64_t c) {
        for (int64_t y = 0; y < H; ++y)
            if (m.bits(y, c) == 0.0) return false;
        return true;
    };
    if (column_full(W / 2)) {
        int64_t lo = W / 2, hi = W / 2;
        while (lo > 0 && column_full(lo - 1)) --lo;
        while (hi + 1 < W && column_full(hi + 1)) ++hi;
        for (int64_t y = 0; y < H; ++y)
            for (int64_t c = lo; c <= hi; ++c) ind(y, c) = 1.0;
        return ind;
    }
    const double cy = static_cast<double>(H) / 2.0, cx = static_cast<double>(W) / 2.0;
    double radius = -1.0;
    for (int64_t rho = 0; rho <= std::min(H, W) / 2; ++rho) {
        bool full = true;
        for (int64_t y = 0; y < H && full; ++y)
            for (int64_t x = 0; x < W && full; ++x)
                if (std::hypot(static_cast<double>(y) - cy, static_cast<double>(x) - cx) <=
                        static_cast<double>(rho) &&
                    m.bits(y, x) == 0.0)
                    full = false;
        if (!full) break;
        radius = static_cast<double>(rho);
    }
    if (radius < 0)
        throw InvalidArgument(
            "sensitivity estimation requires a fully-sampled calibration region");
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x)
            if (std::hypot(static_cast<double>(y) - cy, static_cast<double>(x) - cx) <= radius)
                ind(y, x) = 1.0;
    return ind;
}

namespace detail {

// Apply a 2-in/2-out network to each coil of a complex stack, shared weights.
inline Tape::Id per_coil_network(Tape& t, const UdnoConfig& cfg, const TapeParams& p,
                                 const std::string& prefix, Tape::Id stack) {
    const int64_t C = t.cval(stack).dim(0);
    Tape::Id out = -1;
    for (int64_t c = 0; c < C; ++c) {
        Tape::Id one =
            t.ch2c(udno_forward(t, cfg, p, prefix, t.c2ch(t.slice0(stack, c))));
        out = c == 0 ? one : t.cat0(out, one);
    }
    return out;
}

}  // namespace detail

// Sensitivity maps from the calibration region: per-coil inverse transform of
// the center-cropped k-space, RSS-normalized, refined residually by the
// sensitivity network, then re-normalized to unit pixelwise RSS.
inline Tape::Id estimate_sensitivities(Tape& t, const ModelConfig& cfg, const TapeParams& p,
                                       Tape::Id kspace, const Mask& mask) {
    Tape::Id m0 = t.ifft2(t.rmul_const(kspace, acs_indicator(mask)));
    Tape::Id maps = t.bdiv(m0, t.sqrtr(t.sum0(t.abs2(m0)), detail::kSensEps));
    if (!cfg.bypass_no)
        maps = t.add(maps, detail::per_coil_network(t, cfg.s_net, p, "s", maps));
    return t.bdiv(maps, t.sqrtr(t.sum0(t.abs2(maps)), detail::kSensEps));
}

// Full forward pass on the tape; returns the real (H,W) magnitude image node.
inline Tape::Id model_forward(Tape& t, const ModelConfig& cfg, const TapeParams& p,
                              const CoilKSpace& measured, const Mask& mask) {
    cfg.validate();
    detail::check_coil_stack(measured.data, "model: measured k-space");
    detail::check_mask_geometry(measured.data, mask.bits, "model");

    Tape::Id k = t.leaf(measured.data, false);
    Tape::Id S = estimate_sensitivities(t, cfg, p, k, mask);
    Tape::Id k_ref =
        cfg.bypass_no ? k : t.add(k, detail::per_coil_network(t, cfg.k_net, p, "k", k));
    Tape::Id x = t.r2c(t.sqrtr(t.sum0(t.abs2(t.ifft2(k_ref))), detail::kMagEps));

    for (int step = 0; step < cfg.cascades; ++step) {
        Tape::Id Ax = t.rmul_const(t.fft2(t.mul_b0(S, x)), mask.bits);
        Tape::Id adj = t.sum0(t.mul(t.conj(S), t.ifft2(t.sub(Ax, k))));
        Tape::Id x_dc = t.sub(x, t.cscale(adj, p.at("eta" + std::to_string(step))));
        if (cfg.bypass_no) {
            x = x_dc;
            continue;
        }
        Tape::Id refined = t.sq0(t.ch2c(
            udno_forward(t, cfg.i_net, p, "i" + std::to_string(step), t.c2ch(t.unsq0(x)))));
        x = t.add(x_dc, t.scale_const(refined, cfg.lambda));
    }
    return t.sqrtr(t.abs2(x), detail::kMagEps);
}

// Fresh parameters for every component network plus the per-cascade step
// sizes, all drawn from one deterministic stream.
inline TensorMap init_model_params(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(seed, "model/init");
    TensorMap params;
    init_udno_params(cfg.s_net, "s", rng, params);
    init_udno_params(cfg.k_net, "k", rng, params);
    for (int step = 0; step < cfg.cascades; ++step) {
        init_udno_params(cfg.i_net, "i" + std::to_string(step), rng, params);
        RTensor eta({1});
        eta.data[0] = 1.0;
        params["eta" + std::to_string(step)] = eta;
    }
    return params;
}

// Eager single-slice reconstruction.
inline RTensor reconstruct(const ModelConfig& cfg, const TensorMap& params,
                           const CoilKSpace& measured, const Mask& mask) {
    Tape t;
    TapeParams p(t, params, false);
    return t.rval(model_forward(t, cfg, p, measured, mask));
}

// ---- config manifest ---------------------------------------------------------
//
// `key=value` lines describing the architecture, written alongside every
// checkpoint so a saved model can be reloaded without out-of-band knowledge.

namespace detail {

inline void put_net(std::ostringstream& os, const std::string& name, const UdnoConfig& c) {
    os << name << ".hidden=" << c.hidden_channels << "\n";
    os << name << ".depth=" << c.depth << "\n";
    os << name << ".mode=" << (c.mode == KernelMode::disco ? "disco" : "fixed") << "\n";
    os << name << ".tap_size=" << c.tap_size << "\n";
    os << name << ".basis.family=" << to_string(c.basis.family) << "\n";
    os << name << ".basis.radius=" << format_double(c.basis.radius) << "\n";
    os << name << ".basis.n_rings=" << c.basis.n_rings << "\n";
    os << name << ".basis.n_per_ring=" << c.basis.n_per_ring << "\n";
    os << name << ".basis.n_zernike=" << c.basis.n_zernike << "\n";
}

}  // namespace detail

inline std::string serialize_model_config(const ModelConfig& cfg) {
    std::ostringstream os;
    os << "cascades=" << cfg.cascades << "\n";
    os << "lambda=" << format_double(cfg.lambda) << "\n";
    detail::put_net(os, "k_net", cfg.k_net);
    detail::put_net(os, "i_net", cfg.i_net);
    detail::put_net(os, "s_net", cfg.s_net);
    return os.str();
}

inline ModelConfig parse_model_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("model config: malformed line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw InvalidArgument("model config: missing key: " + key);
        return it->second;
    };
    ModelConfig cfg;
    cfg.cascades = std::stoi(get("cascades"));
    cfg.lambda = std::stod(get("lambda"));
    auto read_net = [&](const std::string& name, UdnoConfig& c) {
        c.in_channels = 2;
        c.out_channels = 2;
        c.hidden_channels = std::stoi(get(name + ".hidden"));
        c.depth = std::stoi(get(name + ".depth"));
        c.mode = get(name + ".mode") == "disco" ? KernelMode::disco : KernelMode::fixed_taps;
        c.tap_size = std::stoi(get(name + ".tap_size"));
        c.basis.family = basis_family_from_string(get(name + ".basis.family"));
        c.basis.radius = std::stod(get(name + ".basis.radius"));
        c.basis.n_rings = std::stoi(get(name + ".basis.n_rings"));
        c.basis.n_per_ring = std::stoi(get(name + ".basis.n_per_ring"));
        c.basis.n_zernike = std::stoi(get(name + ".basis.n_zernike"));
    };
    read_net("k_net", cfg.k_net);
    read_net("i_net", cfg.i_net);
    read_net("s_net", cfg.s_net);
    cfg.validate();
    return cfg;
}

}  // namespace varno
