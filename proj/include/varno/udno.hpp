#pragma once
// U-shaped encoder/decoder built from quadrature-synthesized convolutions.
//
// Encoder: `depth` levels of two [conv -> instance-norm -> leaky-rectifier]
// blocks followed by 2x average downsampling, doubling feature channels each
// level.  Decoder: 2x bilinear upsampling, concatenation with the skip of the
// same level, then one conv block, halving features.  A final 1x1 pointwise
// map projects to the requested output channels.  No layer carries a bias, so
// all-zero parameters give an all-zero output.
//
// Kernels are synthesized per level for that level's grid, keeping the
// physical support radius constant while the pixel footprint scales with
// resolution.  A fixed-tap mode replaces synthesis with directly learned
// pixel-footprint taps (the resolution-pinned CNN variant used for
// comparisons).

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "varno/autodiff.hpp"
#include "varno/disco.hpp"
#include "varno/rng.hpp"
#include "varno/tensor_io.hpp"

namespace varno {

enum class KernelMode { disco, fixed_taps };

struct UdnoConfig {
    int in_channels = 2;
    int out_channels = 2;
    int hidden_channels = 8;
    int depth = 1;
    BasisSpec basis;                       // physical kernel support (disco mode)
    KernelMode mode = KernelMode::disco;
    int tap_size = 3;                      // fixed-taps mode footprint (odd)

    void validate() const {
        if (in_channels < 1 || out_channels < 1 || hidden_channels < 1)
            throw InvalidArgument("udno: channel counts must be positive");
        if (depth < 1) throw InvalidArgument("udno: depth must be >= 1");
        if (mode == KernelMode::disco)
            basis.validate();
        else if (tap_size < 1 || tap_size % 2 == 0)
            throw InvalidArgument("udno: tap size must be odd and positive");
    }

    int level_channels(int l) const { return hidden_channels << l; }
    int decoder_out(int l) const {
        return l == 0 ? hidden_channels : hidden_channels << (l - 1);
    }
};

// View of a parameter map as leaves on one tape.
class TapeParams {
  public:
    TapeParams(Tape& t, const TensorMap& values, bool requires_grad) {
        for (const auto& [name, v] : values) {
            if (!std::holds_alternative<RTensor>(v))
                throw InvalidArgument("parameters must be real tensors: " + name);
            ids_.emplace(name, t.leaf(std::get<RTensor>(v), requires_grad));
        }
    }

    Tape::Id at(const std::string& name) const {
        auto it = ids_.find(name);
        if (it == ids_.end()) throw InvalidArgument("missing parameter: " + name);
        return it->second;
    }

    // Point a name at an existing node (used to splice externally built
    // leaves, e.g. for finite-difference probes of a subset of parameters).
    void set(const std::string& name, Tape::Id id) { ids_[name] = id; }

    const std::map<std::string, Tape::Id>& ids() const { return ids_; }

  private:
    std::map<std::string, Tape::Id> ids_;
};

namespace detail {

// He-style scale over the coefficient fan-in; the instance norm after every
// conv makes the network insensitive to the exact constant.
inline RTensor he_coeffs(std::vector<int64_t> shape, int64_t fan_in, Rng& rng) {
    RTensor t(std::move(shape));
    const double s = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : t.data) v = s * rng.next_gaussian();
    return t;
}

struct UdnoLayerShapes {
    std::vector<std::pair<std::string, std::pair<int, int>>> convs;  // name -> (out, in)
    int final_in = 0;
};

inline UdnoLayerShapes udno_layer_shapes(const UdnoConfig& cfg, const std::string& prefix) {
    UdnoLayerShapes s;
    for (int l = 0; l < cfg.depth; ++l) {
        const int ch = cfg.level_channels(l);
        const int in0 = l == 0 ? cfg.in_channels : cfg.level_channels(l - 1);
        s.convs.push_back({prefix + "/enc" + std::to_string(l) + "/c0", {ch, in0}});
        s.convs.push_back({prefix + "/enc" + std::to_string(l) + "/c1", {ch, ch}});
    }
    for (int l = cfg.depth - 1; l >= 0; --l) {
        const int from_below =
            l == cfg.depth - 1 ? cfg.level_channels(cfg.depth - 1) : cfg.decoder_out(l + 1);
        const int in = from_below + cfg.level_channels(l);
        s.convs.push_back({prefix + "/dec" + std::to_string(l) + "/c", {cfg.decoder_out(l), in}});
    }
    s.final_in = cfg.decoder_out(0);
    return s;
}

}  // namespace detail

// Registers freshly initialized parameters for one network under `prefix`.
// Hidden convs draw He-scaled coefficients; the final pointwise map starts at
// zero so an untrained network is the zero operator.
inline void init_udno_params(const UdnoConfig& cfg, const std::string& prefix, Rng& rng,
                             TensorMap& out) {
    cfg.validate();
    const auto shapes = detail::udno_layer_shapes(cfg, prefix);
    for (const auto& [name, oi] : shapes.convs) {
        if (cfg.mode == KernelMode::disco) {
            const int64_t L = cfg.basis.count();
            out[name] = detail::he_coeffs({oi.first, oi.second, L}, int64_t{oi.second} * L, rng);
        } else {
            const int64_t S = cfg.tap_size;
            out[name] =
                detail::he_coeffs({oi.first, oi.second, S, S}, int64_t{oi.second} * S * S, rng);
        }
    }
    out[prefix + "/final"] = RTensor({cfg.out_channels, shapes.final_in, 1, 1});
}

// Forward pass on the tape.  x is a real (in_channels, H, W) node; H and W
// must be divisible by 2^depth.
inline Tape::Id udno_forward(Tape& t, const UdnoConfig& cfg, const TapeParams& p,
                             const std::string& prefix, Tape::Id x) {
    cfg.validate();
    const RTensor& xv = t.rval(x);
    if (xv.rank() != 3 || xv.dim(0) != cfg.in_channels)
        throw InvalidArgument("udno: input must be (" + std::to_string(cfg.in_channels) +
                              ",H,W)");
    const int64_t H = xv.dim(1), W = xv.dim(2);
    for (int l = 1; l <= cfg.depth; ++l)
        if ((H >> (l - 1)) % 2 != 0 || (W >> (l - 1)) % 2 != 0)
            throw InvalidArgument("udno: spatial shape " + std::to_string(H) + "x" +
                                  std::to_string(W) + " is not divisible by 2 at level " +
                                  std::to_string(l));

    std::vector<BasisTable> tables;
    if (cfg.mode == KernelMode::disco)
        for (int l = 0; l < cfg.depth; ++l)
            tables.push_back(
                tabulate_basis(cfg.basis, GridSpec({-1, -1}, {1, 1}, {H >> l, W >> l})));

    auto block = [&](const std::string& name, int level, Tape::Id in) {
        Tape::Id taps = cfg.mode == KernelMode::disco
                            ? t.synth(p.at(name), tables[static_cast<size_t>(level)])
                            : p.at(name);
        return t.leaky(t.instance_norm(t.conv2(taps, in)), 0.2);
    };

    std::vector<Tape::Id> skips;
    Tape::Id cur = x;
    for (int l = 0; l < cfg.depth; ++l) {
        cur = block(prefix + "/enc" + std::to_string(l) + "/c0", l, cur);
        cur = block(prefix + "/enc" + std::to_string(l) + "/c1", l, cur);
        skips.push_back(cur);
        cur = t.avgpool2(cur);
    }
    for (int l = cfg.depth - 1; l >= 0; --l) {
        cur = t.cat0(t.upsample_bilinear(cur, 2), skips[static_cast<size_t>(l)]);
        cur = block(prefix + "/dec" + std::to_string(l) + "/c", l, cur);
    }
    return t.conv2(p.at(prefix + "/final"), cur);
}

// Eager convenience wrapper for inference-style evaluation.
inline RTensor udno_eval(const UdnoConfig& cfg, const TensorMap& params,
                         const std::string& prefix, const RTensor& x) {
    Tape t;
    TapeParams p(t, params, false);
    return t.rval(udno_forward(t, cfg, p, prefix, t.leaf(x, false)));
}

}  // namespace varno
