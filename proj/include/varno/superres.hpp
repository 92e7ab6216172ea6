#pragma once
// Zero-shot resolution-transfer evaluation: image-space super-resolution
// (reconstruct at a denser grid than the model was trained on) and extended
// field of view in k-space (train on center-cropped spectra, evaluate on full
// ones).  Both harnesses compare the quadrature-synthesized model, whose
// kernels re-synthesize for the evaluation grid, against the fixed-tap CNN
// variant evaluated as-is and with bilinearly rescaled taps.  Evaluation never
// touches the parameters; every report carries a checksum attesting to that.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "varno/metrics.hpp"
#include "varno/model.hpp"
#include "varno/phantom.hpp"
#include "varno/resample.hpp"

namespace varno {

struct TrainedModel {
    ModelConfig cfg;
    TensorMap params;
};

// Measurement protocol applied identically to every slice of an evaluation.
// Per-slice streams are derived by offsetting the seeds with the slice index.
struct TransferSpec {
    MaskPattern pattern = MaskPattern::equispaced;
    int R = 4;
    double cf = 0.08;
    uint64_t mask_seed = 0;
    double noise_sigma = 0;
    uint64_t noise_seed = 0;
};

struct TransferMethodResult {
    std::string method;          // "disco" | "cnn_fixed" | "cnn_rescaled"
    Metrics train_res;           // mean metrics at the training grid
    Metrics transfer_res;        // mean metrics at the transfer grid
    Metrics transfer_annulus;    // extended-FOV only: metrics restricted to the
                                 // never-trained-on high-frequency band (NaN
                                 // when not applicable / annulus is empty)
    int64_t footprint_train = 0;     // image-net kernel footprint in pixels
    int64_t footprint_transfer = 0;  // (top level of the U-shaped network)
};

struct TransferReport {
    std::vector<TransferMethodResult> methods;
    int64_t train_resolution = 0;
    int64_t transfer_resolution = 0;
    bool params_unchanged = false;
};

// ---- grid-change primitives ---------------------------------------------------

// Center-embed a coil k-space stack into a `scale`x larger grid.  The values
// are multiplied by `scale` so that, for band-limited content, the inverse
// transform of the embedded spectrum interpolates the original image
// pointwise (unitary transforms spread energy over scale^2 more samples).
inline CTensor lift_kspace(const CTensor& k, int64_t scale) {
    detail::check_coil_stack(k, "lift_kspace: k-space");
    if (scale < 1) throw InvalidArgument("lift_kspace: scale must be >= 1");
    const int64_t C = k.dim(0), H = k.dim(1), W = k.dim(2);
    const int64_t Ho = H * scale, Wo = W * scale;
    if ((Ho - H) % 2 != 0 || (Wo - W) % 2 != 0)
        throw InvalidArgument("lift_kspace: grids must share a center");
    CTensor out({C, Ho, Wo});
    const int64_t oy = (Ho - H) / 2, ox = (Wo - W) / 2;
    const double f = static_cast<double>(scale);
    for (int64_t c = 0; c < C; ++c)
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x = 0; x < W; ++x) out(c, oy + y, ox + x) = f * k(c, y, x);
    return out;
}

// Center-crop a coil k-space stack to a smaller grid, the inverse convention
// of lift_kspace (values multiplied by crop/N): the result is the spectrum of
// the same field of view sampled at reduced resolution.
inline CTensor crop_kspace(const CTensor& k, int64_t crop) {
    detail::check_coil_stack(k, "crop_kspace: k-space");
    const int64_t C = k.dim(0), H = k.dim(1), W = k.dim(2);
    if (crop < 1 || crop > H || crop > W)
        throw InvalidArgument("crop_kspace: crop must lie in [1, min(H, W)]");
    if ((H - crop) % 2 != 0 || (W - crop) % 2 != 0)
        throw InvalidArgument("crop_kspace: grids must share a center");
    CTensor out({C, crop, crop});
    const int64_t oy = (H - crop) / 2, ox = (W - crop) / 2;
    const double f = static_cast<double>(crop) / static_cast<double>(H);
    for (int64_t c = 0; c < C; ++c)
        for (int64_t y = 0; y < crop; ++y)
            for (int64_t x = 0; x < crop; ++x) out(c, y, x) = f * k(c, oy + y, ox + x);
    return out;
}

// Mask bits lifted onto a `scale`x larger grid: the original pattern occupies
// the center block, everything outside is unsampled.
inline RTensor embed_mask_bits(const RTensor& bits, int64_t scale) {
    if (bits.rank() != 2) throw InvalidArgument("embed_mask_bits: want (H,W) bits");
    const int64_t H = bits.dim(0), W = bits.dim(1);
    RTensor out({H * scale, W * scale});
    const int64_t oy = (H * scale - H) / 2, ox = (W * scale - W) / 2;
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x) out(oy + y, ox + x) = bits(y, x);
    return out;
}

// The component of a real image supported outside the centered `block`x`block`
// frequency band: transform, zero the center block, transform back (real
// part).  This isolates exactly the frequencies a crop-trained model never
// observed.
inline RTensor highpass_residual(const RTensor& image, int64_t block) {
    if (image.rank() != 2) throw InvalidArgument("highpass_residual: want (H,W) image");
    const int64_t H = image.dim(0), W = image.dim(1);
    if (block < 0 || block > H || block > W)
        throw InvalidArgument("highpass_residual: block must lie in [0, min(H, W)]");
    CTensor z({H, W});
    for (size_t i = 0; i < z.data.size(); ++i) z.data[i] = cd(image.data[i], 0);
    CTensor spec = fft2c(z);
    const int64_t oy = (H - block) / 2, ox = (W - block) / 2;
    for (int64_t y = 0; y < block; ++y)
        for (int64_t x = 0; x < block; ++x) spec(oy + y, ox + x) = cd(0, 0);
    CTensor back = ifft2c(spec);
    RTensor out({H, W});
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = back.data[i].real();
    return out;
}

// Pixel footprint (2w+1) of a synthesized kernel on a square grid of the given
// resolution over the canonical [-1,1]^2 domain.
inline int64_t disco_footprint(const BasisSpec& basis, int64_t resolution) {
    BasisTable table =
        tabulate_basis(basis, GridSpec({-1, -1}, {1, 1}, {resolution, resolution}));
    return 2 * table.half_width + 1;
}

// Order- and content-sensitive digest of a parameter map (FNV-1a over names
// and raw tensor bytes); used to attest that evaluation never fine-tunes.
inline uint64_t params_checksum(const TensorMap& m) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, size_t nbytes) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < nbytes; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& [name, v] : m) {
        mix(name.data(), name.size());
        std::visit([&](const auto& t) { mix(t.ptr(), t.data.size() * sizeof(t.data[0])); }, v);
    }
    return h;
}

// Bilinearly rescale the taps of a fixed-kernel model so their physical
// support matches a `scale`x denser grid.  With `image_nets_only`, only the
// per-cascade image networks are rescaled (the k-space and sensitivity
// networks keep operating on the measurement grid, which does not change in
// the super-resolution protocol).
inline TrainedModel rescale_fixed_kernels(const TrainedModel& m, double scale,
                                          bool image_nets_only = false) {
    if (!(scale > 0)) throw InvalidArgument("rescale_fixed_kernels: scale must be > 0");
    TrainedModel out = m;
    auto do_prefix = [&](const UdnoConfig& cfg, const std::string& prefix, int new_S) {
        for (const auto& [name, oi] : detail::udno_layer_shapes(cfg, prefix).convs) {
            (void)oi;
            out.params[name] =
                rescale_kernel_bilinear(std::get<RTensor>(out.params.at(name)), new_S);
        }
    };
    auto do_net = [&](UdnoConfig& cfg, const std::vector<std::string>& prefixes) {
        if (cfg.mode != KernelMode::fixed_taps) return;
        const int new_S = rescaled_odd_size(cfg.tap_size, scale);
        for (const auto& prefix : prefixes) do_prefix(cfg, prefix, new_S);
        cfg.tap_size = new_S;
    };
    std::vector<std::string> image_prefixes;
    for (int step = 0; step < out.cfg.cascades; ++step)
        image_prefixes.push_back("i" + std::to_string(step));
    do_net(out.cfg.i_net, image_prefixes);
    if (!image_nets_only) {
        do_net(out.cfg.s_net, {"s"});
        do_net(out.cfg.k_net, {"k"});
    }
    return out;
}

// ---- evaluation plumbing ------------------------------------------------------

using ReconFn = std::function<RTensor(const CoilKSpace&, const Mask&)>;

namespace detail {

struct SliceMeasurement {
    Mask mask;
    CoilKSpace meas;
};

inline SliceMeasurement measure_slice(const PhantomSlice& s, const TransferSpec& ts,
                                      size_t index) {
    SliceMeasurement sm;
    sm.mask = generate_mask(ts.pattern, ts.R, ts.cf, s.image.dim(0), s.image.dim(1),
                            ts.mask_seed + index);
    sm.meas = simulate_measurement(s.kspace, sm.mask, ts.noise_sigma, ts.noise_seed + index);
    return sm;
}

inline double image_max(const RTensor& x) {
    double m = 0;
    for (double v : x.data) m = std::max(m, v);
    return m;
}

inline Metrics mean_metrics(const std::vector<Metrics>& v) {
    Metrics out;
    for (const Metrics& m : v) {
        out.nmse += m.nmse;
        out.psnr_db += m.psnr_db;
        out.ssim += m.ssim;
    }
    const double n = static_cast<double>(v.size());
    out.nmse /= n;
    out.psnr_db /= n;
    out.ssim /= n;
    return out;
}

inline Metrics nan_metrics() {
    const double q = std::numeric_limits<double>::quiet_NaN();
    return Metrics{q, q, q};
}

}  // namespace detail

// Mean metrics of an arbitrary reconstruction over a dataset measured with the
// given protocol, against each slice's own ground truth (data range = per-
// slice target maximum).  This is the single evaluation path every harness
// and the metric tables build on.
inline Metrics evaluate_recon(const ReconFn& recon, const PhantomDataset& data,
                              const TransferSpec& ts) {
    if (data.slices.empty()) throw InvalidArgument("evaluate_recon: dataset is empty");
    std::vector<Metrics> per;
    for (size_t i = 0; i < data.slices.size(); ++i) {
        const PhantomSlice& s = data.slices[i];
        auto sm = detail::measure_slice(s, ts, i);
        per.push_back(evaluate_metrics(recon(sm.meas, sm.mask), s.image,
                                       detail::image_max(s.image)));
    }
    return detail::mean_metrics(per);
}

// Reconstruction on a `scale`x denser image grid than the measurement,
// without retraining.  The k-space refinement and sensitivity estimation run
// unchanged on the measurement grid; the initial iterate and the maps are
// bilinearly upsampled; the consistency steps use the measurement embedded in
// the fine frequency grid (unsampled outside the measured band); the image
// networks run on the fine grid, where synthesized kernels rebuild their taps
// while fixed taps keep their pixel footprint.
inline RTensor reconstruct_at_scale(const ModelConfig& cfg, const TensorMap& params,
                                    const CoilKSpace& measured, const Mask& mask,
                                    int64_t scale) {
    if (scale < 1) throw InvalidArgument("reconstruct_at_scale: scale must be >= 1");
    if (scale == 1) return reconstruct(cfg, params, measured, mask);
    cfg.validate();
    detail::check_coil_stack(measured.data, "reconstruct_at_scale: measured k-space");
    detail::check_mask_geometry(measured.data, mask.bits, "reconstruct_at_scale");

    Tape t;
    TapeParams p(t, params, false);
    Tape::Id k = t.leaf(measured.data, false);
    Tape::Id S_base = estimate_sensitivities(t, cfg, p, k, mask);
    Tape::Id k_ref =
        cfg.bypass_no ? k : detail::per_coil_network(t, cfg.k_net, p, "k", k);
    Tape::Id x0 = t.sqrtr(t.sum0(t.abs2(t.ifft2(k_ref))), detail::kMagEps);

    Tape::Id x = t.r2c(t.sq0(t.upsample_bilinear(t.unsq0(x0), scale)));
    Tape::Id S = t.ch2c(t.upsample_bilinear(t.c2ch(S_base), scale));
    S = t.bdiv(S, t.sqrtr(t.sum0(t.abs2(S)), detail::kSensEps));

    Tape::Id k_fine = t.leaf(lift_kspace(measured.data, scale), false);
    RTensor mask_fine = embed_mask_bits(mask.bits, scale);

    for (int step = 0; step < cfg.cascades; ++step) {
        Tape::Id Ax = t.rmul_const(t.fft2(t.mul_b0(S, x)), mask_fine);
        Tape::Id adj = t.sum0(t.mul(t.conj(S), t.ifft2(t.sub(Ax, k_fine))));
        Tape::Id x_dc = t.sub(x, t.cscale(adj, p.at("eta" + std::to_string(step))));
        if (cfg.bypass_no) {
            x = x_dc;
            continue;
        }
        Tape::Id refined = t.sq0(t.ch2c(udno_forward(
            t, cfg.i_net, p, "i" + std::to_string(step), t.c2ch(t.unsq0(x)))));
        x = t.add(x_dc, t.scale_const(refined, cfg.lambda));
    }
    return t.rval(t.sqrtr(t.abs2(x), detail::kMagEps));
}

namespace detail {

inline int64_t dataset_resolution(const PhantomDataset& data, const char* what) {
    if (data.slices.empty()) throw InvalidArgument(std::string(what) + ": dataset is empty");
    const RTensor& img = data.slices[0].image;
    if (img.dim(0) != img.dim(1))
        throw InvalidArgument(std::string(what) + ": expects square slices");
    return img.dim(0);
}

inline int64_t image_footprint(const TrainedModel& m, int64_t resolution) {
    return m.cfg.i_net.mode == KernelMode::disco
               ? disco_footprint(m.cfg.i_net.basis, resolution)
               : m.cfg.i_net.tap_size;
}

}  // namespace detail

// Super-resolution transfer: every model reconstructs at `scale`x the
// measurement grid, judged against the bilinearly upsampled ground truth
// (data range = per-slice maximum of that upsampled target).  scale 1 is the
// degenerate case and reproduces the standard evaluation exactly.
inline TransferReport superres_image(const TrainedModel& disco, const TrainedModel& cnn,
                                     const PhantomDataset& data, int64_t scale,
                                     const TransferSpec& ts) {
    if (scale < 1) throw InvalidArgument("superres_image: scale must be >= 1");
    const int64_t N = detail::dataset_resolution(data, "superres_image");
    const uint64_t sum_before = params_checksum(disco.params) ^ params_checksum(cnn.params);

    const TrainedModel cnn_rescaled =
        rescale_fixed_kernels(cnn, static_cast<double>(scale), /*image_nets_only=*/true);

    TransferReport report;
    report.train_resolution = N;
    report.transfer_resolution = N * scale;

    struct Row {
        const char* name;
        const TrainedModel* at_train;     // evaluated on the training grid
        const TrainedModel* at_transfer;  // evaluated on the fine grid
    };
    const Row rows[] = {{"disco", &disco, &disco},
                        {"cnn_fixed", &cnn, &cnn},
                        {"cnn_rescaled", &cnn, &cnn_rescaled}};
    for (const Row& row : rows) {
        TransferMethodResult r;
        r.method = row.name;
        r.train_res = evaluate_recon(
            [&](const CoilKSpace& meas, const Mask& m) {
                return reconstruct(row.at_train->cfg, row.at_train->params, meas, m);
            },
            data, ts);
        std::vector<Metrics> per;
        for (size_t i = 0; i < data.slices.size(); ++i) {
            const PhantomSlice& s = data.slices[i];
            auto sm = detail::measure_slice(s, ts, i);
            RTensor out = reconstruct_at_scale(row.at_transfer->cfg, row.at_transfer->params,
                                               sm.meas, sm.mask, scale);
            RTensor gt = bilinear_upsample2d(s.image, scale);
            per.push_back(evaluate_metrics(out, gt, detail::image_max(gt)));
        }
        r.transfer_res = detail::mean_metrics(per);
        r.transfer_annulus = detail::nan_metrics();
        r.footprint_train = detail::image_footprint(*row.at_train, N);
        r.footprint_transfer = detail::image_footprint(*row.at_transfer, N * scale);
        report.methods.push_back(std::move(r));
    }
    report.params_unchanged =
        (params_checksum(disco.params) ^ params_checksum(cnn.params)) == sum_before;
    return report;
}

namespace detail {

// A power-of-two multiple of 16, the shapes the U-shaped networks accept at
// every transfer scale used here.
inline bool pow2_multiple_of_16(int64_t n) {
    if (n < 16 || n % 16 != 0) return false;
    int64_t q = n / 16;
    return (q & (q - 1)) == 0;
}

}  // namespace detail

// Extended-field-of-view transfer: models trained at `crop` resolution
// (center-cropped spectra, i.e. reduced-resolution acquisitions of the same
// field of view) evaluate on the full k-space grid.  Reports metrics on the
// full image and restricted to the frequency band outside the training crop
// (the content the models never observed).  crop == full resolution is the
// degenerate case: the transfer evaluation is the standard one and the
// annulus is empty (NaN metrics).
inline TransferReport extend_fov(const TrainedModel& disco, const TrainedModel& cnn,
                                 const PhantomDataset& full, int64_t crop,
                                 const TransferSpec& ts) {
    const int64_t N = detail::dataset_resolution(full, "extend_fov");
    if (!detail::pow2_multiple_of_16(crop) || !detail::pow2_multiple_of_16(N) || crop > N)
        throw InvalidArgument(
            "extend_fov: crop and full resolution must be power-of-two multiples of 16 "
            "with crop <= full");
    const uint64_t sum_before = params_checksum(disco.params) ^ params_checksum(cnn.params);

    // The reduced-resolution dataset the models were trained on.
    PhantomDataset cropped;
    cropped.seed = full.seed;
    cropped.resolution = crop;
    cropped.n_coils = full.n_coils;
    for (const PhantomSlice& s : full.slices) {
        PhantomSlice c;
        c.kspace = crop_kspace(s.kspace, crop);
        c.image = rss_combine(ifft2c(c.kspace));
        cropped.slices.push_back(std::move(c));
    }

    const TrainedModel cnn_rescaled = rescale_fixed_kernels(
        cnn, static_cast<double>(N) / static_cast<double>(crop), /*image_nets_only=*/false);

    TransferReport report;
    report.train_resolution = crop;
    report.transfer_resolution = N;

    struct Row {
        const char* name;
        const TrainedModel* at_train;
        const TrainedModel* at_transfer;
    };
    const Row rows[] = {{"disco", &disco, &disco},
                        {"cnn_fixed", &cnn, &cnn},
                        {"cnn_rescaled", &cnn, &cnn_rescaled}};
    for (const Row& row : rows) {
        TransferMethodResult r;
        r.method = row.name;
        r.train_res = evaluate_recon(
            [&](const CoilKSpace& meas, const Mask& m) {
                return reconstruct(row.at_train->cfg, row.at_train->params, meas, m);
            },
            cropped, ts);
        std::vector<Metrics> per, per_annulus;
        for (size_t i = 0; i < full.slices.size(); ++i) {
            const PhantomSlice& s = full.slices[i];
            auto sm = detail::measure_slice(s, ts, i);
            RTensor out =
                reconstruct(row.at_transfer->cfg, row.at_transfer->params, sm.meas, sm.mask);
            per.push_back(evaluate_metrics(out, s.image, detail::image_max(s.image)));
            if (crop < N) {
                RTensor out_hi = highpass_residual(out, crop);
                RTensor gt_hi = highpass_residual(s.image, crop);
                double lo = 0, hi = 0;
                for (double v : gt_hi.data) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                per_annulus.push_back(evaluate_metrics(out_hi, gt_hi, hi - lo));
            }
        }
        r.transfer_res = detail::mean_metrics(per);
        r.transfer_annulus =
            crop < N ? detail::mean_metrics(per_annulus) : detail::nan_metrics();
        r.footprint_train = detail::image_footprint(*row.at_train, crop);
        r.footprint_transfer = detail::image_footprint(*row.at_transfer, N);
        report.methods.push_back(std::move(r));
    }
    report.params_unchanged =
        (params_checksum(disco.params) ^ params_checksum(cnn.params)) == sum_before;
    return report;
}

}  // namespace varno
