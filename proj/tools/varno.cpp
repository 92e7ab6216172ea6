// Command-line entry point wiring the reconstruction toolkit into
// reproducible experiments.  Every run writes a `run.txt` manifest with the
// effective flag values; identical argv (and seed) reproduces every artifact
// bitwise.  Exit codes: 0 success, 1 usage error, 2 numeric failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "varno/classical.hpp"
#include "varno/gradsuite.hpp"
#include "varno/pgm.hpp"
#include "varno/superres.hpp"
#include "varno/train.hpp"
#include "varno/version.hpp"

namespace fs = std::filesystem;
using namespace varno;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

struct Shape {
    int64_t h = 0;
    int64_t w = 0;
};

Shape parse_shape(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= s.size())
        throw InvalidArgument("--shape wants HxW, got '" + s + "'");
    Shape out;
    try {
        out.h = std::stoll(s.substr(0, x));
        out.w = std::stoll(s.substr(x + 1));
    } catch (const std::exception&) {
        throw InvalidArgument("--shape wants HxW, got '" + s + "'");
    }
    if (out.h < 1 || out.w < 1) throw InvalidArgument("--shape extents must be positive");
    return out;
}

int64_t square_resolution(const std::string& shape) {
    Shape s = parse_shape(shape);
    if (s.h != s.w)
        throw InvalidArgument("this subcommand wants a square --shape, got " + shape);
    return s.h;
}

// Ordered key/value manifest; the values recorded are the effective ones
// (defaults included), so replaying the file reproduces the run bitwise.
struct Manifest {
    std::vector<std::pair<std::string, std::string>> kv;

    void add(const std::string& k, const std::string& v) { kv.emplace_back(k, v); }
    void add(const std::string& k, const char* v) { kv.emplace_back(k, v); }
    void add(const std::string& k, int64_t v) { kv.emplace_back(k, std::to_string(v)); }
    void add(const std::string& k, uint64_t v) { kv.emplace_back(k, std::to_string(v)); }
    void add(const std::string& k, int v) { kv.emplace_back(k, std::to_string(v)); }
    void add(const std::string& k, double v) { kv.emplace_back(k, format_double(v)); }
    void add(const std::string& k, bool v) { kv.emplace_back(k, v ? "true" : "false"); }

    void write(const fs::path& dir, const std::string& subcommand) const {
        std::ofstream f(dir / "run.txt", std::ios::binary);
        if (!f) throw InvalidArgument("cannot write " + (dir / "run.txt").string());
        f << "tool=" << kLibraryName << "\nversion=" << kLibraryVersion << "\n"
          << "subcommand=" << subcommand << "\n";
        for (const auto& [k, v] : kv) f << k << "=" << v << "\n";
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write " + path.string());
    f << text;
}

double image_max(const RTensor& x) {
    double m = 0;
    for (double v : x.data) m = std::max(m, v);
    return m;
}

// Eager calibration-region sensitivity estimate (no learned refinement):
// per-coil inverse transform of the ACS-masked spectrum, unit pixelwise RSS.
CTensor acs_maps(const CTensor& measured, const Mask& mask) {
    CTensor m = ifft2c(apply_mask(measured, acs_indicator(mask)));
    const int64_t C = m.dim(0), HW = m.dim(1) * m.dim(2);
    for (int64_t i = 0; i < HW; ++i) {
        double ss = 0;
        for (int64_t c = 0; c < C; ++c) ss += std::norm(m.data[static_cast<size_t>(c * HW + i)]);
        const double r = std::sqrt(ss + 1e-12);
        for (int64_t c = 0; c < C; ++c) m.data[static_cast<size_t>(c * HW + i)] /= r;
    }
    return m;
}

RTensor run_fista(const CoilKSpace& meas, const Mask& mask, double lambda, int iters) {
    FistaConfig fc;
    fc.max_iters = iters;
    fc.lambda = lambda >= 0 ? lambda : 1e-3 * image_max(zero_filled(meas.data));
    return fista_l1wavelet(meas.data, acs_maps(meas.data, mask), mask.bits, fc).image;
}

TrainedModel load_model(const fs::path& checkpoint) {
    TrainedModel m;
    m.params = read_checkpoint(checkpoint);
    m.cfg = parse_model_config(detail::read_file(checkpoint.parent_path() / "model.cfg"));
    m.cfg.validate();
    return m;
}

std::string metrics_line(const Metrics& m) {
    std::ostringstream os;
    os << "nmse=" << format_double(m.nmse) << " psnr_db=" << format_double(m.psnr_db)
       << " ssim=" << format_double(m.ssim);
    return os.str();
}

// ---- mask ----------------------------------------------------------------

struct MaskArgs {
    std::string pattern = "equispaced";
    int accel = 4;
    double cf = 0.08;
    std::string shape = "320x320";
    uint64_t seed = 0;
    std::string out = "runs/mask";
};

int run_mask_cmd(const MaskArgs& a) {
    Shape sh = parse_shape(a.shape);
    Mask m = generate_mask(mask_pattern_from_string(a.pattern), a.accel, a.cf, sh.h, sh.w,
                           a.seed);
    fs::create_directories(a.out);
    write_checkpoint(fs::path(a.out) / "mask.notf", TensorMap{{"mask", m.bits}});

    double sampled = 0;
    for (double v : m.bits.data) sampled += v;
    const double fraction = sampled / static_cast<double>(m.bits.numel());
    const double target = 1.0 / static_cast<double>(a.accel);

    std::ostringstream hdr;
    hdr << "pattern=" << to_string(m.pattern) << "\nR=" << m.R << "\ncf=" << format_double(m.cf)
        << "\nseed=" << m.seed << "\nshape=" << sh.h << "x" << sh.w
        << "\nfraction=" << format_double(fraction) << "\ntarget=" << format_double(target)
        << "\n";
    write_text(fs::path(a.out) / "mask.txt", hdr.str());
    write_pgm16(fs::path(a.out) / "mask.pgm", m.bits, 0.0, 1.0);

    Manifest mf;
    mf.add("pattern", a.pattern);
    mf.add("accel", a.accel);
    mf.add("cf", a.cf);
    mf.add("shape", a.shape);
    mf.add("seed", a.seed);
    mf.add("out", a.out);
    mf.write(a.out, "mask");

    std::cout << "mask " << to_string(m.pattern) << " " << sh.h << "x" << sh.w << " R=" << m.R
              << " sampled fraction " << format_double(fraction) << " (target "
              << format_double(target) << ")\nwrote " << a.out << "/mask.notf\n";
    return kExitOk;
}

// ---- phantom ---------------------------------------------------------------

struct PhantomArgs {
    int slices = 4;
    std::string shape = "64x64";
    int coils = 4;
    uint64_t seed = 0;
    std::string out = "runs/phantom";
};

int run_phantom_cmd(const PhantomArgs& a) {
    const int64_t res = square_resolution(a.shape);
    PhantomDataset ds = generate_phantoms(a.slices, res, a.coils, a.seed);
    fs::create_directories(a.out);

    TensorMap m;
    for (size_t i = 0; i < ds.slices.size(); ++i) {
        const std::string p = "slice" + std::to_string(i);
        m[p + "/image"] = ds.slices[i].image;
        m[p + "/maps"] = ds.slices[i].maps;
        m[p + "/kspace"] = ds.slices[i].kspace;
    }
    write_checkpoint(fs::path(a.out) / "phantoms.notf", m);

    std::ostringstream hdr;
    hdr << "slices=" << a.slices << "\nresolution=" << res << "\ncoils=" << a.coils
        << "\nseed=" << a.seed << "\n";
    write_text(fs::path(a.out) / "dataset.txt", hdr.str());
    write_pgm16(fs::path(a.out) / "slice0_image.pgm", ds.slices[0].image);

    Manifest mf;
    mf.add("slices", a.slices);
    mf.add("shape", a.shape);
    mf.add("coils", a.coils);
    mf.add("seed", a.seed);
    mf.add("out", a.out);
    mf.write(a.out, "phantom");

    std::cout << "generated " << a.slices << " phantom slice(s) at " << res << "x" << res
              << " with " << a.coils << " coil(s)\nwrote " << a.out << "/phantoms.notf\n";
    return kExitOk;
}

// ---- recon -----------------------------------------------------------------

struct ReconArgs {
    std::string method;
    std::string shape = "64x64";
    int coils = 4;
    uint64_t seed = 0;
    std::string pattern = "equispaced";
    int accel = 4;
    double cf = 0.08;
    double noise = 0.0;
    double lambda = -1;  // < 0: default to 1e-3 of the zero-filled max
    int iters = 100;
    std::string checkpoint;
    bool bypass_no = false;
    std::string out = "runs/recon";
};

int run_recon_cmd(const ReconArgs& a) {
    const int64_t res = square_resolution(a.shape);
    PhantomDataset ds = generate_phantoms(1, res, a.coils, a.seed);
    const PhantomSlice& s = ds.slices[0];
    Mask mask =
        generate_mask(mask_pattern_from_string(a.pattern), a.accel, a.cf, res, res, a.seed + 1);
    CoilKSpace meas = simulate_measurement(s.kspace, mask, a.noise, a.seed + 2);

    // The reference is the fully sampled RSS reconstruction, the conventional
    // ground truth; a full-mask noiseless zero-filled recon matches it
    // exactly (PSNR reports inf).
    RTensor reference = zero_filled(s.kspace);

    double lambda_used = a.lambda;
    RTensor recon;
    if (a.method == "zero-filled") {
        recon = zero_filled(meas.data);
    } else if (a.method == "fista") {
        if (lambda_used < 0) lambda_used = 1e-3 * image_max(zero_filled(meas.data));
        recon = run_fista(meas, mask, lambda_used, a.iters);
    } else if (a.method == "model") {
        if (a.checkpoint.empty())
            throw InvalidArgument("recon --method model needs --checkpoint");
        TrainedModel lm = load_model(a.checkpoint);
        if (a.bypass_no) lm.cfg.bypass_no = true;
        recon = reconstruct(lm.cfg, lm.params, meas, mask);
    } else {
        throw InvalidArgument("unknown --method '" + a.method +
                              "' (expected zero-filled|fista|model)");
    }

    Metrics mx = evaluate_metrics(recon, reference, image_max(reference));

    fs::create_directories(a.out);
    std::ostringstream rep;
    rep << "method=" << a.method << "\nnmse=" << format_double(mx.nmse)
        << "\npsnr_db=" << format_double(mx.psnr_db) << "\nssim=" << format_double(mx.ssim)
        << "\n";
    write_text(fs::path(a.out) / "report.txt", rep.str());
    write_checkpoint(fs::path(a.out) / "recon.notf",
                     TensorMap{{"recon", recon}, {"reference", reference}});
    const double range = image_max(reference);
    write_pgm16(fs::path(a.out) / "recon.pgm", recon, 0.0, range > 0 ? range : 1.0);
    write_pgm16(fs::path(a.out) / "reference.pgm", reference, 0.0, range > 0 ? range : 1.0);

    Manifest mf;
    mf.add("method", a.method);
    mf.add("shape", a.shape);
    mf.add("coils", a.coils);
    mf.add("seed", a.seed);
    mf.add("pattern", a.pattern);
    mf.add("accel", a.accel);
    mf.add("cf", a.cf);
    mf.add("noise", a.noise);
    if (a.method == "fista") {
        mf.add("lambda", lambda_used);
        mf.add("iters", a.iters);
    }
    if (a.method == "model") {
        mf.add("checkpoint", a.checkpoint);
        mf.add("bypass-no", a.bypass_no);
    }
    mf.add("out", a.out);
    mf.write(a.out, "recon");

    std::cout << "recon method=" << a.method << " " << metrics_line(mx) << "\nwrote " << a.out
              << "/report.txt\n";
    return kExitOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
    int slices = 8;
    std::string shape = "64x64";
    int coils = 4;
    uint64_t seed = 0;
    std::string pattern = "equispaced";
    int accel = 4;
    double cf = 0.08;
    double noise = 0.0;
    int cascades = 2;
    int hidden = 8;
    int depth = 1;
    std::string kernel = "disco";
    double radius = 0.1;
    int taps = 3;
    int epochs = 10;
    double lr = 3e-4;
    bool bypass_no = false;
    std::string out = "runs/train";
};

ModelConfig model_config_from(const std::string& kernel, int cascades, int hidden, int depth,
                              double radius, int taps, bool bypass_no) {
    ModelConfig cfg = ModelConfig::desk_default();
    cfg.cascades = cascades;
    cfg.bypass_no = bypass_no;
    if (kernel != "disco" && kernel != "fixed")
        throw InvalidArgument("unknown --kernel '" + kernel + "' (expected disco|fixed)");
    for (UdnoConfig* c : {&cfg.k_net, &cfg.i_net, &cfg.s_net}) {
        c->hidden_channels = hidden;
        c->depth = depth;
        c->mode = kernel == "disco" ? KernelMode::disco : KernelMode::fixed_taps;
        c->tap_size = taps;
        c->basis.radius = radius;
    }
    cfg.validate();
    return cfg;
}

int run_train_cmd(const TrainArgs& a) {
    const int64_t res = square_resolution(a.shape);
    ModelConfig cfg = model_config_from(a.kernel, a.cascades, a.hidden, a.depth, a.radius,
                                        a.taps, a.bypass_no);
    PhantomDataset ds = generate_phantoms(a.slices, res, a.coils, a.seed);
    const MaskPattern pat = mask_pattern_from_string(a.pattern);

    std::vector<TrainSample> samples;
    for (size_t i = 0; i < ds.slices.size(); ++i) {
        const PhantomSlice& s = ds.slices[i];
        Mask mask = generate_mask(pat, a.accel, a.cf, res, res, a.seed + i);
        CoilKSpace meas = simulate_measurement(s.kspace, mask, a.noise, a.seed + i);
        samples.push_back({meas, mask, s.image, image_max(s.image)});
    }

    fs::create_directories(a.out);
    TrainConfig tc;
    tc.epochs = a.epochs;
    tc.lr = a.lr;
    tc.seed = a.seed;
    tc.checkpoint_dir = a.out;
    tc.on_epoch = [](int epoch, double mean_loss) {
        std::cout << "epoch " << epoch << " mean_loss " << format_double(mean_loss) << "\n";
    };

    TensorMap params = init_model_params(cfg, a.seed);
    TrainResult result = train_model(cfg, std::move(params), samples, tc);
    write_checkpoint(fs::path(a.out) / "final.notf", result.params);

    std::ostringstream losses;
    for (size_t e = 0; e < result.epoch_mean_loss.size(); ++e)
        losses << "epoch=" << e << " mean_loss=" << format_double(result.epoch_mean_loss[e])
               << "\n";
    write_text(fs::path(a.out) / "losses.txt", losses.str());

    Manifest mf;
    mf.add("slices", a.slices);
    mf.add("shape", a.shape);
    mf.add("coils", a.coils);
    mf.add("seed", a.seed);
    mf.add("pattern", a.pattern);
    mf.add("accel", a.accel);
    mf.add("cf", a.cf);
    mf.add("noise", a.noise);
    mf.add("cascades", a.cascades);
    mf.add("hidden", a.hidden);
    mf.add("depth", a.depth);
    mf.add("kernel", a.kernel);
    mf.add("radius", a.radius);
    mf.add("taps", a.taps);
    mf.add("epochs", a.epochs);
    mf.add("lr", a.lr);
    mf.add("bypass-no", a.bypass_no);
    mf.add("out", a.out);
    mf.write(a.out, "train");

    if (result.aborted) {
        std::cout << "training aborted: " << result.abort_reason << "\n";
        return kExitNumeric;
    }
    std::cout << "trained " << result.steps << " step(s); final mean loss "
              << format_double(result.epoch_mean_loss.back()) << "\nwrote " << a.out
              << "/final.notf\n";
    return kExitOk;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
    int slices = 4;
    std::string shape = "64x64";
    int coils = 4;
    uint64_t seed = 0;
    std::vector<std::string> patterns;  // default: all six
    std::vector<int> accels = {4, 6, 8, 16};
    std::vector<double> cfs = {0.08, 0.06, 0.04, 0.02};
    double noise = 0.0;
    double lambda = -1;
    int iters = 50;
    std::string checkpoint;
    std::string out = "runs/eval";
};

int run_eval_cmd(const EvalArgs& a) {
    const int64_t res = square_resolution(a.shape);
    if (a.accels.size() != a.cfs.size())
        throw InvalidArgument("--accel and --cf must be given the same number of times");
    std::vector<std::string> patterns = a.patterns;
    if (patterns.empty())
        patterns = {"equispaced", "random", "magic", "gaussian", "radial", "poisson"};

    PhantomDataset ds = generate_phantoms(a.slices, res, a.coils, a.seed);

    std::vector<std::pair<std::string, ReconFn>> methods;
    methods.emplace_back("zero-filled", [](const CoilKSpace& meas, const Mask&) {
        return zero_filled(meas.data);
    });
    methods.emplace_back("fista", [&a](const CoilKSpace& meas, const Mask& mask) {
        return run_fista(meas, mask, a.lambda, a.iters);
    });
    TrainedModel lm;
    if (!a.checkpoint.empty()) {
        lm = load_model(a.checkpoint);
        methods.emplace_back("model", [&lm](const CoilKSpace& meas, const Mask& mask) {
            return reconstruct(lm.cfg, lm.params, meas, mask);
        });
    }

    std::ostringstream rep;
    char row[160];
    std::snprintf(row, sizeof(row), "%-11s %3s %6s %-12s %10s %9s %7s\n", "pattern", "R", "cf",
                  "method", "nmse", "psnr_db", "ssim");
    rep << row;
    for (const std::string& pname : patterns) {
        const MaskPattern pat = mask_pattern_from_string(pname);
        for (size_t r = 0; r < a.accels.size(); ++r) {
            TransferSpec ts;
            ts.pattern = pat;
            ts.R = a.accels[r];
            ts.cf = a.cfs[r];
            ts.mask_seed = a.seed;
            ts.noise_sigma = a.noise;
            ts.noise_seed = a.seed;
            for (const auto& [mname, fn] : methods) {
                Metrics m = evaluate_recon(fn, ds, ts);
                std::snprintf(row, sizeof(row), "%-11s %3d %6.3f %-12s %10.6f %9.3f %7.4f\n",
                              pname.c_str(), a.accels[r], a.cfs[r], mname.c_str(), m.nmse,
                              m.psnr_db, m.ssim);
                rep << row;
            }
        }
    }

    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "report.txt", rep.str());

    Manifest mf;
    mf.add("slices", a.slices);
    mf.add("shape", a.shape);
    mf.add("coils", a.coils);
    mf.add("seed", a.seed);
    {
        std::string ps;
        for (const auto& p : patterns) ps += (ps.empty() ? "" : ",") + p;
        mf.add("patterns", ps);
        std::string rs, cs;
        for (size_t r = 0; r < a.accels.size(); ++r) {
            rs += (rs.empty() ? "" : ",") + std::to_string(a.accels[r]);
            cs += (cs.empty() ? "" : ",") + format_double(a.cfs[r]);
        }
        mf.add("accels", rs);
        mf.add("cfs", cs);
    }
    mf.add("noise", a.noise);
    mf.add("lambda", a.lambda);
    mf.add("iters", a.iters);
    mf.add("checkpoint", a.checkpoint.empty() ? "(none)" : a.checkpoint);
    mf.add("out", a.out);
    mf.write(a.out, "eval");

    std::cout << rep.str() << "wrote " << a.out << "/report.txt\n";
    return kExitOk;
}

// ---- superres ---------------------------------------------------------------

struct SuperresArgs {
    std::string mode;
    int64_t scale = 2;
    int64_t crop = 0;  // 0: default to half the full resolution
    int slices = 2;
    std::string shape = "64x64";
    int coils = 4;
    uint64_t seed = 0;
    std::string pattern = "equispaced";
    int accel = 4;
    double cf = 0.08;
    double noise = 0.0;
    std::string disco_checkpoint;
    std::string cnn_checkpoint;
    int cascades = 2;
    int hidden = 8;
    int depth = 1;
    double radius = 0.1;
    int taps = 3;
    std::string out = "runs/superres";
};

std::string transfer_table(const TransferReport& rep, bool with_annulus) {
    std::ostringstream os;
    os << "train_resolution=" << rep.train_resolution
       << " transfer_resolution=" << rep.transfer_resolution
       << " params_unchanged=" << (rep.params_unchanged ? "true" : "false") << "\n";
    char row[200];
    std::snprintf(row, sizeof(row), "%-13s %9s %9s %11s %9s %8s %12s %9s %8s\n", "method",
                  "fp_train", "fp_trans", "train_nmse", "tr_psnr", "tr_ssim", "trans_nmse",
                  "tra_psnr", "tr_ssim");
    os << row;
    for (const auto& m : rep.methods) {
        std::snprintf(row, sizeof(row), "%-13s %9lld %9lld %11.6f %9.3f %8.4f %12.6f %9.3f %8.4f\n",
                      m.method.c_str(), static_cast<long long>(m.footprint_train),
                      static_cast<long long>(m.footprint_transfer), m.train_res.nmse,
                      m.train_res.psnr_db, m.train_res.ssim, m.transfer_res.nmse,
                      m.transfer_res.psnr_db, m.transfer_res.ssim);
        os << row;
    }
    if (with_annulus) {
        os << "high-frequency band outside the training crop:\n";
        for (const auto& m : rep.methods) {
            std::snprintf(row, sizeof(row), "%-13s annulus nmse=%.6f psnr_db=%.3f ssim=%.4f\n",
                          m.method.c_str(), m.transfer_annulus.nmse, m.transfer_annulus.psnr_db,
                          m.transfer_annulus.ssim);
            os << row;
        }
    }
    return os.str();
}

int run_superres_cmd(const SuperresArgs& a) {
    if (a.mode != "image" && a.mode != "fov")
        throw InvalidArgument("unknown --mode '" + a.mode + "' (expected image|fov)");
    const int64_t res = square_resolution(a.shape);
    PhantomDataset ds = generate_phantoms(a.slices, res, a.coils, a.seed);

    TrainedModel disco, cnn;
    if (a.disco_checkpoint.empty()) {
        disco.cfg = model_config_from("disco", a.cascades, a.hidden, a.depth, a.radius, a.taps,
                                      false);
        disco.params = init_model_params(disco.cfg, a.seed);
        std::cout << "note: no --disco-checkpoint given, using freshly initialized weights\n";
    } else {
        disco = load_model(a.disco_checkpoint);
    }
    if (a.cnn_checkpoint.empty()) {
        cnn.cfg = model_config_from("fixed", a.cascades, a.hidden, a.depth, a.radius, a.taps,
                                    false);
        cnn.params = init_model_params(cnn.cfg, a.seed + 1);
        std::cout << "note: no --cnn-checkpoint given, using freshly initialized weights\n";
    } else {
        cnn = load_model(a.cnn_checkpoint);
    }
    if (disco.cfg.i_net.mode != KernelMode::disco)
        throw InvalidArgument("--disco-checkpoint must hold a quadrature-synthesized model");
    if (cnn.cfg.i_net.mode != KernelMode::fixed_taps)
        throw InvalidArgument("--cnn-checkpoint must hold a fixed-tap model");

    TransferSpec ts;
    ts.pattern = mask_pattern_from_string(a.pattern);
    ts.R = a.accel;
    ts.cf = a.cf;
    ts.mask_seed = a.seed;
    ts.noise_sigma = a.noise;
    ts.noise_seed = a.seed;

    const int64_t crop = a.crop > 0 ? a.crop : res / 2;
    TransferReport rep = a.mode == "image" ? superres_image(disco, cnn, ds, a.scale, ts)
                                           : extend_fov(disco, cnn, ds, crop, ts);

    const std::string table = transfer_table(rep, a.mode == "fov");
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "report.txt", table);

    Manifest mf;
    mf.add("mode", a.mode);
    if (a.mode == "image") mf.add("scale", a.scale);
    if (a.mode == "fov") mf.add("crop", crop);
    mf.add("slices", a.slices);
    mf.add("shape", a.shape);
    mf.add("coils", a.coils);
    mf.add("seed", a.seed);
    mf.add("pattern", a.pattern);
    mf.add("accel", a.accel);
    mf.add("cf", a.cf);
    mf.add("noise", a.noise);
    mf.add("disco-checkpoint", a.disco_checkpoint.empty() ? "(fresh)" : a.disco_checkpoint);
    mf.add("cnn-checkpoint", a.cnn_checkpoint.empty() ? "(fresh)" : a.cnn_checkpoint);
    if (a.disco_checkpoint.empty() || a.cnn_checkpoint.empty()) {
        mf.add("cascades", a.cascades);
        mf.add("hidden", a.hidden);
        mf.add("depth", a.depth);
        mf.add("radius", a.radius);
        mf.add("taps", a.taps);
    }
    mf.add("out", a.out);
    mf.write(a.out, "superres");

    std::cout << table << "wrote " << a.out << "/report.txt\n";
    if (!rep.params_unchanged) {
        std::cerr << "error: transfer evaluation modified the parameters\n";
        return kExitNumeric;
    }
    return kExitOk;
}

// ---- gradcheck ---------------------------------------------------------------

struct GradcheckArgs {
    uint64_t seed = 0;
    std::string out = "runs/gradcheck";
};

int run_gradcheck_cmd(const GradcheckArgs& a) {
    std::vector<GradSuiteCase> suite = run_gradient_suite(a.seed);
    std::ostringstream rep;
    bool all_pass = true;
    char row[160];
    for (const auto& c : suite) {
        std::snprintf(row, sizeof(row), "%-26s max_rel_err=%-12.3e %s\n", c.name.c_str(),
                      c.report.worst, c.report.pass ? "PASS" : "FAIL");
        rep << row;
        all_pass = all_pass && c.report.pass;
    }
    rep << (all_pass ? "all gradient checks passed\n" : "gradient checks FAILED\n");

    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "report.txt", rep.str());
    Manifest mf;
    mf.add("seed", a.seed);
    mf.add("out", a.out);
    mf.write(a.out, "gradcheck");

    std::cout << rep.str();
    return all_pass ? kExitOk : kExitNumeric;
}

const std::vector<std::string> kPatternNames = {"equispaced", "random",  "magic",
                                                "gaussian", "radial", "poisson"};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kLibraryName) +
                 " — discretization-agnostic compressed-sensing MRI reconstruction"};
    app.require_subcommand(1);

    MaskArgs ma;
    auto* mask_cmd = app.add_subcommand("mask", "Generate and persist an undersampling mask");
    mask_cmd->add_option("--pattern", ma.pattern, "Sampling pattern")
        ->check(CLI::IsMember(kPatternNames))
        ->capture_default_str();
    mask_cmd->add_option("--accel", ma.accel, "Acceleration rate R")->capture_default_str();
    mask_cmd->add_option("--cf", ma.cf, "Center fraction")->capture_default_str();
    mask_cmd->add_option("--shape", ma.shape, "Grid HxW")->capture_default_str();
    mask_cmd->add_option("--seed", ma.seed, "RNG seed")->capture_default_str();
    mask_cmd->add_option("--out", ma.out, "Output directory")->capture_default_str();

    PhantomArgs pa;
    auto* phantom_cmd = app.add_subcommand("phantom", "Generate a synthetic multi-coil dataset");
    phantom_cmd->add_option("--slices", pa.slices, "Number of slices")->capture_default_str();
    phantom_cmd->add_option("--shape", pa.shape, "Square grid HxW (multiple of 16)")
        ->capture_default_str();
    phantom_cmd->add_option("--coils", pa.coils, "Number of coils")->capture_default_str();
    phantom_cmd->add_option("--seed", pa.seed, "RNG seed")->capture_default_str();
    phantom_cmd->add_option("--out", pa.out, "Output directory")->capture_default_str();

    ReconArgs ra;
    auto* recon_cmd = app.add_subcommand("recon", "Reconstruct one simulated acquisition");
    recon_cmd->add_option("--method", ra.method, "zero-filled|fista|model")->required();
    recon_cmd->add_option("--shape", ra.shape, "Square grid HxW")->capture_default_str();
    recon_cmd->add_option("--coils", ra.coils, "Number of coils")->capture_default_str();
    recon_cmd->add_option("--seed", ra.seed, "RNG seed")->capture_default_str();
    recon_cmd->add_option("--pattern", ra.pattern, "Sampling pattern")
        ->check(CLI::IsMember(kPatternNames))
        ->capture_default_str();
    recon_cmd->add_option("--accel", ra.accel, "Acceleration rate R")->capture_default_str();
    recon_cmd->add_option("--cf", ra.cf, "Center fraction")->capture_default_str();
    recon_cmd->add_option("--noise", ra.noise, "Measurement noise std")->capture_default_str();
    recon_cmd->add_option("--lambda", ra.lambda,
                          "FISTA l1 weight (default: 1e-3 of the zero-filled max)");
    recon_cmd->add_option("--iters", ra.iters, "FISTA iterations")->capture_default_str();
    recon_cmd->add_option("--checkpoint", ra.checkpoint, "Model checkpoint (.notf)");
    recon_cmd->add_flag("--bypass-no", ra.bypass_no, "Disable the learned refinements");
    recon_cmd->add_option("--out", ra.out, "Output directory")->capture_default_str();

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train the unrolled reconstruction model");
    train_cmd->add_option("--slices", ta.slices, "Training slices")->capture_default_str();
    train_cmd->add_option("--shape", ta.shape, "Square grid HxW")->capture_default_str();
    train_cmd->add_option("--coils", ta.coils, "Number of coils")->capture_default_str();
    train_cmd->add_option("--seed", ta.seed, "RNG seed")->capture_default_str();
    train_cmd->add_option("--pattern", ta.pattern, "Sampling pattern")
        ->check(CLI::IsMember(kPatternNames))
        ->capture_default_str();
    train_cmd->add_option("--accel", ta.accel, "Acceleration rate R")->capture_default_str();
    train_cmd->add_option("--cf", ta.cf, "Center fraction")->capture_default_str();
    train_cmd->add_option("--noise", ta.noise, "Measurement noise std")->capture_default_str();
    train_cmd->add_option("--cascades", ta.cascades, "Unrolled cascades")->capture_default_str();
    train_cmd->add_option("--hidden", ta.hidden, "Hidden channels")->capture_default_str();
    train_cmd->add_option("--depth", ta.depth, "Network depth (levels)")->capture_default_str();
    train_cmd->add_option("--kernel", ta.kernel, "disco|fixed")->capture_default_str();
    train_cmd->add_option("--radius", ta.radius, "Kernel support radius")->capture_default_str();
    train_cmd->add_option("--taps", ta.taps, "Fixed kernel tap size")->capture_default_str();
    train_cmd->add_option("--epochs", ta.epochs, "Training epochs")->capture_default_str();
    train_cmd->add_option("--lr", ta.lr, "Learning rate")->capture_default_str();
    train_cmd->add_flag("--bypass-no", ta.bypass_no, "Train without learned refinements");
    train_cmd->add_option("--out", ta.out, "Output directory")->capture_default_str();

    EvalArgs ea;
    auto* eval_cmd = app.add_subcommand("eval", "Metric tables over patterns and rates");
    eval_cmd->add_option("--slices", ea.slices, "Evaluation slices")->capture_default_str();
    eval_cmd->add_option("--shape", ea.shape, "Square grid HxW")->capture_default_str();
    eval_cmd->add_option("--coils", ea.coils, "Number of coils")->capture_default_str();
    eval_cmd->add_option("--seed", ea.seed, "RNG seed")->capture_default_str();
    eval_cmd->add_option("--pattern", ea.patterns, "Sampling pattern(s) (default: all six)")
        ->check(CLI::IsMember(kPatternNames));
    eval_cmd->add_option("--accel", ea.accels, "Acceleration rate(s)")->capture_default_str();
    eval_cmd->add_option("--cf", ea.cfs, "Center fraction(s), zipped with --accel")
        ->capture_default_str();
    eval_cmd->add_option("--noise", ea.noise, "Measurement noise std")->capture_default_str();
    eval_cmd->add_option("--lambda", ea.lambda,
                         "FISTA l1 weight (default: 1e-3 of the zero-filled max)");
    eval_cmd->add_option("--iters", ea.iters, "FISTA iterations")->capture_default_str();
    eval_cmd->add_option("--checkpoint", ea.checkpoint, "Model checkpoint to include");
    eval_cmd->add_option("--out", ea.out, "Output directory")->capture_default_str();

    SuperresArgs sa;
    auto* sup_cmd = app.add_subcommand("superres", "Zero-shot resolution-transfer evaluation");
    sup_cmd->add_option("--mode", sa.mode, "image|fov")->required();
    sup_cmd->add_option("--scale", sa.scale, "Image-space upsampling factor")
        ->capture_default_str();
    sup_cmd->add_option("--crop", sa.crop, "Training crop for fov mode (default: half)");
    sup_cmd->add_option("--slices", sa.slices, "Evaluation slices")->capture_default_str();
    sup_cmd->add_option("--shape", sa.shape, "Square grid HxW")->capture_default_str();
    sup_cmd->add_option("--coils", sa.coils, "Number of coils")->capture_default_str();
    sup_cmd->add_option("--seed", sa.seed, "RNG seed")->capture_default_str();
    sup_cmd->add_option("--pattern", sa.pattern, "Sampling pattern")
        ->check(CLI::IsMember(kPatternNames))
        ->capture_default_str();
    sup_cmd->add_option("--accel", sa.accel, "Acceleration rate R")->capture_default_str();
    sup_cmd->add_option("--cf", sa.cf, "Center fraction")->capture_default_str();
    sup_cmd->add_option("--noise", sa.noise, "Measurement noise std")->capture_default_str();
    sup_cmd->add_option("--disco-checkpoint", sa.disco_checkpoint,
                        "Checkpoint of the synthesized-kernel model");
    sup_cmd->add_option("--cnn-checkpoint", sa.cnn_checkpoint,
                        "Checkpoint of the fixed-tap model");
    sup_cmd->add_option("--cascades", sa.cascades, "Cascades for fresh models")
        ->capture_default_str();
    sup_cmd->add_option("--hidden", sa.hidden, "Hidden channels for fresh models")
        ->capture_default_str();
    sup_cmd->add_option("--depth", sa.depth, "Depth for fresh models")->capture_default_str();
    sup_cmd->add_option("--radius", sa.radius, "Kernel radius for fresh models")
        ->capture_default_str();
    sup_cmd->add_option("--taps", sa.taps, "Tap size for fresh models")->capture_default_str();
    sup_cmd->add_option("--out", sa.out, "Output directory")->capture_default_str();

    GradcheckArgs ga;
    auto* grad_cmd = app.add_subcommand("gradcheck", "Run the full gradient-check suite");
    grad_cmd->add_option("--seed", ga.seed, "RNG seed")->capture_default_str();
    grad_cmd->add_option("--out", ga.out, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*mask_cmd) return run_mask_cmd(ma);
        if (*phantom_cmd) return run_phantom_cmd(pa);
        if (*recon_cmd) return run_recon_cmd(ra);
        if (*train_cmd) return run_train_cmd(ta);
        if (*eval_cmd) return run_eval_cmd(ea);
        if (*sup_cmd) return run_superres_cmd(sa);
        if (*grad_cmd) return run_gradcheck_cmd(ga);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
