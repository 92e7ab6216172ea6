#pragma once
// Deterministic single-threaded training of the unrolled model: adaptive
// moment gradient descent (decay 0.9/0.999, eps 1e-8) on the structural
// similarity loss, with a fixed shuffle stream per epoch, per-epoch loss
// reporting, and per-epoch checkpoints.  A non-finite loss aborts training and
// returns the parameters saved after the last completed epoch.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "varno/autodiff.hpp"
#include "varno/model.hpp"
#include "varno/rng.hpp"
#include "varno/tensor_io.hpp"

namespace varno {

struct TrainSample {
    CoilKSpace measured;  // masked (and possibly noisy) multi-coil k-space
    Mask mask;
    RTensor target;       // RSS ground-truth magnitude image (H,W)
    double data_range;    // per-slice max of the target
};

struct TrainConfig {
    int epochs = 10;
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t seed = 0;
    std::filesystem::path checkpoint_dir;  // empty -> no files written
    std::function<void(int epoch, double mean_loss)> on_epoch;

    void validate() const {
        if (epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
        if (!(lr >= 0)) throw InvalidArgument("train: learning rate must be >= 0");
    }
};

struct TrainResult {
    TensorMap params;
    std::vector<double> epoch_mean_loss;  // training loss is -mean SSIM
    int64_t steps = 0;
    bool aborted = false;
    std::string abort_reason;
};

namespace detail {

struct AdamState {
    TensorMap m, v;
    int64_t t = 0;
};

inline void adam_step(TensorMap& params, const std::map<std::string, RTensor>& grads,
                      AdamState& st, const TrainConfig& tc) {
    ++st.t;
    const double bc1 = 1.0 - std::pow(tc.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(tc.beta2, static_cast<double>(st.t));
    for (auto& [name, value] : params) {
        RTensor& p = std::get<RTensor>(value);
        const RTensor& g = grads.at(name);
        RTensor& m = std::get<RTensor>(st.m[name]);
        RTensor& v = std::get<RTensor>(st.v[name]);
        for (size_t i = 0; i < p.data.size(); ++i) {
            m.data[i] = tc.beta1 * m.data[i] + (1.0 - tc.beta1) * g.data[i];
            v.data[i] = tc.beta2 * v.data[i] + (1.0 - tc.beta2) * g.data[i] * g.data[i];
            p.data[i] -= tc.lr * (m.data[i] / bc1) / (std::sqrt(v.data[i] / bc2) + tc.eps);
        }
    }
}

}  // namespace detail

inline TrainResult train_model(const ModelConfig& cfg, TensorMap params,
                               const std::vector<TrainSample>& data, const TrainConfig& tc) {
    cfg.validate();
    tc.validate();
    if (data.empty()) throw InvalidArgument("train: dataset is empty");
    for (const auto& s : data)
        if (!same_shape(s.target, data.front().target))
            throw InvalidArgument("train: all slices must share one shape");

    detail::AdamState adam;
    for (const auto& [name, value] : params) {
        const RTensor& p = std::get<RTensor>(value);
        adam.m[name] = RTensor(p.shape);
        adam.v[name] = RTensor(p.shape);
    }

    const bool save = !tc.checkpoint_dir.empty();
    if (save) {
        std::filesystem::create_directories(tc.checkpoint_dir);
        std::ofstream manifest(tc.checkpoint_dir / "model.cfg");
        manifest << serialize_model_config(cfg);
    }

    TrainResult res;
    TensorMap last_good = params;
    Rng shuffle_rng(tc.seed, "train/shuffle");
    std::vector<int64_t> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0;
        for (int64_t idx : order) {
            const TrainSample& s = data[static_cast<size_t>(idx)];
            Tape t;
            TapeParams p(t, params, true);
            Tape::Id out = model_forward(t, cfg, p, s.measured, s.mask);
            Tape::Id loss = ssim_loss(t, out, t.leaf(s.target, false), s.data_range);
            const double L = t.rval(loss).data[0];
            if (!std::isfinite(L)) {
                res.params = std::move(last_good);
                res.aborted = true;
                res.abort_reason = "non-finite loss at step " + std::to_string(res.steps + 1) +
                                   "; restored the last completed epoch's parameters";
                return res;
            }
            t.backward(loss);
            std::map<std::string, RTensor> grads;
            for (const auto& [name, id] : p.ids()) grads.emplace(name, t.rgrad(id));
            detail::adam_step(params, grads, adam, tc);
            loss_sum += L;
            ++res.steps;
        }
        const double mean_loss = loss_sum / static_cast<double>(data.size());
        res.epoch_mean_loss.push_back(mean_loss);
        if (tc.on_epoch) tc.on_epoch(epoch, mean_loss);
        last_good = params;
        if (save)
            write_checkpoint(tc.checkpoint_dir / ("epoch_" + std::to_string(epoch) + ".notf"),
                             params);
    }
    res.params = std::move(params);
    return res;
}

}  // namespace varno
