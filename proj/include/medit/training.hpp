#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "medit/diffusion.hpp"
#include "medit/model.hpp"
#include "medit/motion.hpp"
#include "medit/schedule.hpp"
#include "medit/similarity.hpp"
#include "medit/text_encoder.hpp"

namespace medit {

// One training example: triplet plus its precomputed similarity labels and
// text features. Pointers are non-owning.
struct TrainItem {
    const EditTriplet* triplet = nullptr;
    const SimilarityCurve* curve = nullptr;
    const TextFeatures* text = nullptr;
};

struct TrainHyper {
    double lr = 1e-4;
    double weight_decay = 1e-2;
    double grad_clip = 1.0;  // global norm; <= 0 disables
    bool aux_enabled = true;
    double aux_weight = 1.0;
    int workers = 1;
};

struct StepReport {
    double loss_editing = 0.0;
    double loss_aux = 0.0;
    double loss_total = 0.0;
};

// Decoupled-weight-decay adaptive-moment optimizer. Parameters without a
// gradient buffer this step are skipped entirely.
class AdamW {
public:
    AdamW() = default;

    void step(nn::ParamStore& store, double lr, double weight_decay, double grad_clip);

    std::int64_t step_count() const { return step_count_; }

private:
    std::vector<nn::Mat> m_, v_;
    std::int64_t step_count_ = 0;
};

// One optimizer step on a batch. All randomness (timesteps, noise, condition
// dropout, model dropout seeds) is drawn from `rng` up front in item order, so
// results are bitwise independent of the worker count: workers only evaluate
// the per-item graphs, and per-item gradients merge in item order.
StepReport train_step(std::span<const TrainItem> batch, ModelBundle& bundle,
                      const NoiseSchedule& sched, const GuidanceConfig& guidance,
                      const TrainHyper& hyper, AdamW& optimizer, Rng& rng);

struct TrainLoopOptions {
    int steps = 0;
    int batch_size = 32;
    TrainHyper hyper;
    std::uint64_t seed = 0;
    std::string metrics_path;  // JSON-lines log; empty disables
    std::string config_hash;
    bool timing = false;  // when false, wall_ms is logged as 0 to keep logs reproducible
    int log_every = 1;
};

// Epoch-shuffled minibatch loop. Returns the last step's report.
StepReport train_loop(std::span<const TrainItem> items, ModelBundle& bundle,
                      const NoiseSchedule& sched, const GuidanceConfig& guidance,
                      const TrainLoopOptions& options);

}  // namespace medit
