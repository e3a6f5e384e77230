#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "medit/model.hpp"
#include "medit/motion.hpp"
#include "medit/schedule.hpp"
#include "medit/text_encoder.hpp"

namespace medit {

struct GuidanceConfig {
    double s_text = 2.0;
    double s_motion = 2.0;
    double p_drop_text = 0.1;  // text replaced by the null embedding
    double p_drop_both = 0.1;  // text and source both replaced

    void validate() const;
};

// M_t = sqrt(alpha_bar_t) * M_0 + sqrt(1 - alpha_bar_t) * eps
Eigen::MatrixXd forward_noise(const Eigen::MatrixXd& m0, int timestep,
                              const Eigen::MatrixXd& eps, const NoiseSchedule& sched);

// Exact inverse: (M_t - sqrt(1 - alpha_bar_t) * eps) / sqrt(alpha_bar_t).
Eigen::MatrixXd reconstruct_x0(const Eigen::MatrixXd& mt, int timestep,
                               const Eigen::MatrixXd& eps, const NoiseSchedule& sched);

// Mean squared error over all entries.
double editing_loss(const Eigen::MatrixXd& m0, const Eigen::MatrixXd& predicted);

// Mean per-frame cross entropy of the similarity logits.
double auxiliary_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

// Unweighted sum.
double total_loss(double editing, double auxiliary);

enum class GuidanceBranch { kUnconditional, kSourceOnly, kFull };

// x0 prediction for one reverse step under the given conditioning branch.
using DenoiseFn =
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd& noised, int timestep, GuidanceBranch)>;

// Two-way composition in x0 space:
//   e_uncond + s_motion * (e_src - e_uncond) + s_text * (e_full - e_src).
// Scale pairs (1,1) and (0,0) short-circuit to the exact branch output.
Eigen::MatrixXd compose_guidance(const Eigen::MatrixXd& e_uncond, const Eigen::MatrixXd& e_src,
                                 const Eigen::MatrixXd& e_full, double s_motion, double s_text);

// DDPM ancestral sampling with the x0 parameterization. Starts from standard
// normal noise, walks t = T-1 .. 0, composes the guided x0 prediction, and
// steps through the posterior mean (noise added for t > 0 only).
Eigen::MatrixXd guided_sample_with(const DenoiseFn& denoise, int frames, int feature_dim,
                                   const NoiseSchedule& sched, const GuidanceConfig& guidance,
                                   Rng& rng);

// Full-model sampler: condition outputs for the three branches are computed
// once, then reused across every reverse step.
MotionSequence guided_sample(const MotionSequence& source, const TextFeatures& text,
                             ModelBundle& bundle, const NoiseSchedule& sched,
                             const GuidanceConfig& guidance, int out_frames, Rng& rng);

// Condition-dropout draw for one training item: 0 = keep all, 1 = drop text,
// 2 = drop both.
int sample_condition_dropout(const GuidanceConfig& guidance, Rng& rng);

}  // namespace medit
