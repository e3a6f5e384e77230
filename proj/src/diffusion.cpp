#include "medit/diffusion.hpp"

#include <cmath>

namespace medit {

void GuidanceConfig::validate() const {
    if (s_text < 0.0 || s_motion < 0.0)
        throw ConfigError("guidance config: scales must be >= 0");
    if (p_drop_text < 0.0 || p_drop_both < 0.0 || p_drop_text + p_drop_both > 1.0)
        throw ConfigError("guidance config: dropout probabilities must be in [0,1] and sum to <= 1");
}

namespace {

void check_timestep(int timestep, const NoiseSchedule& sched) {
    if (timestep < 0 || timestep >= sched.steps)
        throw InputError("diffusion: timestep out of range");
}

}  // namespace

Eigen::MatrixXd forward_noise(const Eigen::MatrixXd& m0, int timestep,
                              const Eigen::MatrixXd& eps, const NoiseSchedule& sched) {
    check_timestep(timestep, sched);
    if (m0.rows() != eps.rows() || m0.cols() != eps.cols())
        throw InputError("forward_noise: noise shape does not match the clean motion");
    const double ab = sched.alpha_bar[timestep];
    return std::sqrt(ab) * m0 + std::sqrt(1.0 - ab) * eps;
}

Eigen::MatrixXd reconstruct_x0(const Eigen::MatrixXd& mt, int timestep,
                               const Eigen::MatrixXd& eps, const NoiseSchedule& sched) {
    check_timestep(timestep, sched);
    if (mt.rows() != eps.rows() || mt.cols() != eps.cols())
        throw InputError("reconstruct_x0: noise shape does not match the noised motion");
    const double ab = sched.alpha_bar[timestep];
    if (ab == 0.0) throw NumericalError("reconstruct_x0: alpha_bar is zero at this step");
    return (mt - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
}

double editing_loss(const Eigen::MatrixXd& m0, const Eigen::MatrixXd& predicted) {
    if (m0.rows() != predicted.rows() || m0.cols() != predicted.cols())
        throw InputError("editing_loss: shape mismatch");
    return (m0 - predicted).squaredNorm() / static_cast<double>(m0.size());
}

double auxiliary_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != logits.rows())
        throw InputError("auxiliary_loss: label count != logit rows");
    const int k = static_cast<int>(logits.cols());
    double loss = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const int y = labels[static_cast<std::size_t>(r)];
        if (y < 0 || y >= k) throw InputError("auxiliary_loss: label out of range");
        const double m = logits.row(r).maxCoeff();
        const double lse = std::log((logits.row(r).array() - m).exp().sum());
        loss -= logits(r, y) - m - lse;
    }
    return loss / static_cast<double>(logits.rows());
}

double total_loss(double editing, double auxiliary) { return editing + auxiliary; }

Eigen::MatrixXd compose_guidance(const Eigen::MatrixXd& e_uncond, const Eigen::MatrixXd& e_src,
                                 const Eigen::MatrixXd& e_full, double s_motion, double s_text) {
    if (s_motion == 1.0 && s_text == 1.0) return e_full;
    if (s_motion == 0.0 && s_text == 0.0) return e_uncond;
    return e_uncond + s_motion * (e_src - e_uncond) + s_text * (e_full - e_src);
}

Eigen::MatrixXd guided_sample_with(const DenoiseFn& denoise, int frames, int feature_dim,
                                   const NoiseSchedule& sched, const GuidanceConfig& guidance,
                                   Rng& rng) {
    guidance.validate();
    if (frames < 1 || feature_dim < 1)
        throw InputError("guided_sample: frames and feature_dim must be >= 1");

    const bool need_uncond = !(guidance.s_motion == 1.0 && guidance.s_text == 1.0);
    const bool need_src = need_uncond && !(guidance.s_motion == 0.0 && guidance.s_text == 0.0);
    const bool need_full = !(guidance.s_motion == 0.0 && guidance.s_text == 0.0);

    Eigen::MatrixXd x = rng.gaussian_matrix(frames, feature_dim);
    for (int t = sched.steps - 1; t >= 0; --t) {
        Eigen::MatrixXd e_full, e_src, e_uncond;
        if (need_full) e_full = denoise(x, t, GuidanceBranch::kFull);
        if (need_src) e_src = denoise(x, t, GuidanceBranch::kSourceOnly);
        if (need_uncond) e_uncond = denoise(x, t, GuidanceBranch::kUnconditional);
        Eigen::MatrixXd x0;
        if (!need_uncond)
            x0 = std::move(e_full);
        else if (!need_full)
            x0 = std::move(e_uncond);
        else
            x0 = compose_guidance(e_uncond, e_src, e_full, guidance.s_motion, guidance.s_text);

        Eigen::MatrixXd mean = sched.posterior_coef_x0[t] * x0 + sched.posterior_coef_xt[t] * x;
        if (t > 0) {
            const double sigma = std::sqrt(sched.posterior_variance[t]);
            mean += sigma * rng.gaussian_matrix(frames, feature_dim);
        }
        x = std::move(mean);
    }
    return x;
}

MotionSequence guided_sample(const MotionSequence& source, const TextFeatures& text,
                             ModelBundle& bundle, const NoiseSchedule& sched,
                             const GuidanceConfig& guidance, int out_frames, Rng& rng) {
    source.validate();
    if (out_frames > bundle.config.max_frames)
        throw CapacityError("guided_sample: requested length exceeds max_frames");

    // The three condition branches do not depend on t; compute them once.
    ConditionOutput full = condition_forward_dropped(&source, &text, bundle);
    ConditionOutput src_only = condition_forward_dropped(&source, nullptr, bundle);
    ConditionOutput uncond = condition_forward_dropped(nullptr, nullptr, bundle);

    DenoiseFn denoise = [&](const Eigen::MatrixXd& noised, int t, GuidanceBranch branch) {
        const ConditionOutput& cond = branch == GuidanceBranch::kFull      ? full
                                      : branch == GuidanceBranch::kSourceOnly ? src_only
                                                                              : uncond;
        return diffusion_forward(noised, t, sched.steps, cond, bundle);
    };

    MotionSequence out;
    out.frames = guided_sample_with(denoise, out_frames, bundle.config.feature_dim, sched,
                                    guidance, rng);
    out.layout = source.layout;
    out.frame_rate = source.frame_rate;
    return out;
}

int sample_condition_dropout(const GuidanceConfig& guidance, Rng& rng) {
    const double u = rng.uniform();
    if (u < guidance.p_drop_both) return 2;
    if (u < guidance.p_drop_both + guidance.p_drop_text) return 1;
    return 0;
}

}  // namespace medit
