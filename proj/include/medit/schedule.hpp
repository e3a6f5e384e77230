#pragma once

#include <Eigen/Dense>

#include "medit/errors.hpp"

namespace medit {

// DDPM noise schedule in the cumulative-product parameterization, with the
// posterior coefficients needed for x0-parameterized sampling. alpha_bar[t]
// uses the convention alpha_bar[-1] = 1 for the posterior at t = 0.
struct NoiseSchedule {
    int steps = 0;                        // T
    Eigen::VectorXd alpha_bar;            // strictly decreasing, in (0, 1)
    Eigen::VectorXd beta;                 // per-step noise rates
    Eigen::VectorXd alpha;                // 1 - beta
    Eigen::VectorXd posterior_coef_x0;    // weight on predicted x0 in the posterior mean
    Eigen::VectorXd posterior_coef_xt;    // weight on x_t in the posterior mean
    Eigen::VectorXd posterior_variance;   // variance of q(x_{t-1} | x_t, x0)

    void validate() const;

    // Cosine schedule: alpha_bar_t = f(t+1)/f(0), f(u) = cos^2(((u/T + s)/(1 + s)) * pi/2)
    // with s = 0.008, derived betas clamped to at most 0.999.
    static NoiseSchedule cosine(int steps);

    // Explicit table (tests / custom schedules); derives betas and posteriors.
    static NoiseSchedule from_alpha_bar(Eigen::VectorXd alpha_bar);
};

}  // namespace medit
