#include "medit/schedule.hpp"

#include <cmath>

namespace medit {

void NoiseSchedule::validate() const {
    if (steps < 1) throw ConfigError("noise schedule: needs at least one step");
    if (alpha_bar.size() != steps) throw ConfigError("noise schedule: table length != steps");
    double prev = 1.0;
    for (int t = 0; t < steps; ++t) {
        const double a = alpha_bar[t];
        if (!(a > 0.0 && a < 1.0))
            throw ConfigError("noise schedule: alpha_bar must lie in (0, 1)");
        if (!(a < prev)) throw ConfigError("noise schedule: alpha_bar must strictly decrease");
        prev = a;
    }
}

NoiseSchedule NoiseSchedule::from_alpha_bar(Eigen::VectorXd alpha_bar) {
    NoiseSchedule s;
    s.steps = static_cast<int>(alpha_bar.size());
    s.alpha_bar = std::move(alpha_bar);
    s.beta.resize(s.steps);
    s.alpha.resize(s.steps);
    s.posterior_coef_x0.resize(s.steps);
    s.posterior_coef_xt.resize(s.steps);
    s.posterior_variance.resize(s.steps);
    for (int t = 0; t < s.steps; ++t) {
        const double prev = t > 0 ? s.alpha_bar[t - 1] : 1.0;
        s.alpha[t] = s.alpha_bar[t] / prev;
        s.beta[t] = 1.0 - s.alpha[t];
        const double denom = 1.0 - s.alpha_bar[t];
        s.posterior_coef_x0[t] = std::sqrt(prev) * s.beta[t] / denom;
        s.posterior_coef_xt[t] = std::sqrt(s.alpha[t]) * (1.0 - prev) / denom;
        s.posterior_variance[t] = (1.0 - prev) / denom * s.beta[t];
    }
    return s;
}

NoiseSchedule NoiseSchedule::cosine(int steps) {
    if (steps < 1) throw ConfigError("noise schedule: steps must be >= 1");
    constexpr double kOffset = 0.008;
    constexpr double kMaxBeta = 0.999;
    auto f = [steps](double u) {
        const double x = ((u / steps + kOffset) / (1.0 + kOffset)) * M_PI / 2.0;
        const double c = std::cos(x);
        return c * c;
    };
    const double f0 = f(0.0);

    Eigen::VectorXd alpha_bar(steps);
    double running = 1.0;
    for (int t = 0; t < steps; ++t) {
        const double raw = f(static_cast<double>(t + 1)) / f0;
        double beta = 1.0 - raw / running;
        beta = std::min(beta, kMaxBeta);
        running *= 1.0 - beta;
        alpha_bar[t] = running;
    }
    NoiseSchedule s = from_alpha_bar(std::move(alpha_bar));
    s.validate();
    return s;
}

}  // namespace medit
