#include "hdp/schedule.hpp"

#include "hdp/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hdp {

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "linear") return ScheduleKind::linear;
    if (s == "cosine") return ScheduleKind::cosine;
    throw ConfigError("unknown schedule kind: " + s);
}

std::string to_string(ScheduleKind kind) {
    return kind == ScheduleKind::linear ? "linear" : "cosine";
}

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.size() < 2) throw ConfigError("NoiseSchedule: need at least 2 steps");
    alphas_.resize(betas_.size());
    alpha_bars_.resize(betas_.size() + 1);
    alpha_bars_[0] = 1.0;
    for (std::size_t k = 0; k < betas_.size(); ++k) {
        if (!(betas_[k] > 0.0 && betas_[k] < 1.0))
            throw ConfigError("NoiseSchedule: betas must lie in (0, 1)");
        alphas_[k] = 1.0 - betas_[k];
        alpha_bars_[k + 1] = alpha_bars_[k] * alphas_[k];
        if (!(alpha_bars_[k + 1] < alpha_bars_[k]))
            throw ConfigError("NoiseSchedule: alpha_bar must be strictly decreasing");
    }
}

NoiseSchedule make_schedule(ScheduleKind kind, int n_steps, double beta_min, double beta_max) {
    if (n_steps < 2) throw ConfigError("make_schedule: n_steps must be >= 2");
    std::vector<double> betas(n_steps);
    if (kind == ScheduleKind::linear) {
        if (!(beta_min > 0.0 && beta_min < 1.0 && beta_max > 0.0 && beta_max < 1.0))
            throw ConfigError("make_schedule: beta bounds must lie in (0, 1)");
        if (beta_min > beta_max)
            throw ConfigError("make_schedule: beta_min must not exceed beta_max");
        for (int i = 0; i < n_steps; ++i)
            betas[i] = beta_min + (beta_max - beta_min) * i / static_cast<double>(n_steps - 1);
    } else {
        // Squared-cosine alpha_bar profile with small offset.
        const double s = 0.008;
        auto profile = [&](double step) {
            const double x = (step / n_steps + s) / (1.0 + s) * M_PI / 2.0;
            const double c = std::cos(x);
            return c * c;
        };
        const double f0 = profile(0.0);
        double prev_bar = 1.0;
        for (int i = 1; i <= n_steps; ++i) {
            const double bar = profile(static_cast<double>(i)) / f0;
            double beta = 1.0 - bar / prev_bar;
            beta = std::clamp(beta, 1e-8, 0.999);
            betas[i - 1] = beta;
            prev_bar *= 1.0 - beta;
        }
    }
    return NoiseSchedule(std::move(betas));
}

}  // namespace hdp
