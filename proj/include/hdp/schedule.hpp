#pragma once

#include <string>
#include <vector>

namespace hdp {

enum class ScheduleKind { linear, cosine };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind kind);

/// Variance schedule for N diffusion steps. Step indices are 1-based to match
/// the usual convention; alpha_bar(0) == 1 by definition.
class NoiseSchedule {
public:
    NoiseSchedule(std::vector<double> betas);

    int n_steps() const { return static_cast<int>(betas_.size()); }
    double beta(int i) const { return betas_[i - 1]; }
    double alpha(int i) const { return alphas_[i - 1]; }
    /// Cumulative product of alphas; valid for i in [0, N].
    double alpha_bar(int i) const { return alpha_bars_[i]; }

    const std::vector<double>& betas() const { return betas_; }

private:
    std::vector<double> betas_;
    std::vector<double> alphas_;
    std::vector<double> alpha_bars_;  // length N+1, [0] = 1
};

/// linear: beta interpolates [beta_min, beta_max] over steps 1..N.
/// cosine: alpha_bar follows the squared-cosine profile, betas clipped to
/// (0, 0.999]; beta_min/beta_max are ignored.
NoiseSchedule make_schedule(ScheduleKind kind, int n_steps, double beta_min = 1e-4,
                            double beta_max = 0.02);

}  // namespace hdp
