#include "hdp/diffusion.hpp"

#include "hdp/errors.hpp"

#include <cmath>

namespace hdp {

namespace {

void check_step(int i, const NoiseSchedule& sched, const char* what) {
    if (i < 1 || i > sched.n_steps())
        throw ConfigError(std::string(what) + ": step index out of range");
}

}  // namespace

PosteriorCoeffs posterior_coeffs(int i, const NoiseSchedule& sched) {
    check_step(i, sched, "posterior_coeffs");
    const double beta = sched.beta(i);
    const double alpha = sched.alpha(i);
    const double bar_prev = sched.alpha_bar(i - 1);
    const double bar = sched.alpha_bar(i);
    const double sqrt_alpha = std::sqrt(alpha);
    const double sqrt_bar_prev = std::sqrt(bar_prev);
    const double denom = 1.0 - bar;

    PosteriorCoeffs c;
    c.c0 = sqrt_bar_prev * beta / denom;
    c.ci = sqrt_alpha * (1.0 - bar_prev) / denom;
    c.eta = (beta * (1.0 - sqrt_bar_prev) -
             sqrt_alpha * (1.0 - bar_prev) * (1.0 - sqrt_alpha)) /
            denom;
    // The harmonic form is singular at i = 1 (alpha_bar(0) = 1); the limit is 0,
    // which makes the final reverse step deterministic.
    c.beta_tilde = (i == 1) ? 0.0 : 1.0 / (alpha / (1.0 - alpha) + 1.0 / (1.0 - bar_prev));
    return c;
}

ForwardMarginal forward_marginal(const Eigen::VectorXd& tau0, int i,
                                 const StructuredPrior& prior, const NoiseSchedule& sched) {
    check_step(i, sched, "forward_marginal");
    const double sqrt_bar = std::sqrt(sched.alpha_bar(i));
    ForwardMarginal fm;
    fm.mean = sqrt_bar * tau0 + (1.0 - sqrt_bar) * prior.mean();
    fm.cov_scale = 1.0 - sched.alpha_bar(i);
    return fm;
}

Eigen::VectorXd forward_sample(const Eigen::VectorXd& tau0, int i, const StructuredPrior& prior,
                               const NoiseSchedule& sched, Rng& rng) {
    ForwardMarginal fm = forward_marginal(tau0, i, prior, sched);
    if (fm.cov_scale <= 0.0) return fm.mean;
    return fm.mean + std::sqrt(fm.cov_scale) * (prior.chol() * rng.normal_vector(tau0.size()));
}

Eigen::VectorXd true_posterior_mean(const Eigen::VectorXd& tau_i, const Eigen::VectorXd& tau0,
                                    int i, const StructuredPrior& prior,
                                    const NoiseSchedule& sched) {
    const PosteriorCoeffs c = posterior_coeffs(i, sched);
    return c.c0 * tau0 + c.ci * tau_i + c.eta * prior.mean();
}

Eigen::VectorXd reverse_step(const Eigen::VectorXd& tau_i, int i,
                             const Eigen::VectorXd& pred_mean, const StructuredPrior& prior,
                             const NoiseSchedule& sched, Rng& rng) {
    check_step(i, sched, "reverse_step");
    if (pred_mean.size() != tau_i.size())
        throw ConfigError("reverse_step: predicted mean has wrong size");
    const PosteriorCoeffs c = posterior_coeffs(i, sched);
    if (i == 1 || c.beta_tilde <= 0.0) return pred_mean;
    return pred_mean +
           std::sqrt(c.beta_tilde) * (prior.chol() * rng.normal_vector(tau_i.size()));
}

}  // namespace hdp
