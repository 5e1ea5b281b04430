#pragma once

#include "hdp/rng.hpp"
#include "hdp/schedule.hpp"
#include "hdp/structured_prior.hpp"

#include <Eigen/Core>

namespace hdp {

/// Coefficients of the one-step reverse posterior
///   N(c0 * tau0 + ci * tau_i + eta * prior_mean, beta_tilde * prior_cov).
/// c0 + ci + eta == 1 for every step; beta_tilde(1) == 0, so the final
/// reverse step is deterministic.
struct PosteriorCoeffs {
    double c0 = 0.0;
    double ci = 0.0;
    double eta = 0.0;
    double beta_tilde = 0.0;
};

PosteriorCoeffs posterior_coeffs(int i, const NoiseSchedule& sched);

/// Closed-form corruption marginal after i steps: the mean, plus the scalar
/// that multiplies the prior covariance.
struct ForwardMarginal {
    Eigen::VectorXd mean;
    double cov_scale = 0.0;
};

ForwardMarginal forward_marginal(const Eigen::VectorXd& tau0, int i,
                                 const StructuredPrior& prior, const NoiseSchedule& sched);

/// Draws from the step-i marginal using the prior's Cholesky factor.
Eigen::VectorXd forward_sample(const Eigen::VectorXd& tau0, int i, const StructuredPrior& prior,
                               const NoiseSchedule& sched, Rng& rng);

/// Exact posterior mean given both endpoints of the corruption chain.
Eigen::VectorXd true_posterior_mean(const Eigen::VectorXd& tau_i, const Eigen::VectorXd& tau0,
                                    int i, const StructuredPrior& prior,
                                    const NoiseSchedule& sched);

/// One reverse transition: N(pred_mean, beta_tilde(i) * prior_cov). Returns
/// pred_mean exactly when i == 1.
Eigen::VectorXd reverse_step(const Eigen::VectorXd& tau_i, int i,
                             const Eigen::VectorXd& pred_mean, const StructuredPrior& prior,
                             const NoiseSchedule& sched, Rng& rng);

}  // namespace hdp
