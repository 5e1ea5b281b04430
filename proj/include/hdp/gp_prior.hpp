#pragma once

#include <Eigen/Core>

namespace hdp {

/// Discrete constant-velocity motion model with white-noise acceleration.
/// State per step is [position; velocity], each of dimension d_pos.
struct LtvModel {
    double dt = 0.1;       ///< time step, seconds
    int d_pos = 2;         ///< position dimension
    double q_c = 1.0;      ///< spectral density of the acceleration noise
    Eigen::VectorXd mu0;   ///< initial state mean, length 2*d_pos (empty = zero)
    Eigen::MatrixXd k0;    ///< initial state covariance, 2*d_pos square (empty = zero)

    int state_dim() const { return 2 * d_pos; }

    /// Throws ConfigError on dt < 0, q_c < 0, bad shapes, or asymmetric k0.
    void validate() const;
};

/// Unconditioned trajectory-level Gaussian induced by an LtvModel: stacked
/// mean over the horizon and the dense joint covariance across all steps.
struct GpPrior {
    Eigen::VectorXd mean;  ///< length horizon*state_dim
    Eigen::MatrixXd cov;   ///< horizon*state_dim square, symmetric PSD
    int horizon = 0;
    int state_dim = 0;
};

/// One-step state transition [[I, dt I], [0, I]].
Eigen::MatrixXd transition_matrix(const LtvModel& model);

/// One-step process noise q_c * [[dt^3/3 I, dt^2/2 I], [dt^2/2 I, dt I]].
Eigen::MatrixXd process_noise(const LtvModel& model);

/// Assembles the joint prior over `horizon` steps by forward recursion:
/// marginal P_{t+1} = Phi P_t Phi' + Q, cross-block cov(t,t') = P_t Phi^(t'-t)'.
/// Rejects horizon*state_dim above max_rows (dense storage budget).
GpPrior build_gp_prior(const LtvModel& model, int horizon, int max_rows = 4096);

/// Relative jitter used before factoring trajectory covariances.
inline double jitter_for(const Eigen::MatrixXd& cov) {
    return 1e-9 * cov.trace() / static_cast<double>(cov.rows()) + 1e-12;
}

}  // namespace hdp
