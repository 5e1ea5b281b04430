#include "hdp/gp_prior.hpp"

#include "hdp/errors.hpp"

#include <string>

namespace hdp {

void LtvModel::validate() const {
    if (!(dt >= 0.0)) throw ConfigError("LtvModel: dt must be >= 0");
    if (d_pos < 1) throw ConfigError("LtvModel: d_pos must be >= 1");
    if (!(q_c >= 0.0)) throw ConfigError("LtvModel: q_c must be >= 0");
    const int d = state_dim();
    if (mu0.size() != 0 && mu0.size() != d)
        throw ConfigError("LtvModel: mu0 must be empty or of length " + std::to_string(d));
    if (k0.size() != 0) {
        if (k0.rows() != d || k0.cols() != d)
            throw ConfigError("LtvModel: k0 must be empty or " + std::to_string(d) + " square");
        if ((k0 - k0.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw ConfigError("LtvModel: k0 must be symmetric");
    }
}

Eigen::MatrixXd transition_matrix(const LtvModel& model) {
    model.validate();
    const int p = model.d_pos;
    Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(2 * p, 2 * p);
    phi.topRightCorner(p, p) = model.dt * Eigen::MatrixXd::Identity(p, p);
    return phi;
}

Eigen::MatrixXd process_noise(const LtvModel& model) {
    model.validate();
    const int p = model.d_pos;
    const double dt = model.dt;
    Eigen::MatrixXd q(2 * p, 2 * p);
    q.setZero();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(p, p);
    q.topLeftCorner(p, p) = (dt * dt * dt / 3.0) * model.q_c * id;
    q.topRightCorner(p, p) = (dt * dt / 2.0) * model.q_c * id;
    q.bottomLeftCorner(p, p) = (dt * dt / 2.0) * model.q_c * id;
    q.bottomRightCorner(p, p) = dt * model.q_c * id;
    return q;
}

GpPrior build_gp_prior(const LtvModel& model, int horizon, int max_rows) {
    model.validate();
    if (horizon < 2) throw ConfigError("build_gp_prior: horizon must be >= 2");
    const int d = model.state_dim();
    const long rows = static_cast<long>(horizon) * d;
    if (rows > max_rows)
        throw ConfigError("build_gp_prior: horizon*state_dim = " + std::to_string(rows) +
                          " exceeds the dense-matrix budget of " + std::to_string(max_rows));

    const Eigen::MatrixXd phi = transition_matrix(model);
    const Eigen::MatrixXd q = process_noise(model);
    const Eigen::VectorXd mu0 =
        model.mu0.size() ? model.mu0 : Eigen::VectorXd::Zero(d);
    const Eigen::MatrixXd k0 =
        model.k0.size() ? model.k0 : Eigen::MatrixXd::Zero(d, d);

    GpPrior prior;
    prior.horizon = horizon;
    prior.state_dim = d;
    prior.mean.resize(rows);
    prior.cov.resize(rows, rows);

    // Mean: mu_t = Phi^t mu0 (no control input).
    Eigen::VectorXd m = mu0;
    for (int t = 0; t < horizon; ++t) {
        prior.mean.segment(t * d, d) = m;
        m = phi * m;
    }

    // Marginals P_t, then cross blocks cov(t, t') = P_t Phi^(t'-t)' for t <= t'.
    std::vector<Eigen::MatrixXd> marginal(horizon);
    marginal[0] = k0;
    for (int t = 1; t < horizon; ++t)
        marginal[t] = phi * marginal[t - 1] * phi.transpose() + q;

    for (int t = 0; t < horizon; ++t) {
        Eigen::MatrixXd block = marginal[t];
        prior.cov.block(t * d, t * d, d, d) = block;
        for (int u = t + 1; u < horizon; ++u) {
            block = block * phi.transpose();
            prior.cov.block(t * d, u * d, d, d) = block;
            prior.cov.block(u * d, t * d, d, d) = block.transpose();
        }
    }
    return prior;
}

}  // namespace hdp
