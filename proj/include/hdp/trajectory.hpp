#pragma once

#include <Eigen/Core>

namespace hdp {

/// A trajectory is an H x d matrix: one state per row, [px py vx vy] for the
/// planar double-integrator case. Stacked form is the length-H*d vector with
/// index t*d + j.
using Trajectory = Eigen::MatrixXd;

inline Eigen::VectorXd stack_trajectory(const Trajectory& traj) {
    const Eigen::Index h = traj.rows(), d = traj.cols();
    Eigen::VectorXd v(h * d);
    for (Eigen::Index t = 0; t < h; ++t)
        for (Eigen::Index j = 0; j < d; ++j) v[t * d + j] = traj(t, j);
    return v;
}

inline Trajectory unstack_trajectory(const Eigen::VectorXd& v, Eigen::Index horizon,
                                     Eigen::Index state_dim) {
    Trajectory traj(horizon, state_dim);
    for (Eigen::Index t = 0; t < horizon; ++t)
        for (Eigen::Index j = 0; j < state_dim; ++j) traj(t, j) = v[t * state_dim + j];
    return traj;
}

}  // namespace hdp
