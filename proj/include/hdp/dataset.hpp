#pragma once

#include "hdp/maze.hpp"
#include "hdp/trajectory.hpp"

#include <Eigen/Core>
#include <string>
#include <vector>

namespace hdp {

/// Per-dimension affine normalization x' = (x - center) / scale.
/// Position dimensions share one scale and velocity dimensions share another
/// (velocities keep a zero center), so the constant-velocity relation
/// p[t+1] = p[t] + dt * v[t] survives normalization with an adjusted step
/// dt' = dt * velocity_scale / position_scale. Constant dimensions map
/// through unchanged.
struct NormStats {
    Eigen::VectorXd center;
    Eigen::VectorXd scale;
};

NormStats compute_norm_stats(const std::vector<Trajectory>& trajectories);

Trajectory normalize_trajectory(const Trajectory& traj, const NormStats& stats);
Trajectory denormalize_trajectory(const Trajectory& traj, const NormStats& stats);

/// Time step of the normalized-space constant-velocity model.
double normalized_dt(const NormStats& stats, double dt);

/// Expert trajectories with their tasks and the normalization statistics
/// computed at generation time.
struct Dataset {
    int horizon = 0;
    double dt = 0.1;
    std::string maze_id = "default";
    std::vector<Trajectory> trajectories;  ///< world units
    std::vector<TaskSpec> tasks;
    NormStats stats;

    std::size_t size() const { return trajectories.size(); }
    void validate() const;
};

/// Recomputes statistics and returns a copy with normalized trajectories.
Dataset normalize(const Dataset& dataset);

/// Text format: versioned header, stats, then one record per trajectory
/// (task line followed by horizon rows of state floats). The binary layout
/// holds the same content. load() sniffs the format from the magic bytes.
void save_dataset(const Dataset& dataset, const std::string& path, bool binary = false);
Dataset load_dataset(const std::string& path);

}  // namespace hdp
