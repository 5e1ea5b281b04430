#pragma once

#include "hdp/maze.hpp"
#include "hdp/trajectory.hpp"

#include <string>
#include <vector>

namespace hdp {

/// Entry point for the hdplan tool. Returns the process exit code:
/// 0 success, 1 usage/config error, 2 runtime failure.
int run_cli(const std::vector<std::string>& args);

/// Plan output file: versioned text with the task line and one state row per
/// timestep.
void save_trajectory_file(const Trajectory& traj, const TaskSpec& task, double dt,
                          const std::string& path);

struct TrajectoryFile {
    Trajectory trajectory;
    TaskSpec task;
    double dt = 0.1;
};

TrajectoryFile load_trajectory_file(const std::string& path);

}  // namespace hdp
