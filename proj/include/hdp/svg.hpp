#pragma once

#include "hdp/hierarchy.hpp"
#include "hdp/maze.hpp"
#include "hdp/trajectory.hpp"

#include <string>
#include <utility>
#include <vector>

namespace hdp {

/// One rendered panel: a maze with an optional trajectory and waypoint
/// markers. Multi-panel figures lay panels out left to right (used for
/// denoising-progress snapshots).
struct PlotPanel {
    std::string title;
    const Trajectory* trajectory = nullptr;              ///< world units, optional
    std::vector<Eigen::Vector2d> waypoints;              ///< world units
    Eigen::Vector2d start = Eigen::Vector2d::Zero();
    Eigen::Vector2d goal = Eigen::Vector2d::Zero();
    bool mark_endpoints = false;
};

std::string render_svg(const MazeMap& map, const std::vector<PlotPanel>& panels,
                       double pixels_per_cell = 48.0);

void write_svg(const std::string& svg, const std::string& path);

}  // namespace hdp
