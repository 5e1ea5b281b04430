#pragma once

#include "hdp/rng.hpp"
#include "hdp/trajectory.hpp"

#include <Eigen/Core>
#include <string>
#include <vector>

namespace hdp {

/// Occupancy-grid maze. Cell (cx, cy) covers the world square
/// [cx*cell_size, (cx+1)*cell_size) x [cy*cell_size, (cy+1)*cell_size).
/// Everything outside the grid counts as occupied.
struct MazeMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> cells;  ///< row-major y*width+x, 1 = wall
    double cell_size = 1.0;
    std::string name = "default";

    bool occupied(int cx, int cy) const {
        if (cx < 0 || cy < 0 || cx >= width || cy >= height) return true;
        return cells[static_cast<std::size_t>(cy) * width + cx] != 0;
    }
    bool free_world(double wx, double wy) const {
        return !occupied(static_cast<int>(std::floor(wx / cell_size)),
                         static_cast<int>(std::floor(wy / cell_size)));
    }
    Eigen::Vector2d cell_center(int cx, int cy) const {
        return {(cx + 0.5) * cell_size, (cy + 0.5) * cell_size};
    }
    std::pair<int, int> world_to_cell(double wx, double wy) const {
        return {static_cast<int>(std::floor(wx / cell_size)),
                static_cast<int>(std::floor(wy / cell_size))};
    }
    int free_cell_count() const;

    /// Throws ConfigError unless the border is fully occupied and at least
    /// two cells are free.
    void validate() const;

    /// Built-in 7x7 map with two interior wall bars; multimodal routes.
    static MazeMap default_map(double cell_size = 1.0);

    std::string serialize() const;
    static MazeMap parse(const std::string& text);
    void save(const std::string& path) const;
    static MazeMap load(const std::string& path);
};

/// Start state (position + velocity) and goal position on a named maze.
struct TaskSpec {
    Eigen::Vector4d start = Eigen::Vector4d::Zero();
    Eigen::Vector2d goal = Eigen::Vector2d::Zero();
    std::string maze_id = "default";
};

/// True iff every segment between consecutive positions, sampled at substeps
/// of at most cell_size/4, stays in free cells.
bool collision_free(const MazeMap& map, const Trajectory& traj);

/// Uniform draw over free cells with start != goal and a minimum cell
/// distance; start velocity is zero, positions are cell centers.
TaskSpec sample_task(const MazeMap& map, Rng& rng, double min_cell_distance = 3.0);

/// A* over the free-cell graph, arc-length resampling to the horizon with a
/// smooth-step speed profile, low-pass smoothing with collision fallback.
/// Velocities are finite differences of the final positions. Throws
/// UnreachableError when no path exists.
Trajectory generate_expert(const MazeMap& map, const TaskSpec& task, int horizon, double dt,
                           Rng& rng);

}  // namespace hdp
