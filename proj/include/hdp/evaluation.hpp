#pragma once

#include "hdp/hierarchy.hpp"
#include "hdp/maze.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hdp {

/// A plan succeeds when the final position lies within the tolerance radius
/// of the goal and the whole trajectory is collision-free.
bool success(const MazeMap& map, const Trajectory& traj, const TaskSpec& task, double tolerance);

/// Mean absolute error between stored velocities and finite differences of
/// positions: mean over t = 0..H-2 and both coordinates of
/// |v_t - (p_{t+1} - p_t) / dt|.
double velocity_mae(const Trajectory& traj, double dt);

struct EpisodeRecord {
    TaskSpec task;
    bool succeeded = false;
    bool collision_free = false;
    double goal_distance = 0.0;
    double velocity_mae = 0.0;
};

/// Published reference statistics per variant (success out of 100, velocity
/// MAE), recorded alongside our runs for orientation, not as a gate.
struct ReferenceStats {
    int success_count = 0;
    double velocity_mae = 0.0;
};
ReferenceStats reference_stats(VariantKind kind);

struct VariantResult {
    VariantKind kind = VariantKind::iso_plain;
    int success_count = 0;
    double mean_velocity_mae = 0.0;
    std::vector<EpisodeRecord> episodes;
};

struct EvalReport {
    int episodes = 0;
    std::uint64_t seed = 0;
    double goal_tolerance = 0.0;
    std::vector<VariantResult> variants;

    std::string to_table() const;
    /// One record per variant per metric: variant,metric,value,reference.
    std::string to_csv() const;
};

/// Trained networks for the ablation grid.
struct AblationModels {
    const DenoiserParams* upper = nullptr;
    std::map<VariantKind, const DenoiserParams*> lower;
};

/// Paired evaluation: every variant plans the same task list; episode seeds
/// derive from (seed, episode) only, so variants also share noise streams.
EvalReport run_ablation(const PlannerContext& ctx, const AblationModels& models, int episodes,
                        std::uint64_t seed, double goal_tolerance,
                        const std::vector<VariantKind>& kinds = all_variants());

}  // namespace hdp
