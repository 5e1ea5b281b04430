#pragma once

#include "hdp/dataset.hpp"
#include "hdp/denoiser.hpp"
#include "hdp/gp_prior.hpp"
#include "hdp/maze.hpp"
#include "hdp/schedule.hpp"
#include "hdp/structured_prior.hpp"

#include <Eigen/Core>
#include <string>
#include <vector>

namespace hdp {

/// Observation noise by waypoint role: trajectory endpoints are trusted far
/// more than interior waypoints.
struct ObservationConfig {
    double endpoint_var = 1e-6;
    double interior_var = 1e-2;
};

/// Evenly spaced waypoint timings over the horizon, endpoints included by
/// default. Timings are fixed per configuration; only the waypoint values
/// vary across tasks.
struct WaypointSpec {
    int n_waypoints = 6;
    bool include_endpoints = true;

    /// Round-half-up linear spacing over [0, horizon-1].
    std::vector<int> timesteps(int horizon) const;
    int value_dim() const { return 2 * n_waypoints; }  ///< positions only
};

/// Ground-truth key states of a (normalized) trajectory: waypoint positions
/// at the spec's timesteps with role-dependent observation noise.
KeyStateObservation extract_keystates(const Trajectory& traj, const WaypointSpec& spec,
                                      const ObservationConfig& obs_cfg);

/// Full start state as a single tight observation at t = 0.
KeyStateObservation start_state_observation(const Eigen::Vector4d& normalized_start,
                                            const ObservationConfig& obs_cfg);

enum class VariantKind { iso_plain, iso_cond, gp_plain, gp_keystates };

VariantKind variant_from_string(const std::string& s);
std::string to_string(VariantKind kind);
std::vector<VariantKind> all_variants();

/// The 2x2 ablation grid: isotropic vs GP-shaped noise, with vs without
/// upper-level key states. Isotropic variants inpaint the endpoints after
/// every reverse step (flat-planner behavior); GP variants never inpaint,
/// endpoints enter as tight soft observations instead.
struct VariantConfig {
    VariantKind kind = VariantKind::iso_plain;
    bool gp_noise = false;
    bool use_keystates = false;
    bool inpaint_endpoints = false;
    CondMode cond_mode = CondMode::none;

    static VariantConfig make(VariantKind kind);
    std::string name() const { return to_string(kind); }
};

/// Static context shared by training and planning: maze, normalization,
/// waypoint timings, the normalized-space GP prior, gain cache, schedule.
struct PlannerContext {
    const MazeMap* map = nullptr;
    NormStats stats;
    double dt = 0.1;
    int horizon = 0;
    WaypointSpec waypoints;
    ObservationConfig obs_cfg;
    const GpPrior* gp = nullptr;
    GainCache* cache = nullptr;
    const NoiseSchedule* sched = nullptr;
    Parameterization parameterization = Parameterization::predict_data;
};

/// Conditioning layout for lower-level networks: flattened waypoint
/// positions (zero-padded) followed by a per-timestep key-state mask. The
/// channel exists in every variant; unconditioned modes feed zeros.
int lower_cond_dim(const WaypointSpec& spec, int horizon);
Eigen::VectorXd lower_cond_vector(const KeyStateObservation& obs, const WaypointSpec& spec,
                                  int horizon);

/// Upper-level conditioning: normalized start state and goal position.
Eigen::VectorXd upper_cond_vector(const TaskSpec& task, const NormStats& stats);
constexpr int kUpperCondDim = 6;

Eigen::Vector4d normalize_state(const Eigen::Vector4d& state, const NormStats& stats);
Eigen::Vector2d normalize_position(const Eigen::Vector2d& position, const NormStats& stats);

/// Normalized-space constant-velocity GP prior matching the dataset.
GpPrior build_normalized_gp(const Dataset& dataset, double q_c, double sigma0,
                            int max_rows = 4096);

/// Isotropic reverse diffusion over the flattened waypoint vector,
/// conditioned on (start, goal); endpoint waypoints are overwritten with the
/// task's start/goal positions after every step.
KeyStateObservation upper_sample(const DenoiserParams& upper, const TaskSpec& task,
                                 const PlannerContext& ctx, Rng& rng);

/// Optional instrumentation of a planning run.
struct PlanTrace {
    std::vector<int> snapshot_steps;                     ///< in: which i to record
    std::vector<std::pair<int, Trajectory>> snapshots;   ///< out: world units
    int denoiser_evals = 0;
    Eigen::VectorXd prior_mean;                          ///< normalized, stacked
    bool has_keystates = false;
    KeyStateObservation keystates;                       ///< normalized
};

/// Full test-time pipeline: upper level (when the variant uses key states),
/// prior construction through the gain cache, terminal sample, reverse loop.
/// Returns the trajectory in world units.
Trajectory plan(const TaskSpec& task, const VariantConfig& variant, const DenoiserParams& upper,
                const DenoiserParams& lower, const PlannerContext& ctx, Rng& rng,
                PlanTrace* trace = nullptr);

DenoiserParams init_upper_params(const WaypointSpec& spec, int hidden_width, int n_blocks,
                                 int embed_dim, Rng& rng);
DenoiserParams init_lower_params(int horizon, const WaypointSpec& spec, int hidden_width,
                                 int n_blocks, int embed_dim, Rng& rng);

/// Upper-level training: standard isotropic diffusion over waypoint vectors.
TrainResult train_upper(const Dataset& normalized, const WaypointSpec& spec,
                        const TrainConfig& config, const NoiseSchedule& sched,
                        DenoiserParams params, Rng& rng);

/// Lower-level training for one ablation variant; per-sample priors are
/// built from the sample's ground-truth key states through the gain cache.
TrainResult train_lower(const Dataset& normalized, const VariantConfig& variant,
                        const PlannerContext& ctx, const TrainConfig& config,
                        DenoiserParams params, Rng& rng);

}  // namespace hdp
