#include "hdp/hierarchy.hpp"

#include "hdp/diffusion.hpp"
#include "hdp/errors.hpp"

#include <cmath>

namespace hdp {

std::vector<int> WaypointSpec::timesteps(int horizon) const {
    if (horizon < 2) throw ConfigError("WaypointSpec: horizon must be >= 2");
    const int n = n_waypoints;
    if (include_endpoints && n < 2)
        throw ConfigError("WaypointSpec: need at least 2 waypoints with endpoints included");
    if (n < 1) throw ConfigError("WaypointSpec: need at least 1 waypoint");
    if (n > horizon) throw ConfigError("WaypointSpec: more waypoints than timesteps");

    std::vector<int> steps;
    steps.reserve(n);
    if (include_endpoints) {
        for (int k = 0; k < n; ++k) {
            const double x = static_cast<double>(k) * (horizon - 1) / (n - 1);
            steps.push_back(static_cast<int>(std::floor(x + 0.5)));
        }
    } else {
        for (int k = 1; k <= n; ++k) {
            const double x = static_cast<double>(k) * (horizon - 1) / (n + 1);
            steps.push_back(static_cast<int>(std::floor(x + 0.5)));
        }
    }
    for (std::size_t k = 1; k < steps.size(); ++k)
        if (steps[k] <= steps[k - 1]) throw ConfigError("WaypointSpec: duplicate timesteps");
    return steps;
}

KeyStateObservation extract_keystates(const Trajectory& traj, const WaypointSpec& spec,
                                      const ObservationConfig& obs_cfg) {
    const int horizon = static_cast<int>(traj.rows());
    const std::vector<int> steps = spec.timesteps(horizon);
    Eigen::VectorXd values(2 * steps.size());
    Eigen::VectorXd variances(2 * steps.size());
    std::vector<std::pair<int, CoordSlice>> indices;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const int t = steps[k];
        values.segment(2 * k, 2) = traj.row(t).head<2>();
        const bool endpoint = t == 0 || t == horizon - 1;
        variances.segment(2 * k, 2).setConstant(endpoint ? obs_cfg.endpoint_var
                                                         : obs_cfg.interior_var);
        indices.push_back({t, CoordSlice{0, 2}});
    }
    return KeyStateObservation::with_diagonal_noise(values, std::move(indices), variances);
}

KeyStateObservation start_state_observation(const Eigen::Vector4d& normalized_start,
                                            const ObservationConfig& obs_cfg) {
    return KeyStateObservation::with_diagonal_noise(
        normalized_start, {{0, CoordSlice{0, 4}}},
        Eigen::VectorXd::Constant(4, obs_cfg.endpoint_var));
}

VariantKind variant_from_string(const std::string& s) {
    if (s == "iso_plain") return VariantKind::iso_plain;
    if (s == "iso_cond") return VariantKind::iso_cond;
    if (s == "gp_plain") return VariantKind::gp_plain;
    if (s == "gp_keystates") return VariantKind::gp_keystates;
    throw ConfigError("unknown variant: " + s);
}

std::string to_string(VariantKind kind) {
    switch (kind) {
        case VariantKind::iso_plain: return "iso_plain";
        case VariantKind::iso_cond: return "iso_cond";
        case VariantKind::gp_plain: return "gp_plain";
        case VariantKind::gp_keystates: return "gp_keystates";
    }
    throw ConfigError("unknown variant kind");
}

std::vector<VariantKind> all_variants() {
    return {VariantKind::iso_plain, VariantKind::iso_cond, VariantKind::gp_plain,
            VariantKind::gp_keystates};
}

VariantConfig VariantConfig::make(VariantKind kind) {
    VariantConfig v;
    v.kind = kind;
    switch (kind) {
        case VariantKind::iso_plain:
            v.gp_noise = false;
            v.use_keystates = false;
            v.inpaint_endpoints = true;
            v.cond_mode = CondMode::none;
            break;
        case VariantKind::iso_cond:
            v.gp_noise = false;
            v.use_keystates = true;
            v.inpaint_endpoints = true;
            v.cond_mode = CondMode::keystates;
            break;
        case VariantKind::gp_plain:
            v.gp_noise = true;
            v.use_keystates = false;
            v.inpaint_endpoints = false;
            v.cond_mode = CondMode::none;
            break;
        case VariantKind::gp_keystates:
            v.gp_noise = true;
            v.use_keystates = true;
            v.inpaint_endpoints = false;
            v.cond_mode = CondMode::keystates;
            break;
    }
    return v;
}

int lower_cond_dim(const WaypointSpec& spec, int horizon) {
    return spec.value_dim() + horizon;
}

Eigen::VectorXd lower_cond_vector(const KeyStateObservation& obs, const WaypointSpec& spec,
                                  int horizon) {
    Eigen::VectorXd cond = Eigen::VectorXd::Zero(lower_cond_dim(spec, horizon));
    const Eigen::Index n = std::min<Eigen::Index>(obs.values.size(), spec.value_dim());
    cond.head(n) = obs.values.head(n);
    for (const auto& [t, slice] : obs.indices) {
        if (t >= 0 && t < horizon) cond[spec.value_dim() + t] = 1.0;
    }
    return cond;
}

Eigen::Vector4d normalize_state(const Eigen::Vector4d& state, const NormStats& stats) {
    Eigen::Vector4d out;
    for (int j = 0; j < 4; ++j) out[j] = (state[j] - stats.center[j]) / stats.scale[j];
    return out;
}

Eigen::Vector2d normalize_position(const Eigen::Vector2d& position, const NormStats& stats) {
    return {(position[0] - stats.center[0]) / stats.scale[0],
            (position[1] - stats.center[1]) / stats.scale[1]};
}

Eigen::VectorXd upper_cond_vector(const TaskSpec& task, const NormStats& stats) {
    Eigen::VectorXd cond(kUpperCondDim);
    cond.head<4>() = normalize_state(task.start, stats);
    cond.tail<2>() = normalize_position(task.goal, stats);
    return cond;
}

GpPrior build_normalized_gp(const Dataset& dataset, double q_c, double sigma0, int max_rows) {
    LtvModel model;
    model.dt = normalized_dt(dataset.stats, dataset.dt);
    model.d_pos = 2;
    model.q_c = q_c;
    model.k0 = sigma0 * sigma0 * Eigen::MatrixXd::Identity(4, 4);
    return build_gp_prior(model, dataset.horizon, max_rows);
}

namespace {

// Overwrite the endpoint waypoints with the task's (normalized) start and
// goal positions.
void pin_waypoint_endpoints(Eigen::VectorXd& values, const TaskSpec& task,
                            const PlannerContext& ctx) {
    values.head<2>() = normalize_position(task.start.head<2>(), ctx.stats);
    values.tail<2>() = normalize_position(task.goal, ctx.stats);
}

KeyStateObservation observation_from_waypoints(const Eigen::VectorXd& values,
                                               const std::vector<int>& steps, int horizon,
                                               const ObservationConfig& obs_cfg) {
    Eigen::VectorXd variances(values.size());
    std::vector<std::pair<int, CoordSlice>> indices;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const bool endpoint = steps[k] == 0 || steps[k] == horizon - 1;
        variances.segment(2 * k, 2).setConstant(endpoint ? obs_cfg.endpoint_var
                                                         : obs_cfg.interior_var);
        indices.push_back({steps[k], CoordSlice{0, 2}});
    }
    return KeyStateObservation::with_diagonal_noise(values, std::move(indices), variances);
}

void inpaint_endpoint_states(Eigen::VectorXd& stacked, const TaskSpec& task,
                             const PlannerContext& ctx) {
    stacked.head<4>() = normalize_state(task.start, ctx.stats);
    Eigen::Vector4d goal_state;
    goal_state << task.goal[0], task.goal[1], 0.0, 0.0;
    stacked.tail<4>() = normalize_state(goal_state, ctx.stats);
}

}  // namespace

KeyStateObservation upper_sample(const DenoiserParams& upper, const TaskSpec& task,
                                 const PlannerContext& ctx, Rng& rng) {
    if (!upper.initialized()) throw ConfigError("upper_sample: untrained upper-level parameters");
    if (!ctx.waypoints.include_endpoints)
        throw ConfigError("upper_sample: waypoint spec must include endpoints");
    const std::vector<int> steps = ctx.waypoints.timesteps(ctx.horizon);
    const int dim = ctx.waypoints.value_dim();
    const NoiseSchedule& sched = *ctx.sched;

    const StructuredPrior prior = StructuredPrior::isotropic(1, dim);
    const Eigen::VectorXd cond = upper_cond_vector(task, ctx.stats);

    Eigen::VectorXd values = prior.sample_stacked(rng);
    pin_waypoint_endpoints(values, task, ctx);
    for (int i = sched.n_steps(); i >= 1; --i) {
        const Eigen::VectorXd pred =
            predict_mean(upper, values, i, cond, prior, sched, ctx.parameterization);
        values = reverse_step(values, i, pred, prior, sched, rng);
        pin_waypoint_endpoints(values, task, ctx);
    }
    return observation_from_waypoints(values, steps, ctx.horizon, ctx.obs_cfg);
}

Trajectory plan(const TaskSpec& task, const VariantConfig& variant, const DenoiserParams& upper,
                const DenoiserParams& lower, const PlannerContext& ctx, Rng& rng,
                PlanTrace* trace) {
    if (!lower.initialized()) throw ConfigError("plan: untrained lower-level parameters");
    if (ctx.map == nullptr || ctx.sched == nullptr)
        throw ConfigError("plan: incomplete planner context");
    if (variant.gp_noise && (ctx.gp == nullptr || ctx.cache == nullptr))
        throw ConfigError("plan: GP variants need the GP prior and gain cache");

    const int horizon = ctx.horizon;
    const NoiseSchedule& sched = *ctx.sched;

    // Independent sub-streams: the lower-level noise path does not depend on
    // whether the upper level ran, so variants share noise given one seed.
    Rng upper_rng = rng.derive(1);
    Rng lower_rng = rng.derive(2);

    KeyStateObservation keystates;
    bool has_keystates = false;
    if (variant.use_keystates) {
        keystates = upper_sample(upper, task, ctx, upper_rng);
        has_keystates = true;
    }

    StructuredPrior prior = StructuredPrior::isotropic(horizon, 4);
    if (variant.gp_noise) {
        if (variant.use_keystates) {
            prior = ctx.cache->get_or_compute(*ctx.gp, keystates);
        } else {
            const KeyStateObservation start_obs =
                start_state_observation(normalize_state(task.start, ctx.stats), ctx.obs_cfg);
            prior = ctx.cache->get_or_compute(*ctx.gp, start_obs);
        }
    }

    Eigen::VectorXd cond;
    if (variant.cond_mode == CondMode::keystates && has_keystates)
        cond = lower_cond_vector(keystates, ctx.waypoints, horizon);

    if (trace != nullptr) {
        trace->denoiser_evals = 0;
        trace->snapshots.clear();
        trace->prior_mean = prior.mean();
        trace->has_keystates = has_keystates;
        if (has_keystates) trace->keystates = keystates;
    }
    auto snapshot = [&](int i, const Eigen::VectorXd& stacked) {
        if (trace == nullptr) return;
        for (int want : trace->snapshot_steps)
            if (want == i)
                trace->snapshots.emplace_back(
                    i, denormalize_trajectory(unstack_trajectory(stacked, horizon, 4),
                                              ctx.stats));
    };

    Eigen::VectorXd tau = prior.sample_stacked(lower_rng);
    if (variant.inpaint_endpoints) inpaint_endpoint_states(tau, task, ctx);

    for (int i = sched.n_steps(); i >= 1; --i) {
        snapshot(i, tau);
        const Eigen::VectorXd pred =
            predict_mean(lower, tau, i, cond, prior, sched, ctx.parameterization);
        if (trace != nullptr) ++trace->denoiser_evals;
        tau = reverse_step(tau, i, pred, prior, sched, lower_rng);
        if (variant.inpaint_endpoints) inpaint_endpoint_states(tau, task, ctx);
    }
    snapshot(0, tau);

    return denormalize_trajectory(unstack_trajectory(tau, horizon, 4), ctx.stats);
}

DenoiserParams init_upper_params(const WaypointSpec& spec, int hidden_width, int n_blocks,
                                 int embed_dim, Rng& rng) {
    return DenoiserParams::init(spec.value_dim(), kUpperCondDim, embed_dim, hidden_width,
                                n_blocks, rng);
}

DenoiserParams init_lower_params(int horizon, const WaypointSpec& spec, int hidden_width,
                                 int n_blocks, int embed_dim, Rng& rng) {
    return DenoiserParams::init(horizon * 4, lower_cond_dim(spec, horizon), embed_dim,
                                hidden_width, n_blocks, rng);
}

TrainResult train_upper(const Dataset& normalized, const WaypointSpec& spec,
                        const TrainConfig& config, const NoiseSchedule& sched,
                        DenoiserParams params, Rng& rng) {
    normalized.validate();
    const auto prior = std::make_shared<const StructuredPrior>(
        StructuredPrior::isotropic(1, spec.value_dim()));
    const std::vector<int> steps = spec.timesteps(normalized.horizon);

    ItemProvider provider = [&normalized, &spec, prior, steps](int index) {
        const Trajectory& traj = normalized.trajectories[index];
        TrainItem item;
        item.tau0.resize(spec.value_dim());
        for (std::size_t k = 0; k < steps.size(); ++k)
            item.tau0.segment(2 * k, 2) = traj.row(steps[k]).head<2>();
        item.cond = upper_cond_vector(normalized.tasks[index], normalized.stats);
        item.prior = prior;
        return item;
    };
    return train(static_cast<int>(normalized.size()), provider, std::move(params), config, sched,
                 rng);
}

TrainResult train_lower(const Dataset& normalized, const VariantConfig& variant,
                        const PlannerContext& ctx, const TrainConfig& config,
                        DenoiserParams params, Rng& rng) {
    normalized.validate();
    if (variant.gp_noise && (ctx.gp == nullptr || ctx.cache == nullptr))
        throw ConfigError("train_lower: GP variants need the GP prior and gain cache");

    const auto iso = std::make_shared<const StructuredPrior>(
        StructuredPrior::isotropic(normalized.horizon, 4));

    ItemProvider provider = [&normalized, &variant, &ctx, iso](int index) {
        const Trajectory& traj = normalized.trajectories[index];
        TrainItem item;
        item.tau0 = stack_trajectory(traj);
        if (variant.gp_noise) {
            const KeyStateObservation obs =
                variant.use_keystates
                    ? extract_keystates(traj, ctx.waypoints, ctx.obs_cfg)
                    : start_state_observation(traj.row(0).transpose(), ctx.obs_cfg);
            item.prior = std::make_shared<const StructuredPrior>(
                ctx.cache->get_or_compute(*ctx.gp, obs));
            if (variant.cond_mode == CondMode::keystates)
                item.cond = lower_cond_vector(obs, ctx.waypoints, normalized.horizon);
        } else {
            item.prior = iso;
            if (variant.cond_mode == CondMode::keystates) {
                const KeyStateObservation obs =
                    extract_keystates(traj, ctx.waypoints, ctx.obs_cfg);
                item.cond = lower_cond_vector(obs, ctx.waypoints, normalized.horizon);
            }
        }
        return item;
    };
    return train(static_cast<int>(normalized.size()), provider, std::move(params), config,
                 *ctx.sched, rng);
}

}  // namespace hdp
