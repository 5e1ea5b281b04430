#pragma once

#include "hdp/denoiser.hpp"
#include "hdp/schedule.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hdp {

/// Experiment configuration. Plain-text key-value file with [section]
/// headers; every knob has a default, so an empty config is valid. Command
/// lines may override single keys with --set section.key=value.
struct Config {
    // [maze]
    std::string map_file;              ///< empty = built-in default map
    double cell_size = 1.0;
    double goal_tolerance_cells = 1.0;

    // [gp]
    double dt = 0.1;
    double q_c = 1.0;
    double sigma0 = 1.0;

    // [schedule]
    ScheduleKind schedule_kind = ScheduleKind::cosine;
    int n_steps = 64;
    double beta_min = 1e-4;
    double beta_max = 0.02;

    // [waypoints]
    int n_waypoints = 6;
    bool include_endpoints = true;

    // [observation]
    double endpoint_var = 1e-6;
    double interior_var = 1e-2;

    // [network]
    int hidden_width = 256;
    int n_blocks = 3;
    int embed_dim = 32;
    int upper_hidden_width = 128;
    int upper_n_blocks = 2;

    // [training]
    double learning_rate = 2e-3;
    double momentum = 0.9;
    double clip_norm = 10.0;
    int batch_size = 32;
    int train_steps = 8000;
    int upper_train_steps = 6000;
    int log_every = 100;
    std::string parameterization = "predict_data";

    // [data]
    int data_count = 2000;
    int horizon = 64;
    double min_cell_distance = 3.0;

    // [evaluation]
    int episodes = 100;

    // [paths]
    std::string out_dir = "runs/default";
    std::string cache_file;  ///< env HDP_CACHE_FILE overrides

    // [seeds]
    std::uint64_t seed_data = 7;
    std::uint64_t seed_train = 1;
    std::uint64_t seed_plan = 3;
    std::uint64_t seed_eval = 5;

    void validate() const;

    // Artifact locations inside out_dir.
    std::string dataset_path() const { return out_dir + "/dataset.txt"; }
    std::string maze_path() const { return out_dir + "/maze.txt"; }
    std::string upper_checkpoint_path() const { return out_dir + "/ckpt_upper.bin"; }
    std::string lower_checkpoint_path(const std::string& variant) const {
        return out_dir + "/ckpt_" + variant + ".bin";
    }
    std::string loss_csv_path(const std::string& name) const {
        return out_dir + "/loss_" + name + ".csv";
    }
    std::string report_text_path() const { return out_dir + "/report.txt"; }
    std::string report_csv_path() const { return out_dir + "/report.csv"; }
    std::string trajectory_path() const { return out_dir + "/trajectory.txt"; }
    std::string plot_path() const { return out_dir + "/plot.svg"; }
    /// Gain-cache file; the HDP_CACHE_FILE environment variable wins.
    std::string effective_cache_file() const;
};

/// Parses a config file (all sections optional). Unknown keys are errors.
Config parse_config_file(const std::string& path);
Config parse_config_text(const std::string& text);

/// Applies "section.key=value" overrides in order.
void apply_overrides(Config& config, const std::vector<std::string>& overrides);

}  // namespace hdp
