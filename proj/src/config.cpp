#include "hdp/config.hpp"

#include "hdp/errors.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hdp {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config: bad boolean for " + key + ": " + value);
}

void assign(Config& c, const std::string& key, const std::string& value) {
    auto num = [&]() {
        try {
            return std::stod(value);
        } catch (const std::exception&) {
            throw ConfigError("config: bad number for " + key + ": " + value);
        }
    };
    auto integer = [&]() {
        try {
            return std::stoll(value);
        } catch (const std::exception&) {
            throw ConfigError("config: bad integer for " + key + ": " + value);
        }
    };

    if (key == "maze.map_file") c.map_file = value;
    else if (key == "maze.cell_size") c.cell_size = num();
    else if (key == "maze.goal_tolerance_cells") c.goal_tolerance_cells = num();
    else if (key == "gp.dt") c.dt = num();
    else if (key == "gp.q_c") c.q_c = num();
    else if (key == "gp.sigma0") c.sigma0 = num();
    else if (key == "schedule.kind") c.schedule_kind = schedule_kind_from_string(value);
    else if (key == "schedule.n_steps") c.n_steps = static_cast<int>(integer());
    else if (key == "schedule.beta_min") c.beta_min = num();
    else if (key == "schedule.beta_max") c.beta_max = num();
    else if (key == "waypoints.count") c.n_waypoints = static_cast<int>(integer());
    else if (key == "waypoints.include_endpoints") c.include_endpoints = parse_bool(value, key);
    else if (key == "observation.endpoint_var") c.endpoint_var = num();
    else if (key == "observation.interior_var") c.interior_var = num();
    else if (key == "network.hidden_width") c.hidden_width = static_cast<int>(integer());
    else if (key == "network.n_blocks") c.n_blocks = static_cast<int>(integer());
    else if (key == "network.embed_dim") c.embed_dim = static_cast<int>(integer());
    else if (key == "network.upper_hidden_width") c.upper_hidden_width = static_cast<int>(integer());
    else if (key == "network.upper_n_blocks") c.upper_n_blocks = static_cast<int>(integer());
    else if (key == "training.learning_rate") c.learning_rate = num();
    else if (key == "training.momentum") c.momentum = num();
    else if (key == "training.clip_norm") c.clip_norm = num();
    else if (key == "training.batch_size") c.batch_size = static_cast<int>(integer());
    else if (key == "training.steps") c.train_steps = static_cast<int>(integer());
    else if (key == "training.upper_steps") c.upper_train_steps = static_cast<int>(integer());
    else if (key == "training.log_every") c.log_every = static_cast<int>(integer());
    else if (key == "training.parameterization") c.parameterization = value;
    else if (key == "data.count") c.data_count = static_cast<int>(integer());
    else if (key == "data.horizon") c.horizon = static_cast<int>(integer());
    else if (key == "data.min_cell_distance") c.min_cell_distance = num();
    else if (key == "evaluation.episodes") c.episodes = static_cast<int>(integer());
    else if (key == "paths.out_dir") c.out_dir = value;
    else if (key == "paths.cache_file") c.cache_file = value;
    else if (key == "seeds.data") c.seed_data = static_cast<std::uint64_t>(integer());
    else if (key == "seeds.train") c.seed_train = static_cast<std::uint64_t>(integer());
    else if (key == "seeds.plan") c.seed_plan = static_cast<std::uint64_t>(integer());
    else if (key == "seeds.eval") c.seed_eval = static_cast<std::uint64_t>(integer());
    else throw ConfigError("config: unknown key: " + key);
}

}  // namespace

void Config::validate() const {
    if (!(cell_size > 0.0)) throw ConfigError("config: maze.cell_size must be positive");
    if (!(goal_tolerance_cells > 0.0))
        throw ConfigError("config: maze.goal_tolerance_cells must be positive");
    if (!(dt > 0.0)) throw ConfigError("config: gp.dt must be positive");
    if (q_c < 0.0) throw ConfigError("config: gp.q_c must be >= 0");
    if (!(sigma0 > 0.0)) throw ConfigError("config: gp.sigma0 must be positive");
    if (n_steps < 2) throw ConfigError("config: schedule.n_steps must be >= 2");
    if (!(beta_min > 0.0 && beta_min < 1.0 && beta_max > 0.0 && beta_max < 1.0))
        throw ConfigError("config: schedule betas must lie in (0, 1)");
    if (n_waypoints < 2) throw ConfigError("config: waypoints.count must be >= 2");
    if (!(endpoint_var > 0.0 && interior_var > 0.0))
        throw ConfigError("config: observation variances must be positive");
    if (hidden_width < 1 || upper_hidden_width < 1)
        throw ConfigError("config: network widths must be >= 1");
    if (n_blocks < 0 || upper_n_blocks < 0)
        throw ConfigError("config: network block counts must be >= 0");
    if (embed_dim < 2 || embed_dim % 2 != 0)
        throw ConfigError("config: network.embed_dim must be even and >= 2");
    if (horizon < 2) throw ConfigError("config: data.horizon must be >= 2");
    if (n_waypoints > horizon)
        throw ConfigError("config: waypoints.count must not exceed data.horizon");
    if (data_count < 0) throw ConfigError("config: data.count must be >= 0");
    if (episodes < 1) throw ConfigError("config: evaluation.episodes must be >= 1");
    if (out_dir.empty()) throw ConfigError("config: paths.out_dir must be set");
    parameterization_from_string(parameterization);  // throws on bad value

    TrainConfig tc;
    tc.learning_rate = learning_rate;
    tc.momentum = momentum;
    tc.clip_norm = clip_norm;
    tc.batch_size = batch_size;
    tc.total_steps = train_steps;
    tc.log_every = log_every;
    tc.validate();
}

std::string Config::effective_cache_file() const {
    if (const char* env = std::getenv("HDP_CACHE_FILE"); env != nullptr && env[0] != '\0')
        return env;
    return cache_file;
}

Config parse_config_text(const std::string& text) {
    Config config;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config: bad section header at line " + std::to_string(line_no));
            section = t.substr(1, t.size() - 2);
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key=value at line " + std::to_string(line_no));
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (section.empty())
            throw ConfigError("config: key outside any [section] at line " +
                              std::to_string(line_no));
        assign(config, section + "." + key, value);
    }
    return config;
}

Config parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void apply_overrides(Config& config, const std::vector<std::string>& overrides) {
    for (const std::string& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: override must be section.key=value: " + item);
        assign(config, trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
    }
}

}  // namespace hdp
