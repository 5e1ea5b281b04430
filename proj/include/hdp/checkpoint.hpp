#pragma once

#include "hdp/denoiser.hpp"

#include <string>
#include <utility>
#include <vector>

namespace hdp {

/// Versioned binary checkpoint: header with architecture shapes, body of
/// row-major 64-bit floats (the flattened parameters).
void save_checkpoint(const DenoiserParams& params, const std::string& path);
DenoiserParams load_checkpoint(const std::string& path);

/// Appends (step, loss) rows to a plain-text CSV, writing the header first
/// when the file is created.
void append_loss_csv(const std::vector<std::pair<int, double>>& log, const std::string& path);

}  // namespace hdp
