#pragma once

#include <filesystem>

#include "seqsleep/network.hpp"

namespace seqsleep {

// Checkpoint file: a text manifest (format line, hyperparameters, then one
// "param: <name> <dims...>" line per group in canonical order), a blank line,
// and the tensors as little-endian float32 concatenated in manifest order.
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);

// Validates every listed name and shape against the layout implied by the
// echoed hyperparameters.
ModelParams load_checkpoint(const std::filesystem::path& path);

// As above, and additionally requires the architecture to match `expected`.
ModelParams load_checkpoint(const std::filesystem::path& path, const HyperParams& expected);

// Same architecture (layer sizes); training-only settings may differ.
bool same_architecture(const HyperParams& a, const HyperParams& b);

}  // namespace seqsleep
