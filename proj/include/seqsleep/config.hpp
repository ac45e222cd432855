#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "seqsleep/synthetic.hpp"

namespace seqsleep {

// Flat "key=value" config file; '#' starts a comment. Keys are long flag
// names without the leading dashes.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

// Parses "identity" or a comma list of warp=<f>, mix=<strength>, noise=<power per Hz>.
// mix blends identity with a cyclic shift of band powers.
DomainShift parse_mismatch(const std::string& text, std::size_t n_bands);

}  // namespace seqsleep
