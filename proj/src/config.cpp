#include "seqsleep/config.hpp"

#include <fstream>
#include <sstream>

#include "seqsleep/errors.hpp"

namespace seqsleep {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw Error(ErrorKind::InvalidArgument, key + ": not a number: '" + v + "'");
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::InvalidArgument,
                  path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

DomainShift parse_mismatch(const std::string& text, std::size_t n_bands) {
  DomainShift shift;
  if (text.empty() || text == "identity") return shift;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "mismatch: expected key=value in '" + item + "'");
    const auto key = trim(item.substr(0, eq));
    const auto value = parse_double(key, trim(item.substr(eq + 1)));
    if (key == "warp") {
      shift.frequency_warp = value;
    } else if (key == "mix") {
      if (value < 0.0 || value > 1.0) throw Error(ErrorKind::InvalidArgument, "mismatch: mix must be in [0,1]");
      shift.band_mixing = DomainShift::cyclic_mixing(n_bands, value);
    } else if (key == "noise") {
      shift.noise_floor = value;
    } else {
      throw Error(ErrorKind::InvalidArgument, "mismatch: unknown key '" + key + "'");
    }
  }
  return shift;
}

}  // namespace seqsleep
