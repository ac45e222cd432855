#include "seqsleep/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace seqsleep {
namespace fs = std::filesystem;

namespace {

constexpr const char* kMagic = "seqsleep-checkpoint 1";

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

bool same_architecture(const HyperParams& a, const HyperParams& b) {
  return a.n_freq == b.n_freq && a.n_filters == b.n_filters && a.ernn_hidden == b.ernn_hidden &&
         a.attention_size == b.attention_size && a.seqrnn_hidden == b.seqrnn_hidden &&
         a.n_classes == b.n_classes;
}

void save_checkpoint(const ModelParams& params, const fs::path& path) {
  static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes little-endian");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  const auto& hp = params.hyper();
  out << kMagic << '\n'
      << "hp.n_freq: " << hp.n_freq << '\n'
      << "hp.n_filters: " << hp.n_filters << '\n'
      << "hp.ernn_hidden: " << hp.ernn_hidden << '\n'
      << "hp.attention_size: " << hp.attention_size << '\n'
      << "hp.seqrnn_hidden: " << hp.seqrnn_hidden << '\n'
      << "hp.seq_len: " << hp.seq_len << '\n'
      << "hp.dropout_rate: " << fmt_double(hp.dropout_rate) << '\n'
      << "hp.lambda: " << fmt_double(hp.lambda) << '\n'
      << "hp.n_classes: " << hp.n_classes << '\n';
  for (std::size_t i = 0; i < params.size(); ++i) {
    out << "param: " << params.name(i);
    for (auto d : params.tensor(i).shape()) out << ' ' << d;
    out << '\n';
  }
  out << '\n';
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = params.tensor(i);
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

ModelParams load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw Error(ErrorKind::MalformedHeader, path.string() + " is not a checkpoint");
  }
  std::map<std::string, std::string> hp_fields;
  std::vector<ParamSpec> listed;
  while (std::getline(in, line) && !line.empty()) {
    const auto colon = line.find(": ");
    if (colon == std::string::npos) throw Error(ErrorKind::MalformedHeader, "bad manifest line '" + line + "'");
    const auto key = line.substr(0, colon);
    const auto rest = line.substr(colon + 2);
    if (key == "param") {
      std::istringstream ls(rest);
      ParamSpec spec;
      ls >> spec.name;
      std::size_t d;
      while (ls >> d) spec.shape.push_back(d);
      listed.push_back(std::move(spec));
    } else {
      hp_fields[key] = rest;
    }
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = hp_fields.find(key);
    if (it == hp_fields.end()) throw Error(ErrorKind::MalformedHeader, key + ": missing");
    return it->second;
  };
  auto get_size = [&](const std::string& key) {
    std::size_t v = 0;
    const auto& s = get(key);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
      throw Error(ErrorKind::MalformedHeader, key + ": not an integer");
    }
    return v;
  };
  HyperParams hp;
  hp.n_freq = get_size("hp.n_freq");
  hp.n_filters = get_size("hp.n_filters");
  hp.ernn_hidden = get_size("hp.ernn_hidden");
  hp.attention_size = get_size("hp.attention_size");
  hp.seqrnn_hidden = get_size("hp.seqrnn_hidden");
  hp.seq_len = get_size("hp.seq_len");
  hp.dropout_rate = std::stod(get("hp.dropout_rate"));
  hp.lambda = std::stod(get("hp.lambda"));
  hp.n_classes = get_size("hp.n_classes");

  ModelParams params(hp);
  if (listed.size() != params.size()) {
    throw Error(ErrorKind::ShapeMismatch, "checkpoint lists " + std::to_string(listed.size()) +
                                              " groups, layout has " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (listed[i].name != params.name(i)) {
      throw Error(ErrorKind::ShapeMismatch,
                  "group " + std::to_string(i) + " is '" + listed[i].name + "', expected '" + params.name(i) + "'");
    }
    if (listed[i].shape != params.tensor(i).shape()) {
      throw Error(ErrorKind::ShapeMismatch, params.name(i) + ": checkpoint shape " +
                                                shape_string(listed[i].shape) + ", expected " +
                                                shape_string(params.tensor(i).shape()));
    }
  }
  std::size_t expected_bytes = params.parameter_count() * sizeof(float);
  const auto body_start = in.tellg();
  in.seekg(0, std::ios::end);
  const auto body_bytes = static_cast<std::size_t>(in.tellg() - body_start);
  in.seekg(body_start);
  if (body_bytes != expected_bytes) {
    throw Error(ErrorKind::SampleCountMismatch, "checkpoint blob has " + std::to_string(body_bytes) +
                                                    " bytes, expected " + std::to_string(expected_bytes));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& t = params.tensor(i);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  if (!in) throw Error(ErrorKind::IoError, "short read in " + path.string());
  return params;
}

ModelParams load_checkpoint(const fs::path& path, const HyperParams& expected) {
  auto params = load_checkpoint(path);
  if (!same_architecture(params.hyper(), expected)) {
    throw Error(ErrorKind::ShapeMismatch, path.string() + ": architecture does not match the configured hyperparameters");
  }
  return params;
}

}  // namespace seqsleep
