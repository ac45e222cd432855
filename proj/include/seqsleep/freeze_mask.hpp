#pragma once

#include <string>
#include <vector>

#include "seqsleep/network.hpp"

namespace seqsleep {

// Trainability flag per canonical parameter group.
class FreezeMask {
 public:
  FreezeMask();  // everything trainable
  FreezeMask(std::vector<std::string> names, std::vector<bool> trainable);

  static FreezeMask all(bool trainable);

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<bool>& trainable() const { return trainable_; }
  bool is_trainable(const std::string& group) const;
  void set(const std::string& group, bool trainable);
  std::size_t count_trainable() const;

  // Flags aligned with a parameter set; group names must match exactly.
  std::vector<bool> for_params(const ModelParams& params) const;

  bool operator==(const FreezeMask&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<bool> trainable_;
};

}  // namespace seqsleep
