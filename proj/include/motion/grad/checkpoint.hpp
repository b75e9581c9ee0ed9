#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "motion/grad/tape.hpp"

namespace motion::grad {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary container for a parameter store: magic "MKPT", format version,
/// sorted key/value metadata strings, the optimizer step, then per tensor its
/// name, shape and three float64 payloads (value, first and second Adam
/// moment), all little-endian. Values round-trip bit-exactly.
void save_checkpoint(const std::string& path, const ParameterStore& store,
                     const std::map<std::string, std::string>& meta);

struct LoadedCheckpoint {
  ParameterStore store{0};
  std::map<std::string, std::string> meta;
};

/// Throws CheckpointError on bad magic, unknown version or truncation.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace motion::grad
