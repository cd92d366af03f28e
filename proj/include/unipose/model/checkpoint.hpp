#pragma once

#include <stdexcept>
#include <string>

#include "unipose/model/unipose.hpp"

namespace unipose::model {

enum class CheckpointErrorKind { kIo, kVersionMismatch, kShapeMismatch, kTruncated, kMalformed };

const char* to_string(CheckpointErrorKind kind);

class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(CheckpointErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  CheckpointErrorKind kind() const { return kind_; }

 private:
  CheckpointErrorKind kind_;
};

inline constexpr int kCheckpointVersion = 1;

/// Layout, all integers little-endian:
///   8 bytes   magic "UNIPOSE\0"
///   8 bytes   manifest length L
///   L bytes   manifest text, one "key value" entry per line:
///               format_version 1
///               endianness little
///               element_type float32
///               config.<key> <value>           (ModelConfig::to_kv)
///               param <name> <n> <c> <h> <w> <byte offset>
///               payload_bytes <B>
///   B bytes   parameters as IEEE-754 binary32, in manifest order
std::string serialize(const UniPoseModel<float>& model);
UniPoseModel<float> deserialize(const std::string& bytes);

/// Writes through a temporary file and renames, so an existing checkpoint at
/// `path` is never left half-written.
void save_weights(const UniPoseModel<float>& model, const std::string& path);
UniPoseModel<float> load_weights(const std::string& path);

}  // namespace unipose::model
