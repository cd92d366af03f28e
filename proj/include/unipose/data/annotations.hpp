#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "unipose/data/synth.hpp"

namespace unipose::data {

/// Schema violation. The message names the record and field, e.g.
/// "images[3].keypoints[2][0]: expected a number, got string".
class AnnotationError : public DataError {
 public:
  using DataError::DataError;
};

inline constexpr const char* kAnnotationFormat = "unipose-annotations";
inline constexpr int kAnnotationVersion = 1;

struct AnnotationRecord {
  std::string image;  // path relative to the annotation file
  metrics::Keypoints keypoints;
  metrics::Box bbox;
  std::vector<bool> occluded;  // empty or one flag per joint
  std::uint64_t seed = 0;
};

struct ClipAnnotation {
  std::vector<AnnotationRecord> frames;
  std::uint64_t seed = 0;
};

struct Annotations {
  int num_joints = 0;
  std::vector<std::pair<int, int>> limbs;
  std::vector<AnnotationRecord> images;
  std::vector<ClipAnnotation> clips;
};

struct AnnotationRules {
  /// Torso and head segments must be present on every record.
  bool require_references = true;
};

std::string to_json(const Annotations& annotations);
Annotations parse_annotations(const std::string& text, const AnnotationRules& rules = {});
Annotations load_annotations(const std::string& path, const AnnotationRules& rules = {});
void save_annotations(const std::string& path, const Annotations& annotations);

AnnotationRecord make_record(const PoseSample& sample, std::string image_path);

/// Samples with their pixels loaded from disk.
struct Dataset {
  Annotations annotations;
  std::vector<PoseSample> images;
  std::vector<VideoClip> clips;
};

/// Layout: <dir>/annotations.json, <dir>/images/NNNNNN.png,
/// <dir>/clips/NNNN/frame_NNN.png.
void write_dataset(const std::string& dir, const std::vector<PoseSample>& images,
                   const std::vector<VideoClip>& clips);
/// Accepts the dataset directory or the annotation file itself.
Dataset load_dataset(const std::string& path, const AnnotationRules& rules = {});

}  // namespace unipose::data
