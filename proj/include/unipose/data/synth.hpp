#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "unipose/metrics/keypoints.hpp"
#include "unipose/tensor.hpp"

namespace unipose::data {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Color = std::array<float, 3>;

/// Joint order follows the 14-point LSP convention:
///  0 r-ankle  1 r-knee  2 r-hip  3 l-hip  4 l-knee  5 l-ankle  6 r-wrist
///  7 r-elbow  8 r-shoulder  9 l-shoulder  10 l-elbow  11 l-wrist  12 neck
///  13 head-top
namespace joints {
inline constexpr int kRightHip = 2;
inline constexpr int kLeftShoulder = 9;
inline constexpr int kNeck = 12;
inline constexpr int kHeadTop = 13;
}  // namespace joints

/// Skeleton tree plus rendering style. Lengths and widths are in pixels for
/// a 64-pixel frame and scale with the frame size.
struct FigureModel {
  std::vector<int> parent;           // -1 for the root
  std::vector<double> limb_length;   // distance to the parent joint
  double limb_width = 3.0;
  double joint_radius = 1.5;
  std::vector<Color> joint_color;
  std::vector<Color> limb_color;     // indexed by child joint

  static FigureModel lsp14();
  int num_joints() const { return static_cast<int>(parent.size()); }
  int root() const;
  /// (parent, child) pairs in joint order.
  std::vector<std::pair<int, int>> limbs() const;
  /// Throws DataError unless the parents form a single tree with positive
  /// lengths and one colour per joint.
  void validate() const;
};

struct SampleMeta {
  std::uint64_t seed = 0;
  /// Joints hidden behind an occluder (labels are still exact).
  std::vector<bool> occluded;
  std::optional<metrics::Box> occluder;
};

struct PoseSample {
  Tensor<float> image;  // (1, 3, H, W), values in [0, 1]
  metrics::Keypoints keypoints;
  metrics::Box bbox;
  SampleMeta meta;
};

struct SynthOptions {
  int height = 64;
  int width = 64;
  /// Figure size relative to a 64-pixel frame.
  double min_scale = 0.75;
  double max_scale = 1.0;
  /// Margin added around the visible joints for the box.
  double box_margin = 3.0;
  int max_retries = 64;

  void validate() const;
};

/// One still image. Fully determined by (seed, figure, options).
PoseSample synth_pose_sample(std::uint64_t seed, const FigureModel& figure,
                             const SynthOptions& options = {});

struct MotionOptions {
  /// Scales the per-joint angle oscillations; 0 freezes the pose.
  double amplitude = 1.0;
  /// Upper bound on any joint's frame-to-frame displacement in pixels.
  double max_velocity = 3.0;
  /// Exposure averaging over this many frames of motion; 0 disables blur.
  double blur = 0.0;
  /// Probability that the clip contains one occluder event.
  double occlusion_probability = 0.0;
  int occlusion_min_frames = 1;
  int occlusion_max_frames = 3;

  void validate() const;
};

struct VideoClip {
  std::vector<PoseSample> frames;
  std::uint64_t seed = 0;
};

VideoClip synth_video_clip(std::uint64_t seed, const FigureModel& figure, int frames,
                           const MotionOptions& motion = {}, const SynthOptions& options = {});

/// Attaches the torso (left shoulder to right hip), head (neck to head top)
/// and limb references used by the metrics.
void attach_references(metrics::Keypoints& keypoints, const FigureModel& figure);

/// Tight box over the visible joints grown by `margin`, clipped to the frame.
metrics::Box visible_box(const metrics::Keypoints& keypoints, double margin, int h, int w);

/// Mixes a base seed and an index into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace unipose::data
