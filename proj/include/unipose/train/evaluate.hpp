#pragma once

#include <string>
#include <vector>

#include "unipose/data/synth.hpp"
#include "unipose/metrics/heatmaps.hpp"
#include "unipose/metrics/metrics.hpp"
#include "unipose/model/unipose.hpp"

namespace unipose::train {

struct Prediction {
  metrics::Keypoints keypoints;
  metrics::Box box;
};

/// Decodes every batch item of (N, K+2, H, W) heatmaps.
std::vector<Prediction> decode_predictions(const Tensor<float>& maps, int num_joints);

std::vector<Prediction> predict(const model::UniPoseModel<float>& model,
                                const std::vector<data::PoseSample>& samples, int batch_size = 16);

/// PCK@0.2, PCKh@0.5, PCP@0.5 and containment of the ground-truth joints in
/// the predicted box.
struct EvalReport {
  std::vector<metrics::MetricReport> reports;
  const metrics::MetricReport& get(const std::string& metric) const;
  std::string to_kv() const;
};

EvalReport score(const std::vector<Prediction>& predictions, const std::vector<metrics::Keypoints>& truth);

EvalReport evaluate(const model::UniPoseModel<float>& model, const std::vector<data::PoseSample>& samples,
                    bool count_occluded = false, int batch_size = 16);

/// Scores decoded ground-truth Gaussians instead of model output.
EvalReport evaluate_oracle(const std::vector<data::PoseSample>& samples, const metrics::GaussianSpec& spec,
                           bool count_occluded = false);

/// Decoder heatmaps of every frame, computed once without gradients.
std::vector<Tensor<float>> decoder_maps(const model::UniPoseModel<float>& model, const data::VideoClip& clip);

/// Heatmaps of frame t from the recurrence over frames
/// max(0, t - window + 1) .. t, started at zero state.
Tensor<float> windowed_maps(const model::UniPoseModel<float>& model, const std::vector<Tensor<float>>& decoded,
                            int t, int window);

struct FrameStudyRow {
  int window = 0;
  metrics::MetricReport pck;
};

/// Scores the same weights with each truncation window. Only frames
/// t >= max(windows) - 1 are scored so every window sees its full history.
std::vector<FrameStudyRow> frame_count_study(const model::UniPoseModel<float>& model,
                                             const std::vector<data::VideoClip>& clips,
                                             const std::vector<int>& windows, bool count_occluded = true);

std::string frame_study_table(const std::vector<FrameStudyRow>& rows);

}  // namespace unipose::train
