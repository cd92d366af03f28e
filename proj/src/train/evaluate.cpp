#include "unipose/train/evaluate.hpp"

#include <algorithm>
#include <cstdio>

#include "unipose/train/batch.hpp"

namespace unipose::train {

std::vector<Prediction> decode_predictions(const Tensor<float>& maps, int num_joints) {
  std::vector<Prediction> out;
  for (int n = 0; n < maps.shape().n; ++n) {
    out.push_back({metrics::decode_joints(maps, n, num_joints), metrics::decode_bbox(maps, n, num_joints)});
  }
  return out;
}

std::vector<Prediction> predict(const model::UniPoseModel<float>& model,
                                const std::vector<data::PoseSample>& samples, int batch_size) {
  NoGradGuard no_grad;
  std::vector<Prediction> out;
  const int k = model.config().num_joints;
  for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
    const std::size_t end = std::min(samples.size(), begin + batch_size);
    std::vector<Tensor<float>> images;
    for (std::size_t i = begin; i < end; ++i) images.push_back(samples[i].image);
    const auto preds = decode_predictions(model.forward(stack_batch(images)), k);
    out.insert(out.end(), preds.begin(), preds.end());
  }
  return out;
}

const metrics::MetricReport& EvalReport::get(const std::string& metric) const {
  for (const auto& r : reports) {
    if (r.metric == metric) return r;
  }
  throw metrics::MetricError("no '" + metric + "' report");
}

std::string EvalReport::to_kv() const {
  std::string out;
  for (const auto& r : reports) out += r.to_kv();
  return out;
}

EvalReport score(const std::vector<Prediction>& predictions, const std::vector<metrics::Keypoints>& truth) {
  if (predictions.size() != truth.size()) {
    throw metrics::MetricError("score: " + std::to_string(predictions.size()) + " predictions for " +
                               std::to_string(truth.size()) + " samples");
  }
  std::vector<metrics::Keypoints> pred;
  std::vector<metrics::Box> boxes;
  for (const auto& p : predictions) {
    pred.push_back(p.keypoints);
    boxes.push_back(p.box);
  }
  EvalReport r;
  r.reports.push_back(metrics::pck(pred, truth, 0.2));
  r.reports.push_back(metrics::pckh(pred, truth, 0.5));
  r.reports.push_back(metrics::pcp(pred, truth, 0.5));
  r.reports.push_back(metrics::bbox_containment(truth, truth, boxes));
  return r;
}

EvalReport evaluate(const model::UniPoseModel<float>& model, const std::vector<data::PoseSample>& samples,
                    bool count_occluded, int batch_size) {
  const int k = model.config().num_joints;
  std::vector<metrics::Keypoints> truth;
  for (const auto& s : samples) {
    if (s.keypoints.size() != k) {
      throw metrics::MetricError("evaluate: sample has " + std::to_string(s.keypoints.size()) +
                                 " joints, the model predicts " + std::to_string(k));
    }
    truth.push_back(scoring_truth(s, count_occluded));
  }
  return score(predict(model, samples, batch_size), truth);
}

EvalReport evaluate_oracle(const std::vector<data::PoseSample>& samples, const metrics::GaussianSpec& spec,
                           bool count_occluded) {
  std::vector<Prediction> preds;
  std::vector<metrics::Keypoints> truth;
  for (const auto& s : samples) {
    truth.push_back(scoring_truth(s, count_occluded));
    const Shape& shape = s.image.shape();
    const auto maps = metrics::gaussian_targets<float>(truth.back(), s.bbox, shape.h, shape.w, spec);
    preds.push_back(decode_predictions(maps, truth.back().size()).front());
  }
  return score(preds, truth);
}

std::vector<Tensor<float>> decoder_maps(const model::UniPoseModel<float>& model, const data::VideoClip& clip) {
  NoGradGuard no_grad;
  std::vector<Tensor<float>> frames;
  for (const auto& f : clip.frames) frames.push_back(f.image);
  const Tensor<float> maps = model.forward(stack_batch(frames));
  std::vector<Tensor<float>> out;
  for (int t = 0; t < maps.shape().n; ++t) out.push_back(batch_item(maps, t));
  return out;
}

Tensor<float> windowed_maps(const model::UniPoseModel<float>& model, const std::vector<Tensor<float>>& decoded,
                            int t, int window) {
  if (t < 0 || t >= static_cast<int>(decoded.size())) throw TensorError("windowed_maps: frame out of range");
  if (window < 1) throw TensorError("windowed_maps: window must be >= 1");
  const int begin = std::max(0, t - window + 1);
  std::vector<Tensor<float>> span(decoded.begin() + begin, decoded.begin() + t + 1);
  return model.lstm_unroll(span, false).back();
}

std::vector<FrameStudyRow> frame_count_study(const model::UniPoseModel<float>& model,
                                             const std::vector<data::VideoClip>& clips,
                                             const std::vector<int>& windows, bool count_occluded) {
  if (!model.config().lstm) throw TensorError("frame_count_study: model has no recurrent head");
  if (windows.empty()) throw TensorError("frame_count_study: no windows");
  const int first = *std::max_element(windows.begin(), windows.end()) - 1;
  const int k = model.config().num_joints;
  std::vector<FrameStudyRow> rows;
  for (int w : windows) rows.push_back({w, {}});
  std::vector<metrics::Keypoints> truth;
  std::vector<std::vector<metrics::Keypoints>> preds(windows.size());
  NoGradGuard no_grad;
  for (const auto& clip : clips) {
    if (static_cast<int>(clip.frames.size()) <= first) {
      throw TensorError("frame_count_study: clips need more than " + std::to_string(first) + " frames");
    }
    const auto decoded = decoder_maps(model, clip);
    for (int t = first; t < static_cast<int>(clip.frames.size()); ++t) {
      if (clip.frames[t].keypoints.size() != k) throw metrics::MetricError("frame_count_study: joint count mismatch");
      truth.push_back(scoring_truth(clip.frames[t], count_occluded));
      for (std::size_t i = 0; i < windows.size(); ++i) {
        preds[i].push_back(metrics::decode_joints(windowed_maps(model, decoded, t, windows[i]), 0, k));
      }
    }
  }
  for (std::size_t i = 0; i < windows.size(); ++i) rows[i].pck = metrics::pck(preds[i], truth, 0.2);
  return rows;
}

std::string frame_study_table(const std::vector<FrameStudyRow>& rows) {
  std::string out = "frames  PCK@0.2   correct/total\n";
  char line[96];
  for (const auto& r : rows) {
    if (r.pck.defined()) {
      std::snprintf(line, sizeof line, "%6d  %6.2f%%   %zu/%zu\n", r.window, 100.0 * r.pck.rate(), r.pck.correct(),
                    r.pck.total());
    } else {
      std::snprintf(line, sizeof line, "%6d  %7s\n", r.window, "n/a");
    }
    out += line;
  }
  return out;
}

}  // namespace unipose::train
