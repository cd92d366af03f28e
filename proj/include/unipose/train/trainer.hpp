#pragma once

#include <string>
#include <vector>

#include "unipose/data/synth.hpp"
#include "unipose/model/unipose.hpp"
#include "unipose/train/config.hpp"
#include "unipose/train/run_log.hpp"

namespace unipose::train {

struct EpochRecord {
  int epoch = 0;
  int steps = 0;
  double loss = 0.0;    // mean over the epoch's steps
  double lr = 0.0;
  double metric = 0.0;  // held-out PCK@0.2, NaN without a held-out split
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::vector<double> step_losses;
  int steps = 0;
  /// Set when a non-finite loss stopped the run; the model then holds the
  /// weights of the last completed epoch.
  bool diverged = false;
  std::string message;
  int best_epoch = -1;
  double best_metric = 0.0;
};

/// Mini-batch training of the single-frame network with the step schedule.
/// With a held-out split the model ends at (and the checkpoint holds) the
/// best-scoring epoch; otherwise the last one. Deterministic given the
/// config seed.
TrainResult train_model(model::UniPoseModel<float>& model, const TrainConfig& config,
                        const std::vector<data::PoseSample>& train_set,
                        const std::vector<data::PoseSample>& held_out, RunLog& log,
                        const std::string& checkpoint_path = "");

/// Trains only the recurrent head on frozen decoder heatmaps, with the loss
/// taken after every step of each lstm_frames window.
TrainResult train_lstm(model::UniPoseModel<float>& model, const TrainConfig& config,
                       const std::vector<data::VideoClip>& clips, const std::vector<data::VideoClip>& held_out,
                       RunLog& log, const std::string& checkpoint_path = "");

/// Copies every parameter of `from` whose name and shape match one in `to`.
/// Returns the number of tensors copied.
std::size_t transfer_weights(const nn::ParamList<float>& from, const nn::ParamList<float>& to);

}  // namespace unipose::train
