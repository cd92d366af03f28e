#include "unipose/model/config.hpp"

namespace unipose::model {

void ModelConfig::validate() const {
  if (num_joints < 1) throw TensorError("ModelConfig: num_joints must be >= 1");
  if (input_h < 8 || input_w < 8 || input_h % 8 != 0 || input_w % 8 != 0) {
    throw TensorError("ModelConfig: input size " + std::to_string(input_h) + "x" +
                      std::to_string(input_w) + " must be positive multiples of 8");
  }
  if (lstm_frames < 1) throw TensorError("ModelConfig: lstm_frames must be >= 1");
  if (post_lstm_channels < 1) throw TensorError("ModelConfig: post_lstm_channels must be >= 1");
  backbone.validate();
  wasp.validate(true);
  if (wasp.in_channels != backbone.deep_channels()) {
    throw TensorError("ModelConfig: wasp.in_channels " + std::to_string(wasp.in_channels) +
                      " differs from backbone deep channels " +
                      std::to_string(backbone.deep_channels()));
  }
  if (decoder.channels < 1 || decoder.refine_channels < 0) {
    throw TensorError("ModelConfig: decoder widths must be positive");
  }
  if (decoder.mid_scale < 1) throw TensorError("ModelConfig: decoder.mid_scale must be >= 1");
  if (decoder.refine_kernel < 1 || decoder.refine_kernel % 2 == 0) {
    throw TensorError("ModelConfig: decoder.refine_kernel must be a positive odd number");
  }
  if (!(decoder.dropout >= 0.0 && decoder.dropout < 1.0)) {
    throw TensorError("ModelConfig: decoder dropout must lie in [0, 1)");
  }
}

util::KeyValues ModelConfig::to_kv() const {
  util::KeyValues kv;
  kv.set("num_joints", num_joints);
  kv.set("input_h", input_h);
  kv.set("input_w", input_w);
  kv.set("lstm", lstm);
  kv.set("lstm_frames", lstm_frames);
  kv.set("post_lstm_channels", post_lstm_channels);
  kv.set("backbone.in_channels", backbone.in_channels);
  kv.set("backbone.stem_channels", backbone.stem_channels);
  kv.set("backbone.stage_channels", backbone.stage_channels);
  kv.set("backbone.blocks_per_stage", backbone.blocks_per_stage);
  kv.set("backbone.stage_strides", backbone.stage_strides);
  kv.set("backbone.stage_dilations", backbone.stage_dilations);
  kv.set("backbone.output_stride", backbone.output_stride);
  kv.set("wasp.in_channels", wasp.in_channels);
  kv.set("wasp.branch_channels", wasp.branch_channels);
  kv.set("wasp.out_channels", wasp.out_channels);
  kv.set("wasp.rates", std::vector<int>(wasp.rates.begin(), wasp.rates.end()));
  kv.set("decoder.channels", decoder.channels);
  kv.set("decoder.refine_channels", decoder.refine_channels);
  kv.set("decoder.refine_kernel", decoder.refine_kernel);
  kv.set("decoder.mid_scale", decoder.mid_scale);
  kv.set("decoder.dropout", decoder.dropout);
  return kv;
}

ModelConfig ModelConfig::from_kv(const util::KeyValues& kv, ModelConfig c) {
  kv.read("num_joints", c.num_joints);
  kv.read("input_h", c.input_h);
  kv.read("input_w", c.input_w);
  kv.read("lstm", c.lstm);
  kv.read("lstm_frames", c.lstm_frames);
  kv.read("post_lstm_channels", c.post_lstm_channels);
  kv.read("backbone.in_channels", c.backbone.in_channels);
  kv.read("backbone.stem_channels", c.backbone.stem_channels);
  kv.read("backbone.stage_channels", c.backbone.stage_channels);
  kv.read("backbone.blocks_per_stage", c.backbone.blocks_per_stage);
  kv.read("backbone.stage_strides", c.backbone.stage_strides);
  kv.read("backbone.stage_dilations", c.backbone.stage_dilations);
  kv.read("backbone.output_stride", c.backbone.output_stride);
  kv.read("wasp.in_channels", c.wasp.in_channels);
  kv.read("wasp.branch_channels", c.wasp.branch_channels);
  kv.read("wasp.out_channels", c.wasp.out_channels);
  if (kv.has("wasp.rates")) {
    const auto rates = kv.get_int_list("wasp.rates");
    if (rates.size() != 4) throw util::KvError("wasp.rates must list exactly 4 rates");
    std::copy(rates.begin(), rates.end(), c.wasp.rates.begin());
  }
  kv.read("decoder.channels", c.decoder.channels);
  kv.read("decoder.refine_channels", c.decoder.refine_channels);
  kv.read("decoder.refine_kernel", c.decoder.refine_kernel);
  kv.read("decoder.mid_scale", c.decoder.mid_scale);
  kv.read("decoder.dropout", c.decoder.dropout);
  return c;
}

ModelConfig ModelConfig::from_kv(const util::KeyValues& kv) { return from_kv(kv, ModelConfig{}); }

ModelConfig ModelConfig::tiny(int num_joints) {
  ModelConfig c;
  c.num_joints = num_joints;
  c.backbone.stem_channels = 16;
  c.backbone.stage_channels = {16, 32, 64, 64};
  c.backbone.blocks_per_stage = {1, 1, 1, 1};
  c.wasp.in_channels = 64;
  c.wasp.branch_channels = 32;
  c.wasp.out_channels = 64;
  c.decoder.channels = 64;
  c.decoder.refine_channels = 48;
  return c;
}

}  // namespace unipose::model
