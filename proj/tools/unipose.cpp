// Command-line front end: dataset synthesis, training, evaluation,
// inference, architecture report and the LSTM frame-count study.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "unipose/arch/wasp.hpp"
#include "unipose/data/annotations.hpp"
#include "unipose/data/image_io.hpp"
#include "unipose/data/overlay.hpp"
#include "unipose/model/checkpoint.hpp"
#include "unipose/train/batch.hpp"
#include "unipose/train/evaluate.hpp"
#include "unipose/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace unipose;

namespace {

enum Exit { kOk = 0, kUsage = 2, kIo = 3, kData = 4, kCheckpoint = 5, kDiverged = 6 };

struct Diverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags are applied on top of the config file; unset flags leave it alone.
template <typename T>
void override(util::KeyValues& kv, const std::string& key, const std::optional<T>& flag) {
  if (flag) kv.set(key, *flag);
}

void override(util::KeyValues& kv, const std::string& key, const std::optional<std::uint64_t>& flag) {
  if (flag) kv.set(key, std::to_string(*flag));
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

model::ModelConfig preset(const std::string& name, int num_joints) {
  if (name == "tiny") return model::ModelConfig::tiny(num_joints);
  if (name == "full") {
    model::ModelConfig c;
    c.num_joints = num_joints;
    return c;
  }
  throw train::ConfigError("unknown model preset '" + name + "' (tiny or full)");
}

void print_joints(const metrics::Keypoints& kp, const std::optional<metrics::Box>& box, const std::string& tag) {
  for (int j = 0; j < kp.size(); ++j) {
    const auto& p = kp.joints[j];
    std::printf("%sjoint %d x=%g y=%g confidence=%g\n", tag.c_str(), j, p.x, p.y, p.confidence);
  }
  if (box) std::printf("%sbox x_min=%g y_min=%g x_max=%g y_max=%g\n", tag.c_str(), box->x_min, box->y_min, box->x_max, box->y_max);
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
  std::string out;
  std::optional<int> images, clips, frames, height, width;
  std::optional<std::uint64_t> seed;
  std::optional<double> blur, occlusion, amplitude, max_velocity;
};

int run_synth(const SynthArgs& a, util::KeyValues kv) {
  override(kv, "synth.images", a.images);
  override(kv, "synth.clips", a.clips);
  override(kv, "synth.frames", a.frames);
  override(kv, "synth.height", a.height);
  override(kv, "synth.width", a.width);
  override(kv, "synth.seed", a.seed);
  override(kv, "synth.blur", a.blur);
  override(kv, "synth.occlusion", a.occlusion);
  override(kv, "synth.amplitude", a.amplitude);
  override(kv, "synth.max_velocity", a.max_velocity);
  const auto s = kv.subset("synth.");
  int images = 100, clips = 0, frames = 8;
  s.read("images", images);
  s.read("clips", clips);
  s.read("frames", frames);
  if (images < 0 || clips < 0 || frames < 1) throw train::ConfigError("synth: counts must be non-negative");
  std::uint64_t seed = s.has("seed") ? std::stoull(s.get_string("seed")) : 0;
  data::SynthOptions opt;
  s.read("height", opt.height);
  s.read("width", opt.width);
  data::MotionOptions motion;
  s.read("blur", motion.blur);
  s.read("occlusion", motion.occlusion_probability);
  s.read("amplitude", motion.amplitude);
  s.read("max_velocity", motion.max_velocity);
  opt.validate();
  motion.validate();

  const auto figure = data::FigureModel::lsp14();
  std::vector<data::PoseSample> stills;
  for (int i = 0; i < images; ++i) stills.push_back(data::synth_pose_sample(data::derive_seed(seed, i), figure, opt));
  std::vector<data::VideoClip> video;
  for (int c = 0; c < clips; ++c) {
    video.push_back(data::synth_video_clip(data::derive_seed(seed ^ 0xc11bULL, c), figure, frames, motion, opt));
  }
  data::write_dataset(a.out, stills, video);
  std::printf("wrote %d images and %d clips of %d frames to %s\n", images, clips, frames, a.out.c_str());
  return kOk;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  std::string data, out = "unipose.ckpt", log, held_out, init;
  std::optional<int> epochs, batch, max_steps, lstm_frames, holdout, lstm_epochs;
  std::optional<double> lr, lr_decay, sigma;
  std::optional<std::string> lr_steps, optimizer, preset;
  std::optional<std::uint64_t> seed, model_seed;
  bool lstm = false;
};

int run_train(const TrainArgs& a, util::KeyValues kv) {
  override(kv, "train.epochs", a.epochs);
  override(kv, "train.batch_size", a.batch);
  override(kv, "train.max_steps", a.max_steps);
  override(kv, "train.lstm_frames", a.lstm_frames);
  override(kv, "train.initial_lr", a.lr);
  override(kv, "train.lr_decay_factor", a.lr_decay);
  override(kv, "train.sigma", a.sigma);
  override(kv, "train.lr_step_epochs", a.lr_steps);
  override(kv, "train.optimizer", a.optimizer);
  override(kv, "train.seed", a.seed);
  override(kv, "run.preset", a.preset);
  override(kv, "run.holdout", a.holdout);
  override(kv, "run.lstm_epochs", a.lstm_epochs);
  override(kv, "run.model_seed", a.model_seed);
  if (a.lstm) kv.set("model.lstm", true);

  const auto tc = train::TrainConfig::from_kv(kv.subset("train."));
  tc.validate();
  const auto run = kv.subset("run.");
  std::string preset_name = "tiny";
  run.read("preset", preset_name);
  int holdout = 0, lstm_epochs = tc.epochs;
  run.read("holdout", holdout);
  run.read("lstm_epochs", lstm_epochs);
  std::uint64_t model_seed = run.has("model_seed") ? std::stoull(run.get_string("model_seed")) : tc.seed;

  const auto mkv = kv.subset("model.");
  int num_joints = 14;
  mkv.read("num_joints", num_joints);
  auto mc = model::ModelConfig::from_kv(mkv, preset(preset_name, num_joints));
  if (!mkv.has("lstm_frames")) mc.lstm_frames = tc.lstm_frames;
  mc.validate();

  if (tc.epochs == 0) {
    std::printf("config ok; epochs = 0, nothing to train\n");
    util::KeyValues echo;
    echo.merge(tc.to_kv(), "train.");
    echo.merge(mc.to_kv(), "model.");
    echo.set("run.preset", preset_name);
    echo.set("run.holdout", holdout);
    std::printf("%s", echo.str().c_str());
    return kOk;
  }

  data::Dataset ds = data::load_dataset(a.data);
  std::vector<data::PoseSample> images = ds.images;
  std::vector<data::PoseSample> held;
  if (!a.held_out.empty()) {
    held = data::load_dataset(a.held_out).images;
  } else if (holdout > 0) {
    if (holdout >= static_cast<int>(images.size())) throw train::ConfigError("holdout leaves no training images");
    held.assign(images.end() - holdout, images.end());
    images.resize(images.size() - holdout);
  }
  const auto& first = !images.empty() ? images.front() : ds.clips.at(0).frames.at(0);
  mc.input_h = first.image.shape().h;
  mc.input_w = first.image.shape().w;
  mc.num_joints = first.keypoints.size();

  std::optional<model::UniPoseModel<float>> init;
  if (!a.init.empty()) {
    // The architecture follows the initial checkpoint; only the recurrent
    // head settings come from this run.
    init = model::load_weights(a.init);
    auto widths = init->config();
    widths.lstm = mc.lstm;
    widths.lstm_frames = mc.lstm_frames;
    widths.post_lstm_channels = mc.post_lstm_channels;
    mc = widths;
  }
  if (mc.input_h != first.image.shape().h || mc.input_w != first.image.shape().w ||
      mc.num_joints != first.keypoints.size()) {
    throw metrics::MetricError("initial checkpoint expects " + std::to_string(mc.num_joints) + " joints at " +
                               std::to_string(mc.input_h) + "x" + std::to_string(mc.input_w) +
                               ", the dataset differs");
  }
  model::UniPoseModel<float> model(mc, model_seed);
  if (init) {
    const auto copied = train::transfer_weights(init->parameters(), model.parameters());
    std::printf("initialised %zu tensors from %s\n", copied, a.init.c_str());
  }
  std::optional<train::RunLog> file_log;
  if (!a.log.empty()) file_log.emplace(a.log);
  train::RunLog memory_log;
  train::RunLog& log = file_log ? *file_log : memory_log;

  const bool train_base = a.init.empty() || !mc.lstm;
  if (train_base) {
    std::vector<data::PoseSample> base_set = images;
    if (mc.lstm) {
      for (const auto& c : ds.clips) base_set.insert(base_set.end(), c.frames.begin(), c.frames.end());
    }
    if (base_set.empty()) throw data::DataError("dataset has no images to train on");
    const auto r = train::train_model(model, tc, base_set, held, log, mc.lstm ? "" : a.out);
    for (const auto& e : r.epochs) {
      std::printf("epoch %d loss %.6g lr %.3g held-out PCK %.4f (%.1f s)\n", e.epoch, e.loss, e.lr, e.metric,
                  e.seconds);
    }
    if (r.diverged) throw Diverged(r.message);
    if (!mc.lstm && held.empty()) model::save_weights(model, a.out);
  }
  if (mc.lstm) {
    if (ds.clips.empty()) throw data::DataError("LSTM training needs clips in the dataset");
    auto lc = tc;
    lc.epochs = lstm_epochs;
    std::vector<data::VideoClip> train_clips = ds.clips, held_clips;
    if (train_clips.size() > 1 && holdout > 0) {
      const std::size_t n = std::max<std::size_t>(1, train_clips.size() / 10);
      held_clips.assign(train_clips.end() - n, train_clips.end());
      train_clips.resize(train_clips.size() - n);
    }
    const auto r = train::train_lstm(model, lc, train_clips, held_clips, log, a.out);
    for (const auto& e : r.epochs) {
      std::printf("lstm epoch %d loss %.6g lr %.3g held-out PCK %.4f (%.1f s)\n", e.epoch, e.loss, e.lr, e.metric,
                  e.seconds);
    }
    if (r.diverged) throw Diverged(r.message);
    if (held_clips.empty()) model::save_weights(model, a.out);
  }
  std::printf("checkpoint %s\n", a.out.c_str());
  return kOk;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint, data, metric = "all";
  bool oracle = false, count_occluded = false;
  int window = 0;
  double sigma = 3.0;
};

void print_report(const train::EvalReport& report, const std::string& metric) {
  bool any = false;
  for (const auto& r : report.reports) {
    std::string name = r.metric;
    std::transform(name.begin(), name.end(), name.begin(), ::tolower);
    if (metric != "all" && name != metric && !(metric == "containment" && name == "boxcontainment")) continue;
    std::printf("%s%s", r.to_kv().c_str(), r.to_table().c_str());
    any = true;
  }
  if (!any) throw train::ConfigError("unknown metric '" + metric + "' (pck, pckh, pcp, containment, all)");
}

int run_eval(const EvalArgs& a) {
  const data::Dataset ds = data::load_dataset(a.data);
  std::vector<data::PoseSample> frames = ds.images;
  if (a.oracle) {
    for (const auto& c : ds.clips) frames.insert(frames.end(), c.frames.begin(), c.frames.end());
    metrics::GaussianSpec spec;
    spec.sigma = a.sigma;
    print_report(train::evaluate_oracle(frames, spec, a.count_occluded), a.metric);
    return kOk;
  }
  if (a.checkpoint.empty()) throw train::ConfigError("eval needs --checkpoint unless --oracle is given");
  const auto model = model::load_weights(a.checkpoint);
  if (!model.config().lstm) {
    for (const auto& c : ds.clips) frames.insert(frames.end(), c.frames.begin(), c.frames.end());
    if (frames.empty()) throw data::DataError("dataset is empty");
    print_report(train::evaluate(model, frames, a.count_occluded), a.metric);
    return kOk;
  }
  if (ds.clips.empty()) throw data::DataError("an LSTM checkpoint is evaluated on clips; the dataset has none");
  std::vector<train::Prediction> preds;
  std::vector<metrics::Keypoints> truth;
  const int k = model.config().num_joints;
  for (const auto& clip : ds.clips) {
    const auto decoded = train::decoder_maps(model, clip);
    for (int t = 0; t < static_cast<int>(clip.frames.size()); ++t) {
      if (clip.frames[t].keypoints.size() != k) throw metrics::MetricError("clip joint count differs from the model");
      const auto maps = train::windowed_maps(model, decoded, t, a.window > 0 ? a.window : model.config().lstm_frames);
      preds.push_back(train::decode_predictions(maps, k).front());
      truth.push_back(train::scoring_truth(clip.frames[t], a.count_occluded));
    }
  }
  print_report(train::score(preds, truth), a.metric);
  return kOk;
}

// ------------------------------------------------------------------ infer

struct InferArgs {
  std::string checkpoint, image, clip, out;
};

int run_infer(const InferArgs& a) {
  const auto model = model::load_weights(a.checkpoint);
  const int k = model.config().num_joints;
  data::OverlayStyle style = k == 14 ? data::OverlayStyle::for_figure(data::FigureModel::lsp14()) : data::OverlayStyle{};
  std::vector<std::pair<int, int>> limbs;
  if (k == 14) limbs = data::FigureModel::lsp14().limbs();

  if (!a.image.empty()) {
    const auto image = data::from_rgb8(data::read_png(a.image));
    Tensor<float> maps;
    {
      NoGradGuard no_grad;
      maps = model.config().lstm ? model.forward_sequence({image}, 1).front() : model.forward(image);
    }
    auto pred = train::decode_predictions(maps, k).front();
    pred.keypoints.limbs = limbs;
    print_joints(pred.keypoints, pred.box, "");
    data::write_overlay(a.out, image, pred.keypoints, pred.box, style);
    std::printf("overlay %s\n", a.out.c_str());
    return kOk;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.clip)) {
    if (e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw data::DataError("no PNG frames in '" + a.clip + "'");
  std::vector<Tensor<float>> frames;
  for (const auto& f : files) frames.push_back(data::from_rgb8(data::read_png(f.string())));
  std::vector<Tensor<float>> maps;
  {
    NoGradGuard no_grad;
    if (model.config().lstm) {
      maps = model.forward_sequence(frames);
    } else {
      for (const auto& f : frames) maps.push_back(model.forward(f));
    }
  }
  fs::create_directories(a.out);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    auto pred = train::decode_predictions(maps[t], k).front();
    pred.keypoints.limbs = limbs;
    print_joints(pred.keypoints, pred.box, "frame " + std::to_string(t) + " ");
    const auto path = (fs::path(a.out) / ("overlay_" + files[t].stem().string() + ".png")).string();
    data::write_overlay(path, frames[t], pred.keypoints, pred.box, style);
  }
  std::printf("overlays %s\n", a.out.c_str());
  return kOk;
}

// ------------------------------------------------------------ report-arch

struct ArchArgs {
  std::optional<int> in_channels, branch_channels, out_channels;
  std::optional<std::string> rates;
};

int run_report_arch(const ArchArgs& a, util::KeyValues kv) {
  override(kv, "model.wasp.in_channels", a.in_channels);
  override(kv, "model.wasp.branch_channels", a.branch_channels);
  override(kv, "model.wasp.out_channels", a.out_channels);
  override(kv, "model.wasp.rates", a.rates);
  const auto mc = model::ModelConfig::from_kv(kv.subset("model."));
  const auto& w = mc.wasp;
  w.validate(false);
  const auto wasp = arch::wasp_spec(w);
  const auto aspp = arch::aspp_spec(w);
  const auto wrf = arch::receptive_field(wasp);
  const auto arf = arch::receptive_field(aspp);
  std::vector<int> wasp_branches, aspp_branches;
  for (std::size_t i = 1; i <= w.rates.size(); ++i) {
    wasp_branches.push_back(arch::receptive_field_at(wasp, "atrous" + std::to_string(i)).h);
    aspp_branches.push_back(arch::receptive_field_at(aspp, "atrous" + std::to_string(i)).h);
  }
  std::vector<int> rates(w.rates.begin(), w.rates.end());
  std::printf("in_channels = %d\nbranch_channels = %d\nout_channels = %d\nrates = %s\n", w.in_channels,
              w.branch_channels, w.out_channels, join(rates).c_str());
  std::printf("wasp.params = %lld\n", static_cast<long long>(arch::param_count(wasp)));
  std::printf("wasp.receptive_field = %d\n", wrf.h);
  std::printf("wasp.branch_receptive_fields = %s\n", join(wasp_branches).c_str());
  std::printf("aspp.params = %lld\n", static_cast<long long>(arch::param_count(aspp)));
  std::printf("aspp.receptive_field = %d\n", arf.h);
  std::printf("aspp.branch_receptive_fields = %s\n", join(aspp_branches).c_str());
  std::printf("wasp_fewer_params = %s\n", arch::param_count(wasp) < arch::param_count(aspp) ? "true" : "false");
  return kOk;
}

// ------------------------------------------------------------- study-lstm

struct StudyArgs {
  std::string checkpoint, data, frames = "1,2,3,4,5,6";
  bool count_occluded = true;
};

int run_study(const StudyArgs& a) {
  const auto model = model::load_weights(a.checkpoint);
  util::KeyValues parse;
  parse.set("frames", a.frames);
  const auto windows = parse.get_int_list("frames");
  const auto ds = data::load_dataset(a.data);
  if (ds.clips.empty()) throw data::DataError("the frame-count study needs clips");
  const auto rows = train::frame_count_study(model, ds.clips, windows, a.count_occluded);
  std::printf("%s", train::frame_study_table(rows).c_str());
  for (const auto& r : rows) {
    std::printf("window.%d.pck = %s\n", r.window, r.pck.defined() ? train::RunLog::number(r.pck.rate()).c_str() : "undefined");
  }
  return kOk;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const Diverged& e) {
    std::fprintf(stderr, "error[diverged]: %s (last good checkpoint kept)\n", e.what());
    return kDiverged;
  } catch (const model::CheckpointError& e) {
    std::fprintf(stderr, "error[checkpoint]: %s\n", e.what());
    return kCheckpoint;
  } catch (const data::IoError& e) {
    std::fprintf(stderr, "error[io]: %s\n", e.what());
    return kIo;
  } catch (const data::DataError& e) {
    std::fprintf(stderr, "error[data]: %s\n", e.what());
    return kData;
  } catch (const metrics::MetricError& e) {
    std::fprintf(stderr, "error[data]: %s\n", e.what());
    return kData;
  } catch (const util::KvError& e) {
    std::fprintf(stderr, "error[usage]: %s\n", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error[usage]: %s\n", e.what());
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error[io]: %s\n", e.what());
    return kIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UniPose pose estimation toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key = value config file; flags override it")->check(CLI::ExistingFile);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", sa.out, "output directory")->required();
  synth->add_option("--images", sa.images, "still images (default 100)");
  synth->add_option("--clips", sa.clips, "video clips (default 0)");
  synth->add_option("--frames", sa.frames, "frames per clip (default 8)");
  synth->add_option("--seed", sa.seed, "base seed");
  synth->add_option("--height", sa.height, "image height, multiple of 8");
  synth->add_option("--width", sa.width, "image width, multiple of 8");
  synth->add_option("--blur", sa.blur, "motion blur exposure in frames");
  synth->add_option("--occlusion", sa.occlusion, "probability of an occluder per clip");
  synth->add_option("--amplitude", sa.amplitude, "motion amplitude scale");
  synth->add_option("--max-velocity", sa.max_velocity, "max joint displacement per frame (px)");

  TrainArgs ta;
  auto* trainc = app.add_subcommand("train", "train a model");
  trainc->add_option("--data", ta.data, "dataset directory")->required()->check(CLI::ExistingPath);
  trainc->add_option("--out", ta.out, "checkpoint path");
  trainc->add_option("--log", ta.log, "append the run log to this file");
  trainc->add_option("--held-out", ta.held_out, "held-out dataset directory")->check(CLI::ExistingPath);
  trainc->add_option("--holdout", ta.holdout, "hold out the last N images of --data");
  trainc->add_option("--init", ta.init, "start from this checkpoint")->check(CLI::ExistingFile);
  trainc->add_option("--epochs", ta.epochs, "epochs; 0 validates and echoes the config");
  trainc->add_option("--lstm-epochs", ta.lstm_epochs, "epochs for the recurrent head");
  trainc->add_option("--batch", ta.batch, "batch size");
  trainc->add_option("--max-steps", ta.max_steps, "stop after this many steps");
  trainc->add_option("--lr", ta.lr, "initial learning rate");
  trainc->add_option("--lr-steps", ta.lr_steps, "comma-separated decay epochs");
  trainc->add_option("--lr-decay", ta.lr_decay, "decay factor per step");
  trainc->add_option("--optimizer", ta.optimizer, "sgd, momentum or adam");
  trainc->add_option("--sigma", ta.sigma, "target Gaussian sigma");
  trainc->add_option("--seed", ta.seed, "training seed");
  trainc->add_option("--model-seed", ta.model_seed, "weight initialisation seed");
  trainc->add_option("--preset", ta.preset, "model preset: tiny or full");
  trainc->add_flag("--lstm", ta.lstm, "train the video model");
  trainc->add_option("--lstm-frames", ta.lstm_frames, "truncation window");

  EvalArgs ea;
  auto* evalc = app.add_subcommand("eval", "score a checkpoint on a dataset");
  evalc->add_option("--checkpoint", ea.checkpoint, "checkpoint")->check(CLI::ExistingFile);
  evalc->add_option("--data", ea.data, "dataset directory")->required()->check(CLI::ExistingPath);
  evalc->add_option("--metric", ea.metric, "pck, pckh, pcp, containment or all");
  evalc->add_flag("--oracle", ea.oracle, "score encoded ground truth instead of a model");
  evalc->add_flag("--count-occluded", ea.count_occluded, "score occluded joints against their labels");
  evalc->add_option("--window", ea.window, "LSTM window (default: the model's)");
  evalc->add_option("--sigma", ea.sigma, "Gaussian sigma for --oracle");

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "decode a pose and write an overlay");
  infer->add_option("--checkpoint", ia.checkpoint, "checkpoint")->required()->check(CLI::ExistingFile);
  auto* image_opt = infer->add_option("--image", ia.image, "input PNG")->check(CLI::ExistingFile);
  auto* clip_opt = infer->add_option("--clip", ia.clip, "directory of PNG frames")->check(CLI::ExistingDirectory);
  image_opt->excludes(clip_opt);
  infer->add_option("--out", ia.out, "overlay PNG (or directory for --clip)")->required();

  ArchArgs aa;
  auto* arch = app.add_subcommand("report-arch", "WASP vs ASPP parameters and receptive fields");
  arch->add_option("--in-channels", aa.in_channels, "input channels");
  arch->add_option("--branch-channels", aa.branch_channels, "branch width");
  arch->add_option("--out-channels", aa.out_channels, "output width");
  arch->add_option("--rates", aa.rates, "comma-separated atrous rates");

  StudyArgs sta;
  auto* study = app.add_subcommand("study-lstm", "PCK against LSTM window length");
  study->add_option("--checkpoint", sta.checkpoint, "LSTM checkpoint")->required()->check(CLI::ExistingFile);
  study->add_option("--data", sta.data, "dataset with clips")->required()->check(CLI::ExistingPath);
  study->add_option("--frames", sta.frames, "comma-separated windows");
  study->add_flag("--count-occluded,!--skip-occluded", sta.count_occluded, "score occluded joints");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (infer->parsed() && ia.image.empty() == ia.clip.empty()) {
    std::fprintf(stderr, "error[usage]: infer needs exactly one of --image or --clip\n");
    return kUsage;
  }

  return guarded([&]() -> int {
    util::KeyValues kv;
    if (!config_path.empty()) kv = util::KeyValues::load(config_path);
    if (synth->parsed()) return run_synth(sa, kv);
    if (trainc->parsed()) return run_train(ta, kv);
    if (evalc->parsed()) return run_eval(ea);
    if (infer->parsed()) return run_infer(ia);
    if (arch->parsed()) return run_report_arch(aa, kv);
    return run_study(sta);
  });
}
