#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "unipose/data/annotations.hpp"
#include "unipose/data/image_io.hpp"
#include "unipose/data/overlay.hpp"
#include "unipose/data/synth.hpp"
#include "unipose/metrics/heatmaps.hpp"

using namespace unipose;
using namespace unipose::data;

namespace {

const FigureModel& figure() {
  static const FigureModel f = FigureModel::lsp14();
  return f;
}

bool same_pixels(const Tensor<float>& a, const Tensor<float>& b) {
  if (!(a.shape() == b.shape())) return false;
  const auto x = a.data(), y = b.data();
  return std::equal(x.begin(), x.end(), y.begin(), y.end());
}

bool same_joints(const metrics::Keypoints& a, const metrics::Keypoints& b) {
  if (a.joints.size() != b.joints.size()) return false;
  for (std::size_t j = 0; j < a.joints.size(); ++j) {
    if (a.joints[j].x != b.joints[j].x || a.joints[j].y != b.joints[j].y ||
        a.joints[j].visible != b.joints[j].visible) {
      return false;
    }
  }
  return true;
}

std::string temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("unipose_data_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

bool outside_background_range(const Tensor<float>& img, int y, int x) {
  for (int c = 0; c < 3; ++c) {
    const float v = img.at(0, c, y, x);
    if (v < 0.15f || v > 0.85f) return true;
  }
  return false;
}

}  // namespace

TEST(Figure, DefaultSkeletonIsValidTree) {
  const auto& f = figure();
  EXPECT_NO_THROW(f.validate());
  EXPECT_EQ(f.num_joints(), 14);
  EXPECT_EQ(f.root(), joints::kNeck);
  EXPECT_EQ(f.limbs().size(), 13u);
}

TEST(Figure, RejectsCyclesAndZeroLengths) {
  FigureModel f = figure();
  f.parent[joints::kNeck] = joints::kHeadTop;  // no root, cycle
  EXPECT_THROW(f.validate(), DataError);
  f = figure();
  f.limb_length[0] = 0.0;
  EXPECT_THROW(f.validate(), DataError);
  f = figure();
  f.joint_color.pop_back();
  EXPECT_THROW(f.validate(), DataError);
}

TEST(Synth, SameSeedIsBitIdentical) {
  const auto a = synth_pose_sample(42, figure());
  const auto b = synth_pose_sample(42, figure());
  const auto c = synth_pose_sample(43, figure());
  EXPECT_TRUE(same_pixels(a.image, b.image));
  EXPECT_TRUE(same_joints(a.keypoints, b.keypoints));
  EXPECT_FALSE(same_pixels(a.image, c.image));
}

TEST(Synth, ImageShapeAndRange) {
  SynthOptions o;
  o.height = 64;
  o.width = 96;
  const auto s = synth_pose_sample(1, figure(), o);
  EXPECT_EQ(s.image.shape(), (Shape{1, 3, 64, 96}));
  for (float v : s.image.data()) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
  }
}

TEST(Synth, RejectsSizesNotDivisibleBy8) {
  SynthOptions o;
  o.height = 60;
  EXPECT_THROW(synth_pose_sample(1, figure(), o), DataError);
}

TEST(Synth, JointPixelsStandOutFromBackground) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = synth_pose_sample(seed, figure());
    for (const auto& j : s.keypoints.joints) {
      ASSERT_TRUE(j.visible);
      EXPECT_TRUE(outside_background_range(s.image, int(j.y), int(j.x))) << "seed " << seed;
    }
  }
}

TEST(Synth, KeypointsAreIntegerAndBoxContainsThem) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = synth_pose_sample(seed, figure());
    ASSERT_TRUE(s.bbox.valid());
    EXPECT_GE(s.bbox.x_min, 0.0);
    EXPECT_LE(s.bbox.x_max, 63.0);
    for (const auto& j : s.keypoints.joints) {
      EXPECT_EQ(j.x, std::round(j.x));
      EXPECT_EQ(j.y, std::round(j.y));
      EXPECT_TRUE(s.bbox.contains(j.point()));
    }
    ASSERT_TRUE(s.keypoints.torso && s.keypoints.head);
    EXPECT_GT(s.keypoints.torso->length(), 0.0);
  }
}

TEST(Synth, BoxIsTightPlusMargin) {
  const auto s = synth_pose_sample(5, figure());
  double x0 = 1e9, x1 = -1e9;
  for (const auto& j : s.keypoints.joints) {
    x0 = std::min(x0, j.x);
    x1 = std::max(x1, j.x);
  }
  EXPECT_DOUBLE_EQ(s.bbox.x_min, std::max(0.0, x0 - 3.0));
  EXPECT_DOUBLE_EQ(s.bbox.x_max, std::min(63.0, x1 + 3.0));
}

TEST(Synth, UnplaceableFigureFailsAfterRetries) {
  FigureModel huge = figure();
  for (auto& l : huge.limb_length) l *= 10.0;
  SynthOptions o;
  o.max_retries = 5;
  try {
    synth_pose_sample(1, huge, o);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("5 attempts"), std::string::npos);
  }
}

TEST(Synth, GroundTruthHeatmapsDecodeToLabels) {
  metrics::GaussianSpec spec;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = synth_pose_sample(seed, figure());
    const auto maps = metrics::gaussian_targets<float>(s.keypoints, s.bbox, 64, 64, spec);
    const auto decoded = metrics::decode_joints(maps, 0, 14);
    for (int j = 0; j < 14; ++j) {
      EXPECT_EQ(decoded.joints[j].x, s.keypoints.joints[j].x);
      EXPECT_EQ(decoded.joints[j].y, s.keypoints.joints[j].y);
    }
  }
}

TEST(Video, ZeroAmplitudeFreezesFrames) {
  MotionOptions m;
  m.amplitude = 0.0;
  const auto clip = synth_video_clip(3, figure(), 6, m);
  ASSERT_EQ(clip.frames.size(), 6u);
  for (const auto& f : clip.frames) {
    EXPECT_TRUE(same_pixels(f.image, clip.frames[0].image));
    EXPECT_TRUE(same_joints(f.keypoints, clip.frames[0].keypoints));
  }
}

TEST(Video, Deterministic) {
  MotionOptions m;
  m.blur = 1.0;
  m.occlusion_probability = 0.5;
  const auto a = synth_video_clip(9, figure(), 5, m);
  const auto b = synth_video_clip(9, figure(), 5, m);
  for (int t = 0; t < 5; ++t) EXPECT_TRUE(same_pixels(a.frames[t].image, b.frames[t].image));
}

TEST(Video, DisplacementRespectsVelocityBound) {
  for (double bound : {1.5, 2.0, 3.0}) {
    MotionOptions m;
    m.max_velocity = bound;
    m.amplitude = 2.0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto clip = synth_video_clip(seed, figure(), 8, m);
      for (std::size_t t = 1; t < clip.frames.size(); ++t) {
        for (int j = 0; j < 14; ++j) {
          const auto& a = clip.frames[t - 1].keypoints.joints[j];
          const auto& b = clip.frames[t].keypoints.joints[j];
          EXPECT_LE(std::hypot(a.x - b.x, a.y - b.y), bound + 1e-12);
        }
      }
    }
  }
}

TEST(Video, MotionActuallyMoves) {
  const auto clip = synth_video_clip(4, figure(), 8);
  EXPECT_FALSE(same_joints(clip.frames.front().keypoints, clip.frames.back().keypoints));
}

TEST(Video, RejectsBadMotion) {
  MotionOptions m;
  m.max_velocity = 1.0;
  EXPECT_THROW(synth_video_clip(1, figure(), 3, m), DataError);
  EXPECT_THROW(synth_video_clip(1, figure(), 0), DataError);
}

TEST(Video, OcclusionHidesExactlyCoveredJoints) {
  MotionOptions m;
  m.occlusion_probability = 1.0;
  int events = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto clip = synth_video_clip(seed, figure(), 6, m);
    std::vector<int> occluded_frames;
    for (int t = 0; t < 6; ++t) {
      const auto& f = clip.frames[t];
      if (!f.meta.occluder) {
        for (const auto& j : f.keypoints.joints) EXPECT_TRUE(j.visible);
        continue;
      }
      occluded_frames.push_back(t);
      const auto& box = *f.meta.occluder;
      // Coverage oracle: inclusive pixel rectangle test on integer labels.
      for (int j = 0; j < 14; ++j) {
        const auto& jt = f.keypoints.joints[j];
        const bool covered = jt.x >= box.x_min && jt.x <= box.x_max && jt.y >= box.y_min && jt.y <= box.y_max;
        EXPECT_EQ(jt.visible, !covered);
        EXPECT_EQ(f.meta.occluded[j], covered);
      }
      // The rectangle is painted as one flat gray.
      const float g = f.image.at(0, 0, int(box.y_min), int(box.x_min));
      for (int y = int(box.y_min); y <= int(box.y_max); ++y)
        for (int x = int(box.x_min); x <= int(box.x_max); ++x)
          for (int c = 0; c < 3; ++c) ASSERT_EQ(f.image.at(0, c, y, x), g);
    }
    ASSERT_FALSE(occluded_frames.empty());
    EXPECT_LE(occluded_frames.size(), 3u);
    EXPECT_EQ(occluded_frames.back() - occluded_frames.front() + 1, int(occluded_frames.size()));
    ++events;
  }
  EXPECT_EQ(events, 40);
}

TEST(Video, BlurSpreadsTheFigure) {
  MotionOptions moving;
  moving.amplitude = 1.5;
  moving.blur = 1.0;
  const auto clip = synth_video_clip(11, figure(), 4, moving);
  for (const auto& f : clip.frames) {
    for (float v : f.image.data()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
  MotionOptions moving_sharp = moving;
  moving_sharp.blur = 0.0;
  const auto ref = synth_video_clip(11, figure(), 4, moving_sharp);
  EXPECT_FALSE(same_pixels(clip.frames[2].image, ref.frames[2].image));
}

TEST(ImageIo, PngRoundTripIsLossless) {
  const auto s = synth_pose_sample(7, figure());
  const Rgb8Image rgb = to_rgb8(s.image);
  const Rgb8Image back = decode_png(encode_png(rgb));
  EXPECT_EQ(back.height, 64);
  EXPECT_EQ(back.width, 64);
  EXPECT_EQ(back.pixels, rgb.pixels);
  const auto t = from_rgb8(back);
  double worst = 0.0;
  for (std::size_t i = 0; i < t.numel(); ++i) worst = std::max(worst, double(std::abs(t.data()[i] - s.image.data()[i])));
  EXPECT_LE(worst, 0.5 / 255.0 + 1e-6);
}

TEST(ImageIo, RejectsGarbageAndMissingFiles) {
  EXPECT_THROW(decode_png("not a png at all"), IoError);
  EXPECT_THROW(read_png("/nonexistent/x.png"), IoError);
  EXPECT_THROW(write_png("/nonexistent/dir/x.png", Rgb8Image(8, 8)), IoError);
}

namespace {

Annotations sample_annotations() {
  Annotations a;
  a.num_joints = 14;
  a.limbs = figure().limbs();
  for (std::uint64_t s = 0; s < 3; ++s) a.images.push_back(make_record(synth_pose_sample(s, figure()), "img.png"));
  MotionOptions m;
  m.occlusion_probability = 1.0;
  const auto clip = synth_video_clip(1, figure(), 3, m);
  ClipAnnotation c;
  c.seed = clip.seed;
  for (const auto& f : clip.frames) c.frames.push_back(make_record(f, "f.png"));
  a.clips.push_back(c);
  return a;
}

std::string expect_annotation_error(const std::string& text) {
  try {
    parse_annotations(text);
  } catch (const AnnotationError& e) {
    return e.what();
  }
  ADD_FAILURE() << "document was accepted";
  return {};
}

}  // namespace

TEST(Annotations, RoundTripIsIdentity) {
  const Annotations a = sample_annotations();
  const std::string text = to_json(a);
  const Annotations b = parse_annotations(text);
  EXPECT_EQ(to_json(b), text);
  ASSERT_EQ(b.images.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_TRUE(same_joints(a.images[i].keypoints, b.images[i].keypoints));
    EXPECT_EQ(b.images[i].keypoints.limbs, a.limbs);
    EXPECT_EQ(b.images[i].bbox.x_max, a.images[i].bbox.x_max);
    EXPECT_EQ(b.images[i].seed, a.images[i].seed);
  }
  EXPECT_EQ(b.clips[0].frames[1].occluded, a.clips[0].frames[1].occluded);
}

TEST(Annotations, NanStringRejectedWithFieldPath) {
  std::string text = to_json(sample_annotations());
  auto doc = nlohmann::json::parse(text);
  doc["images"][1]["keypoints"][2][0] = "NaN";
  const std::string msg = expect_annotation_error(doc.dump());
  EXPECT_NE(msg.find("images[1].keypoints[2][0]"), std::string::npos) << msg;
  EXPECT_NE(msg.find("string"), std::string::npos) << msg;
}

TEST(Annotations, InconsistentJointCountInClipRejected) {
  auto doc = nlohmann::json::parse(to_json(sample_annotations()));
  doc["clips"][0]["frames"][1]["keypoints"].erase(3);
  const std::string msg = expect_annotation_error(doc.dump());
  EXPECT_NE(msg.find("clips[0].frames[1].keypoints"), std::string::npos) << msg;
  EXPECT_NE(msg.find("13"), std::string::npos) << msg;
}

TEST(Annotations, ReferenceSegmentsRequiredByDefault) {
  auto doc = nlohmann::json::parse(to_json(sample_annotations()));
  doc["images"][0]["torso"] = nullptr;
  const std::string msg = expect_annotation_error(doc.dump());
  EXPECT_NE(msg.find("images[0].torso"), std::string::npos) << msg;
  AnnotationRules lax;
  lax.require_references = false;
  const auto a = parse_annotations(doc.dump(), lax);
  EXPECT_FALSE(a.images[0].keypoints.torso.has_value());
}

TEST(Annotations, HeaderAndShapeViolations) {
  const auto base = nlohmann::json::parse(to_json(sample_annotations()));
  auto doc = base;
  doc["version"] = 2;
  EXPECT_NE(expect_annotation_error(doc.dump()).find("version"), std::string::npos);
  doc = base;
  doc["format"] = "coco";
  EXPECT_NE(expect_annotation_error(doc.dump()).find("format"), std::string::npos);
  doc = base;
  doc["images"][2]["bbox"] = {10, 10, 5, 20};
  EXPECT_NE(expect_annotation_error(doc.dump()).find("images[2].bbox"), std::string::npos);
  doc = base;
  doc["images"][0]["keypoints"][0][2] = 0.5;
  EXPECT_NE(expect_annotation_error(doc.dump()).find("images[0].keypoints[0][2]"), std::string::npos);
  doc = base;
  doc["limbs"][0][1] = 14;
  EXPECT_NE(expect_annotation_error(doc.dump()).find("limbs[0][1]"), std::string::npos);
  doc = base;
  doc["images"][1].erase("bbox");
  EXPECT_NE(expect_annotation_error(doc.dump()).find("images[1].bbox: missing"), std::string::npos);
  EXPECT_NE(expect_annotation_error("{ not json").find("document"), std::string::npos);
}

TEST(Annotations, DatasetDirectoryRoundTrip) {
  const std::string dir = temp_dir("dataset");
  std::vector<PoseSample> images;
  for (std::uint64_t s = 0; s < 4; ++s) images.push_back(synth_pose_sample(s, figure()));
  std::vector<VideoClip> clips{synth_video_clip(2, figure(), 3)};
  write_dataset(dir, images, clips);
  EXPECT_TRUE(std::filesystem::exists(dir + "/images/000003.png"));
  EXPECT_TRUE(std::filesystem::exists(dir + "/clips/0000/frame_002.png"));
  const Dataset d = load_dataset(dir);
  ASSERT_EQ(d.images.size(), 4u);
  ASSERT_EQ(d.clips.size(), 1u);
  ASSERT_EQ(d.clips[0].frames.size(), 3u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_TRUE(same_joints(d.images[i].keypoints, images[i].keypoints));
    EXPECT_EQ(to_rgb8(d.images[i].image).pixels, to_rgb8(images[i].image).pixels);
  }
  EXPECT_THROW(load_dataset(dir + "/missing"), IoError);
}

TEST(Overlay, GroundTruthMarkersSitOnRenderedJoints) {
  const auto s = synth_pose_sample(21, figure());
  const auto style = OverlayStyle::for_figure(figure());
  const auto img = render_overlay(s.image, s.keypoints, s.bbox, style);
  EXPECT_EQ(img.height, 64);
  EXPECT_EQ(img.width, 64);
  for (int j = 0; j < 14; ++j) {
    const auto& kp = s.keypoints.joints[j];
    const auto* p = img.at(int(kp.y), int(kp.x));
    // Later markers may overwrite earlier ones when joints share a pixel.
    bool matches_some_joint = false;
    for (const auto& c : style.joint_colors) matches_some_joint |= p[0] == c[0] && p[1] == c[1] && p[2] == c[2];
    EXPECT_TRUE(matches_some_joint) << "joint " << j;
    EXPECT_TRUE(outside_background_range(s.image, int(kp.y), int(kp.x)));
  }
}

TEST(Overlay, HiddenJointsAreNotDrawnAndBytesAreStable) {
  auto s = synth_pose_sample(22, figure());
  const auto style = OverlayStyle::for_figure(figure());
  const auto plain = to_rgb8(s.image);
  for (auto& j : s.keypoints.joints) j.visible = false;
  const auto img = render_overlay(s.image, s.keypoints, std::nullopt, style);
  EXPECT_EQ(img.pixels, plain.pixels);

  const auto again = synth_pose_sample(22, figure());
  const std::string dir = temp_dir("overlay");
  write_overlay(dir + "/a.png", again.image, again.keypoints, again.bbox, style);
  write_overlay(dir + "/b.png", again.image, again.keypoints, again.bbox, style);
  auto bytes = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(bytes(dir + "/a.png"), bytes(dir + "/b.png"));
  EXPECT_EQ(read_png(dir + "/a.png").width, 64);
  EXPECT_THROW(write_overlay("/nonexistent/o.png", again.image, again.keypoints, again.bbox, style), IoError);
}
