#include "unipose/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace unipose::data {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Color hsv(double h, double s, double v) {
  const double i = std::floor(h * 6.0);
  const double f = h * 6.0 - i;
  const double p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
  switch (static_cast<int>(i) % 6) {
    case 0: return {float(v), float(t), float(p)};
    case 1: return {float(q), float(v), float(p)};
    case 2: return {float(p), float(v), float(t)};
    case 3: return {float(p), float(q), float(v)};
    case 4: return {float(t), float(p), float(v)};
    default: return {float(v), float(p), float(q)};
  }
}

// Per-joint angle ranges in degrees. Sided joints mirror their range.
struct AngleRange {
  int reference;  // -1: torso "down" direction, otherwise the parent limb
  double lo, hi;
  int side;       // +1 right, -1 left, 0 centre
};

const std::vector<AngleRange>& lsp_ranges() {
  static const std::vector<AngleRange> ranges = {
      {1, -80, 20, 1},     // 0 r-ankle, from the thigh
      {-1, -25, 70, 1},    // 1 r-knee
      {-1, 8, 16, 1},      // 2 r-hip
      {-1, 8, 16, -1},     // 3 l-hip
      {-1, -25, 70, -1},   // 4 l-knee
      {4, -80, 20, -1},    // 5 l-ankle
      {7, -20, 140, 1},    // 6 r-wrist
      {-1, -30, 160, 1},   // 7 r-elbow
      {-1, 75, 105, 1},    // 8 r-shoulder
      {-1, 75, 105, -1},   // 9 l-shoulder
      {-1, -30, 160, -1},  // 10 l-elbow
      {10, -20, 140, -1},  // 11 l-wrist
      {-1, 0, 0, 0},       // 12 neck (root)
      {-1, 160, 200, 0},   // 13 head-top
  };
  return ranges;
}

// Relative angles (radians) plus torso tilt describe one pose.
struct PoseParams {
  double tilt = 0.0;
  std::vector<double> angle;
};

struct Oscillation {
  double amplitude, omega, phase;
};

PoseParams sample_pose(std::mt19937_64& rng, int k) {
  const auto& ranges = lsp_ranges();
  PoseParams p;
  p.tilt = std::uniform_real_distribution<double>(-25, 25)(rng) * kDeg;
  p.angle.resize(k);
  for (int j = 0; j < k; ++j) {
    p.angle[j] = std::uniform_real_distribution<double>(ranges[j].lo, ranges[j].hi)(rng) * kDeg;
  }
  return p;
}

struct Vec {
  double x = 0.0, y = 0.0;
};

// Joint positions relative to the root at the given scale.
std::vector<Vec> forward_kinematics(const FigureModel& figure, const PoseParams& pose, double scale) {
  const int k = figure.num_joints();
  const auto& ranges = lsp_ranges();
  std::vector<Vec> pos(k);
  std::vector<double> dir(k, 0.0);
  std::vector<bool> done(k, false);
  const double down = std::numbers::pi / 2 + pose.tilt;
  const int root = figure.root();
  done[root] = true;
  dir[root] = down;
  // Parents may come after children in joint order, so sweep until settled.
  for (int pass = 0; pass < k; ++pass) {
    for (int j = 0; j < k; ++j) {
      const int p = figure.parent[j];
      if (done[j] || !done[p]) continue;
      const auto& r = ranges[j];
      const double reference = r.reference < 0 ? down : dir[r.reference];
      const double side = r.side == 0 ? 1.0 : r.side;
      dir[j] = reference + side * pose.angle[j];
      const double len = figure.limb_length[j] * scale;
      pos[j] = {pos[p].x + len * std::cos(dir[j]), pos[p].y + len * std::sin(dir[j])};
      done[j] = true;
    }
  }
  return pos;
}

std::vector<float> background(std::mt19937_64& rng, int h, int w) {
  constexpr int g = 4;
  std::uniform_real_distribution<double> u(0.2, 0.8);
  std::vector<float> img(3 * h * w);
  for (int c = 0; c < 3; ++c) {
    double grid[g][g];
    for (auto& row : grid)
      for (auto& v : row) v = u(rng);
    for (int y = 0; y < h; ++y) {
      const double gy = h > 1 ? double(y) * (g - 1) / (h - 1) : 0.0;
      const int y0 = std::min(static_cast<int>(gy), g - 2);
      const double fy = gy - y0;
      for (int x = 0; x < w; ++x) {
        const double gx = w > 1 ? double(x) * (g - 1) / (w - 1) : 0.0;
        const int x0 = std::min(static_cast<int>(gx), g - 2);
        const double fx = gx - x0;
        const double v = (1 - fy) * ((1 - fx) * grid[y0][x0] + fx * grid[y0][x0 + 1]) +
                         fy * ((1 - fx) * grid[y0 + 1][x0] + fx * grid[y0 + 1][x0 + 1]);
        img[(c * h + y) * w + x] = static_cast<float>(v);
      }
    }
  }
  return img;
}

void blend(std::vector<float>& img, int h, int w, int x, int y, const Color& color, double alpha) {
  if (alpha <= 0.0) return;
  alpha = std::min(alpha, 1.0);
  for (int c = 0; c < 3; ++c) {
    float& dst = img[(c * h + y) * w + x];
    dst = static_cast<float>(dst * (1.0 - alpha) + color[c] * alpha);
  }
}

// Anti-aliased capsule of radius r around segment ab.
void draw_capsule(std::vector<float>& img, int h, int w, Vec a, Vec b, double r, const Color& color) {
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - r - 1)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + r + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - r - 1)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + r + 1)));
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      double t = len2 > 0 ? ((x - a.x) * dx + (y - a.y) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double d = std::hypot(x - (a.x + t * dx), y - (a.y + t * dy));
      blend(img, h, w, x, y, color, r + 0.5 - d);
    }
  }
}

void render_figure(std::vector<float>& img, int h, int w, const FigureModel& figure,
                   const std::vector<Vec>& pos, double scale) {
  const int k = figure.num_joints();
  const double limb_r = 0.5 * figure.limb_width * scale;
  const double joint_r = std::max(1.0, figure.joint_radius * scale);
  for (int j = 0; j < k; ++j) {
    const int p = figure.parent[j];
    if (p >= 0) draw_capsule(img, h, w, pos[p], pos[j], limb_r, figure.limb_color[j]);
  }
  for (int j = 0; j < k; ++j) draw_capsule(img, h, w, pos[j], pos[j], joint_r, figure.joint_color[j]);
  // Neighbouring discs can blend over a joint; its centre pixel stays pure.
  for (int j = 0; j < k; ++j) {
    const int x = static_cast<int>(std::lround(pos[j].x)), y = static_cast<int>(std::lround(pos[j].y));
    if (x >= 0 && y >= 0 && x < w && y < h) blend(img, h, w, x, y, figure.joint_color[j], 1.0);
  }
}

std::vector<Vec> rounded(const std::vector<Vec>& rel, Vec offset) {
  std::vector<Vec> out(rel.size());
  for (std::size_t j = 0; j < rel.size(); ++j) {
    out[j] = {std::round(rel[j].x + offset.x), std::round(rel[j].y + offset.y)};
  }
  return out;
}

PoseParams animate(const PoseParams& base, const std::vector<Oscillation>& osc, double amplitude,
                   double s) {
  PoseParams p = base;
  p.tilt += amplitude * osc.back().amplitude * std::sin(osc.back().omega * s + osc.back().phase);
  for (std::size_t j = 0; j < p.angle.size(); ++j) {
    p.angle[j] += amplitude * osc[j].amplitude * std::sin(osc[j].omega * s + osc[j].phase);
  }
  return p;
}

metrics::Keypoints to_keypoints(const std::vector<Vec>& pos, const FigureModel& figure) {
  metrics::Keypoints kp;
  for (const auto& p : pos) kp.joints.push_back({p.x, p.y, true, 0.0});
  attach_references(kp, figure);
  return kp;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finaliser over the combined value.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

FigureModel FigureModel::lsp14() {
  FigureModel f;
  f.parent = {1, 2, 12, 12, 3, 4, 7, 8, 12, 12, 9, 10, -1, 12};
  f.limb_length = {11, 11, 17, 17, 11, 11, 8, 9, 6, 6, 9, 8, 0, 8};
  for (int j = 0; j < 14; ++j) {
    f.joint_color.push_back(hsv(j / 14.0, 1.0, 1.0));
    f.limb_color.push_back(hsv(std::fmod(j / 14.0 + 0.5 / 14.0, 1.0), 0.9, 0.55));
  }
  return f;
}

int FigureModel::root() const {
  for (int j = 0; j < num_joints(); ++j) {
    if (parent[j] < 0) return j;
  }
  throw DataError("FigureModel: no root joint");
}

std::vector<std::pair<int, int>> FigureModel::limbs() const {
  std::vector<std::pair<int, int>> out;
  for (int j = 0; j < num_joints(); ++j) {
    if (parent[j] >= 0) out.push_back({parent[j], j});
  }
  return out;
}

void FigureModel::validate() const {
  const int k = num_joints();
  if (k < 1) throw DataError("FigureModel: no joints");
  if (static_cast<int>(limb_length.size()) != k || static_cast<int>(joint_color.size()) != k ||
      static_cast<int>(limb_color.size()) != k) {
    throw DataError("FigureModel: per-joint lists have inconsistent lengths");
  }
  int roots = 0;
  for (int j = 0; j < k; ++j) {
    if (parent[j] < 0) {
      ++roots;
      continue;
    }
    if (parent[j] >= k || parent[j] == j) throw DataError("FigureModel: bad parent index");
    if (!(limb_length[j] > 0.0)) {
      throw DataError("FigureModel: limb ending at joint " + std::to_string(j) + " has no length");
    }
    // Walking up must reach the root within k steps.
    int v = j, steps = 0;
    while (v >= 0 && steps <= k) {
      v = parent[v];
      ++steps;
    }
    if (v >= 0) throw DataError("FigureModel: parent links contain a cycle");
  }
  if (roots != 1) throw DataError("FigureModel: skeleton must have exactly one root");
  if (k != static_cast<int>(lsp_ranges().size())) {
    throw DataError("FigureModel: the pose sampler only knows the 14-joint layout");
  }
}

void SynthOptions::validate() const {
  if (height < 8 || width < 8 || height % 8 != 0 || width % 8 != 0) {
    throw DataError("SynthOptions: image size must be a positive multiple of 8");
  }
  if (!(min_scale > 0.0) || max_scale < min_scale) throw DataError("SynthOptions: bad scale range");
  if (box_margin < 0.0) throw DataError("SynthOptions: negative box margin");
  if (max_retries < 1) throw DataError("SynthOptions: max_retries must be >= 1");
}

void MotionOptions::validate() const {
  if (amplitude < 0.0) throw DataError("MotionOptions: negative amplitude");
  if (max_velocity < 1.5) {
    throw DataError("MotionOptions: max_velocity must be at least 1.5 px (one quantization step)");
  }
  if (blur < 0.0) throw DataError("MotionOptions: negative blur");
  if (occlusion_probability < 0.0 || occlusion_probability > 1.0) {
    throw DataError("MotionOptions: occlusion_probability outside [0, 1]");
  }
  if (occlusion_min_frames < 1 || occlusion_max_frames < occlusion_min_frames) {
    throw DataError("MotionOptions: bad occlusion duration range");
  }
}

void attach_references(metrics::Keypoints& kp, const FigureModel& figure) {
  const auto& j = kp.joints;
  if (static_cast<int>(j.size()) != figure.num_joints()) {
    throw DataError("attach_references: joint count differs from the figure");
  }
  if (figure.num_joints() == 14) {
    kp.torso = metrics::Segment{j[joints::kLeftShoulder].point(), j[joints::kRightHip].point()};
    kp.head = metrics::Segment{j[joints::kNeck].point(), j[joints::kHeadTop].point()};
  }
  kp.limbs = figure.limbs();
}

metrics::Box visible_box(const metrics::Keypoints& kp, double margin, int h, int w) {
  bool any = false;
  metrics::Box b{0, 0, 0, 0};
  for (const auto& j : kp.joints) {
    if (!j.visible) continue;
    if (!any) {
      b = {j.x, j.y, j.x, j.y};
      any = true;
    }
    b.x_min = std::min(b.x_min, j.x);
    b.y_min = std::min(b.y_min, j.y);
    b.x_max = std::max(b.x_max, j.x);
    b.y_max = std::max(b.y_max, j.y);
  }
  if (!any) return {0, 0, double(w - 1), double(h - 1)};
  return {std::max(0.0, b.x_min - margin), std::max(0.0, b.y_min - margin),
          std::min(double(w - 1), b.x_max + margin), std::min(double(h - 1), b.y_max + margin)};
}

namespace {

struct Placement {
  double scale = 1.0;
  Vec offset;
};

double frame_scale(const SynthOptions& o) { return std::min(o.height, o.width) / 64.0; }

// Finds an offset that keeps every point of `rel` (already scaled) inside
// the frame with a margin, or returns nullopt.
std::optional<Vec> fit(std::mt19937_64& rng, const std::vector<Vec>& rel, double margin, int h, int w) {
  double x0 = 1e30, x1 = -1e30, y0 = 1e30, y1 = -1e30;
  for (const auto& p : rel) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const double lo_x = margin - x0, hi_x = (w - 1 - margin) - x1;
  const double lo_y = margin - y0, hi_y = (h - 1 - margin) - y1;
  if (lo_x > hi_x || lo_y > hi_y) return std::nullopt;
  return Vec{std::uniform_real_distribution<double>(lo_x, hi_x)(rng),
             std::uniform_real_distribution<double>(lo_y, hi_y)(rng)};
}

Tensor<float> to_tensor(std::vector<float> img, int h, int w) {
  for (auto& v : img) v = std::clamp(v, 0.0f, 1.0f);
  return Tensor<float>(Shape{1, 3, h, w}, std::move(img));
}

}  // namespace

PoseSample synth_pose_sample(std::uint64_t seed, const FigureModel& figure, const SynthOptions& options) {
  figure.validate();
  options.validate();
  std::mt19937_64 rng(derive_seed(seed, 0));
  const int h = options.height, w = options.width;
  const double margin = 2.0 + 0.5;
  for (int attempt = 0; attempt < options.max_retries; ++attempt) {
    const double scale =
        frame_scale(options) * std::uniform_real_distribution<double>(options.min_scale, options.max_scale)(rng);
    const PoseParams pose = sample_pose(rng, figure.num_joints());
    const auto rel = forward_kinematics(figure, pose, scale);
    const auto offset = fit(rng, rel, margin, h, w);
    if (!offset) continue;
    const auto pos = rounded(rel, *offset);
    auto img = background(rng, h, w);
    render_figure(img, h, w, figure, pos, scale);

    PoseSample s;
    s.image = to_tensor(std::move(img), h, w);
    s.keypoints = to_keypoints(pos, figure);
    s.bbox = visible_box(s.keypoints, options.box_margin, h, w);
    s.meta.seed = seed;
    s.meta.occluded.assign(figure.num_joints(), false);
    return s;
  }
  throw DataError("synth_pose_sample: could not place the figure in " + std::to_string(h) + "x" +
                  std::to_string(w) + " after " + std::to_string(options.max_retries) + " attempts");
}

VideoClip synth_video_clip(std::uint64_t seed, const FigureModel& figure, int frames,
                           const MotionOptions& motion, const SynthOptions& options) {
  figure.validate();
  options.validate();
  motion.validate();
  if (frames < 1) throw DataError("synth_video_clip: need at least one frame");
  std::mt19937_64 rng(derive_seed(seed, 1));
  const int h = options.height, w = options.width, k = figure.num_joints();
  const double margin = 2.5;

  for (int attempt = 0; attempt < options.max_retries; ++attempt) {
    const double scale =
        frame_scale(options) * std::uniform_real_distribution<double>(options.min_scale, options.max_scale)(rng);
    const PoseParams base = sample_pose(rng, k);
    std::vector<Oscillation> osc(k + 1);
    for (auto& o : osc) {
      o.amplitude = std::uniform_real_distribution<double>(10, 35)(rng) * kDeg;
      o.omega = std::uniform_real_distribution<double>(0.15, 0.45)(rng);
      o.phase = std::uniform_real_distribution<double>(0, 2 * std::numbers::pi)(rng);
    }
    auto rel_at = [&](double s) {
      return forward_kinematics(figure, animate(base, osc, motion.amplitude, s), scale);
    };

    // Bounds over the whole continuous trajectory, sampled finely.
    std::vector<Vec> hull;
    const double span = frames - 1 + motion.blur;
    for (double s = -motion.blur; s <= span + 1e-9; s += 0.05) {
      auto rel = rel_at(s);
      hull.insert(hull.end(), rel.begin(), rel.end());
    }
    const auto offset = fit(rng, hull, margin + 1.0, h, w);
    if (!offset) continue;

    // Advance the motion phase one frame at a time, shrinking the step by
    // bisection whenever a quantized joint would move too far.
    std::vector<double> phase(frames, 0.0);
    std::vector<std::vector<Vec>> pos(frames);
    pos[0] = rounded(rel_at(0.0), *offset);
    auto max_step = [&](const std::vector<Vec>& a, const std::vector<Vec>& b) {
      double m = 0.0;
      for (int j = 0; j < k; ++j) m = std::max(m, std::hypot(a[j].x - b[j].x, a[j].y - b[j].y));
      return m;
    };
    for (int t = 1; t < frames; ++t) {
      double lo = 0.0, hi = 1.0;
      auto cand = rounded(rel_at(phase[t - 1] + hi), *offset);
      if (max_step(cand, pos[t - 1]) > motion.max_velocity) {
        for (int it = 0; it < 40; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (max_step(rounded(rel_at(phase[t - 1] + mid), *offset), pos[t - 1]) <= motion.max_velocity) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        hi = lo;
        cand = rounded(rel_at(phase[t - 1] + hi), *offset);
      }
      phase[t] = phase[t - 1] + hi;
      pos[t] = cand;
    }

    // Optional occluder event.
    std::optional<metrics::Box> occluder;
    int occ_begin = -1, occ_end = -1;
    if (std::uniform_real_distribution<double>(0, 1)(rng) < motion.occlusion_probability) {
      const int len = std::min(frames, std::uniform_int_distribution<int>(motion.occlusion_min_frames,
                                                                          motion.occlusion_max_frames)(rng));
      occ_begin = frames - len >= 1 ? std::uniform_int_distribution<int>(1, frames - len)(rng) : 0;
      occ_end = occ_begin + len;
      const int target = std::uniform_int_distribution<int>(0, k - 1)(rng);
      const double px = frame_scale(options);
      const double bw = std::uniform_real_distribution<double>(9, 16)(rng) * px;
      const double bh = std::uniform_real_distribution<double>(9, 16)(rng) * px;
      const double cx = pos[occ_begin][target].x + std::uniform_real_distribution<double>(-3, 3)(rng);
      const double cy = pos[occ_begin][target].y + std::uniform_real_distribution<double>(-3, 3)(rng);
      metrics::Box b{std::round(cx - bw / 2), std::round(cy - bh / 2), std::round(cx + bw / 2),
                     std::round(cy + bh / 2)};
      b.x_min = std::max(0.0, b.x_min);
      b.y_min = std::max(0.0, b.y_min);
      b.x_max = std::min(double(w - 1), b.x_max);
      b.y_max = std::min(double(h - 1), b.y_max);
      occluder = b;
    }
    const float gray = static_cast<float>(std::uniform_real_distribution<double>(0.3, 0.7)(rng));
    const Color occ_color{gray, gray, gray};
    const auto bg = background(rng, h, w);

    VideoClip clip;
    clip.seed = seed;
    for (int t = 0; t < frames; ++t) {
      std::vector<float> img;
      if (motion.blur > 0.0) {
        // Exposure average over phases centred on the labelled instant.
        const double step = t > 0 ? phase[t] - phase[t - 1] : (frames > 1 ? phase[1] - phase[0] : 0.0);
        constexpr int kExposures = 6;
        img.assign(bg.size(), 0.0f);
        for (int e = 0; e < kExposures; ++e) {
          const double u = double(e) / (kExposures - 1) - 0.5;
          auto rel = rel_at(phase[t] + u * motion.blur * step);
          std::vector<Vec> p(k);
          for (int j = 0; j < k; ++j) p[j] = {rel[j].x + offset->x, rel[j].y + offset->y};
          auto sub = bg;
          render_figure(sub, h, w, figure, p, scale);
          for (std::size_t i = 0; i < img.size(); ++i) img[i] += sub[i] / kExposures;
        }
      } else {
        img = bg;
        render_figure(img, h, w, figure, pos[t], scale);
      }

      PoseSample s;
      s.keypoints = to_keypoints(pos[t], figure);
      s.meta.seed = seed;
      s.meta.occluded.assign(k, false);
      if (occluder && t >= occ_begin && t < occ_end) {
        const auto& b = *occluder;
        for (int y = static_cast<int>(b.y_min); y <= static_cast<int>(b.y_max); ++y)
          for (int x = static_cast<int>(b.x_min); x <= static_cast<int>(b.x_max); ++x)
            blend(img, h, w, x, y, occ_color, 1.0);
        for (int j = 0; j < k; ++j) {
          if (b.contains(s.keypoints.joints[j].point())) {
            s.keypoints.joints[j].visible = false;
            s.meta.occluded[j] = true;
          }
        }
        s.meta.occluder = b;
      }
      s.image = to_tensor(std::move(img), h, w);
      s.bbox = visible_box(s.keypoints, options.box_margin, h, w);
      clip.frames.push_back(std::move(s));
    }
    return clip;
  }
  throw DataError("synth_video_clip: could not fit the motion in " + std::to_string(h) + "x" +
                  std::to_string(w) + " after " + std::to_string(options.max_retries) + " attempts");
}

}  // namespace unipose::data
