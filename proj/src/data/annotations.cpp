#include "unipose/data/annotations.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "unipose/data/image_io.hpp"

namespace unipose::data {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

Json point(const metrics::Point& p) { return Json::array({p.x, p.y}); }

Json segment(const std::optional<metrics::Segment>& s) {
  if (!s) return nullptr;
  return Json::array({point(s->a), point(s->b)});
}

Json record_json(const AnnotationRecord& r) {
  Json keypoints = Json::array();
  for (const auto& j : r.keypoints.joints) keypoints.push_back(Json::array({j.x, j.y, j.visible ? 1 : 0}));
  Json rec;
  rec["image"] = r.image;
  rec["keypoints"] = std::move(keypoints);
  rec["torso"] = segment(r.keypoints.torso);
  rec["head"] = segment(r.keypoints.head);
  rec["bbox"] = Json::array({r.bbox.x_min, r.bbox.y_min, r.bbox.x_max, r.bbox.y_max});
  Json occluded = Json::array();
  for (bool o : r.occluded) occluded.push_back(o ? 1 : 0);
  rec["occluded"] = std::move(occluded);
  rec["seed"] = r.seed;
  return rec;
}

// Checked accessors. Every failure names the full field path.
class Reader {
 public:
  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw AnnotationError(where + ": " + what);
  }

  static const Json& field(const Json& obj, const std::string& where, const char* key) {
    if (!obj.is_object()) fail(where, std::string("expected an object, got ") + obj.type_name());
    auto it = obj.find(key);
    if (it == obj.end()) fail(where + "." + key, "missing");
    return *it;
  }

  static double number(const Json& v, const std::string& where) {
    if (!v.is_number()) fail(where, std::string("expected a number, got ") + v.type_name());
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(where, "not finite");
    return d;
  }

  static const Json& array(const Json& v, const std::string& where, std::optional<std::size_t> size = {}) {
    if (!v.is_array()) fail(where, std::string("expected an array, got ") + v.type_name());
    if (size && v.size() != *size) {
      fail(where, "expected " + std::to_string(*size) + " entries, got " + std::to_string(v.size()));
    }
    return v;
  }

  static metrics::Point point(const Json& v, const std::string& where) {
    array(v, where, 2);
    return {number(v[0], where + "[0]"), number(v[1], where + "[1]")};
  }

  static std::optional<metrics::Segment> segment(const Json& v, const std::string& where, bool required) {
    if (v.is_null()) {
      if (required) fail(where, "reference segment required");
      return std::nullopt;
    }
    array(v, where, 2);
    return metrics::Segment{point(v[0], where + "[0]"), point(v[1], where + "[1]")};
  }

  static std::uint64_t unsigned_int(const Json& v, const std::string& where) {
    if (!v.is_number_unsigned()) fail(where, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
};

AnnotationRecord parse_record(const Json& rec, const std::string& where, const Annotations& a,
                              const AnnotationRules& rules) {
  AnnotationRecord r;
  const Json& image = Reader::field(rec, where, "image");
  if (!image.is_string()) Reader::fail(where + ".image", "expected a string");
  r.image = image.get<std::string>();

  const std::string kp_where = where + ".keypoints";
  const Json& kps = Reader::array(Reader::field(rec, where, "keypoints"), kp_where);
  if (static_cast<int>(kps.size()) != a.num_joints) {
    Reader::fail(kp_where, "expected " + std::to_string(a.num_joints) + " joints, got " + std::to_string(kps.size()));
  }
  for (std::size_t j = 0; j < kps.size(); ++j) {
    const std::string jw = kp_where + "[" + std::to_string(j) + "]";
    Reader::array(kps[j], jw, 3);
    metrics::Joint joint;
    joint.x = Reader::number(kps[j][0], jw + "[0]");
    joint.y = Reader::number(kps[j][1], jw + "[1]");
    const double v = Reader::number(kps[j][2], jw + "[2]");
    if (v != 0.0 && v != 1.0) Reader::fail(jw + "[2]", "visibility must be 0 or 1");
    joint.visible = v == 1.0;
    r.keypoints.joints.push_back(joint);
  }
  r.keypoints.torso = Reader::segment(Reader::field(rec, where, "torso"), where + ".torso", rules.require_references);
  r.keypoints.head = Reader::segment(Reader::field(rec, where, "head"), where + ".head", rules.require_references);
  r.keypoints.limbs = a.limbs;

  const std::string bw = where + ".bbox";
  const Json& box = Reader::array(Reader::field(rec, where, "bbox"), bw, 4);
  r.bbox = {Reader::number(box[0], bw + "[0]"), Reader::number(box[1], bw + "[1]"),
            Reader::number(box[2], bw + "[2]"), Reader::number(box[3], bw + "[3]")};
  if (!r.bbox.valid()) Reader::fail(bw, "needs x_min <= x_max and y_min <= y_max");

  if (rec.contains("occluded")) {
    const std::string ow = where + ".occluded";
    const Json& occ = Reader::array(rec["occluded"], ow);
    if (!occ.empty() && static_cast<int>(occ.size()) != a.num_joints) {
      Reader::fail(ow, "expected 0 or " + std::to_string(a.num_joints) + " flags");
    }
    for (std::size_t j = 0; j < occ.size(); ++j) {
      const double v = Reader::number(occ[j], ow + "[" + std::to_string(j) + "]");
      if (v != 0.0 && v != 1.0) Reader::fail(ow + "[" + std::to_string(j) + "]", "flag must be 0 or 1");
      r.occluded.push_back(v == 1.0);
    }
  }
  if (rec.contains("seed")) r.seed = Reader::unsigned_int(rec["seed"], where + ".seed");
  return r;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string numbered(int value, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*d", digits, value);
  return buf;
}

PoseSample load_sample(const AnnotationRecord& r, const fs::path& root) {
  PoseSample s;
  s.image = from_rgb8(read_png((root / r.image).string()));
  s.keypoints = r.keypoints;
  s.bbox = r.bbox;
  s.meta.seed = r.seed;
  s.meta.occluded = r.occluded;
  if (s.meta.occluded.empty()) s.meta.occluded.assign(r.keypoints.size(), false);
  return s;
}

}  // namespace

std::string to_json(const Annotations& a) {
  Json doc;
  doc["format"] = kAnnotationFormat;
  doc["version"] = kAnnotationVersion;
  doc["num_joints"] = a.num_joints;
  Json limbs = Json::array();
  for (const auto& [p, c] : a.limbs) limbs.push_back(Json::array({p, c}));
  doc["limbs"] = std::move(limbs);
  Json images = Json::array();
  for (const auto& r : a.images) images.push_back(record_json(r));
  doc["images"] = std::move(images);
  Json clips = Json::array();
  for (const auto& c : a.clips) {
    Json frames = Json::array();
    for (const auto& r : c.frames) frames.push_back(record_json(r));
    Json clip;
    clip["seed"] = c.seed;
    clip["frames"] = std::move(frames);
    clips.push_back(std::move(clip));
  }
  doc["clips"] = std::move(clips);
  return doc.dump(1) + "\n";
}

Annotations parse_annotations(const std::string& text, const AnnotationRules& rules) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw AnnotationError(std::string("document: ") + e.what());
  }
  const std::string top = "document";
  const Json& format = Reader::field(doc, top, "format");
  if (!format.is_string() || format.get<std::string>() != kAnnotationFormat) {
    Reader::fail("format", std::string("expected \"") + kAnnotationFormat + "\"");
  }
  const Json& version = Reader::field(doc, top, "version");
  if (!version.is_number_integer() || version.get<int>() != kAnnotationVersion) {
    Reader::fail("version", "unsupported version, this build reads " + std::to_string(kAnnotationVersion));
  }
  Annotations a;
  const Json& k = Reader::field(doc, top, "num_joints");
  if (!k.is_number_integer() || k.get<int>() < 1) Reader::fail("num_joints", "expected a positive integer");
  a.num_joints = k.get<int>();

  const Json& limbs = Reader::array(Reader::field(doc, top, "limbs"), "limbs");
  for (std::size_t i = 0; i < limbs.size(); ++i) {
    const std::string lw = "limbs[" + std::to_string(i) + "]";
    Reader::array(limbs[i], lw, 2);
    std::pair<int, int> limb;
    for (int e = 0; e < 2; ++e) {
      const Json& v = limbs[i][e];
      if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() >= a.num_joints) {
        Reader::fail(lw + "[" + std::to_string(e) + "]", "expected a joint index below num_joints");
      }
      (e == 0 ? limb.first : limb.second) = v.get<int>();
    }
    a.limbs.push_back(limb);
  }

  const Json& images = Reader::array(Reader::field(doc, top, "images"), "images");
  for (std::size_t i = 0; i < images.size(); ++i) {
    a.images.push_back(parse_record(images[i], "images[" + std::to_string(i) + "]", a, rules));
  }
  const Json& clips = Reader::array(Reader::field(doc, top, "clips"), "clips");
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const std::string cw = "clips[" + std::to_string(i) + "]";
    ClipAnnotation clip;
    const Json& frames = Reader::array(Reader::field(clips[i], cw, "frames"), cw + ".frames");
    if (frames.empty()) Reader::fail(cw + ".frames", "a clip needs at least one frame");
    for (std::size_t t = 0; t < frames.size(); ++t) {
      clip.frames.push_back(parse_record(frames[t], cw + ".frames[" + std::to_string(t) + "]", a, rules));
    }
    if (clips[i].contains("seed")) clip.seed = Reader::unsigned_int(clips[i]["seed"], cw + ".seed");
    a.clips.push_back(std::move(clip));
  }
  return a;
}

Annotations load_annotations(const std::string& path, const AnnotationRules& rules) {
  const std::string text = read_text(path);
  try {
    return parse_annotations(text, rules);
  } catch (const AnnotationError& e) {
    throw AnnotationError("'" + path + "' " + e.what());
  }
}

void save_annotations(const std::string& path, const Annotations& annotations) {
  const std::string text = to_json(annotations);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

AnnotationRecord make_record(const PoseSample& sample, std::string image_path) {
  AnnotationRecord r;
  r.image = std::move(image_path);
  r.keypoints = sample.keypoints;
  r.bbox = sample.bbox;
  r.occluded = sample.meta.occluded;
  r.seed = sample.meta.seed;
  return r;
}

void write_dataset(const std::string& dir, const std::vector<PoseSample>& images,
                   const std::vector<VideoClip>& clips) {
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  if (ec) throw IoError("cannot create '" + (root / "images").string() + "': " + ec.message());

  Annotations a;
  const PoseSample* first = !images.empty() ? &images.front()
                            : !clips.empty() && !clips.front().frames.empty() ? &clips.front().frames.front()
                                                                               : nullptr;
  if (first) {
    a.num_joints = static_cast<int>(first->keypoints.size());
    a.limbs = first->keypoints.limbs;
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string rel = "images/" + numbered(static_cast<int>(i), 6) + ".png";
    write_png((root / rel).string(), to_rgb8(images[i].image));
    a.images.push_back(make_record(images[i], rel));
  }
  for (std::size_t c = 0; c < clips.size(); ++c) {
    const std::string clip_dir = "clips/" + numbered(static_cast<int>(c), 4);
    fs::create_directories(root / clip_dir, ec);
    if (ec) throw IoError("cannot create '" + (root / clip_dir).string() + "': " + ec.message());
    ClipAnnotation clip;
    clip.seed = clips[c].seed;
    for (std::size_t t = 0; t < clips[c].frames.size(); ++t) {
      const std::string rel = clip_dir + "/frame_" + numbered(static_cast<int>(t), 3) + ".png";
      write_png((root / rel).string(), to_rgb8(clips[c].frames[t].image));
      clip.frames.push_back(make_record(clips[c].frames[t], rel));
    }
    a.clips.push_back(std::move(clip));
  }
  save_annotations((root / "annotations.json").string(), a);
}

Dataset load_dataset(const std::string& path, const AnnotationRules& rules) {
  fs::path file(path);
  if (fs::is_directory(file)) file /= "annotations.json";
  Dataset d;
  d.annotations = load_annotations(file.string(), rules);
  const fs::path root = file.parent_path();
  for (const auto& r : d.annotations.images) d.images.push_back(load_sample(r, root));
  for (const auto& c : d.annotations.clips) {
    VideoClip clip;
    clip.seed = c.seed;
    for (const auto& r : c.frames) clip.frames.push_back(load_sample(r, root));
    d.clips.push_back(std::move(clip));
  }
  return d;
}

}  // namespace unipose::data
