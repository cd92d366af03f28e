#include "unipose/metrics/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace unipose::metrics {

std::size_t MetricReport::correct() const {
  return std::accumulate(item_correct.begin(), item_correct.end(), std::size_t{0});
}

std::size_t MetricReport::total() const {
  return std::accumulate(item_total.begin(), item_total.end(), std::size_t{0});
}

double MetricReport::rate() const {
  const std::size_t t = total();
  if (t == 0) throw MetricError(metric + ": zero denominator, no item was counted");
  return static_cast<double>(correct()) / static_cast<double>(t);
}

double MetricReport::item_rate(std::size_t i) const {
  if (item_total.at(i) == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(item_correct[i]) / static_cast<double>(item_total[i]);
}

void MetricReport::merge(const MetricReport& other) {
  if (item_total.empty() && samples == 0) {
    *this = other;
    return;
  }
  if (other.metric != metric || other.item_total.size() != item_total.size()) {
    throw MetricError("merge: reports describe different metrics");
  }
  for (std::size_t i = 0; i < item_total.size(); ++i) {
    item_correct[i] += other.item_correct[i];
    item_total[i] += other.item_total[i];
  }
  samples += other.samples;
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string MetricReport::to_kv() const {
  std::string out;
  out += "metric = " + metric + "\n";
  out += "fraction = " + fmt(fraction) + "\n";
  out += "reference = " + reference + "\n";
  out += "samples = " + std::to_string(samples) + "\n";
  out += "correct = " + std::to_string(correct()) + "\n";
  out += "total = " + std::to_string(total()) + "\n";
  out += "rate = " + (defined() ? fmt(rate()) : std::string("undefined")) + "\n";
  for (std::size_t i = 0; i < item_total.size(); ++i) {
    out += "item." + item_names[i] + " = " + std::to_string(item_correct[i]) + "/" +
           std::to_string(item_total[i]) + "\n";
  }
  out += "warnings = " + std::to_string(warnings.size()) + "\n";
  return out;
}

std::string MetricReport::to_table() const {
  char line[128];
  std::string out;
  std::snprintf(line, sizeof line, "%s@%.2f (%s), %zu samples\n", metric.c_str(), fraction,
                reference.c_str(), samples);
  out += line;
  for (std::size_t i = 0; i < item_total.size(); ++i) {
    const double r = item_rate(i);
    if (std::isnan(r)) {
      std::snprintf(line, sizeof line, "  %-16s %8s  (0/0)\n", item_names[i].c_str(), "n/a");
    } else {
      std::snprintf(line, sizeof line, "  %-16s %7.2f%%  (%zu/%zu)\n", item_names[i].c_str(),
                    100.0 * r, item_correct[i], item_total[i]);
    }
    out += line;
  }
  if (defined()) {
    std::snprintf(line, sizeof line, "  %-16s %7.2f%%  (%zu/%zu)\n", "overall", 100.0 * rate(),
                  correct(), total());
  } else {
    std::snprintf(line, sizeof line, "  %-16s %8s\n", "overall", "undefined");
  }
  out += line;
  for (const auto& w : warnings) out += "  warning: " + w + "\n";
  return out;
}

namespace {

void check_pairing(const std::vector<Keypoints>& pred, const std::vector<Keypoints>& gt) {
  if (pred.size() != gt.size()) throw MetricError("prediction and ground-truth counts differ");
  for (std::size_t s = 0; s < gt.size(); ++s) {
    if (pred[s].size() != gt[s].size()) {
      throw MetricError("sample " + std::to_string(s) + ": joint counts differ");
    }
    if (s > 0 && gt[s].size() != gt[0].size()) throw MetricError("inconsistent joint count");
  }
}

MetricReport joint_report(const std::string& metric, double fraction, const std::string& reference,
                          const std::vector<Keypoints>& gt) {
  MetricReport r;
  r.metric = metric;
  r.fraction = fraction;
  r.reference = reference;
  r.samples = gt.size();
  const int k = gt.empty() ? 0 : gt[0].size();
  for (int j = 0; j < k; ++j) r.item_names.push_back("joint" + std::to_string(j));
  r.item_correct.assign(k, 0);
  r.item_total.assign(k, 0);
  return r;
}

MetricReport distance_metric(const std::string& metric, const std::string& reference,
                             const std::vector<Keypoints>& pred, const std::vector<Keypoints>& gt,
                             double fraction, bool head) {
  if (!(fraction > 0.0)) throw MetricError(metric + ": fraction must be positive");
  check_pairing(pred, gt);
  MetricReport r = joint_report(metric, fraction, reference, gt);
  for (std::size_t s = 0; s < gt.size(); ++s) {
    const auto& seg = head ? gt[s].head : gt[s].torso;
    if (!seg) throw MetricError(metric + ": sample " + std::to_string(s) + " lacks a " + reference + " segment");
    const double len = seg->length();
    if (!(len > 0.0)) {
      throw MetricError(metric + ": sample " + std::to_string(s) + " has a zero-length " + reference);
    }
    const double threshold = fraction * len;
    for (int j = 0; j < gt[s].size(); ++j) {
      if (!gt[s].joints[j].visible) continue;
      ++r.item_total[j];
      if (distance(pred[s].joints[j].point(), gt[s].joints[j].point()) <= threshold) ++r.item_correct[j];
    }
  }
  return r;
}

}  // namespace

MetricReport pck(const std::vector<Keypoints>& pred, const std::vector<Keypoints>& gt, double fraction) {
  return distance_metric("PCK", "torso", pred, gt, fraction, false);
}

MetricReport pckh(const std::vector<Keypoints>& pred, const std::vector<Keypoints>& gt,
                  double fraction) {
  return distance_metric("PCKh", "head", pred, gt, fraction, true);
}

MetricReport pcp(const std::vector<Keypoints>& pred, const std::vector<Keypoints>& gt, double fraction) {
  if (!(fraction > 0.0)) throw MetricError("PCP: fraction must be positive");
  check_pairing(pred, gt);
  MetricReport r;
  r.metric = "PCP";
  r.fraction = fraction;
  r.reference = "limb";
  r.samples = gt.size();
  if (gt.empty()) return r;
  const auto& limbs = gt[0].limbs;
  if (limbs.empty()) throw MetricError("PCP: no limb pairs given");
  for (auto [a, b] : limbs) r.item_names.push_back("limb" + std::to_string(a) + "-" + std::to_string(b));
  r.item_correct.assign(limbs.size(), 0);
  r.item_total.assign(limbs.size(), 0);
  for (std::size_t s = 0; s < gt.size(); ++s) {
    if (gt[s].limbs != limbs) throw MetricError("PCP: limb lists differ between samples");
    for (std::size_t l = 0; l < limbs.size(); ++l) {
      const auto [a, b] = limbs[l];
      if (a < 0 || b < 0 || a >= gt[s].size() || b >= gt[s].size()) {
        throw MetricError("PCP: limb references a missing joint");
      }
      const auto& ga = gt[s].joints[a];
      const auto& gb = gt[s].joints[b];
      if (!ga.visible || !gb.visible) continue;
      const double len = distance(ga.point(), gb.point());
      if (len == 0.0) {
        r.warnings.push_back("sample " + std::to_string(s) + " " + r.item_names[l] +
                             ": zero-length limb excluded");
        continue;
      }
      ++r.item_total[l];
      const double threshold = fraction * len;
      if (distance(pred[s].joints[a].point(), ga.point()) <= threshold &&
          distance(pred[s].joints[b].point(), gb.point()) <= threshold) {
        ++r.item_correct[l];
      }
    }
  }
  return r;
}

MetricReport bbox_containment(const std::vector<Keypoints>& pred, const std::vector<Keypoints>& gt,
                              const std::vector<Box>& boxes) {
  check_pairing(pred, gt);
  if (boxes.size() != gt.size()) throw MetricError("containment: one box per sample required");
  MetricReport r = joint_report("BoxContainment", 0.0, "box", gt);
  for (std::size_t s = 0; s < gt.size(); ++s) {
    if (!boxes[s].valid()) {
      throw MetricError("containment: sample " + std::to_string(s) + " has a malformed box");
    }
    for (int j = 0; j < gt[s].size(); ++j) {
      if (!gt[s].joints[j].visible) continue;
      ++r.item_total[j];
      if (boxes[s].contains(pred[s].joints[j].point())) ++r.item_correct[j];
    }
  }
  return r;
}

}  // namespace unipose::metrics
