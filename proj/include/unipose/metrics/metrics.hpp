#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "unipose/metrics/keypoints.hpp"

namespace unipose::metrics {

/// Counts behind one metric. Items are joints (PCK, PCKh, containment) or
/// limbs (PCP). All thresholds are inclusive.
struct MetricReport {
  std::string metric;
  double fraction = 0.0;
  std::string reference;
  std::vector<std::string> item_names;
  std::vector<std::size_t> item_correct;
  std::vector<std::size_t> item_total;
  std::size_t samples = 0;
  std::vector<std::string> warnings;

  std::size_t correct() const;
  std::size_t total() const;
  bool defined() const { return total() > 0; }
  /// correct / total over every counted item. Throws MetricError when no
  /// item was counted.
  double rate() const;
  /// Per-item rate, NaN for items that were never counted.
  double item_rate(std::size_t i) const;

  /// Count-weighted merge of a report over disjoint samples.
  void merge(const MetricReport& other);

  /// Machine-readable "key = value" lines (see README for the schema).
  std::string to_kv() const;
  std::string to_table() const;
};

/// Joint correct iff distance(pred, gt) <= fraction * torso length. Joints
/// not visible in gt are excluded. Throws when a sample lacks a torso.
MetricReport pck(const std::vector<Keypoints>& pred, const std::vector<Keypoints>& gt,
                 double fraction = 0.2);
/// As pck, with the head segment as reference.
MetricReport pckh(const std::vector<Keypoints>& pred, const std::vector<Keypoints>& gt,
                  double fraction = 0.5);
/// Limb (from gt.limbs) correct iff both endpoint errors are within
/// fraction * gt limb length. Limbs with a hidden endpoint are skipped;
/// zero-length limbs are skipped with a warning.
MetricReport pcp(const std::vector<Keypoints>& pred, const std::vector<Keypoints>& gt,
                 double fraction = 0.5);
/// Predicted joint correct iff it lies inside the sample's box. Only joints
/// visible in gt are counted.
MetricReport bbox_containment(const std::vector<Keypoints>& pred, const std::vector<Keypoints>& gt,
                              const std::vector<Box>& boxes);

}  // namespace unipose::metrics
