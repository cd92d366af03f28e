#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace unipose::metrics {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

struct Joint {
  double x = 0.0;
  double y = 0.0;
  bool visible = false;
  double confidence = 0.0;

  Point point() const { return {x, y}; }
};

/// Reference segment given by its two endpoints in pixels.
struct Segment {
  Point a;
  Point b;
  double length() const { return distance(a, b); }
};

/// Axis-aligned box, inclusive on every edge.
struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  bool valid() const { return x_min <= x_max && y_min <= y_max; }
  bool contains(Point p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
};

struct Keypoints {
  std::vector<Joint> joints;
  std::optional<Segment> torso;
  std::optional<Segment> head;
  std::vector<std::pair<int, int>> limbs;

  int size() const { return static_cast<int>(joints.size()); }
};

}  // namespace unipose::metrics
