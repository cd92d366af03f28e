#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "unipose/nn/layers.hpp"

namespace unipose::arch {

class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class NodeKind { kInput, kConv, kGlobalPool, kBroadcast, kConcat };

struct SpecNode {
  std::string name;
  NodeKind kind = NodeKind::kInput;
  nn::ConvSpec conv;        // kConv only
  std::vector<int> inputs;  // indices of producer nodes
};

/// Layer-level description of a module as a DAG. Nodes may be added in any
/// order; validate() checks topology.
class ModuleSpec {
 public:
  int add_input(const std::string& name);
  int add_conv(const std::string& name, const nn::ConvSpec& conv, int from);
  int add_global_pool(const std::string& name, int from);
  int add_broadcast(const std::string& name, int from);
  int add_concat(const std::string& name, std::vector<int> from);
  /// Adds an extra edge from -> to. Lets callers describe arbitrary graphs,
  /// including invalid cyclic ones.
  void connect(int from, int to);

  const std::vector<SpecNode>& nodes() const { return nodes_; }
  bool empty() const { return nodes_.empty(); }
  int find(const std::string& name) const;

  /// Single input, single output, acyclic, edges in range. Returns node
  /// indices in topological order. Throws SpecError otherwise.
  std::vector<int> topological_order() const;
  int output() const;

 private:
  int push(SpecNode node);
  std::vector<SpecNode> nodes_;
};

/// Sum over conv nodes of Cout*Cin*kh*kw + Cout (when biased).
std::int64_t param_count(const ModuleSpec& spec);

struct ReceptiveField {
  int h = 1;
  int w = 1;
  int jump = 1;
  /// True when every path reaching the node passes through a global pool.
  bool global = false;
};

/// Receptive field of the output, taken along the deepest non-global path
/// with rf <- rf + (k - 1) * dilation * jump and jump <- jump * stride.
/// Throws SpecError for cyclic or otherwise invalid specs.
ReceptiveField receptive_field(const ModuleSpec& spec);

/// Same recurrence evaluated at a named node.
ReceptiveField receptive_field_at(const ModuleSpec& spec, const std::string& node);

}  // namespace unipose::arch
