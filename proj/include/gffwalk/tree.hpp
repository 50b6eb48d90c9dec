// Copyright (c) 2026 gffwalk contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gffwalk/rng.hpp"

namespace gffwalk {

// Rooted d-regular tree carrying a Gaussian field, built by the generation
// recursion: the root value is N(0, (d-1)/(d-2)) (or pinned), and each child
// value is parent/(d-1) + sqrt(d/(d-1)) * zeta with zeta standard normal.
//
// Two shapes are supported. In `full` mode the root has d children; in `plus`
// mode the root, like every other vertex, has d-1 children (T_d^+).

enum class TreeMode { full, plus };

inline std::string to_string(TreeMode m) { return m == TreeMode::full ? "full" : "plus"; }

inline TreeMode tree_mode_from_string(const std::string& s) {
  if (s == "full") return TreeMode::full;
  if (s == "plus") return TreeMode::plus;
  throw std::invalid_argument("unknown tree mode: " + s);
}

// Address of a vertex: child indices from the root; height == path length.
struct VertexId {
  std::vector<std::uint8_t> path;
  std::size_t height() const { return path.size(); }
};

struct ArenaCapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class GffArena {
 public:
  static constexpr std::uint32_t npos = UINT32_MAX;

  GffArena(int degree, TreeMode mode, std::optional<double> root_condition,
           std::uint64_t master_seed, std::size_t node_cap = 10'000'000)
      : d_(degree),
        mode_(mode),
        root_condition_(root_condition),
        master_seed_(master_seed),
        node_cap_(node_cap) {
    if (degree < 3) throw std::invalid_argument("GffArena: degree must be >= 3");
    Node root;
    root.seed = derive_seed(master_seed_, seed_tag::root);
    root.parent = npos;
    root.depth = 0;
    if (root_condition_) {
      root.value = *root_condition_;
    } else {
      Rng rng(root.seed);
      root.value = root_sigma() * rng.next_normal();
    }
    nodes_.push_back(root);
  }

  int degree() const { return d_; }
  TreeMode mode() const { return mode_; }
  std::optional<double> root_condition() const { return root_condition_; }
  std::uint64_t master_seed() const { return master_seed_; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t node_cap() const { return node_cap_; }

  static constexpr std::uint32_t root() { return 0; }

  double value(std::uint32_t v) const { return at(v).value; }
  std::uint32_t parent(std::uint32_t v) const { return at(v).parent; }
  std::uint32_t depth(std::uint32_t v) const { return at(v).depth; }
  bool expanded(std::uint32_t v) const { return at(v).first_child != npos; }

  // d children for the root in full mode, d-1 everywhere else.
  int child_count(std::uint32_t v) const {
    return (v == root() && mode_ == TreeMode::full) ? d_ : d_ - 1;
  }

  // Materialize the children of v (idempotent); returns the index of the
  // first child, the rest are contiguous.
  std::uint32_t expand_children(std::uint32_t v) {
    Node& n = at(v);
    if (n.first_child != npos) return n.first_child;
    const int nc = child_count(v);
    if (nodes_.size() + static_cast<std::size_t>(nc) > node_cap_)
      throw ArenaCapacityError("GffArena: vertex cap of " + std::to_string(node_cap_) +
                               " exceeded");
    const std::uint32_t first = static_cast<std::uint32_t>(nodes_.size());
    const double parent_value = n.value;
    const std::uint64_t parent_seed = n.seed;
    const std::uint32_t child_depth = n.depth + 1;
    n.first_child = first;
    for (int i = 0; i < nc; ++i) {
      Node c;
      c.seed = derive_seed(parent_seed, static_cast<std::uint64_t>(i));
      c.parent = v;
      c.depth = child_depth;
      Rng rng(c.seed);
      c.value = parent_value / (d_ - 1) + child_sigma() * rng.next_normal();
      nodes_.push_back(c);
    }
    return first;
  }

  std::uint32_t child(std::uint32_t v, int i) {
    if (i < 0 || i >= child_count(v))
      throw std::out_of_range("GffArena::child: index out of range");
    return expand_children(v) + static_cast<std::uint32_t>(i);
  }

  // Index of v within its parent's child block.
  int child_slot(std::uint32_t v) const {
    const Node& n = at(v);
    if (n.parent == npos) throw std::invalid_argument("child_slot of root");
    return static_cast<int>(v - at(n.parent).first_child);
  }

  // Walk down from the root along `id.path`, expanding as needed.
  std::uint32_t resolve(const VertexId& id) {
    std::uint32_t v = root();
    for (std::uint8_t c : id.path) v = child(v, c);
    return v;
  }

  VertexId id_of(std::uint32_t v) const {
    VertexId id;
    while (at(v).parent != npos) {
      id.path.push_back(static_cast<std::uint8_t>(v - at(at(v).parent).first_child));
      v = at(v).parent;
    }
    std::reverse(id.path.begin(), id.path.end());
    return id;
  }

  double root_sigma() const { return std::sqrt(double(d_ - 1) / double(d_ - 2)); }
  double child_sigma() const { return std::sqrt(double(d_) / double(d_ - 1)); }

 private:
  struct Node {
    double value = 0.0;
    std::uint64_t seed = 0;
    std::uint32_t parent = npos;
    std::uint32_t first_child = npos;
    std::uint32_t depth = 0;
  };

  const Node& at(std::uint32_t v) const {
    if (v >= nodes_.size()) throw std::out_of_range("GffArena: unknown vertex id");
    return nodes_[v];
  }
  Node& at(std::uint32_t v) {
    if (v >= nodes_.size()) throw std::out_of_range("GffArena: unknown vertex id");
    return nodes_[v];
  }

  int d_;
  TreeMode mode_;
  std::optional<double> root_condition_;
  std::uint64_t master_seed_;
  std::size_t node_cap_;
  std::vector<Node> nodes_;
};

}  // namespace gffwalk
