#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "boltzmap/common.hpp"

namespace boltzmap {

// Arena-based ordered rooted tree. Nodes at even height are white, odd black.
// A node may be rank-truncated: only the first/last children are materialized
// (pre/suf) while `degree` records the true child count; this is how balls of
// infinite trees (left-right truncation) are carried around. Fully
// materialized nodes have suf empty and degree == pre.size().
struct PlaneTree {
  struct Node {
    std::int32_t parent = -1;
    std::vector<std::int32_t> pre;
    std::vector<std::int32_t> suf;
    std::int64_t degree = 0;
    bool truncated() const { return degree != (std::int64_t)pre.size() || !suf.empty(); }
  };

  std::vector<Node> nodes;
  std::int32_t root = 0;

  std::int32_t size() const { return (std::int32_t)nodes.size(); }

  std::int32_t add_node(std::int32_t parent) {
    nodes.push_back(Node{});
    std::int32_t id = (std::int32_t)nodes.size() - 1;
    nodes[id].parent = parent;
    if (parent >= 0) {
      nodes[parent].pre.push_back(id);
      nodes[parent].degree = (std::int64_t)nodes[parent].pre.size();
    }
    return id;
  }

  bool any_truncated() const {
    for (const auto& n : nodes)
      if (n.truncated()) return true;
    return false;
  }

  void require_materialized(const char* who) const {
    if (any_truncated()) fail(Errc::BadConfig, std::string(who) + " needs a fully materialized tree");
  }

  std::int32_t height_of(std::int32_t v) const {
    std::int32_t h = 0;
    while (nodes[v].parent >= 0) {
      v = nodes[v].parent;
      ++h;
    }
    return h;
  }

  // heights of all nodes (O(n))
  std::vector<std::int32_t> heights() const {
    std::vector<std::int32_t> h(nodes.size(), 0);
    // nodes are not necessarily in BFS order; do explicit DFS from root
    std::vector<std::int32_t> stack{root};
    h[(std::size_t)root] = 0;
    while (!stack.empty()) {
      std::int32_t v = stack.back();
      stack.pop_back();
      for (std::int32_t c : nodes[(std::size_t)v].pre) {
        h[(std::size_t)c] = h[(std::size_t)v] + 1;
        stack.push_back(c);
      }
      for (std::int32_t c : nodes[(std::size_t)v].suf) {
        h[(std::size_t)c] = h[(std::size_t)v] + 1;
        stack.push_back(c);
      }
    }
    return h;
  }

  std::int32_t height() const {
    auto h = heights();
    std::int32_t m = 0;
    for (auto x : h) m = std::max(m, x);
    return m;
  }
};

// ---------------------------------------------------------------------------
// Lukasiewicz encoding: depth-first sequence of k_u - 1; partial sums stay
// >= 0 until the final step, total -1.
// ---------------------------------------------------------------------------
inline std::vector<std::int64_t> lukasiewicz(const PlaneTree& t) {
  t.require_materialized("lukasiewicz");
  std::vector<std::int64_t> out;
  out.reserve(t.nodes.size());
  // preorder DFS with explicit stack (children pushed reversed)
  std::vector<std::int32_t> stack{t.root};
  while (!stack.empty()) {
    std::int32_t v = stack.back();
    stack.pop_back();
    const auto& ch = t.nodes[(std::size_t)v].pre;
    out.push_back((std::int64_t)ch.size() - 1);
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

inline PlaneTree tree_from_lukasiewicz(const std::vector<std::int64_t>& steps) {
  PlaneTree t;
  if (steps.empty()) fail(Errc::BadConfig, "empty Lukasiewicz path");
  t.nodes.reserve(steps.size());
  t.add_node(-1);
  std::vector<std::pair<std::int32_t, std::int64_t>> stack;  // (node, children left)
  stack.push_back({0, steps[0] + 1});
  std::size_t i = 1;
  while (!stack.empty()) {
    auto& [v, left] = stack.back();
    if (left == 0) {
      stack.pop_back();
      continue;
    }
    --left;
    if (i >= steps.size()) fail(Errc::BadConfig, "Lukasiewicz path too short");
    std::int32_t c = t.add_node(v);
    stack.push_back({c, steps[i] + 1});
    ++i;
  }
  if (i != steps.size()) fail(Errc::BadConfig, "Lukasiewicz path too long");
  return t;
}

// ---------------------------------------------------------------------------
// Canonical contour encoding: balanced parentheses, newline-free.
// ---------------------------------------------------------------------------
inline std::string tree_paren(const PlaneTree& t) {
  t.require_materialized("tree_paren");
  std::string out;
  out.reserve(2 * t.nodes.size());
  // iterative DFS emitting ( on entry, ) on exit
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{t.root, 0}};
  out.push_back('(');
  while (!stack.empty()) {
    auto& [v, ci] = stack.back();
    const auto& ch = t.nodes[(std::size_t)v].pre;
    if (ci < ch.size()) {
      std::int32_t c = ch[ci++];
      out.push_back('(');
      stack.push_back({c, 0});
    } else {
      out.push_back(')');
      stack.pop_back();
    }
  }
  return out;
}

inline PlaneTree tree_from_paren(const std::string& s) {
  PlaneTree t;
  std::vector<std::int32_t> stack;
  for (char ch : s) {
    if (ch == '(') {
      std::int32_t v = t.add_node(stack.empty() ? -1 : stack.back());
      if (stack.empty() && t.size() > 1) fail(Errc::BadConfig, "forest is not a tree");
      stack.push_back(v);
    } else if (ch == ')') {
      if (stack.empty()) fail(Errc::BadConfig, "unbalanced parentheses");
      stack.pop_back();
    } else {
      fail(Errc::BadConfig, "bad character in tree encoding");
    }
  }
  if (!stack.empty()) fail(Errc::BadConfig, "unbalanced parentheses");
  if (t.nodes.empty()) fail(Errc::BadConfig, "empty tree encoding");
  return t;
}

inline bool tree_equal(const PlaneTree& a, const PlaneTree& b) {
  return tree_paren(a) == tree_paren(b);
}

// ---------------------------------------------------------------------------
// Janson-Stefansson bijection. In Phi_JS(t) every white vertex becomes a
// leaf and every black vertex with k children becomes a vertex with k+1
// children. New parent relations (window path hat-u -> u1 -> ... -> uk -> u
// around each white u, oriented away from hat-u):
//   parent'(u_1) = hat-u,  parent'(u_{j+1}) = u_j,  parent'(u) = u_{k_u}
// and children'(b) = (fc(w_1), ..., fc(w_m), next(b)) for black b, where
// fc(w) is w's first child (or w itself for a leaf) and next(b) is b's next
// sibling (or its white parent when b is the last child). The new root is
// the first child of the old root.
// ---------------------------------------------------------------------------
inline PlaneTree js_forward(const PlaneTree& t) {
  t.require_materialized("js_forward");
  std::int32_t n = t.size();
  if (n == 1) return t;
  if (t.nodes[(std::size_t)t.root].pre.empty()) fail(Errc::BadConfig, "root without children");
  auto h = t.heights();

  auto fc = [&](std::int32_t w) -> std::int32_t {
    const auto& ch = t.nodes[(std::size_t)w].pre;
    return ch.empty() ? w : ch.front();
  };
  auto next_of = [&](std::int32_t b) -> std::int32_t {
    std::int32_t p = t.nodes[(std::size_t)b].parent;
    const auto& sib = t.nodes[(std::size_t)p].pre;
    for (std::size_t i = 0; i < sib.size(); ++i)
      if (sib[i] == b) return (i + 1 < sib.size()) ? sib[i + 1] : p;
    fail(Errc::BadConfig, "corrupt tree");
  };

  PlaneTree out;
  out.nodes.assign((std::size_t)n, PlaneTree::Node{});
  out.root = t.nodes[(std::size_t)t.root].pre.front();
  for (std::int32_t v = 0; v < n; ++v) {
    if ((h[(std::size_t)v] & 1) == 0) continue;  // white -> leaf
    const auto& ch = t.nodes[(std::size_t)v].pre;
    auto& nc = out.nodes[(std::size_t)v].pre;
    nc.reserve(ch.size() + 1);
    for (std::int32_t w : ch) nc.push_back(fc(w));
    nc.push_back(next_of(v));
    out.nodes[(std::size_t)v].degree = (std::int64_t)nc.size();
    for (std::int32_t c : nc) out.nodes[(std::size_t)c].parent = v;
  }
  out.nodes[(std::size_t)out.root].parent = -1;
  // renumber so indices are DFS order (stable structural identity)
  return tree_from_paren(tree_paren(out));
}

inline PlaneTree js_inverse(const PlaneTree& tp) {
  tp.require_materialized("js_inverse");
  std::int32_t n = tp.size();
  if (n == 1) return tp;

  // blacks = internal vertices of tp; for black b with children' x_1..x_m:
  // next(b) = x_m and the fc-list is x_1..x_{m-1}.
  std::vector<std::int32_t> next_of((std::size_t)n, -1);
  for (std::int32_t v = 0; v < n; ++v) {
    const auto& ch = tp.nodes[(std::size_t)v].pre;
    if (!ch.empty()) next_of[(std::size_t)v] = ch.back();
  }
  // terminal white of the next-chain from a black head
  auto chain_terminal = [&](std::int32_t head, std::vector<std::int32_t>& chain) {
    chain.clear();
    std::int32_t v = head;
    while (next_of[(std::size_t)v] != -1) {
      chain.push_back(v);
      v = next_of[(std::size_t)v];
      if ((std::int32_t)chain.size() > n) fail(Errc::BadConfig, "next-chain cycle");
    }
    return v;  // white
  };

  PlaneTree out;
  out.nodes.assign((std::size_t)n, PlaneTree::Node{});
  std::vector<std::int32_t> chain;
  // root chain
  std::int32_t old_root;
  if (next_of[(std::size_t)tp.root] == -1) {
    fail(Errc::BadConfig, "js_inverse: root of the image tree cannot be a leaf unless trivial");
  }
  old_root = chain_terminal(tp.root, chain);
  out.root = old_root;
  out.nodes[(std::size_t)old_root].parent = -1;
  auto attach_chain = [&](std::int32_t white_u, const std::vector<std::int32_t>& blacks) {
    auto& ch = out.nodes[(std::size_t)white_u].pre;
    for (std::int32_t b : blacks) {
      ch.push_back(b);
      out.nodes[(std::size_t)b].parent = white_u;
    }
    out.nodes[(std::size_t)white_u].degree = (std::int64_t)ch.size();
  };
  attach_chain(old_root, chain);

  // process blacks breadth-first from the already attached ones
  std::vector<std::int32_t> todo(chain);
  std::vector<std::int32_t> sub;
  while (!todo.empty()) {
    std::int32_t b = todo.back();
    todo.pop_back();
    const auto& ch = tp.nodes[(std::size_t)b].pre;
    auto& bc = out.nodes[(std::size_t)b].pre;
    for (std::size_t i = 0; i + 1 < ch.size(); ++i) {
      std::int32_t x = ch[i];
      std::int32_t w;
      if (tp.nodes[(std::size_t)x].pre.empty()) {
        w = x;  // white leaf of t
      } else {
        w = chain_terminal(x, sub);
        attach_chain(w, sub);
        for (std::int32_t bb : sub) todo.push_back(bb);
      }
      bc.push_back(w);
      out.nodes[(std::size_t)w].parent = b;
    }
    out.nodes[(std::size_t)b].degree = (std::int64_t)bc.size();
  }
  return tree_from_paren(tree_paren(out));
}

// ---------------------------------------------------------------------------
// Balls. B_R: vertices at height <= R. B<->_R (left-right ball): height
// <= 2R and child rank within R of either end; far-rank children are dropped
// while the true degree is recorded.
// ---------------------------------------------------------------------------
inline PlaneTree ball(const PlaneTree& t, int R) {
  auto h = t.heights();
  PlaneTree out;
  std::vector<std::int32_t> map((std::size_t)t.size(), -1);
  // DFS copy of nodes with height <= R
  std::vector<std::int32_t> stack{t.root};
  map[(std::size_t)t.root] = out.add_node(-1);
  while (!stack.empty()) {
    std::int32_t v = stack.back();
    stack.pop_back();
    if (h[(std::size_t)v] >= R) {
      if (t.nodes[(std::size_t)v].truncated() || !t.nodes[(std::size_t)v].pre.empty()) {
        // children exist but are cut off: fine, ball keeps the vertex only
      }
      continue;
    }
    if (t.nodes[(std::size_t)v].truncated())
      fail(Errc::HorizonExceeded, "ball radius beyond sampled truncation");
    // children fully visible at this height
    for (auto it = t.nodes[(std::size_t)v].pre.rbegin(); it != t.nodes[(std::size_t)v].pre.rend();
         ++it)
      stack.push_back(*it);
    for (std::int32_t c : t.nodes[(std::size_t)v].pre) map[(std::size_t)c] = -2;  // mark pending
    // add in order
    for (std::int32_t c : t.nodes[(std::size_t)v].pre) map[(std::size_t)c] = out.add_node(map[(std::size_t)v]);
  }
  return out;
}

inline PlaneTree left_right_ball(const PlaneTree& t, int R) {
  PlaneTree out;
  struct Item {
    std::int32_t src, dst;
    std::int32_t h;
  };
  std::vector<Item> stack{{t.root, out.add_node(-1), 0}};
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    const auto& n = t.nodes[(std::size_t)it.src];
    if (it.h >= 2 * R) {
      out.nodes[(std::size_t)it.dst].degree = 0;
      continue;
    }
    std::int64_t k = n.degree;
    if (n.truncated()) {
      if ((std::int64_t)n.pre.size() < std::min<std::int64_t>(k, R) ||
          (k > (std::int64_t)R && (std::int64_t)n.suf.size() < std::min<std::int64_t>(k - R, R)))
        fail(Errc::HorizonExceeded, "left-right ball beyond sampled truncation");
    }
    out.nodes[(std::size_t)it.dst].degree = k;
    if (k <= 2 * (std::int64_t)R) {
      // all children kept: need them all materialized
      if (n.truncated() && (std::int64_t)(n.pre.size() + n.suf.size()) < k)
        fail(Errc::HorizonExceeded, "left-right ball beyond sampled truncation");
      std::vector<std::int32_t> all(n.pre);
      all.insert(all.end(), n.suf.begin(), n.suf.end());
      for (std::int32_t c : all) {
        std::int32_t d = out.add_node(it.dst);
        stack.push_back({c, d, it.h + 1});
      }
      out.nodes[(std::size_t)it.dst].degree = k;
    } else {
      for (std::int64_t i = 0; i < R && i < (std::int64_t)n.pre.size(); ++i) {
        std::int32_t d = out.add_node(it.dst);
        stack.push_back({n.pre[(std::size_t)i], d, it.h + 1});
      }
      std::vector<std::int32_t> tail;
      if (!n.suf.empty()) {
        std::int64_t take = std::min<std::int64_t>(R, (std::int64_t)n.suf.size());
        for (std::int64_t i = (std::int64_t)n.suf.size() - take; i < (std::int64_t)n.suf.size(); ++i)
          tail.push_back(n.suf[(std::size_t)i]);
      } else {
        std::int64_t take = std::min<std::int64_t>(R, k - R);
        for (std::int64_t i = k - take; i < (std::int64_t)n.pre.size(); ++i)
          tail.push_back(n.pre[(std::size_t)i]);
      }
      for (std::int32_t c : tail) {
        auto& dn = out.nodes[(std::size_t)it.dst];
        dn.suf.push_back(0);  // placeholder, fixed below
        std::int32_t d = (std::int32_t)out.nodes.size();
        out.nodes.push_back(PlaneTree::Node{});
        out.nodes[(std::size_t)d].parent = it.dst;
        out.nodes[(std::size_t)it.dst].suf.back() = d;
        stack.push_back({c, d, it.h + 1});
      }
      out.nodes[(std::size_t)it.dst].degree = k;
    }
  }
  return out;
}

}  // namespace boltzmap
