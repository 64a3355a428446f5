#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "boltzmap/common.hpp"
#include "boltzmap/trees.hpp"

namespace boltzmap {

// Rooted combinatorial map as half-edges. Half-edges 2e and 2e+1 are twins;
// next_[h] is the next half-edge counterclockwise around origin_[h]. Faces
// are the orbits of h -> next(twin(h)) (the face to the LEFT of h); the root
// face is the face to the right of the root half-edge.
class CombMap {
 public:
  CombMap() = default;

  static CombMap single_vertex() {
    CombMap m;
    m.nv_ = 1;
    m.root_ = -1;
    return m;
  }

  // Build from per-vertex CCW rotations of half-edge ids (twin pairing 2e/2e+1).
  static CombMap from_rotations(std::int32_t nv,
                                const std::vector<std::vector<std::int32_t>>& rot,
                                std::int32_t root_halfedge) {
    CombMap m;
    m.nv_ = nv;
    std::int64_t nh = 0;
    for (const auto& r : rot) nh += (std::int64_t)r.size();
    m.next_.assign((std::size_t)nh, -1);
    m.origin_.assign((std::size_t)nh, -1);
    for (std::int32_t v = 0; v < nv; ++v) {
      const auto& r = rot[(std::size_t)v];
      for (std::size_t i = 0; i < r.size(); ++i) {
        std::int32_t h = r[i];
        if (h < 0 || h >= (std::int32_t)nh) fail(Errc::BadConfig, "half-edge id out of range");
        if (m.origin_[(std::size_t)h] != -1) fail(Errc::BadConfig, "half-edge listed twice");
        m.origin_[(std::size_t)h] = v;
        m.next_[(std::size_t)h] = r[(i + 1) % r.size()];
      }
    }
    for (std::size_t h = 0; h < (std::size_t)nh; ++h)
      if (m.origin_[h] == -1) fail(Errc::BadConfig, "missing half-edge in rotations");
    m.root_ = root_halfedge;
    m.check_connected_and_planar();
    return m;
  }

  std::int32_t vertex_count() const { return nv_; }
  std::int64_t edge_count() const { return (std::int64_t)next_.size() / 2; }
  std::int32_t half_edge_count() const { return (std::int32_t)next_.size(); }
  std::int32_t root() const { return root_; }
  std::int32_t twin(std::int32_t h) const { return h ^ 1; }
  std::int32_t next(std::int32_t h) const { return next_[(std::size_t)h]; }
  std::int32_t origin(std::int32_t h) const { return origin_[(std::size_t)h]; }
  std::int32_t dest(std::int32_t h) const { return origin_[(std::size_t)(h ^ 1)]; }

  // previous half-edge in the rotation at origin(h): next(prev(h)) == h
  std::int32_t prev(std::int32_t h) const {
    std::int32_t x = h;
    while (next_[(std::size_t)x] != h) x = next_[(std::size_t)x];
    return x;
  }

  struct Faces {
    std::vector<std::int32_t> face_of;  // by half-edge
    std::vector<std::int32_t> degree;   // by face id
    std::int32_t count = 0;
  };

  Faces faces() const {
    Faces f;
    f.face_of.assign(next_.size(), -1);
    for (std::size_t h0 = 0; h0 < next_.size(); ++h0) {
      if (f.face_of[h0] != -1) continue;
      std::int32_t id = f.count++;
      f.degree.push_back(0);
      std::int32_t h = (std::int32_t)h0;
      while (f.face_of[(std::size_t)h] == -1) {
        f.face_of[(std::size_t)h] = id;
        ++f.degree[(std::size_t)id];
        h = next_[(std::size_t)(h ^ 1)];
      }
      if (h != (std::int32_t)h0) fail(Errc::BadConfig, "corrupt face orbit");
    }
    return f;
  }

  std::int32_t root_face(const Faces& f) const {
    if (root_ < 0) fail(Errc::BadConfig, "vertex map has no root face");
    return f.face_of[(std::size_t)twin(root_)];
  }

  std::int64_t perimeter() const {
    if (root_ < 0) return 0;
    Faces f = faces();
    return f.degree[(std::size_t)root_face(f)];
  }

  bool euler_ok() const {
    if (next_.empty()) return nv_ == 1;
    Faces f = faces();
    return (std::int64_t)nv_ - edge_count() + f.count == 2;
  }

  bool bipartite_faces() const {
    Faces f = faces();
    for (std::int32_t d : f.degree)
      if (d % 2 != 0) return false;
    return true;
  }

  // Right contour of the root face, starting at the root half-edge: the
  // sequence of half-edges walked with the root face kept on the right.
  // These are the twins of the root-face orbit traversed backwards.
  std::vector<std::int32_t> boundary_walk() const {
    if (root_ < 0) return {};
    std::vector<std::int32_t> orbit;
    std::int32_t h0 = twin(root_);
    std::int32_t h = h0;
    do {
      orbit.push_back(h);
      h = next_[(std::size_t)(h ^ 1)];
    } while (h != h0);
    std::vector<std::int32_t> walk;
    walk.reserve(orbit.size());
    walk.push_back(root_);
    for (std::size_t i = orbit.size(); i-- > 1;) walk.push_back(twin(orbit[i]));
    return walk;
  }

  // vertex adjacency BFS (distances from a source vertex)
  std::vector<std::int32_t> bfs(std::int32_t src) const {
    std::vector<std::int32_t> dist((std::size_t)nv_, -1);
    std::deque<std::int32_t> q;
    dist[(std::size_t)src] = 0;
    q.push_back(src);
    // per-vertex half-edge lists
    while (!q.empty()) {
      std::int32_t v = q.front();
      q.pop_front();
      std::int32_t h0 = first_he(v);
      if (h0 < 0) continue;
      std::int32_t h = h0;
      do {
        std::int32_t w = dest(h);
        if (dist[(std::size_t)w] < 0) {
          dist[(std::size_t)w] = dist[(std::size_t)v] + 1;
          q.push_back(w);
        }
        h = next_[(std::size_t)h];
      } while (h != h0);
    }
    return dist;
  }

  std::int32_t first_he(std::int32_t v) const {
    build_vertex_index();
    return vfirst_[(std::size_t)v];
  }

  std::string serialize() const {
    std::ostringstream os;
    os << "boltzmap-map v1\n";
    os << "V " << nv_ << "\n";
    os << "E " << edge_count() << "\n";
    os << "root " << root_ << "\n";
    std::vector<std::vector<std::int32_t>> rot((std::size_t)nv_);
    for (std::size_t h = 0; h < next_.size(); ++h) rot[(std::size_t)origin_[h]].push_back(0);
    // rebuild rotation order per vertex by following next_
    std::vector<char> seen(next_.size(), 0);
    for (std::int32_t v = 0; v < nv_; ++v) rot[(std::size_t)v].clear();
    for (std::size_t h0 = 0; h0 < next_.size(); ++h0) {
      if (seen[h0]) continue;
      std::int32_t v = origin_[h0];
      std::int32_t h = (std::int32_t)h0;
      do {
        rot[(std::size_t)v].push_back(h);
        seen[(std::size_t)h] = 1;
        h = next_[(std::size_t)h];
      } while (h != (std::int32_t)h0);
    }
    for (std::int32_t v = 0; v < nv_; ++v) {
      os << "vertex " << v << " :";
      for (std::int32_t h : rot[(std::size_t)v]) os << " " << h;
      os << "\n";
    }
    return os.str();
  }

 private:
  void check_connected_and_planar() const {
    for (std::size_t h = 0; h < next_.size(); ++h) {
      if (next_[h] < 0) fail(Errc::BadConfig, "incomplete rotation");
      if (origin_[(std::size_t)(h ^ 1)] < 0) fail(Errc::BadConfig, "missing twin");
    }
    if (nv_ > 1) {
      auto dist = bfs(0);
      for (auto d : dist)
        if (d < 0) fail(Errc::BadConfig, "map not connected");
    }
    if (!next_.empty() && !euler_ok()) fail(Errc::BadConfig, "rotation system is not planar");
  }

  void build_vertex_index() const {
    if ((std::int32_t)vfirst_.size() == nv_) return;
    vfirst_.assign((std::size_t)nv_, -1);
    for (std::size_t h = 0; h < next_.size(); ++h)
      if (vfirst_[(std::size_t)origin_[h]] < 0) vfirst_[(std::size_t)origin_[h]] = (std::int32_t)h;
  }

  std::vector<std::int32_t> next_, origin_;
  mutable std::vector<std::int32_t> vfirst_;
  std::int32_t nv_ = 0;
  std::int32_t root_ = -1;
};

// ---------------------------------------------------------------------------
// Loop(t): one polygon per black vertex, connecting its incident white
// vertices in cyclic order; black vertices and tree edges are discarded.
// Root edge: origin of t -> last child of its first offspring.
// ---------------------------------------------------------------------------
inline CombMap loop_of_tree(const PlaneTree& t) {
  t.require_materialized("loop_of_tree");
  if (t.size() == 1) return CombMap::single_vertex();
  auto h = t.heights();
  // white renumbering
  std::vector<std::int32_t> wid((std::size_t)t.size(), -1);
  std::int32_t nw = 0;
  for (std::int32_t v = 0; v < t.size(); ++v)
    if ((h[(std::size_t)v] & 1) == 0) wid[(std::size_t)v] = nw++;

  // polygon edges; for black u with parent p and children c_1..c_k the cycle
  // is (p, c_1, ..., c_k): half-edge pairs allocated per edge
  struct End {
    std::int32_t he;
  };
  // ends stored per white vertex: lists to be assembled into rotations
  struct WhiteEnds {
    // from the parent polygon: toward previous / next cycle neighbor
    std::int32_t PL = -1, PR = -1;
    // from each child polygon (in child order): toward its first / last child
    std::vector<std::int32_t> F, L;
  };
  std::vector<WhiteEnds> ends((std::size_t)nw);
  std::int32_t next_he = 0;
  std::vector<std::pair<std::int32_t, std::int32_t>> hv;  // half-edge -> white vertex
  auto new_edge = [&](std::int32_t wa, std::int32_t wb) {
    std::int32_t ha = next_he++;
    std::int32_t hb = next_he++;
    hv.push_back({ha, wa});
    hv.push_back({hb, wb});
    return std::pair<std::int32_t, std::int32_t>(ha, hb);
  };

  for (std::int32_t u = 0; u < t.size(); ++u) {
    if ((h[(std::size_t)u] & 1) == 0) continue;  // whites skipped
    const auto& ch = t.nodes[(std::size_t)u].pre;
    std::int64_t k = (std::int64_t)ch.size();
    if ((k + 1) % 2 != 0) fail(Errc::OddLoop, "black vertex of odd degree");
    std::int32_t p = t.nodes[(std::size_t)u].parent;
    std::vector<std::int32_t> cyc;
    cyc.reserve((std::size_t)k + 1);
    cyc.push_back(wid[(std::size_t)p]);
    for (auto c : ch) cyc.push_back(wid[(std::size_t)c]);
    std::int32_t m = (std::int32_t)cyc.size();
    for (std::int32_t j = 0; j < m; ++j) {
      std::int32_t a = cyc[(std::size_t)j];
      std::int32_t b = cyc[(std::size_t)((j + 1) % m)];
      auto [ha, hb] = new_edge(a, b);
      // classify ends
      if (j == 0) {
        // edge p - c1: at p this is the F end of polygon u; at c1 the PL end
        ends[(std::size_t)a].F.push_back(ha);
        ends[(std::size_t)b].PL = hb;
      } else if (j == m - 1) {
        // edge c_k - p: at c_k the PR end; at p the L end of polygon u
        ends[(std::size_t)a].PR = ha;
        ends[(std::size_t)b].L.push_back(hb);
      } else {
        // sibling edge c_j - c_{j+1}
        ends[(std::size_t)a].PR = ha;
        ends[(std::size_t)b].PL = hb;
      }
    }
    // white parent p: keep F/L aligned per child polygon (F pushed at j==0,
    // L pushed at j==m-1); ordering within p's lists follows child order of p
  }

  // assemble rotations; CCW at white w: (PR, L_1, F_1, ..., L_m, F_m, PL),
  // root omits the parent-polygon ends
  std::vector<std::vector<std::int32_t>> rot((std::size_t)nw);
  for (std::int32_t v = 0; v < t.size(); ++v) {
    if ((h[(std::size_t)v] & 1) != 0) continue;
    auto& e = ends[(std::size_t)wid[(std::size_t)v]];
    auto& r = rot[(std::size_t)wid[(std::size_t)v]];
    if (e.PR != -1) r.push_back(e.PR);
    for (std::size_t i = 0; i < e.F.size(); ++i) {
      r.push_back(e.L[i]);
      r.push_back(e.F[i]);
    }
    if (e.PL != -1) r.push_back(e.PL);
  }

  // root half-edge: at the origin, the L end of its first child polygon
  const auto& rch = t.nodes[(std::size_t)t.root].pre;
  if (rch.empty()) fail(Errc::BadConfig, "loop_of_tree: root must have a child");
  std::int32_t root_he = ends[(std::size_t)wid[(std::size_t)t.root]].L.front();

  std::vector<std::vector<std::int32_t>> rot_by_vertex(rot.begin(), rot.end());
  return CombMap::from_rotations(nw, rot_by_vertex, root_he);
}

// ---------------------------------------------------------------------------
// Tree of components via the boundary walk: pinch vertices nest, so simple
// cycles pop off a stack. Whites are boundary vertices, blacks are
// irreducible-component boundaries; orders follow the contour.
// Also reports, per black, the closing walk info needed by split_components.
// ---------------------------------------------------------------------------
struct ComponentCycle {
  std::vector<std::int32_t> steps;  // half-edges of the component boundary, anchor first
  std::int32_t black_node = -1;
};

inline PlaneTree tree_of_components(const CombMap& m, std::vector<ComponentCycle>* cycles_out) {
  PlaneTree t;
  if (m.vertex_count() == 1 && m.edge_count() == 0) {
    t.add_node(-1);
    return t;
  }
  auto walk = m.boundary_walk();
  std::int64_t P = (std::int64_t)walk.size();
  struct Open {
    std::int32_t vertex;
    std::int32_t node;
    std::int32_t in_step;  // walk step that pushed this vertex
  };
  std::vector<Open> stack;
  std::vector<std::int32_t> open_pos((std::size_t)m.vertex_count(), -1);
  std::int32_t root_node = t.add_node(-1);
  stack.push_back({m.origin(walk[0]), root_node, -1});
  open_pos[(std::size_t)m.origin(walk[0])] = 0;

  for (std::int64_t i = 0; i < P; ++i) {
    std::int32_t s = walk[(std::size_t)i];
    std::int32_t v = m.dest(s);
    std::int32_t pos = open_pos[(std::size_t)v];
    if (pos < 0) {
      std::int32_t node = t.add_node(-1);  // parent set at cycle closure
      open_pos[(std::size_t)v] = (std::int32_t)stack.size();
      stack.push_back({v, node, s});
    } else {
      // closes the cycle consisting of entries pos+1..top plus this step
      std::int32_t anchor_node = stack[(std::size_t)pos].node;
      std::int32_t black = t.add_node(anchor_node);
      std::vector<std::int32_t> steps;
      for (std::size_t j = (std::size_t)pos + 1; j < stack.size(); ++j) {
        steps.push_back(stack[j].in_step);
        auto& nd = t.nodes[(std::size_t)stack[j].node];
        nd.parent = black;
        t.nodes[(std::size_t)black].pre.push_back(stack[j].node);
        open_pos[(std::size_t)stack[j].vertex] = -1;
      }
      steps.push_back(s);
      t.nodes[(std::size_t)black].degree = (std::int64_t)t.nodes[(std::size_t)black].pre.size();
      if (cycles_out) cycles_out->push_back({std::move(steps), black});
      stack.resize((std::size_t)pos + 1);
    }
  }
  if (stack.size() != 1) fail(Errc::BadConfig, "boundary walk did not close");
  // nodes were created in walk order with parents fixed later; renumber to DFS
  // order via the canonical encoding round trip, preserving cycle ownership by
  // re-deriving black ids from the paren traversal is unnecessary: callers use
  // the tree structurally and cycles reference node ids of *this* tree.
  return t;
}

inline PlaneTree tree_of_components(const CombMap& m) { return tree_of_components(m, nullptr); }

// Tree(l) for a looptree, with edge-outerplanarity validation.
inline PlaneTree tree_of_loop(const CombMap& l) {
  if (l.vertex_count() == 1 && l.edge_count() == 0) {
    PlaneTree t;
    t.add_node(-1);
    return t;
  }
  auto walk = l.boundary_walk();
  if ((std::int64_t)walk.size() != 2 * l.edge_count()) {
    // every edge must be incident to the root face; count edge occurrences
    std::vector<char> seen((std::size_t)l.half_edge_count(), 0);
    for (auto h : walk) seen[(std::size_t)h] = 1;
    for (std::int64_t e = 0; e < l.edge_count(); ++e)
      if (!seen[(std::size_t)(2 * e)] && !seen[(std::size_t)(2 * e + 1)])
        fail(Errc::NotLooptree, "edge not incident to the root face");
  }
  for (auto h : walk) {
    // an edge with both sides on the root face is not edge-outerplanar
    // (it would bound the root face twice)
    ;
  }
  std::vector<char> in_walk((std::size_t)l.half_edge_count(), 0);
  for (auto h : walk) in_walk[(std::size_t)h] = 1;
  for (auto h : walk)
    if (in_walk[(std::size_t)(h ^ 1)]) fail(Errc::NotLooptree, "edge incident to root face twice");
  return tree_of_components(l);
}

inline CombMap scoop(const CombMap& m) {
  if (m.vertex_count() == 1 && m.edge_count() == 0) return m;
  return loop_of_tree(tree_of_components(m));
}

// ---------------------------------------------------------------------------
// polygon(p): the 2p-cycle with one internal face of degree 2p.
// ---------------------------------------------------------------------------
inline CombMap polygon(std::int32_t p) {
  if (p < 1) fail(Errc::BadConfig, "polygon needs p >= 1");
  std::int32_t n = 2 * p;
  std::vector<std::vector<std::int32_t>> rot((std::size_t)n);
  // edge i connects vertex i and i+1 (mod n); halves 2i (at i), 2i+1 (at i+1)
  for (std::int32_t i = 0; i < n; ++i) {
    std::int32_t prev_edge_half = 2 * ((i + n - 1) % n) + 1;
    rot[(std::size_t)i] = {2 * i, prev_edge_half};
  }
  return CombMap::from_rotations(n, rot, 0);
}

// ---------------------------------------------------------------------------
// split_components / glue_components (Phi_TC and its inverse)
// ---------------------------------------------------------------------------
struct ComponentBundle {
  PlaneTree tree;                   // blacks have even degree
  std::vector<CombMap> components;  // one per black, in the order blacks appear in `tree`
  std::vector<std::int32_t> black_nodes;  // tree node ids, parallel to components
};

namespace detail {

// extract the submap of `m` consisting of the faces flooded from the inner
// sides of a component cycle; rooted at the anchor step with the old root
// face on its right.
inline CombMap extract_component(const CombMap& m, const CombMap::Faces& faces,
                                 std::int32_t root_face_id,
                                 const std::vector<std::int32_t>& steps) {
  // doubled-edge component: both sides of one edge on the root face
  if (steps.size() == 2 && (steps[0] ^ 1) == steps[1]) {
    // the single-edge map: one edge, two vertices
    std::vector<std::vector<std::int32_t>> rot(2);
    rot[0] = {0};
    rot[1] = {1};
    return CombMap::from_rotations(2, rot, 0);
  }
  // flood internal faces from the left faces of the cycle steps
  std::vector<char> face_in((std::size_t)faces.count, 0);
  std::vector<char> cycle_edge((std::size_t)m.edge_count(), 0);
  for (auto s : steps) cycle_edge[(std::size_t)(s >> 1)] = 1;
  std::vector<std::int32_t> todo;
  for (auto s : steps) {
    std::int32_t f = faces.face_of[(std::size_t)s];  // left face of the step
    if (f == root_face_id) fail(Errc::NonSimpleComponent, "cycle step faces the root face");
    if (!face_in[(std::size_t)f]) {
      face_in[(std::size_t)f] = 1;
      todo.push_back(f);
    }
  }
  // face adjacency via shared edges, not crossing cycle edges
  // (collect half-edges per face by orbit walk)
  std::vector<char> he_in((std::size_t)m.half_edge_count(), 0);
  std::vector<std::int32_t> stack = todo;
  std::vector<char> face_seen = face_in;
  // mark all half-edges of flooded faces
  while (!stack.empty()) {
    std::int32_t f = stack.back();
    stack.pop_back();
    // find one half-edge of face f: scan (cached scan acceptable at our sizes)
    for (std::int32_t h = 0; h < m.half_edge_count(); ++h) {
      if (faces.face_of[(std::size_t)h] != f || he_in[(std::size_t)h]) continue;
      std::int32_t x = h;
      do {
        he_in[(std::size_t)x] = 1;
        std::int32_t e = x >> 1;
        if (!cycle_edge[(std::size_t)e]) {
          std::int32_t g = faces.face_of[(std::size_t)(x ^ 1)];
          if (g == root_face_id) fail(Errc::NonSimpleComponent, "component leaks to root face");
          if (!face_seen[(std::size_t)g]) {
            face_seen[(std::size_t)g] = 1;
            stack.push_back(g);
          }
        }
        x = m.next(x ^ 1);
      } while (x != h);
      break;
    }
  }
  // component half-edges: those of flooded faces plus the outer sides of the
  // cycle edges (walk steps themselves have left = internal flooded faces;
  // their twins face the old root face and become the new root face sides)
  for (auto s : steps) {
    he_in[(std::size_t)s] = 1;
    he_in[(std::size_t)(s ^ 1)] = 1;
  }
  // renumber vertices and half-edges; rotation = induced cyclic order
  std::vector<std::int32_t> vmap((std::size_t)m.vertex_count(), -1);
  std::vector<std::int32_t> hmap((std::size_t)m.half_edge_count(), -1);
  std::int32_t nv = 0;
  // pair new half-edge ids: edge e kept iff either half in he_in (then both)
  std::int32_t nh = 0;
  for (std::int64_t e = 0; e < m.edge_count(); ++e) {
    std::int32_t a = (std::int32_t)(2 * e), b = a + 1;
    if (he_in[(std::size_t)a] || he_in[(std::size_t)b]) {
      hmap[(std::size_t)a] = nh++;
      hmap[(std::size_t)b] = nh++;
    }
  }
  std::vector<std::vector<std::int32_t>> rot;
  for (std::int32_t v = 0; v < m.vertex_count(); ++v) {
    std::int32_t h0 = m.first_he(v);
    if (h0 < 0) continue;
    // collect kept half-edges at v in rotation order
    std::vector<std::int32_t> r;
    std::int32_t h = h0;
    do {
      if (hmap[(std::size_t)h] >= 0 && he_in[(std::size_t)h]) r.push_back(hmap[(std::size_t)h]);
      h = m.next(h);
    } while (h != h0);
    if (!r.empty()) {
      vmap[(std::size_t)v] = nv++;
      rot.push_back(std::move(r));
    }
  }
  std::int32_t root_he = hmap[(std::size_t)steps[0]];
  CombMap comp = CombMap::from_rotations(nv, rot, root_he);
  // boundary must be a simple cycle of the expected length
  if (comp.perimeter() != (std::int64_t)steps.size())
    fail(Errc::NonSimpleComponent, "component boundary is not the cycle");
  return comp;
}

}  // namespace detail

inline ComponentBundle split_components(const CombMap& m) {
  ComponentBundle b;
  std::vector<ComponentCycle> cycles;
  b.tree = tree_of_components(m, &cycles);
  if (m.vertex_count() == 1 && m.edge_count() == 0) return b;
  auto faces = m.faces();
  std::int32_t rf = m.root_face(faces);
  for (auto& c : cycles) {
    b.components.push_back(detail::extract_component(m, faces, rf, c.steps));
    b.black_nodes.push_back(c.black_node);
  }
  return b;
}

// Glue components into the internal faces of Loop(tree), root edges matching
// (Remark on gluing: each internal face is rooted at the oriented edge whose
// origin is closest to the map origin, root face on its right).
inline CombMap glue_components(const ComponentBundle& b) {
  const PlaneTree& t = b.tree;
  if (t.size() == 1) return CombMap::single_vertex();
  t.require_materialized("glue_components");
  auto h = t.heights();

  // order blacks by node id for lookup
  std::unordered_map<std::int32_t, const CombMap*> comp_of;
  for (std::size_t i = 0; i < b.black_nodes.size(); ++i)
    comp_of[b.black_nodes[i]] = &b.components[i];

  // Build by vertex-identification: each black's component contributes its
  // half-edges; its boundary vertices are identified with tree whites.
  // Boundary of component: right contour from its root half-edge, visiting
  // 2p vertices matched to (parent, c_1, ..., c_k) of the black.
  struct VSlot {
    // rotation pieces per white: parent's piece split at the anchor corner,
    // children pieces in order
    std::vector<std::int32_t> pieces_flat;
  };
  std::int32_t total_h = 0;
  for (auto& c : b.components) total_h += c.half_edge_count();
  if (b.components.size() != (std::size_t)std::count_if(h.begin(), h.end(), [&](std::int32_t x) {
        return (x & 1) == 1;
      })) {
    fail(Errc::PerimeterMismatch, "one component per black vertex required");
  }

  // global half-edge ids: offset per component, preserving twin pairing parity
  std::vector<std::int32_t> offset(b.components.size(), 0);
  std::int32_t acc = 0;
  for (std::size_t i = 0; i < b.components.size(); ++i) {
    offset[i] = acc;
    acc += b.components[i].half_edge_count();
  }

  // white vertex ids
  std::vector<std::int32_t> wid((std::size_t)t.size(), -1);
  std::int32_t nw = 0;
  for (std::int32_t v = 0; v < t.size(); ++v)
    if ((h[(std::size_t)v] & 1) == 0) wid[(std::size_t)v] = nw++;

  // interior (non-boundary) vertices of components get fresh ids
  std::int32_t nv = nw;

  // per-white rotation assembly, mirroring loop_of_tree: at white w the CCW
  // rotation is (parent-PR-arc ... , child arcs ..., parent-PL-arc) where the
  // parent piece is the component rotation at w split at its root-face corner.
  // We represent each component's contribution at a boundary vertex as the
  // linear arc of its half-edges starting after the root-face corner.
  struct Arc {
    std::vector<std::int32_t> hes;  // local half-edge ids in CCW order
  };

  std::vector<std::vector<std::int32_t>> rot((std::size_t)nw);
  std::vector<std::vector<std::int32_t>> rot_interior;  // appended later
  std::vector<std::int32_t> vert_of_local;              // filled per component below

  // First pass: compute for every component its boundary vertex list (right
  // contour) and per-boundary-vertex CCW arc of half-edges beginning at the
  // half-edge after the boundary corner.
  // The boundary corner at a boundary vertex v: between the incoming walk
  // step's twin and the outgoing walk step.
  std::vector<std::vector<std::int32_t>> comp_arcs(b.components.size());
  std::vector<std::vector<std::vector<std::int32_t>>> comp_varcs(b.components.size());
  std::vector<std::vector<std::int32_t>> comp_bverts(b.components.size());
  for (std::size_t ci = 0; ci < b.components.size(); ++ci) {
    const CombMap& c = b.components[ci];
    auto walk = c.boundary_walk();
    std::vector<std::int32_t>& bverts = comp_bverts[ci];
    auto& varcs = comp_varcs[ci];
    std::int64_t P = (std::int64_t)walk.size();
    bverts.resize((std::size_t)P);
    varcs.resize((std::size_t)P);
    for (std::int64_t i = 0; i < P; ++i) {
      std::int32_t out_step = walk[(std::size_t)i];
      std::int32_t in_step = walk[(std::size_t)((i + P - 1) % P)];
      std::int32_t v = c.origin(out_step);
      bverts[(std::size_t)i] = v;
      // CCW arc at v from out_step around to twin(in_step), inclusive
      std::vector<std::int32_t> arc;
      std::int32_t x = out_step;
      while (true) {
        arc.push_back(x);
        if (x == (c.twin(in_step))) break;
        x = c.next(x);
        if ((std::int32_t)arc.size() > c.half_edge_count())
          fail(Errc::NonSimpleComponent, "component boundary corner not found");
      }
      varcs[(std::size_t)i] = std::move(arc);
    }
  }

  // map: black tree-node -> component index
  std::unordered_map<std::int32_t, std::size_t> comp_idx;
  for (std::size_t i = 0; i < b.black_nodes.size(); ++i) comp_idx[b.black_nodes[i]] = i;

  // vertex identification: component boundary vertex i of black u corresponds
  // to tree white: (parent(u), c_1, .., c_k) at position i
  std::vector<std::vector<std::int32_t>> comp_vmap(b.components.size());
  for (std::size_t ci = 0; ci < b.components.size(); ++ci)
    comp_vmap[ci].assign((std::size_t)b.components[ci].vertex_count(), -1);

  for (std::int32_t u = 0; u < t.size(); ++u) {
    if ((h[(std::size_t)u] & 1) == 0) continue;
    auto it = comp_idx.find(u);
    if (it == comp_idx.end()) fail(Errc::PerimeterMismatch, "missing component for a black vertex");
    std::size_t ci = it->second;
    const auto& ch = t.nodes[(std::size_t)u].pre;
    std::int64_t expect = (std::int64_t)ch.size() + 1;
    if ((std::int64_t)comp_bverts[ci].size() != expect)
      fail(Errc::PerimeterMismatch, "component perimeter != black degree");
    std::int32_t p = t.nodes[(std::size_t)u].parent;
    comp_vmap[ci][(std::size_t)comp_bverts[ci][0]] = wid[(std::size_t)p];
    for (std::size_t j = 0; j < ch.size(); ++j)
      comp_vmap[ci][(std::size_t)comp_bverts[ci][j + 1]] = wid[(std::size_t)ch[j]];
  }

  // interior vertices
  for (std::size_t ci = 0; ci < b.components.size(); ++ci) {
    const CombMap& c = b.components[ci];
    for (std::int32_t v = 0; v < c.vertex_count(); ++v)
      if (comp_vmap[ci][(std::size_t)v] == -1) comp_vmap[ci][(std::size_t)v] = nv++;
  }

  rot.resize((std::size_t)nv);
  // interior rotations: copy whole
  for (std::size_t ci = 0; ci < b.components.size(); ++ci) {
    const CombMap& c = b.components[ci];
    std::vector<char> on_boundary((std::size_t)c.vertex_count(), 0);
    for (auto v : comp_bverts[ci]) on_boundary[(std::size_t)v] = 1;
    std::vector<char> emitted((std::size_t)c.half_edge_count(), 0);
    for (std::int32_t h0 = 0; h0 < c.half_edge_count(); ++h0) {
      if (emitted[(std::size_t)h0]) continue;
      std::int32_t v = c.origin(h0);
      if (on_boundary[(std::size_t)v]) {
        // handled via arcs
        std::int32_t x = h0;
        do {
          emitted[(std::size_t)x] = 1;
          x = c.next(x);
        } while (x != h0);
        continue;
      }
      std::int32_t x = h0;
      auto& r = rot[(std::size_t)comp_vmap[ci][(std::size_t)v]];
      do {
        emitted[(std::size_t)x] = 1;
        r.push_back(offset[ci] + x);
        x = c.next(x);
      } while (x != h0);
    }
  }

  // white rotations, assembled as in loop_of_tree with arcs instead of edges
  for (std::int32_t v = 0; v < t.size(); ++v) {
    if ((h[(std::size_t)v] & 1) != 0) continue;
    auto& r = rot[(std::size_t)wid[(std::size_t)v]];
    // parent polygon pieces
    std::vector<std::int32_t> PRpiece, PLpiece;
    if (t.nodes[(std::size_t)v].parent >= 0) {
      std::int32_t u = t.nodes[(std::size_t)v].parent;  // black
      std::size_t ci = comp_idx.at(u);
      // boundary position of v in u's component: parent at 0, child j at j+1
      const auto& ch = t.nodes[(std::size_t)u].pre;
      std::size_t pos = 0;
      for (std::size_t j = 0; j < ch.size(); ++j)
        if (ch[j] == v) pos = j + 1;
      const auto& arc = comp_varcs[ci][pos];
      // arc runs from the outgoing boundary step (toward next cycle vertex,
      // the PR side) around to the incoming step's twin (the PL side).
      for (auto x : arc) PRpiece.push_back(offset[ci] + x);
    }
    // the split: PR end first, then children arcs, then the rest of the
    // parent arc; for the assembly below we mirror loop_of_tree exactly:
    // rotation = (PR..., [child arcs: L then F pieces]..., ...PL)
    // Parent arc is linear (PR side first, PL side last); children arcs are
    // inserted between its first element run and the remainder only when the
    // parent arc has interior structure at v. The arc begins with the PR
    // half-edge and ends with the PL half-edge; interior elements belong to
    // the component's own structure at v and stay contiguous after PR.
    if (!PRpiece.empty()) {
      r.push_back(PRpiece.front());
      for (std::size_t i = 1; i + 1 < PRpiece.size(); ++i) r.push_back(PRpiece[i]);
    }
    for (std::int32_t u : t.nodes[(std::size_t)v].pre) {  // child blacks in order
      std::size_t ci = comp_idx.at(u);
      const auto& arc = comp_varcs[ci][0];  // anchor position
      // at the anchor, the arc starts with the component root half-edge (the
      // L... direction) and ends with the PL-analogue (the F direction):
      for (auto x : arc) r.push_back(offset[ci] + x);
    }
    if (!PRpiece.empty()) r.push_back(PRpiece.back());
  }

  // root: the L end at the tree origin of its first child's component =
  // that component's root half-edge
  std::int32_t first_black = t.nodes[(std::size_t)t.root].pre.empty()
                                 ? -1
                                 : t.nodes[(std::size_t)t.root].pre.front();
  if (first_black < 0) fail(Errc::BadConfig, "glue: root without children");
  std::size_t ci0 = comp_idx.at(first_black);
  std::int32_t root_he = offset[ci0] + b.components[ci0].root();

  return CombMap::from_rotations(nv, rot, root_he);
}

// ---------------------------------------------------------------------------
// Loop-bold and LoopBar (Curien-Kortchemski variants).
// Loop-bold: edges between consecutive siblings and from each vertex to its
// first and last child; rooted origin -> last child. LoopBar contracts every
// (vertex, last child) edge; rooted origin -> penultimate child.
// ---------------------------------------------------------------------------
inline CombMap loop_bold(const PlaneTree& t) {
  t.require_materialized("loop_bold");
  if (t.size() == 1) return CombMap::single_vertex();
  std::int32_t n = t.size();
  // polygon per non-leaf u: cycle (u, c_1, ..., c_k)
  struct Ends {
    std::int32_t PL = -1, PR = -1;
    std::vector<std::int32_t> F, L;
  };
  std::vector<Ends> ends((std::size_t)n);
  std::int32_t next_he = 0;
  auto new_pair = [&]() {
    std::int32_t a = next_he;
    next_he += 2;
    return std::pair<std::int32_t, std::int32_t>(a, a + 1);
  };
  std::vector<std::int32_t> origin_store;
  for (std::int32_t u = 0; u < n; ++u) {
    const auto& ch = t.nodes[(std::size_t)u].pre;
    if (ch.empty()) continue;
    std::int32_t m = (std::int32_t)ch.size() + 1;
    std::vector<std::int32_t> cyc;
    cyc.push_back(u);
    for (auto c : ch) cyc.push_back(c);
    for (std::int32_t j = 0; j < m; ++j) {
      std::int32_t a = cyc[(std::size_t)j];
      std::int32_t bq = cyc[(std::size_t)((j + 1) % m)];
      auto [ha, hb] = new_pair();
      (void)bq;
      if (j == 0) {
        ends[(std::size_t)a].F.push_back(ha);
        ends[(std::size_t)cyc[1]].PL = hb;
      } else if (j == m - 1) {
        ends[(std::size_t)a].PR = ha;
        ends[(std::size_t)u].L.push_back(hb);
      } else {
        ends[(std::size_t)a].PR = ha;
        ends[(std::size_t)bq].PL = hb;
      }
    }
  }
  std::vector<std::vector<std::int32_t>> rot((std::size_t)n);
  for (std::int32_t v = 0; v < n; ++v) {
    auto& e = ends[(std::size_t)v];
    auto& r = rot[(std::size_t)v];
    if (e.PR != -1) r.push_back(e.PR);
    for (std::size_t i = 0; i < e.F.size(); ++i) {
      r.push_back(e.L[i]);
      r.push_back(e.F[i]);
    }
    if (e.PL != -1) r.push_back(e.PL);
  }
  std::int32_t root_he = ends[(std::size_t)t.root].L.front();
  return CombMap::from_rotations(n, rot, root_he);
}

namespace detail {

// contract a set of non-loop edges in a rotation system
inline CombMap contract_edges(const CombMap& m, const std::vector<char>& contract_he_pair,
                              std::int32_t new_root_he) {
  std::int32_t H = m.half_edge_count();
  std::vector<std::int32_t> nxt((std::size_t)H), prv((std::size_t)H);
  for (std::int32_t h = 0; h < H; ++h) nxt[(std::size_t)h] = m.next(h);
  for (std::int32_t h = 0; h < H; ++h) prv[(std::size_t)nxt[(std::size_t)h]] = h;
  std::vector<char> dead((std::size_t)H, 0);
  for (std::int32_t e = 0; e < (std::int32_t)m.edge_count(); ++e) {
    if (!contract_he_pair[(std::size_t)e]) continue;
    std::int32_t h = 2 * e, g = 2 * e + 1;
    // splice: next'(prev(h)) = next(g), next'(prev(g)) = next(h)
    std::int32_t ph = prv[(std::size_t)h], pg = prv[(std::size_t)g];
    std::int32_t nh = nxt[(std::size_t)h], ng = nxt[(std::size_t)g];
    if (ph == g && nh == g) {
      // isolated doubled pair: degenerate, skip
    }
    // handle self-rotation adjacency (degree-1 endpoints): if next(h)==h then
    // vertex has only h: merged vertex rotation = rotation of the other end
    if (nh == h) {
      nxt[(std::size_t)pg] = ng;
      prv[(std::size_t)ng] = pg;
    } else if (ng == g) {
      nxt[(std::size_t)ph] = nh;
      prv[(std::size_t)nh] = ph;
    } else {
      nxt[(std::size_t)ph] = ng;
      prv[(std::size_t)ng] = ph;
      nxt[(std::size_t)pg] = nh;
      prv[(std::size_t)nh] = pg;
    }
    dead[(std::size_t)h] = dead[(std::size_t)g] = 1;
  }
  // rebuild: union-find on vertices via contracted edges
  std::vector<std::int32_t> uf((std::size_t)m.vertex_count());
  for (std::size_t i = 0; i < uf.size(); ++i) uf[i] = (std::int32_t)i;
  std::function<std::int32_t(std::int32_t)> find = [&](std::int32_t x) {
    while (uf[(std::size_t)x] != x) {
      uf[(std::size_t)x] = uf[(std::size_t)uf[(std::size_t)x]];
      x = uf[(std::size_t)x];
    }
    return x;
  };
  for (std::int32_t e = 0; e < (std::int32_t)m.edge_count(); ++e) {
    if (!contract_he_pair[(std::size_t)e]) continue;
    std::int32_t a = find(m.origin(2 * e)), bb = find(m.origin(2 * e + 1));
    if (a != bb) uf[(std::size_t)a] = bb;
  }
  // renumber surviving half-edges preserving twin parity
  std::vector<std::int32_t> hmap((std::size_t)H, -1);
  std::int32_t nh2 = 0;
  for (std::int32_t e = 0; e < (std::int32_t)m.edge_count(); ++e) {
    if (dead[(std::size_t)(2 * e)]) continue;
    hmap[(std::size_t)(2 * e)] = nh2++;
    hmap[(std::size_t)(2 * e + 1)] = nh2++;
  }
  std::vector<std::int32_t> vmap((std::size_t)m.vertex_count(), -1);
  std::int32_t nv = 0;
  std::vector<std::vector<std::int32_t>> rot;
  std::vector<char> emitted((std::size_t)H, 0);
  for (std::int32_t h0 = 0; h0 < H; ++h0) {
    if (dead[(std::size_t)h0] || emitted[(std::size_t)h0]) continue;
    std::int32_t rv = find(m.origin(h0));
    if (vmap[(std::size_t)rv] == -1) {
      vmap[(std::size_t)rv] = nv++;
      rot.emplace_back();
    }
    auto& r = rot[(std::size_t)vmap[(std::size_t)rv]];
    std::int32_t x = h0;
    do {
      emitted[(std::size_t)x] = 1;
      r.push_back(hmap[(std::size_t)x]);
      x = nxt[(std::size_t)x];
    } while (x != h0);
  }
  // isolated vertex (everything contracted)
  if (nv == 0) return CombMap::single_vertex();
  return CombMap::from_rotations(nv, rot, hmap[(std::size_t)new_root_he]);
}

}  // namespace detail

inline CombMap loop_bar(const PlaneTree& t) {
  t.require_materialized("loop_bar");
  if (t.size() == 1) return CombMap::single_vertex();
  CombMap bold = loop_bold(t);
  // identify the (u, last child) edges: they are the "L" edges, i.e. the
  // cycle edge j == m-1 of each polygon. Rebuild the same numbering to find
  // them: loop_bold allocates half-edge pairs in a deterministic order.
  std::vector<char> contract((std::size_t)bold.edge_count(), 0);
  std::int32_t he = 0;
  std::int32_t root_parallel = -1;  // edge (root, penultimate child) half-edge
  for (std::int32_t u = 0; u < t.size(); ++u) {
    const auto& ch = t.nodes[(std::size_t)u].pre;
    if (ch.empty()) continue;
    std::int32_t m = (std::int32_t)ch.size() + 1;
    for (std::int32_t j = 0; j < m; ++j) {
      std::int32_t edge = he / 2;
      if (j == m - 1) contract[(std::size_t)edge] = 1;
      if (u == t.root && m >= 3 && j == m - 2) {
        // sibling edge (c_{k-1}, c_k): after contraction this joins the
        // penultimate child to the merged root; root it from the merged side
        root_parallel = he + 1;
      }
      he += 2;
    }
  }
  if (root_parallel < 0) {
    // root has a single child: fall back to the first surviving half-edge of
    // the merged root corner (2-gon polygons contract to the other edge)
    std::int32_t he2 = 0;
    for (std::int32_t u = 0; u < t.size() && root_parallel < 0; ++u) {
      const auto& ch = t.nodes[(std::size_t)u].pre;
      if (ch.empty()) continue;
      std::int32_t m = (std::int32_t)ch.size() + 1;
      for (std::int32_t j = 0; j < m; ++j) {
        if (u == t.root && j == 0) root_parallel = he2;
        he2 += 2;
      }
    }
  }
  return detail::contract_edges(bold, contract, root_parallel);
}

// ---------------------------------------------------------------------------
// Canonical code: BFS half-edge labeling from the root; equal codes iff
// root-preserving isomorphism.
// ---------------------------------------------------------------------------
inline std::vector<std::int32_t> canonical_code(const CombMap& m) {
  if (m.root() < 0) return {-9, m.vertex_count()};
  std::vector<std::int32_t> code;
  std::vector<std::int32_t> vlabel((std::size_t)m.vertex_count(), -1);
  std::vector<std::int32_t> hpos((std::size_t)m.half_edge_count(), -1);
  std::deque<std::pair<std::int32_t, std::int32_t>> q;  // (vertex, entry half-edge)
  vlabel[(std::size_t)m.origin(m.root())] = 0;
  std::int32_t nextv = 1;
  q.push_back({m.origin(m.root()), m.root()});
  std::int32_t pos = 0;
  while (!q.empty()) {
    auto [v, entry] = q.front();
    q.pop_front();
    std::int32_t h = entry;
    do {
      std::int32_t tw = h ^ 1;
      if (hpos[(std::size_t)tw] >= 0) {
        code.push_back(hpos[(std::size_t)tw]);
      } else {
        std::int32_t w = m.dest(h);
        if (vlabel[(std::size_t)w] < 0) {
          vlabel[(std::size_t)w] = nextv++;
          q.push_back({w, tw});
          code.push_back(-1);
        } else {
          code.push_back(-2 - vlabel[(std::size_t)w]);
        }
      }
      hpos[(std::size_t)h] = pos++;
      h = m.next(h);
    } while (h != entry);
    code.push_back(-1000000);  // vertex terminator
  }
  return code;
}

inline std::string code_string(const std::vector<std::int32_t>& code) {
  std::string s;
  s.reserve(code.size() * 4);
  for (auto x : code) {
    s.append(reinterpret_cast<const char*>(&x), 4);
  }
  return s;
}

inline std::string canonical_code_string(const CombMap& m) {
  return code_string(canonical_code(m));
}

// ---------------------------------------------------------------------------
// graph metrics
// ---------------------------------------------------------------------------
struct GraphMetrics {
  std::int64_t diameter = 0;
  bool exact = true;
  std::int32_t ecc_root = 0;  // eccentricity of the root vertex
};

inline GraphMetrics graph_metrics(const CombMap& m, bool force_two_sweep = false,
                                  std::int32_t exact_limit = 2048) {
  GraphMetrics g;
  if (m.vertex_count() <= 1) return g;
  std::int32_t root_v = m.root() >= 0 ? m.origin(m.root()) : 0;
  auto d0 = m.bfs(root_v);
  std::int32_t far = root_v;
  for (std::int32_t v = 0; v < m.vertex_count(); ++v) {
    if (d0[(std::size_t)v] > d0[(std::size_t)far]) far = v;
    g.ecc_root = std::max(g.ecc_root, d0[(std::size_t)v]);
  }
  if (!force_two_sweep && m.vertex_count() <= exact_limit) {
    std::int64_t best = 0;
    for (std::int32_t v = 0; v < m.vertex_count(); ++v) {
      auto d = m.bfs(v);
      for (auto x : d) best = std::max<std::int64_t>(best, x);
    }
    g.diameter = best;
    g.exact = true;
  } else {
    auto d1 = m.bfs(far);
    std::int64_t best = 0;
    for (auto x : d1) best = std::max<std::int64_t>(best, x);
    g.diameter = best;
    g.exact = false;
  }
  return g;
}

}  // namespace boltzmap
