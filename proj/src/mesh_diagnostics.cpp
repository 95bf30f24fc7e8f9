#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "stacked/immersion.hpp"

namespace stacked {

namespace {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

double cross2(const Vec2& a, const Vec2& b) { return a[0] * b[1] - a[1] * b[0]; }

bool segments_cross(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = cross2(q2 - q1, p1 - q1);
  const double d2 = cross2(q2 - q1, p2 - q1);
  const double d3 = cross2(p2 - p1, q1 - p1);
  const double d4 = cross2(p2 - p1, q2 - p1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

bool simple_polygon(const std::vector<Vec2>& poly) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

// Total turning of +-2 pi with no turn against the orientation beyond a small angle.
bool convex_polygon(const std::vector<Vec2>& poly, double tol) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  double total = 0.0;
  std::vector<double> turns;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[(i + 1) % n] - poly[i];
    const Vec2 b = poly[(i + 2) % n] - poly[(i + 1) % n];
    if (a.norm() == 0.0 || b.norm() == 0.0) continue;
    const double turn = std::atan2(cross2(a, b), a.dot(b));
    turns.push_back(turn);
    total += turn;
  }
  if (std::abs(std::abs(total) - 2.0 * kPi) > 1e-6) return false;
  const double orient = total > 0 ? 1.0 : -1.0;
  for (double turn : turns) {
    if (orient * turn < -tol) return false;
  }
  return true;
}

bool segment_hits_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
  const double eps = 1e-12;
  const Vec3 dir = q - p;
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 h = dir.cross(e2);
  const double det = e1.dot(h);
  if (std::abs(det) < eps * e1.norm() * e2.norm() * dir.norm()) return false;
  const Vec3 s = p - a;
  const double u = s.dot(h) / det;
  if (u <= eps || u >= 1.0 - eps) return false;
  const Vec3 qv = s.cross(e1);
  const double v = dir.dot(qv) / det;
  if (v <= eps || u + v >= 1.0 - eps) return false;
  const double w = e2.dot(qv) / det;
  return w > eps && w < 1.0 - eps;
}

bool triangles_intersect(const std::array<Vec3, 3>& A, const std::array<Vec3, 3>& B) {
  for (int i = 0; i < 3; ++i) {
    if (segment_hits_triangle(A[i], A[(i + 1) % 3], B[0], B[1], B[2])) return true;
    if (segment_hits_triangle(B[i], B[(i + 1) % 3], A[0], A[1], A[2])) return true;
  }
  return false;
}

struct CellKey {
  long x, y, z;
  bool operator==(const CellKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return static_cast<std::size_t>(k.x * 73856093L ^ k.y * 19349663L ^ k.z * 83492791L);
  }
};

// Pairs of faces in `ids` (with horizontal lattice copies) that cross each other.
int count_intersections(const SurfaceMesh& mesh, const std::vector<int>& ids) {
  if (ids.empty()) return 0;
  double edge = 0.0;
  for (int f : ids) {
    const auto& t = mesh.faces[f];
    for (int e = 0; e < 3; ++e) edge = std::max(edge, (mesh.vertices[t[e]] - mesh.vertices[t[(e + 1) % 3]]).norm());
  }
  const double cell = std::max(edge, 1e-9);
  struct Item {
    std::array<Vec3, 3> p;
    int face;
    int copy;
  };
  std::vector<Item> items;
  const cplx beta = mesh.period_beta;
  for (int cx = -1; cx <= 1; ++cx) {
    for (int cy = -1; cy <= 1; ++cy) {
      const cplx shift = static_cast<double>(cx) + static_cast<double>(cy) * beta;
      const Vec3 d(shift.real(), shift.imag(), 0.0);
      const int copy = (cx + 1) * 3 + (cy + 1);
      for (int f : ids) {
        const auto& t = mesh.faces[f];
        items.push_back({{mesh.vertices[t[0]] + d, mesh.vertices[t[1]] + d, mesh.vertices[t[2]] + d}, f, copy});
      }
    }
  }
  std::unordered_map<CellKey, std::vector<int>, CellHash> grid;
  auto key = [cell](const Vec3& p) {
    return CellKey{static_cast<long>(std::floor(p[0] / cell)), static_cast<long>(std::floor(p[1] / cell)),
                   static_cast<long>(std::floor(p[2] / cell))};
  };
  auto for_cells = [&](const Item& it, auto&& fn) {
    Vec3 lo = it.p[0], hi = it.p[0];
    for (const auto& v : it.p) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    const CellKey a = key(lo), b = key(hi);
    for (long x = a.x; x <= b.x; ++x)
      for (long y = a.y; y <= b.y; ++y)
        for (long z = a.z; z <= b.z; ++z) fn(CellKey{x, y, z});
  };
  for (std::size_t i = 0; i < items.size(); ++i) {
    for_cells(items[i], [&](const CellKey& c) { grid[c].push_back(static_cast<int>(i)); });
  }
  const int center_copy = 4;
  std::vector<int> stamp(items.size(), -1);
  int hits = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Item& A = items[i];
    if (A.copy != center_copy) continue;
    for_cells(A, [&](const CellKey& c) {
      auto found = grid.find(c);
      if (found == grid.end()) return;
      for (int j : found->second) {
        if (stamp[j] == static_cast<int>(i)) continue;
        stamp[j] = static_cast<int>(i);
        const Item& B = items[j];
        if (B.copy == center_copy && B.face <= A.face) continue;
        bool touching = false;
        for (const auto& pa : A.p) {
          for (const auto& pb : B.p) touching = touching || (pa - pb).norm() < 1e-10;
        }
        if (touching) continue;
        if (triangles_intersect(A.p, B.p)) ++hits;
      }
    });
  }
  return hits;
}

}  // namespace

std::vector<std::vector<Eigen::Vector2d>> mesh_slice(const SurfaceMesh& mesh, double height) {
  // Intersection points live on mesh edges; a vertex exactly at the height counts as above.
  auto above = [&](int v) { return mesh.vertices[v][2] >= height; };
  auto point_on = [&](int a, int b) {
    const Vec3& pa = mesh.vertices[a];
    const Vec3& pb = mesh.vertices[b];
    const double s = (height - pa[2]) / (pb[2] - pa[2]);
    const Vec3 p = pa + s * (pb - pa);
    return Vec2(p[0], p[1]);
  };
  using EdgeKey = std::pair<int, int>;
  std::map<EdgeKey, std::vector<EdgeKey>> link;
  std::map<EdgeKey, Vec2> where;
  for (const auto& f : mesh.faces) {
    std::vector<EdgeKey> cut;
    for (int e = 0; e < 3; ++e) {
      const int a = f[e], b = f[(e + 1) % 3];
      if (above(a) != above(b)) {
        const EdgeKey k{std::min(a, b), std::max(a, b)};
        cut.push_back(k);
        if (!where.count(k)) where[k] = point_on(k.first, k.second);
      }
    }
    if (cut.size() == 2) {
      link[cut[0]].push_back(cut[1]);
      link[cut[1]].push_back(cut[0]);
    }
  }
  std::vector<std::vector<Eigen::Vector2d>> curves;
  std::map<EdgeKey, bool> visited;
  for (const auto& [start, nbrs] : link) {
    if (visited[start]) continue;
    // Walk from an open end when there is one.
    EdgeKey from = start;
    std::vector<EdgeKey> chain{start};
    visited[start] = true;
    EdgeKey prev{-1, -1};
    EdgeKey cur = start;
    bool closed = false;
    while (true) {
      EdgeKey next{-1, -1};
      for (const auto& w : link[cur]) {
        if (w == prev) continue;
        if (w == from && chain.size() > 2) {
          closed = true;
          break;
        }
        if (!visited[w]) {
          next = w;
          break;
        }
      }
      if (closed || next.first < 0) break;
      visited[next] = true;
      chain.push_back(next);
      prev = cur;
      cur = next;
    }
    // Edges meeting at a vertex on the plane all yield that vertex; keep one copy.
    std::vector<Eigen::Vector2d> poly;
    for (const auto& e : chain) {
      const Vec2 p = where[e];
      if (poly.empty() || (p - poly.back()).norm() > 1e-12) poly.push_back(p);
    }
    if (closed && poly.size() > 1 && (poly.front() - poly.back()).norm() <= 1e-12) poly.pop_back();
    if (closed) poly.push_back(poly.front());
    curves.push_back(std::move(poly));
  }
  return curves;
}

EmbeddednessReport embeddedness_diagnostics(const SurfaceMesh& mesh, const DiagnosticOptions& opts) {
  EmbeddednessReport rep;

  rep.min_layer_normal = 1.0;
  for (const auto& f : mesh.faces) {
    if (mesh.tags[f[0]].kind != VertexTag::Layer || mesh.tags[f[1]].kind != VertexTag::Layer ||
        mesh.tags[f[2]].kind != VertexTag::Layer) {
      continue;
    }
    const Vec3 n = (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
    if (n.norm() == 0.0) {
      rep.min_layer_normal = 0.0;
      continue;
    }
    rep.min_layer_normal = std::min(rep.min_layer_normal, std::abs(n[2]) / n.norm());
  }
  rep.graph_ok = rep.min_layer_normal > opts.graph_min;

  auto layer_of = [&](int k) -> const LayerSummary* {
    for (const auto& l : mesh.layers) {
      if (l.k == k) return &l;
    }
    return nullptr;
  };
  auto frame_height = [&](int k) {
    for (const auto& fr : mesh.frames) {
      if (fr.k == k) return fr.position[2];
    }
    return 0.0;
  };
  rep.slices_ok = true;
  for (const auto& ns : mesh.necks) {
    const LayerSummary* lo = layer_of(ns.k);
    const LayerSummary* hi = layer_of(ns.k + 1);
    if (!lo || !hi) continue;
    std::vector<double> heights;
    if (std::isnan(opts.slice_c)) {
      heights = {0.5 * (lo->max_height + ns.waist_height), ns.waist_height, 0.5 * (ns.waist_height + hi->min_height)};
    } else {
      heights = {frame_height(ns.k) + mesh.t * opts.slice_c, frame_height(ns.k + 1) - mesh.t * opts.slice_c};
    }
    for (double h : heights) {
      SliceResult r;
      r.k = ns.k;
      r.height = h;
      const auto curves = mesh_slice(mesh, h);
      r.curves = static_cast<int>(curves.size());
      if (curves.size() == 1 && curves[0].size() > 3 && curves[0].front() == curves[0].back()) {
        std::vector<Vec2> poly(curves[0].begin(), curves[0].end() - 1);
        r.simple = simple_polygon(poly);
        r.convex = convex_polygon(poly, 1e-2);
      }
      rep.slices_ok = rep.slices_ok && r.curves == 1 && r.simple && r.convex;
      rep.slices.push_back(r);
    }
  }

  // Layer slabs run between consecutive waists.
  std::vector<double> cuts;
  for (const auto& ns : mesh.necks) cuts.push_back(ns.waist_height);
  std::sort(cuts.begin(), cuts.end());
  const std::size_t slabs = cuts.size() + 1;
  std::vector<std::vector<int>> members(slabs);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    std::vector<std::size_t> touched;
    for (int v : mesh.faces[f]) {
      const double h = mesh.vertices[v][2];
      touched.push_back(static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), h) - cuts.begin()));
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (std::size_t s : touched) members[s].push_back(static_cast<int>(f));
  }
  rep.intersecting_pairs = 0;
  for (const auto& ids : members) rep.intersecting_pairs += count_intersections(mesh, ids);
  rep.intersections_ok = rep.intersecting_pairs == 0;
  return rep;
}

}  // namespace stacked
