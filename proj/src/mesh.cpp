#include "plateinv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace plateinv {

namespace {

double signed_area(const std::vector<Point2>& verts, const std::array<int, 4>& cell, int nv) {
  double s = 0.0;
  for (int i = 0; i < nv; ++i) {
    const Point2& p = verts[cell[i]];
    const Point2& q = verts[cell[(i + 1) % nv]];
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * s;
}

// Counterclockwise orientation with the smallest vertex id first. For
// rectangles the smallest id is the lower-left corner (vertex numbering is
// lexicographic), so corners come out as ll, lr, ur, ul.
void canonicalize_cell(std::array<int, 4>& cell, int nv, const std::vector<Point2>& verts) {
  if (signed_area(verts, cell, nv) < 0.0) {
    std::reverse(cell.begin(), cell.begin() + nv);
  }
  int best = 0;
  for (int i = 1; i < nv; ++i) {
    if (cell[i] < cell[best]) best = i;
  }
  std::array<int, 4> rotated{-1, -1, -1, -1};
  for (int i = 0; i < nv; ++i) rotated[i] = cell[(best + i) % nv];
  cell = rotated;
}

// Merge duplicate vertices, drop vertices no cell references, renumber
// everything deterministically, and build the edge table with boundary
// classification.
Mesh finalize(CellKind kind, std::vector<Point2> verts, std::vector<std::array<int, 4>> cells,
              std::vector<int> parent_of, std::shared_ptr<const Mesh> parent, int level) {
  const int nv_cell = kind == CellKind::Rectangle ? 4 : 3;

  std::map<std::pair<double, double>, int> seen;
  std::vector<int> merged(verts.size());
  std::vector<Point2> unique_verts;
  unique_verts.reserve(verts.size());
  for (size_t i = 0; i < verts.size(); ++i) {
    auto key = std::make_pair(verts[i].x, verts[i].y);
    auto [it, inserted] = seen.emplace(key, static_cast<int>(unique_verts.size()));
    if (inserted) unique_verts.push_back(verts[i]);
    merged[i] = it->second;
  }

  std::vector<char> used(unique_verts.size(), 0);
  for (const auto& cell : cells) {
    for (int i = 0; i < nv_cell; ++i) used[merged[cell[i]]] = 1;
  }
  std::vector<int> compact(unique_verts.size(), -1);
  std::vector<Point2> kept;
  kept.reserve(unique_verts.size());
  for (size_t u = 0; u < unique_verts.size(); ++u) {
    if (used[u]) {
      compact[u] = static_cast<int>(kept.size());
      kept.push_back(unique_verts[u]);
    }
  }
  unique_verts = std::move(kept);
  for (int& m : merged) m = compact[m];

  std::vector<int> order(unique_verts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Point2& p = unique_verts[a];
    const Point2& q = unique_verts[b];
    return p.x != q.x ? p.x < q.x : p.y < q.y;
  });
  std::vector<int> rank(unique_verts.size());
  for (size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);

  Mesh mesh;
  mesh.cell_kind = kind;
  mesh.level = level;
  mesh.parent = std::move(parent);
  mesh.vertices.resize(unique_verts.size());
  for (size_t i = 0; i < unique_verts.size(); ++i) mesh.vertices[rank[i]] = unique_verts[i];

  for (auto& cell : cells) {
    for (int i = 0; i < nv_cell; ++i) cell[i] = rank[merged[cell[i]]];
    canonicalize_cell(cell, nv_cell, mesh.vertices);
  }

  std::vector<int> cell_order(cells.size());
  std::iota(cell_order.begin(), cell_order.end(), 0);
  std::sort(cell_order.begin(), cell_order.end(),
            [&](int a, int b) { return cells[a] < cells[b]; });
  mesh.cells.resize(cells.size());
  mesh.parent_cell.assign(cells.size(), -1);
  for (size_t i = 0; i < cell_order.size(); ++i) {
    mesh.cells[i] = cells[cell_order[i]];
    if (!parent_of.empty()) mesh.parent_cell[i] = parent_of[cell_order[i]];
  }

  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& cell : mesh.cells) {
    for (int i = 0; i < nv_cell; ++i) {
      int a = 0, b = 0;
      if (kind == CellKind::Rectangle) {
        a = cell[i];
        b = cell[(i + 1) % 4];
      } else {
        a = cell[(i + 1) % 3];
        b = cell[(i + 2) % 3];
      }
      if (a > b) std::swap(a, b);
      edge_count[{a, b}] += 1;
    }
  }

  mesh.edges.reserve(edge_count.size());
  std::map<std::pair<int, int>, int> edge_id;
  for (const auto& [key, count] : edge_count) {
    Edge e;
    e.a = key.first;
    e.b = key.second;
    const Point2& pa = mesh.vertices[e.a];
    const Point2& pb = mesh.vertices[e.b];
    e.midpoint = {0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)};
    const double tx = pb.x - pa.x;
    const double ty = pb.y - pa.y;
    const double len = std::hypot(tx, ty);
    e.normal = {ty / len, -tx / len};
    e.boundary = count == 1;
    edge_id[key] = static_cast<int>(mesh.edges.size());
    mesh.edges.push_back(e);
  }

  mesh.cell_edges.assign(mesh.cells.size(), {-1, -1, -1, -1});
  for (size_t c = 0; c < mesh.cells.size(); ++c) {
    const auto& cell = mesh.cells[c];
    for (int i = 0; i < nv_cell; ++i) {
      int a = 0, b = 0;
      if (kind == CellKind::Rectangle) {
        a = cell[i];
        b = cell[(i + 1) % 4];
      } else {
        a = cell[(i + 1) % 3];
        b = cell[(i + 2) % 3];
      }
      if (a > b) std::swap(a, b);
      mesh.cell_edges[c][i] = edge_id.at({a, b});
    }
  }

  mesh.boundary_vertex.assign(mesh.vertices.size(), 0);
  for (const Edge& e : mesh.edges) {
    if (e.boundary) {
      mesh.boundary_vertex[e.a] = 1;
      mesh.boundary_vertex[e.b] = 1;
    }
  }
  return mesh;
}

void require_positive(int n, const char* op) {
  if (n < 1) throw std::invalid_argument(std::string(op) + ": n must be >= 1");
}

}  // namespace

Mesh unit_square_rect_mesh(int n) {
  require_positive(n, "unit_square_rect_mesh");
  std::vector<Point2> verts;
  verts.reserve(static_cast<size_t>(n + 1) * (n + 1));
  auto id = [n](int i, int j) { return i * (n + 1) + j; };
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      verts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    }
  }
  std::vector<std::array<int, 4>> cells;
  cells.reserve(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return finalize(CellKind::Rectangle, std::move(verts), std::move(cells), {}, nullptr, 0);
}

Mesh square_crisscross_mesh(int n) {
  require_positive(n, "square_crisscross_mesh");
  std::vector<Point2> verts;
  auto id = [n](int i, int j) { return i * (n + 1) + j; };
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      verts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    }
  }
  std::vector<std::array<int, 4>> cells;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int c = static_cast<int>(verts.size());
      verts.push_back({(i + 0.5) / n, (j + 0.5) / n});
      const int ll = id(i, j), lr = id(i + 1, j), ur = id(i + 1, j + 1), ul = id(i, j + 1);
      cells.push_back({ll, lr, c, -1});
      cells.push_back({lr, ur, c, -1});
      cells.push_back({ur, ul, c, -1});
      cells.push_back({ul, ll, c, -1});
    }
  }
  return finalize(CellKind::Triangle, std::move(verts), std::move(cells), {}, nullptr, 0);
}

Mesh lshape_mesh(CellKind kind, int n, LshapeTriLayout layout) {
  require_positive(n, "lshape_mesh");
  const int m = 2 * n;  // grid cells per side of the bounding square
  std::vector<Point2> verts;
  auto coord = [n](int i) { return static_cast<double>(i) / n - 1.0; };
  auto id = [m](int i, int j) { return i * (m + 1) + j; };
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j <= m; ++j) verts.push_back({coord(i), coord(j)});
  }
  std::vector<std::array<int, 4>> cells;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double cx = 0.5 * (coord(i) + coord(i + 1));
      const double cy = 0.5 * (coord(j) + coord(j + 1));
      if (cx > 0.0 && cy < 0.0) continue;  // removed quadrant [0,1)x(-1,0]
      const int ll = id(i, j), lr = id(i + 1, j), ur = id(i + 1, j + 1), ul = id(i, j + 1);
      if (kind == CellKind::Rectangle) {
        cells.push_back({ll, lr, ur, ul});
      } else if (layout == LshapeTriLayout::QuadrantDiagonal) {
        if (cx * cy > 0.0) {  // quadrants 1 and 3: diagonal of slope +1
          cells.push_back({ll, lr, ur, -1});
          cells.push_back({ll, ur, ul, -1});
        } else {  // quadrant 2: diagonal of slope -1
          cells.push_back({ll, lr, ul, -1});
          cells.push_back({lr, ur, ul, -1});
        }
      } else {
        const int c = static_cast<int>(verts.size());
        verts.push_back({cx, cy});
        cells.push_back({ll, lr, c, -1});
        cells.push_back({lr, ur, c, -1});
        cells.push_back({ur, ul, c, -1});
        cells.push_back({ul, ll, c, -1});
      }
    }
  }
  return finalize(kind, std::move(verts), std::move(cells), {}, nullptr, 0);
}

Mesh red_refine(const Mesh& mesh) {
  const int nv_cell = mesh.vertices_per_cell();
  std::vector<Point2> verts = mesh.vertices;
  auto mid = [](const Point2& a, const Point2& b) {
    return Point2{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
  };
  std::vector<std::array<int, 4>> cells;
  std::vector<int> parent_of;
  cells.reserve(mesh.cells.size() * 4);
  parent_of.reserve(mesh.cells.size() * 4);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& cell = mesh.cells[c];
    if (mesh.cell_kind == CellKind::Rectangle) {
      const int base = static_cast<int>(verts.size());
      verts.push_back(mid(verts[cell[0]], verts[cell[1]]));  // bottom
      verts.push_back(mid(verts[cell[1]], verts[cell[2]]));  // right
      verts.push_back(mid(verts[cell[2]], verts[cell[3]]));  // top
      verts.push_back(mid(verts[cell[3]], verts[cell[0]]));  // left
      verts.push_back(mid(verts[cell[0]], verts[cell[2]]));  // center
      const int mb = base, mr = base + 1, mt = base + 2, ml = base + 3, cc = base + 4;
      cells.push_back({cell[0], mb, cc, ml});
      cells.push_back({mb, cell[1], mr, cc});
      cells.push_back({cc, mr, cell[2], mt});
      cells.push_back({ml, cc, mt, cell[3]});
    } else {
      const int base = static_cast<int>(verts.size());
      verts.push_back(mid(verts[cell[0]], verts[cell[1]]));
      verts.push_back(mid(verts[cell[1]], verts[cell[2]]));
      verts.push_back(mid(verts[cell[2]], verts[cell[0]]));
      const int m01 = base, m12 = base + 1, m20 = base + 2;
      cells.push_back({cell[0], m01, m20, -1});
      cells.push_back({cell[1], m12, m01, -1});
      cells.push_back({cell[2], m20, m12, -1});
      cells.push_back({m01, m12, m20, -1});
    }
    for (int k = 0; k < 4; ++k) parent_of.push_back(c);
  }
  (void)nv_cell;
  return finalize(mesh.cell_kind, std::move(verts), std::move(cells), std::move(parent_of),
                  std::make_shared<const Mesh>(mesh), mesh.level + 1);
}

double mesh_size(const Mesh& mesh) {
  if (mesh.cells.empty()) throw std::invalid_argument("mesh_size: empty mesh");
  const int nv_cell = mesh.vertices_per_cell();
  double h = 0.0;
  for (const auto& cell : mesh.cells) {
    for (int i = 0; i < nv_cell; ++i) {
      for (int j = i + 1; j < nv_cell; ++j) {
        const Point2& p = mesh.vertices[cell[i]];
        const Point2& q = mesh.vertices[cell[j]];
        h = std::max(h, std::hypot(p.x - q.x, p.y - q.y));
      }
    }
  }
  return h;
}

double cell_area(const Mesh& mesh, int cell) {
  return signed_area(mesh.vertices, mesh.cells[cell], mesh.vertices_per_cell());
}

double domain_area(const Mesh& mesh) {
  double a = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) a += cell_area(mesh, c);
  return a;
}

void write_mesh_text(const Mesh& mesh, std::ostream& out) {
  const int nv_cell = mesh.vertices_per_cell();
  out << (mesh.cell_kind == CellKind::Rectangle ? "rect" : "tri") << ' ' << mesh.n_vertices()
      << ' ' << mesh.n_cells() << '\n';
  char buf[64];
  for (const Point2& p : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g", p.x, p.y);
    out << buf << '\n';
  }
  for (const auto& cell : mesh.cells) {
    for (int i = 0; i < nv_cell; ++i) out << cell[i] << (i + 1 < nv_cell ? ' ' : '\n');
  }
}

}  // namespace plateinv
