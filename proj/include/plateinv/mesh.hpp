#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <vector>

namespace plateinv {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

enum class CellKind { Rectangle, Triangle };

enum class Domain { Square, LShape };

// Undirected mesh edge. Endpoints satisfy a < b (global vertex ids); the unit
// normal is the direction a->b rotated clockwise by 90 degrees, one fixed
// orientation per edge shared by all incident cells.
struct Edge {
  int a = -1;
  int b = -1;
  Point2 midpoint;
  Point2 normal;
  bool boundary = false;
};

// Conforming mesh of axis-aligned rectangles or triangles. Numbering is
// deterministic: vertices lexicographic by (x, y), edges lexicographic by
// endpoint pair, cells by canonical vertex tuple. Cells are counterclockwise;
// rectangle cells start at their lower-left corner.
struct Mesh {
  CellKind cell_kind = CellKind::Rectangle;
  std::vector<Point2> vertices;
  std::vector<std::array<int, 4>> cells;       // triangles leave [3] = -1
  std::vector<std::array<int, 4>> cell_edges;  // rect: side i = (v_i, v_{i+1}); tri: edge i opposite vertex i
  std::vector<Edge> edges;
  std::vector<char> boundary_vertex;
  std::vector<int> parent_cell;  // index into parent->cells; -1 on root meshes
  std::shared_ptr<const Mesh> parent;
  int level = 0;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  int vertices_per_cell() const { return cell_kind == CellKind::Rectangle ? 4 : 3; }
};

// n x n axis-aligned rectangles covering the unit square.
Mesh unit_square_rect_mesh(int n);

// n x n grid of the unit square with every cell split into 4 triangles by its
// two diagonals (one center vertex per cell).
Mesh square_crisscross_mesh(int n);

// Triangulation layout for the L-shaped domain: two triangles per grid cell
// split along the diagonal parallel to the quadrant diagonal through the
// reentrant corner, or four per cell in criss-cross fashion.
enum class LshapeTriLayout { QuadrantDiagonal, CrissCross };

// L-shaped domain (-1,1)^2 minus [0,1)x(-1,0], meshed on a grid of spacing
// 1/n with rectangle or triangle cells.
Mesh lshape_mesh(CellKind kind, int n,
                 LshapeTriLayout layout = LshapeTriLayout::QuadrantDiagonal);

// Uniform quadrisection of every cell via edge midpoints. The result stores a
// snapshot of the input as its parent together with per-cell parent indices.
Mesh red_refine(const Mesh& mesh);

// Maximum cell diameter.
double mesh_size(const Mesh& mesh);

double cell_area(const Mesh& mesh, int cell);
double domain_area(const Mesh& mesh);

// Plain-text export: header "rect|tri nv nc", vertex lines "x y", then cell
// lines of 0-based vertex indices.
void write_mesh_text(const Mesh& mesh, std::ostream& out);

}  // namespace plateinv
