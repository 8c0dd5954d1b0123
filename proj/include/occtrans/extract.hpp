#pragma once

#include <array>
#include <string>
#include <vector>

#include "occtrans/checkpoint.hpp"
#include "occtrans/rng.hpp"

namespace occtrans {

// Field sample (x,y[,z]) sits at ((x+0.5)/W, (y+0.5)/H [, (z+0.5)/D]), matching
// the training-point convention. With pad=true the marchers add one virtual
// below-iso sample layer pinned to the domain boundary (coordinate 0 or 1), so
// shapes touching the border close without moving any interior geometry.

struct Polyline {
  std::vector<std::array<double, 2>> pts;  // closed loops do not repeat the first point
  bool closed = false;
};

struct ContourSet {
  std::vector<Polyline> lines;
  double total_length() const;
};

struct TriMesh {
  std::vector<std::array<double, 3>> verts;
  std::vector<std::array<int, 3>> tris;
  double area() const;
  double signed_volume() const;  // divergence theorem; positive when wound outward
};

struct PointSet {
  int dim = 0;
  std::vector<double> coords;  // count*dim, x first
  std::int64_t count() const {
    return dim == 0 ? 0 : static_cast<std::int64_t>(coords.size()) / dim;
  }
};

inline constexpr std::int64_t kDefaultSurfacePoints = 2048;

// Dense decoder evaluation at all cell centers of a resolution^dim grid.
// Chunked with a fixed order, so results are bit-identical for any chunk size;
// the transient memory budget comes from OCCTRANS_EVAL_MEM_MB (default 1024).
Array<double> evaluate_field(const NetSpec& dec, const std::vector<Array<double>>& dec_params,
                             const Array<double>& latent, int resolution, bool regular_code);
Array<double> evaluate_field(const Checkpoint& ae, const Array<double>& latent, int resolution);

// 16-case marching squares, linear edge interpolation, saddles resolved by the
// cell-center average. Contours keep the above-iso side on their left.
ContourSet marching_squares(const Array<double>& field, double iso = 0.5, bool pad = false);

// Cell polygons are traced across the six faces with the face-center-average
// rule deciding ambiguous faces, then fanned into triangles. Shared faces see
// the same decision from both sides, so adjacent cells cannot disagree and the
// mesh stays crack-free. Winding is outward.
TriMesh marching_cubes(const Array<double>& field, double iso = 0.5, bool pad = false);

// area-weighted triangle pick, uniform barycentric placement
PointSet sample_surface_points(const TriMesh& mesh, std::int64_t count, Rng rng);

// length-weighted segment pick
PointSet sample_contour_points(const ContourSet& contours, std::int64_t count, Rng rng);

void save_obj(const TriMesh& mesh, const std::string& path);
void save_xyz(const PointSet& pts, const std::string& path);
void save_svg(const ContourSet& contours, const std::string& path);

}  // namespace occtrans
