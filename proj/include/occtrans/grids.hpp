#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occtrans/core.hpp"
#include "occtrans/rng.hpp"

namespace occtrans {

// Binary occupancy raster. dims is {h,w} in 2D and {d,h,w} in 3D; cells are
// row-major with x fastest. Normalized point (x,y[,z]) falls in the cell whose
// center is ((ix+0.5)/w, (iy+0.5)/h, ...).
struct OccupancyGrid {
  Shape dims;
  std::vector<std::uint8_t> cells;  // 0 or 1

  int rank() const { return static_cast<int>(dims.size()); }
  std::int64_t cell_count() const { return numel(dims); }
  void validate() const;
  bool operator==(const OccupancyGrid&) const = default;
};

// Struct-of-arrays batch of weighted query points for one shape.
struct TrainingPoints {
  int dim = 2;
  std::vector<double> coords;         // P*dim, (x,y[,z]) per point
  std::vector<std::uint8_t> targets;  // 0/1
  std::vector<std::uint8_t> weights;  // 1 or 2
  std::int64_t count() const { return static_cast<std::int64_t>(targets.size()); }
};

// cell marked iff any 8/26-neighbor differs in occupancy
std::vector<std::uint8_t> boundary_mask(const OccupancyGrid& grid);

// each output cell = max over its factor^d block; factor must divide extents
OccupancyGrid downsample_max(const OccupancyGrid& grid, int factor);

// Samples at cell centers of the grid downsampled to `resolution` per axis:
// ~half the points from boundary-adjacent cells, the rest uniform over the
// remaining cells. Cells are drawn without replacement per half unless count
// exceeds what is available (then with replacement, logged once).
TrainingPoints sample_training_points(const OccupancyGrid& grid, int resolution,
                                      std::int64_t count, Rng rng);

// PGM P5, maxval 255; dark (<128) = inside. 2D only.
OccupancyGrid load_pgm(const std::string& path);
void save_pgm(const OccupancyGrid& grid, const std::string& path);

// RAWGRID: magic "RGRD", version byte 1, rank byte, little-endian u32 extents
// in storage order, then row-major cells packed LSB-first, padded to a byte.
OccupancyGrid load_rawgrid(const std::string& path);
void save_rawgrid(const OccupancyGrid& grid, const std::string& path);

// grayscale PGM of arbitrary bytes (contact sheets, debug renders)
void save_pgm_gray(const std::vector<std::uint8_t>& pixels, int h, int w,
                   const std::string& path);

}  // namespace occtrans
