#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "occtrans/grids.hpp"
#include "occtrans/rng.hpp"

namespace occtrans {

struct DomainShape {
  std::string name;
  OccupancyGrid grid;
};

// Two unpaired shape sets plus split bookkeeping. Nothing here ever matches a
// domain1 shape with a domain2 shape; the sets are independent.
struct DomainPairSet {
  std::string recipe;
  std::vector<DomainShape> domain1, domain2;
  std::vector<std::string> train1, test1;  // shape names per split
  std::vector<std::string> train2, test2;
  nlohmann::json manifest;
};

struct RecipeParams {
  int count = 16;   // shapes per domain
  int extent = 0;   // 0 = recipe default (64 for 2D recipes, 32 for 3D)
  std::uint64_t seed = 1;
  double train_fraction = 0.75;
};

std::vector<std::string> known_recipes();
// (domain1 label, domain2 label), e.g. ("thick", "thin")
std::pair<std::string, std::string> recipe_domains(const std::string& recipe);
bool recipe_is_3d(const std::string& recipe);

DomainPairSet generate_synthetic_pair(const std::string& recipe,
                                      const RecipeParams& params);
DomainPairSet regenerate_from_manifest(const nlohmann::json& manifest);

// Classifies via the recipe's raster measure; returns a domain label from
// recipe_domains or "uncertain" for shapes in the ambiguous band (and for
// empty grids).
std::string domain_oracle(const OccupancyGrid& grid, const std::string& recipe);

// Raster measures backing the oracle. Perimeter is the contour length under
// the edge-midpoint rule (straight unit edges, sqrt(2)/2 corner cuts), which
// stays close to geometric length at all orientations.
double raster_perimeter(const OccupancyGrid& grid);            // 2D
double stroke_width_measure(const OccupancyGrid& grid);        // 2*A/P
double circularity_measure(const OccupancyGrid& grid);         // 4*pi*A/P^2
int component_count(const OccupancyGrid& grid);                // 8/26-conn
double height_ratio_measure(const OccupancyGrid& grid);        // 3D bbox z/xy
double side_profile_ratio_measure(const OccupancyGrid& grid);  // 3D x-profile

// Loaders take a directory plus a newline-separated list of file names.
// Shapes come back name-sorted (bytewise) and must share one extent.
std::vector<DomainShape> load_image_domain(const std::string& dir,
                                           const std::string& split_file);
std::vector<DomainShape> load_voxel_domain(const std::string& dir,
                                           const std::string& split_file);

// Layout: dir/domain1/<name>.pgm|.rg, dir/domain2/..., dir/splits/
// domain{1,2}_{train,test}.txt, dir/manifest.json.
void write_domain_pair(const DomainPairSet& set, const std::string& dir);

}  // namespace occtrans
