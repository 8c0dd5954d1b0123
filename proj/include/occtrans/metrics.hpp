#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "occtrans/extract.hpp"
#include "occtrans/grids.hpp"

namespace occtrans {

// fraction of disagreeing cells; cells are {0,1} so this is the mean squared error
double mse(const OccupancyGrid& a, const OccupancyGrid& b);

// intersection over union; two empty grids count as identical (1)
double iou(const OccupancyGrid& a, const OccupancyGrid& b);

// mean over `from` of the distance to the nearest point of `to`; asymmetric.
// Unsquared Euclidean by default, squared behind the flag.
double one_sided_chamfer(const PointSet& from, const PointSet& to, bool squared = false);

// best gallery index under "iou" (argmax) or "mse" (argmin); ties keep the
// lowest index
std::size_t retrieve_nearest(const OccupancyGrid& query,
                             const std::vector<OccupancyGrid>& gallery,
                             const std::string& metric);

struct ShapeRecord {
  std::string id;         // filename
  std::string direction;  // "1to2", "2to1", or "all" when the name carries no tag
  std::string metric;
  double value = 0;
};

struct EvalReport {
  std::vector<ShapeRecord> records;
  // "<direction>/<metric>" means over that direction's records, plus
  // "both/<metric>" = mean of the directional means (Table-style bidirectional)
  std::map<std::string, double> aggregates;
  std::vector<std::string> unmatched;  // files lacking a partner
  std::vector<std::string> issues;     // pairs that could not be evaluated
};

// Pairs same-named .pgm/.rgrid files from the two directories and computes the
// requested metrics ("mse", "iou", "chamfer"). Chamfer extracts padded
// contours/surfaces from both grids and samples kDefaultSurfacePoints points
// with a per-shape deterministic stream, measuring output -> target. Unmatched
// or failing pairs are listed and the run continues.
EvalReport evaluate_translation_run(const std::string& outputs_dir,
                                    const std::string& targets_dir,
                                    const std::vector<std::string>& metrics);

void save_report_csv(const EvalReport& rep, const std::string& path);
nlohmann::json report_json(const EvalReport& rep);

// 2D tiles left to right, top to bottom, white gutters; blank slots stay white
void save_contact_sheet(const std::vector<OccupancyGrid>& tiles, int per_row,
                        const std::string& path);

}  // namespace occtrans
