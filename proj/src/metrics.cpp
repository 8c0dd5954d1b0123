#include "occtrans/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

namespace occtrans {

namespace fs = std::filesystem;

namespace {

void check_pair(const OccupancyGrid& a, const OccupancyGrid& b, const char* who) {
  a.validate();
  b.validate();
  require(a.dims == b.dims, who, ": grid extents differ, ", shape_str(a.dims), " vs ",
          shape_str(b.dims));
}

}  // namespace

double mse(const OccupancyGrid& a, const OccupancyGrid& b) {
  check_pair(a, b, "mse");
  std::int64_t diff = 0;
  for (size_t i = 0; i < a.cells.size(); ++i) diff += (a.cells[i] != 0) != (b.cells[i] != 0);
  return static_cast<double>(diff) / static_cast<double>(a.cells.size());
}

double iou(const OccupancyGrid& a, const OccupancyGrid& b) {
  check_pair(a, b, "iou");
  std::int64_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.cells.size(); ++i) {
    const bool x = a.cells[i] != 0, y = b.cells[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double one_sided_chamfer(const PointSet& from, const PointSet& to, bool squared) {
  require(from.count() > 0 && to.count() > 0, "one_sided_chamfer: empty point set");
  require(from.dim == to.dim, "one_sided_chamfer: dimension mismatch, ", from.dim, " vs ",
          to.dim);
  const int d = from.dim;
  double acc = 0;
  for (std::int64_t i = 0; i < from.count(); ++i) {
    const double* p = from.coords.data() + i * d;
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < to.count(); ++j) {
      const double* q = to.coords.data() + j * d;
      double s = 0;
      for (int c = 0; c < d; ++c) s += (p[c] - q[c]) * (p[c] - q[c]);
      best = std::min(best, s);
    }
    acc += squared ? best : std::sqrt(best);
  }
  return acc / static_cast<double>(from.count());
}

std::size_t retrieve_nearest(const OccupancyGrid& query,
                             const std::vector<OccupancyGrid>& gallery,
                             const std::string& metric) {
  require(!gallery.empty(), "retrieve_nearest: empty gallery");
  require(metric == "iou" || metric == "mse", "retrieve_nearest: unknown metric '", metric,
          "' (want iou or mse)");
  const bool maximize = metric == "iou";
  std::size_t best = 0;
  double best_score = maximize ? iou(query, gallery[0]) : mse(query, gallery[0]);
  for (std::size_t i = 1; i < gallery.size(); ++i) {
    const double s = maximize ? iou(query, gallery[i]) : mse(query, gallery[i]);
    if (maximize ? s > best_score : s < best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

namespace {

Array<double> grid_field(const OccupancyGrid& g) {
  std::vector<double> v(g.cells.begin(), g.cells.end());
  return Array<double>(g.dims, std::move(v));
}

PointSet boundary_points(const OccupancyGrid& g, Rng rng) {
  if (g.rank() == 2) {
    const ContourSet cs = marching_squares(grid_field(g), 0.5, true);
    require(!cs.lines.empty(), "shape has no geometry");
    return sample_contour_points(cs, kDefaultSurfacePoints, rng);
  }
  const TriMesh m = marching_cubes(grid_field(g), 0.5, true);
  require(!m.tris.empty(), "shape has no geometry");
  return sample_surface_points(m, kDefaultSurfacePoints, rng);
}

std::string direction_of(const std::string& name) {
  const bool d12 = name.find("1to2") != std::string::npos;
  const bool d21 = name.find("2to1") != std::string::npos;
  if (d12 && !d21) return "1to2";
  if (d21 && !d12) return "2to1";
  return "all";
}

bool known_grid_file(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".pgm" || ext == ".rgrid" || ext == ".rg";
}

OccupancyGrid load_grid_file(const fs::path& p) {
  return p.extension() == ".pgm" ? load_pgm(p.string()) : load_rawgrid(p.string());
}

std::vector<std::string> grid_files(const std::string& dir) {
  require(fs::is_directory(dir), "not a directory: ", dir);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && known_grid_file(e.path()))
      names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

EvalReport evaluate_translation_run(const std::string& outputs_dir,
                                    const std::string& targets_dir,
                                    const std::vector<std::string>& metrics) {
  require(!metrics.empty(), "no metrics requested");
  for (const std::string& m : metrics)
    require(m == "mse" || m == "iou" || m == "chamfer", "unknown metric '", m,
            "' (want mse, iou, chamfer)");
  const std::vector<std::string> outs = grid_files(outputs_dir);
  const std::vector<std::string> tgts = grid_files(targets_dir);

  EvalReport rep;
  std::vector<std::string> matched;
  for (const std::string& n : outs) {
    if (std::binary_search(tgts.begin(), tgts.end(), n))
      matched.push_back(n);
    else
      rep.unmatched.push_back("outputs/" + n);
  }
  for (const std::string& n : tgts)
    if (!std::binary_search(outs.begin(), outs.end(), n)) rep.unmatched.push_back("targets/" + n);

  Rng rng(1);
  for (const std::string& n : matched) {
    try {
      const OccupancyGrid out = load_grid_file(fs::path(outputs_dir) / n);
      const OccupancyGrid tgt = load_grid_file(fs::path(targets_dir) / n);
      const std::string dir = direction_of(n);
      for (const std::string& m : metrics) {
        double v = 0;
        if (m == "mse") {
          v = mse(out, tgt);
        } else if (m == "iou") {
          v = iou(out, tgt);
        } else {
          // same stream for both sides: identical grids give chamfer 0 exactly
          v = one_sided_chamfer(boundary_points(out, rng.substream("eval/pts/" + n)),
                                boundary_points(tgt, rng.substream("eval/pts/" + n)));
        }
        rep.records.push_back({n, dir, m, v});
      }
    } catch (const Error& e) {
      rep.issues.push_back(n + ": " + e.what());
    }
  }

  for (const std::string& m : metrics) {
    double dir_sum = 0;
    int dir_count = 0;
    for (const std::string& d : {"1to2", "2to1", "all"}) {
      double sum = 0;
      int count = 0;
      for (const ShapeRecord& r : rep.records)
        if (r.metric == m && r.direction == d) {
          sum += r.value;
          ++count;
        }
      if (count == 0) continue;
      rep.aggregates[d + "/" + m] = sum / count;
      dir_sum += sum / count;
      ++dir_count;
    }
    if (dir_count > 0) rep.aggregates["both/" + m] = dir_sum / dir_count;
  }
  return rep;
}

void save_report_csv(const EvalReport& rep, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write ", path);
  out << "id,direction,metric,value\n";
  char num[40];
  for (const ShapeRecord& r : rep.records) {
    std::snprintf(num, sizeof num, "%.17g", r.value);
    out << r.id << ',' << r.direction << ',' << r.metric << ',' << num << '\n';
  }
  if (!out) fail("short write to ", path);
}

nlohmann::json report_json(const EvalReport& rep) {
  nlohmann::json j;
  j["count"] = rep.records.size();
  j["aggregates"] = nlohmann::json::object();
  for (const auto& [k, v] : rep.aggregates) j["aggregates"][k] = v;
  j["unmatched"] = rep.unmatched;
  j["issues"] = rep.issues;
  return j;
}

void save_contact_sheet(const std::vector<OccupancyGrid>& tiles, int per_row,
                        const std::string& path) {
  require(!tiles.empty(), "contact sheet needs at least one tile");
  require(per_row >= 1, "per_row must be positive");
  for (const OccupancyGrid& t : tiles) {
    t.validate();
    require(t.rank() == 2, "contact sheets are 2D only");
    require(t.dims == tiles[0].dims, "contact sheet tiles must share extents");
  }
  const int th = tiles[0].dims[0], tw = tiles[0].dims[1];
  const int gutter = 2;
  const int cols = per_row;
  const int rows = (static_cast<int>(tiles.size()) + cols - 1) / cols;
  const int W = cols * tw + (cols - 1) * gutter;
  const int H = rows * th + (rows - 1) * gutter;
  std::vector<std::uint8_t> px(static_cast<size_t>(W) * H, 255);
  for (size_t i = 0; i < tiles.size(); ++i) {
    const int r = static_cast<int>(i) / cols, c = static_cast<int>(i) % cols;
    const int y0 = r * (th + gutter), x0 = c * (tw + gutter);
    for (int y = 0; y < th; ++y)
      for (int x = 0; x < tw; ++x)
        px[static_cast<size_t>(y0 + y) * W + (x0 + x)] =
            tiles[i].cells[static_cast<size_t>(y) * tw + x] ? 0 : 255;
  }
  save_pgm_gray(px, H, W, path);
}

}  // namespace occtrans
