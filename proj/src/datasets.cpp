#include "occtrans/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace occtrans {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// raster measures

static std::int64_t raster_area(const OccupancyGrid& g) {
  std::int64_t a = 0;
  for (auto c : g.cells) a += c;
  return a;
}

double raster_perimeter(const OccupancyGrid& g) {
  require(g.rank() == 2, "raster_perimeter: want a 2D grid, got rank ",
          g.rank());
  const int h = g.dims[0], w = g.dims[1];
  auto occ = [&](int x, int y) -> int {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0;
    return g.cells[static_cast<size_t>(y) * w + x];
  };
  const double corner = std::sqrt(0.5);
  double p = 0;
  // walk dual cells over a one-cell outside pad; the mask picks one of the
  // standard two-bit-per-axis contour cases
  for (int y = -1; y < h; ++y) {
    for (int x = -1; x < w; ++x) {
      int m = occ(x, y) | occ(x + 1, y) << 1 | occ(x, y + 1) << 2 |
              occ(x + 1, y + 1) << 3;
      switch (m) {
        case 0: case 15: break;
        case 1: case 2: case 4: case 8:
        case 7: case 11: case 13: case 14: p += corner; break;
        case 3: case 5: case 10: case 12: p += 1.0; break;
        case 6: case 9: p += 2 * corner; break;
      }
    }
  }
  return p;
}

double stroke_width_measure(const OccupancyGrid& g) {
  std::int64_t a = raster_area(g);
  if (a == 0) return 0.0;
  return 2.0 * static_cast<double>(a) / raster_perimeter(g);
}

double circularity_measure(const OccupancyGrid& g) {
  std::int64_t a = raster_area(g);
  if (a == 0) return 0.0;
  double p = raster_perimeter(g);
  return 4.0 * 3.14159265358979323846 * static_cast<double>(a) / (p * p);
}

int component_count(const OccupancyGrid& g) {
  require(g.rank() == 2 || g.rank() == 3, "component_count: rank 2 or 3 only");
  const bool three = g.rank() == 3;
  const int d = three ? g.dims[0] : 1;
  const int h = g.dims[three ? 1 : 0], w = g.dims[three ? 2 : 1];
  auto idx = [&](int x, int y, int z) {
    return (static_cast<size_t>(z) * h + y) * w + x;
  };
  std::vector<std::uint8_t> seen(g.cells.size(), 0);
  std::vector<std::array<int, 3>> stack;
  int count = 0;
  for (int z = 0; z < d; ++z)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!g.cells[idx(x, y, z)] || seen[idx(x, y, z)]) continue;
        ++count;
        seen[idx(x, y, z)] = 1;
        stack.push_back({x, y, z});
        while (!stack.empty()) {
          auto [cx, cy, cz] = stack.back();
          stack.pop_back();
          for (int dz = three ? -1 : 0; dz <= (three ? 1 : 0); ++dz)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                int nx = cx + dx, ny = cy + dy, nz = cz + dz;
                if (nx < 0 || ny < 0 || nz < 0 || nx >= w || ny >= h ||
                    nz >= d)
                  continue;
                size_t ni = idx(nx, ny, nz);
                if (g.cells[ni] && !seen[ni]) {
                  seen[ni] = 1;
                  stack.push_back({nx, ny, nz});
                }
              }
        }
      }
  return count;
}

struct Bbox3 {
  bool empty = true;
  int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};  // x,y,z
};

static Bbox3 bbox3(const OccupancyGrid& g) {
  const int d = g.dims[0], h = g.dims[1], w = g.dims[2];
  Bbox3 b;
  for (int z = 0; z < d; ++z)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!g.cells[(static_cast<size_t>(z) * h + y) * w + x]) continue;
        if (b.empty) {
          b.empty = false;
          b.lo[0] = b.hi[0] = x;
          b.lo[1] = b.hi[1] = y;
          b.lo[2] = b.hi[2] = z;
        } else {
          b.lo[0] = std::min(b.lo[0], x); b.hi[0] = std::max(b.hi[0], x);
          b.lo[1] = std::min(b.lo[1], y); b.hi[1] = std::max(b.hi[1], y);
          b.lo[2] = std::min(b.lo[2], z); b.hi[2] = std::max(b.hi[2], z);
        }
      }
  return b;
}

double height_ratio_measure(const OccupancyGrid& g) {
  require(g.rank() == 3, "height_ratio_measure: want a 3D grid");
  Bbox3 b = bbox3(g);
  if (b.empty) return 0.0;
  double ze = b.hi[2] - b.lo[2] + 1;
  double xy = std::max(b.hi[0] - b.lo[0], b.hi[1] - b.lo[1]) + 1;
  return ze / xy;
}

double side_profile_ratio_measure(const OccupancyGrid& g) {
  require(g.rank() == 3, "side_profile_ratio_measure: want a 3D grid");
  const int d = g.dims[0], h = g.dims[1], w = g.dims[2];
  std::vector<std::int64_t> col(w, 0);
  for (int z = 0; z < d; ++z)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        col[x] += g.cells[(static_cast<size_t>(z) * h + y) * w + x];
  int lo = 0, hi = w - 1;
  while (lo < w && col[lo] == 0) ++lo;
  while (hi >= 0 && col[hi] == 0) --hi;
  if (lo > hi) return 0.0;
  std::vector<std::int64_t> span(col.begin() + lo, col.begin() + hi + 1);
  auto mid = span.begin() + span.size() / 2;
  std::nth_element(span.begin(), mid, span.end());
  double median = static_cast<double>(*mid);
  return static_cast<double>(std::min(col[lo], col[hi])) / median;
}

// ---------------------------------------------------------------------------
// recipes

static const char* kRecipes[] = {"thick_thin", "solid_dotted", "squares_disks",
                                 "tall_short", "slab_sides"};

std::vector<std::string> known_recipes() {
  return {std::begin(kRecipes), std::end(kRecipes)};
}

static std::string recipes_joined() {
  std::string s;
  for (const char* r : kRecipes) {
    if (!s.empty()) s += ", ";
    s += r;
  }
  return s;
}

std::pair<std::string, std::string> recipe_domains(const std::string& recipe) {
  if (recipe == "thick_thin") return {"thick", "thin"};
  if (recipe == "solid_dotted") return {"solid", "dotted"};
  if (recipe == "squares_disks") return {"square", "disk"};
  if (recipe == "tall_short") return {"tall", "short"};
  if (recipe == "slab_sides") return {"slabbed", "plain"};
  fail("unknown recipe '", recipe, "'; known recipes: ", recipes_joined());
}

bool recipe_is_3d(const std::string& recipe) {
  recipe_domains(recipe);
  return recipe == "tall_short" || recipe == "slab_sides";
}

std::string domain_oracle(const OccupancyGrid& g, const std::string& recipe) {
  auto doms = recipe_domains(recipe);
  if (raster_area(g) == 0) return "uncertain";
  if (recipe == "thick_thin") {
    double sw = stroke_width_measure(g);
    if (sw >= 5.5) return doms.first;
    if (sw <= 4.5) return doms.second;
  } else if (recipe == "solid_dotted") {
    int n = component_count(g);
    if (n <= 2) return doms.first;
    if (n >= 5) return doms.second;
  } else if (recipe == "squares_disks") {
    double c = circularity_measure(g);
    if (c >= 0.85) return doms.second;
    if (c <= 0.80) return doms.first;
  } else if (recipe == "tall_short") {
    double r = height_ratio_measure(g);
    if (r >= 0.95) return doms.first;
    if (r <= 0.60) return doms.second;
  } else {  // slab_sides
    double r = side_profile_ratio_measure(g);
    if (r <= 0.45) return doms.first;
    if (r >= 0.70) return doms.second;
  }
  return "uncertain";
}

// ---------------------------------------------------------------------------
// 2D shape painters

namespace {

struct Vec2 {
  double x, y;
};

double seg_dist(Vec2 p, Vec2 a, Vec2 b) {
  double ux = b.x - a.x, uy = b.y - a.y;
  double len2 = ux * ux + uy * uy;
  double t = 0;
  if (len2 > 0) {
    t = ((p.x - a.x) * ux + (p.y - a.y) * uy) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  double dx = p.x - (a.x + t * ux), dy = p.y - (a.y + t * uy);
  return std::sqrt(dx * dx + dy * dy);
}

// random polyline with reflected headings so it stays inside the margin box
std::vector<Vec2> random_chain(Rng& rng, int extent, double margin, int nseg) {
  double lo = margin, hi = extent - margin;
  Vec2 p{rng.uniform(extent * 0.3, extent * 0.7),
         rng.uniform(extent * 0.3, extent * 0.7)};
  double theta = rng.uniform(0.0, 6.28318530717958647692);
  std::vector<Vec2> pts{p};
  for (int s = 0; s < nseg; ++s) {
    double len = extent * rng.uniform(0.22, 0.42);
    Vec2 q{p.x + len * std::cos(theta), p.y + len * std::sin(theta)};
    if (q.x < lo) q.x = 2 * lo - q.x;
    if (q.x > hi) q.x = 2 * hi - q.x;
    if (q.y < lo) q.y = 2 * lo - q.y;
    if (q.y > hi) q.y = 2 * hi - q.y;
    q.x = std::clamp(q.x, lo, hi);
    q.y = std::clamp(q.y, lo, hi);
    theta = std::atan2(q.y - p.y, q.x - p.x) + rng.uniform(-1.1, 1.1);
    pts.push_back(q);
    p = q;
  }
  return pts;
}

template <class Inside>
OccupancyGrid raster2d(int extent, Inside inside) {
  OccupancyGrid g;
  g.dims = {extent, extent};
  g.cells.assign(static_cast<size_t>(extent) * extent, 0);
  for (int y = 0; y < extent; ++y)
    for (int x = 0; x < extent; ++x)
      if (inside(Vec2{x + 0.5, y + 0.5}))
        g.cells[static_cast<size_t>(y) * extent + x] = 1;
  return g;
}

OccupancyGrid paint_chain(int extent, const std::vector<Vec2>& pts,
                          double width) {
  return raster2d(extent, [&](Vec2 c) {
    for (size_t i = 0; i + 1 < pts.size(); ++i)
      if (seg_dist(c, pts[i], pts[i + 1]) <= width * 0.5) return true;
    return false;
  });
}

// stroke widths and dot sizes are absolute pixels at any extent, matching the
// absolute oracle bands
OccupancyGrid gen_stroke(Rng& rng, int extent, double wlo, double whi) {
  double width = rng.uniform(wlo, whi);
  auto pts = random_chain(rng, extent, 6.0, 2 + rng.below(3));
  return paint_chain(extent, pts, width);
}

OccupancyGrid gen_dotted(Rng& rng, int extent) {
  double pitch = rng.uniform(7.5, 10.0);
  double radius = rng.uniform(1.9, 2.5);
  auto pts = random_chain(rng, extent, 6.0, 3 + rng.below(2));
  std::vector<Vec2> dots;
  double carry = 0;  // arc length to the next dot
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    Vec2 a = pts[i], b = pts[i + 1];
    double len = std::hypot(b.x - a.x, b.y - a.y);
    double s = carry;
    while (s <= len) {
      double t = len > 0 ? s / len : 0;
      dots.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
      s += pitch;
    }
    carry = s - len;
  }
  return raster2d(extent, [&](Vec2 c) {
    for (const Vec2& d : dots)
      if (std::hypot(c.x - d.x, c.y - d.y) <= radius) return true;
    return false;
  });
}

OccupancyGrid gen_square(Rng& rng, int extent) {
  Vec2 c{extent * rng.uniform(0.42, 0.58), extent * rng.uniform(0.42, 0.58)};
  double s = extent * rng.uniform(0.14, 0.22);
  double phi = rng.uniform(0.0, 1.57079632679489661923);
  double co = std::cos(phi), si = std::sin(phi);
  return raster2d(extent, [&](Vec2 p) {
    double dx = p.x - c.x, dy = p.y - c.y;
    double u = co * dx + si * dy, v = -si * dx + co * dy;
    return std::max(std::abs(u), std::abs(v)) <= s;
  });
}

OccupancyGrid gen_disk(Rng& rng, int extent) {
  Vec2 c{extent * rng.uniform(0.4, 0.6), extent * rng.uniform(0.4, 0.6)};
  double r = extent * rng.uniform(0.13, 0.2);
  return raster2d(extent, [&](Vec2 p) {
    return std::hypot(p.x - c.x, p.y - c.y) <= r;
  });
}

// ---------------------------------------------------------------------------
// 3D shape painters; z (slowest axis) is up

struct Box3 {
  int x0, x1, y0, y1, z0, z1;  // inclusive
};

void paint_box(OccupancyGrid& g, const Box3& b) {
  const int d = g.dims[0], h = g.dims[1], w = g.dims[2];
  for (int z = std::max(0, b.z0); z <= std::min(d - 1, b.z1); ++z)
    for (int y = std::max(0, b.y0); y <= std::min(h - 1, b.y1); ++y)
      for (int x = std::max(0, b.x0); x <= std::min(w - 1, b.x1); ++x)
        g.cells[(static_cast<size_t>(z) * h + y) * w + x] = 1;
}

OccupancyGrid empty3(int extent) {
  OccupancyGrid g;
  g.dims = {extent, extent, extent};
  g.cells.assign(static_cast<size_t>(extent) * extent * extent, 0);
  return g;
}

OccupancyGrid gen_table(Rng& rng, int extent, double rlo, double rhi) {
  int W = static_cast<int>(std::lround(extent * rng.uniform(0.38, 0.55)));
  int D = std::clamp(
      static_cast<int>(std::lround(W * rng.uniform(0.8, 1.2))),
      static_cast<int>(std::lround(extent * 0.3)),
      static_cast<int>(std::lround(extent * 0.6)));
  int H = std::clamp(
      static_cast<int>(std::lround(std::max(W, D) * rng.uniform(rlo, rhi))),
      4, extent - 4);
  int top = std::max(2, static_cast<int>(std::lround(extent * 0.08)));
  int leg = std::max(2, static_cast<int>(std::lround(extent * 0.09)));
  int x0 = 2 + rng.below(extent - 3 - W - 2 + 1);
  int y0 = 2 + rng.below(extent - 3 - D - 2 + 1);
  int z0 = 2 + rng.below(extent - 3 - H - 2 + 1);
  OccupancyGrid g = empty3(extent);
  paint_box(g, {x0, x0 + W - 1, y0, y0 + D - 1, z0 + H - top, z0 + H - 1});
  for (int cx : {x0, x0 + W - leg})
    for (int cy : {y0, y0 + D - leg})
      paint_box(g, {cx, cx + leg - 1, cy, cy + leg - 1, z0, z0 + H - top - 1});
  return g;
}

OccupancyGrid gen_slab_box(Rng& rng, int extent, bool slabbed) {
  int W = static_cast<int>(std::lround(extent * rng.uniform(0.30, 0.45)));
  int D = static_cast<int>(std::lround(extent * rng.uniform(0.30, 0.50)));
  int Hb = static_cast<int>(std::lround(extent * rng.uniform(0.25, 0.40)));
  int x0 = 4 + rng.below(extent - 4 - W - 4 + 1);
  int y0 = 2 + rng.below(extent - 3 - D - 2 + 1);
  int z0 = 2 + rng.below(extent - 3 - Hb - 2 + 1);
  OccupancyGrid g = empty3(extent);
  paint_box(g, {x0, x0 + W - 1, y0, y0 + D - 1, z0, z0 + Hb - 1});
  if (slabbed) {
    int sy = std::max(2, static_cast<int>(std::lround(D * 0.6)));
    int sz = std::max(2, static_cast<int>(std::lround(Hb * 0.45)));
    int sy0 = y0 + (D - sy) / 2;
    paint_box(g, {x0 - 2, x0 - 1, sy0, sy0 + sy - 1, z0, z0 + sz - 1});
    paint_box(g, {x0 + W, x0 + W + 1, sy0, sy0 + sy - 1, z0, z0 + sz - 1});
  }
  return g;
}

// regenerate until the shape meets its own domain band with a little slack
// over the oracle thresholds, so oracle self-consistency holds by
// construction
OccupancyGrid make_shape(const std::string& recipe, bool second, int extent,
                         Rng& rng) {
  for (int attempt = 0; attempt < 500; ++attempt) {
    OccupancyGrid g;
    bool ok = false;
    if (recipe == "thick_thin") {
      g = second ? gen_stroke(rng, extent, 2.6, 4.3)
                 : gen_stroke(rng, extent, 7.0, 9.8);
      double sw = stroke_width_measure(g);
      ok = second ? (sw >= 2.05 && sw <= 3.95) : (sw >= 6.05 && sw <= 8.95);
    } else if (recipe == "solid_dotted") {
      if (second) {
        g = gen_dotted(rng, extent);
        ok = component_count(g) >= 6;
      } else {
        g = gen_stroke(rng, extent, 3.2, 4.6);
        ok = component_count(g) == 1;
      }
    } else if (recipe == "squares_disks") {
      g = second ? gen_disk(rng, extent) : gen_square(rng, extent);
      double c = circularity_measure(g);
      ok = second ? c >= 0.86 : c <= 0.79;
    } else if (recipe == "tall_short") {
      g = second ? gen_table(rng, extent, 0.35, 0.52)
                 : gen_table(rng, extent, 1.08, 1.40);
      double r = height_ratio_measure(g);
      ok = second ? r <= 0.55 : r >= 1.02;
    } else {  // slab_sides
      g = gen_slab_box(rng, extent, !second);
      double r = side_profile_ratio_measure(g);
      ok = second ? r >= 0.90 : r <= 0.40;
    }
    if (ok) return g;
  }
  fail("recipe ", recipe, ": no acceptable ", second ? "domain2" : "domain1",
       " shape in 500 attempts at extent ", extent);
}

std::string shape_name(const std::string& domain, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%03d", index);
  return domain + buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// set assembly

DomainPairSet generate_synthetic_pair(const std::string& recipe,
                                      const RecipeParams& p) {
  auto doms = recipe_domains(recipe);
  bool three = recipe_is_3d(recipe);
  int extent = p.extent > 0 ? p.extent : (three ? 32 : 64);
  require(p.count > 0 && p.count <= 999, "count must be in [1, 999], got ",
          p.count);
  require(extent >= (three ? 16 : 32), "extent ", extent,
          " too small for recipe ", recipe);
  require(p.train_fraction > 0.0 && p.train_fraction < 1.0,
          "train_fraction must lie in (0, 1), got ", p.train_fraction);

  Rng root(p.seed);
  DomainPairSet set;
  set.recipe = recipe;
  for (int side = 0; side < 2; ++side) {
    const std::string& dom = side ? doms.second : doms.first;
    auto& out = side ? set.domain2 : set.domain1;
    for (int i = 0; i < p.count; ++i) {
      Rng rng = root.substream(dom, static_cast<std::uint64_t>(i));
      out.push_back({shape_name(dom, i), make_shape(recipe, side, extent, rng)});
    }
  }

  int ntr = std::clamp(
      static_cast<int>(std::lround(p.train_fraction * p.count)), 1, p.count);
  if (ntr == p.count && p.count > 1) ntr = p.count - 1;
  auto split = [&](const std::vector<DomainShape>& dom,
                   std::vector<std::string>& tr, std::vector<std::string>& te) {
    for (int i = 0; i < p.count; ++i)
      (i < ntr ? tr : te).push_back(dom[i].name);
  };
  split(set.domain1, set.train1, set.test1);
  split(set.domain2, set.train2, set.test2);

  set.manifest = {{"format_version", "1"},
                  {"kind", "synthetic_pair"},
                  {"recipe", recipe},
                  {"count", p.count},
                  {"extent", extent},
                  {"seed", p.seed},
                  {"train_fraction", p.train_fraction},
                  {"domains", {doms.first, doms.second}}};
  return set;
}

DomainPairSet regenerate_from_manifest(const json& manifest) {
  require(manifest.is_object() && manifest.value("kind", "") ==
          "synthetic_pair",
          "manifest is not a synthetic_pair manifest");
  for (const char* key : {"recipe", "count", "extent", "seed",
                          "train_fraction"})
    require(manifest.contains(key), "manifest missing field '", key, "'");
  RecipeParams p;
  p.count = manifest.at("count").get<int>();
  p.extent = manifest.at("extent").get<int>();
  p.seed = manifest.at("seed").get<std::uint64_t>();
  p.train_fraction = manifest.at("train_fraction").get<double>();
  return generate_synthetic_pair(manifest.at("recipe").get<std::string>(), p);
}

// ---------------------------------------------------------------------------
// disk I/O

static std::vector<std::string> read_split_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open split file: ", path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  return names;
}

static std::vector<DomainShape> load_domain(const std::string& dir,
                                            const std::string& split_file,
                                            int want_rank) {
  auto names = read_split_file(split_file);
  require(!names.empty(), "split file lists no shapes: ", split_file);
  std::sort(names.begin(), names.end());

  std::string missing;
  for (const auto& n : names)
    if (!fs::exists(fs::path(dir) / n)) missing += (missing.empty() ? "" : ", ") + n;
  if (!missing.empty())
    fail("split entries missing under ", dir, ": ", missing);

  std::vector<DomainShape> shapes;
  for (const auto& n : names) {
    std::string path = (fs::path(dir) / n).string();
    bool pgm = n.size() >= 4 && n.substr(n.size() - 4) == ".pgm";
    OccupancyGrid g = pgm ? load_pgm(path) : load_rawgrid(path);
    require(g.rank() == want_rank, path, ": rank ", g.rank(), ", want ",
            want_rank);
    shapes.push_back({n, std::move(g)});
  }

  std::string offenders;
  for (const auto& s : shapes)
    if (s.grid.dims != shapes.front().grid.dims)
      offenders += (offenders.empty() ? "" : ", ") + s.name + " (" +
                   shape_str(s.grid.dims) + ")";
  if (!offenders.empty())
    fail("mixed extents under ", dir, ": expected ",
         shape_str(shapes.front().grid.dims), ", offenders: ", offenders);
  return shapes;
}

std::vector<DomainShape> load_image_domain(const std::string& dir,
                                           const std::string& split_file) {
  return load_domain(dir, split_file, 2);
}

std::vector<DomainShape> load_voxel_domain(const std::string& dir,
                                           const std::string& split_file) {
  return load_domain(dir, split_file, 3);
}

void write_domain_pair(const DomainPairSet& set, const std::string& dir) {
  require(!set.domain1.empty() && !set.domain2.empty(),
          "write_domain_pair: empty domain");
  fs::create_directories(fs::path(dir) / "domain1");
  fs::create_directories(fs::path(dir) / "domain2");
  fs::create_directories(fs::path(dir) / "splits");

  auto save_one = [](const DomainShape& s, const fs::path& sub) {
    std::string ext = s.grid.rank() == 2 ? ".pgm" : ".rg";
    std::string path = (sub / (s.name + ext)).string();
    if (s.grid.rank() == 2)
      save_pgm(s.grid, path);
    else
      save_rawgrid(s.grid, path);
    return ext;
  };
  std::string ext;
  for (const auto& s : set.domain1) ext = save_one(s, fs::path(dir) / "domain1");
  for (const auto& s : set.domain2) ext = save_one(s, fs::path(dir) / "domain2");

  auto write_split = [&](const std::vector<std::string>& names,
                         const std::string& file) {
    std::ofstream out(fs::path(dir) / "splits" / file, std::ios::binary);
    require(out.good(), "cannot write split file: ", file);
    for (const auto& n : names) out << n << ext << "\n";
  };
  write_split(set.train1, "domain1_train.txt");
  write_split(set.test1, "domain1_test.txt");
  write_split(set.train2, "domain2_train.txt");
  write_split(set.test2, "domain2_test.txt");

  std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::binary);
  require(mf.good(), "cannot write manifest.json under ", dir);
  mf << set.manifest.dump(2) << "\n";
}

}  // namespace occtrans
