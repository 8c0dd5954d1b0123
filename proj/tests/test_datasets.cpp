#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "occtrans/datasets.hpp"

using namespace occtrans;
namespace fs = std::filesystem;

namespace {

// independent contour-length oracle: emit the midpoint segments explicitly
// and sum their euclidean lengths
double contour_len_oracle(const OccupancyGrid& g) {
  int h = g.dims[0], w = g.dims[1];
  auto occ = [&](int x, int y) -> int {
    return x < 0 || y < 0 || x >= w || y >= h
               ? 0
               : g.cells[static_cast<size_t>(y) * w + x];
  };
  struct P {
    double x, y;
  };
  const P bottom{0.5, 0.0}, top{0.5, 1.0}, left{0.0, 0.5}, right{1.0, 0.5};
  auto len = [](P a, P b) { return std::hypot(a.x - b.x, a.y - b.y); };
  double total = 0;
  for (int y = -1; y < h; ++y)
    for (int x = -1; x < w; ++x) {
      bool b0 = occ(x, y), b1 = occ(x + 1, y);
      bool b2 = occ(x, y + 1), b3 = occ(x + 1, y + 1);
      int m = b0 + 2 * b1 + 4 * b2 + 8 * b3;
      switch (m) {
        case 0: case 15: break;
        case 1: case 14: total += len(left, bottom); break;
        case 2: case 13: total += len(bottom, right); break;
        case 4: case 11: total += len(left, top); break;
        case 8: case 7: total += len(top, right); break;
        case 3: case 12: total += len(left, right); break;
        case 5: case 10: total += len(bottom, top); break;
        case 6: case 9: total += len(left, top) + len(bottom, right); break;
      }
    }
  return total;
}

double area_oracle(const OccupancyGrid& g) {
  double a = 0;
  for (auto c : g.cells) a += c;
  return a;
}

double stroke_width_oracle(const OccupancyGrid& g) {
  return 2.0 * area_oracle(g) / contour_len_oracle(g);
}

double circularity_oracle(const OccupancyGrid& g) {
  double p = contour_len_oracle(g);
  return 4.0 * M_PI * area_oracle(g) / (p * p);
}

OccupancyGrid mirror_x(const OccupancyGrid& g) {
  OccupancyGrid out = g;
  int h = g.dims[0], w = g.dims[1];
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.cells[static_cast<size_t>(y) * w + x] =
          g.cells[static_cast<size_t>(y) * w + (w - 1 - x)];
  return out;
}

OccupancyGrid rect_grid(int h, int w, int y0, int y1, int x0, int x1) {
  OccupancyGrid g;
  g.dims = {h, w};
  g.cells.assign(static_cast<size_t>(h) * w, 0);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      g.cells[static_cast<size_t>(y) * w + x] = 1;
  return g;
}

fs::path fresh_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("occtrans_ds_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("perimeter measure matches hand counts and disk geometry") {
  OccupancyGrid one = rect_grid(5, 5, 2, 2, 2, 2);
  CHECK(raster_perimeter(one) == doctest::Approx(4 * std::sqrt(0.5)));

  // a-by-b rectangle: straight runs plus four corner cuts
  OccupancyGrid r = rect_grid(16, 16, 3, 6, 2, 11);
  double want = 2 * (10 - 1) + 2 * (4 - 1) + 4 * std::sqrt(0.5);
  CHECK(raster_perimeter(r) == doctest::Approx(want));
  CHECK(raster_perimeter(r) == doctest::Approx(contour_len_oracle(r)));

  // large rasterized disk: length close to 2*pi*r, circularity high
  int e = 128;
  OccupancyGrid disk;
  disk.dims = {e, e};
  disk.cells.assign(static_cast<size_t>(e) * e, 0);
  double r0 = 40.0;
  for (int y = 0; y < e; ++y)
    for (int x = 0; x < e; ++x)
      if (std::hypot(x + 0.5 - 64.0, y + 0.5 - 64.0) <= r0)
        disk.cells[static_cast<size_t>(y) * e + x] = 1;
  // midpoint rule runs a few percent long on slanted arcs
  CHECK(raster_perimeter(disk) ==
        doctest::Approx(2 * M_PI * r0).epsilon(0.07));
  CHECK(circularity_measure(disk) > 0.88);
  CHECK(circularity_measure(disk) <= 1.02);

  // axis-aligned square sits near pi/4
  OccupancyGrid sq = rect_grid(64, 64, 10, 41, 10, 41);
  CHECK(circularity_measure(sq) == doctest::Approx(M_PI / 4).epsilon(0.03));
}

TEST_CASE("thick and thin strokes land in their advertised width bands") {
  RecipeParams p;
  p.count = 16;
  p.seed = 5;
  auto set = generate_synthetic_pair("thick_thin", p);
  REQUIRE(set.domain1.size() == 16);
  REQUIRE(set.domain2.size() == 16);
  for (const auto& s : set.domain1) {
    double w = stroke_width_oracle(s.grid);
    CHECK(w >= 6.0);
    CHECK(w <= 9.0);
  }
  for (const auto& s : set.domain2) {
    double w = stroke_width_oracle(s.grid);
    CHECK(w >= 2.0);
    CHECK(w <= 4.0);
  }
}

TEST_CASE("squares and disks separate by circularity") {
  RecipeParams p;
  p.count = 16;
  p.seed = 11;
  auto set = generate_synthetic_pair("squares_disks", p);
  for (const auto& s : set.domain1) CHECK(circularity_oracle(s.grid) <= 0.80);
  for (const auto& s : set.domain2) CHECK(circularity_oracle(s.grid) >= 0.85);
}

TEST_CASE("domain oracle is self-consistent, handles degenerate input, and "
          "ignores mirroring") {
  for (const auto& recipe : known_recipes()) {
    CAPTURE(recipe);
    RecipeParams p;
    p.count = 12;
    p.seed = 3;
    auto set = generate_synthetic_pair(recipe, p);
    auto doms = recipe_domains(recipe);
    int hits = 0;
    for (const auto& s : set.domain1)
      hits += domain_oracle(s.grid, recipe) == doms.first;
    for (const auto& s : set.domain2)
      hits += domain_oracle(s.grid, recipe) == doms.second;
    CHECK(hits >= static_cast<int>(std::ceil(0.99 * 2 * p.count)));

    OccupancyGrid empty;
    empty.dims = set.domain1[0].grid.dims;
    empty.cells.assign(empty.cell_count(), 0);
    CHECK(domain_oracle(empty, recipe) == "uncertain");
  }

  for (const char* recipe : {"thick_thin", "squares_disks"}) {
    RecipeParams p;
    p.count = 8;
    p.seed = 21;
    auto set = generate_synthetic_pair(recipe, p);
    for (const auto& s : set.domain1)
      CHECK(domain_oracle(mirror_x(s.grid), recipe) ==
            domain_oracle(s.grid, recipe));
    for (const auto& s : set.domain2)
      CHECK(domain_oracle(mirror_x(s.grid), recipe) ==
            domain_oracle(s.grid, recipe));
  }
}

TEST_CASE("generation is seed-deterministic and manifest-reproducible") {
  RecipeParams p;
  p.count = 6;
  p.seed = 99;
  auto a = generate_synthetic_pair("solid_dotted", p);
  auto b = generate_synthetic_pair("solid_dotted", p);
  REQUIRE(a.domain1.size() == b.domain1.size());
  for (size_t i = 0; i < a.domain1.size(); ++i) {
    CHECK(a.domain1[i].name == b.domain1[i].name);
    CHECK(a.domain1[i].grid == b.domain1[i].grid);
    CHECK(a.domain2[i].grid == b.domain2[i].grid);
  }

  auto c = regenerate_from_manifest(a.manifest);
  for (size_t i = 0; i < a.domain1.size(); ++i) {
    CHECK(a.domain1[i].grid == c.domain1[i].grid);
    CHECK(a.domain2[i].grid == c.domain2[i].grid);
  }
  CHECK(a.manifest == c.manifest);

  p.seed = 100;
  auto d = generate_synthetic_pair("solid_dotted", p);
  bool any_diff = false;
  for (size_t i = 0; i < a.domain1.size(); ++i)
    any_diff = any_diff || !(a.domain1[i].grid == d.domain1[i].grid);
  CHECK(any_diff);
}

TEST_CASE("splits are disjoint and cover both domains") {
  RecipeParams p;
  p.count = 16;
  p.seed = 2;
  auto set = generate_synthetic_pair("squares_disks", p);
  auto check_split = [&](const std::vector<std::string>& tr,
                         const std::vector<std::string>& te,
                         const std::vector<DomainShape>& dom) {
    CHECK(tr.size() == 12);
    CHECK(te.size() == 4);
    std::set<std::string> strain(tr.begin(), tr.end());
    std::set<std::string> stest(te.begin(), te.end());
    std::vector<std::string> overlap;
    std::set_intersection(strain.begin(), strain.end(), stest.begin(),
                          stest.end(), std::back_inserter(overlap));
    CHECK(overlap.empty());
    CHECK(strain.size() + stest.size() == dom.size());
    for (const auto& s : dom)
      CHECK((strain.count(s.name) || stest.count(s.name)));
  };
  check_split(set.train1, set.test1, set.domain1);
  check_split(set.train2, set.test2, set.domain2);
}

TEST_CASE("write and reload a 2D pair; loader returns name-sorted grids") {
  auto dir = fresh_dir("rt2d");
  RecipeParams p;
  p.count = 8;
  p.seed = 14;
  auto set = generate_synthetic_pair("thick_thin", p);
  write_domain_pair(set, dir.string());
  CHECK(fs::exists(dir / "manifest.json"));

  auto train = load_image_domain((dir / "domain1").string(),
                                 (dir / "splits" / "domain1_train.txt").string());
  CHECK(train.size() == 6);
  for (size_t i = 1; i < train.size(); ++i)
    CHECK(train[i - 1].name < train[i].name);
  for (const auto& s : train) {
    auto it = std::find_if(set.domain1.begin(), set.domain1.end(),
                           [&](const DomainShape& d) {
                             return d.name + ".pgm" == s.name;
                           });
    REQUIRE(it != set.domain1.end());
    CHECK(it->grid == s.grid);
  }
}

TEST_CASE("write and reload a 3D pair as rawgrid voxels") {
  auto dir = fresh_dir("rt3d");
  RecipeParams p;
  p.count = 4;
  p.seed = 8;
  p.extent = 16;
  auto set = generate_synthetic_pair("tall_short", p);
  write_domain_pair(set, dir.string());
  auto test = load_voxel_domain((dir / "domain2").string(),
                                (dir / "splits" / "domain2_test.txt").string());
  CHECK(test.size() == 1);
  CHECK(test[0].grid.rank() == 3);
  CHECK(test[0].grid == set.domain2.back().grid);
}

TEST_CASE("split file filters the directory and order is bytewise") {
  auto dir = fresh_dir("filter");
  for (int i = 0; i < 10; ++i) {
    OccupancyGrid g = rect_grid(8, 8, 1, i % 6 + 1, 2, 5);
    char name[16];
    std::snprintf(name, sizeof name, "s%02d.pgm", i);
    save_pgm(g, (dir / name).string());
  }
  std::ofstream split(dir / "split.txt");
  // deliberately unsorted; loader must sort bytewise
  for (int i : {7, 2, 9, 0, 5, 3, 8, 1}) split << "s0" << i << ".pgm\n";
  split.close();

  auto shapes = load_image_domain(dir.string(), (dir / "split.txt").string());
  REQUIRE(shapes.size() == 8);
  CHECK(shapes.front().name == "s00.pgm");
  CHECK(shapes.back().name == "s09.pgm");
  for (size_t i = 1; i < shapes.size(); ++i)
    CHECK(shapes[i - 1].name < shapes[i].name);
}

TEST_CASE("all-white image loads as an all-zero grid and round-trips") {
  auto dir = fresh_dir("white");
  save_pgm_gray(std::vector<std::uint8_t>(64, 255), 8, 8,
                (dir / "white.pgm").string());
  std::ofstream(dir / "one.txt") << "white.pgm\n";
  auto shapes = load_image_domain(dir.string(), (dir / "one.txt").string());
  REQUIRE(shapes.size() == 1);
  CHECK(std::count(shapes[0].grid.cells.begin(), shapes[0].grid.cells.end(),
                   1) == 0);

  save_pgm(shapes[0].grid, (dir / "copy.pgm").string());
  CHECK(load_pgm((dir / "copy.pgm").string()) == shapes[0].grid);
}

TEST_CASE("all-zero voxel file loads empty; corrupt payload is rejected") {
  auto dir = fresh_dir("vox");
  OccupancyGrid g;
  g.dims = {16, 16, 16};
  g.cells.assign(16 * 16 * 16, 0);
  save_rawgrid(g, (dir / "zero.rg").string());
  std::ofstream(dir / "one.txt") << "zero.rg\n";
  auto shapes = load_voxel_domain(dir.string(), (dir / "one.txt").string());
  CHECK(std::count(shapes[0].grid.cells.begin(), shapes[0].grid.cells.end(),
                   1) == 0);

  // chop the payload so the header promises more cells than stored
  auto bytes = fs::file_size(dir / "zero.rg");
  fs::resize_file(dir / "zero.rg", bytes - 7);
  CHECK_THROWS_AS(
      load_voxel_domain(dir.string(), (dir / "one.txt").string()), Error);
}

TEST_CASE("mixed extents and missing entries are rejected with names") {
  auto dir = fresh_dir("mixed");
  save_pgm(rect_grid(16, 16, 2, 5, 2, 5), (dir / "a.pgm").string());
  save_pgm(rect_grid(16, 16, 3, 9, 1, 7), (dir / "b.pgm").string());
  save_pgm(rect_grid(8, 8, 1, 4, 1, 4), (dir / "c.pgm").string());
  std::ofstream(dir / "all.txt") << "a.pgm\nb.pgm\nc.pgm\n";

  try {
    load_image_domain(dir.string(), (dir / "all.txt").string());
    FAIL("expected mixed-extent rejection");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("c.pgm") != std::string::npos);
    CHECK(msg.find("(8,8)") != std::string::npos);
  }

  std::ofstream(dir / "ghost.txt") << "a.pgm\nnope.pgm\n";
  try {
    load_image_domain(dir.string(), (dir / "ghost.txt").string());
    FAIL("expected missing-entry rejection");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("nope.pgm") != std::string::npos);
  }
}

TEST_CASE("unknown recipe error lists the known recipes") {
  RecipeParams p;
  try {
    generate_synthetic_pair("frogs_toads", p);
    FAIL("expected unknown-recipe rejection");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("frogs_toads") != std::string::npos);
    for (const auto& r : known_recipes())
      CHECK(msg.find(r) != std::string::npos);
  }
}
