#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "occtrans/grids.hpp"

using namespace occtrans;

namespace {

OccupancyGrid make2d(int h, int w, std::vector<std::uint8_t> cells) {
  return OccupancyGrid{{h, w}, std::move(cells)};
}

OccupancyGrid random_grid(Rng& rng, Shape dims, double p = 0.4) {
  OccupancyGrid g;
  g.dims = std::move(dims);
  g.cells.resize(static_cast<size_t>(g.cell_count()));
  for (auto& c : g.cells) c = rng.uniform() < p ? 1 : 0;
  return g;
}

std::filesystem::path tmpfile(const char* name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("boundary mask basics") {
  // all-zero grid has no boundary
  auto z = make2d(3, 3, std::vector<std::uint8_t>(9, 0));
  auto mz = boundary_mask(z);
  for (auto v : mz) CHECK(v == 0);

  // single solid center of 5x5: center plus 8 neighbors marked
  std::vector<std::uint8_t> c(25, 0);
  c[2 * 5 + 2] = 1;
  auto mc = boundary_mask(make2d(5, 5, c));
  int marked = 0;
  for (auto v : mc) marked += v;
  CHECK(marked == 9);
  for (int y = 1; y <= 3; ++y)
    for (int x = 1; x <= 3; ++x) CHECK(mc[static_cast<size_t>(y) * 5 + x] == 1);

  // 2x2 checkerboard: everything borders a flip
  auto mb = boundary_mask(make2d(2, 2, {1, 0, 0, 1}));
  for (auto v : mb) CHECK(v == 1);
}

TEST_CASE("boundary mask is complement-symmetric") {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    auto g = random_grid(rng, {8, 8});
    auto gc = g;
    for (auto& v : gc.cells) v = 1 - v;
    CHECK(boundary_mask(g) == boundary_mask(gc));
  }
  for (int t = 0; t < 5; ++t) {
    auto g = random_grid(rng, {4, 4, 4});
    auto gc = g;
    for (auto& v : gc.cells) v = 1 - v;
    CHECK(boundary_mask(g) == boundary_mask(gc));
  }
}

TEST_CASE("boundary mask 3D uses the 26-neighborhood") {
  OccupancyGrid g;
  g.dims = {3, 3, 3};
  g.cells.assign(27, 0);
  g.cells[13] = 1;  // center
  auto m = boundary_mask(g);
  for (auto v : m) CHECK(v == 1);
}

TEST_CASE("downsample_max") {
  auto g = make2d(4, 4, std::vector<std::uint8_t>(16, 0));
  g.cells[1 * 4 + 0] = 1;  // inside top-left 2x2 block
  CHECK(downsample_max(g, 1) == g);

  auto d = downsample_max(g, 2);
  CHECK(d.dims == Shape{2, 2});
  CHECK(d.cells == std::vector<std::uint8_t>{1, 0, 0, 0});

  auto solid = make2d(4, 4, std::vector<std::uint8_t>(16, 1));
  auto ds = downsample_max(solid, 4);
  CHECK(ds.cells == std::vector<std::uint8_t>{1});

  CHECK_THROWS_AS(downsample_max(g, 3), Error);
}

TEST_CASE("sampling on a solid grid gives weight-1 positives") {
  auto solid = make2d(8, 8, std::vector<std::uint8_t>(64, 1));
  auto pts = sample_training_points(solid, 8, 32, Rng(1));
  CHECK(pts.count() == 32);
  for (std::int64_t i = 0; i < pts.count(); ++i) {
    CHECK(pts.targets[static_cast<size_t>(i)] == 1);
    CHECK(pts.weights[static_cast<size_t>(i)] == 1);
  }
}

TEST_CASE("full-resolution targets equal source cells") {
  Rng rng(9);
  auto g = random_grid(rng, {8, 8});
  auto pts = sample_training_points(g, 8, 64, Rng(2));
  for (std::int64_t i = 0; i < pts.count(); ++i) {
    const double x = pts.coords[static_cast<size_t>(2 * i)];
    const double y = pts.coords[static_cast<size_t>(2 * i + 1)];
    CHECK(x > 0.0);
    CHECK(x < 1.0);
    const int ix = static_cast<int>(x * 8), iy = static_cast<int>(y * 8);
    CHECK(pts.targets[static_cast<size_t>(i)] == g.cells[static_cast<size_t>(iy) * 8 + ix]);
  }
}

TEST_CASE("half-plane boundary fraction is about one half") {
  OccupancyGrid g;
  g.dims = {16, 16};
  g.cells.resize(256);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) g.cells[static_cast<size_t>(y) * 16 + x] = x < 8 ? 1 : 0;
  auto pts = sample_training_points(g, 16, 10000, Rng(3));
  std::int64_t w2 = 0;
  for (auto w : pts.weights) w2 += (w == 2);
  const double frac = static_cast<double>(w2) / static_cast<double>(pts.count());
  CHECK(frac > 0.45);
  CHECK(frac < 0.55);
}

TEST_CASE("sampling is deterministic per seed") {
  Rng rng(10);
  auto g = random_grid(rng, {16, 16});
  auto a = sample_training_points(g, 8, 40, Rng(42));
  auto b = sample_training_points(g, 8, 40, Rng(42));
  CHECK(a.coords == b.coords);
  CHECK(a.targets == b.targets);
  CHECK(a.weights == b.weights);
  auto c = sample_training_points(g, 8, 40, Rng(43));
  CHECK(a.coords != c.coords);
}

TEST_CASE("3D sampling round-trips cell occupancy") {
  Rng rng(11);
  auto g = random_grid(rng, {8, 8, 8});
  auto pts = sample_training_points(g, 8, 200, Rng(5));
  CHECK(pts.dim == 3);
  for (std::int64_t i = 0; i < pts.count(); ++i) {
    const int ix = static_cast<int>(pts.coords[static_cast<size_t>(3 * i)] * 8);
    const int iy = static_cast<int>(pts.coords[static_cast<size_t>(3 * i + 1)] * 8);
    const int iz = static_cast<int>(pts.coords[static_cast<size_t>(3 * i + 2)] * 8);
    CHECK(pts.targets[static_cast<size_t>(i)] ==
          g.cells[(static_cast<size_t>(iz) * 8 + iy) * 8 + ix]);
  }
}

TEST_CASE("pgm round-trip and dark-inside convention") {
  Rng rng(12);
  auto g = random_grid(rng, {16, 16});
  auto p = tmpfile("occtrans_test.pgm");
  save_pgm(g, p.string());
  auto g2 = load_pgm(p.string());
  CHECK(g == g2);

  // all-white image decodes to an empty grid
  std::ofstream out(p, std::ios::binary);
  out << "P5\n4 2\n255\n";
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>(255));
  out.close();
  auto white = load_pgm(p.string());
  CHECK(white.dims == Shape{2, 4});
  for (auto c : white.cells) CHECK(c == 0);
  std::filesystem::remove(p);
}

TEST_CASE("rawgrid round-trip in 2D and 3D") {
  Rng rng(13);
  for (Shape dims : {Shape{8, 8}, Shape{4, 8, 8}, Shape{3, 5}}) {
    auto g = random_grid(rng, dims);
    auto p = tmpfile("occtrans_test.rgrd");
    save_rawgrid(g, p.string());
    CHECK(load_rawgrid(p.string()) == g);
    std::filesystem::remove(p);
  }
}

TEST_CASE("rawgrid rejects truncated payloads") {
  Rng rng(14);
  auto g = random_grid(rng, {8, 8});
  auto p = tmpfile("occtrans_trunc.rgrd");
  save_rawgrid(g, p.string());
  auto size = std::filesystem::file_size(p);
  std::filesystem::resize_file(p, size - 2);
  CHECK_THROWS_WITH_AS(load_rawgrid(p.string()), doctest::Contains("payload"), Error);
  std::filesystem::remove(p);
}
