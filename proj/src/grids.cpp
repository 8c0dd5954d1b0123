#include "occtrans/grids.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace occtrans {

void OccupancyGrid::validate() const {
  require(dims.size() == 2 || dims.size() == 3, "grid must be 2D or 3D");
  for (int e : dims) require(e >= 1, "grid extent must be positive");
  if (static_cast<std::int64_t>(cells.size()) != cell_count())
    fail("grid cell count ", std::to_string(cells.size()), " does not match dims ",
         shape_str(dims));
  for (auto c : cells) require(c <= 1, "grid cells must be 0 or 1");
}

std::vector<std::uint8_t> boundary_mask(const OccupancyGrid& grid) {
  grid.validate();
  std::vector<std::uint8_t> mask(grid.cells.size(), 0);
  if (grid.rank() == 2) {
    const int h = grid.dims[0], w = grid.dims[1];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::uint8_t me = grid.cells[static_cast<size_t>(y) * w + x];
        bool diff = false;
        for (int dy = -1; dy <= 1 && !diff; ++dy)
          for (int dx = -1; dx <= 1 && !diff; ++dx) {
            if (dy == 0 && dx == 0) continue;
            const int ny = y + dy, nx = x + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            diff = grid.cells[static_cast<size_t>(ny) * w + nx] != me;
          }
        mask[static_cast<size_t>(y) * w + x] = diff ? 1 : 0;
      }
    return mask;
  }
  const int d = grid.dims[0], h = grid.dims[1], w = grid.dims[2];
  for (int z = 0; z < d; ++z)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const size_t i = (static_cast<size_t>(z) * h + y) * w + x;
        const std::uint8_t me = grid.cells[i];
        bool diff = false;
        for (int dz = -1; dz <= 1 && !diff; ++dz)
          for (int dy = -1; dy <= 1 && !diff; ++dy)
            for (int dx = -1; dx <= 1 && !diff; ++dx) {
              if (dz == 0 && dy == 0 && dx == 0) continue;
              const int nz = z + dz, ny = y + dy, nx = x + dx;
              if (nz < 0 || nz >= d || ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
              diff = grid.cells[(static_cast<size_t>(nz) * h + ny) * w + nx] != me;
            }
        mask[i] = diff ? 1 : 0;
      }
  return mask;
}

OccupancyGrid downsample_max(const OccupancyGrid& grid, int factor) {
  grid.validate();
  require(factor >= 1, "factor must be >= 1");
  for (int e : grid.dims)
    if (e % factor != 0)
      fail("factor ", std::to_string(factor), " does not divide extents ", shape_str(grid.dims));
  if (factor == 1) return grid;
  OccupancyGrid out;
  out.dims = grid.dims;
  for (auto& e : out.dims) e /= factor;
  out.cells.assign(static_cast<size_t>(out.cell_count()), 0);
  if (grid.rank() == 2) {
    const int w = grid.dims[1], ow = out.dims[1];
    for (int y = 0; y < grid.dims[0]; ++y)
      for (int x = 0; x < w; ++x)
        if (grid.cells[static_cast<size_t>(y) * w + x]) {
          auto& o = out.cells[static_cast<size_t>(y / factor) * ow + x / factor];
          o = 1;
        }
  } else {
    const int h = grid.dims[1], w = grid.dims[2], oh = out.dims[1], ow = out.dims[2];
    for (int z = 0; z < grid.dims[0]; ++z)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (grid.cells[(static_cast<size_t>(z) * h + y) * w + x])
            out.cells[(static_cast<size_t>(z / factor) * oh + y / factor) * ow + x / factor] = 1;
  }
  return out;
}

namespace {

// k distinct draws from pool (partial Fisher-Yates); pool is consumed
std::vector<std::int64_t> draw_without_replacement(std::vector<std::int64_t>& pool,
                                                   std::int64_t k, Rng& rng) {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<size_t>(k));
  for (std::int64_t i = 0; i < k; ++i) {
    const auto j = static_cast<size_t>(rng.below(pool.size() - static_cast<size_t>(i)));
    std::swap(pool[j], pool[pool.size() - 1 - static_cast<size_t>(i)]);
    out.push_back(pool[pool.size() - 1 - static_cast<size_t>(i)]);
  }
  return out;
}

std::vector<std::int64_t> draw_with_replacement(const std::vector<std::int64_t>& pool,
                                                std::int64_t k, Rng& rng) {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<size_t>(k));
  for (std::int64_t i = 0; i < k; ++i)
    out.push_back(pool[static_cast<size_t>(rng.below(pool.size()))]);
  return out;
}

}  // namespace

TrainingPoints sample_training_points(const OccupancyGrid& grid, int resolution,
                                      std::int64_t count, Rng rng) {
  grid.validate();
  require(count >= 1, "count must be >= 1");
  for (int e : grid.dims) {
    require(e == grid.dims[0], "point sampling expects square/cubic grids");
    require(resolution >= 1 && e % resolution == 0, "resolution must divide grid extents");
  }
  const int factor = grid.dims[0] / resolution;
  const OccupancyGrid small = downsample_max(grid, factor);
  const std::vector<std::uint8_t> mask = boundary_mask(small);

  std::vector<std::int64_t> bcells, ucells;
  for (std::int64_t i = 0; i < small.cell_count(); ++i)
    (mask[static_cast<size_t>(i)] ? bcells : ucells).push_back(i);

  std::int64_t nb = count / 2;
  if (bcells.empty()) nb = 0;
  if (ucells.empty()) nb = count;
  std::int64_t nu = count - nb;

  std::vector<std::int64_t> picks;
  picks.reserve(static_cast<size_t>(count));
  bool replaced = false;
  auto take = [&](std::vector<std::int64_t>& pool, std::int64_t k) {
    if (k == 0) return;
    if (k <= static_cast<std::int64_t>(pool.size())) {
      auto v = draw_without_replacement(pool, k, rng);
      picks.insert(picks.end(), v.begin(), v.end());
    } else {
      replaced = true;
      auto v = draw_with_replacement(pool, k, rng);
      picks.insert(picks.end(), v.begin(), v.end());
    }
  };
  take(bcells, nb);
  take(ucells, nu);
  static bool noted = false;  // once per process; training calls this per step
  if (replaced && !noted) {
    noted = true;
    std::fprintf(stderr, "note: point count %lld exceeds available cells, sampling with replacement\n",
                 static_cast<long long>(count));
  }

  TrainingPoints out;
  out.dim = grid.rank();
  out.coords.reserve(picks.size() * static_cast<size_t>(out.dim));
  out.targets.reserve(picks.size());
  out.weights.reserve(picks.size());
  const auto res = static_cast<double>(resolution);
  for (std::int64_t ci : picks) {
    if (out.dim == 2) {
      const std::int64_t y = ci / resolution, x = ci % resolution;
      out.coords.push_back((static_cast<double>(x) + 0.5) / res);
      out.coords.push_back((static_cast<double>(y) + 0.5) / res);
    } else {
      const std::int64_t z = ci / (static_cast<std::int64_t>(resolution) * resolution);
      const std::int64_t rem = ci % (static_cast<std::int64_t>(resolution) * resolution);
      const std::int64_t y = rem / resolution, x = rem % resolution;
      out.coords.push_back((static_cast<double>(x) + 0.5) / res);
      out.coords.push_back((static_cast<double>(y) + 0.5) / res);
      out.coords.push_back((static_cast<double>(z) + 0.5) / res);
    }
    out.targets.push_back(small.cells[static_cast<size_t>(ci)]);
    out.weights.push_back(mask[static_cast<size_t>(ci)] ? 2 : 1);
  }
  return out;
}

// ---- file formats ------------------------------------------------------------

namespace {

void skip_pgm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

}  // namespace

OccupancyGrid load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open ", path);
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5") fail(path, ": not a binary PGM (P5)");
  skip_pgm_space(in);
  int w = 0, h = 0, maxval = 0;
  in >> w;
  skip_pgm_space(in);
  in >> h;
  skip_pgm_space(in);
  in >> maxval;
  in.get();  // single whitespace after header
  if (!in || w < 1 || h < 1 || maxval < 1 || maxval > 255) fail(path, ": bad PGM header");
  std::vector<std::uint8_t> raw(static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) fail(path, ": truncated PGM payload");
  OccupancyGrid g;
  g.dims = {h, w};
  g.cells.resize(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) g.cells[i] = raw[i] < 128 ? 1 : 0;
  return g;
}

void save_pgm(const OccupancyGrid& grid, const std::string& path) {
  grid.validate();
  require(grid.rank() == 2, "PGM export is 2D only");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write ", path);
  out << "P5\n" << grid.dims[1] << " " << grid.dims[0] << "\n255\n";
  std::vector<std::uint8_t> raw(grid.cells.size());
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = grid.cells[i] ? 0 : 255;
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail("short write to ", path);
}

void save_pgm_gray(const std::vector<std::uint8_t>& pixels, int h, int w,
                   const std::string& path) {
  require(static_cast<std::int64_t>(pixels.size()) == static_cast<std::int64_t>(h) * w,
          "pixel buffer does not match extents");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write ", path);
  out << "P5\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) fail("short write to ", path);
}

OccupancyGrid load_rawgrid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open ", path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "RGRD", 4) != 0) fail(path, ": not a RAWGRID file");
  const int version = in.get();
  if (version != 1) fail(path, ": unsupported RAWGRID version ", std::to_string(version));
  const int rank = in.get();
  if (rank != 2 && rank != 3) fail(path, ": bad RAWGRID rank ", std::to_string(rank));
  OccupancyGrid g;
  g.dims.resize(static_cast<size_t>(rank));
  for (int i = 0; i < rank; ++i) {
    std::uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    g.dims[static_cast<size_t>(i)] =
        static_cast<int>(b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24));
    if (g.dims[static_cast<size_t>(i)] < 1) fail(path, ": bad RAWGRID extent");
  }
  const std::int64_t n = numel(g.dims);
  const std::int64_t nbytes = (n + 7) / 8;
  std::vector<std::uint8_t> packed(static_cast<size_t>(nbytes));
  in.read(reinterpret_cast<char*>(packed.data()), nbytes);
  if (in.gcount() != nbytes) fail(path, ": payload length does not match header extents");
  in.peek();
  if (!in.eof()) fail(path, ": payload length does not match header extents");
  g.cells.resize(static_cast<size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    g.cells[static_cast<size_t>(i)] = (packed[static_cast<size_t>(i >> 3)] >> (i & 7)) & 1;
  return g;
}

void save_rawgrid(const OccupancyGrid& grid, const std::string& path) {
  grid.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write ", path);
  out.write("RGRD", 4);
  out.put(1);
  out.put(static_cast<char>(grid.rank()));
  for (int e : grid.dims) {
    const auto u = static_cast<std::uint32_t>(e);
    const char b[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                       static_cast<char>((u >> 16) & 0xff), static_cast<char>((u >> 24) & 0xff)};
    out.write(b, 4);
  }
  const std::int64_t n = grid.cell_count();
  std::vector<std::uint8_t> packed(static_cast<size_t>((n + 7) / 8), 0);
  for (std::int64_t i = 0; i < n; ++i)
    if (grid.cells[static_cast<size_t>(i)])
      packed[static_cast<size_t>(i >> 3)] |= static_cast<std::uint8_t>(1u << (i & 7));
  out.write(reinterpret_cast<const char*>(packed.data()),
            static_cast<std::streamsize>(packed.size()));
  if (!out) fail("short write to ", path);
}

}  // namespace occtrans
