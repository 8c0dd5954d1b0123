#include "occtrans/extract.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <unordered_map>

#include "occtrans/nets.hpp"
#include "occtrans/tape.hpp"

namespace occtrans {

namespace {

double dist2(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

std::array<double, 3> cross3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

std::array<double, 3> sub3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

double tri_area(const std::array<double, 3>& a, const std::array<double, 3>& b,
                const std::array<double, 3>& c) {
  const auto n = cross3(sub3(b, a), sub3(c, a));
  return 0.5 * std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
}

// Sample lattice the marchers walk over. With pad=true a synthetic below-iso
// layer surrounds the field, pinned to coordinate 0 or 1 on each axis.
struct Lattice {
  int nx = 1, ny = 1, nz = 1;
  std::vector<double> vals;  // x fastest
  std::vector<double> px, py, pz;
  double at(int x, int y, int z) const {
    return vals[(static_cast<size_t>(z) * ny + y) * nx + x];
  }
};

std::vector<double> axis_positions(int extent, bool pad) {
  std::vector<double> p;
  p.reserve(static_cast<size_t>(extent) + 2);
  if (pad) p.push_back(0.0);
  for (int i = 0; i < extent; ++i) p.push_back((i + 0.5) / extent);
  if (pad) p.push_back(1.0);
  return p;
}

Lattice make_lattice(const Array<double>& field, double iso, bool pad) {
  const Shape& s = field.shape();
  const int rank = static_cast<int>(s.size());
  const int W = s[static_cast<size_t>(rank) - 1];
  const int H = s[static_cast<size_t>(rank) - 2];
  const int D = rank == 3 ? s[0] : 1;
  const int margin = pad ? 1 : 0;
  Lattice L;
  L.nx = W + 2 * margin;
  L.ny = H + 2 * margin;
  L.nz = rank == 3 ? D + 2 * margin : 1;
  L.px = axis_positions(W, pad);
  L.py = axis_positions(H, pad);
  if (rank == 3) L.pz = axis_positions(D, pad);
  L.vals.assign(static_cast<size_t>(L.nx) * L.ny * L.nz, iso - 1.0);
  const double* src = field.data().data();
  for (int z = 0; z < D; ++z)
    for (int y = 0; y < H; ++y) {
      double* row =
          L.vals.data() +
          (static_cast<size_t>(rank == 3 ? z + margin : 0) * L.ny + (y + margin)) * L.nx + margin;
      std::copy(src, src + W, row);
      src += W;
    }
  return L;
}

// Crossing vertices keyed by their lattice edge, so every cell that touches an
// edge reuses the exact same interpolated point.
struct VertexPool {
  const Lattice* L = nullptr;
  double iso = 0.5;
  std::unordered_map<std::uint64_t, int> idx;
  std::vector<std::array<double, 3>> pos;

  int edge_vertex(int axis, int x, int y, int z) {
    const std::uint64_t key = (static_cast<std::uint64_t>(axis) << 36) |
                              (static_cast<std::uint64_t>(z) << 24) |
                              (static_cast<std::uint64_t>(y) << 12) | static_cast<std::uint64_t>(x);
    auto [it, fresh] = idx.try_emplace(key, static_cast<int>(pos.size()));
    if (!fresh) return it->second;
    const int x1 = x + (axis == 0), y1 = y + (axis == 1), z1 = z + (axis == 2);
    const double v0 = L->at(x, y, z), v1 = L->at(x1, y1, z1);
    double t = (iso - v0) / (v1 - v0);
    t = std::clamp(t, 1e-4, 1.0 - 1e-4);  // keeps corner hits off the lattice points
    std::array<double, 3> p{L->px[static_cast<size_t>(x)] +
                                t * (L->px[static_cast<size_t>(x1)] - L->px[static_cast<size_t>(x)]),
                            L->py[static_cast<size_t>(y)] +
                                t * (L->py[static_cast<size_t>(y1)] - L->py[static_cast<size_t>(y)]),
                            0.0};
    if (!L->pz.empty())
      p[2] = L->pz[static_cast<size_t>(z)] +
             t * (L->pz[static_cast<size_t>(z1)] - L->pz[static_cast<size_t>(z)]);
    pos.push_back(p);
    return it->second;
  }
};

// Directed iso-segments across one quad of samples, above-iso side on the
// left of travel when the quad corners run counterclockwise as seen from the
// outside. The ambiguous double-crossing case follows the quad-center average.
int pair_quad(const bool b[4], const int vid[4], double center, double iso,
              std::array<std::pair<int, int>, 2>& out) {
  int nc = 0;
  for (int i = 0; i < 4; ++i) nc += b[i] != b[(i + 1) & 3];
  if (nc == 0) return 0;
  if (nc == 2) {
    int ex = -1, en = -1;
    for (int i = 0; i < 4; ++i) {
      if (b[i] == b[(i + 1) & 3]) continue;
      (b[i] ? ex : en) = i;
    }
    out[0] = {vid[ex], vid[en]};
    return 1;
  }
  const bool join = center > iso;  // above-iso corners connect through the middle
  int n = 0;
  for (int i = 0; i < 4; ++i) {
    if (!b[i]) continue;
    out[n++] = {vid[i], vid[join ? (i + 1) & 3 : (i + 3) & 3]};
  }
  return n;
}

void check_field(const Array<double>& field, double iso, int rank, const char* who) {
  require(static_cast<int>(field.shape().size()) == rank, who, " wants a rank-", rank,
          " field, got ", shape_str(field.shape()));
  for (int e : field.shape()) {
    require(e >= 2, who, ": every field extent must be at least 2, got ",
            shape_str(field.shape()));
    require(e <= 4000, who, ": field extent ", e, " too large");
  }
  require(field.finite(), who, ": field has non-finite values");
  require(std::isfinite(iso), who, ": iso must be finite");
}

}  // namespace

double ContourSet::total_length() const {
  double acc = 0;
  for (const Polyline& pl : lines) {
    for (size_t i = 1; i < pl.pts.size(); ++i) acc += std::sqrt(dist2(pl.pts[i - 1], pl.pts[i]));
    if (pl.closed && pl.pts.size() > 2) acc += std::sqrt(dist2(pl.pts.back(), pl.pts.front()));
  }
  return acc;
}

double TriMesh::area() const {
  double acc = 0;
  for (const auto& t : tris)
    acc += tri_area(verts[static_cast<size_t>(t[0])], verts[static_cast<size_t>(t[1])],
                    verts[static_cast<size_t>(t[2])]);
  return acc;
}

double TriMesh::signed_volume() const {
  double acc = 0;
  for (const auto& t : tris) {
    const auto& a = verts[static_cast<size_t>(t[0])];
    const auto& b = verts[static_cast<size_t>(t[1])];
    const auto& c = verts[static_cast<size_t>(t[2])];
    const auto n = cross3(b, c);
    acc += a[0] * n[0] + a[1] * n[1] + a[2] * n[2];
  }
  return acc / 6.0;
}

ContourSet marching_squares(const Array<double>& field, double iso, bool pad) {
  check_field(field, iso, 2, "marching_squares");
  const Lattice L = make_lattice(field, iso, pad);
  VertexPool pool{&L, iso, {}, {}};
  std::vector<std::pair<int, int>> segs;
  for (int cy = 0; cy + 1 < L.ny; ++cy)
    for (int cx = 0; cx + 1 < L.nx; ++cx) {
      const double v[4] = {L.at(cx, cy, 0), L.at(cx + 1, cy, 0), L.at(cx + 1, cy + 1, 0),
                           L.at(cx, cy + 1, 0)};
      bool b[4];
      int nin = 0;
      for (int i = 0; i < 4; ++i) nin += (b[i] = v[i] > iso);
      if (nin == 0 || nin == 4) continue;
      int vid[4] = {-1, -1, -1, -1};
      if (b[0] != b[1]) vid[0] = pool.edge_vertex(0, cx, cy, 0);
      if (b[1] != b[2]) vid[1] = pool.edge_vertex(1, cx + 1, cy, 0);
      if (b[2] != b[3]) vid[2] = pool.edge_vertex(0, cx, cy + 1, 0);
      if (b[3] != b[0]) vid[3] = pool.edge_vertex(1, cx, cy, 0);
      std::array<std::pair<int, int>, 2> emitted;
      const int n = pair_quad(b, vid, 0.25 * (v[0] + v[1] + v[2] + v[3]), iso, emitted);
      for (int i = 0; i < n; ++i) segs.push_back(emitted[i]);
    }

  const int V = static_cast<int>(pool.pos.size());
  std::vector<int> succ(static_cast<size_t>(V), -1);
  std::vector<int> indeg(static_cast<size_t>(V), 0);
  for (const auto& [a, b] : segs) {
    require(succ[static_cast<size_t>(a)] == -1, "internal: contour vertex emitted twice");
    succ[static_cast<size_t>(a)] = b;
    require(++indeg[static_cast<size_t>(b)] == 1, "internal: contour vertex entered twice");
  }
  std::vector<char> used(static_cast<size_t>(V), 0);
  ContourSet cs;
  const auto emit = [&](int start, bool closed) {
    Polyline pl;
    pl.closed = closed;
    int cur = start;
    while (true) {
      pl.pts.push_back({pool.pos[static_cast<size_t>(cur)][0], pool.pos[static_cast<size_t>(cur)][1]});
      used[static_cast<size_t>(cur)] = 1;
      const int nxt = succ[static_cast<size_t>(cur)];
      if (nxt == -1 || (closed && nxt == start)) break;
      cur = nxt;
    }
    cs.lines.push_back(std::move(pl));
  };
  for (int vtx = 0; vtx < V; ++vtx)
    if (!used[static_cast<size_t>(vtx)] && succ[static_cast<size_t>(vtx)] != -1 &&
        indeg[static_cast<size_t>(vtx)] == 0)
      emit(vtx, false);
  for (int vtx = 0; vtx < V; ++vtx)
    if (!used[static_cast<size_t>(vtx)] && succ[static_cast<size_t>(vtx)] != -1) emit(vtx, true);
  return cs;
}

TriMesh marching_cubes(const Array<double>& field, double iso, bool pad) {
  check_field(field, iso, 3, "marching_cubes");
  const Lattice L = make_lattice(field, iso, pad);
  VertexPool pool{&L, iso, {}, {}};
  TriMesh mesh;
  std::int64_t dropped = 0;

  // corner id = x + 2y + 4z; quads counterclockwise seen from outside the cube
  static constexpr int kFaceQuad[6][4] = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4},
                                          {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};

  std::vector<int> loop;
  for (int cz = 0; cz + 1 < L.nz; ++cz)
    for (int cy = 0; cy + 1 < L.ny; ++cy)
      for (int cx = 0; cx + 1 < L.nx; ++cx) {
        double v[8];
        bool in[8];
        int nin = 0;
        for (int c = 0; c < 8; ++c) {
          v[c] = L.at(cx + (c & 1), cy + ((c >> 1) & 1), cz + ((c >> 2) & 1));
          nin += (in[c] = v[c] > iso);
        }
        if (nin == 0 || nin == 8) continue;

        std::array<std::pair<int, int>, 12> segs;
        int ns = 0;
        for (const auto& q : kFaceQuad) {
          const bool b[4] = {in[q[0]], in[q[1]], in[q[2]], in[q[3]]};
          if (b[0] == b[1] && b[1] == b[2] && b[2] == b[3]) continue;
          int vid[4] = {-1, -1, -1, -1};
          for (int i = 0; i < 4; ++i) {
            if (b[i] == b[(i + 1) & 3]) continue;
            const int a = q[i], c = q[(i + 1) & 3];
            const int bit = a ^ c;
            const int axis = bit == 1 ? 0 : bit == 2 ? 1 : 2;
            const int low = a & c;
            vid[i] = pool.edge_vertex(axis, cx + (low & 1), cy + ((low >> 1) & 1),
                                      cz + ((low >> 2) & 1));
          }
          std::array<std::pair<int, int>, 2> emitted;
          const double center = 0.25 * (v[q[0]] + v[q[1]] + v[q[2]] + v[q[3]]);
          const int n = pair_quad(b, vid, center, iso, emitted);
          for (int i = 0; i < n; ++i) segs[static_cast<size_t>(ns++)] = emitted[i];
        }

        bool seg_used[12] = {};
        for (int s0 = 0; s0 < ns; ++s0) {
          if (seg_used[s0]) continue;
          loop.clear();
          loop.push_back(segs[static_cast<size_t>(s0)].first);
          loop.push_back(segs[static_cast<size_t>(s0)].second);
          seg_used[s0] = true;
          while (loop.back() != loop.front()) {
            bool found = false;
            for (int j = 0; j < ns; ++j) {
              if (seg_used[j] || segs[static_cast<size_t>(j)].first != loop.back()) continue;
              loop.push_back(segs[static_cast<size_t>(j)].second);
              seg_used[j] = true;
              found = true;
              break;
            }
            require(found, "internal: open surface loop in a cell");
          }
          loop.pop_back();
          if (loop.size() < 3) continue;
          std::reverse(loop.begin(), loop.end());  // traced loops wind inward; flip once
          const auto push_tri = [&](int a, int b, int c) {
            if (tri_area(pool.pos[static_cast<size_t>(a)], pool.pos[static_cast<size_t>(b)],
                         pool.pos[static_cast<size_t>(c)]) < 1e-12) {
              ++dropped;
              return;
            }
            mesh.tris.push_back({a, b, c});
          };
          if (loop.size() == 3) {
            push_tri(loop[0], loop[1], loop[2]);
          } else {
            // fan from the centroid: apex edges stay private to this polygon,
            // so they can never collide with a neighboring cell's geometry
            std::array<double, 3> cent{0, 0, 0};
            for (int vi : loop)
              for (int d = 0; d < 3; ++d) cent[static_cast<size_t>(d)] += pool.pos[static_cast<size_t>(vi)][static_cast<size_t>(d)];
            for (int d = 0; d < 3; ++d) cent[static_cast<size_t>(d)] /= static_cast<double>(loop.size());
            const int ci = static_cast<int>(pool.pos.size());
            pool.pos.push_back(cent);
            for (size_t t = 0; t < loop.size(); ++t)
              push_tri(ci, loop[t], loop[(t + 1) % loop.size()]);
          }
        }
      }
  if (dropped > 0)
    std::fprintf(stderr, "note: marching_cubes dropped %lld degenerate triangles\n",
                 static_cast<long long>(dropped));

  // keep only referenced vertices
  std::vector<int> remap(pool.pos.size(), -1);
  for (const auto& t : mesh.tris)
    for (int vi : t)
      if (remap[static_cast<size_t>(vi)] == -1) {
        remap[static_cast<size_t>(vi)] = static_cast<int>(mesh.verts.size());
        mesh.verts.push_back(pool.pos[static_cast<size_t>(vi)]);
      }
  for (auto& t : mesh.tris)
    for (int& vi : t) vi = remap[static_cast<size_t>(vi)];
  return mesh;
}

namespace {

std::int64_t eval_budget_bytes() {
  const char* env = std::getenv("OCCTRANS_EVAL_MEM_MB");
  if (env == nullptr || *env == '\0') return std::int64_t{1024} << 20;
  char* end = nullptr;
  const long long mb = std::strtoll(env, &end, 10);
  require(end != nullptr && *end == '\0' && mb > 0,
          "OCCTRANS_EVAL_MEM_MB must be a positive integer, got '", env, "'");
  return static_cast<std::int64_t>(mb) << 20;
}

}  // namespace

Array<double> evaluate_field(const NetSpec& dec, const std::vector<Array<double>>& dec_params,
                             const Array<double>& latent, int resolution, bool regular_code) {
  require(dec.role == "decoder", "evaluate_field wants a decoder spec");
  require(resolution >= 2, "resolution must be at least 2");
  const int dim = dec.dim;
  const Shape& ls = latent.shape();
  require(static_cast<int>(ls.size()) == dim + 1 && ls.back() == dec.m, "latent ", shape_str(ls),
          " does not fit a ", dim, "d decoder with m=", dec.m);
  if (regular_code)
    for (size_t i = 0; i + 1 < ls.size(); ++i)
      require(ls[i] == 1, "flat code must be (1,..,1,m), got ", shape_str(ls));

  std::int64_t total = 1;
  for (int a = 0; a < dim; ++a) total *= resolution;
  const std::int64_t out_bytes = total * 8;
  std::int64_t row_bytes = 8 * (dec.m + dim + 8);  // tape activations per evaluated point
  for (int h : dec.hidden) row_bytes += 32ll * h;
  const std::int64_t budget = eval_budget_bytes();
  const std::int64_t need = out_bytes + row_bytes + static_cast<std::int64_t>(numel(ls)) * 8;
  if (need > budget)
    fail("evaluate_field: a ", resolution, "^", dim, " grid needs at least ", need,
         " bytes of workspace but OCCTRANS_EVAL_MEM_MB grants only ", budget, " bytes");
  const std::int64_t chunk = std::clamp<std::int64_t>((budget - out_bytes) / row_bytes, 1, 32768);

  std::vector<double> vals(static_cast<size_t>(total));
  const double res = static_cast<double>(resolution);
  const std::int64_t plane = static_cast<std::int64_t>(resolution) * resolution;
  for (std::int64_t lo = 0; lo < total; lo += chunk) {
    const auto n = static_cast<int>(std::min(chunk, total - lo));
    std::vector<double> pts(static_cast<size_t>(n) * static_cast<size_t>(dim));
    for (int i = 0; i < n; ++i) {
      const std::int64_t ci = lo + i;
      if (dim == 2) {
        pts[static_cast<size_t>(i) * 2] = (static_cast<double>(ci % resolution) + 0.5) / res;
        pts[static_cast<size_t>(i) * 2 + 1] = (static_cast<double>(ci / resolution) + 0.5) / res;
      } else {
        pts[static_cast<size_t>(i) * 3] = (static_cast<double>(ci % resolution) + 0.5) / res;
        pts[static_cast<size_t>(i) * 3 + 1] =
            (static_cast<double>((ci % plane) / resolution) + 0.5) / res;
        pts[static_cast<size_t>(i) * 3 + 2] = (static_cast<double>(ci / plane) + 0.5) / res;
      }
    }
    Tape<double> tp;
    auto dv = bind_params(tp, dec_params);
    Var p = tp.constant(Array<double>({n, dim}, std::move(pts)));
    Var pred = regular_code
                   ? decode_field_regular(tp, dec, dv, tp.constant(latent.reshaped({1, dec.m})), p)
                   : decode_field(tp, dec, dv, tp.constant(latent), p);
    const Array<double> v = tp.value(pred);
    for (int i = 0; i < n; ++i) vals[static_cast<size_t>(lo + i)] = v.at(i);
  }
  return Array<double>(Shape(static_cast<size_t>(dim), resolution), std::move(vals));
}

Array<double> evaluate_field(const Checkpoint& ae, const Array<double>& latent, int resolution) {
  require(ae.has_net("decoder"), "checkpoint has no decoder net");
  const NetBundle& dec = ae.net("decoder");
  const bool regular = ae.has_net("encoder") && ae.net("encoder").spec.role == "regular-encoder";
  return evaluate_field(dec.spec, dec.params, latent, resolution, regular);
}

PointSet sample_surface_points(const TriMesh& mesh, std::int64_t count, Rng rng) {
  require(count > 0, "need a positive point count");
  require(!mesh.tris.empty(), "cannot sample points from an empty mesh");
  std::vector<double> cum(mesh.tris.size());
  double acc = 0;
  for (size_t i = 0; i < mesh.tris.size(); ++i) {
    const auto& t = mesh.tris[i];
    acc += tri_area(mesh.verts[static_cast<size_t>(t[0])], mesh.verts[static_cast<size_t>(t[1])],
                    mesh.verts[static_cast<size_t>(t[2])]);
    cum[i] = acc;
  }
  require(acc > 0, "mesh has zero total area");
  PointSet out;
  out.dim = 3;
  out.coords.reserve(static_cast<size_t>(count) * 3);
  for (std::int64_t i = 0; i < count; ++i) {
    const double r = rng.uniform() * acc;
    size_t ti = static_cast<size_t>(std::lower_bound(cum.begin(), cum.end(), r) - cum.begin());
    if (ti >= cum.size()) ti = cum.size() - 1;
    const auto& t = mesh.tris[ti];
    const auto& a = mesh.verts[static_cast<size_t>(t[0])];
    const auto& b = mesh.verts[static_cast<size_t>(t[1])];
    const auto& c = mesh.verts[static_cast<size_t>(t[2])];
    double u = rng.uniform(), w = rng.uniform();
    if (u + w > 1) {
      u = 1 - u;
      w = 1 - w;
    }
    for (int d = 0; d < 3; ++d)
      out.coords.push_back(a[d] + u * (b[d] - a[d]) + w * (c[d] - a[d]));
  }
  return out;
}

PointSet sample_contour_points(const ContourSet& contours, std::int64_t count, Rng rng) {
  require(count > 0, "need a positive point count");
  struct Seg {
    std::array<double, 2> a, b;
  };
  std::vector<Seg> segs;
  for (const Polyline& pl : contours.lines) {
    for (size_t i = 1; i < pl.pts.size(); ++i) segs.push_back({pl.pts[i - 1], pl.pts[i]});
    if (pl.closed && pl.pts.size() > 2) segs.push_back({pl.pts.back(), pl.pts.front()});
  }
  require(!segs.empty(), "cannot sample points from an empty contour set");
  std::vector<double> cum(segs.size());
  double acc = 0;
  for (size_t i = 0; i < segs.size(); ++i) {
    acc += std::sqrt(dist2(segs[i].a, segs[i].b));
    cum[i] = acc;
  }
  require(acc > 0, "contours have zero total length");
  PointSet out;
  out.dim = 2;
  out.coords.reserve(static_cast<size_t>(count) * 2);
  for (std::int64_t i = 0; i < count; ++i) {
    const double r = rng.uniform() * acc;
    size_t si = static_cast<size_t>(std::lower_bound(cum.begin(), cum.end(), r) - cum.begin());
    if (si >= cum.size()) si = cum.size() - 1;
    const double t = rng.uniform();
    out.coords.push_back(segs[si].a[0] + t * (segs[si].b[0] - segs[si].a[0]));
    out.coords.push_back(segs[si].a[1] + t * (segs[si].b[1] - segs[si].a[1]));
  }
  return out;
}

void save_obj(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write ", path);
  char line[128];
  for (const auto& p : mesh.verts) {
    std::snprintf(line, sizeof line, "v %.17g %.17g %.17g\n", p[0], p[1], p[2]);
    out << line;
  }
  for (const auto& t : mesh.tris) {
    std::snprintf(line, sizeof line, "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
    out << line;
  }
  if (!out) fail("short write to ", path);
}

void save_xyz(const PointSet& pts, const std::string& path) {
  require(pts.dim == 2 || pts.dim == 3, "point set has no dimension");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write ", path);
  char num[40];
  for (std::int64_t i = 0; i < pts.count(); ++i) {
    for (int d = 0; d < pts.dim; ++d) {
      std::snprintf(num, sizeof num, "%.17g", pts.coords[static_cast<size_t>(i * pts.dim + d)]);
      out << (d ? " " : "") << num;
    }
    out << '\n';
  }
  if (!out) fail("short write to ", path);
}

void save_svg(const ContourSet& contours, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write ", path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1 1\" "
         "width=\"512\" height=\"512\">\n";
  char num[40];
  for (const Polyline& pl : contours.lines) {
    if (pl.pts.size() < 2) continue;
    out << "  <path d=\"";
    for (size_t i = 0; i < pl.pts.size(); ++i) {
      out << (i == 0 ? "M " : " L ");
      std::snprintf(num, sizeof num, "%.8g", pl.pts[i][0]);
      out << num << ' ';
      std::snprintf(num, sizeof num, "%.8g", pl.pts[i][1]);
      out << num;
    }
    if (pl.closed) out << " Z";
    out << "\" fill=\"none\" stroke=\"black\" stroke-width=\"0.004\"/>\n";
  }
  out << "</svg>\n";
  if (!out) fail("short write to ", path);
}

}  // namespace occtrans
