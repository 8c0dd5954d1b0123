#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "occtrans/ae_train.hpp"
#include "occtrans/extract.hpp"
#include "occtrans/metrics.hpp"
#include "occtrans/translator.hpp"

namespace fs = std::filesystem;
using namespace occtrans;
using nlohmann::json;

namespace {

// Bad arguments and bad configs exit 2. Library Error exits 3 (I/O, bad data)
// and NumericError exits 4 (NaN abort), mapped in main.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& m) : std::runtime_error(m) {}
};

std::string recipes_line() {
  std::string s;
  for (const auto& r : known_recipes()) s += (s.empty() ? "" : ", ") + r;
  return s;
}

std::string hex64(std::uint64_t v) {
  char b[17];
  std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(v));
  return b;
}

std::string git_describe() {
  FILE* p = ::popen("git describe --always --dirty 2>/dev/null", "r");
  if (!p) return "unknown";
  char buf[256];
  std::string out;
  while (std::fgets(buf, sizeof buf, p)) out += buf;
  ::pclose(p);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

struct RunTimer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void write_json_file(const json& j, const std::string& path) {
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write ", path);
  out << j.dump(2) << "\n";
  require(out.good(), "short write to ", path);
}

json make_run_record(const std::string& command, const json& config, std::uint64_t seed,
                     double wall_seconds, const std::vector<std::string>& outputs) {
  return {{"command", command},
          {"config", config},
          {"config_hash", hex64(fnv1a64(config.dump()))},
          {"seed", seed},
          {"git", git_describe()},
          {"wall_seconds", wall_seconds},
          {"outputs", outputs}};
}

void write_run_record(const std::string& dir, const std::string& command, const json& config,
                      std::uint64_t seed, double wall_seconds,
                      const std::vector<std::string>& outputs) {
  std::string name = command;
  for (auto& c : name) {
    if (c == '-') c = '_';
  }
  write_json_file(make_run_record(command, config, seed, wall_seconds, outputs),
                  (fs::path(dir) / (name + "_run.json")).string());
}

// ---------------------------------------------------------------- run config

struct RunConfig {
  std::string experiment = "run";
  int dims = 2;
  int n = 256;
  int k = 2;
  int m = 64;
  std::string precision = "f32";
  bool deterministic = true;
  std::uint64_t seed = 1;
  std::string output_root;
  std::string data_recipe, data_dir;
  int data_count = 16;
  int data_extent = 0;
  double train_fraction = 0.75;
  AeConfig ae;
  TransConfig tr;
};

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (ok) continue;
    for (const char* top : {"seed", "precision", "k", "m", "n"})
      if (it.key() == top && where != "top level")
        throw UsageError("config: '" + it.key() + "' is set at the top level, not inside " +
                         where);
    throw UsageError("config: unknown key '" + it.key() + "' in " + where);
  }
}

// stages of stride-2 convolutions taking extent n down to k, or -1
int encoder_depth(int n, int k) {
  if (n <= 0 || k <= 0 || n % k != 0) return -1;
  int q = n / k, d = 0;
  while (q % 2 == 0) {
    q /= 2;
    ++d;
  }
  return (q == 1 && d >= 1) ? d : -1;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot read config: ", path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError("config: top level must be an object");
  check_keys(j, "top level",
             {"experiment", "dims", "n", "k", "m", "precision", "deterministic", "seed",
              "output_root", "data", "ae", "translator"});

  RunConfig c;
  try {
    c.experiment = j.value("experiment", c.experiment);
    c.dims = j.value("dims", c.dims);
    c.n = j.value("n", c.n);
    c.k = j.value("k", c.k);
    c.m = j.value("m", c.m);
    c.precision = j.value("precision", c.precision);
    c.deterministic = j.value("deterministic", c.deterministic);
    c.seed = j.value("seed", c.seed);
    c.output_root = j.value("output_root", std::string());

    const json data = j.value("data", json::object());
    check_keys(data, "data", {"recipe", "dir", "count", "extent", "train_fraction"});
    c.data_recipe = data.value("recipe", std::string());
    c.data_dir = data.value("dir", std::string());
    c.data_count = data.value("count", c.data_count);
    c.data_extent = data.value("extent", 0);
    c.train_fraction = data.value("train_fraction", c.train_fraction);

    const json ae = j.value("ae", json::object());
    check_keys(ae, "ae",
               {"epochs", "batch", "lr", "lr_halve_epoch", "stages", "points_per_shape",
                "regular_encoder", "checkpoint_every", "resume_from"});
    c.ae = ae_config_from_json(ae);
    c.ae.resume_from = ae.value("resume_from", std::string());

    const json tr = j.value("translator", json::object());
    check_keys(tr, "translator",
               {"epochs", "batch", "lr", "lr_halve_every", "lr_floor", "alpha", "beta", "gamma",
                "n_critic", "checkpoint_every"});
    c.tr = trans_config_from_json(tr);
  } catch (const json::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }

  // one seed and one precision govern the whole run
  c.ae.seed = c.tr.seed = c.seed;
  c.ae.precision = c.precision;
  c.ae.k = c.k;
  c.ae.m = c.m;

  if (c.dims != 2 && c.dims != 3) throw UsageError("config: dims must be 2 or 3");
  if (c.precision != "f32" && c.precision != "f64")
    throw UsageError("config: precision must be f32 or f64");
  if (c.m <= 0) throw UsageError("config: m must be positive");
  const int depth = encoder_depth(c.n, c.k);
  if (depth < 0)
    throw UsageError("config: no stride-2 encoder takes n=" + std::to_string(c.n) +
                     " to k=" + std::to_string(c.k) + " (need n = k * 2^depth)");
  if (c.ae.regular_encoder) {
    if (depth < 4)
      throw UsageError("config: regular encoder needs at least 4 stages (n/k >= 16), got n/k=" +
                       std::to_string(c.n / c.k));
    if (c.m % 4 != 0) throw UsageError("config: regular encoder needs m divisible by 4");
  }
  for (const AeStage& s : c.ae.stages)
    if (s.resolution < 2 || c.n % s.resolution != 0)
      throw UsageError("config: stage resolution " + std::to_string(s.resolution) +
                       " does not divide n=" + std::to_string(c.n));
  if (c.output_root.empty()) throw UsageError("config: output_root is required");

  const bool has_recipe = !c.data_recipe.empty(), has_dir = !c.data_dir.empty();
  if (has_recipe == has_dir)
    throw UsageError("config: data needs exactly one of 'recipe' or 'dir'");
  if (has_recipe) {
    const auto known = known_recipes();
    if (std::find(known.begin(), known.end(), c.data_recipe) == known.end())
      throw UsageError("unknown recipe '" + c.data_recipe +
                       "'; known recipes: " + recipes_line());
    if (recipe_is_3d(c.data_recipe) != (c.dims == 3))
      throw UsageError("config: recipe '" + c.data_recipe + "' does not match dims=" +
                       std::to_string(c.dims));
    if (c.data_count < 2) throw UsageError("config: data count must be at least 2");
    if (c.data_extent == 0) c.data_extent = c.n;
    if (c.data_extent != c.n)
      throw UsageError("config: data extent " + std::to_string(c.data_extent) +
                       " must match n=" + std::to_string(c.n));
    if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
      throw UsageError("config: train_fraction must be in (0,1)");
  }
  return c;
}

json run_config_json(const RunConfig& c) {
  json data;
  if (!c.data_recipe.empty())
    data = {{"recipe", c.data_recipe},
            {"count", c.data_count},
            {"extent", c.data_extent},
            {"train_fraction", c.train_fraction}};
  else
    data = {{"dir", c.data_dir}};
  json ae = ae_config_to_json(c.ae);
  if (!c.ae.resume_from.empty()) ae["resume_from"] = c.ae.resume_from;
  return {{"experiment", c.experiment},
          {"dims", c.dims},
          {"n", c.n},
          {"k", c.k},
          {"m", c.m},
          {"precision", c.precision},
          {"deterministic", c.deterministic},
          {"seed", c.seed},
          {"output_root", c.output_root},
          {"data", data},
          {"ae", ae},
          {"translator", trans_config_to_json(c.tr)}};
}

// ------------------------------------------------------------------ data I/O

bool is_grid_file(const fs::path& p) {
  const std::string e = p.extension().string();
  return e == ".pgm" || e == ".rgrid" || e == ".rg";
}

OccupancyGrid load_grid_path(const fs::path& p) {
  require(fs::exists(p), "no such file: ", p.string());
  return p.extension() == ".pgm" ? load_pgm(p.string()) : load_rawgrid(p.string());
}

std::vector<std::string> read_name_list(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot read split file: ", path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::string stem_of(const std::string& name) {
  const size_t dot = name.find_last_of('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

struct PairData {
  std::vector<DomainShape> train1, test1, train2, test2;
};

PairData load_pair_dir(const std::string& dir, int dims) {
  require(fs::is_directory(dir), "not a dataset directory: ", dir);
  auto load = [&](const std::string& sub, const std::string& split) {
    const std::string d = (fs::path(dir) / sub).string();
    const std::string s = (fs::path(dir) / "splits" / split).string();
    return dims == 2 ? load_image_domain(d, s) : load_voxel_domain(d, s);
  };
  PairData p;
  p.train1 = load("domain1", "domain1_train.txt");
  p.test1 = load("domain1", "domain1_test.txt");
  p.train2 = load("domain2", "domain2_train.txt");
  p.test2 = load("domain2", "domain2_test.txt");
  return p;
}

std::vector<DomainShape> select_shapes(const std::vector<DomainShape>& all,
                                       const std::vector<std::string>& names) {
  std::vector<DomainShape> out;
  for (const auto& n : names) {
    auto it = std::find_if(all.begin(), all.end(),
                           [&](const DomainShape& s) { return s.name == n; });
    require(it != all.end(), "split references unknown shape: ", n);
    out.push_back(*it);
  }
  std::sort(out.begin(), out.end(),
            [](const DomainShape& a, const DomainShape& b) { return a.name < b.name; });
  return out;
}

PairData load_config_data(const RunConfig& c) {
  if (!c.data_dir.empty()) return load_pair_dir(c.data_dir, c.dims);
  RecipeParams rp;
  rp.count = c.data_count;
  rp.extent = c.data_extent;
  rp.seed = c.seed;
  rp.train_fraction = c.train_fraction;
  const DomainPairSet set = generate_synthetic_pair(c.data_recipe, rp);
  PairData p;
  p.train1 = select_shapes(set.domain1, set.train1);
  p.test1 = select_shapes(set.domain1, set.test1);
  p.train2 = select_shapes(set.domain2, set.train2);
  p.test2 = select_shapes(set.domain2, set.test2);
  return p;
}

std::uint64_t meta_seed(const Checkpoint& ck) {
  if (ck.meta.contains("config") && ck.meta["config"].contains("seed"))
    return ck.meta["config"]["seed"].get<std::uint64_t>();
  return 0;
}

Array<double> grid_as_field(const OccupancyGrid& g) {
  g.validate();
  std::vector<double> vals(g.cells.size());
  for (size_t i = 0; i < g.cells.size(); ++i) vals[i] = g.cells[i] ? 1.0 : 0.0;
  return Array<double>(g.dims, std::move(vals));
}

// ----------------------------------------------------------------- commands

struct GenDataOpts {
  std::string recipe, out;
  std::uint64_t seed = 1;
  int count = 16, extent = 0;
  double train_fraction = 0.75;
};

void cmd_gen_data(GenDataOpts o) {
  const auto known = known_recipes();
  if (std::find(known.begin(), known.end(), o.recipe) == known.end())
    throw UsageError("unknown recipe '" + o.recipe + "'; known recipes: " + recipes_line());
  if (o.count < 2) throw UsageError("--count must be at least 2");
  if (o.extent < 0) throw UsageError("--extent must be non-negative");
  if (!(o.train_fraction > 0.0 && o.train_fraction < 1.0))
    throw UsageError("--train-fraction must be in (0,1)");
  while (o.out.size() > 1 && o.out.back() == '/') o.out.pop_back();

  RunTimer t;
  RecipeParams rp;
  rp.count = o.count;
  rp.extent = o.extent;
  rp.seed = o.seed;
  rp.train_fraction = o.train_fraction;
  const DomainPairSet set = generate_synthetic_pair(o.recipe, rp);
  write_domain_pair(set, o.out);

  // record sits next to the tree, not inside it: reruns with one seed must
  // leave the tree byte-identical, and wall time would break that
  const json cfg{{"recipe", o.recipe},      {"count", o.count},
                 {"extent", o.extent},      {"seed", o.seed},
                 {"train_fraction", o.train_fraction}, {"out", o.out}};
  write_json_file(make_run_record("gen-data", cfg, o.seed, t.seconds(), {o.out}),
                  o.out + ".run.json");
  std::cout << "wrote " << set.domain1.size() + set.domain2.size() << " shapes under "
            << o.out << "\n";
}

void cmd_train_ae(const std::string& config_path) {
  const RunConfig c = load_run_config(config_path);
  RunTimer t;
  PairData d = load_config_data(c);
  std::vector<DomainShape> pooled = std::move(d.train1);
  pooled.insert(pooled.end(), d.train2.begin(), d.train2.end());
  for (const auto& s : pooled)
    require(s.grid.dims[0] == c.n, "shape ", s.name, " has extent ", s.grid.dims[0],
            ", config says n=", c.n);

  const std::string out = (fs::path(c.output_root) / "ae").string();
  train_autoencoder(pooled, c.ae, out);
  write_run_record(out, "train-ae", run_config_json(c), c.seed, t.seconds(),
                   {out + "/ae.ckpt", out + "/ae_loss.csv"});
  std::cout << "trained autoencoder on " << pooled.size() << " shapes -> " << out
            << "/ae.ckpt\n";
}

void cmd_encode(const std::string& ae_path, const std::string& data_dir,
                const std::string& out) {
  const Checkpoint ck = load_checkpoint(ae_path);
  require(ck.has_net("encoder") && ck.has_net("decoder"),
          "not an autoencoder checkpoint: ", ae_path);
  RunTimer t;
  PairData d = load_pair_dir(data_dir, ck.net("encoder").spec.dim);

  std::vector<std::string> written;
  auto run = [&](std::vector<DomainShape> tr, std::vector<DomainShape> te,
                 const std::string& sub) {
    tr.insert(tr.end(), te.begin(), te.end());
    auto paths = encode_dataset(ck, tr, (fs::path(out) / sub).string());
    written.insert(written.end(), paths.begin(), paths.end());
  };
  run(std::move(d.train1), std::move(d.test1), "domain1");
  run(std::move(d.train2), std::move(d.test2), "domain2");

  // carry the split lists (and manifest, if any) so later stages can find them
  fs::create_directories(fs::path(out) / "splits");
  for (const char* f : {"domain1_train.txt", "domain1_test.txt", "domain2_train.txt",
                        "domain2_test.txt"})
    fs::copy_file(fs::path(data_dir) / "splits" / f, fs::path(out) / "splits" / f,
                  fs::copy_options::overwrite_existing);
  if (fs::exists(fs::path(data_dir) / "manifest.json"))
    fs::copy_file(fs::path(data_dir) / "manifest.json", fs::path(out) / "manifest.json",
                  fs::copy_options::overwrite_existing);

  write_run_record(out, "encode",
                   json{{"ae", ae_path}, {"data", data_dir}, {"out", out}}, meta_seed(ck),
                   t.seconds(), written);
  std::cout << "encoded " << written.size() << " shapes -> " << out << "\n";
}

void cmd_train_translate(const std::string& config_path, const std::string& ae_path,
                         const std::string& latents_dir) {
  const RunConfig c = load_run_config(config_path);
  const Checkpoint ae = load_checkpoint(ae_path);
  RunTimer t;

  auto load_lats = [&](const std::string& domain) {
    const auto names = read_name_list(
        (fs::path(latents_dir) / "splits" / ("domain" + domain + "_train.txt")).string());
    require(!names.empty(), "no training shapes listed for domain ", domain);
    std::vector<Array<double>> lats;
    for (const auto& n : names)
      lats.push_back(load_latent(
          (fs::path(latents_dir) / ("domain" + domain) / (stem_of(n) + ".lat")).string()));
    return lats;
  };
  const auto lat1 = load_lats("1");
  const auto lat2 = load_lats("2");

  const std::string out = (fs::path(c.output_root) / "translator").string();
  train_translator(lat1, lat2, ae, c.tr, out);
  write_run_record(out, "train-translate", run_config_json(c), c.seed, t.seconds(),
                   {out + "/translator.ckpt", out + "/translator_loss.csv"});
  std::cout << "trained translator on " << lat1.size() << "+" << lat2.size()
            << " latents -> " << out << "/translator.ckpt\n";
}

struct TranslateOpts {
  std::string state, ae, in, direction = "1to2", out;
  int res = 0;
  bool no_svg = false;
};

void cmd_translate(TranslateOpts o) {
  if (o.direction != "1to2" && o.direction != "2to1")
    throw UsageError("--direction must be 1to2 or 2to1");
  const Checkpoint tr = load_checkpoint(o.state);
  const Checkpoint ae = load_checkpoint(o.ae);
  require(ae.has_net("encoder") && ae.has_net("decoder"),
          "not an autoencoder checkpoint: ", o.ae);
  if (o.res == 0) o.res = ae.net("encoder").spec.n;
  if (o.res < 2) throw UsageError("--res must be at least 2");

  std::vector<fs::path> inputs;
  if (fs::is_directory(o.in)) {
    for (const auto& e : fs::directory_iterator(o.in))
      if (e.is_regular_file() && is_grid_file(e.path())) inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());
    require(!inputs.empty(), "no grid files under ", o.in);
  } else {
    require(fs::exists(o.in), "no such input: ", o.in);
    inputs.push_back(o.in);
  }

  RunTimer t;
  fs::create_directories(o.out);
  std::vector<std::string> written;
  for (const fs::path& p : inputs) {
    const OccupancyGrid g = load_grid_path(p);
    TranslateResult r = translate(tr, ae, g, o.direction, o.res);
    const std::string stem = stem_of(p.filename().string()) + "_" + o.direction;
    if (r.grid.rank() == 2) {
      const std::string gp = (fs::path(o.out) / (stem + ".pgm")).string();
      save_pgm(r.grid, gp);
      written.push_back(gp);
      if (!o.no_svg) {
        const Array<double> field = evaluate_field(ae, r.latent, o.res);
        const std::string sp = (fs::path(o.out) / (stem + ".svg")).string();
        save_svg(marching_squares(field, 0.5, true), sp);
        written.push_back(sp);
      }
    } else {
      const std::string gp = (fs::path(o.out) / (stem + ".rgrid")).string();
      save_rawgrid(r.grid, gp);
      written.push_back(gp);
    }
  }

  write_run_record(o.out, "translate",
                   json{{"state", o.state},
                        {"ae", o.ae},
                        {"in", o.in},
                        {"direction", o.direction},
                        {"res", o.res}},
                   meta_seed(tr), t.seconds(), written);
  std::cout << "translated " << inputs.size() << " shape" << (inputs.size() == 1 ? "" : "s")
            << " (" << o.direction << ") -> " << o.out << "\n";
}

struct ExtractOpts {
  std::string field, translate_output, ae, out;
  double iso = 0.5;
  int res = 0;
  std::uint64_t seed = 1;
};

void cmd_extract(ExtractOpts o) {
  if (o.field.empty() == o.translate_output.empty())
    throw UsageError("need exactly one of --field or --translate-output");
  if (o.out.empty()) throw UsageError("--out is required");

  std::optional<Array<double>> field;
  if (!o.field.empty()) {
    if (o.ae.empty()) throw UsageError("--field needs --ae to decode the latent");
    const Checkpoint ae = load_checkpoint(o.ae);
    if (o.res == 0) o.res = ae.net("encoder").spec.n;
    if (o.res < 2) throw UsageError("--res must be at least 2");
    field = evaluate_field(ae, load_latent(o.field), o.res);
  } else {
    field = grid_as_field(load_grid_path(o.translate_output));
  }
  const int rank = static_cast<int>(field->shape().size());

  RunTimer t;
  const std::string ext = fs::path(o.out).extension().string();
  std::string note;
  if (ext == ".svg") {
    if (rank != 2) throw UsageError("--out .svg needs a 2D field");
    const ContourSet cs = marching_squares(*field, o.iso, true);
    save_svg(cs, o.out);
    note = std::to_string(cs.lines.size()) + " contour(s)";
  } else if (ext == ".obj") {
    if (rank != 3) throw UsageError("--out .obj needs a 3D field");
    const TriMesh mesh = marching_cubes(*field, o.iso, true);
    save_obj(mesh, o.out);
    note = std::to_string(mesh.verts.size()) + " vertices, " +
           std::to_string(mesh.tris.size()) + " triangles";
  } else if (ext == ".xyz") {
    Rng rng = Rng(o.seed).substream("extract/pts");
    const PointSet pts =
        rank == 2 ? sample_contour_points(marching_squares(*field, o.iso, true),
                                          kDefaultSurfacePoints, rng)
                  : sample_surface_points(marching_cubes(*field, o.iso, true),
                                          kDefaultSurfacePoints, rng);
    save_xyz(pts, o.out);
    note = std::to_string(pts.count()) + " points";
  } else {
    throw UsageError("--out must end in .svg, .obj or .xyz");
  }

  const std::string dir = fs::path(o.out).has_parent_path()
                              ? fs::path(o.out).parent_path().string()
                              : std::string(".");
  write_run_record(dir, "extract",
                   json{{"field", o.field},
                        {"translate_output", o.translate_output},
                        {"ae", o.ae},
                        {"iso", o.iso},
                        {"res", o.res},
                        {"out", o.out}},
                   o.seed, t.seconds(), {o.out});
  std::cout << "extracted " << note << " -> " << o.out << "\n";
}

struct EvalOpts {
  std::string outputs, targets, metrics = "mse,iou", out = "eval_report";
};

void cmd_eval(EvalOpts o) {
  std::vector<std::string> metrics;
  std::string cur;
  for (char c : o.metrics + ",") {
    if (c == ',') {
      if (!cur.empty()) metrics.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (metrics.empty()) throw UsageError("--metrics lists no metrics");
  for (const auto& m : metrics)
    if (m != "mse" && m != "iou" && m != "chamfer")
      throw UsageError("unknown metric '" + m + "' (want mse, iou, chamfer)");

  RunTimer t;
  const EvalReport rep = evaluate_translation_run(o.outputs, o.targets, metrics);
  fs::create_directories(o.out);
  save_report_csv(rep, (fs::path(o.out) / "report.csv").string());
  write_json_file(report_json(rep), (fs::path(o.out) / "report.json").string());
  std::vector<std::string> outputs{(fs::path(o.out) / "report.csv").string(),
                                   (fs::path(o.out) / "report.json").string()};

  // side-by-side sheet of evaluated 2D outputs, best effort
  try {
    std::vector<OccupancyGrid> tiles;
    std::string last;
    for (const ShapeRecord& r : rep.records) {
      if (r.id == last || tiles.size() >= 64) continue;
      last = r.id;
      OccupancyGrid g = load_grid_path(fs::path(o.outputs) / r.id);
      if (g.rank() == 2) tiles.push_back(std::move(g));
    }
    if (!tiles.empty()) {
      const std::string sheet = (fs::path(o.out) / "outputs_sheet.pgm").string();
      save_contact_sheet(tiles, 8, sheet);
      outputs.push_back(sheet);
    }
  } catch (const Error&) {
  }

  write_run_record(o.out, "eval",
                   json{{"outputs", o.outputs}, {"targets", o.targets}, {"metrics", metrics}},
                   1, t.seconds(), outputs);

  char num[40];
  for (const auto& [key, v] : rep.aggregates) {
    std::snprintf(num, sizeof num, "%.17g", v);
    std::cout << key << " = " << num << "\n";
  }
  for (const auto& u : rep.unmatched) std::cerr << "unmatched: " << u << "\n";
  for (const auto& i : rep.issues) std::cerr << "issue: " << i << "\n";
  std::cout << "evaluated " << rep.records.size() << " records -> " << o.out << "\n";
}

struct RetrieveOpts {
  std::string query, gallery, metric = "iou", out;
};

void cmd_retrieve(RetrieveOpts o) {
  if (o.metric != "iou" && o.metric != "mse")
    throw UsageError("--metric must be iou or mse");
  RunTimer t;
  const OccupancyGrid q = load_grid_path(o.query);
  require(fs::is_directory(o.gallery), "not a directory: ", o.gallery);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(o.gallery))
    if (e.is_regular_file() && is_grid_file(e.path()))
      names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  std::vector<OccupancyGrid> gallery;
  for (const auto& n : names) gallery.push_back(load_grid_path(fs::path(o.gallery) / n));

  const size_t idx = retrieve_nearest(q, gallery, o.metric);
  const double value = o.metric == "iou" ? iou(q, gallery[idx]) : mse(q, gallery[idx]);
  std::cout << idx << " " << names[idx] << " " << value << "\n";

  if (!o.out.empty()) {
    const json result{{"query", o.query}, {"gallery", o.gallery}, {"metric", o.metric},
                      {"index", idx},     {"name", names[idx]},   {"value", value}};
    write_json_file(result, o.out);
    const std::string dir = fs::path(o.out).has_parent_path()
                                ? fs::path(o.out).parent_path().string()
                                : std::string(".");
    write_run_record(dir, "retrieve", result, 0, t.seconds(), {o.out});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"occupancy-grid shape translation pipeline"};
  app.require_subcommand(1);

  GenDataOpts gd;
  auto* c_gd = app.add_subcommand("gen-data", "generate a synthetic two-domain dataset");
  c_gd->add_option("--recipe", gd.recipe, "dataset recipe name")->required();
  c_gd->add_option("--out", gd.out, "output directory")->required();
  c_gd->add_option("--seed", gd.seed, "generator seed")->capture_default_str();
  c_gd->add_option("--count", gd.count, "shapes per domain")->capture_default_str();
  c_gd->add_option("--extent", gd.extent, "raster extent (0 = recipe default)")
      ->capture_default_str();
  c_gd->add_option("--train-fraction", gd.train_fraction, "train split fraction")
      ->capture_default_str();
  c_gd->callback([&] { cmd_gen_data(gd); });

  std::string ta_config;
  auto* c_ta = app.add_subcommand("train-ae", "train the autoencoder from a run config");
  c_ta->add_option("--config", ta_config, "run config JSON")->required();
  c_ta->callback([&] { cmd_train_ae(ta_config); });

  std::string en_ae, en_data, en_out;
  auto* c_en = app.add_subcommand("encode", "encode a dataset into latent grids");
  c_en->add_option("--ae", en_ae, "autoencoder checkpoint")->required();
  c_en->add_option("--data", en_data, "dataset directory (gen-data layout)")->required();
  c_en->add_option("--out", en_out, "latent output directory")->required();
  c_en->callback([&] { cmd_encode(en_ae, en_data, en_out); });

  std::string tt_config, tt_ae, tt_latents;
  auto* c_tt = app.add_subcommand("train-translate", "train the latent translator");
  c_tt->add_option("--config", tt_config, "run config JSON")->required();
  c_tt->add_option("--ae", tt_ae, "autoencoder checkpoint")->required();
  c_tt->add_option("--latents", tt_latents, "encoded latents directory")->required();
  c_tt->callback([&] { cmd_train_translate(tt_config, tt_ae, tt_latents); });

  TranslateOpts tl;
  auto* c_tl = app.add_subcommand("translate", "translate shapes across domains");
  c_tl->add_option("--state", tl.state, "translator checkpoint")->required();
  c_tl->add_option("--ae", tl.ae, "autoencoder checkpoint")->required();
  c_tl->add_option("--in", tl.in, "input grid file or directory")->required();
  c_tl->add_option("--direction", tl.direction, "1to2 or 2to1")->capture_default_str();
  c_tl->add_option("--res", tl.res, "output resolution (0 = encoder extent)")
      ->capture_default_str();
  c_tl->add_option("--out", tl.out, "output directory")->required();
  c_tl->add_flag("--no-svg", tl.no_svg, "skip contour SVGs for 2D outputs");
  c_tl->callback([&] { cmd_translate(tl); });

  ExtractOpts ex;
  auto* c_ex = app.add_subcommand("extract", "extract contours or meshes from a field");
  c_ex->add_option("--field", ex.field, "latent file to decode (needs --ae)");
  c_ex->add_option("--translate-output", ex.translate_output, "grid file to trace");
  c_ex->add_option("--ae", ex.ae, "autoencoder checkpoint for --field");
  c_ex->add_option("--res", ex.res, "decode resolution (0 = encoder extent)")
      ->capture_default_str();
  c_ex->add_option("--iso", ex.iso, "iso level")->capture_default_str();
  c_ex->add_option("--seed", ex.seed, "sampling seed for .xyz output")->capture_default_str();
  c_ex->add_option("--out", ex.out, "output path (.svg, .obj or .xyz)")->required();
  c_ex->callback([&] { cmd_extract(ex); });

  EvalOpts ev;
  auto* c_ev = app.add_subcommand("eval", "score translated outputs against targets");
  c_ev->add_option("--outputs", ev.outputs, "translated grids directory")->required();
  c_ev->add_option("--targets", ev.targets, "reference grids directory")->required();
  c_ev->add_option("--metrics", ev.metrics, "comma list of mse, iou, chamfer")
      ->capture_default_str();
  c_ev->add_option("--out", ev.out, "report directory")->capture_default_str();
  c_ev->callback([&] { cmd_eval(ev); });

  RetrieveOpts rt;
  auto* c_rt = app.add_subcommand("retrieve", "find the nearest gallery shape");
  c_rt->add_option("--query", rt.query, "query grid file")->required();
  c_rt->add_option("--gallery", rt.gallery, "gallery directory")->required();
  c_rt->add_option("--metric", rt.metric, "iou or mse")->capture_default_str();
  c_rt->add_option("--out", rt.out, "optional result JSON path");
  c_rt->callback([&] { cmd_retrieve(rt); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
