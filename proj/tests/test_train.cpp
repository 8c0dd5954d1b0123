#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "occtrans/ae_train.hpp"
#include "occtrans/nets.hpp"

using namespace occtrans;
namespace fs = std::filesystem;

namespace {

std::vector<DomainShape> tiny_pool() {
  RecipeParams rp;
  rp.count = 4;
  rp.seed = 3;
  rp.extent = 32;
  auto set = generate_synthetic_pair("thick_thin", rp);
  std::vector<DomainShape> pooled = set.domain1;
  pooled.insert(pooled.end(), set.domain2.begin(), set.domain2.end());
  return pooled;
}

AeConfig tiny_cfg() {
  AeConfig cfg;
  cfg.epochs = 100;
  cfg.batch = 8;
  cfg.lr = 3e-3;
  cfg.lr_halve_epoch = 70;
  cfg.stages = {{16, 50}, {32, 50}};
  cfg.points_per_shape = 128;
  cfg.k = 2;
  cfg.m = 16;
  cfg.seed = 5;
  cfg.checkpoint_every = 20;
  return cfg;
}

std::string run_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("occtrans_tr_") + tag);
  fs::remove_all(p);
  return p.string();
}

struct CsvRow {
  int epoch;
  long long step;
  double loss, lr;
};

std::vector<CsvRow> read_loss_csv(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "epoch,step,loss,lr");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    CsvRow r;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    ss >> r.epoch >> r.step >> r.loss >> r.lr;
    rows.push_back(r);
  }
  return rows;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// trained once, shared by the slower cases
struct Fixture {
  std::vector<DomainShape> pooled;
  AeConfig cfg;
  std::string dir;
  Checkpoint ck;
};

const Fixture& fixture() {
  static Fixture f = [] {
    Fixture x;
    x.pooled = tiny_pool();
    x.cfg = tiny_cfg();
    x.dir = run_dir("fixture");
    x.ck = train_autoencoder(x.pooled, x.cfg, x.dir);
    return x;
  }();
  return f;
}

}  // namespace

TEST_CASE("recon loss hand oracles") {
  std::vector<double> p{0.5}, t{1.0}, w{2.0};
  CHECK(recon_loss(p, t, w) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> same{0.2, 0.7, 0.9};
  std::vector<double> ones{1, 1, 1};
  CHECK(recon_loss(same, same, ones) == 0.0);

  Rng rng(4);
  std::vector<double> pred(33), tgt(33), wt(33), w2(33);
  for (size_t i = 0; i < pred.size(); ++i) {
    pred[i] = rng.uniform();
    tgt[i] = rng.coin() ? 1.0 : 0.0;
    wt[i] = rng.coin() ? 2.0 : 1.0;
    w2[i] = 2.0 * wt[i];
  }
  CHECK(recon_loss(pred, tgt, w2) ==
        doctest::Approx(4.0 * recon_loss(pred, tgt, wt)).epsilon(1e-12));

  // boundary weighting can only raise the plain squared error
  std::vector<double> unit(33, 1.0);
  CHECK(recon_loss(pred, tgt, wt) >= recon_loss(pred, tgt, unit));

  // sample order does not matter
  std::vector<double> rp(pred.rbegin(), pred.rend());
  std::vector<double> rt(tgt.rbegin(), tgt.rend());
  std::vector<double> rw(wt.rbegin(), wt.rend());
  CHECK(recon_loss(rp, rt, rw) ==
        doctest::Approx(recon_loss(pred, tgt, wt)).epsilon(1e-12));

  CHECK_THROWS_AS(recon_loss({}, {}, {}), Error);
  CHECK_THROWS_AS(recon_loss(pred, tgt, unit | std::views::take(0)), Error);
}

TEST_CASE("recon loss node agrees with the plain evaluation") {
  Rng rng(9);
  int n = 257;
  std::vector<double> pred(n), tgt(n), wt(n);
  for (int i = 0; i < n; ++i) {
    pred[i] = rng.uniform();
    tgt[i] = rng.coin() ? 1.0 : 0.0;
    wt[i] = rng.coin() ? 2.0 : 1.0;
  }
  Tape<double> tp;
  Var loss = recon_loss_node(
      tp, tp.constant(Array<double>({n, 1}, std::vector<double>(pred))),
      tp.constant(Array<double>({n, 1}, std::vector<double>(tgt))),
      tp.constant(Array<double>({n, 1}, std::vector<double>(wt))));
  CHECK(tp.value(loss).item() ==
        doctest::Approx(recon_loss(pred, tgt, wt)).epsilon(1e-12));

  Tape<double> bad;
  Var a = bad.constant(Array<double>::zeros({2, 1}));
  Var b = bad.constant(Array<double>::zeros({3, 1}));
  CHECK_THROWS_AS(recon_loss_node(bad, a, b, b), Error);
}

TEST_CASE("training loss decreases and the log is well-formed") {
  const Fixture& f = fixture();
  auto rows = read_loss_csv(f.dir + "/ae_loss.csv");
  REQUIRE(static_cast<int>(rows.size()) == f.cfg.epochs);  // one step/epoch

  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].step == static_cast<long long>(i) + 1);
    CHECK(rows[i].lr ==
          (rows[i].epoch >= f.cfg.lr_halve_epoch ? f.cfg.lr / 2 : f.cfg.lr));
  }

  int w = static_cast<int>(rows.size()) / 4;
  std::vector<double> means;
  for (int s = 0; s + w <= static_cast<int>(rows.size()); s += w) {
    double acc = 0;
    for (int i = s; i < s + w; ++i) acc += rows[static_cast<size_t>(i)].loss;
    means.push_back(acc / w);
  }
  for (size_t i = 1; i < means.size(); ++i)
    CHECK(means[i] <= means[i - 1] * 1.2);  // slack for the stage switch
  CHECK(means.back() < 0.75 * means.front());

  CHECK(f.ck.meta.at("role") == "autoencoder");
  CHECK(f.ck.meta.at("epoch_next").get<int>() == f.cfg.epochs);
  Checkpoint disk = load_checkpoint(f.dir + "/ae.ckpt");
  CHECK(disk.meta.at("global_step").get<long long>() == rows.back().step);
}

TEST_CASE("same seed reproduces the run; domain labels never enter") {
  auto pooled = tiny_pool();
  AeConfig cfg = tiny_cfg();
  cfg.epochs = 12;
  cfg.lr_halve_epoch = 8;
  cfg.stages = {{16, 6}, {32, 6}};
  cfg.checkpoint_every = 6;

  std::string d1 = run_dir("det1"), d2 = run_dir("det2"), d3 = run_dir("det3");
  train_autoencoder(pooled, cfg, d1);
  train_autoencoder(pooled, cfg, d2);
  CHECK(file_bytes(d1 + "/ae_loss.csv") == file_bytes(d2 + "/ae_loss.csv"));
  CHECK(file_bytes(d1 + "/ae.ckpt") == file_bytes(d2 + "/ae.ckpt"));

  // renaming shapes (the only trace of domain membership) changes nothing
  auto relabeled = pooled;
  for (size_t i = 0; i < relabeled.size(); ++i)
    relabeled[i].name = "shape_" + std::to_string(i);
  train_autoencoder(relabeled, cfg, d3);
  CHECK(file_bytes(d1 + "/ae_loss.csv") == file_bytes(d3 + "/ae_loss.csv"));
}

TEST_CASE("resume continues counters, schedule and trajectory exactly") {
  auto pooled = tiny_pool();
  AeConfig cfg = tiny_cfg();
  cfg.epochs = 12;
  cfg.lr_halve_epoch = 8;
  cfg.stages = {{16, 6}, {32, 6}};
  cfg.checkpoint_every = 6;

  std::string straight = run_dir("straight"), split = run_dir("split");
  train_autoencoder(pooled, cfg, straight);

  AeConfig first = cfg;
  first.epochs = 6;
  train_autoencoder(pooled, first, split);
  AeConfig second = cfg;
  second.resume_from = split + "/ae.ckpt";
  train_autoencoder(pooled, second, split);

  CHECK(file_bytes(straight + "/ae_loss.csv") ==
        file_bytes(split + "/ae_loss.csv"));
  auto rows = read_loss_csv(split + "/ae_loss.csv");
  CHECK(rows.size() == 12);
  CHECK(rows.back().step == 12);
}

TEST_CASE("non-finite loss aborts and names the step") {
  auto pooled = tiny_pool();
  AeConfig cfg = tiny_cfg();
  cfg.epochs = 4;
  cfg.checkpoint_every = 2;
  std::string dir = run_dir("nan");
  train_autoencoder(pooled, cfg, dir);

  Checkpoint ck = load_checkpoint(dir + "/ae.ckpt");
  auto& p0 = ck.nets[0].params[0];
  std::vector<double> poisoned(p0.data().begin(), p0.data().end());
  poisoned[0] = std::numeric_limits<double>::quiet_NaN();
  ck.nets[0].params[0] = Array<double>(p0.shape(), std::move(poisoned));
  save_checkpoint(ck, dir + "/ae.ckpt");

  AeConfig more = cfg;
  more.epochs = 8;
  more.resume_from = dir + "/ae.ckpt";
  try {
    train_autoencoder(pooled, more, dir);
    FAIL("expected divergence abort");
  } catch (const NumericError& e) {
    std::string msg = e.what();
    CHECK(msg.find("diverged") != std::string::npos);
    CHECK(msg.find("step") != std::string::npos);
  }
  CHECK(fs::exists(dir + "/ae.ckpt"));  // snapshot not clobbered
}

TEST_CASE("encode_dataset writes one idempotent latent per matching shape") {
  const Fixture& f = fixture();
  std::string lat1 = run_dir("lat1");
  auto paths = encode_dataset(f.ck, f.pooled, lat1);
  REQUIRE(paths.size() == f.pooled.size());

  std::string name;
  Array<double> lat = load_latent(paths[0], &name);
  CHECK(name == "thick_000");
  CHECK(lat.shape() == Shape{f.cfg.k, f.cfg.k, f.cfg.m});

  std::vector<std::string> before;
  for (const auto& p : paths) before.push_back(file_bytes(p));
  auto again = encode_dataset(f.ck, f.pooled, lat1);
  for (size_t i = 0; i < again.size(); ++i)
    CHECK(file_bytes(again[i]) == before[i]);

  // an extent mismatch skips that shape but the run continues
  auto mixed = f.pooled;
  OccupancyGrid small;
  small.dims = {16, 16};
  small.cells.assign(256, 1);
  mixed.insert(mixed.begin() + 2, {"odd_one.pgm", small});
  std::string lat2 = run_dir("lat2");
  auto partial = encode_dataset(f.ck, mixed, lat2);
  CHECK(partial.size() == f.pooled.size());
  CHECK(!fs::exists(fs::path(lat2) / "odd_one.lat"));
}

TEST_CASE("regular encoder variant trains and encodes flat codes") {
  auto pooled = tiny_pool();
  AeConfig cfg = tiny_cfg();
  cfg.epochs = 4;
  cfg.checkpoint_every = 4;
  cfg.regular_encoder = true;
  std::string dir = run_dir("reg");
  Checkpoint ck = train_autoencoder(pooled, cfg, dir);
  CHECK(ck.meta.at("encoder_kind") == "regular");

  auto paths = encode_dataset(ck, pooled, dir + "/lat");
  REQUIRE(!paths.empty());
  Array<double> lat = load_latent(paths[0]);
  CHECK(lat.shape() == Shape{1, 1, cfg.m});
}

TEST_CASE("config json round-trips") {
  AeConfig cfg = tiny_cfg();
  cfg.precision = "f64";
  cfg.regular_encoder = true;
  AeConfig back = ae_config_from_json(ae_config_to_json(cfg));
  CHECK(ae_config_to_json(back) == ae_config_to_json(cfg));
  CHECK(back.stages.size() == cfg.stages.size());
  CHECK(back.stages[1].resolution == cfg.stages[1].resolution);
  CHECK(back.lr == cfg.lr);
}
