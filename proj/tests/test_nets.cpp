#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "occtrans/checkpoint.hpp"
#include "occtrans/adam.hpp"
#include "occtrans/nets.hpp"

using namespace occtrans;

namespace {

Array<double> rand_array(Rng& rng, Shape s, double lo = -1, double hi = 1) {
  std::vector<double> d(static_cast<size_t>(numel(s)));
  for (auto& v : d) v = rng.uniform(lo, hi);
  return Array<double>(std::move(s), std::move(d));
}

std::vector<Array<double>> zero_params(const NetSpec& s) {
  std::vector<Array<double>> out;
  for (const Shape& sh : param_shapes(s)) out.push_back(Array<double>::zeros(sh));
  return out;
}

}  // namespace

TEST_CASE("encoder output shapes") {
  Rng rng(1);
  {  // paper-scale spec: 256 -> 2x2x64
    auto spec = make_encoder_spec(2, 256, 2, 64);
    CHECK(spec.depth() == 7);
    auto params = init_params<double>(spec, rng.substream("init"));
    Tape<double> tp;
    Var x = tp.input(Array<double>::zeros({1, 256, 256, 1}));
    Var z = net_encode(tp, spec, bind_params(tp, params), x);
    CHECK(same_shape(tp.shape(z), Shape{1, 2, 2, 64}));
  }
  {  // desk scale: 64 with 5 stride-2 stages -> 2x2xm
    auto spec = make_encoder_spec(2, 64, 2, 32);
    CHECK(spec.depth() == 5);
    auto params = init_params<double>(spec, rng.substream("init"));
    Tape<double> tp;
    Var x = tp.input(Array<double>::zeros({3, 64, 64, 1}));
    Var z = net_encode(tp, spec, bind_params(tp, params), x);
    CHECK(same_shape(tp.shape(z), Shape{3, 2, 2, 32}));
  }
  {  // 3D: 64^3 with 5 stages -> 2x2x2xm
    auto spec = make_encoder_spec(3, 64, 2, 16);
    auto params = init_params<double>(spec, rng.substream("init"));
    Tape<double> tp;
    Var x = tp.input(Array<double>::zeros({1, 64, 64, 64, 1}));
    Var z = net_encode(tp, spec, bind_params(tp, params), x);
    CHECK(same_shape(tp.shape(z), Shape{1, 2, 2, 2, 16}));
  }
}

TEST_CASE("encoder rejects extent mismatch") {
  auto spec = make_encoder_spec(2, 64, 2, 32);
  auto params = init_params<double>(spec, Rng(2));
  Tape<double> tp;
  Var x = tp.input(Array<double>::zeros({1, 32, 32, 1}));
  CHECK_THROWS_AS(net_encode(tp, spec, bind_params(tp, params), x), Error);
}

TEST_CASE("parameter counts match hand-computed values") {
  // encoder 64->2, m=32: stages 1->16,16->32,32->32,32->32,32->32 (k4) + 1x1 32->32
  auto enc = make_encoder_spec(2, 64, 2, 32);
  const std::int64_t expect_enc = (4 * 4 * 1 * 16 + 16) + (4 * 4 * 16 * 32 + 32) +
                                  3 * (4 * 4 * 32 * 32 + 32) + (1 * 1 * 32 * 32 + 32);
  CHECK(param_count(enc) == expect_enc);

  // decoder m=32 2D: (34,512)+(512,256)+(256,128)+(128,1) with biases
  auto dec = make_decoder_spec(2, 32);
  const std::int64_t expect_dec =
      (34 * 512 + 512) + (512 * 256 + 256) + (256 * 128 + 128) + (128 * 1 + 1);
  CHECK(param_count(dec) == expect_dec);

  // generator k=2 m=32: 5 k3 convs 32->64->64->64->64->32
  auto gen = make_generator_spec(2, 2, 32);
  const std::int64_t expect_gen = (9 * 32 * 64 + 64) + 3 * (9 * 64 * 64 + 64) + (9 * 64 * 32 + 32);
  CHECK(param_count(gen) == expect_gen);

  // critic k=2 m=32: 4 k3 convs 32->64->64->64->1
  auto cr = make_critic_spec(2, 2, 32);
  const std::int64_t expect_cr = (9 * 32 * 64 + 64) + 2 * (9 * 64 * 64 + 64) + (9 * 64 * 1 + 1);
  CHECK(param_count(cr) == expect_cr);

  // regular encoder m=32: encoder stages + 4 linear taps (C_i -> 8)
  auto reg = make_regular_encoder_spec(2, 64, 2, 32);
  const std::int64_t trunk = (4 * 4 * 1 * 16 + 16) + (4 * 4 * 16 * 32 + 32) +
                             3 * (4 * 4 * 32 * 32 + 32);
  const std::int64_t taps = 4 * (32 * 8 + 8);
  CHECK(param_count(reg) == trunk + taps);
}

TEST_CASE("initialization respects the fan-in bound") {
  auto spec = make_decoder_spec(2, 32);
  auto params = init_params<double>(spec, Rng(3));
  const auto shapes = param_shapes(spec);
  for (size_t i = 0; i < params.size(); i += 2) {
    const double bound = std::sqrt(1.0 / static_cast<double>(shapes[i][0]));
    bool nonzero = false;
    for (std::int64_t j = 0; j < params[i].size(); ++j) {
      CHECK(std::abs(params[i].at(j)) <= bound);
      nonzero |= params[i].at(j) != 0.0;
    }
    CHECK(nonzero);
    for (std::int64_t j = 0; j < params[i + 1].size(); ++j)
      CHECK(std::abs(params[i + 1].at(j)) <= bound);
  }
}

TEST_CASE("regular encoder emits length-m codes and is translation-sensitive") {
  auto spec = make_regular_encoder_spec(2, 64, 2, 32);
  auto params = init_params<double>(spec, Rng(4));
  Tape<double> tp;
  auto pv = bind_params(tp, params);

  // a small solid box rendered at two offsets
  auto render = [&](int ox, int oy) {
    std::vector<double> img(64 * 64, 0.0);
    for (int y = oy; y < oy + 12; ++y)
      for (int x = ox; x < ox + 12; ++x) img[static_cast<size_t>(y) * 64 + x] = 1.0;
    return Array<double>({1, 64, 64, 1}, std::move(img));
  };
  Var c1 = net_encode_regular(tp, spec, pv, tp.input(render(8, 8)));
  Var c2 = net_encode_regular(tp, spec, pv, tp.input(render(40, 30)));
  CHECK(same_shape(tp.shape(c1), Shape{1, 32}));
  double diff = 0;
  for (int i = 0; i < 32; ++i) diff += std::abs(tp.value(c1).at(i) - tp.value(c2).at(i));
  CHECK(diff > 1e-9);
}

TEST_CASE("decoder output lies in (0,1) and batching is pointwise") {
  auto spec = make_decoder_spec(2, 8);
  auto params = init_params<double>(spec, Rng(5));
  Rng rng(6);
  Tape<double> tp;
  auto pv = bind_params(tp, params);
  Array<double> rows = rand_array(rng, {7, 10});
  Var all = net_decode(tp, spec, pv, tp.input(rows));
  CHECK(same_shape(tp.shape(all), Shape{7, 1}));
  for (int i = 0; i < 7; ++i) {
    const double v = tp.value(all).at(i);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    std::vector<double> row(rows.ptr() + i * 10, rows.ptr() + (i + 1) * 10);
    Var one = net_decode(tp, spec, pv, tp.input(Array<double>({1, 10}, std::move(row))));
    CHECK(tp.value(one).at(0) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("decoder gradient w.r.t. the query point matches finite differences") {
  auto spec = make_decoder_spec(2, 8);
  auto params = init_params<double>(spec, Rng(7));
  Rng rng(8);
  Array<double> code = rand_array(rng, {1, 8});
  const double px = 0.37, py = 0.61;

  auto eval_at = [&](double x, double y) {
    Tape<double> tp;
    auto pv = bind_params(tp, params);
    std::vector<double> row(code.data().begin(), code.data().end());
    row.push_back(x);
    row.push_back(y);
    Var out = net_decode(tp, spec, pv, tp.input(Array<double>({1, 10}, std::move(row))));
    return tp.value(out).at(0);
  };

  Tape<double> tp;
  auto pv = bind_params(tp, params);
  Var codes = tp.constant(code);
  Var pts = tp.input(Array<double>({1, 2}, {px, py}));
  Var out = net_decode(tp, spec, pv, tp.concat({codes, pts}, 1));
  auto g = tp.gradient(tp.sum(out), {pts});
  const double h = 1e-5;
  const double fdx = (eval_at(px + h, py) - eval_at(px - h, py)) / (2 * h);
  const double fdy = (eval_at(px, py + h) - eval_at(px, py - h)) / (2 * h);
  CHECK(std::abs(g[0].at(0) - fdx) / std::max(1.0, std::abs(fdx)) <= 1e-5);
  CHECK(std::abs(g[0].at(1) - fdy) / std::max(1.0, std::abs(fdy)) <= 1e-5);
}

TEST_CASE("decode_field reduces to plain decode on a constant latent") {
  auto dec = make_decoder_spec(2, 8);
  auto params = init_params<double>(dec, Rng(9));
  Rng rng(10);
  std::vector<double> cell(8);
  for (auto& v : cell) v = rng.uniform(-1, 1);
  std::vector<double> latd;
  for (int i = 0; i < 4; ++i) latd.insert(latd.end(), cell.begin(), cell.end());
  Array<double> latent({2, 2, 8}, std::move(latd));
  Array<double> pts = rand_array(rng, {9, 2}, 0.0, 1.0);

  Tape<double> tp;
  auto pv = bind_params(tp, params);
  Var field = decode_field(tp, dec, pv, tp.input(latent), tp.constant(pts));

  for (int i = 0; i < 9; ++i) {
    std::vector<double> row(cell);
    row.push_back(pts.at(2 * i));
    row.push_back(pts.at(2 * i + 1));
    Var one = net_decode(tp, dec, pv, tp.input(Array<double>({1, 10}, std::move(row))));
    CHECK(tp.value(field).at(i) == doctest::Approx(tp.value(one).at(0)).epsilon(1e-12));
  }
}

TEST_CASE("generator and critic shape contracts and zero-parameter behavior") {
  Rng rng(11);
  auto gen = make_generator_spec(2, 2, 16);
  auto cr = make_critic_spec(2, 2, 16);
  Tape<double> tp;
  Array<double> z = rand_array(rng, {3, 2, 2, 16});
  Var zv = tp.input(z);

  Var gz = net_generate(tp, gen, bind_params(tp, zero_params(gen)), zv);
  CHECK(same_shape(tp.shape(gz), Shape{3, 2, 2, 16}));
  for (std::int64_t i = 0; i < tp.value(gz).size(); ++i) CHECK(tp.value(gz).at(i) == 0.0);

  Var cz = net_critic(tp, cr, bind_params(tp, zero_params(cr)), zv);
  CHECK(same_shape(tp.shape(cz), Shape{3, 2, 2, 1}));
  for (std::int64_t i = 0; i < tp.value(cz).size(); ++i) CHECK(tp.value(cz).at(i) == 0.0);

  // random params: per-cell scores respond to input edits
  auto cp = init_params<double>(cr, rng.substream("cr"));
  Var c1 = net_critic(tp, cr, bind_params(tp, cp), zv);
  std::vector<double> z2(z.data().begin(), z.data().end());
  z2[5] += 0.5;
  Var c2 = net_critic(tp, cr, bind_params(tp, cp), tp.input(Array<double>({3, 2, 2, 16}, std::move(z2))));
  double diff = 0;
  for (std::int64_t i = 0; i < tp.value(c1).size(); ++i)
    diff += std::abs(tp.value(c1).at(i) - tp.value(c2).at(i));
  CHECK(diff > 1e-12);

  // 3D variants
  auto gen3 = make_generator_spec(3, 2, 8);
  Array<double> z3 = rand_array(rng, {2, 2, 2, 2, 8});
  Var g3 = net_generate(tp, gen3, bind_params(tp, init_params<double>(gen3, rng.substream("g3"))),
                        tp.input(z3));
  CHECK(same_shape(tp.shape(g3), Shape{2, 2, 2, 2, 8}));
}

TEST_CASE("generator fits identity on random grids") {
  Rng rng(12);
  auto gen = make_generator_spec(2, 2, 8);
  auto params = init_params<double>(gen, rng.substream("init"));
  Adam<double> opt(params);
  double rel = 1e9;
  for (int step = 0; step < 4000; ++step) {
    double lr = 2e-3 * std::pow(0.5, step / 1000);
    Tape<double> tp;
    auto pv = bind_params(tp, params);
    Var z = tp.constant(rand_array(rng, {8, 2, 2, 8}));
    Var g = net_generate(tp, gen, pv, z);
    Var diff = tp.sub(g, z);
    rel = tp.value(tp.sum(tp.abs(diff))).item() / tp.value(tp.sum(tp.abs(z))).item();
    auto grads = tp.gradient(tp.mean(tp.square(diff)), pv);
    params = opt.step(params, grads, lr);
  }
  CHECK(rel < 0.05);
}

TEST_CASE("checkpoint round-trip preserves bytes and rejects corruption") {
  Rng rng(13);
  Checkpoint ck;
  ck.meta = {{"purpose", "test"}, {"step", 17}};
  NetBundle enc{"encoder", make_encoder_spec(2, 16, 2, 8), init_params<double>(
      make_encoder_spec(2, 16, 2, 8), rng.substream("e")), {}, {}};
  NetBundle dec{"decoder", make_decoder_spec(2, 8),
                init_params<double>(make_decoder_spec(2, 8), rng.substream("d")), {}, {}};
  dec.adam_m1 = zero_params(dec.spec);
  dec.adam_m2 = zero_params(dec.spec);
  ck.nets = {enc, dec};

  auto path = (std::filesystem::temp_directory_path() / "occtrans_ck.bin").string();
  save_checkpoint(ck, path);
  Checkpoint lk = load_checkpoint(path);
  CHECK(lk.meta.at("step").get<int>() == 17);
  CHECK(lk.nets.size() == 2);
  CHECK(lk.net("decoder").adam_m1.size() == dec.params.size());
  for (size_t i = 0; i < enc.params.size(); ++i) {
    const auto& a = lk.net("encoder").params[i];
    const auto& b = enc.params[i];
    REQUIRE(same_shape(a.shape(), b.shape()));
    CHECK(std::memcmp(a.ptr(), b.ptr(), static_cast<size_t>(a.size()) * 8) == 0);
  }

  // byte-level idempotence: saving a loaded checkpoint reproduces the file
  auto path2 = (std::filesystem::temp_directory_path() / "occtrans_ck2.bin").string();
  save_checkpoint(lk, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);

  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 4);
  CHECK_THROWS_AS(load_checkpoint(path), Error);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("latent file round-trip") {
  Rng rng(14);
  Array<double> z = rand_array(rng, {2, 2, 8});
  auto path = (std::filesystem::temp_directory_path() / "occtrans_latent.bin").string();
  save_latent(z, "shape_007", path);
  std::string name;
  Array<double> z2 = load_latent(path, &name);
  CHECK(name == "shape_007");
  REQUIRE(same_shape(z.shape(), z2.shape()));
  CHECK(std::memcmp(z.ptr(), z2.ptr(), static_cast<size_t>(z.size()) * 8) == 0);
  std::filesystem::remove(path);
}
