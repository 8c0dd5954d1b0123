#include "occtrans/translator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "occtrans/adam.hpp"
#include "occtrans/extract.hpp"

namespace fs = std::filesystem;

namespace occtrans {

TransConfig trans_desk_preset() {
  TransConfig cfg;
  cfg.epochs = 400;
  cfg.batch = 16;
  return cfg;
}

nlohmann::json trans_config_to_json(const TransConfig& c) {
  return {{"epochs", c.epochs},
          {"batch", c.batch},
          {"lr", c.lr},
          {"lr_halve_every", c.lr_halve_every},
          {"lr_floor", c.lr_floor},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"gamma", c.gamma},
          {"n_critic", c.n_critic},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every}};
}

TransConfig trans_config_from_json(const nlohmann::json& j) {
  TransConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.lr = j.value("lr", c.lr);
  c.lr_halve_every = j.value("lr_halve_every", c.lr_halve_every);
  c.lr_floor = j.value("lr_floor", c.lr_floor);
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.gamma = j.value("gamma", c.gamma);
  c.n_critic = j.value("n_critic", c.n_critic);
  c.seed = j.value("seed", c.seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  return c;
}

double trans_lr_at(const TransConfig& cfg, int epoch) {
  double lr = cfg.lr;
  for (int e = cfg.lr_halve_every; e <= epoch; e += cfg.lr_halve_every) {
    if (lr * 0.5 < cfg.lr_floor) break;
    lr *= 0.5;
  }
  return lr;
}

namespace {

void validate_config(const TransConfig& cfg) {
  require(cfg.epochs > 0 && cfg.batch > 0, "epochs and batch must be positive");
  require(cfg.n_critic > 0, "n_critic must be positive");
  require(cfg.checkpoint_every > 0, "checkpoint_every must be positive");
  require(cfg.lr_halve_every > 0, "lr_halve_every must be positive");
  require(std::isfinite(cfg.lr) && cfg.lr > 0, "lr must be positive");
  require(std::isfinite(cfg.lr_floor) && cfg.lr_floor > 0, "lr_floor must be positive");
  require(std::isfinite(cfg.alpha) && cfg.alpha >= 0, "alpha must be non-negative");
  require(std::isfinite(cfg.beta) && cfg.beta >= 0, "beta must be non-negative");
  require(std::isfinite(cfg.gamma) && cfg.gamma >= 0, "gamma must be non-negative");
}

// parameter digest; ties a translator to the exact autoencoder it was trained
// against
std::string checkpoint_fingerprint(const Checkpoint& ck) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto eat = [&](const void* p, size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& net : ck.nets) {
    eat(net.name.data(), net.name.size());
    for (const auto& p : net.params) {
      for (int e : p.shape()) eat(&e, sizeof e);
      eat(p.ptr(), static_cast<size_t>(p.size()) * sizeof(double));
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Array<double> draw_batch(const std::vector<Array<double>>& lats, int B, Rng rng) {
  const Shape& ls = lats.front().shape();
  const std::int64_t entries = numel(ls);
  std::vector<double> buf(static_cast<size_t>(B) * static_cast<size_t>(entries));
  for (int b = 0; b < B; ++b) {
    const auto idx = static_cast<size_t>(rng.below(lats.size()));
    std::copy(lats[idx].ptr(), lats[idx].ptr() + entries,
              buf.begin() + static_cast<std::int64_t>(b) * entries);
  }
  Shape bs{B};
  for (int e : ls) bs.push_back(e);
  return Array<double>(std::move(bs), std::move(buf));
}

struct TransState {
  NetSpec gspec, cspec;
  std::vector<Array<double>> gen_params;     // gen_1to2 then gen_2to1
  std::vector<Array<double>> critic_params;  // critic_d2 then critic_d1
  size_t g12n = 0, c2n = 0;
  Adam<double> gopt, copt;
  int epoch_next = 0;
  long long gen_step = 0;
};

Checkpoint make_translator_checkpoint(const TransState& st, const TransConfig& cfg,
                                      const std::string& ae_fp, const std::string& encoder_kind,
                                      double last_total) {
  auto moments = [](const Adam<double>& opt, const std::vector<Array<double>>& ps, size_t lo,
                    size_t n, bool second) {
    std::vector<Array<double>> out;
    for (size_t i = 0; i < n; ++i) {
      const std::vector<double>& m = second ? opt.moment2(lo + i) : opt.moment1(lo + i);
      out.push_back(Array<double>(ps[lo + i].shape(), std::vector<double>(m.begin(), m.end())));
    }
    return out;
  };

  Checkpoint ck;
  ck.meta = {{"role", "translator"},
             {"epoch_next", st.epoch_next},
             {"gen_step", st.gen_step},
             {"adam_t_gen", st.gopt.timestep()},
             {"adam_t_critic", st.copt.timestep()},
             {"last_total", last_total},
             {"config", trans_config_to_json(cfg)},
             {"ae_fingerprint", ae_fp},
             {"encoder_kind", encoder_kind},
             {"convention",
              "critic minimizes mean(C(fake)) - mean(C(real)) + gradient penalty; "
              "generator minimizes -mean(C(fake))"}};

  const size_t g21n = st.gen_params.size() - st.g12n;
  const size_t c1n = st.critic_params.size() - st.c2n;
  auto slice = [](const std::vector<Array<double>>& v, size_t lo, size_t n) {
    return std::vector<Array<double>>(v.begin() + static_cast<std::ptrdiff_t>(lo),
                                      v.begin() + static_cast<std::ptrdiff_t>(lo + n));
  };
  ck.nets.push_back({"gen_1to2", st.gspec, slice(st.gen_params, 0, st.g12n),
                     moments(st.gopt, st.gen_params, 0, st.g12n, false),
                     moments(st.gopt, st.gen_params, 0, st.g12n, true)});
  ck.nets.push_back({"gen_2to1", st.gspec, slice(st.gen_params, st.g12n, g21n),
                     moments(st.gopt, st.gen_params, st.g12n, g21n, false),
                     moments(st.gopt, st.gen_params, st.g12n, g21n, true)});
  ck.nets.push_back({"critic_d2", st.cspec, slice(st.critic_params, 0, st.c2n),
                     moments(st.copt, st.critic_params, 0, st.c2n, false),
                     moments(st.copt, st.critic_params, 0, st.c2n, true)});
  ck.nets.push_back({"critic_d1", st.cspec, slice(st.critic_params, st.c2n, c1n),
                     moments(st.copt, st.critic_params, st.c2n, c1n, false),
                     moments(st.copt, st.critic_params, st.c2n, c1n, true)});
  return ck;
}

}  // namespace

Checkpoint train_translator(const std::vector<Array<double>>& lat1,
                            const std::vector<Array<double>>& lat2, const Checkpoint& ae,
                            const TransConfig& cfg, const std::string& out_dir) {
  validate_config(cfg);
  require(!lat1.empty() && !lat2.empty(), "train_translator: both domains need latents");
  const Shape ls = lat1.front().shape();
  for (const auto& l : lat1)
    require(same_shape(l.shape(), ls), "train_translator: mixed latent shapes in domain 1");
  for (const auto& l : lat2)
    require(same_shape(l.shape(), ls), "train_translator: domain 2 latent shape ",
            shape_str(l.shape()), " does not match domain 1 ", shape_str(ls));
  const int dim = static_cast<int>(ls.size()) - 1;
  require(dim == 2 || dim == 3, "latent grids must be rank 3 or 4, got ", shape_str(ls));
  const int k = ls[0];
  for (int a = 0; a < dim; ++a) require(ls[static_cast<size_t>(a)] == k, "latent grid must be square");
  const int m = ls.back();

  require(ae.meta.value("role", "") == "autoencoder",
          "train_translator wants an autoencoder checkpoint");
  const NetSpec& dec_spec = ae.net("decoder").spec;
  require(dec_spec.dim == dim && dec_spec.m == m, "latents ", shape_str(ls),
          " do not fit the autoencoder decoder (dim ", dec_spec.dim, ", m ", dec_spec.m, ")");
  const std::string ae_fp = checkpoint_fingerprint(ae);
  const std::string encoder_kind = ae.meta.value("encoder_kind", "position");

  TransState st;
  st.gspec = make_generator_spec(dim, k, m);
  st.cspec = make_critic_spec(dim, k, m);
  Rng root(cfg.seed);
  st.gen_params = init_params<double>(st.gspec, root.substream("tr/init/g12"));
  st.g12n = st.gen_params.size();
  for (auto& p : init_params<double>(st.gspec, root.substream("tr/init/g21")))
    st.gen_params.push_back(p);
  st.critic_params = init_params<double>(st.cspec, root.substream("tr/init/c2"));
  st.c2n = st.critic_params.size();
  for (auto& p : init_params<double>(st.cspec, root.substream("tr/init/c1")))
    st.critic_params.push_back(p);
  st.gopt = Adam<double>(st.gen_params);
  st.copt = Adam<double>(st.critic_params);

  const int B = std::min<int>(cfg.batch, static_cast<int>(std::min(lat1.size(), lat2.size())));
  const auto bigger = static_cast<std::int64_t>(std::max(lat1.size(), lat2.size()));
  const int steps = static_cast<int>(std::max<std::int64_t>(1, (bigger + B - 1) / B));

  fs::create_directories(out_dir);
  const std::string ck_path = (fs::path(out_dir) / "translator.ckpt").string();
  const std::string csv_path = (fs::path(out_dir) / "translator_loss.csv").string();
  std::ofstream csv(csv_path, std::ios::trunc);
  require(csv.good(), "cannot write loss log: ", csv_path);
  csv << "epoch,step,lr,adv_1to2,gp_1to2,fp_1to2,adv_2to1,gp_2to1,fp_2to1,cycle,total\n";

  long long draw = 0;
  TransLossParts last;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = trans_lr_at(cfg, epoch);
    auto guard = [&](double v, const char* comp) {
      if (std::isfinite(v)) return;
      std::string msg = "translator training diverged at epoch " + std::to_string(epoch) +
                        " step " + std::to_string(st.gen_step) + ": " + std::string(comp) +
                        " is not finite";
      if (fs::exists(ck_path)) msg += "; last snapshot kept at " + ck_path;
      throw NumericError(msg);
    };

    for (int s = 0; s < steps; ++s) {
      for (int ci = 0; ci < cfg.n_critic; ++ci) {
        Array<double> b1 = draw_batch(lat1, B, root.substream("tr/draw1", static_cast<std::uint64_t>(draw)));
        Array<double> b2 = draw_batch(lat2, B, root.substream("tr/draw2", static_cast<std::uint64_t>(draw)));
        Rng e12 = root.substream("tr/eps12", static_cast<std::uint64_t>(draw));
        Rng e21 = root.substream("tr/eps21", static_cast<std::uint64_t>(draw));
        ++draw;

        Tape<double> tp;
        auto gv = bind_params(tp, st.gen_params);
        auto cv = bind_params(tp, st.critic_params);
        NetFn<double> g12 = spec_fn<double>(st.gspec, {gv.begin(), gv.begin() + static_cast<std::ptrdiff_t>(st.g12n)});
        NetFn<double> g21 = spec_fn<double>(st.gspec, {gv.begin() + static_cast<std::ptrdiff_t>(st.g12n), gv.end()});
        NetFn<double> c2 = spec_fn<double>(st.cspec, {cv.begin(), cv.begin() + static_cast<std::ptrdiff_t>(st.c2n)});
        NetFn<double> c1 = spec_fn<double>(st.cspec, {cv.begin() + static_cast<std::ptrdiff_t>(st.c2n), cv.end()});
        Var z1 = tp.constant(std::move(b1));
        Var z2 = tp.constant(std::move(b2));
        Var fake2 = g12(tp, z1);
        Var fake1 = g21(tp, z2);
        Var adv12 = wgan_terms(tp, c2, z2, fake2).first;
        Var gp12 = gradient_penalty(tp, c2, z2, fake2, cfg.alpha, e12);
        Var adv21 = wgan_terms(tp, c1, z1, fake1).first;
        Var gp21 = gradient_penalty(tp, c1, z1, fake1, cfg.alpha, e21);
        Var closs = tp.add(tp.add(adv12, gp12), tp.add(adv21, gp21));
        last.adv_1to2 = tp.value(adv12).item();
        last.gp_1to2 = tp.value(gp12).item();
        last.adv_2to1 = tp.value(adv21).item();
        last.gp_2to1 = tp.value(gp21).item();
        guard(last.adv_1to2, "wgan_1to2");
        guard(last.gp_1to2, "gp_1to2");
        guard(last.adv_2to1, "wgan_2to1");
        guard(last.gp_2to1, "gp_2to1");
        auto grads = tp.gradient(closs, cv);
        st.critic_params = st.copt.step(st.critic_params, grads, lr);
      }

      Array<double> b1 = draw_batch(lat1, B, root.substream("tr/draw1", static_cast<std::uint64_t>(draw)));
      Array<double> b2 = draw_batch(lat2, B, root.substream("tr/draw2", static_cast<std::uint64_t>(draw)));
      ++draw;

      Tape<double> tp;
      auto gv = bind_params(tp, st.gen_params);
      auto cv = bind_params(tp, st.critic_params);
      NetFn<double> g12 = spec_fn<double>(st.gspec, {gv.begin(), gv.begin() + static_cast<std::ptrdiff_t>(st.g12n)});
      NetFn<double> g21 = spec_fn<double>(st.gspec, {gv.begin() + static_cast<std::ptrdiff_t>(st.g12n), gv.end()});
      NetFn<double> c2 = spec_fn<double>(st.cspec, {cv.begin(), cv.begin() + static_cast<std::ptrdiff_t>(st.c2n)});
      NetFn<double> c1 = spec_fn<double>(st.cspec, {cv.begin() + static_cast<std::ptrdiff_t>(st.c2n), cv.end()});
      Var z1 = tp.constant(std::move(b1));
      Var z2 = tp.constant(std::move(b2));
      Var fake2 = g12(tp, z1);
      Var fake1 = g21(tp, z2);
      Var gadv = tp.add(wgan_terms(tp, c2, z2, fake2).second, wgan_terms(tp, c1, z1, fake1).second);
      Var fp12 = feature_preservation_loss(tp, g12, z2);
      Var fp21 = feature_preservation_loss(tp, g21, z1);
      Var cyc = cycle_loss(tp, g12, g21, z1, z2);
      Var gloss = tp.add(gadv, tp.add(tp.scale(tp.add(fp12, fp21), cfg.beta),
                                      tp.scale(cyc, cfg.gamma)));
      last.fp_1to2 = cfg.beta * tp.value(fp12).item();
      last.fp_2to1 = cfg.beta * tp.value(fp21).item();
      last.cycle = cfg.gamma * tp.value(cyc).item();
      guard(tp.value(gadv).item(), "generator adversarial term");
      guard(last.fp_1to2, "fp_1to2");
      guard(last.fp_2to1, "fp_2to1");
      guard(last.cycle, "cycle");
      auto grads = tp.gradient(gloss, gv);
      st.gen_params = st.gopt.step(st.gen_params, grads, lr);

      char row[512];
      std::snprintf(row, sizeof row,
                    "%d,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", epoch,
                    st.gen_step, lr, last.adv_1to2, last.gp_1to2, last.fp_1to2, last.adv_2to1,
                    last.gp_2to1, last.fp_2to1, last.cycle, last.total());
      csv << row;
      ++st.gen_step;
    }

    st.epoch_next = epoch + 1;
    if (st.epoch_next % cfg.checkpoint_every == 0 && st.epoch_next < cfg.epochs) {
      save_checkpoint(make_translator_checkpoint(st, cfg, ae_fp, encoder_kind, last.total()),
                      ck_path);
      csv.flush();
    }
  }

  Checkpoint final_ck = make_translator_checkpoint(st, cfg, ae_fp, encoder_kind, last.total());
  save_checkpoint(final_ck, ck_path);
  return final_ck;
}

TranslateResult translate(const Checkpoint& translator, const Checkpoint& ae,
                          const OccupancyGrid& shape, const std::string& direction,
                          int resolution) {
  require(direction == "1to2" || direction == "2to1", "direction must be 1to2 or 2to1, got ",
          direction);
  require(resolution >= 2, "resolution must be at least 2");
  require(translator.meta.value("role", "") == "translator", "not a translator checkpoint");
  require(ae.meta.value("role", "") == "autoencoder", "not an autoencoder checkpoint");
  const std::string want_fp = translator.meta.value("ae_fingerprint", "");
  if (!want_fp.empty())
    require(want_fp == checkpoint_fingerprint(ae),
            "translator was trained against a different autoencoder checkpoint");

  const NetBundle& enc = ae.net("encoder");
  const NetBundle& dec = ae.net("decoder");
  const bool regular = enc.spec.role == "regular-encoder";
  shape.validate();
  require(shape.rank() == enc.spec.dim, "input grid rank ", shape.rank(),
          " does not match the encoder (dim ", enc.spec.dim, ")");
  for (int e : shape.dims)
    require(e == enc.spec.n, "input grid ", shape_str(shape.dims), " does not match encoder input ",
            enc.spec.n);

  Array<double> z0;
  {
    Tape<double> tp;
    auto pv = bind_params(tp, enc.params);
    std::vector<double> xin(shape.cells.begin(), shape.cells.end());
    Shape xshape{1};
    for (int e : shape.dims) xshape.push_back(e);
    xshape.push_back(1);
    Var x = tp.constant(Array<double>(std::move(xshape), std::move(xin)));
    Var z = regular ? net_encode_regular(tp, enc.spec, pv, x) : net_encode(tp, enc.spec, pv, x);
    z0 = tp.value(z);
  }

  const NetBundle& gen = translator.net(direction == "1to2" ? "gen_1to2" : "gen_2to1");
  const int dim = enc.spec.dim;
  const int kk = gen.spec.k;
  const int m = gen.spec.m;
  Shape lat_dims(static_cast<size_t>(dim), kk);
  lat_dims.push_back(m);
  Shape batch_dims{1};
  for (int e : lat_dims) batch_dims.push_back(e);

  Array<double> lat;
  {
    Tape<double> tp;
    auto gv = bind_params(tp, gen.params);
    Var zin = tp.constant(z0.reshaped(batch_dims));
    Var g = net_generate(tp, gen.spec, gv, zin);
    lat = tp.value(g).reshaped(lat_dims);
  }

  OccupancyGrid out;
  out.dims = Shape(static_cast<size_t>(dim), resolution);
  const Array<double> field = evaluate_field(dec.spec, dec.params, lat, resolution, regular);
  out.cells.resize(static_cast<size_t>(field.size()));
  for (std::int64_t i = 0; i < field.size(); ++i)
    out.cells[static_cast<size_t>(i)] = field.at(i) >= 0.5 ? 1 : 0;
  return {std::move(lat), std::move(out)};
}

}  // namespace occtrans
