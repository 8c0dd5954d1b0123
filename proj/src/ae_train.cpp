#include "occtrans/ae_train.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "occtrans/adam.hpp"
#include "occtrans/nets.hpp"

namespace occtrans {

namespace fs = std::filesystem;
using nlohmann::json;

AeConfig ae_desk_preset() {
  AeConfig c;
  c.epochs = 200;
  c.batch = 16;
  c.lr = 1e-3;
  c.lr_halve_epoch = 100;
  c.stages = {{16, 66}, {32, 66}, {64, 68}};
  c.k = 2;
  c.m = 32;
  return c;
}

AeConfig ae_overfit_preset() {
  AeConfig c;
  c.epochs = 2000;  // 16 shapes at batch 16 = one step per epoch
  c.batch = 16;
  c.lr = 1e-3;
  c.lr_halve_epoch = 1000;
  c.stages = {{64, 2000}};
  c.k = 2;
  c.m = 32;
  return c;
}

static json stages_json(const std::vector<AeStage>& stages) {
  json out = json::array();
  for (const auto& s : stages) out.push_back({s.resolution, s.epochs});
  return out;
}

json ae_config_to_json(const AeConfig& c) {
  return {{"epochs", c.epochs},
          {"batch", c.batch},
          {"lr", c.lr},
          {"lr_halve_epoch", c.lr_halve_epoch},
          {"stages", stages_json(c.stages)},
          {"points_per_shape", c.points_per_shape},
          {"precision", c.precision},
          {"seed", c.seed},
          {"k", c.k},
          {"m", c.m},
          {"regular_encoder", c.regular_encoder},
          {"checkpoint_every", c.checkpoint_every}};
}

AeConfig ae_config_from_json(const json& j) {
  AeConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.lr = j.value("lr", c.lr);
  c.lr_halve_epoch = j.value("lr_halve_epoch", c.lr_halve_epoch);
  if (j.contains("stages")) {
    c.stages.clear();
    for (const auto& s : j.at("stages"))
      c.stages.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
  }
  c.points_per_shape = j.value("points_per_shape", c.points_per_shape);
  c.precision = j.value("precision", c.precision);
  c.seed = j.value("seed", c.seed);
  c.k = j.value("k", c.k);
  c.m = j.value("m", c.m);
  c.regular_encoder = j.value("regular_encoder", c.regular_encoder);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  return c;
}

double recon_loss(std::span<const double> pred, std::span<const double> target,
                  std::span<const double> weight) {
  require(!pred.empty(), "recon_loss: empty batch");
  require(pred.size() == target.size() && pred.size() == weight.size(),
          "recon_loss: length mismatch: ", pred.size(), ", ", target.size(),
          ", ", weight.size());
  double acc = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    double r = (pred[i] - target[i]) * weight[i];
    acc += r * r;
  }
  return acc / static_cast<double>(pred.size());
}

namespace {

int stage_resolution(const AeConfig& cfg, int epoch) {
  int boundary = 0;
  for (const auto& s : cfg.stages) {
    boundary += s.epochs;
    if (epoch < boundary) return s.resolution;
  }
  return cfg.stages.back().resolution;
}

void validate_config(const AeConfig& cfg, int n) {
  require(cfg.epochs > 0 && cfg.batch > 0 && cfg.points_per_shape > 0,
          "epochs, batch and points_per_shape must be positive");
  require(cfg.lr > 0 && std::isfinite(cfg.lr), "lr must be positive");
  require(cfg.checkpoint_every > 0, "checkpoint_every must be positive");
  require(cfg.precision == "f32" || cfg.precision == "f64",
          "precision must be f32 or f64, got ", cfg.precision);
  require(!cfg.stages.empty(), "resolution schedule is empty");
  for (const auto& s : cfg.stages)
    require(s.resolution >= 2 && n % s.resolution == 0, "resolution ",
            s.resolution, " does not divide input ", n);
}

template <class T>
std::vector<Array<double>> to_f64(std::span<const Array<T>> arrs) {
  std::vector<Array<double>> out;
  out.reserve(arrs.size());
  for (const auto& a : arrs) out.push_back(a.template cast<double>());
  return out;
}

template <class T>
struct TrainState {
  std::vector<Array<T>> params;  // encoder then decoder
  size_t enc_count = 0;
  Adam<T> opt;
  int epoch_next = 0;
  long long global_step = 0;
};

template <class T>
Checkpoint make_ae_checkpoint(const TrainState<T>& st, const NetSpec& enc_spec,
                              const NetSpec& dec_spec, const AeConfig& cfg,
                              double last_loss) {
  std::span<const Array<T>> all(st.params);
  auto enc_p = all.subspan(0, st.enc_count);
  auto dec_p = all.subspan(st.enc_count);

  auto moments = [&](size_t lo, size_t n, bool second) {
    std::vector<Array<double>> out;
    for (size_t i = 0; i < n; ++i) {
      const std::vector<T>& m =
          second ? st.opt.moment2(lo + i) : st.opt.moment1(lo + i);
      out.push_back(Array<double>(st.params[lo + i].shape(),
                                  std::vector<double>(m.begin(), m.end())));
    }
    return out;
  };

  Checkpoint ck;
  ck.meta = {{"role", "autoencoder"},
             {"encoder_kind", cfg.regular_encoder ? "regular" : "position"},
             {"epoch_next", st.epoch_next},
             {"global_step", st.global_step},
             {"adam_t", st.opt.timestep()},
             {"last_loss", last_loss},
             {"config", ae_config_to_json(cfg)}};
  ck.nets.push_back({"encoder", enc_spec, to_f64<T>(enc_p),
                     moments(0, st.enc_count, false),
                     moments(0, st.enc_count, true)});
  ck.nets.push_back({"decoder", dec_spec, to_f64<T>(dec_p),
                     moments(st.enc_count, dec_p.size(), false),
                     moments(st.enc_count, dec_p.size(), true)});
  return ck;
}

template <class T>
Checkpoint train_impl(const std::vector<DomainShape>& pooled,
                      const AeConfig& cfg, const std::string& out_dir) {
  require(!pooled.empty(), "train_autoencoder: empty dataset");
  const Shape dims = pooled.front().grid.dims;
  for (const auto& s : pooled)
    require(s.grid.dims == dims, "train_autoencoder: mixed extents: ", s.name,
            " is ", shape_str(s.grid.dims), ", want ", shape_str(dims));
  const int dim = static_cast<int>(dims.size());
  const int n = dims[0];
  for (int e : dims) require(e == n, "train_autoencoder: grids must be square");
  validate_config(cfg, n);

  NetSpec enc_spec = cfg.regular_encoder
                         ? make_regular_encoder_spec(dim, n, cfg.k, cfg.m)
                         : make_encoder_spec(dim, n, cfg.k, cfg.m);
  NetSpec dec_spec = make_decoder_spec(dim, cfg.m);

  Rng root(cfg.seed);
  TrainState<T> st;
  double last_loss = 0;
  if (cfg.resume_from.empty()) {
    st.params = init_params<T>(enc_spec, root.substream("ae/init/enc"));
    st.enc_count = st.params.size();
    for (auto& p : init_params<T>(dec_spec, root.substream("ae/init/dec")))
      st.params.push_back(p);
    st.opt = Adam<T>(st.params);
  } else {
    Checkpoint ck = load_checkpoint(cfg.resume_from);
    require(ck.meta.value("role", "") == "autoencoder",
            "resume checkpoint is not an autoencoder checkpoint");
    const NetBundle& enc = ck.net("encoder");
    const NetBundle& dec = ck.net("decoder");
    require(spec_to_json(enc.spec) == spec_to_json(enc_spec) &&
                spec_to_json(dec.spec) == spec_to_json(dec_spec),
            "resume checkpoint geometry does not match the config");
    st.params = enc.params_as<T>();
    st.enc_count = st.params.size();
    for (auto& p : dec.params_as<T>()) st.params.push_back(p);
    st.opt = Adam<T>(st.params);
    require(!enc.adam_m1.empty() && !dec.adam_m1.empty(),
            "resume checkpoint lacks optimizer state");
    auto vec_cast = [](const Array<double>& a) {
      return std::vector<T>(a.data().begin(), a.data().end());
    };
    for (size_t i = 0; i < enc.adam_m1.size(); ++i)
      st.opt.restore(i, vec_cast(enc.adam_m1[i]), vec_cast(enc.adam_m2[i]));
    for (size_t i = 0; i < dec.adam_m1.size(); ++i)
      st.opt.restore(st.enc_count + i, vec_cast(dec.adam_m1[i]),
                     vec_cast(dec.adam_m2[i]));
    st.opt.set_timestep(ck.meta.at("adam_t").get<long long>());
    st.epoch_next = ck.meta.at("epoch_next").get<int>();
    st.global_step = ck.meta.at("global_step").get<long long>();
    last_loss = ck.meta.value("last_loss", 0.0);
    require(st.epoch_next <= cfg.epochs, "resume checkpoint is already at ",
            st.epoch_next, " epochs, config asks for ", cfg.epochs);
  }

  fs::create_directories(out_dir);
  const std::string ck_path = (fs::path(out_dir) / "ae.ckpt").string();
  const std::string csv_path = (fs::path(out_dir) / "ae_loss.csv").string();
  std::ofstream csv(csv_path, cfg.resume_from.empty()
                                  ? std::ios::trunc
                                  : std::ios::app);
  require(csv.good(), "cannot write loss log: ", csv_path);
  if (cfg.resume_from.empty()) csv << "epoch,step,loss,lr\n";

  // cast occupancy grids once; encoder input is the full-resolution raster
  const std::int64_t cells = numel(dims);
  std::vector<std::vector<T>> raster(pooled.size());
  for (size_t i = 0; i < pooled.size(); ++i) {
    raster[i].resize(static_cast<size_t>(cells));
    for (std::int64_t c = 0; c < cells; ++c)
      raster[i][static_cast<size_t>(c)] =
          static_cast<T>(pooled[i].grid.cells[static_cast<size_t>(c)]);
  }

  const int N = static_cast<int>(pooled.size());
  const int P = cfg.points_per_shape;
  Shape latent_dims(static_cast<size_t>(dim), cfg.k);
  latent_dims.push_back(cfg.m);

  for (int epoch = st.epoch_next; epoch < cfg.epochs; ++epoch) {
    const int res = stage_resolution(cfg, epoch);
    const double lr = cfg.lr * (epoch >= cfg.lr_halve_epoch ? 0.5 : 1.0);

    std::vector<int> order(pooled.size());
    for (int i = 0; i < N; ++i) order[static_cast<size_t>(i)] = i;
    Rng shuffle = root.substream("ae/order", static_cast<std::uint64_t>(epoch));
    for (int i = N - 1; i > 0; --i)
      std::swap(order[static_cast<size_t>(i)],
                order[shuffle.below(static_cast<std::uint64_t>(i + 1))]);

    for (int start = 0; start < N; start += cfg.batch) {
      const int B = std::min(cfg.batch, N - start);
      Tape<T> tp;
      auto pv = bind_params(tp, st.params);
      std::span<const Var> enc_v(pv.data(), st.enc_count);
      std::span<const Var> dec_v(pv.data() + st.enc_count,
                                 pv.size() - st.enc_count);

      std::vector<T> xin(static_cast<size_t>(B) * cells);
      for (int b = 0; b < B; ++b)
        std::copy(raster[static_cast<size_t>(order[start + b])].begin(),
                  raster[static_cast<size_t>(order[start + b])].end(),
                  xin.begin() + static_cast<std::int64_t>(b) * cells);
      Shape xshape{B};
      for (int e : dims) xshape.push_back(e);
      xshape.push_back(1);
      Var x = tp.constant(Array<T>(xshape, std::move(xin)));
      Var z = cfg.regular_encoder ? net_encode_regular(tp, enc_spec, enc_v, x)
                                  : net_encode(tp, enc_spec, enc_v, x);

      std::vector<T> tgt(static_cast<size_t>(B) * P),
          wgt(static_cast<size_t>(B) * P);
      std::vector<Var> codes, pts;
      for (int b = 0; b < B; ++b) {
        TrainingPoints smp = sample_training_points(
            pooled[static_cast<size_t>(order[start + b])].grid, res, P,
            root.substream("ae/points",
                           static_cast<std::uint64_t>(st.global_step) * 1024 +
                               static_cast<std::uint64_t>(b)));
        std::vector<T> crd(static_cast<size_t>(P) * dim);
        for (size_t i = 0; i < crd.size(); ++i)
          crd[i] = static_cast<T>(smp.coords[i]);
        for (int i = 0; i < P; ++i) {
          tgt[static_cast<size_t>(b) * P + i] = static_cast<T>(smp.targets[i]);
          wgt[static_cast<size_t>(b) * P + i] = static_cast<T>(smp.weights[i]);
        }
        Var pt = tp.constant(Array<T>({P, dim}, std::move(crd)));
        pts.push_back(pt);
        if (cfg.regular_encoder) {
          codes.push_back(
              tp.broadcast(tp.slice(z, 0, b, 1), {P, cfg.m}));
        } else {
          Var zi = tp.reshape(tp.slice(z, 0, b, 1), latent_dims);
          codes.push_back(dim == 2 ? tp.bilinear_sample(zi, pt)
                                   : tp.trilinear_sample(zi, pt));
        }
      }
      Var dec_in = tp.concat({tp.concat(std::span<const Var>(codes), 0),
                              tp.concat(std::span<const Var>(pts), 0)},
                             1);
      Var pred = net_decode(tp, dec_spec, dec_v, dec_in);
      Var loss = recon_loss_node(
          tp, pred, tp.constant(Array<T>({B * P, 1}, std::move(tgt))),
          tp.constant(Array<T>({B * P, 1}, std::move(wgt))));

      last_loss = static_cast<double>(tp.value(loss).item());
      ++st.global_step;
      char row[128];
      std::snprintf(row, sizeof row, "%d,%lld,%.17g,%.17g\n", epoch,
                    st.global_step, last_loss, lr);
      csv << row;
      if (!std::isfinite(last_loss))
        throw NumericError("autoencoder training diverged at epoch " +
                           std::to_string(epoch) + " step " +
                           std::to_string(st.global_step) +
                           ": loss is not finite; last snapshot kept at " +
                           ck_path);

      auto grads = tp.gradient(loss, pv);
      st.params = st.opt.step(st.params, grads, static_cast<T>(lr));
    }

    st.epoch_next = epoch + 1;
    if (st.epoch_next % cfg.checkpoint_every == 0 ||
        st.epoch_next == cfg.epochs) {
      csv.flush();
      save_checkpoint(
          make_ae_checkpoint(st, enc_spec, dec_spec, cfg, last_loss), ck_path);
    }
  }

  Checkpoint final_ck =
      make_ae_checkpoint(st, enc_spec, dec_spec, cfg, last_loss);
  save_checkpoint(final_ck, ck_path);
  return final_ck;
}

}  // namespace

Checkpoint train_autoencoder(const std::vector<DomainShape>& pooled,
                             const AeConfig& cfg, const std::string& out_dir) {
  if (cfg.precision == "f64") return train_impl<double>(pooled, cfg, out_dir);
  return train_impl<float>(pooled, cfg, out_dir);
}

std::vector<std::string> encode_dataset(const Checkpoint& ck,
                                        const std::vector<DomainShape>& shapes,
                                        const std::string& out_dir) {
  require(ck.meta.value("role", "") == "autoencoder",
          "encode_dataset wants an autoencoder checkpoint");
  const NetBundle& enc = ck.net("encoder");
  const bool regular = enc.spec.role == "regular-encoder";
  auto params = enc.params_as<double>();
  fs::create_directories(out_dir);

  std::vector<std::string> written;
  for (const auto& s : shapes) {
    bool ok = s.grid.rank() == enc.spec.dim;
    for (int e : s.grid.dims) ok = ok && e == enc.spec.n;
    if (!ok) {
      std::cerr << "encode_dataset: skipping " << s.name << " ("
                << shape_str(s.grid.dims) << " does not match encoder input "
                << enc.spec.n << "^" << enc.spec.dim << ")\n";
      continue;
    }

    Tape<double> tp;
    auto pv = bind_params(tp, params);
    std::vector<double> xin(s.grid.cells.begin(), s.grid.cells.end());
    Shape xshape{1};
    for (int e : s.grid.dims) xshape.push_back(e);
    xshape.push_back(1);
    Var x = tp.constant(Array<double>(xshape, std::move(xin)));
    Var z = regular ? net_encode_regular(tp, enc.spec, pv, x)
                    : net_encode(tp, enc.spec, pv, x);

    Shape lat_dims;
    if (regular)
      lat_dims = Shape(static_cast<size_t>(enc.spec.dim), 1);
    else
      lat_dims = Shape(static_cast<size_t>(enc.spec.dim), enc.spec.k);
    lat_dims.push_back(enc.spec.m);
    Array<double> lat = tp.value(z).reshaped(lat_dims);

    std::string stem = s.name.substr(0, s.name.find_last_of('.'));
    std::string path = (fs::path(out_dir) / (stem + ".lat")).string();
    save_latent(lat, stem, path);
    written.push_back(path);
  }
  return written;
}

}  // namespace occtrans
