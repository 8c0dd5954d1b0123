#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "occtrans/checkpoint.hpp"
#include "occtrans/grids.hpp"
#include "occtrans/nets.hpp"
#include "occtrans/rng.hpp"

namespace occtrans {

// Unpaired latent-to-latent translation on top of a frozen autoencoder: two
// generators (1to2, 2to1) plus one per-cell critic per target domain.
// Convention: the critic minimizes mean(C(fake)) - mean(C(real)) + gradient
// penalty, the generator minimizes -mean(C(fake)). Per-cell critic scores are
// averaged, not summed, so alpha means the same thing at every latent extent.
struct TransConfig {
  int epochs = 1200;
  int batch = 128;
  double lr = 2e-3;
  int lr_halve_every = 100;  // epochs between halvings
  double lr_floor = 5e-4;
  double alpha = 10.0;  // gradient penalty weight
  double beta = 20.0;   // feature preservation weight
  double gamma = 20.0;  // cycle consistency weight
  int n_critic = 5;     // critic iterations per generator step
  std::uint64_t seed = 1;
  int checkpoint_every = 100;  // epochs
};

TransConfig trans_desk_preset();

nlohmann::json trans_config_to_json(const TransConfig& cfg);
TransConfig trans_config_from_json(const nlohmann::json& j);

// halves every lr_halve_every epochs until the next halving would undershoot
// the floor
double trans_lr_at(const TransConfig& cfg, int epoch);

// Differentiable batch map. Loss builders take these instead of NetSpecs so
// tests can plug closed-form critics/generators next to the real conv nets.
template <class T>
using NetFn = std::function<Var(Tape<T>&, Var)>;

template <class T>
NetFn<T> spec_fn(const NetSpec& spec, std::vector<Var> params) {
  return [spec, params = std::move(params)](Tape<T>& tp, Var z) {
    return spec.role == "generator" ? net_generate<T>(tp, spec, params, z)
                                    : net_critic<T>(tp, spec, params, z);
  };
}

// critic term mean(C(fake)) - mean(C(real)) and generator term -mean(C(fake));
// per-cell outputs are averaged over cells and batch
template <class T>
std::pair<Var, Var> wgan_terms(Tape<T>& tp, const NetFn<T>& critic, Var real, Var fake) {
  require(tp.shape(real)[0] > 0 && tp.shape(fake)[0] > 0, "wgan_terms: empty batch");
  Var mf = tp.mean(critic(tp, fake));
  Var mr = tp.mean(critic(tp, real));
  return {tp.sub(mf, mr), tp.neg(mf)};
}

// lambda * mean_b (||d/dxhat of the per-sample cell-mean critic score||_2 - 1)^2
// at xhat = eps*real + (1-eps)*fake, eps uniform per batch element and shared
// across that element's entries. The inner gradient is recorded on the tape,
// so the result stays differentiable w.r.t. critic parameters.
template <class T>
Var gradient_penalty(Tape<T>& tp, const NetFn<T>& critic, Var real, Var fake, double lambda,
                     Rng& rng) {
  const Shape s = tp.shape(real);
  require(same_shape(s, tp.shape(fake)), "gradient_penalty: real ", shape_str(s), " vs fake ",
          shape_str(tp.shape(fake)));
  const int B = s[0];
  require(B > 0, "gradient_penalty: empty batch");
  Shape eshape(s.size(), 1);
  eshape[0] = B;
  std::vector<T> ev(static_cast<size_t>(B));
  for (auto& e : ev) e = static_cast<T>(rng.uniform());
  Var eps = tp.broadcast(tp.constant(Array<T>(std::move(eshape), std::move(ev))), s);
  Var xhat = tp.add(fake, tp.mul(eps, tp.sub(real, fake)));
  Var c = critic(tp, xhat);
  const std::int64_t cells = numel(tp.shape(c)) / B;
  // batch rows are independent, so the gradient of the summed per-sample cell
  // means stacks the per-sample gradients
  Var score_sum = tp.scale(tp.sum(c), 1.0 / static_cast<double>(cells));
  Var g = tp.gradient_vars(score_sum, {xhat})[0];
  const int entries = static_cast<int>(numel(s) / B);
  Var rows = tp.reshape(tp.square(g), {B, entries});
  Var nsq = tp.matmul(rows, tp.constant(Array<T>::full({entries, 1}, T(1))));
  Var pen = tp.mean(tp.square(tp.affine(tp.sqrt(nsq), 1.0, -1.0)));
  return tp.scale(pen, lambda);
}

// mean over the batch of the entrywise L1 between G(z) and z
template <class T>
Var feature_preservation_loss(Tape<T>& tp, const NetFn<T>& gen, Var z) {
  const int B = tp.shape(z)[0];
  require(B > 0, "feature_preservation_loss: empty batch");
  Var out = gen(tp, z);
  require(same_shape(tp.shape(out), tp.shape(z)), "feature_preservation_loss: generator changed ",
          shape_str(tp.shape(z)), " to ", shape_str(tp.shape(out)));
  return tp.scale(tp.sum(tp.abs(tp.sub(out, z))), 1.0 / B);
}

// round trips through both generators, L1 per sample, batch means, both
// directions summed
template <class T>
Var cycle_loss(Tape<T>& tp, const NetFn<T>& g12, const NetFn<T>& g21, Var z1, Var z2) {
  require(tp.shape(z1)[0] > 0 && tp.shape(z2)[0] > 0, "cycle_loss: empty batch");
  Var back1 = tp.sub(g21(tp, g12(tp, z1)), z1);
  Var back2 = tp.sub(g12(tp, g21(tp, z2)), z2);
  Var a = tp.scale(tp.sum(tp.abs(back1)), 1.0 / tp.shape(z1)[0]);
  Var b = tp.scale(tp.sum(tp.abs(back2)), 1.0 / tp.shape(z2)[0]);
  return tp.add(a, b);
}

// One combined-objective evaluation for logging and tests. fp_* carry beta and
// cycle carries gamma, so the seven fields sum to the total.
struct TransLossParts {
  double adv_1to2 = 0, gp_1to2 = 0, fp_1to2 = 0;
  double adv_2to1 = 0, gp_2to1 = 0, fp_2to1 = 0;
  double cycle = 0;
  double total() const {
    return adv_1to2 + gp_1to2 + fp_1to2 + adv_2to1 + gp_2to1 + fp_2to1 + cycle;
  }
};

template <class T>
TransLossParts total_translation_loss(Tape<T>& tp, const NetFn<T>& g12, const NetFn<T>& g21,
                                      const NetFn<T>& critic2, const NetFn<T>& critic1, Var z1,
                                      Var z2, const TransConfig& cfg, Rng& rng) {
  Var fake2 = g12(tp, z1);
  Var fake1 = g21(tp, z2);
  auto val = [&](Var v) { return static_cast<double>(tp.value(v).item()); };
  TransLossParts p;
  p.adv_1to2 = val(wgan_terms(tp, critic2, z2, fake2).first);
  p.gp_1to2 = val(gradient_penalty(tp, critic2, z2, fake2, cfg.alpha, rng));
  p.fp_1to2 = cfg.beta * val(feature_preservation_loss(tp, g12, z2));
  p.adv_2to1 = val(wgan_terms(tp, critic1, z1, fake1).first);
  p.gp_2to1 = val(gradient_penalty(tp, critic1, z1, fake1, cfg.alpha, rng));
  p.fp_2to1 = cfg.beta * val(feature_preservation_loss(tp, g21, z1));
  p.cycle = cfg.gamma * val(cycle_loss(tp, g12, g21, z1, z2));
  return p;
}

// Trains on pre-encoded latents; the autoencoder checkpoint is consulted for
// geometry checks and fingerprinted into the result, never modified. Writes
// translator.ckpt and translator_loss.csv under out_dir.
Checkpoint train_translator(const std::vector<Array<double>>& lat1,
                            const std::vector<Array<double>>& lat2, const Checkpoint& ae,
                            const TransConfig& cfg, const std::string& out_dir);

struct TranslateResult {
  Array<double> latent;  // translated latent grid (k..,m) or (1..,m)
  OccupancyGrid grid;    // decoded at the requested resolution, threshold 0.5
};

// direction is "1to2" or "2to1"
TranslateResult translate(const Checkpoint& translator, const Checkpoint& ae,
                          const OccupancyGrid& shape, const std::string& direction,
                          int resolution);

}  // namespace occtrans
