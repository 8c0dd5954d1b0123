#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "occtrans/checkpoint.hpp"
#include "occtrans/datasets.hpp"
#include "occtrans/tape.hpp"

namespace occtrans {

// One leg of the progressive target-sampling schedule. Boundaries are
// absolute epoch counts so a resumed run sees the same stage at the same
// epoch; epochs past the last stage stay at its resolution.
struct AeStage {
  int resolution = 64;
  int epochs = 0;
};

// Full-scale training defaults; desk presets override them explicitly and the
// whole config is echoed into the checkpoint so runs are never confused.
struct AeConfig {
  int epochs = 800;
  int batch = 24;
  double lr = 5e-5;
  int lr_halve_epoch = 400;  // halved once, at this epoch
  std::vector<AeStage> stages = {{16, 200}, {32, 200}, {64, 400}};
  int points_per_shape = 256;
  std::string precision = "f32";  // f32 | f64
  std::uint64_t seed = 1;
  int k = 2;
  int m = 64;
  bool regular_encoder = false;
  int checkpoint_every = 25;  // epochs between on-disk snapshots
  std::string resume_from;    // checkpoint path; empty = fresh start
};

AeConfig ae_desk_preset();
AeConfig ae_overfit_preset();
nlohmann::json ae_config_to_json(const AeConfig& cfg);
AeConfig ae_config_from_json(const nlohmann::json& j);

// Boundary-weighted squared error: mean over samples of ((pred-target)*w)^2.
// With a fixed per-shape point count the flat mean equals the mean over
// shapes of per-shape means.
double recon_loss(std::span<const double> pred, std::span<const double> target,
                  std::span<const double> weight);

template <class T>
Var recon_loss_node(Tape<T>& tp, Var pred, Var target, Var weight) {
  require(numel(tp.shape(pred)) > 0, "recon_loss: empty batch");
  require(same_shape(tp.shape(pred), tp.shape(target)) &&
              same_shape(tp.shape(pred), tp.shape(weight)),
          "recon_loss: shape mismatch");
  return tp.mean(tp.square(tp.mul(tp.sub(pred, target), weight)));
}

// Trains encoder+decoder on a pooled, unlabeled shape set. Writes
// <out_dir>/ae.ckpt (periodic + final) and appends <out_dir>/ae_loss.csv with
// rows epoch,step,loss,lr. Non-finite loss aborts with NumericError, leaving
// the last snapshot on disk.
Checkpoint train_autoencoder(const std::vector<DomainShape>& pooled,
                             const AeConfig& cfg, const std::string& out_dir);

// One latent file per shape under out_dir (<stem>.lat). Shapes whose extent
// does not match the checkpoint encoder are skipped with a note on stderr.
// Returns the written paths.
std::vector<std::string> encode_dataset(const Checkpoint& ck,
                                        const std::vector<DomainShape>& shapes,
                                        const std::string& out_dir);

}  // namespace occtrans
