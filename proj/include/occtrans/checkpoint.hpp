#pragma once

#include <string>

#include "json.hpp"
#include "occtrans/array.hpp"
#include "occtrans/nets.hpp"

namespace occtrans {

// One named network inside a checkpoint. Parameters (and Adam moments, when a
// run is resumable) are stored as f64 regardless of training precision; the
// training precision is recorded in the checkpoint meta.
struct NetBundle {
  std::string name;
  NetSpec spec;
  std::vector<Array<double>> params;
  std::vector<Array<double>> adam_m1;  // empty when not saved
  std::vector<Array<double>> adam_m2;

  template <class T>
  std::vector<Array<T>> params_as() const {
    std::vector<Array<T>> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(p.template cast<T>());
    return out;
  }
};

struct Checkpoint {
  nlohmann::json meta;  // schedule state, config echo, format notes
  std::vector<NetBundle> nets;

  const NetBundle& net(const std::string& name) const;
  bool has_net(const std::string& name) const;
};

nlohmann::json spec_to_json(const NetSpec& spec);
NetSpec spec_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// single latent grid with its source shape name
void save_latent(const Array<double>& latent, const std::string& name, const std::string& path);
Array<double> load_latent(const std::string& path, std::string* name = nullptr);

}  // namespace occtrans
