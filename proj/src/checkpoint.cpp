#include "occtrans/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace occtrans {

using nlohmann::json;

const NetBundle& Checkpoint::net(const std::string& name) const {
  for (const auto& b : nets)
    if (b.name == name) return b;
  fail("checkpoint has no net '", name, "'");
}

bool Checkpoint::has_net(const std::string& name) const {
  for (const auto& b : nets)
    if (b.name == name) return true;
  return false;
}

json spec_to_json(const NetSpec& s) {
  return json{{"role", s.role},
              {"dim", s.dim},
              {"n", s.n},
              {"k", s.k},
              {"m", s.m},
              {"channels", s.channels},
              {"hidden", s.hidden},
              {"layers", s.layers},
              {"hidden_channels", s.hidden_channels},
              {"kernel", s.kernel},
              {"slope", s.slope}};
}

NetSpec spec_from_json(const json& j) {
  NetSpec s;
  s.role = j.at("role").get<std::string>();
  s.dim = j.at("dim").get<int>();
  s.n = j.at("n").get<int>();
  s.k = j.at("k").get<int>();
  s.m = j.at("m").get<int>();
  s.channels = j.at("channels").get<std::vector<int>>();
  s.hidden = j.at("hidden").get<std::vector<int>>();
  s.layers = j.at("layers").get<int>();
  s.hidden_channels = j.at("hidden_channels").get<int>();
  s.kernel = j.at("kernel").get<int>();
  s.slope = j.at("slope").get<double>();
  return s;
}

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_array(std::ostream& out, const Array<double>& a) {
  out.write(reinterpret_cast<const char*>(a.ptr()),
            static_cast<std::streamsize>(a.size() * sizeof(double)));
}

Array<double> read_array(std::istream& in, const Shape& shape, const std::string& path) {
  std::vector<double> d(static_cast<size_t>(numel(shape)));
  in.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
  if (!in) fail(path, ": truncated parameter payload");
  return Array<double>(shape, std::move(d));
}

json shapes_to_json(const std::vector<Array<double>>& arrays) {
  json out = json::array();
  for (const auto& a : arrays) out.push_back(a.shape());
  return out;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  json header;
  header["format_version"] = "1";
  header["meta"] = ck.meta;
  header["nets"] = json::array();
  for (const auto& b : ck.nets) {
    require(b.adam_m1.size() == b.adam_m2.size(), "adam moment lists must pair up");
    require(b.adam_m1.empty() || b.adam_m1.size() == b.params.size(),
            "adam moments must cover all params");
    header["nets"].push_back(json{{"name", b.name},
                                  {"spec", spec_to_json(b.spec)},
                                  {"params", shapes_to_json(b.params)},
                                  {"has_adam", !b.adam_m1.empty()}});
  }
  const std::string hs = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write ", path);
  out.write("OCKP", 4);
  write_u32(out, static_cast<std::uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& b : ck.nets) {
    for (const auto& p : b.params) write_array(out, p);
    for (const auto& p : b.adam_m1) write_array(out, p);
    for (const auto& p : b.adam_m2) write_array(out, p);
  }
  if (!out) fail("short write to ", path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open ", path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "OCKP", 4) != 0) fail(path, ": not a checkpoint file");
  const auto hlen = read_u32(in);
  std::string hs(hlen, '\0');
  in.read(hs.data(), hlen);
  if (!in) fail(path, ": truncated header");
  json header = json::parse(hs);
  if (header.at("format_version").get<std::string>() != "1")
    fail(path, ": unsupported checkpoint version");
  Checkpoint ck;
  ck.meta = header.at("meta");
  for (const auto& nj : header.at("nets")) {
    NetBundle b;
    b.name = nj.at("name").get<std::string>();
    b.spec = spec_from_json(nj.at("spec"));
    std::vector<Shape> shapes;
    for (const auto& sj : nj.at("params")) shapes.push_back(sj.get<Shape>());
    const std::vector<Shape> expect = param_shapes(b.spec);
    if (shapes.size() != expect.size()) fail(path, ": param list does not match spec");
    for (size_t i = 0; i < shapes.size(); ++i)
      if (!same_shape(shapes[i], expect[i])) fail(path, ": param shape does not match spec");
    for (const auto& s : shapes) b.params.push_back(read_array(in, s, path));
    if (nj.at("has_adam").get<bool>()) {
      for (const auto& s : shapes) b.adam_m1.push_back(read_array(in, s, path));
      for (const auto& s : shapes) b.adam_m2.push_back(read_array(in, s, path));
    }
    ck.nets.push_back(std::move(b));
  }
  return ck;
}

void save_latent(const Array<double>& latent, const std::string& name, const std::string& path) {
  json header{{"format_version", "1"}, {"name", name}, {"shape", latent.shape()}};
  const std::string hs = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write ", path);
  out.write("LATG", 4);
  write_u32(out, static_cast<std::uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  write_array(out, latent);
  if (!out) fail("short write to ", path);
}

Array<double> load_latent(const std::string& path, std::string* name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open ", path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "LATG", 4) != 0) fail(path, ": not a latent file");
  const auto hlen = read_u32(in);
  std::string hs(hlen, '\0');
  in.read(hs.data(), hlen);
  if (!in) fail(path, ": truncated header");
  json header = json::parse(hs);
  if (name) *name = header.at("name").get<std::string>();
  return read_array(in, header.at("shape").get<Shape>(), path);
}

}  // namespace occtrans
