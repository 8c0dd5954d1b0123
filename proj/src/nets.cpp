#include "occtrans/nets.hpp"

#include <cmath>

namespace occtrans {

namespace {

int ilog2_exact(int num, int den) {
  require(num >= den && num % den == 0, "extent must be a power-of-two multiple of k");
  int q = num / den, d = 0;
  while (q > 1) {
    require(q % 2 == 0, "extent / k must be a power of two");
    q /= 2;
    ++d;
  }
  return d;
}

std::vector<int> encoder_channels(int n, int k, int m) {
  const int depth = ilog2_exact(n, k);
  require(depth >= 1, "encoder needs at least one stride-2 stage");
  std::vector<int> ch;
  int c = 16;
  for (int i = 0; i < depth; ++i) {
    ch.push_back(std::min(c, m));
    c *= 2;
  }
  return ch;
}

}  // namespace

NetSpec make_encoder_spec(int dim, int n, int k, int m) {
  require(dim == 2 || dim == 3, "dim must be 2 or 3");
  NetSpec s;
  s.role = "encoder";
  s.dim = dim;
  s.n = n;
  s.k = k;
  s.m = m;
  s.channels = encoder_channels(n, k, m);
  s.kernel = 4;
  return s;
}

NetSpec make_regular_encoder_spec(int dim, int n, int k, int m) {
  NetSpec s = make_encoder_spec(dim, n, k, m);
  s.role = "regular-encoder";
  require(m % 4 == 0, "m must be divisible by 4");
  require(s.depth() >= 4, "regular encoder taps four stages; need n/k >= 16");
  return s;
}

NetSpec make_decoder_spec(int dim, int m) {
  require(dim == 2 || dim == 3, "dim must be 2 or 3");
  NetSpec s;
  s.role = "decoder";
  s.dim = dim;
  s.m = m;
  s.hidden = {512, 256, 128};
  return s;
}

NetSpec make_generator_spec(int dim, int k, int m) {
  require(dim == 2 || dim == 3, "dim must be 2 or 3");
  NetSpec s;
  s.role = "generator";
  s.dim = dim;
  s.k = k;
  s.m = m;
  s.layers = 5;
  s.hidden_channels = 2 * m;
  s.kernel = 3;
  return s;
}

NetSpec make_critic_spec(int dim, int k, int m) {
  require(dim == 2 || dim == 3, "dim must be 2 or 3");
  NetSpec s;
  s.role = "critic";
  s.dim = dim;
  s.k = k;
  s.m = m;
  s.layers = 4;
  s.hidden_channels = 2 * m;
  s.kernel = 3;
  return s;
}

std::vector<Shape> param_shapes(const NetSpec& spec) {
  std::vector<Shape> out;
  auto conv = [&](int cin, int cout, int kext) {
    Shape w;
    for (int i = 0; i < spec.dim; ++i) w.push_back(kext);
    w.push_back(cin);
    w.push_back(cout);
    out.push_back(w);
    out.push_back({cout});
  };
  auto dense = [&](int fin, int fout) {
    out.push_back({fin, fout});
    out.push_back({fout});
  };

  if (spec.role == "encoder" || spec.role == "regular-encoder") {
    int cin = 1;
    for (int c : spec.channels) {
      conv(cin, c, spec.kernel);
      cin = c;
    }
    if (spec.role == "encoder") {
      conv(cin, spec.m, 1);
    } else {
      for (int t = spec.depth() - 4; t < spec.depth(); ++t)
        dense(spec.channels[static_cast<size_t>(t)], spec.m / 4);
    }
    return out;
  }
  if (spec.role == "decoder") {
    int fin = spec.m + spec.dim;
    for (int h : spec.hidden) {
      dense(fin, h);
      fin = h;
    }
    dense(fin, 1);
    return out;
  }
  if (spec.role == "generator" || spec.role == "critic") {
    const int last = spec.role == "generator" ? spec.m : 1;
    int cin = spec.m;
    for (int l = 0; l < spec.layers; ++l) {
      const int cout = (l + 1 == spec.layers) ? last : spec.hidden_channels;
      conv(cin, cout, spec.kernel);
      cin = cout;
    }
    return out;
  }
  fail("unknown net role '", spec.role, "'");
}

std::int64_t param_count(const NetSpec& spec) {
  std::int64_t n = 0;
  for (const Shape& s : param_shapes(spec)) n += numel(s);
  return n;
}

Shape latent_shape(const NetSpec& spec) {
  Shape s;
  for (int i = 0; i < spec.dim; ++i) s.push_back(spec.k);
  s.push_back(spec.m);
  return s;
}

}  // namespace occtrans
