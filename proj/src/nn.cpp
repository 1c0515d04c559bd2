#include "csqn/nn.hpp"

#include <cmath>

#include "csqn/errors.hpp"

namespace csqn {

double ParamInit::unit() {
  // Top 53 bits of the engine output; avoids the library distribution, whose
  // exact draws are implementation-defined.
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

std::vector<double> ParamInit::weight(int fan_in, int fan_out) {
  const double b = std::sqrt(6.0 / (fan_in + fan_out));
  std::vector<double> v(static_cast<size_t>(fan_in) * fan_out);
  for (double& x : v) x = -b + 2.0 * b * unit();
  return v;
}

std::vector<double> ParamInit::uniform(int64_t n, double lo, double hi) {
  std::vector<double> v(static_cast<size_t>(n));
  for (double& x : v) x = lo + (hi - lo) * unit();
  return v;
}

int FeedForwardParams::input_dim() const {
  return layers.empty() ? 0 : layers.front().W.dim(0);
}

int FeedForwardParams::output_dim() const {
  return layers.empty() ? 0 : layers.back().W.dim(1);
}

GruParams gru_init(ParamStore& store, const std::string& prefix, int d_in, int d_h,
                   ParamInit& init) {
  if (d_in <= 0 || d_h <= 0)
    throw DimensionError("gru_init: dimensions must be positive");
  GruParams p;
  p.d_in = d_in;
  p.d_h = d_h;
  auto w = [&](const std::string& name, int m, int n) -> Tensor& {
    return store.create(prefix + "." + name, {m, n}, init.weight(m, n));
  };
  auto b = [&](const std::string& name) -> Tensor& {
    return store.create(prefix + "." + name, {d_h},
                        std::vector<double>(static_cast<size_t>(d_h), 0.0));
  };
  p.W_z = w("W_z", d_in, d_h);
  p.U_z = w("U_z", d_h, d_h);
  p.b_z = b("b_z");
  p.W_r = w("W_r", d_in, d_h);
  p.U_r = w("U_r", d_h, d_h);
  p.b_r = b("b_r");
  p.W_h = w("W_h", d_in, d_h);
  p.U_h = w("U_h", d_h, d_h);
  p.b_h = b("b_h");
  return p;
}

BiGruParams bigru_init(ParamStore& store, const std::string& prefix, int d_in,
                       int d_h, ParamInit& init) {
  BiGruParams p;
  p.fwd = gru_init(store, prefix + ".fwd", d_in, d_h, init);
  p.bwd = gru_init(store, prefix + ".bwd", d_in, d_h, init);
  return p;
}

FeedForwardParams ffn_init(ParamStore& store, const std::string& prefix,
                           std::span<const int> dims,
                           std::span<const Activation> acts, ParamInit& init) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1)
    throw DimensionError("ffn_init: needs n+1 dims for n activations");
  FeedForwardParams p;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const int m = dims[l], n = dims[l + 1];
    if (m <= 0 || n <= 0) throw DimensionError("ffn_init: dimensions must be positive");
    FfnLayer layer;
    const std::string base = prefix + ".l" + std::to_string(l);
    layer.W = store.create(base + ".W", {m, n}, init.weight(m, n));
    layer.b = store.create(base + ".b", {n},
                           std::vector<double>(static_cast<size_t>(n), 0.0));
    layer.act = acts[l];
    p.layers.push_back(layer);
  }
  return p;
}

ParamStore init_params(uint64_t seed, std::span<const ParamSpec> specs) {
  ParamInit init(seed);
  ParamStore store;
  for (const ParamSpec& s : specs) {
    const int64_t n = numel(s.shape);
    if (s.bias) {
      store.create(s.name, s.shape, std::vector<double>(static_cast<size_t>(n), 0.0));
    } else {
      const double b = std::sqrt(6.0 / (s.shape.front() + s.shape.back()));
      store.create(s.name, s.shape, init.uniform(n, -b, b));
    }
  }
  return store;
}

Tensor vecmat(const Tensor& x, const Tensor& W) {
  if (x.rank() != 1 || W.rank() != 2 || x.dim(0) != W.dim(0))
    throw DimensionError("vecmat: shapes disagree: " + shape_str(x.shape()) +
                         " vs " + shape_str(W.shape()));
  return reshape(matmul(reshape(x, {1, x.dim(0)}), W), {W.dim(1)});
}

Tensor gru_step(const GruParams& p, const Tensor& x_t, const Tensor& h_prev) {
  if (x_t.rank() != 1 || x_t.dim(0) != p.d_in)
    throw DimensionError("gru_step: input shape " + shape_str(x_t.shape()) +
                         " does not match d_in " + std::to_string(p.d_in));
  if (h_prev.rank() != 1 || h_prev.dim(0) != p.d_h)
    throw DimensionError("gru_step: state shape " + shape_str(h_prev.shape()) +
                         " does not match d_h " + std::to_string(p.d_h));
  Tensor z = sigmoid(add(add(vecmat(x_t, p.W_z), vecmat(h_prev, p.U_z)), p.b_z));
  Tensor r = sigmoid(add(add(vecmat(x_t, p.W_r), vecmat(h_prev, p.U_r)), p.b_r));
  Tensor hc =
      tanh(add(add(vecmat(x_t, p.W_h), vecmat(mul(r, h_prev), p.U_h)), p.b_h));
  Tensor one_minus_z = sub(Tensor::full({p.d_h}, 1.0), z);
  return add(mul(one_minus_z, h_prev), mul(z, hc));
}

std::vector<Tensor> bigru_encode(const BiGruParams& p, std::span<const Tensor> seq) {
  if (seq.empty()) throw std::domain_error("bigru_encode: empty sequence");
  const size_t n = seq.size();
  std::vector<Tensor> fwd(n), bwd(n);
  Tensor h = Tensor::zeros({p.fwd.d_h});
  for (size_t t = 0; t < n; ++t) {
    h = gru_step(p.fwd, seq[t], h);
    fwd[t] = h;
  }
  h = Tensor::zeros({p.bwd.d_h});
  for (size_t t = n; t-- > 0;) {
    h = gru_step(p.bwd, seq[t], h);
    bwd[t] = h;
  }
  std::vector<Tensor> out;
  out.reserve(n);
  for (size_t t = 0; t < n; ++t) {
    const Tensor pair[] = {fwd[t], bwd[t]};
    out.push_back(concat(pair, 0));
  }
  return out;
}

Tensor ffn_apply(const FeedForwardParams& p, const Tensor& x) {
  if (p.layers.empty()) throw StateError("ffn_apply: no layers");
  Tensor h = x;
  for (const FfnLayer& layer : p.layers) {
    if (h.rank() != 1 || h.dim(0) != layer.W.dim(0))
      throw DimensionError("ffn_apply: input shape " + shape_str(h.shape()) +
                           " does not match layer " + shape_str(layer.W.shape()));
    h = add(vecmat(h, layer.W), layer.b);
    if (layer.act == Activation::relu) h = relu(h);
  }
  return h;
}

}  // namespace csqn
