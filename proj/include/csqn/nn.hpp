#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "csqn/param_store.hpp"
#include "csqn/tensor.hpp"

namespace csqn {

/// Seeded initializer: weights are Xavier-uniform draws from
/// uniform(-b, b) with b = sqrt(6 / (fan_in + fan_out)); biases are zero.
/// Draws are mapped from raw engine output, so the same seed reproduces the
/// same values on any platform.
class ParamInit {
 public:
  explicit ParamInit(uint64_t seed) : rng_(seed) {}

  std::vector<double> weight(int fan_in, int fan_out);
  std::vector<double> uniform(int64_t n, double lo, double hi);

 private:
  double unit();  // [0, 1)
  std::mt19937_64 rng_;
};

struct GruParams {
  int d_in = 0, d_h = 0;
  Tensor W_z, U_z, b_z;  // update gate
  Tensor W_r, U_r, b_r;  // reset gate
  Tensor W_h, U_h, b_h;  // candidate state
};

struct BiGruParams {
  GruParams fwd, bwd;
  int output_dim() const { return 2 * fwd.d_h; }
};

enum class Activation { relu, identity };

struct FfnLayer {
  Tensor W;  // [d_in x d_out]
  Tensor b;  // [d_out]
  Activation act = Activation::identity;
};

struct FeedForwardParams {
  std::vector<FfnLayer> layers;
  int input_dim() const;
  int output_dim() const;
};

GruParams gru_init(ParamStore& store, const std::string& prefix, int d_in, int d_h,
                   ParamInit& init);
BiGruParams bigru_init(ParamStore& store, const std::string& prefix, int d_in,
                       int d_h, ParamInit& init);
FeedForwardParams ffn_init(ParamStore& store, const std::string& prefix,
                           std::span<const int> dims,
                           std::span<const Activation> acts, ParamInit& init);

/// Convenience surface over the initializer: builds a fresh store from shape
/// descriptions.  Entries flagged as biases are zero, the rest Xavier-uniform.
struct ParamSpec {
  std::string name;
  Shape shape;
  bool bias = false;
};
ParamStore init_params(uint64_t seed, std::span<const ParamSpec> specs);

/// One GRU update for a 1-D input x_t and previous state h_prev:
///   z = sigma(x W_z + h U_z + b_z),  r = sigma(x W_r + h U_r + b_r),
///   hc = tanh(x W_h + (r . h) U_h + b_h),  h_t = (1 - z) . h + z . hc
Tensor gru_step(const GruParams& p, const Tensor& x_t, const Tensor& h_prev);

/// Encodes a nonempty sequence; position j output is the concatenation of the
/// forward state after token j and the backward state after token j.  Initial
/// states are zero.
std::vector<Tensor> bigru_encode(const BiGruParams& p, std::span<const Tensor> seq);

Tensor ffn_apply(const FeedForwardParams& p, const Tensor& x);

/// x [k] times W [k x n] -> [n].
Tensor vecmat(const Tensor& x, const Tensor& W);

}  // namespace csqn
