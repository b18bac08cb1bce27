#pragma once

#include <optional>

#include "s2cgan/config.hpp"
#include "s2cgan/nets.hpp"

namespace s2cgan {

struct InferenceRequest {
  Condition condition;
  NoiseMode noise = NoiseMode::fresh;
  std::optional<Tensor> z;  // required for NoiseMode::fixed
  // Second pass of two-pass inference reuses the first pass's noise.
  bool reuse_noise = true;
};

// Noise width the generator expects beyond the condition.
std::size_t generator_noise_dim(const NetworkParams& g, const ConditionLayout& layout);

// Noise for a request: the supplied z, fresh N(0, 1) draws, or zeros.
Tensor request_noise(const NetworkParams& g, const InferenceRequest& req, Rng& rng);

// x = G(c_input, z).
Tensor infer_one_pass(const NetworkParams& g, const InferenceRequest& req, Rng& rng);

struct TwoPassResult {
  Tensor x_first;
  Condition c_synthetic;
  Tensor x_final;
};

// x1 = G(c_input, z); c_syn = hard L(x1); x_final = G(c_syn, z).
TwoPassResult infer_two_pass(const NetworkParams& g, const NetworkParams& l,
                             const InferenceRequest& req, Rng& rng);

}  // namespace s2cgan
