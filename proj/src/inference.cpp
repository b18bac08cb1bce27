#include "s2cgan/inference.hpp"

#include "s2cgan/error.hpp"

namespace s2cgan {

std::size_t generator_noise_dim(const NetworkParams& g, const ConditionLayout& layout) {
  if (g.input_width() < layout.flat_dim()) {
    throw ShapeError("inference: generator input width " + std::to_string(g.input_width()) +
                     " is smaller than the condition width " + std::to_string(layout.flat_dim()));
  }
  return g.input_width() - layout.flat_dim();
}

Tensor request_noise(const NetworkParams& g, const InferenceRequest& req, Rng& rng) {
  const std::size_t dim = generator_noise_dim(g, req.condition.layout());
  const std::size_t batch = req.condition.batch();
  if (dim == 0) return Tensor::zeros({batch, 1});
  switch (req.noise) {
    case NoiseMode::fixed:
      if (!req.z) throw InvalidArgument("inference: fixed noise mode needs z");
      if (req.z->shape() != Shape{batch, dim}) {
        throw ShapeError("inference: z of shape " + shape_string(req.z->shape()) +
                         " does not match (" + std::to_string(batch) + "x" + std::to_string(dim) + ")");
      }
      return *req.z;
    case NoiseMode::fresh:
      return sample_normal(batch, dim, rng);
    case NoiseMode::zero:
      return Tensor::zeros({batch, dim});
  }
  throw InvalidArgument("inference: unknown noise mode");
}

Tensor infer_one_pass(const NetworkParams& g, const InferenceRequest& req, Rng& rng) {
  return generator_forward(g, req.condition, request_noise(g, req, rng));
}

TwoPassResult infer_two_pass(const NetworkParams& g, const NetworkParams& l,
                             const InferenceRequest& req, Rng& rng) {
  const Tensor z = request_noise(g, req, rng);
  Tensor x1 = generator_forward(g, req.condition, z);
  Condition c_syn = labeller_forward(l, req.condition.layout(), x1, LabelMode::hard, 1.0, rng);
  const Tensor z2 = req.reuse_noise || generator_noise_dim(g, req.condition.layout()) == 0
                        ? z
                        : sample_normal(z.rows(), z.cols(), rng);
  Tensor x2 = generator_forward(g, c_syn, z2);
  return {std::move(x1), std::move(c_syn), std::move(x2)};
}

}  // namespace s2cgan
