#pragma once

// Adversarial objectives and the labeller loss, as literal batch estimates
// (for logging and tests) and as tape graphs (for training).
//
// Discriminator probabilities are sigmoid(logit) and every log of a
// probability is clamped to [1e-12, 1 - 1e-12].

#include <functional>
#include <optional>

#include "s2cgan/autodiff.hpp"
#include "s2cgan/nets.hpp"

namespace s2cgan {

struct Lambdas {
  double sup = 1.0;       // supervised cGAN term
  double labeller = 1.0;  // labeller cross-entropy
  double unsup = 1.0;     // unsupervised cGAN term

  void validate() const;
  bool operator==(const Lambdas&) const = default;
};

struct ObjectiveBreakdown {
  double v_sup = 0.0;
  double v_labeller = 0.0;
  double v_unsup = 0.0;
  double v_full = 0.0;
  Lambdas lambdas;
};

// v_full = sup * v_sup + labeller * v_labeller + unsup * v_unsup.
ObjectiveBreakdown full_objective(double v_sup, double v_labeller, double v_unsup,
                                  const Lambdas& lambdas);

// E[log D(x)] + E[log(1 - D(G(z)))] for an unconditional pair of networks.
double unconditional_gan_objective(const NetworkParams& d, const NetworkParams& g,
                                   const Tensor& real, const Tensor& noise);

// E[log D(x, c)] + E[log(1 - D(G(c, z), c))] with the fake term reusing the
// batch's own conditions.
double supervised_cgan_objective(const NetworkParams& d, const NetworkParams& g, const Tensor& x,
                                 const Condition& c, const Tensor& z);

// Mean cross-entropy of the labeller's softmax against hard labels,
// averaged over cells then batch.
double labeller_supervised_loss(const NetworkParams& l, const Tensor& x, const Condition& c);

// E[log D(x, L(x))] + E[log(1 - D(G(L(x)), L(x)))] with one Gumbel sample of
// L(x) per item reused in all three places.
double unsupervised_cgan_objective(const NetworkParams& d, const NetworkParams& g,
                                   const NetworkParams& l, const ConditionLayout& layout,
                                   const Tensor& x, const Tensor& z, double tau, Rng& rng);

// Same objective with the two expectations estimated on independent batches.
double unsupervised_cgan_objective(const NetworkParams& d, const NetworkParams& g,
                                   const NetworkParams& l, const ConditionLayout& layout,
                                   const Tensor& x_real, const Tensor& x_fake, const Tensor& z,
                                   double tau, Rng& rng);

// Same objective with labels supplied directly (e.g. by an exact oracle).
double unsupervised_cgan_objective_with_labels(const NetworkParams& d, const NetworkParams& g,
                                               const Tensor& x, const Condition& labels,
                                               const Tensor& z);

using ConditionSampler = std::function<Condition(std::size_t n, Rng& rng)>;

// E[log D(x, L(x))] + E[log(1 - D(G(c), c))] with c drawn from the true
// condition prior. Only defined for class conditions.
double conditional_sampling_objective(const NetworkParams& d, const NetworkParams& g,
                                      const NetworkParams& l, const ConditionLayout& layout,
                                      const Tensor& x, const ConditionSampler& sampler, const Tensor& z,
                                      double tau, Rng& rng);

// --- training graphs -----------------------------------------------------

struct SupervisedBatch {
  Tensor x;
  Condition c;
  Tensor z;  // (batch, noise_dim); ignored when noise_dim = 0
};

struct UnsupervisedBatch {
  Tensor x;
  Tensor z;
  Tensor gumbel;                 // (batch, condition width)
  std::optional<Tensor> x_fake;  // independent batch for the fake term
  std::optional<Tensor> gumbel_fake;
};

struct LabelPathOptions {
  double tau = 1.0;
  bool straight_through = false;
  // Stop the labeller gradient at each place L(x) is consumed.
  bool stop_real_pair = false;
  bool stop_generator_input = false;
  bool stop_fake_pair = false;
};

// Scalar batch means of every log-probability term. "flip" terms are the
// complementary log-probabilities used by non-saturating surrogates.
struct SupervisedTerms {
  ad::Var real;       // mean log D(x, c)
  ad::Var fake;       // mean log(1 - D(G(c), c))
  ad::Var fake_flip;  // mean log D(G(c), c)
};

struct UnsupervisedTerms {
  ad::Var real;       // mean log D(x, L(x))
  ad::Var real_flip;  // mean log(1 - D(x, L(x)))
  ad::Var fake;       // mean log(1 - D(G(L(x)), L(x)))
  ad::Var fake_flip;  // mean log D(G(L(x)), L(x))
  ad::Var labels;     // the sampled L(x) used for the real pair
};

SupervisedTerms supervised_terms(const BoundNetwork& d, const BoundNetwork& g,
                                 const SupervisedBatch& batch);
ad::Var labeller_ce_graph(const BoundNetwork& l, const ConditionLayout& layout, const Tensor& x,
                          const Condition& c);
UnsupervisedTerms unsupervised_terms(const BoundNetwork& d, const BoundNetwork& g,
                                     const BoundNetwork& l, const ConditionLayout& layout,
                                     const UnsupervisedBatch& batch,
                                     const LabelPathOptions& options);

}  // namespace s2cgan
