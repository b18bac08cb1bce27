#include "s2cgan/objectives.hpp"

#include <cmath>

#include "s2cgan/error.hpp"

namespace s2cgan {

void Lambdas::validate() const {
  if (!(sup >= 0.0) || !(labeller >= 0.0) || !(unsup >= 0.0)) {
    throw InvalidArgument("lambdas: weights must be non-negative");
  }
}

ObjectiveBreakdown full_objective(double v_sup, double v_labeller, double v_unsup,
                                  const Lambdas& lambdas) {
  lambdas.validate();
  ObjectiveBreakdown out;
  out.v_sup = v_sup;
  out.v_labeller = v_labeller;
  out.v_unsup = v_unsup;
  out.lambdas = lambdas;
  out.v_full = lambdas.sup * v_sup + lambdas.labeller * v_labeller + lambdas.unsup * v_unsup;
  return out;
}

namespace {

ad::Tape& tape_of(const BoundNetwork& net) { return net.weights.front().tape(); }

std::optional<ad::Var> noise_input(const BoundNetwork& g, std::size_t condition_width,
                                   const Tensor& z, std::size_t batch) {
  const std::size_t width = g.params->input_width();
  if (width <= condition_width) return std::nullopt;
  if (z.rank() != 2 || z.rows() != batch || z.cols() != width - condition_width) {
    throw ShapeError("generator: noise of shape " + shape_string(z.shape()) + " does not match (" +
                     std::to_string(batch) + "x" + std::to_string(width - condition_width) + ")");
  }
  return tape_of(g).constant(z);
}

void require_rows(const char* op, const Tensor& x) {
  if (x.rank() != 2 || x.rows() == 0) throw InvalidArgument(std::string(op) + ": empty batch");
}

// mean log sigmoid(sign * logits)
ad::Var mean_log_prob(ad::Var logits, double sign) {
  return ad::mean_all(ad::log_sigmoid(sign > 0 ? logits : -logits));
}

ad::Var maybe_stop(ad::Var v, bool stop) { return stop ? ad::stop_gradient(v) : v; }

}  // namespace

double unconditional_gan_objective(const NetworkParams& d, const NetworkParams& g,
                                   const Tensor& real, const Tensor& noise) {
  require_rows("unconditional_gan_objective", real);
  require_rows("unconditional_gan_objective", noise);
  ad::Tape tape;
  BoundNetwork dn = bind_network(tape, d, false);
  BoundNetwork gn = bind_network(tape, g, false);
  ad::Var fake = mlp_graph(gn, tape.constant(noise));
  ad::Var real_term = mean_log_prob(mlp_graph(dn, tape.constant(real)), +1);
  ad::Var fake_term = mean_log_prob(mlp_graph(dn, fake), -1);
  return real_term.value().item() + fake_term.value().item();
}

SupervisedTerms supervised_terms(const BoundNetwork& d, const BoundNetwork& g,
                                 const SupervisedBatch& batch) {
  require_rows("supervised_cgan_objective", batch.x);
  if (batch.x.rows() != batch.c.batch()) {
    throw ShapeError("supervised_cgan_objective: sample and condition batches differ");
  }
  ad::Tape& tape = tape_of(d);
  const std::size_t width = batch.c.layout().flat_dim();
  ad::Var c = tape.constant(batch.c.values());
  ad::Var fake = generator_graph(g, c, noise_input(g, width, batch.z, batch.x.rows()));
  ad::Var real_logits = discriminator_graph(d, tape.constant(batch.x), c);
  ad::Var fake_logits = discriminator_graph(d, fake, c);
  return {mean_log_prob(real_logits, +1), mean_log_prob(fake_logits, -1),
          mean_log_prob(fake_logits, +1)};
}

double supervised_cgan_objective(const NetworkParams& d, const NetworkParams& g, const Tensor& x,
                                 const Condition& c, const Tensor& z) {
  ad::Tape tape;
  BoundNetwork dn = bind_network(tape, d, false);
  BoundNetwork gn = bind_network(tape, g, false);
  const SupervisedTerms t = supervised_terms(dn, gn, {x, c, z});
  return t.real.value().item() + t.fake.value().item();
}

ad::Var labeller_ce_graph(const BoundNetwork& l, const ConditionLayout& layout, const Tensor& x,
                          const Condition& c) {
  require_rows("labeller_supervised_loss", x);
  if (!c.hard()) throw InvalidArgument("labeller_supervised_loss: conditions must be hard");
  if (x.rows() != c.batch()) throw ShapeError("labeller_supervised_loss: batch sizes differ");
  ad::Tape& tape = tape_of(l);
  ad::Var logp = cellwise_log_softmax(labeller_logits_graph(l, tape.constant(x)), layout);
  const double items = static_cast<double>(x.rows() * layout.cells);
  return ad::scale(ad::sum_all(logp * tape.constant(c.values())), -1.0 / items);
}

double labeller_supervised_loss(const NetworkParams& l, const Tensor& x, const Condition& c) {
  ad::Tape tape;
  BoundNetwork ln = bind_network(tape, l, false);
  return labeller_ce_graph(ln, c.layout(), x, c).value().item();
}

UnsupervisedTerms unsupervised_terms(const BoundNetwork& d, const BoundNetwork& g,
                                     const BoundNetwork& l, const ConditionLayout& layout,
                                     const UnsupervisedBatch& batch,
                                     const LabelPathOptions& options) {
  require_rows("unsupervised_cgan_objective", batch.x);
  ad::Tape& tape = tape_of(d);
  ad::Var x = tape.constant(batch.x);
  ad::Var labels = gumbel_softmax_graph(labeller_logits_graph(l, x), batch.gumbel, options.tau,
                                        layout, options.straight_through);
  ad::Var fake_labels = labels;
  std::size_t fake_rows = batch.x.rows();
  if (batch.x_fake) {
    require_rows("unsupervised_cgan_objective", *batch.x_fake);
    if (!batch.gumbel_fake) throw InvalidArgument("unsupervised_cgan_objective: missing fake-batch noise");
    fake_labels = gumbel_softmax_graph(labeller_logits_graph(l, tape.constant(*batch.x_fake)),
                                       *batch.gumbel_fake, options.tau, layout,
                                       options.straight_through);
    fake_rows = batch.x_fake->rows();
  }

  ad::Var real_logits = discriminator_graph(d, x, maybe_stop(labels, options.stop_real_pair));
  ad::Var fake = generator_graph(g, maybe_stop(fake_labels, options.stop_generator_input),
                                 noise_input(g, layout.flat_dim(), batch.z, fake_rows));
  ad::Var fake_logits = discriminator_graph(d, fake, maybe_stop(fake_labels, options.stop_fake_pair));

  UnsupervisedTerms t;
  t.real = mean_log_prob(real_logits, +1);
  t.real_flip = mean_log_prob(real_logits, -1);
  t.fake = mean_log_prob(fake_logits, -1);
  t.fake_flip = mean_log_prob(fake_logits, +1);
  t.labels = labels;
  return t;
}

double unsupervised_cgan_objective(const NetworkParams& d, const NetworkParams& g,
                                   const NetworkParams& l, const ConditionLayout& layout,
                                   const Tensor& x, const Tensor& z, double tau, Rng& rng) {
  require_rows("unsupervised_cgan_objective", x);
  ad::Tape tape;
  BoundNetwork dn = bind_network(tape, d, false);
  BoundNetwork gn = bind_network(tape, g, false);
  BoundNetwork ln = bind_network(tape, l, false);
  UnsupervisedBatch batch{x, z, sample_gumbel(x.rows(), layout.flat_dim(), rng), {}, {}};
  LabelPathOptions options;
  options.tau = tau;
  const UnsupervisedTerms t = unsupervised_terms(dn, gn, ln, layout, batch, options);
  return t.real.value().item() + t.fake.value().item();
}

double unsupervised_cgan_objective(const NetworkParams& d, const NetworkParams& g,
                                   const NetworkParams& l, const ConditionLayout& layout,
                                   const Tensor& x_real, const Tensor& x_fake, const Tensor& z,
                                   double tau, Rng& rng) {
  require_rows("unsupervised_cgan_objective", x_real);
  require_rows("unsupervised_cgan_objective", x_fake);
  ad::Tape tape;
  BoundNetwork dn = bind_network(tape, d, false);
  BoundNetwork gn = bind_network(tape, g, false);
  BoundNetwork ln = bind_network(tape, l, false);
  UnsupervisedBatch batch{x_real, z, sample_gumbel(x_real.rows(), layout.flat_dim(), rng), x_fake,
                          sample_gumbel(x_fake.rows(), layout.flat_dim(), rng)};
  LabelPathOptions options;
  options.tau = tau;
  const UnsupervisedTerms t = unsupervised_terms(dn, gn, ln, layout, batch, options);
  return t.real.value().item() + t.fake.value().item();
}

double unsupervised_cgan_objective_with_labels(const NetworkParams& d, const NetworkParams& g,
                                               const Tensor& x, const Condition& labels,
                                               const Tensor& z) {
  // With fixed labels the estimate has exactly the supervised form.
  return supervised_cgan_objective(d, g, x, labels, z);
}

double conditional_sampling_objective(const NetworkParams& d, const NetworkParams& g,
                                      const NetworkParams& l, const ConditionLayout& layout,
                                      const Tensor& x, const ConditionSampler& sampler,
                                      const Tensor& z, double tau, Rng& rng) {
  if (layout.kind != ConditionKind::class_label) {
    throw UnsupportedTask(
        "conditional_sampling_objective: semantic-grid conditions cannot be sampled from a prior");
  }
  require_rows("conditional_sampling_objective", x);
  ad::Tape tape;
  BoundNetwork dn = bind_network(tape, d, false);
  BoundNetwork gn = bind_network(tape, g, false);
  BoundNetwork ln = bind_network(tape, l, false);
  ad::Var xv = tape.constant(x);
  ad::Var labels = gumbel_softmax_graph(labeller_logits_graph(ln, xv),
                                        sample_gumbel(x.rows(), layout.flat_dim(), rng), tau,
                                        layout, false);
  const Condition sampled = sampler(x.rows(), rng);
  if (sampled.layout() != layout) throw ShapeError("conditional_sampling_objective: sampler layout differs");
  ad::Var c = tape.constant(sampled.values());
  ad::Var fake = generator_graph(gn, c, noise_input(gn, layout.flat_dim(), z, sampled.batch()));
  const double real_term = mean_log_prob(discriminator_graph(dn, xv, labels), +1).value().item();
  const double fake_term = mean_log_prob(discriminator_graph(dn, fake, c), -1).value().item();
  return real_term + fake_term;
}

}  // namespace s2cgan
