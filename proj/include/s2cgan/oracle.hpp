#pragma once

// Exact finite-space check of the marginal consequence of joint matching:
// if (x, L(x)) and (G(c), c) agree as joint distributions, the labeller is
// exact on S_x and the generator exact on S_c, then the labeller-induced
// marginal equals the true prior at every c in S_c.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "s2cgan/nets.hpp"

namespace s2cgan {

using Matrix = std::vector<std::vector<double>>;

struct OracleInstance {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> p_x;  // n
  Matrix joint;             // n x k, p(x, c)
  Matrix labeller;          // n x k, p_L(c | x)
  Matrix generator;         // k x n, p_G(x | c)
  std::vector<std::size_t> s_x;
  std::vector<std::size_t> s_c;

  // Stochasticity and marginal consistency within 1e-12.
  void validate() const;
  std::vector<double> true_prior() const;  // p_C
};

// p_L(c) = sum_x p_L(c | x) p_X(x).
std::vector<double> induced_label_marginal(const OracleInstance& inst);

// max over (x, c) of |p_X(x) p_L(c|x) - p_G(x|c) p_L(c)|.
double joint_match_residual(const OracleInstance& inst);

struct MarginalReport {
  double eq10_residual = 0.0;  // joint match
  double eq11_residual = 0.0;  // labeller exact on S_x
  double eq12_residual = 0.0;  // generator exact on S_c
  std::vector<double> gaps;    // |p_L(c) - p_C(c)| per c in S_c, same order
  bool residuals_within_tol = false;
  bool holds = false;          // every gap <= 10 tol
};

MarginalReport verify_marginal_consequence(const OracleInstance& inst, double tol);

// Random full-support joint with the labeller and generator set to its exact
// conditionals, and random non-empty S_x, S_c.
OracleInstance enumerate_consistent_instance(std::size_t n, std::size_t k, Rng& rng);

// Moves `delta` of mass onto one generator entry and renormalizes its row.
OracleInstance perturb_generator(const OracleInstance& inst, std::size_t c, std::size_t x, double delta);

// Instance with independent random joint, labeller and generator; almost
// surely violates the joint match.
OracleInstance random_instance(std::size_t n, std::size_t k, Rng& rng);

struct OracleSweep {
  std::size_t consistent_trials = 0;
  std::size_t consistent_failures = 0;  // consistent instances where the marginal gap exceeded the bound
  double max_gap = 0.0;
  std::size_t perturbed_trials = 0;
  std::size_t perturbed_zero_residual = 0;
  double min_perturbed_residual = 0.0;
  std::size_t probe_trials = 0;          // random instances (k >= 2) with residual > 0.01
  std::size_t probe_marginal_broken = 0;  // ... whose marginal differs at some c in S_c
  std::vector<OracleInstance> counterexamples;
};

// Random sizes n in [1, nmax], k in [1, kmax]; perturbed instances use n >= 2.
OracleSweep run_oracle_sweep(std::size_t trials, std::size_t nmax, std::size_t kmax, std::uint64_t seed,
                             double tol);

}  // namespace s2cgan
