#include "s2cgan/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "s2cgan/error.hpp"

namespace s2cgan {

namespace {

constexpr double kStochTol = 1e-12;

void check_matrix(const Matrix& m, std::size_t rows, std::size_t cols, bool stochastic,
                  const char* name) {
  if (m.size() != rows) {
    throw ShapeError(std::string("oracle: ") + name + " must have " + std::to_string(rows) + " rows");
  }
  for (const auto& row : m) {
    if (row.size() != cols) {
      throw ShapeError(std::string("oracle: ") + name + " rows must have " + std::to_string(cols) + " entries");
    }
    double sum = 0.0;
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string("oracle: ") + name + " has a negative entry");
      sum += v;
    }
    if (stochastic && std::abs(sum - 1.0) > kStochTol) {
      throw DomainError(std::string("oracle: ") + name + " row does not sum to 1");
    }
  }
}

void check_indices(const std::vector<std::size_t>& idx, std::size_t bound, const char* name) {
  for (std::size_t i : idx) {
    if (i >= bound) throw InvalidArgument(std::string("oracle: ") + name + " index out of range");
  }
}

std::vector<std::size_t> random_subset(std::size_t n, Rng& rng) {
  std::vector<std::size_t> out;
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < n; ++i) {
    if (coin(rng)) out.push_back(i);
  }
  if (out.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    out.push_back(pick(rng));
  }
  return out;
}

}  // namespace

void OracleInstance::validate() const {
  if (n < 1 || k < 1) throw InvalidArgument("oracle: n and k must be at least 1");
  if (p_x.size() != n) throw ShapeError("oracle: p_x must have n entries");
  check_matrix({p_x}, 1, n, true, "p_x");
  check_matrix(joint, n, k, false, "joint");
  check_matrix(labeller, n, k, true, "labeller");
  check_matrix(generator, k, n, true, "generator");
  double total = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    const double row = std::accumulate(joint[x].begin(), joint[x].end(), 0.0);
    if (std::abs(row - p_x[x]) > kStochTol) throw DomainError("oracle: joint x-marginal differs from p_x");
    total += row;
  }
  if (std::abs(total - 1.0) > kStochTol) throw DomainError("oracle: joint does not sum to 1");
  check_indices(s_x, n, "S_x");
  check_indices(s_c, k, "S_c");
}

std::vector<double> OracleInstance::true_prior() const {
  std::vector<double> p(k, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t c = 0; c < k; ++c) p[c] += joint[x][c];
  }
  return p;
}

std::vector<double> induced_label_marginal(const OracleInstance& inst) {
  inst.validate();
  std::vector<double> p(inst.k, 0.0);
  for (std::size_t x = 0; x < inst.n; ++x) {
    for (std::size_t c = 0; c < inst.k; ++c) p[c] += inst.labeller[x][c] * inst.p_x[x];
  }
  return p;
}

double joint_match_residual(const OracleInstance& inst) {
  const std::vector<double> p_l = induced_label_marginal(inst);
  double worst = 0.0;
  for (std::size_t x = 0; x < inst.n; ++x) {
    for (std::size_t c = 0; c < inst.k; ++c) {
      const double lhs = inst.p_x[x] * inst.labeller[x][c];
      const double rhs = inst.generator[c][x] * p_l[c];
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

MarginalReport verify_marginal_consequence(const OracleInstance& inst, double tol) {
  if (inst.s_x.empty() || inst.s_c.empty()) {
    throw InvalidArgument("verify_marginal_consequence: S_x and S_c must be non-empty");
  }
  const std::vector<double> p_c = inst.true_prior();
  const std::vector<double> p_l = induced_label_marginal(inst);
  MarginalReport r;
  r.eq10_residual = joint_match_residual(inst);
  for (std::size_t x : inst.s_x) {
    for (std::size_t c = 0; c < inst.k; ++c) {
      r.eq11_residual = std::max(r.eq11_residual, std::abs(inst.labeller[x][c] - inst.joint[x][c] / inst.p_x[x]));
    }
  }
  for (std::size_t c : inst.s_c) {
    for (std::size_t x = 0; x < inst.n; ++x) {
      r.eq12_residual = std::max(r.eq12_residual, std::abs(inst.generator[c][x] - inst.joint[x][c] / p_c[c]));
    }
  }
  r.residuals_within_tol = r.eq10_residual <= tol && r.eq11_residual <= tol && r.eq12_residual <= tol;
  r.holds = true;
  for (std::size_t c : inst.s_c) {
    r.gaps.push_back(std::abs(p_l[c] - p_c[c]));
    if (r.gaps.back() > 10.0 * tol) r.holds = false;
  }
  if (!r.residuals_within_tol) r.holds = false;
  return r;
}

OracleInstance enumerate_consistent_instance(std::size_t n, std::size_t k, Rng& rng) {
  if (n < 1 || k < 1) throw InvalidArgument("enumerate_consistent_instance: n and k must be at least 1");
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  OracleInstance inst;
  inst.n = n;
  inst.k = k;
  inst.joint.assign(n, std::vector<double>(k));
  double total = 0.0;
  for (auto& row : inst.joint) {
    for (double& v : row) total += (v = u(rng));
  }
  for (auto& row : inst.joint) {
    for (double& v : row) v /= total;
  }
  inst.p_x.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    inst.p_x[x] = std::accumulate(inst.joint[x].begin(), inst.joint[x].end(), 0.0);
  }
  const std::vector<double> p_c = inst.true_prior();
  inst.labeller.assign(n, std::vector<double>(k));
  inst.generator.assign(k, std::vector<double>(n));
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t c = 0; c < k; ++c) {
      inst.labeller[x][c] = inst.joint[x][c] / inst.p_x[x];
      inst.generator[c][x] = inst.joint[x][c] / p_c[c];
    }
  }
  inst.s_x = random_subset(n, rng);
  inst.s_c = random_subset(k, rng);
  return inst;
}

OracleInstance perturb_generator(const OracleInstance& inst, std::size_t c, std::size_t x, double delta) {
  if (c >= inst.k || x >= inst.n) throw InvalidArgument("perturb_generator: index out of range");
  OracleInstance out = inst;
  auto& row = out.generator[c];
  row[x] += delta;
  const double sum = std::accumulate(row.begin(), row.end(), 0.0);
  for (double& v : row) v /= sum;
  return out;
}

OracleInstance random_instance(std::size_t n, std::size_t k, Rng& rng) {
  OracleInstance inst = enumerate_consistent_instance(n, k, rng);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  auto randomize = [&](Matrix& m) {
    for (auto& row : m) {
      double sum = 0.0;
      for (double& v : row) sum += (v = u(rng));
      for (double& v : row) v /= sum;
    }
  };
  randomize(inst.labeller);
  randomize(inst.generator);
  return inst;
}

OracleSweep run_oracle_sweep(std::size_t trials, std::size_t nmax, std::size_t kmax, std::uint64_t seed,
                             double tol) {
  if (nmax < 1 || kmax < 1) throw InvalidArgument("oracle-check: nmax and kmax must be at least 1");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick_n(1, nmax), pick_k(1, kmax);
  OracleSweep out;
  out.min_perturbed_residual = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    const OracleInstance inst = enumerate_consistent_instance(pick_n(rng), pick_k(rng), rng);
    const MarginalReport rep = verify_marginal_consequence(inst, tol);
    ++out.consistent_trials;
    for (double g : rep.gaps) out.max_gap = std::max(out.max_gap, g);
    if (!rep.holds) {
      ++out.consistent_failures;
      out.counterexamples.push_back(inst);
    }
  }
  if (nmax >= 2) {
    std::uniform_int_distribution<std::size_t> pick_n2(2, nmax);
    for (std::size_t t = 0; t < trials; ++t) {
      const OracleInstance base = enumerate_consistent_instance(pick_n2(rng), pick_k(rng), rng);
      std::uniform_int_distribution<std::size_t> c(0, base.k - 1), x(0, base.n - 1);
      const double residual = joint_match_residual(perturb_generator(base, c(rng), x(rng), 1e-3));
      ++out.perturbed_trials;
      out.min_perturbed_residual = std::min(out.min_perturbed_residual, residual);
      if (!(residual > 0.0)) ++out.perturbed_zero_residual;
    }
  }
  // k = 1 makes both marginals the point mass, so the probe needs k >= 2.
  std::uniform_int_distribution<std::size_t> pick_k2(2, std::max<std::size_t>(kmax, 2));
  for (std::size_t t = 0; t < trials; ++t) {
    const OracleInstance inst = random_instance(pick_n(rng), pick_k2(rng), rng);
    if (!(joint_match_residual(inst) > 0.01)) continue;
    ++out.probe_trials;
    const std::vector<double> p_l = induced_label_marginal(inst);
    const std::vector<double> p_c = inst.true_prior();
    for (std::size_t c : inst.s_c) {
      if (std::abs(p_l[c] - p_c[c]) > 10.0 * tol) {
        ++out.probe_marginal_broken;
        break;
      }
    }
  }
  if (out.perturbed_trials == 0) out.min_perturbed_residual = 0.0;
  return out;
}

}  // namespace s2cgan
