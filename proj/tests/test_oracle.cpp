#include <cmath>
#include <numeric>

#include "doctest.h"
#include "s2cgan/error.hpp"
#include "s2cgan/oracle.hpp"

using namespace s2cgan;

namespace {

// Independent marginal: sum over x of p_L(c|x) p_X(x), then the p_C row sums.
std::vector<double> test_side_marginal(const OracleInstance& in) {
  std::vector<double> m(in.k, 0.0);
  for (std::size_t x = 0; x < in.n; ++x) {
    for (std::size_t c = 0; c < in.k; ++c) m[c] += in.labeller[x][c] * in.p_x[x];
  }
  return m;
}

OracleInstance identity_instance(std::size_t n) {
  OracleInstance in;
  in.n = in.k = n;
  in.p_x.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) in.p_x[i] = static_cast<double>(i + 1);
  const double z = std::accumulate(in.p_x.begin(), in.p_x.end(), 0.0);
  for (double& p : in.p_x) p /= z;
  in.joint.assign(n, std::vector<double>(n, 0.0));
  in.labeller.assign(n, std::vector<double>(n, 0.0));
  in.generator.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    in.joint[i][i] = in.p_x[i];
    in.labeller[i][i] = 1.0;
    in.generator[i][i] = 1.0;
  }
  in.s_x = {0};
  in.s_c = {0};
  return in;
}

}  // namespace

TEST_CASE("induced label marginal") {
  auto id = identity_instance(4);
  CHECK(induced_label_marginal(id) == id.p_x);

  auto uni = id;
  for (auto& row : uni.labeller) row.assign(4, 0.25);
  for (double p : induced_label_marginal(uni)) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));

  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    auto in = random_instance(1 + rng() % 12, 1 + rng() % 6, rng);
    const auto m = induced_label_marginal(in);
    CHECK(std::abs(std::accumulate(m.begin(), m.end(), 0.0) - 1.0) <= 1e-12);
    const auto ref = test_side_marginal(in);
    for (std::size_t c = 0; c < in.k; ++c) CHECK(m[c] == doctest::Approx(ref[c]).epsilon(1e-14));
  }
}

TEST_CASE("joint match residual") {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    auto in = enumerate_consistent_instance(1 + rng() % 12, 1 + rng() % 6, rng);
    // test-side: max |p_X(x) p_L(c|x) - p_G(x|c) p_L(c)| over every (x, c)
    const auto pl = test_side_marginal(in);
    double worst = 0.0;
    for (std::size_t x = 0; x < in.n; ++x) {
      for (std::size_t c = 0; c < in.k; ++c) {
        worst = std::max(worst, std::abs(in.p_x[x] * in.labeller[x][c] - in.generator[c][x] * pl[c]));
      }
    }
    CHECK(worst <= 1e-14);
    CHECK(joint_match_residual(in) <= 1e-14);
  }
  CHECK(joint_match_residual(identity_instance(5)) == 0.0);

  auto matched = enumerate_consistent_instance(6, 3, rng);
  CHECK(joint_match_residual(perturb_generator(matched, 1, 2, 1e-3)) > 1e-5);
}

TEST_CASE("marginal consequence") {
  Rng rng(3);
  for (int t = 0; t < 1000; ++t) {
    auto in = enumerate_consistent_instance(1 + rng() % 12, 1 + rng() % 6, rng);
    const auto r = verify_marginal_consequence(in, 1e-12);
    CHECK(r.holds);
    for (double g : r.gaps) CHECK(g <= 1e-12);
  }

  auto all = enumerate_consistent_instance(7, 4, rng);
  all.s_c = {0, 1, 2, 3};
  const auto r = verify_marginal_consequence(all, 1e-12);
  CHECK(r.holds);
  CHECK(r.gaps.size() == 4);

  auto bad = perturb_generator(all, 2, 3, 1e-2);
  const auto rb = verify_marginal_consequence(bad, 1e-12);
  CHECK_FALSE(rb.holds);
  CHECK(rb.eq10_residual > 1e-12);

  auto single = enumerate_consistent_instance(5, 1, rng);
  for (double g : verify_marginal_consequence(single, 1e-12).gaps) CHECK(g == 0.0);

  auto empty = all;
  empty.s_c.clear();
  CHECK_THROWS_AS(verify_marginal_consequence(empty, 1e-12), InvalidArgument);
}

TEST_CASE("consistent instances") {
  Rng rng(4);
  auto one = enumerate_consistent_instance(1, 1, rng);
  CHECK(one.p_x == std::vector<double>{1.0});
  CHECK(one.joint == Matrix{{1.0}});
  CHECK(one.labeller == Matrix{{1.0}});
  CHECK(one.generator == Matrix{{1.0}});
  for (int t = 0; t < 200; ++t) {
    auto in = enumerate_consistent_instance(1 + rng() % 12, 1 + rng() % 6, rng);
    CHECK_NOTHROW(in.validate());
    CHECK_FALSE(in.s_x.empty());
    CHECK_FALSE(in.s_c.empty());
  }
  CHECK_THROWS_AS(enumerate_consistent_instance(0, 2, rng), InvalidArgument);
}

TEST_CASE("oracle sweep") {
  const auto s = run_oracle_sweep(1000, 12, 6, 7, 1e-10);
  CHECK(s.consistent_trials == 1000);
  CHECK(s.consistent_failures == 0);
  CHECK(s.max_gap <= 1e-10);
  CHECK(s.perturbed_trials == 1000);
  CHECK(s.perturbed_zero_residual == 0);
  CHECK(s.min_perturbed_residual > 0.0);
  CHECK(s.probe_marginal_broken > 0);
  CHECK(s.counterexamples.empty());
}
