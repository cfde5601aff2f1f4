#include <random>

#include "doctest.h"

#include "dissipanet/dissipativity.hpp"
#include "dissipanet/errors.hpp"
#include "support.hpp"

using namespace dissipanet;
using testing::random_mat;
using testing::random_vec;

TEST_CASE("scalar QSR supply by hand") {
  const QsrSupply w = QsrSupply::scalar(0.5, 1.0, 0.0);
  CHECK(eval_supply(w, Vec::Constant(1, 1.0), Vec::Constant(1, 2.0)) == doctest::Approx(0.0));
  CHECK(eval_supply(w, Vec::Zero(1), Vec::Zero(1)) == 0.0);
  const QsrSupply v = QsrSupply::scalar(0.25, 2.0, 0.5);
  // 3*2*1.5 - 0.5*9 - 0.25*2.25
  CHECK(eval_supply(v, Vec::Constant(1, 3.0), Vec::Constant(1, 1.5)) ==
        doctest::Approx(9.0 - 4.5 - 0.5625));
}

TEST_CASE("supply is unchanged by symmetrizing Q and R") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat q = random_mat(rng, 3, 3), s = random_mat(rng, 3, 2), r = random_mat(rng, 2, 2);
    const Vec a = random_vec(rng, 2), y = random_vec(rng, 3);
    const QsrSupply w(q, s, r);
    const double direct = a.dot(s.transpose() * y) - a.dot(r * a) - y.dot(q * y);
    CHECK(eval_supply(w, a, y) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(w.q().isApprox(w.q().transpose()));
    CHECK(w.r().isApprox(w.r().transpose()));
  }
}

TEST_CASE("supply rejects mismatched dimensions") {
  CHECK_THROWS_AS(QsrSupply(Mat::Zero(2, 2), Mat::Zero(1, 2), Mat::Zero(2, 2)), DimensionError);
  const QsrSupply w = QsrSupply::scalar(1.0, 1.0, 1.0);
  CHECK_THROWS_AS(eval_supply(w, Vec::Zero(2), Vec::Zero(1)), DimensionError);
}

TEST_CASE("desired supply by hand") {
  const Mat s = Mat::Identity(1, 1);
  CHECK(desired_supply(Vec::Zero(1), Vec::Zero(1), Vec::Zero(1), 0.3, 0.7, s) == 0.0);
  CHECK(desired_supply(Vec::Constant(1, 1.0), Vec::Zero(1), Vec::Constant(1, 2.0), 0.5, 0.25, s) ==
        doctest::Approx(0.5));
}

TEST_CASE("cumulative supply check examples") {
  auto r = cumulative_supply_check({1.0, -0.5, 2.0});
  CHECK(r.ok);
  CHECK(r.min_prefix == 0.0);  // the empty prefix counts
  CHECK(cumulative_supply_check({0.0, 0.0, 0.0}).ok);
  r = cumulative_supply_check({1.0, -2.0});
  CHECK_FALSE(r.ok);
  REQUIRE(r.first_violation.has_value());
  CHECK(*r.first_violation == 1);
}

TEST_CASE("cumulative supply check agrees with a prefix-sum oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.2);
  std::uniform_int_distribution<int> len(0, 30);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> tr(static_cast<std::size_t>(len(rng)));
    for (auto& v : tr) v = u(rng);
    double sum = 0.0, mn = 0.0;
    std::optional<std::size_t> first;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      sum += tr[i];
      mn = std::min(mn, sum);
      if (!first && sum < -kTrajectoryTol) first = i;
    }
    const auto r = cumulative_supply_check(tr);
    CHECK(r.ok == !first.has_value());
    CHECK(r.first_violation == first);
    CHECK(r.min_prefix == doctest::Approx(mn));
  }
}

TEST_CASE("structural supply-coupling residual") {
  const NetworkTopology ring = NetworkTopology::ring(4);
  CHECK(check_assumption3(ring, Mat::Identity(4, 4), Mat::Identity(4, 4)) == 0.0);
  CHECK(check_assumption3(ring, 2.0 * Mat::Identity(4, 4), Mat::Identity(4, 4)) == doctest::Approx(1.0));
  // c I on both sides is exact on any graph
  const NetworkTopology g(5, {{0, 1}, {2, 1}, {3, 4}, {4, 0}, {2, 3}, {1, 3}});
  for (double c : {0.3, 1.0, 7.5})
    CHECK(check_assumption3(g, c * Mat::Identity(5, 5), c * Mat::Identity(6, 6)) == 0.0);
}

TEST_CASE("structural residual is invariant under edge relabeling") {
  const NetworkTopology a(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}});
  const NetworkTopology b(4, {{2, 3}, {0, 2}, {3, 0}, {0, 1}, {1, 2}});
  Mat s_nu = Mat::Identity(4, 4) * 1.5;
  CHECK(check_assumption3(a, s_nu, Mat::Identity(5, 5) * 1.5) == 0.0);
  CHECK(check_assumption3(b, s_nu, Mat::Identity(5, 5) * 1.5) == 0.0);
}

TEST_CASE("spectral condition eigenvalues") {
  const NetworkTopology ring = NetworkTopology::ring(4);
  // B^T B of the 4-ring has spectrum {0, 2, 2, 4}.
  auto rep = check_assumption4(ring, 0.1, 0.0, 1.0, 0.0);
  CHECK(rep.lambda_min_b_delta == doctest::Approx(0.1).epsilon(1e-12));
  rep = check_assumption4(ring, 0.1, 0.0, -0.01, 0.0);
  CHECK(rep.lambda_min_b_delta == doctest::Approx(0.1 - 0.04).epsilon(1e-12));
  // no edges: only eps_e remains
  const NetworkTopology lone(3, {});
  rep = check_assumption4(lone, 0.2, 0.0, -100.0, 0.5);
  CHECK(rep.lambda_min_b_delta == doctest::Approx(0.2));
  CHECK(rep.lambda_min_b_epsilon == doctest::Approx(0.5));
  CHECK(rep.holds());
  CHECK_FALSE(check_assumption4(ring, 0.05, 0.0, -1.0, 0.0).holds());
}

TEST_CASE("alpha and beta are the minima") {
  const auto [a, b] = alpha_beta({{0.3, 1.0}, {-0.2, 2.0}, {0.0, 0.5}});
  CHECK(a == -0.2);
  CHECK(b == 0.5);
}

TEST_CASE("network supply bound on the zero trajectory") {
  const NetworkTopology ring = NetworkTopology::ring(3);
  SupplySpec spec;
  for (int i = 0; i < 3; ++i) {
    spec.nodes.push_back({QsrSupply::scalar(1.0, 1.0, 0.0), QsrSupply::scalar(1.0, 1.0, 0.0)});
    spec.edges.push_back(QsrSupply::scalar(0.1, 1.0, 0.0));
  }
  std::vector<IoRecord> trace(5, IoRecord{Vec::Zero(3), Vec::Zero(3), Vec::Zero(3), Vec::Zero(3),
                                          Vec::Zero(3), Vec::Zero(3)});
  const auto r = network_supply_bound(trace, spec, {{0, 0.5}, {0, 0.5}, {0, 0.5}}, ring);
  CHECK(r.ok);
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(r.lhs[t] == 0.0);
    CHECK(r.rhs[t] == 0.0);
  }
}

TEST_CASE("network supply bound holds on random interconnected signals") {
  // With nu = B omega and mu = -B^T y_nu the bound lhs <= rhs <= 0 is an
  // algebraic identity chain when the spectral condition holds.
  std::mt19937_64 rng(23);
  const NetworkTopology ring = NetworkTopology::ring(4);
  SupplySpec spec;
  for (int i = 0; i < 4; ++i) {
    spec.nodes.push_back({QsrSupply::scalar(0.2, 1.0, 0.0), QsrSupply::scalar(0.1, 1.0, 0.0)});
    spec.edges.push_back(QsrSupply::scalar(0.05 + 0.01 * i, 1.0, 0.0));
  }
  const std::vector<DesiredSupplyParams> desired(4, {0.0, 0.1});
  std::vector<IoRecord> trace;
  for (int t = 0; t < 300; ++t) {
    const Vec y_nu = random_vec(rng, 4), omega = random_vec(rng, 4), y_u = random_vec(rng, 4);
    const CouplingInputs c = couple(y_nu, omega, ring);
    trace.push_back({random_vec(rng, 4), c.nu, y_u, y_nu, c.mu, omega});
  }
  const auto r = network_supply_bound(trace, spec, desired, ring);
  CHECK(r.ok);
  CHECK(r.min_margin >= -1e-8);
  CHECK(r.max_lhs <= 1e-8);
}
