#include <random>

#include "doctest.h"

#include "dissipanet/dissipativity.hpp"
#include "dissipanet/errors.hpp"
#include "dissipanet/microgrid.hpp"
#include "support.hpp"

using namespace dissipanet;
using namespace dissipanet::microgrid;

namespace {

Vec skewed_reference() {
  Vec v(4);
  v << 48.0, 47.9, 48.1, 48.0;
  return v;
}

}  // namespace

TEST_CASE("dgu step by hand") {
  const MicrogridParams mg = default_ring();
  const DguParams& p = mg.nodes[0];
  const auto [i1, v1] = dgu_step(p, 0.0, 0.0, 0.5, 0.0);
  CHECK(i1 == doctest::Approx(p.Ts * 0.5 * p.Vs / p.L));
  CHECK(v1 == 0.0);
  CHECK_THROWS_AS(dgu_step(p, 0.0, 0.0, 1.0, 0.0), InvalidParameter);
}

TEST_CASE("line step decay and fixed point") {
  const LineParams l{0.07, 2.1e-6, 1e-5};
  CHECK(line_step(l, 1.0, 0.0) == doctest::Approx(1.0 - l.Ts * l.Rl / l.Ll));
  const double mu = 0.3;
  CHECK(line_step(l, -mu / l.Rl, mu) == doctest::Approx(-mu / l.Rl));
  double il = 0.0;
  for (int i = 0; i < 20000; ++i) il = line_step(l, il, mu);
  CHECK(std::abs(il + mu / l.Rl) < 1e-8);
}

TEST_CASE("uniform reference gives zero line currents") {
  const MicrogridParams mg = default_ring();
  const auto eq = compute_equilibrium(mg.v_ref, mg.nodes, mg.lines, mg.topo);
  CHECK(eq.Il.isZero(0.0));
  CHECK(eq.nu.isZero(0.0));
  for (int i = 0; i < 4; ++i) CHECK(eq.I(i) == doctest::Approx(mg.nodes[static_cast<std::size_t>(i)].G * 48.0));
}

TEST_CASE("skewed reference is a fixed point of the physical network") {
  const MicrogridParams mg = default_ring();
  const auto eq = compute_equilibrium(skewed_reference(), mg.nodes, mg.lines, mg.topo);
  CHECK(eq.node_residual <= 1e-10);
  CHECK(eq.edge_residual <= 1e-10);
  // Independent transcription: line current flows positive -> negative end.
  for (int i = 0; i < 4; ++i) {
    const int prev = (i + 3) % 4;
    const double nu = eq.Il(prev) - eq.Il(i);
    CHECK(nu == doctest::Approx(eq.nu(i)).epsilon(1e-12));
    const auto [i1, v1] = dgu_step(mg.nodes[static_cast<std::size_t>(i)], eq.I(i), eq.V(i), eq.u(i), nu);
    CHECK(std::abs(i1 - eq.I(i)) <= 1e-10);
    CHECK(std::abs(v1 - eq.V(i)) <= 1e-10);
    const double mu = eq.V((i + 1) % 4) - eq.V(i);
    CHECK(std::abs(line_step(mg.lines[static_cast<std::size_t>(i)], eq.Il(i), mu) - eq.Il(i)) <= 1e-10);
  }
}

TEST_CASE("references above the source voltage are infeasible") {
  const MicrogridParams mg = default_ring();
  CHECK_THROWS_AS(compute_equilibrium(Vec::Constant(4, 120.0), mg.nodes, mg.lines, mg.topo),
                  InvalidParameter);
}

TEST_CASE("shift and unshift") {
  const MicrogridParams mg = default_ring();
  const auto eq = compute_equilibrium(skewed_reference(), mg.nodes, mg.lines, mg.topo);
  NetworkState phys{Vec(8), eq.Il, 0};
  for (int i = 0; i < 4; ++i) {
    phys.x(2 * i) = eq.I(i);
    phys.x(2 * i + 1) = eq.V(i);
  }
  const NetworkState s = shift(phys, eq);
  CHECK(s.x.isZero(0.0));
  CHECK(s.z.isZero(0.0));
  std::mt19937_64 rng(3);
  phys.x += testing::random_vec(rng, 8);
  phys.z += testing::random_vec(rng, 4);
  const NetworkState back = unshift(shift(phys, eq), eq);
  for (int i = 0; i < 8; ++i) CHECK(back.x(i) == doctest::Approx(phys.x(i)).epsilon(1e-15));
  for (int i = 0; i < 4; ++i) CHECK(back.z(i) == doctest::Approx(phys.z(i)).epsilon(1e-15));
}

TEST_CASE("shifted network stays at the origin with zero control") {
  const MicrogridParams mg = default_ring();
  const auto eq = compute_equilibrium(skewed_reference(), mg.nodes, mg.lines, mg.topo);
  const Network net = make_shifted_network(mg, eq);
  const auto [next, io] = net.step(net.zero_state(), Vec::Zero(4));
  CHECK(next.x.isZero(0.0));
  CHECK(next.z.isZero(0.0));
}

TEST_CASE("shifted step matches a physical transcription") {
  const MicrogridParams mg = default_ring();
  const auto eq = compute_equilibrium(skewed_reference(), mg.nodes, mg.lines, mg.topo);
  const Network net = make_shifted_network(mg, eq);
  std::mt19937_64 rng(21);
  NetworkState s = net.zero_state();
  s.x = testing::random_vec(rng, 8, 0.5);
  s.z = testing::random_vec(rng, 4, 0.5);
  const Vec u = testing::random_vec(rng, 4, 0.05);
  const NetworkState phys = unshift(s, eq);
  const auto [next, io] = net.step(s, u);
  // Physical lines first; the nodes see the midpoint line current.
  Vec il_next(4);
  for (int k = 0; k < 4; ++k) {
    const double mu = phys.x(2 * ((k + 1) % 4) + 1) - phys.x(2 * k + 1);
    il_next(k) = line_step(mg.lines[static_cast<std::size_t>(k)], phys.z(k), mu);
  }
  for (int i = 0; i < 4; ++i) {
    const int prev = (i + 3) % 4;
    const double nu = 0.5 * (phys.z(prev) + il_next(prev)) - 0.5 * (phys.z(i) + il_next(i));
    const auto [i1, v1] = dgu_step(mg.nodes[static_cast<std::size_t>(i)], phys.x(2 * i),
                                   phys.x(2 * i + 1), eq.u(i) + u(i), nu);
    CHECK(next.x(2 * i) + eq.I(i) == doctest::Approx(i1).epsilon(1e-12));
    CHECK(next.x(2 * i + 1) + eq.V(i) == doctest::Approx(v1).epsilon(1e-12));
    CHECK(next.z(i) + eq.Il(i) == doctest::Approx(il_next(i)).epsilon(1e-12));
  }
}

TEST_CASE("load step adds the conductance forcing") {
  const MicrogridParams mg = default_ring();
  const auto eq = compute_equilibrium(mg.v_ref, mg.nodes, mg.lines, mg.topo);
  std::vector<double> g;
  for (const auto& p : mg.nodes) g.push_back(1.05 * p.G);
  const Network stepped = make_shifted_network(mg, eq, g);
  const auto [next, io] = stepped.step(stepped.zero_state(), Vec::Zero(4));
  for (int i = 0; i < 4; ++i) {
    const auto& p = mg.nodes[static_cast<std::size_t>(i)];
    const auto [i1, v1] = dgu_step({p.R, p.L, p.C, 1.05 * p.G, p.Vs, p.Ts}, eq.I(i), eq.V(i), eq.u(i), 0.0);
    CHECK(next.x(2 * i + 1) + eq.V(i) == doctest::Approx(v1).epsilon(1e-14));
    CHECK(next.x(2 * i) + eq.I(i) == doctest::Approx(i1).epsilon(1e-14));
  }
}

TEST_CASE("reward") {
  CHECK(reward(48.0, 48.0, 1.0) == 0.0);
  CHECK(reward(50.0, 48.0, 0.25) == doctest::Approx(-1.0));
  CHECK(reward(46.0, 48.0, 0.25) == reward(50.0, 48.0, 0.25));
}

TEST_CASE("continuous supplies match the direct formulas") {
  const MicrogridParams mg = default_ring();
  const SupplySpec s = microgrid_supplies(mg, SupplyModel::continuous);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 50; ++t) {
    const double a = u(rng), y = u(rng);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& p = mg.nodes[i];
      CHECK(eval_supply(s.nodes[i].u, Vec::Constant(1, a), Vec::Constant(1, y)) ==
            doctest::Approx(a * y - p.R * y * y));
      CHECK(eval_supply(s.nodes[i].nu, Vec::Constant(1, a), Vec::Constant(1, y)) ==
            doctest::Approx(a * y - p.G * y * y));
      CHECK(eval_supply(s.edges[i], Vec::Constant(1, a), Vec::Constant(1, y)) ==
            doctest::Approx(a * y - mg.lines[i].Rl * y * y));
    }
  }
  CHECK(s.epsilon_e() == doctest::Approx(0.05));
  CHECK(check_assumption3(mg.topo, s.stacked_s_nu(), s.stacked_s_e()) == 0.0);
  double beta = 1e300;
  for (const auto& p : mg.nodes) beta = std::min(beta, p.R);
  const auto rep = check_assumption4(mg.topo, s.epsilon_e(), s.delta_e(), 0.0, beta);
  CHECK(rep.lambda_min_b_delta == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(rep.lambda_min_b_epsilon > 0.0);
}

TEST_CASE("discrete node supply bounds the storage increment at every step") {
  const MicrogridParams mg = default_ring();
  const SupplySpec s = microgrid_supplies(mg, SupplyModel::discrete);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> du(-0.4, 0.4), dnu(-5.0, 5.0);
  for (std::size_t i = 0; i < 4; ++i) {
    const DguParams& p = mg.nodes[i];
    const ShiftedDgu node(p, 48.0);
    Vec x = Vec::Zero(2);
    std::vector<double> trace;
    for (int t = 0; t < 1000; ++t) {
      const Vec u = Vec::Constant(1, du(rng)), nu = Vec::Constant(1, dnu(rng));
      const Vec xn = node.step(x, u, nu);
      const double w = eval_supply(s.nodes[i].u, u, node.output_u(x)) +
                       eval_supply(s.nodes[i].nu, nu, node.output_nu(x));
      const double ds = dgu_storage(p, xn(0), xn(1)) - dgu_storage(p, x(0), x(1));
      CHECK(w - ds >= -1e-9 * (1.0 + std::abs(ds)));
      trace.push_back(w);
      x = xn;
    }
    CHECK(cumulative_supply_check(trace).ok);
  }
}

TEST_CASE("edge supply equals the storage increment") {
  const MicrogridParams mg = default_ring();
  const SupplySpec s = microgrid_supplies(mg);
  std::mt19937_64 rng(78);
  std::uniform_real_distribution<double> dmu(-1.0, 1.0);
  for (std::size_t k = 0; k < 4; ++k) {
    const ShiftedLine line(mg.lines[k]);
    Vec z = Vec::Zero(1);
    std::vector<double> trace;
    for (int t = 0; t < 1000; ++t) {
      const Vec mu = Vec::Constant(1, dmu(rng));
      const Vec zn = line.step(z, mu);
      const double w = eval_supply(s.edges[k], mu, line.output(z, mu));
      const double ds = line.storage(zn(0)) - line.storage(z(0));
      CHECK(std::abs(w - ds) <= 1e-9 * (1.0 + std::abs(ds)));
      trace.push_back(w);
      z = zn;
    }
    CHECK(cumulative_supply_check(trace).ok);
  }
}

TEST_CASE("default shield keeps zero correction feasible and passes the network checks") {
  const MicrogridParams mg = default_ring();
  const auto eq = compute_equilibrium(mg.v_ref, mg.nodes, mg.lines, mg.topo);
  const SupplySpec s = microgrid_supplies(mg);
  const ShieldConfig sh = default_shield(s, eq, 0.5, 1.0, true);
  REQUIRE(sh.nodes.size() == 4);
  const auto [alpha, beta] = alpha_beta(sh.desired());
  const auto rep = check_assumption4(mg.topo, s.epsilon_e(), s.delta_e(), alpha, beta);
  CHECK(rep.strict());
  // u~ = 0 gives -w_tilde >= 0 for any local signals and a nonnegative barrier
  std::mt19937_64 rng(5);
  for (int t = 0; t < 500; ++t) {
    const Vec v = testing::random_vec(rng, 3, 10.0);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto w = node_supplies(s.nodes[i], sh.desired()[i], Vec::Zero(1), v.segment(0, 1),
                                   v.segment(1, 1), v.segment(2, 1));
      CHECK(-w.w_tilde >= -1e-12);
    }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(sh.nodes[i].box->lo(0) == -eq.u(static_cast<Eigen::Index>(i)));
    CHECK(sh.nodes[i].box->hi(0) == 1.0 - eq.u(static_cast<Eigen::Index>(i)));
  }
}

TEST_CASE("parameter validation") {
  MicrogridParams mg = default_ring();
  mg.nodes[1].L = 1e-9;
  CHECK_THROWS_AS(mg.validate(), InvalidParameter);
  mg = default_ring();
  mg.reward_k(2) = 0.0;
  CHECK_THROWS_AS(mg.validate(), InvalidParameter);
  CHECK_THROWS_AS(parse_supply_model("euler"), InvalidParameter);
}
