#include <cmath>
#include <random>
#include <set>

#include "doctest.h"

#include "dissipanet/errors.hpp"
#include "dissipanet/rl/cem.hpp"
#include "dissipanet/rl/ddpg.hpp"
#include "dissipanet/rl/learner.hpp"
#include "dissipanet/rl/mlp.hpp"
#include "dissipanet/rl/replay.hpp"
#include "support.hpp"

using namespace dissipanet;
using namespace dissipanet::rl;
using testing::random_mat;
using testing::random_vec;

namespace {

// central differences of f around p
template <class F>
Vec fd_gradient(const Vec& p, F f, double h = 1e-5) {
  Vec g(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Vec a = p, b = p;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

bool close_rel(const Vec& a, const Vec& b, double tol) {
  return (a - b).cwiseAbs().maxCoeff() <= tol * std::max(1.0, b.cwiseAbs().maxCoeff());
}

DdpgLiteConfig small_cfg(std::uint64_t seed) {
  DdpgLiteConfig c;
  c.actor_hidden = {4};
  c.critic_hidden = {4};
  c.batch_size = 8;
  c.updates_per_episode = 5;
  c.replay_capacity = 256;
  c.seed = seed;
  return c;
}

Batch random_batch(std::mt19937_64& rng, int obs, int act, int n) {
  Batch b;
  b.x = random_mat(rng, obs, n);
  b.u = random_mat(rng, act, n, 0.4);
  b.x_next = random_mat(rng, obs, n);
  b.r = random_vec(rng, n);
  b.done = Vec::Zero(n);
  b.done(0) = 1.0;
  return b;
}

}  // namespace

TEST_CASE("mlp backward matches finite differences") {
  std::mt19937_64 rng(3);
  Mlp net({2, 4, 1});
  net.init(rng, 1.0);
  const Mat x = random_mat(rng, 2, 5);
  const Mat target = random_mat(rng, 1, 5);
  auto loss = [&](const Vec& p) {
    Mlp m = net;
    m.set_params(p);
    return 0.5 * (m.forward(x) - target).squaredNorm();
  };
  Mlp::Cache cache;
  const Mat y = net.forward(x, &cache);
  Vec grad = Vec::Zero(static_cast<Eigen::Index>(net.param_count()));
  const Mat dx = net.backward(cache, y - target, grad);
  CHECK(close_rel(grad, fd_gradient(net.params(), loss), 1e-5));

  // input gradient
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Mat xp = x, xm = x;
      xp(i, j) += 1e-5;
      xm(i, j) -= 1e-5;
      const double fd = (0.5 * (net.forward(xp) - target).squaredNorm() -
                         0.5 * (net.forward(xm) - target).squaredNorm()) / 2e-5;
      CHECK(dx(i, j) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("mlp params round trip and soft update") {
  std::mt19937_64 rng(4);
  Mlp a({3, 5, 2}), b({3, 5, 2});
  a.init(rng);
  b.init(rng);
  CHECK(a.param_count() == 3 * 5 + 5 + 5 * 2 + 2);
  Mlp c = a;
  c.set_params(a.params());
  CHECK((c.params().array() == a.params().array()).all());
  c.soft_update(b, 1.0);
  CHECK((c.params().array() == b.params().array()).all());
  c = a;
  c.soft_update(b, 0.0);
  CHECK((c.params().array() == a.params().array()).all());
  c.soft_update(b, 0.25);
  CHECK(c.params().isApprox(0.25 * b.params() + 0.75 * a.params()));
  const Mlp d = Mlp::from_json(a.to_json());
  CHECK((d.params().array() == a.params().array()).all());
  CHECK_THROWS_AS(c.set_params(Vec::Zero(3)), DimensionError);
}

TEST_CASE("critic loss and actor objective gradients match finite differences") {
  std::mt19937_64 rng(8);
  DdpgLite agent(2, Vec::Constant(1, -0.5), Vec::Constant(1, 0.7), small_cfg(1));
  // give the actor a nonzero output layer so its gradient is informative
  std::mt19937_64 init(99);
  agent.actor().init(init, 1.0);
  const Batch b = random_batch(rng, 2, 1, 6);
  const Vec y = random_vec(rng, 6);

  Vec g;
  agent.critic_loss(b, y, &g);
  const Vec p0 = agent.critic().params();
  const Vec fd = fd_gradient(p0, [&](const Vec& p) {
    agent.critic().set_params(p);
    const double v = agent.critic_loss(b, y, nullptr);
    agent.critic().set_params(p0);
    return v;
  });
  CHECK(close_rel(g, fd, 1e-5));

  agent.actor_objective(b, &g);
  const Vec a0 = agent.actor().params();
  const Vec fa = fd_gradient(a0, [&](const Vec& p) {
    agent.actor().set_params(p);
    const double v = agent.actor_objective(b, nullptr);
    agent.actor().set_params(a0);
    return v;
  });
  CHECK(close_rel(g, fa, 1e-5));
}

TEST_CASE("fresh actor plays the box midpoint") {
  DdpgLite agent(3, Vec::Constant(2, -0.2), Vec::Constant(2, 0.6), small_cfg(5));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i) {
    const Vec a = agent.act(random_vec(rng, 3, 5.0), false);
    CHECK(a(0) == doctest::Approx(0.2));
    CHECK(a(1) == doctest::Approx(0.2));
  }
}

TEST_CASE("exploration noise is seeded and stays in the box") {
  DdpgLite a(1, Vec::Constant(1, -0.1), Vec::Constant(1, 0.1), small_cfg(11));
  DdpgLite b(1, Vec::Constant(1, -0.1), Vec::Constant(1, 0.1), small_cfg(11));
  bool moved = false;
  for (int i = 0; i < 200; ++i) {
    const Vec obs = Vec::Constant(1, 0.01 * i);
    const double ua = a.act(obs, true)(0), ub = b.act(obs, true)(0);
    CHECK(ua == ub);
    CHECK(ua >= -0.1);
    CHECK(ua <= 0.1);
    moved = moved || ua != 0.0;
  }
  CHECK(moved);
}

TEST_CASE("critic with gamma 0 learns a constant reward") {
  DdpgLiteConfig cfg = small_cfg(2);
  cfg.gamma = 0.0;
  cfg.critic_lr = 1e-2;
  DdpgLite agent(1, Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), cfg);
  std::mt19937_64 rng(6);
  Batch b = random_batch(rng, 1, 1, 32);
  b.r.setOnes();
  for (int i = 0; i < 500; ++i) agent.td_update(b);
  for (int j = 0; j < 32; ++j)
    CHECK(agent.q_value(b.x.col(j), b.u.col(j)) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(agent.targets(b).isApprox(Vec::Ones(32)));
}

TEST_CASE("tau 1 copies the online networks into the targets") {
  DdpgLiteConfig cfg = small_cfg(3);
  cfg.tau = 1.0;
  DdpgLite agent(2, Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), cfg);
  std::mt19937_64 rng(7);
  agent.td_update(random_batch(rng, 2, 1, 8));
  CHECK((agent.actor_target().params().array() == agent.actor().params().array()).all());
  CHECK((agent.critic_target().params().array() == agent.critic().params().array()).all());
}

TEST_CASE("ddpg checkpoint round trip keeps the policy") {
  DdpgLite agent(2, Vec::Constant(1, -0.3), Vec::Constant(1, 0.3), small_cfg(4));
  std::mt19937_64 rng(2);
  for (int i = 0; i < 40; ++i)
    agent.observe({random_vec(rng, 2), random_vec(rng, 1, 0.3), random_vec(rng, 2), 0.1 * i, false});
  agent.end_episode(0.0);
  const auto back = learner_from_json(agent.to_json());
  CHECK(back->kind() == "ddpg");
  for (int i = 0; i < 10; ++i) {
    const Vec obs = random_vec(rng, 2);
    CHECK(back->act(obs, false)(0) == agent.act(obs, false)(0));
  }
}

TEST_CASE("ddpg rejects bad input") {
  CHECK_THROWS_AS(DdpgLite(1, Vec::Constant(1, 0.2), Vec::Constant(1, 0.1), small_cfg(0)), InvalidParameter);
  DdpgLite agent(2, Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), small_cfg(0));
  CHECK_THROWS_AS(agent.act(Vec::Zero(3), false), DimensionError);
  Vec bad = Vec::Zero(2);
  bad(1) = std::nan("");
  CHECK_THROWS_AS(agent.act(bad, false), InvalidParameter);
}

TEST_CASE("replay buffer is a fifo") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) buf.push({Vec::Zero(1), Vec::Zero(1), Vec::Zero(1), double(i), false});
  CHECK(buf.size() == 3);
  CHECK(buf.at(0).r == 2.0);
  CHECK(buf.at(1).r == 3.0);
  CHECK(buf.at(2).r == 4.0);
  CHECK_THROWS_AS(buf.at(3), InvalidParameter);
  CHECK_THROWS_AS(ReplayBuffer(0), InvalidParameter);
}

TEST_CASE("replay samples are distinct and roughly uniform") {
  ReplayBuffer buf(20);
  for (int i = 0; i < 20; ++i) buf.push({Vec::Zero(1), Vec::Zero(1), Vec::Zero(1), double(i), false});
  std::mt19937_64 rng(12);
  std::vector<int> counts(20, 0);
  const int draws = 4000;
  for (int t = 0; t < draws; ++t) {
    const auto s = buf.sample(5, rng);
    std::set<double> seen;
    for (const auto* tr : s) {
      seen.insert(tr->r);
      ++counts[static_cast<std::size_t>(tr->r)];
    }
    CHECK(seen.size() == 5);
  }
  // each slot expects draws * 5 / 20 = 1000 hits
  for (int c : counts) CHECK(std::abs(c - 1000) < 150);
  CHECK_THROWS_AS(buf.sample(21, rng), InvalidParameter);
}

TEST_CASE("cem with zero std keeps its mean") {
  Vec m(2);
  m << 0.3, -0.2;
  CemOptimizer opt(m, Vec::Zero(2), 6, 0.5, 0.0, 1);
  for (int it = 0; it < 5; ++it) {
    const auto& pop = opt.ask();
    std::vector<double> s;
    for (const auto& c : pop) s.push_back(-c.squaredNorm());
    opt.tell(s);
  }
  CHECK(opt.mean().isApprox(m, 1e-15));
  CHECK(opt.stddev().isZero(0.0));
}

TEST_CASE("cem solves a quadratic bandit") {
  Vec target(3);
  target << 0.5, -1.0, 2.0;
  CemOptimizer opt(Vec::Zero(3), Vec::Constant(3, 1.0), 40, 0.2, 1e-6, 9);
  for (int it = 0; it < 60; ++it) {
    const auto& pop = opt.ask();
    std::vector<double> s;
    for (const auto& c : pop) s.push_back(-(c - target).squaredNorm());
    opt.tell(s);
  }
  CHECK((opt.mean() - target).norm() < 1e-2);
}

TEST_CASE("cem elite variance shrinks on average") {
  // Monte Carlo over seeds: with an informative score the refit std is
  // smaller than the sampling std.
  double total = 0.0;
  const int runs = 200;
  for (int s = 0; s < runs; ++s) {
    CemOptimizer opt(Vec::Zero(1), Vec::Constant(1, 1.0), 20, 0.25, 0.0, static_cast<std::uint64_t>(s));
    const auto& pop = opt.ask();
    std::vector<double> sc;
    for (const auto& c : pop) sc.push_back(-std::abs(c(0) - 0.5));
    opt.tell(sc);
    total += opt.stddev()(0);
  }
  CHECK(total / runs < 1.0);
  CemOptimizer opt(Vec::Zero(1), Vec::Constant(1, 1.0), 4, 0.25, 0.0, 1);
  CHECK(opt.elite_count() == 1);
  opt.ask();
  CHECK_THROWS_AS(opt.tell({1.0}), InvalidParameter);
}

TEST_CASE("cem learner cycles candidates per episode and round trips") {
  CemConfig cfg;
  cfg.population = 3;
  cfg.seed = 5;
  CemLearner l(2, Vec::Constant(1, -0.5), Vec::Constant(1, 0.5), cfg);
  const Vec obs = Vec::Constant(2, 1.0);
  CHECK(l.act(obs, false)(0) == 0.0);
  for (int e = 0; e < 3; ++e) {
    const double u = l.act(obs, true)(0);
    CHECK(u >= -0.5);
    CHECK(u <= 0.5);
    l.end_episode(-std::abs(u - 0.1));
  }
  const auto back = learner_from_json(l.to_json());
  CHECK(back->kind() == "cem");
  CHECK(back->act(obs, false)(0) == l.act(obs, false)(0));
}

TEST_CASE("hold learner and advantage") {
  HoldLearner h(Vec::Constant(2, 0.25));
  CHECK(h.act(Vec::Zero(3), true)(1) == 0.25);
  CHECK(learner_from_json(h.to_json())->act(Vec::Zero(1), false)(0) == 0.25);
  CHECK(advantage(3.0, 1.0) == 2.0);
  CHECK(advantage(-1.0, -1.0) == 0.0);
  CHECK_THROWS(learner_from_json({{"kind", "nope"}}));
}
