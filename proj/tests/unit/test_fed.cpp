#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>

#include "fedhvac/fed/worker_pool.hpp"
#include "oracles.hpp"

using namespace fedhvac;
using namespace fedhvac::fed;

namespace {

ClientUpdate one_net(std::vector<double> d, std::size_t n) {
  return ClientUpdate{{nn::GradVector(std::move(d))}, n};
}

std::vector<nn::ParamVector> zeros(std::size_t dim) { return {nn::ParamVector(dim)}; }

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("aggregate: examples") {
  const std::vector<ClientUpdate> eq{one_net({1.0, -1.0}, 4), one_net({3.0, -1.0}, 4)};
  const auto a = aggregate(eq);
  CHECK(a[0][0] == 2.0);
  CHECK(a[0][1] == -1.0);
  const std::vector<ClientUpdate> weighted{one_net({4.0}, 1), one_net({0.0}, 3)};
  CHECK(aggregate(weighted)[0][0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(aggregate(std::vector<ClientUpdate>{}), AggregationError);
  CHECK_THROWS_AS(aggregate(std::vector<ClientUpdate>{one_net({1.0}, 0)}), AggregationError);
  CHECK_THROWS_AS(aggregate(std::vector<ClientUpdate>{one_net({1.0}, 1), one_net({1.0, 2.0}, 1)}),
                  AggregationError);
}

TEST_CASE("aggregate: identical deltas come back exactly") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = random_vec(rng, 33);
    std::vector<ClientUpdate> ups;
    const std::size_t k = 2 + rng.index(9);
    for (std::size_t i = 0; i < k; ++i) ups.push_back(one_net(d, 1 + rng.index(100)));
    const auto a = aggregate(ups);
    for (std::size_t i = 0; i < d.size(); ++i) REQUIRE(a[0][i] == d[i]);
  }
}

TEST_CASE("aggregate: permutation invariance and weighted-mean oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<ClientUpdate> ups;
    for (int k = 0; k < 5; ++k) ups.push_back(one_net(random_vec(rng, 10), 1 + rng.index(50)));
    std::size_t total = 0;
    for (const auto& u : ups) total += u.n;
    std::vector<double> oracle(10, 0.0);
    for (const auto& u : ups)
      for (std::size_t i = 0; i < 10; ++i) oracle[i] += double(u.n) * u.deltas[0][i] / double(total);
    auto shuffled = ups;
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled[1], shuffled[3]);
    const auto a = aggregate(ups), b = aggregate(shuffled);
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(a[0][i] == doctest::Approx(oracle[i]).epsilon(1e-12));
      CHECK(b[0][i] == doctest::Approx(a[0][i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("agreement mask: examples") {
  const std::vector<ClientUpdate> same{one_net({1.0, -2.0}, 1), one_net({3.0, -0.5}, 1)};
  const auto m = agreement_mask(same, 0.4);
  CHECK(m[0].values == std::vector<double>{1.0, 1.0});

  const std::vector<ClientUpdate> three{one_net({1.0}, 1), one_net({2.0}, 1), one_net({-5.0}, 1)};
  const auto a3 = agreement_scores(three, 0);
  CHECK(a3[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(agreement_mask(three, 0.4)[0][0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(agreement_mask(three, 0.3)[0][0] == 1.0);

  const std::vector<ClientUpdate> split{one_net({1.0}, 1), one_net({-1.0}, 1)};
  CHECK(agreement_mask(split, 0.4)[0][0] == 0.0);
  // sign(0) = 0: a zero neither agrees nor disagrees.
  const std::vector<ClientUpdate> zero{one_net({0.0}, 1), one_net({2.0}, 1)};
  CHECK(agreement_scores(zero, 0)[0] == 0.5);
  CHECK_THROWS_AS(mask_from_agreement(std::vector<double>{0.5}, 0.0), AggregationError);
  CHECK_THROWS_AS(agreement_scores(zero, 1), AggregationError);
}

TEST_CASE("agreement mask: range and positive-scaling invariance") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng.index(8), dim = 1 + rng.index(20);
    std::vector<ClientUpdate> ups, scaled;
    for (std::size_t i = 0; i < k; ++i) {
      auto d = random_vec(rng, dim);
      ups.push_back(one_net(d, 1));
      const double s = std::exp(rng.uniform(-10.0, 10.0));
      for (auto& x : d) x *= s;
      scaled.push_back(one_net(d, 7));
    }
    const double tau = rng.uniform(0.05, 1.0);
    const auto m = agreement_mask(ups, tau), ms = agreement_mask(scaled, tau);
    for (std::size_t i = 0; i < dim; ++i) {
      REQUIRE(m[0][i] >= 0.0);
      REQUIRE(m[0][i] <= 1.0);
      REQUIRE(m[0][i] == ms[0][i]);
    }
  }
}

TEST_CASE("server: fedavg example and identical-client exactness") {
  auto s = ServerState::create(ServerConfig{}, zeros(1));
  const std::vector<nn::GradVector> d{nn::GradVector(std::vector<double>{2.0})};
  server_step(s, d, unit_masks(d));
  CHECK(s.globals[0][0] == 2.0);
  CHECK(s.round == 1);

  Rng rng(7);
  const auto common = random_vec(rng, 25);
  std::vector<ClientUpdate> ups(3, one_net(common, 96));
  ServerConfig c;
  auto st = ServerState::create(c, zeros(25));
  const auto w0 = st.globals[0];
  server_step(st, aggregate(ups), agreement_mask(ups, c.tau_mask));
  for (std::size_t i = 0; i < 25; ++i) CHECK(st.globals[0][i] == w0[i] + common[i]);
}

TEST_CASE("server: fedavgm with zero momentum is fedavg bit for bit") {
  Rng rng(8);
  ServerConfig a;
  a.eta_g = 0.7;
  ServerConfig m = a;
  m.kind = ServerKind::kFedAvgM;
  m.momentum = 0.0;
  std::vector<nn::ParamVector> init{nn::ParamVector(random_vec(rng, 40))};
  auto sa = ServerState::create(a, init), sm = ServerState::create(m, init);
  for (int r = 0; r < 50; ++r) {
    std::vector<ClientUpdate> ups;
    for (int k = 0; k < 3; ++k) ups.push_back(one_net(random_vec(rng, 40), 4));
    const auto d = aggregate(ups);
    const auto mask = agreement_mask(ups, 0.4);
    server_step(sa, d, mask);
    server_step(sm, d, mask);
    REQUIRE(sa.globals[0] == sm.globals[0]);
  }
}

TEST_CASE("server: fedavgm accumulates momentum") {
  ServerConfig c;
  c.kind = ServerKind::kFedAvgM;
  c.momentum = 0.5;
  auto s = ServerState::create(c, zeros(1));
  const std::vector<nn::GradVector> d{nn::GradVector(std::vector<double>{1.0})};
  server_step(s, d, unit_masks(d));
  server_step(s, d, unit_masks(d));
  // v1 = 1, v2 = 1.5.
  CHECK(s.globals[0][0] == 2.5);
}

TEST_CASE("server: fedadam first step and bounded magnitudes") {
  ServerConfig c;
  c.kind = ServerKind::kFedAdam;
  c.beta1 = 0.0;
  c.beta2 = 0.0;
  c.eta_g = 0.001;
  c.epsilon = 1e-3;
  auto s = ServerState::create(c, zeros(1));
  const std::vector<nn::GradVector> d{nn::GradVector(std::vector<double>{5.0})};
  server_step(s, d, unit_masks(d));
  CHECK(s.globals[0][0] == doctest::Approx(0.001 * 5.0 / (5.0 + 0.001)).epsilon(1e-12));
  CHECK(s.globals[0][0] == doctest::Approx(0.0009998).epsilon(1e-4));

  Rng rng(9);
  auto big = ServerState::create(c, zeros(30));
  for (int r = 0; r < 50; ++r) {
    const auto before = big.globals[0];
    std::vector<nn::GradVector> dr{nn::GradVector(random_vec(rng, 30))};
    server_step(big, dr, unit_masks(dr));
    for (std::size_t i = 0; i < 30; ++i) REQUIRE(std::abs(big.globals[0][i] - before[i]) < c.eta_g);
  }
}

TEST_CASE("server: masked coordinates do not move") {
  ServerConfig c;
  auto s = ServerState::create(c, zeros(2));
  const std::vector<nn::GradVector> d{nn::GradVector(std::vector<double>{3.0, 3.0})};
  server_step(s, d, {MaskVector{{0.0, 0.5}}});
  CHECK(s.globals[0][0] == 0.0);
  CHECK(s.globals[0][1] == 1.5);
}

TEST_CASE("server: state buffers must match the optimizer") {
  ServerConfig avg;
  auto s = ServerState::create(avg, zeros(2));
  s.config.kind = ServerKind::kFedAdam;
  const std::vector<nn::GradVector> d{nn::GradVector(2)};
  CHECK_THROWS_AS(server_step(s, d, unit_masks(d)), std::logic_error);
  auto t = ServerState::create(avg, zeros(2));
  CHECK_THROWS_AS(server_step(t, {nn::GradVector(3)}, {MaskVector{{1, 1, 1}}}), AggregationError);
  ServerConfig bad;
  bad.momentum = 1.0;
  CHECK_THROWS(ServerState::create(bad, zeros(1)));
  CHECK(server_kind_from_string("fedadam") == ServerKind::kFedAdam);
  CHECK(to_string(ServerKind::kFedAvgM) == "fedavgm");
  CHECK_THROWS(server_kind_from_string("fedprox"));
}

TEST_CASE("client selection") {
  Rng rng(10);
  CHECK(select_clients(11, 1.0, rng).size() == 11);
  for (int i = 0; i < 100; ++i) {
    const auto s = select_clients(10, 0.25, rng);
    REQUIRE(s.size() == 2);
    REQUIRE(s[0] < s[1]);
    REQUIRE(s[1] < 10);
  }
  CHECK(select_clients(3, 0.01, rng).size() == 1);
  std::set<std::size_t> seen;
  for (int i = 0; i < 200; ++i) seen.insert(select_clients(10, 0.1, rng)[0]);
  CHECK(seen.size() == 10);
  CHECK_THROWS_AS(select_clients(0, 1.0, rng), AggregationError);
  CHECK_THROWS_AS(select_clients(5, 0.0, rng), AggregationError);
}

TEST_CASE("round stats") {
  const nn::GradVector d(std::vector<double>{3.0, 4.0});
  const std::vector<double> agree{1.0, 0.2};
  const auto s = round_stats(d, agree, mask_from_agreement(agree, 0.4), 0.4);
  CHECK(s.delta_norm == 5.0);
  CHECK(s.mean_mask == doctest::Approx(0.6));
  CHECK(s.agree_frac == 0.5);
}

TEST_CASE("round arithmetic: U = 24 spans one simulated day") {
  const std::size_t steps_per_round = 24 * 4;
  CHECK(steps_per_round / env::kStepsPerHour == 24);
  CHECK(env::kEpisodeSteps / steps_per_round == 365);
  for (std::size_t u : {4u, 12u, 24u}) CHECK(env::kEpisodeSteps % (4 * u) == 0);
}

TEST_CASE("client rounds: zero learning rate and identical clones") {
  auto cfg = testing::fedsgd_sac_config();
  cfg.train_freq = 4;
  cfg.optimizer.learning_rate = 0.0;
  cfg.optimizer.kind = nn::OptimizerKind::kAdam;
  const env::HvacEnv env(env::climate_by_name("tokyo"), 3);
  HvacClient a(env, cfg, 1);
  a.begin_episode(2);
  const auto g = extract_networks(a.agent());
  const auto up = run_client_round(a, g, 6);
  CHECK(up.n == 24);
  CHECK(a.agent().gradient_steps > 0);
  for (std::size_t k = 0; k < 5; ++k) {
    for (std::size_t i = 0; i < up.deltas[k].size(); ++i) {
      // Polyak still mixes critics into targets, but with frozen critics targets only
      // move if they differ from the critics, which they do not at initialization.
      REQUIRE(up.deltas[k][i] == 0.0);
    }
  }

  cfg.optimizer.learning_rate = 1e-3;
  HvacClient x(env, cfg, 8), y(env, cfg, 8);
  x.begin_episode(4);
  y.begin_episode(4);
  const auto gx = extract_networks(x.agent());
  for (int r = 0; r < 5; ++r) {
    const auto ux = run_client_round(x, gx, 4), uy = run_client_round(y, gx, 4);
    for (std::size_t k = 0; k < 5; ++k) REQUIRE(ux.deltas[k] == uy.deltas[k]);
  }
  CHECK(x.env_steps() == 80);
  CHECK(x.stats().steps == 80);
  CHECK(action_box_from(env::ActionBounds{}).high[1] == 30.0);
  CHECK_THROWS(run_client_round(x, gx, 0));
  auto wrong = gx;
  wrong.pop_back();
  CHECK_THROWS_AS(load_networks(x.agent(), wrong), AggregationError);
}

TEST_CASE("FedSGD equivalence over 30 rounds") {
  const auto r = testing::fedsgd_equivalence(3, 30);
  CHECK(r.gradient_steps == 21);
  CHECK(r.max_abs_change > 1e-6);
  CHECK(r.max_abs_diff <= 1e-12);
}

TEST_CASE("worker pool: runs every task and reports the lowest failure") {
  for (std::size_t threads : {1u, 4u}) {
    WorkerPool pool(threads);
    std::vector<int> hit(37, 0);
    pool.run(hit.size(), [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
    std::atomic<int> done{0};
    try {
      pool.run(10, [&](std::size_t i) {
        ++done;
        if (i == 7 || i == 3) throw std::runtime_error("boom " + std::to_string(i));
      });
      FAIL("expected TaskError");
    } catch (const TaskError& e) {
      CHECK(e.task() == 3);
      CHECK(std::string(e.what()).find("boom 3") != std::string::npos);
    }
    CHECK(done == 10);
    // The pool is reusable after a failure.
    pool.run(3, [&](std::size_t i) { hit[i] += 1; });
    CHECK(hit[2] == 2);
  }
}
