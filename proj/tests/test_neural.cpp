#include "ngcg/dataset.hpp"
#include <filesystem>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ngcg/mlp.hpp"
#include "ngcg/train.hpp"

using namespace ngcg;

namespace {

// Flattened view of all parameters for finite-difference checks.
std::vector<double*> param_ptrs(Mlp& net) {
  std::vector<double*> out;
  for (auto& w : net.W)
    for (auto& v : w) out.push_back(&v);
  for (auto& b : net.b)
    for (auto& v : b) out.push_back(&v);
  return out;
}

std::vector<double> grad_flat(const Mlp& net, const MlpGrads& g) {
  std::vector<double> out;
  for (std::size_t l = 0; l < net.W.size(); ++l)
    for (double v : g.W[l]) out.push_back(v);
  for (std::size_t l = 0; l < net.b.size(); ++l)
    for (double v : g.b[l]) out.push_back(v);
  return out;
}

// Central-difference gradient check; returns the max relative error over
// parameters with non-negligible gradient magnitude.
template <typename LossFn>
double fd_check(Mlp& net, LossFn loss_with_grads) {
  MlpGrads grads = MlpGrads::zeros_like(net);
  loss_with_grads(net, &grads);
  auto analytic = grad_flat(net, grads);
  auto ptrs = param_ptrs(net);

  double gmax = 0.0;
  for (double g : analytic) gmax = std::max(gmax, std::abs(g));

  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < ptrs.size(); ++i) {
    double save = *ptrs[i];
    *ptrs[i] = save + h;
    double lp = loss_with_grads(net, nullptr);
    *ptrs[i] = save - h;
    double lm = loss_with_grads(net, nullptr);
    *ptrs[i] = save;
    double fd = (lp - lm) / (2.0 * h);
    double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-4 * gmax});
    if (denom > 0.0) worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("forward basics") {
  Rng rng(1);
  Mlp net = Mlp::make({3, 5, 2}, rng);
  for (auto& w : net.W)
    for (auto& v : w) v = 0.0;
  std::vector<double> x{1.0, -2.0, 0.5};
  auto y = net.forward(x, 1);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);

  // single linear layer with identity weights
  Rng rng2(2);
  Mlp id = Mlp::make({3, 3}, rng2);
  for (auto& v : id.W[0]) v = 0.0;
  id.W[0][0] = id.W[0][4] = id.W[0][8] = 1.0;
  auto z = id.forward(x, 1);
  CHECK(z[0] == doctest::Approx(1.0));
  CHECK(z[1] == doctest::Approx(-2.0));
  CHECK(z[2] == doctest::Approx(0.5));
}

TEST_CASE("batched forward equals per-sample forward") {
  Rng rng(3);
  Mlp net = Mlp::make({4, 16, 16, 3}, rng);
  std::vector<double> batch(5 * 4);
  for (auto& v : batch) v = rng.uniform(-2.0, 2.0);
  auto all = net.forward(batch, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    auto one = net.forward({batch.data() + i * 4, 4}, 1);
    for (std::size_t j = 0; j < 3; ++j) CHECK(all[i * 3 + j] == doctest::Approx(one[j]));
  }
}

TEST_CASE("dynamics loss gradient matches finite differences") {
  Rng rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    Mlp net = Mlp::make({3, 8, 6, 3}, rng);
    std::vector<double> x(7 * 3), y(7 * 3);
    for (auto& v : x) v = rng.uniform(-1.5, 1.5);
    for (auto& v : y) v = rng.uniform(-1.5, 1.5);
    auto loss = [&](Mlp& n, MlpGrads* g) {
      MlpWorkspace ws;
      if (g) return grad_dyn_loss(n, x, y, 7, *g, ws);
      MlpGrads scratch = MlpGrads::zeros_like(n);
      return grad_dyn_loss(n, x, y, 7, scratch, ws);
    };
    CHECK(fd_check(net, loss) < 1e-5);
  }
}

TEST_CASE("phi loss gradient matches finite differences") {
  Rng rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    Mlp net = Mlp::make({2, 8, 8, 1}, rng);
    const std::size_t n_traj = 4, t_len = 6;
    std::vector<double> x(n_traj * t_len * 2);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    auto loss = [&](Mlp& n, MlpGrads* g) {
      MlpWorkspace ws;
      if (g) return grad_phi_loss(n, x, n_traj, t_len, 1e-4, 1e-4, *g, ws);
      MlpGrads scratch = MlpGrads::zeros_like(n);
      return grad_phi_loss(n, x, n_traj, t_len, 1e-4, 1e-4, scratch, ws);
    };
    CHECK(fd_check(net, loss) < 1e-5);
  }
}

TEST_CASE("phi loss special values") {
  Rng rng(9);
  Mlp net = Mlp::make({2, 4, 4, 1}, rng);
  // constant output: zero all weights, bias the last layer
  for (auto& w : net.W)
    for (auto& v : w) v = 0.0;
  for (auto& b : net.b)
    for (auto& v : b) v = 0.0;
  net.b.back()[0] = 3.0;
  std::vector<double> x(3 * 5 * 2, 0.25);
  MlpGrads g = MlpGrads::zeros_like(net);
  MlpWorkspace ws;
  double loss = grad_phi_loss(net, x, 3, 5, 1e-4, 1e-4, g, ws);
  CHECK(loss == doctest::Approx(1e-4 * 9.0));  // numerator 0 -> only the L2 term

  CHECK_THROWS_AS(grad_phi_loss(net, x, 1, 15, 1e-4, 1e-4, g, ws), std::invalid_argument);
}

TEST_CASE("adam behaves") {
  Rng rng(11);
  Mlp net = Mlp::make({2, 3, 1}, rng);
  Mlp before = net;
  AdamState st = AdamState::zeros_like(net);
  MlpGrads zeros = MlpGrads::zeros_like(net);
  adam_step(net, zeros, st, 0.1);
  for (std::size_t l = 0; l < net.W.size(); ++l) CHECK(net.W[l] == before.W[l]);

  // constant gradient g: first bias-corrected step is -lr * g/|g| elementwise
  MlpGrads g = MlpGrads::zeros_like(net);
  g.W[0][0] = 0.5;
  g.W[0][1] = -2.0;
  AdamState fresh = AdamState::zeros_like(net);
  before = net;
  adam_step(net, g, fresh, 0.01);
  CHECK(net.W[0][0] == doctest::Approx(before.W[0][0] - 0.01).epsilon(1e-6));
  CHECK(net.W[0][1] == doctest::Approx(before.W[0][1] + 0.01).epsilon(1e-6));

  Mlp frozen = net;
  adam_step(net, g, fresh, 0.0);
  for (std::size_t l = 0; l < net.W.size(); ++l) CHECK(net.W[l] == frozen.W[l]);
}

TEST_CASE("schedules hit their endpoints") {
  CHECK(one_cycle_lr(0, 100, 1e-3, 1e-5) < 1e-3);
  CHECK(one_cycle_lr(29, 100, 1e-3, 1e-5) == doctest::Approx(1e-3));
  CHECK(one_cycle_lr(99, 100, 1e-3, 1e-5) == doctest::Approx(1e-5).epsilon(0.3));
  CHECK(cosine_lr(0, 100, 3e-3, 1e-5) == doctest::Approx(3e-3));
  CHECK(cosine_lr(99, 100, 3e-3, 1e-5) < 1e-4);
}

TEST_CASE("mlp checkpoint round trip") {
  Rng rng(13);
  Mlp net = Mlp::make({3, 8, 1}, rng);
  auto dir = std::filesystem::temp_directory_path() / "ngcg_mlp_rt";
  std::filesystem::remove_all(dir);
  save_mlp(net, dir);
  Mlp back = load_mlp(dir);
  CHECK(back.sizes == net.sizes);
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    CHECK(back.W[l] == net.W[l]);
    CHECK(back.b[l] == net.b[l]);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("dynamics training fits the identity map") {
  // synthetic dataset where x_{t+1} = x_t exactly
  Dataset ds = generate(SystemId::MassSpring, 3, {120, 30});
  for (auto& tr : ds.trajectories) {
    for (std::size_t t = 0; t < tr.T; ++t)
      for (std::size_t d = 0; d < tr.dim; ++d)
        tr.states[t * tr.dim + d] = tr.states[d];
  }
  DynConfig cfg;
  cfg.hidden = 64;
  cfg.max_epochs = 150;
  cfg.batch = 64;
  cfg.peak_lr = 5e-3;
  cfg.patience = 150;
  DynResult r = train_dynamics(ds, cfg, 0);
  CHECK(r.val_mse < 1e-4);
  CHECK(rollout_mse(r.net, r.input_std, ds, ds.splits.test, 0) == 0.0);
}

TEST_CASE("phi restarts select the best and are deterministic") {
  Dataset ds = generate(SystemId::MassSpring, 4, {24, 40});
  PhiConfig cfg;
  cfg.hidden = 8;
  cfg.max_epochs = 10;
  cfg.patience = 10;
  PhiResult a = train_phi_restarts(ds, 2, cfg, 17);
  PhiResult b = train_phi_restarts(ds, 2, cfg, 17);
  REQUIRE(a.restarts.size() == 2);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(a.restarts[r].val_constancy == b.restarts[r].val_constancy);
    CHECK(a.restarts[r].net.W[0] == b.restarts[r].net.W[0]);
  }
  std::size_t argmin = a.restarts[0].val_constancy <= a.restarts[1].val_constancy ? 0 : 1;
  CHECK(a.best == argmin);
}
