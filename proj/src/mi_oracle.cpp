// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#include "codial/mi_oracle.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "codial/errors.hpp"
#include "codial/losses.hpp"
#include "codial/nn.hpp"
#include "codial/ops.hpp"
#include "codial/optimizer.hpp"
#include "codial/params.hpp"
#include "codial/rng.hpp"
#include "codial/tensor.hpp"

namespace codial {
namespace {

// Draws batch rows: positive pairs (x, y) from the correlated joint and
// negative pairs (x', y'') from the product of marginals.
void draw_pairs(double rho, int batch, RngStream& rng, std::vector<float>& pos_v,
                std::vector<float>& neg_v) {
  const double mix = std::sqrt(1.0 - rho * rho);
  pos_v.resize(static_cast<std::size_t>(batch) * 2);
  neg_v.resize(static_cast<std::size_t>(batch) * 2);
  for (int i = 0; i < batch; ++i) {
    const double x = rng.normal();
    const double y = rho * x + mix * rng.normal();
    pos_v[static_cast<std::size_t>(2 * i)] = static_cast<float>(x);
    pos_v[static_cast<std::size_t>(2 * i + 1)] = static_cast<float>(y);
    const double x2 = rng.normal();
    const double y2 = rng.normal();
    neg_v[static_cast<std::size_t>(2 * i)] = static_cast<float>(x2);
    neg_v[static_cast<std::size_t>(2 * i + 1)] = static_cast<float>(y2);
  }
}

struct Critic {
  ParamStore<float> store;
  std::vector<Tensor<float>> w, b;

  Critic(int hidden, RngStream& init) {
    const auto h = static_cast<std::size_t>(hidden);
    const std::size_t dims[4] = {2, h, h, 1};
    for (int l = 0; l < 3; ++l) {
      const std::size_t fan_in = dims[l], fan_out = dims[l + 1];
      const auto stddev =
          static_cast<float>(std::sqrt(2.0 / static_cast<double>(fan_in)));
      std::vector<float> wv(fan_in * fan_out);
      for (float& v : wv) v = static_cast<float>(init.normal()) * stddev;
      w.push_back(store.create("l" + std::to_string(l) + ".w",
                               Shape{fan_in, fan_out}, std::move(wv)));
      b.push_back(store.create("l" + std::to_string(l) + ".b", Shape{fan_out},
                               std::vector<float>(fan_out, 0.0f)));
    }
  }

  Tensor<float> score(const Tensor<float>& x) {
    Tensor<float> hdn = relu(dense(x, w[0], b[0]));
    hdn = relu(dense(hdn, w[1], b[1]));
    return dense(hdn, w[2], b[2]);
  }
};

}  // namespace

MiOracleResult train_mi_oracle(const MiOracleConfig& cfg) {
  CODIAL_REQUIRE(std::fabs(cfg.rho) < 1.0, ConfigError,
                 "mi oracle needs |rho| < 1");
  CODIAL_REQUIRE(cfg.steps > 0 && cfg.batch > 0 && cfg.eval_batch > 0,
                 ConfigError, "mi oracle sizes must be positive");
  CODIAL_REQUIRE(cfg.hidden > 0, ConfigError, "critic width must be positive");

  RngStream init(cfg.seed, 0, 0, Purpose::kInit);
  Critic critic(cfg.hidden, init);
  OptimizerConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  Optimizer<float> opt(opt_cfg);

  std::vector<float> pos_v, neg_v;
  for (int step = 0; step < cfg.steps; ++step) {
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(step), 0,
                  Purpose::kOracle);
    draw_pairs(cfg.rho, cfg.batch, rng, pos_v, neg_v);
    const auto bsz = static_cast<std::size_t>(cfg.batch);
    Tensor<float> xp(Shape{bsz, 2}, pos_v);
    Tensor<float> xn(Shape{bsz, 2}, neg_v);
    Tensor<float> obj = js_mi_objective(critic.score(xp), critic.score(xn));
    Tensor<float> loss = neg(obj);
    critic.store.zero_grad();
    loss.backward();
    opt.step(critic.store);
  }

  // Fresh evaluation set on a stream the training loop never touches.
  RngStream eval_rng(cfg.seed, static_cast<std::uint64_t>(cfg.steps) + 1, 1,
                     Purpose::kOracle);
  draw_pairs(cfg.rho, cfg.eval_batch, eval_rng, pos_v, neg_v);
  const auto esz = static_cast<std::size_t>(cfg.eval_batch);
  NoGradGuard no_grad;
  Tensor<float> sp = critic.score(Tensor<float>(Shape{esz, 2}, pos_v));
  Tensor<float> sn = critic.score(Tensor<float>(Shape{esz, 2}, neg_v));

  MiOracleResult out;
  out.true_mi = -0.5 * std::log(1.0 - cfg.rho * cfg.rho) + 0.0;  // no -0.0
  out.estimate = static_cast<double>(js_mi_estimate(sp));
  out.objective = static_cast<double>(js_mi_objective(sp, sn).item());
  return out;
}

}  // namespace codial
