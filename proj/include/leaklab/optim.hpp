#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace leaklab {

// Update rules operate on flat parameter vectors (Mlp::flatten order). Every
// step is a pure function of its inputs and seed.

struct SgdConfig {
  double lr = 0.01;
};

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  Eigen::VectorXd m;  // first moment
  Eigen::VectorXd v;  // second moment
  long step = 0;

  static AdamState init(long param_count, const AdamConfig& cfg = {});
};

struct SgldConfig {
  double lr = 0.01;
  double temperature = 2.0;  // injected noise variance = temperature * lr
};

struct DpSgdConfig {
  double lr = 0.01;
  double clip_norm = 1.0;         // C > 0
  double noise_multiplier = 1.0;  // sigma >= 0
};

Eigen::VectorXd sgd_step(const Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                         double lr);

// Standard bias-corrected Adam; returns updated params and advances state.
Eigen::VectorXd adam_step(AdamState& state, const Eigen::VectorXd& params,
                          const Eigen::VectorXd& grads);

// w' = w - lr*g + eps, eps ~ N(0, temperature*lr) i.i.d. per coordinate.
// temperature == 0 is bitwise identical to sgd_step.
Eigen::VectorXd sgld_step(const Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                          const SgldConfig& cfg, std::uint64_t seed);

// Per-example gradients are rescaled by min(1, C/||g_i||_2), summed, Gaussian
// noise N(0, sigma^2 C^2) added per coordinate, divided by the batch size,
// then applied as an SGD step.
Eigen::VectorXd dpsgd_step(const Eigen::VectorXd& params,
                           const std::vector<Eigen::VectorXd>& per_example_grads,
                           const DpSgdConfig& cfg, std::uint64_t seed);

}  // namespace leaklab
