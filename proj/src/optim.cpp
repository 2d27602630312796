#include "leaklab/optim.hpp"

#include <cmath>
#include <string>

#include "leaklab/errors.hpp"
#include "leaklab/rng.hpp"

namespace leaklab {

namespace {

void check_congruent(const Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                     const char* op) {
  if (params.size() != grads.size()) {
    throw ShapeError(std::string(op) + ": params/grads size mismatch: " +
                     std::to_string(params.size()) + " vs " +
                     std::to_string(grads.size()));
  }
}

}  // namespace

AdamState AdamState::init(long param_count, const AdamConfig& cfg) {
  AdamState s;
  s.cfg = cfg;
  s.m = Eigen::VectorXd::Zero(param_count);
  s.v = Eigen::VectorXd::Zero(param_count);
  s.step = 0;
  return s;
}

Eigen::VectorXd sgd_step(const Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                         double lr) {
  check_congruent(params, grads, "sgd_step");
  return params - lr * grads;
}

Eigen::VectorXd adam_step(AdamState& state, const Eigen::VectorXd& params,
                          const Eigen::VectorXd& grads) {
  check_congruent(params, grads, "adam_step");
  if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: state not sized for these params");
  }
  const AdamConfig& c = state.cfg;
  state.step += 1;
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * grads;
  state.v = c.beta2 * state.v + (1.0 - c.beta2) * grads.cwiseProduct(grads);
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  Eigen::VectorXd update(params.size());
  for (long i = 0; i < params.size(); ++i) {
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    update[i] = c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
  return params - update;
}

Eigen::VectorXd sgld_step(const Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                          const SgldConfig& cfg, std::uint64_t seed) {
  check_congruent(params, grads, "sgld_step");
  if (cfg.lr <= 0.0) throw ConfigError("sgld_step: lr must be > 0");
  if (cfg.temperature < 0.0) throw ConfigError("sgld_step: temperature must be >= 0");
  if (cfg.temperature == 0.0) return sgd_step(params, grads, cfg.lr);
  const double stddev = std::sqrt(cfg.temperature * cfg.lr);
  Rng rng(seed);
  Eigen::VectorXd out = params - cfg.lr * grads;
  for (long i = 0; i < out.size(); ++i) {
    out[i] += stddev * rng.normal();
  }
  return out;
}

Eigen::VectorXd dpsgd_step(const Eigen::VectorXd& params,
                           const std::vector<Eigen::VectorXd>& per_example_grads,
                           const DpSgdConfig& cfg, std::uint64_t seed) {
  if (per_example_grads.empty()) throw ShapeError("dpsgd_step: empty gradient batch");
  if (cfg.clip_norm <= 0.0) throw ConfigError("dpsgd_step: clip_norm must be > 0");
  if (cfg.noise_multiplier < 0.0) {
    throw ConfigError("dpsgd_step: noise_multiplier must be >= 0");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(params.size());
  for (const auto& g : per_example_grads) {
    check_congruent(params, g, "dpsgd_step");
    const double norm = g.norm();
    const double factor = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
    sum += factor * g;
  }
  if (cfg.noise_multiplier > 0.0) {
    const double stddev = cfg.noise_multiplier * cfg.clip_norm;
    Rng rng(seed);
    for (long i = 0; i < sum.size(); ++i) {
      sum[i] += stddev * rng.normal();
    }
  }
  const Eigen::VectorXd mean = sum / static_cast<double>(per_example_grads.size());
  return sgd_step(params, mean, cfg.lr);
}

}  // namespace leaklab
