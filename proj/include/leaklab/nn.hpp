#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace leaklab {

enum class Activation { Relu };
enum class OutputKind { SigmoidScalar };

// Architecture of a dense feed-forward binary classifier, e.g. hidden_dims
// {64, 8} for the task models used throughout.
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  Activation activation = Activation::Relu;
  OutputKind output = OutputKind::SigmoidScalar;
  double dropout_rate = 0.0;  // applied after each hidden activation, in [0,1)

  void validate() const;
  // Hidden layers plus the scalar output layer.
  int layer_count() const { return static_cast<int>(hidden_dims.size()) + 1; }
  int layer_in_dim(int layer) const;
  int layer_out_dim(int layer) const;
};

struct LayerParams {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Gradients of the (mean) batch loss, shape-congruent with Mlp::layers().
struct Gradients {
  std::vector<LayerParams> layers;

  Eigen::VectorXd flatten() const;
  double squared_norm() const;
  void scale(double factor);
  void add_scaled(const Gradients& other, double factor);
  static Gradients zeros_like(const std::vector<LayerParams>& layers);
};

enum class ForwardKind { Eval, Train };

struct ForwardMode {
  ForwardKind kind = ForwardKind::Eval;
  std::uint64_t dropout_seed = 0;

  static ForwardMode eval() { return {ForwardKind::Eval, 0}; }
  static ForwardMode train(std::uint64_t seed) { return {ForwardKind::Train, seed}; }
};

// Per-layer forward state for a batch. Kept around for the backward pass and
// for hidden-feature extraction; `input` is the batch itself, `post[i]` is the
// representation after activation (and dropout in train mode) of hidden layer
// i, `probs` the clamped sigmoid outputs.
struct Activations {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> post;
  std::vector<Eigen::MatrixXd> dropout_mask;  // empty unless train mode with rate > 0
  Eigen::VectorXd probs;
  bool train_mode = false;

  long batch_size() const { return input.rows(); }
  const Eigen::MatrixXd& hidden(int layer) const;
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpSpec spec, std::vector<LayerParams> layers);

  // Scaled uniform init in +-sqrt(6/(fan_in+fan_out)), biases zero;
  // bitwise deterministic for a given (spec, seed).
  static Mlp init(const MlpSpec& spec, std::uint64_t seed);

  const MlpSpec& spec() const { return spec_; }
  const std::vector<LayerParams>& layers() const { return layers_; }

  long param_count() const;
  Eigen::VectorXd flatten() const;
  void set_from_flat(const Eigen::VectorXd& flat);
  Mlp with_flat(const Eigen::VectorXd& flat) const;
  // Same architecture with a different dropout rate (defense knob).
  Mlp with_dropout(double rate) const;

 private:
  MlpSpec spec_;
  std::vector<LayerParams> layers_;
};

// Forward pass. Eval mode applies no dropout; train mode applies inverted
// dropout after each hidden activation with masks stored for the backward
// pass. Output probabilities are clamped to [1e-7, 1 - 1e-7].
Activations forward(const Mlp& mlp, const Eigen::MatrixXd& batch, ForwardMode mode);

// Mean binary cross-entropy and its gradient w.r.t. the probabilities.
std::pair<double, Eigen::VectorXd> bce_loss(const Eigen::VectorXd& probs,
                                            const Eigen::VectorXd& labels);

// Analytic gradients of the scalar loss whose probability-gradient is
// dloss_dprobs, respecting dropout masks when acts came from train mode.
Gradients backward(const Mlp& mlp, const Activations& acts,
                   const Eigen::VectorXd& dloss_dprobs);

// Same, with an extra loss term injected at a hidden layer: dloss_dhidden is
// the derivative of that term w.r.t. acts.post[hidden_layer] (used for the
// MMD alignment loss).
Gradients backward(const Mlp& mlp, const Activations& acts,
                   const Eigen::VectorXd& dloss_dprobs, int hidden_layer,
                   const Eigen::MatrixXd& dloss_dhidden);

// Max relative error between analytic gradients and central finite
// differences of the mean BCE loss (eval mode), eps in (0, 1e-3].
double grad_check(const Mlp& mlp, const Eigen::MatrixXd& batch,
                  const Eigen::VectorXd& labels, double eps);

// Comparison core of grad_check, exposed so tests can feed a perturbed
// analytic gradient through the same path.
double grad_check_against(const Mlp& mlp, const Eigen::MatrixXd& batch,
                          const Eigen::VectorXd& labels, double eps,
                          const Gradients& analytic);

}  // namespace leaklab
