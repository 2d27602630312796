#include "leaklab/nn.hpp"

#include <cmath>
#include <string>

#include "leaklab/errors.hpp"
#include "leaklab/rng.hpp"

namespace leaklab {

namespace {
constexpr double kProbClamp = 1e-7;
}

void MlpSpec::validate() const {
  if (input_dim < 1) throw ShapeError("MlpSpec: input_dim must be >= 1");
  if (hidden_dims.empty()) throw ShapeError("MlpSpec: hidden_dims must be non-empty");
  for (int d : hidden_dims) {
    if (d < 1) throw ShapeError("MlpSpec: all hidden dims must be >= 1");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw ShapeError("MlpSpec: dropout_rate must be in [0,1)");
  }
}

int MlpSpec::layer_in_dim(int layer) const {
  return layer == 0 ? input_dim : hidden_dims[layer - 1];
}

int MlpSpec::layer_out_dim(int layer) const {
  return layer < static_cast<int>(hidden_dims.size()) ? hidden_dims[layer] : 1;
}

const Eigen::MatrixXd& Activations::hidden(int layer) const {
  if (layer < 0 || layer >= static_cast<int>(post.size())) {
    throw ShapeError("hidden layer index " + std::to_string(layer) +
                     " out of range (have " + std::to_string(post.size()) + ")");
  }
  return post[layer];
}

Mlp::Mlp(MlpSpec spec, std::vector<LayerParams> layers)
    : spec_(std::move(spec)), layers_(std::move(layers)) {
  spec_.validate();
  if (static_cast<int>(layers_.size()) != spec_.layer_count()) {
    throw ShapeError("Mlp: layer count does not match spec");
  }
  for (int l = 0; l < spec_.layer_count(); ++l) {
    if (layers_[l].weight.rows() != spec_.layer_out_dim(l) ||
        layers_[l].weight.cols() != spec_.layer_in_dim(l) ||
        layers_[l].bias.size() != spec_.layer_out_dim(l)) {
      throw ShapeError("Mlp: layer " + std::to_string(l) + " shape mismatch");
    }
    if (!layers_[l].weight.allFinite() || !layers_[l].bias.allFinite()) {
      throw ShapeError("Mlp: non-finite parameter in layer " + std::to_string(l));
    }
  }
}

Mlp Mlp::init(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<LayerParams> layers;
  layers.reserve(spec.layer_count());
  for (int l = 0; l < spec.layer_count(); ++l) {
    const int fan_in = spec.layer_in_dim(l);
    const int fan_out = spec.layer_out_dim(l);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    LayerParams p;
    p.weight.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        p.weight(r, c) = rng.uniform(-bound, bound);
      }
    }
    p.bias = Eigen::VectorXd::Zero(fan_out);
    layers.push_back(std::move(p));
  }
  return Mlp(spec, std::move(layers));
}

long Mlp::param_count() const {
  long n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

namespace {

// Flatten order: per layer, weight row-major then bias. Shared by Mlp,
// Gradients and the text serializer.
Eigen::VectorXd flatten_layers(const std::vector<LayerParams>& layers) {
  long n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  Eigen::VectorXd flat(n);
  long at = 0;
  for (const auto& l : layers) {
    for (long r = 0; r < l.weight.rows(); ++r) {
      for (long c = 0; c < l.weight.cols(); ++c) flat[at++] = l.weight(r, c);
    }
    for (long r = 0; r < l.bias.size(); ++r) flat[at++] = l.bias[r];
  }
  return flat;
}

}  // namespace

Eigen::VectorXd Mlp::flatten() const { return flatten_layers(layers_); }

void Mlp::set_from_flat(const Eigen::VectorXd& flat) {
  if (flat.size() != param_count()) {
    throw ShapeError("set_from_flat: expected " + std::to_string(param_count()) +
                     " values, got " + std::to_string(flat.size()));
  }
  long at = 0;
  for (auto& l : layers_) {
    for (long r = 0; r < l.weight.rows(); ++r) {
      for (long c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[at++];
    }
    for (long r = 0; r < l.bias.size(); ++r) l.bias[r] = flat[at++];
  }
}

Mlp Mlp::with_flat(const Eigen::VectorXd& flat) const {
  Mlp copy = *this;
  copy.set_from_flat(flat);
  return copy;
}

Mlp Mlp::with_dropout(double rate) const {
  Mlp copy = *this;
  copy.spec_.dropout_rate = rate;
  copy.spec_.validate();
  return copy;
}

Eigen::VectorXd Gradients::flatten() const { return flatten_layers(layers); }

double Gradients::squared_norm() const {
  double s = 0.0;
  for (const auto& l : layers) {
    s += l.weight.squaredNorm() + l.bias.squaredNorm();
  }
  return s;
}

void Gradients::scale(double factor) {
  for (auto& l : layers) {
    l.weight *= factor;
    l.bias *= factor;
  }
}

void Gradients::add_scaled(const Gradients& other, double factor) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight += factor * other.layers[i].weight;
    layers[i].bias += factor * other.layers[i].bias;
  }
}

Gradients Gradients::zeros_like(const std::vector<LayerParams>& layers) {
  Gradients g;
  g.layers.reserve(layers.size());
  for (const auto& l : layers) {
    g.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  }
  return g;
}

Activations forward(const Mlp& mlp, const Eigen::MatrixXd& batch, ForwardMode mode) {
  const MlpSpec& spec = mlp.spec();
  if (batch.cols() != spec.input_dim) {
    throw ShapeError("forward: batch has " + std::to_string(batch.cols()) +
                     " columns, expected input_dim " + std::to_string(spec.input_dim));
  }
  const bool train = mode.kind == ForwardKind::Train;
  const bool use_dropout = train && spec.dropout_rate > 0.0;
  Rng drop_rng(mode.dropout_seed);

  Activations acts;
  acts.input = batch;
  acts.train_mode = train;
  const int n_hidden = static_cast<int>(spec.hidden_dims.size());
  acts.pre.reserve(n_hidden + 1);
  acts.post.reserve(n_hidden);

  Eigen::MatrixXd x = batch;
  for (int l = 0; l < n_hidden; ++l) {
    const auto& p = mlp.layers()[l];
    Eigen::MatrixXd z = (x * p.weight.transpose()).rowwise() + p.bias.transpose();
    acts.pre.push_back(z);
    Eigen::MatrixXd a = z.cwiseMax(0.0);
    if (use_dropout) {
      const double keep = 1.0 - spec.dropout_rate;
      Eigen::MatrixXd mask(a.rows(), a.cols());
      for (long r = 0; r < a.rows(); ++r) {
        for (long c = 0; c < a.cols(); ++c) {
          mask(r, c) = drop_rng.uniform() < keep ? 1.0 / keep : 0.0;
        }
      }
      a = a.cwiseProduct(mask);
      acts.dropout_mask.push_back(std::move(mask));
    }
    acts.post.push_back(a);
    x = acts.post.back();
  }

  const auto& out = mlp.layers()[n_hidden];
  Eigen::MatrixXd z = (x * out.weight.transpose()).rowwise() + out.bias.transpose();
  acts.pre.push_back(z);
  acts.probs.resize(z.rows());
  for (long r = 0; r < z.rows(); ++r) {
    const double p = 1.0 / (1.0 + std::exp(-z(r, 0)));
    acts.probs[r] = std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
  }
  return acts;
}

std::pair<double, Eigen::VectorXd> bce_loss(const Eigen::VectorXd& probs,
                                            const Eigen::VectorXd& labels) {
  if (probs.size() != labels.size()) {
    throw ShapeError("bce_loss: probs/labels length mismatch: " +
                     std::to_string(probs.size()) + " vs " +
                     std::to_string(labels.size()));
  }
  if (probs.size() == 0) throw ShapeError("bce_loss: empty batch");
  const double n = static_cast<double>(probs.size());
  double loss = 0.0;
  Eigen::VectorXd grad(probs.size());
  for (long i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    const double y = labels[i];
    loss += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    grad[i] = (-y / p + (1.0 - y) / (1.0 - p)) / n;
  }
  return {loss / n, grad};
}

namespace {

Gradients backward_impl(const Mlp& mlp, const Activations& acts,
                        const Eigen::VectorXd& dloss_dprobs, int inject_layer,
                        const Eigen::MatrixXd* dloss_dhidden) {
  const MlpSpec& spec = mlp.spec();
  const int n_hidden = static_cast<int>(spec.hidden_dims.size());
  if (acts.probs.size() != dloss_dprobs.size()) {
    throw ShapeError("backward: dloss_dprobs length mismatch");
  }
  if (static_cast<int>(acts.pre.size()) != n_hidden + 1 ||
      acts.input.cols() != spec.input_dim) {
    throw ShapeError("backward: activations do not match this mlp");
  }

  Gradients grads = Gradients::zeros_like(mlp.layers());

  // Output layer: p = sigmoid(z), dL/dz = dL/dp * p * (1 - p).
  Eigen::MatrixXd dz(acts.probs.size(), 1);
  for (long i = 0; i < acts.probs.size(); ++i) {
    const double p = acts.probs[i];
    dz(i, 0) = dloss_dprobs[i] * p * (1.0 - p);
  }

  for (int l = n_hidden; l >= 0; --l) {
    const Eigen::MatrixXd& prev = l == 0 ? acts.input : acts.post[l - 1];
    grads.layers[l].weight = dz.transpose() * prev;
    grads.layers[l].bias = dz.colwise().sum().transpose();
    if (l == 0) break;

    Eigen::MatrixXd da = dz * mlp.layers()[l].weight;
    if (dloss_dhidden != nullptr && l - 1 == inject_layer) {
      if (dloss_dhidden->rows() != da.rows() || dloss_dhidden->cols() != da.cols()) {
        throw ShapeError("backward: injected hidden gradient shape mismatch");
      }
      da += *dloss_dhidden;
    }
    if (!acts.dropout_mask.empty()) {
      da = da.cwiseProduct(acts.dropout_mask[l - 1]);
    }
    // ReLU mask from the pre-activation.
    dz = (acts.pre[l - 1].array() > 0.0).cast<double>().matrix().cwiseProduct(da);
  }
  return grads;
}

}  // namespace

Gradients backward(const Mlp& mlp, const Activations& acts,
                   const Eigen::VectorXd& dloss_dprobs) {
  return backward_impl(mlp, acts, dloss_dprobs, -1, nullptr);
}

Gradients backward(const Mlp& mlp, const Activations& acts,
                   const Eigen::VectorXd& dloss_dprobs, int hidden_layer,
                   const Eigen::MatrixXd& dloss_dhidden) {
  if (hidden_layer < 0 || hidden_layer >= static_cast<int>(mlp.spec().hidden_dims.size())) {
    throw ShapeError("backward: hidden layer index out of range");
  }
  return backward_impl(mlp, acts, dloss_dprobs, hidden_layer, &dloss_dhidden);
}

double grad_check_against(const Mlp& mlp, const Eigen::MatrixXd& batch,
                          const Eigen::VectorXd& labels, double eps,
                          const Gradients& analytic) {
  if (eps <= 0.0 || eps > 1e-3) throw ShapeError("grad_check: eps must be in (0, 1e-3]");
  const Eigen::VectorXd base = mlp.flatten();
  const Eigen::VectorXd analytic_flat = analytic.flatten();
  auto loss_at = [&](const Eigen::VectorXd& params) {
    const Mlp probe = mlp.with_flat(params);
    const Activations acts = forward(probe, batch, ForwardMode::eval());
    return bce_loss(acts.probs, labels).first;
  };
  double max_rel = 0.0;
  for (long i = 0; i < base.size(); ++i) {
    Eigen::VectorXd p = base;
    p[i] = base[i] + eps;
    const double up = loss_at(p);
    p[i] = base[i] - eps;
    const double down = loss_at(p);
    const double fd = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic_flat[i]), std::abs(fd), 1e-12});
    max_rel = std::max(max_rel, std::abs(analytic_flat[i] - fd) / denom);
  }
  return max_rel;
}

double grad_check(const Mlp& mlp, const Eigen::MatrixXd& batch,
                  const Eigen::VectorXd& labels, double eps) {
  const Activations acts = forward(mlp, batch, ForwardMode::eval());
  const auto [loss, dprobs] = bce_loss(acts.probs, labels);
  (void)loss;
  const Gradients analytic = backward(mlp, acts, dprobs);
  return grad_check_against(mlp, batch, labels, eps, analytic);
}

}  // namespace leaklab
