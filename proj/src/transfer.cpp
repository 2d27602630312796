#include "leaklab/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "leaklab/errors.hpp"
#include "leaklab/metrics.hpp"
#include "leaklab/rng.hpp"

namespace leaklab {

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<long>& rows) {
  Eigen::MatrixXd out(static_cast<long>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<long>(i)) = m.row(rows[i]);
  }
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<long>& rows) {
  Eigen::VectorXd out(static_cast<long>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<long>(i)] = v[rows[i]];
  return out;
}

std::vector<long> shuffled_indices(long n, std::uint64_t seed) {
  std::vector<long> order(n);
  for (long i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  return order;
}

// Single-row view of batch activations, preserving the dropout masks so
// per-example gradients see the same network as the batch update.
Activations slice_row(const Activations& acts, long row) {
  Activations out;
  out.train_mode = acts.train_mode;
  out.input = acts.input.row(row);
  out.pre.reserve(acts.pre.size());
  for (const auto& m : acts.pre) out.pre.push_back(m.row(row));
  out.post.reserve(acts.post.size());
  for (const auto& m : acts.post) out.post.push_back(m.row(row));
  out.dropout_mask.reserve(acts.dropout_mask.size());
  for (const auto& m : acts.dropout_mask) out.dropout_mask.push_back(m.row(row));
  out.probs.resize(1);
  out.probs[0] = acts.probs[row];
  return out;
}

// Per-example gradients of the joint loss. Each example carries its own BCE
// term plus an equal 1/B share of the batch-level alignment term, routed
// through its own activation path, so the per-example mean equals the full
// batch gradient.
std::vector<Eigen::VectorXd> per_example_grads(const Mlp& model, const Activations& acts,
                                               const Eigen::VectorXd& labels,
                                               int align_layer = -1,
                                               const Eigen::MatrixXd* align_dh = nullptr,
                                               double align_scale = 0.0) {
  const long batch = acts.batch_size();
  std::vector<Eigen::VectorXd> out;
  out.reserve(batch);
  for (long i = 0; i < batch; ++i) {
    const Activations row = slice_row(acts, i);
    Eigen::VectorXd dlp(1);
    const double p = row.probs[0];
    const double y = labels[i];
    dlp[0] = -y / p + (1.0 - y) / (1.0 - p);
    Gradients g;
    if (align_dh != nullptr) {
      const Eigen::MatrixXd dh =
          align_scale * static_cast<double>(batch) * align_dh->row(i);
      g = backward(model, row, dlp, align_layer, dh);
    } else {
      g = backward(model, row, dlp);
    }
    out.push_back(g.flatten());
  }
  return out;
}

// Dispatches a parameter update for whichever rule the config selects; Adam
// keeps state across calls, the others are pure.
class OptimizerDriver {
 public:
  OptimizerDriver(const OptimizerConfig& cfg, long param_count) : cfg_(cfg) {
    if (const auto* adam = std::get_if<AdamConfig>(&cfg_)) {
      adam_state_ = AdamState::init(param_count, *adam);
    }
  }

  bool wants_per_example() const { return std::holds_alternative<DpSgdConfig>(cfg_); }
  bool stateless() const { return !std::holds_alternative<AdamConfig>(cfg_); }

  Eigen::VectorXd step(const Eigen::VectorXd& params, const Eigen::VectorXd& mean_grad,
                       std::uint64_t noise_seed) {
    if (const auto* sgd = std::get_if<SgdConfig>(&cfg_)) {
      return sgd_step(params, mean_grad, sgd->lr);
    }
    if (std::holds_alternative<AdamConfig>(cfg_)) {
      return adam_step(*adam_state_, params, mean_grad);
    }
    if (const auto* sgld = std::get_if<SgldConfig>(&cfg_)) {
      return sgld_step(params, mean_grad, *sgld, noise_seed);
    }
    throw ConfigError("DP-SGD requires per-example gradients");
  }

  Eigen::VectorXd step_per_example(const Eigen::VectorXd& params,
                                   const std::vector<Eigen::VectorXd>& grads,
                                   std::uint64_t noise_seed) {
    const auto* dp = std::get_if<DpSgdConfig>(&cfg_);
    if (dp == nullptr) throw ConfigError("optimizer does not take per-example gradients");
    return dpsgd_step(params, grads, *dp, noise_seed);
  }

 private:
  OptimizerConfig cfg_;
  std::optional<AdamState> adam_state_;
};

int resolve_alignment_layer(const MlpSpec& spec, int requested) {
  const int n_hidden = static_cast<int>(spec.hidden_dims.size());
  const int layer = requested < 0 ? n_hidden - 1 : requested;
  if (layer < 0 || layer >= n_hidden) {
    throw ConfigError("alignment layer " + std::to_string(requested) +
                      " out of range for " + std::to_string(n_hidden) +
                      " hidden layers");
  }
  return layer;
}

struct StageNames {
  std::string order;
  std::string dropout;
  std::string noise;

  explicit StageNames(const std::string& prefix)
      : order(prefix + "-order"), dropout(prefix + "-dropout"),
        noise(prefix + "-noise") {}
};

// One supervised update on a row batch; returns the new flat parameters.
Eigen::VectorXd supervised_step(const Mlp& model, OptimizerDriver& opt,
                                const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                std::uint64_t dropout_seed, std::uint64_t noise_seed) {
  const Activations acts = forward(model, x, ForwardMode::train(dropout_seed));
  if (opt.wants_per_example()) {
    return opt.step_per_example(model.flatten(), per_example_grads(model, acts, y),
                                noise_seed);
  }
  const auto [loss, dlp] = bce_loss(acts.probs, y);
  (void)loss;
  const Gradients grads = backward(model, acts, dlp);
  return opt.step(model.flatten(), grads.flatten(), noise_seed);
}

Mlp train_loop(Mlp model, const DatasetSplit& data, const TrainConfig& cfg,
               const std::string& stage_prefix, std::vector<EpochMetrics>* metrics_out) {
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (data.train.dim() != model.spec().input_dim) {
    throw ShapeError("training data has " + std::to_string(data.train.dim()) +
                     " features, model expects " +
                     std::to_string(model.spec().input_dim));
  }
  const StageNames names(stage_prefix);
  OptimizerDriver opt(cfg.optimizer, model.param_count());
  const long batches = data.train.size() / cfg.batch_size;
  if (cfg.epochs > 0 && batches == 0) {
    throw DataError("train split smaller than one batch");
  }
  long k = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::vector<long> order =
        shuffled_indices(data.train.size(), derive_seed(cfg.seed, names.order, epoch));
    for (long b = 0; b < batches; ++b) {
      ++k;
      const std::vector<long> rows(order.begin() + b * cfg.batch_size,
                                   order.begin() + (b + 1) * cfg.batch_size);
      const Eigen::MatrixXd x = gather_rows(data.train.features, rows);
      const Eigen::VectorXd y = gather(data.train.labels, rows);
      model.set_from_flat(supervised_step(model, opt, x, y,
                                          derive_seed(cfg.seed, names.dropout, k),
                                          derive_seed(cfg.seed, names.noise, k)));
    }
    if (metrics_out != nullptr) {
      metrics_out->push_back(evaluate_model(model, data, epoch));
    }
  }
  return model;
}

}  // namespace

double median_heuristic_bandwidth(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd z(x.rows() + y.rows(), x.cols());
  z << x, y;
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(z.rows()) * (z.rows() - 1) / 2);
  for (long i = 0; i < z.rows(); ++i) {
    for (long j = i + 1; j < z.rows(); ++j) {
      dists.push_back((z.row(i) - z.row(j)).norm());
    }
  }
  if (dists.empty()) return 1.0;
  std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
  const double median = dists[dists.size() / 2];
  return median > 0.0 ? median : 1.0;
}

namespace {

double kernel_eval(const MmdKernel& k, const Eigen::RowVectorXd& a,
                   const Eigen::RowVectorXd& b) {
  if (k.kind == MmdKernelKind::Linear) return a.dot(b);
  const double sq = (a - b).squaredNorm();
  return std::exp(-sq / (2.0 * k.bandwidth * k.bandwidth));
}

void check_mmd_inputs(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                      const MmdKernel& kernel) {
  if (x.cols() != y.cols()) {
    throw ShapeError("mmd: column mismatch: " + std::to_string(x.cols()) + " vs " +
                     std::to_string(y.cols()));
  }
  if (x.rows() == 0 || y.rows() == 0) throw ShapeError("mmd: empty sample");
  if (kernel.kind == MmdKernelKind::Rbf && kernel.bandwidth <= 0.0) {
    throw ConfigError("mmd: rbf bandwidth must be > 0");
  }
}

}  // namespace

double mmd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const MmdKernel& kernel) {
  check_mmd_inputs(x, y, kernel);
  const long n = x.rows();
  const long m = y.rows();
  double xx = 0.0, yy = 0.0, xy = 0.0;
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) xx += kernel_eval(kernel, x.row(i), x.row(j));
  }
  for (long i = 0; i < m; ++i) {
    for (long j = 0; j < m; ++j) yy += kernel_eval(kernel, y.row(i), y.row(j));
  }
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < m; ++j) xy += kernel_eval(kernel, x.row(i), y.row(j));
  }
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  return xx / (dn * dn) + yy / (dm * dm) - 2.0 * xy / (dn * dm);
}

MmdWithGradients mmd_with_gradients(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                    const MmdKernel& kernel) {
  check_mmd_inputs(x, y, kernel);
  const long n = x.rows();
  const long m = y.rows();
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  MmdWithGradients out;
  out.dx = Eigen::MatrixXd::Zero(n, x.cols());
  out.dy = Eigen::MatrixXd::Zero(m, y.cols());

  if (kernel.kind == MmdKernelKind::Linear) {
    const Eigen::RowVectorXd mean_x = x.colwise().mean();
    const Eigen::RowVectorXd mean_y = y.colwise().mean();
    out.value = mean_x.dot(mean_x) + mean_y.dot(mean_y) - 2.0 * mean_x.dot(mean_y);
    for (long i = 0; i < n; ++i) out.dx.row(i) = (2.0 / dn) * (mean_x - mean_y);
    for (long j = 0; j < m; ++j) out.dy.row(j) = (2.0 / dm) * (mean_y - mean_x);
    return out;
  }

  const double inv_bw2 = 1.0 / (kernel.bandwidth * kernel.bandwidth);
  double xx = 0.0, yy = 0.0, xy = 0.0;
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) {
      const double k = kernel_eval(kernel, x.row(i), x.row(j));
      xx += k;
      // d k(x_i, x_j) / d x_i = k * (x_j - x_i) / bw^2; x_i appears in row and
      // column position, contributing twice.
      out.dx.row(i) += (2.0 / (dn * dn)) * k * inv_bw2 * (x.row(j) - x.row(i));
    }
  }
  for (long i = 0; i < m; ++i) {
    for (long j = 0; j < m; ++j) {
      const double k = kernel_eval(kernel, y.row(i), y.row(j));
      yy += k;
      out.dy.row(i) += (2.0 / (dm * dm)) * k * inv_bw2 * (y.row(j) - y.row(i));
    }
  }
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < m; ++j) {
      const double k = kernel_eval(kernel, x.row(i), y.row(j));
      xy += k;
      out.dx.row(i) -= (2.0 / (dn * dm)) * k * inv_bw2 * (y.row(j) - x.row(i));
      out.dy.row(j) -= (2.0 / (dn * dm)) * k * inv_bw2 * (x.row(i) - y.row(j));
    }
  }
  out.value = xx / (dn * dn) + yy / (dm * dm) - 2.0 * xy / (dn * dm);
  return out;
}

EpochMetrics evaluate_model(const Mlp& model, const DatasetSplit& split, int epoch) {
  auto eval_on = [&](const LabeledDataset& ds, double& acc, double& auc_out) {
    const Activations acts = forward(model, ds.features, ForwardMode::eval());
    BinaryEval eval;
    eval.scores.assign(acts.probs.data(), acts.probs.data() + acts.probs.size());
    eval.labels.resize(ds.size());
    for (long i = 0; i < ds.size(); ++i) eval.labels[i] = static_cast<int>(ds.labels[i]);
    acc = accuracy(eval);
    try {
      auc_out = auc(eval);
    } catch (const MetricError&) {
      auc_out = std::numeric_limits<double>::quiet_NaN();  // single-class split
    }
  };
  EpochMetrics m;
  m.epoch = epoch;
  eval_on(split.train, m.train_acc, m.train_auc);
  eval_on(split.test, m.test_acc, m.test_auc);
  return m;
}

SourceTrainResult train_source(const DatasetSplit& source, const MlpSpec& spec,
                               const TrainConfig& cfg) {
  SourceTrainResult result;
  Mlp model = Mlp::init(spec, derive_seed(cfg.seed, "source-init"));
  result.model = train_loop(std::move(model), source, cfg, "source", &result.metrics);
  result.artifact.source_model = result.model;
  return result;
}

FineTuneResult fine_tune(const Mlp& source_model, const DatasetSplit& target,
                         const TrainConfig& cfg) {
  if (source_model.spec().input_dim != target.train.dim()) {
    throw ShapeError("fine_tune: source model expects " +
                     std::to_string(source_model.spec().input_dim) +
                     " features, target data has " + std::to_string(target.train.dim()));
  }
  FineTuneResult result;
  result.model = train_loop(source_model, target, cfg, "finetune", &result.metrics);
  return result;
}

MappingResult cotrain_mapping(const DomainPair& pair, const MlpSpec& source_spec,
                              const MlpSpec& target_spec, const TrainConfig& cfg) {
  const int align_src = resolve_alignment_layer(source_spec, cfg.alignment_layer);
  const int align_tgt = resolve_alignment_layer(target_spec, cfg.alignment_layer);
  if (source_spec.hidden_dims[align_src] != target_spec.hidden_dims[align_tgt]) {
    throw ShapeError("alignment layer widths differ: " +
                     std::to_string(source_spec.hidden_dims[align_src]) + " vs " +
                     std::to_string(target_spec.hidden_dims[align_tgt]));
  }
  if (cfg.mmd_weight < 0.0) throw ConfigError("mmd weight must be >= 0");
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");

  MappingResult result;
  result.trace.alignment_layer = align_src;
  Mlp src = Mlp::init(source_spec, derive_seed(cfg.seed, "source-init"));
  Mlp tgt = Mlp::init(target_spec, derive_seed(cfg.seed, "target-init"));
  OptimizerDriver src_opt(cfg.optimizer, src.param_count());
  OptimizerDriver tgt_opt(cfg.optimizer, tgt.param_count());

  const long batches =
      std::min(pair.source.train.size(), pair.target.train.size()) / cfg.batch_size;
  if (batches == 0) throw DataError("a train split is smaller than one batch");

  const Eigen::VectorXd empty_props;
  long k = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::vector<long> src_order = shuffled_indices(
        pair.source.train.size(), derive_seed(cfg.seed, "source-order", epoch));
    const std::vector<long> tgt_order = shuffled_indices(
        pair.target.train.size(), derive_seed(cfg.seed, "target-order", epoch));
    for (long b = 0; b < batches; ++b) {
      ++k;
      const std::vector<long> rows_s(src_order.begin() + b * cfg.batch_size,
                                     src_order.begin() + (b + 1) * cfg.batch_size);
      const std::vector<long> rows_t(tgt_order.begin() + b * cfg.batch_size,
                                     tgt_order.begin() + (b + 1) * cfg.batch_size);
      const Eigen::MatrixXd x_s = gather_rows(pair.source.train.features, rows_s);
      const Eigen::VectorXd y_s = gather(pair.source.train.labels, rows_s);
      const Eigen::MatrixXd x_t = gather_rows(pair.target.train.features, rows_t);
      const Eigen::VectorXd y_t = gather(pair.target.train.labels, rows_t);

      const Activations acts_s =
          forward(src, x_s, ForwardMode::train(derive_seed(cfg.seed, "source-dropout", k)));
      const Activations acts_t =
          forward(tgt, x_t, ForwardMode::train(derive_seed(cfg.seed, "target-dropout", k)));
      const Eigen::MatrixXd& h_s = acts_s.hidden(align_src);
      const Eigen::MatrixXd& h_t = acts_t.hidden(align_tgt);

      const auto [loss_s, dlp_s] = bce_loss(acts_s.probs, y_s);
      const auto [loss_t, dlp_t] = bce_loss(acts_t.probs, y_t);
      (void)loss_s;
      (void)loss_t;

      std::optional<MmdWithGradients> alignment;
      if (cfg.mmd_weight > 0.0) {
        MmdKernel kernel = MmdKernel::linear();
        if (cfg.kernel == MmdKernelKind::Rbf) {
          kernel = MmdKernel::rbf(cfg.rbf_bandwidth > 0.0
                                      ? cfg.rbf_bandwidth
                                      : median_heuristic_bandwidth(h_s, h_t));
        }
        alignment = mmd_with_gradients(h_s, h_t, kernel);
      }

      Eigen::VectorXd new_src, new_tgt;
      const std::uint64_t noise_s = derive_seed(cfg.seed, "source-noise", k);
      const std::uint64_t noise_t = derive_seed(cfg.seed, "target-noise", k);
      if (src_opt.wants_per_example()) {
        const Eigen::MatrixXd dh_s =
            alignment ? alignment->dx : Eigen::MatrixXd();
        const Eigen::MatrixXd dh_t =
            alignment ? alignment->dy : Eigen::MatrixXd();
        new_src = src_opt.step_per_example(
            src.flatten(),
            per_example_grads(src, acts_s, y_s, align_src,
                              alignment ? &dh_s : nullptr, cfg.mmd_weight),
            noise_s);
        new_tgt = tgt_opt.step_per_example(
            tgt.flatten(),
            per_example_grads(tgt, acts_t, y_t, align_tgt,
                              alignment ? &dh_t : nullptr, cfg.mmd_weight),
            noise_t);
      } else {
        Gradients g_s, g_t;
        if (alignment) {
          g_s = backward(src, acts_s, dlp_s, align_src,
                         (cfg.mmd_weight * alignment->dx).eval());
          g_t = backward(tgt, acts_t, dlp_t, align_tgt,
                         (cfg.mmd_weight * alignment->dy).eval());
        } else {
          g_s = backward(src, acts_s, dlp_s);
          g_t = backward(tgt, acts_t, dlp_t);
        }
        new_src = src_opt.step(src.flatten(), g_s.flatten(), noise_s);
        new_tgt = tgt_opt.step(tgt.flatten(), g_t.flatten(), noise_t);
      }
      src.set_from_flat(new_src);
      tgt.set_from_flat(new_tgt);

      const Eigen::VectorXd props =
          pair.source.train.property_labels
              ? gather(*pair.source.train.property_labels, rows_s)
              : empty_props;
      result.trace.records.emplace_back(k, h_s, h_t, props);
    }
    result.source_metrics.push_back(evaluate_model(src, pair.source, epoch));
    result.target_metrics.push_back(evaluate_model(tgt, pair.target, epoch));
  }
  result.source_model = std::move(src);
  result.target_model = std::move(tgt);
  return result;
}

ParameterResult cotrain_parameter(const DomainPair& pair, const MlpSpec& shared_spec,
                                  const BatchedDataset& source_batches,
                                  const TrainConfig& cfg) {
  if (pair.source.train.dim() != pair.target.train.dim()) {
    throw ShapeError("parameter co-training requires equal feature dims: " +
                     std::to_string(pair.source.train.dim()) + " vs " +
                     std::to_string(pair.target.train.dim()));
  }
  if (source_batches.batches.empty()) throw DataError("no source batches");
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  const int batch = source_batches.batch_size;

  ParameterResult result;
  Mlp model = Mlp::init(shared_spec, derive_seed(cfg.seed, "shared-init"));
  result.trace.shared_spec = shared_spec;
  result.trace.optimizer = cfg.optimizer;
  result.trace.initial_params = model.flatten();
  OptimizerDriver opt(cfg.optimizer, model.param_count());

  const long pairs_per_epoch =
      std::min(static_cast<long>(source_batches.batches.size()),
               pair.target.train.size() / batch);
  if (pairs_per_epoch == 0) throw DataError("target split smaller than one batch");

  long k = 0;
  auto update = [&](const std::vector<long>& rows, const LabeledDataset& ds,
                    DomainTag tag, int label) {
    ++k;
    const std::uint64_t dropout_seed = derive_seed(cfg.seed, "shared-dropout", k);
    const std::uint64_t noise_seed = derive_seed(cfg.seed, "shared-noise", k);
    const Eigen::MatrixXd x = gather_rows(ds.features, rows);
    const Eigen::VectorXd y = gather(ds.labels, rows);
    const Activations acts = forward(model, x, ForwardMode::train(dropout_seed));
    Eigen::VectorXd next;
    if (opt.wants_per_example()) {
      next = opt.step_per_example(model.flatten(), per_example_grads(model, acts, y),
                                  noise_seed);
    } else {
      const auto [loss, dlp] = bce_loss(acts.probs, y);
      (void)loss;
      next = opt.step(model.flatten(), backward(model, acts, dlp).flatten(), noise_seed);
    }
    model.set_from_flat(next);
    result.trace.records.emplace_back(k, tag, model.flatten(), rows, dropout_seed,
                                      noise_seed, label);
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::vector<long> batch_order =
        shuffled_indices(static_cast<long>(source_batches.batches.size()),
                         derive_seed(cfg.seed, "source-batch-order", epoch));
    const std::vector<long> tgt_order = shuffled_indices(
        pair.target.train.size(), derive_seed(cfg.seed, "target-order", epoch));
    for (long i = 0; i < pairs_per_epoch; ++i) {
      const long sb = batch_order[i];
      update(source_batches.batches[sb], pair.source.train, DomainTag::Source,
             source_batches.labels[sb]);
      const std::vector<long> rows_t(tgt_order.begin() + i * batch,
                                     tgt_order.begin() + (i + 1) * batch);
      update(rows_t, pair.target.train, DomainTag::Target, -1);
    }
    result.source_metrics.push_back(evaluate_model(model, pair.source, epoch));
    result.target_metrics.push_back(evaluate_model(model, pair.target, epoch));
  }
  result.shared_model = std::move(model);
  return result;
}

Eigen::VectorXd replay_param_update(const ParamTrace& trace, std::size_t record_index,
                                    const LabeledDataset& source_data, EvalAccess access) {
  if (record_index >= trace.records.size()) {
    throw ShapeError("replay: record index out of range");
  }
  const ParamRecord& rec = trace.records[record_index];
  if (std::holds_alternative<AdamConfig>(trace.optimizer)) {
    throw ConfigError("replay requires a stateless optimizer");
  }
  const Eigen::VectorXd& prev =
      record_index == 0 ? trace.initial_params : trace.records[record_index - 1].params;
  Mlp model = Mlp::init(trace.shared_spec, 0).with_flat(prev);
  const std::vector<long>& rows = rec.batch_rows(access);
  const Eigen::MatrixXd x = gather_rows(source_data.features, rows);
  const Eigen::VectorXd y = gather(source_data.labels, rows);
  const Activations acts = forward(model, x, ForwardMode::train(rec.dropout_seed(access)));
  OptimizerDriver opt(trace.optimizer, model.param_count());
  if (opt.wants_per_example()) {
    return opt.step_per_example(prev, per_example_grads(model, acts, y),
                                rec.noise_seed(access));
  }
  const auto [loss, dlp] = bce_loss(acts.probs, y);
  (void)loss;
  return opt.step(prev, backward(model, acts, dlp).flatten(), rec.noise_seed(access));
}

}  // namespace leaklab
