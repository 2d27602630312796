#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "leaklab/data.hpp"
#include "leaklab/nn.hpp"
#include "leaklab/optim.hpp"

namespace leaklab {

// Capability token for the ground truth stored inside leakage traces. Attack
// predictors never receive one; only evaluation/replay code constructs it, so
// the attacker information boundary is visible in the signatures.
class EvalAccess {
 public:
  static EvalAccess for_evaluation() { return EvalAccess(); }

 private:
  EvalAccess() = default;
};

using OptimizerConfig = std::variant<SgdConfig, AdamConfig, SgldConfig, DpSgdConfig>;

enum class MmdKernelKind { Linear, Rbf };

struct TrainConfig {
  int epochs = 10;
  int batch_size = 64;
  OptimizerConfig optimizer = AdamConfig{};
  double mmd_weight = 1.0;     // mapping co-training only
  int alignment_layer = -1;    // -1 selects the final hidden layer
  MmdKernelKind kernel = MmdKernelKind::Rbf;
  double rbf_bandwidth = 0.0;  // 0 = median heuristic per batch pair
  std::uint64_t seed = 1;
};

struct EpochMetrics {
  int epoch = 0;
  double train_acc = 0.0;
  double train_auc = 0.0;
  double test_acc = 0.0;
  double test_auc = 0.0;
};

// ----- Leakage traces (Table-1 profiles) ------------------------------------

// Model-based paradigm: the only thing crossing the boundary is the final
// source model.
struct ModelArtifact {
  Mlp source_model;
};

// Mapping-based paradigm: per iteration, the hidden batches of both domains
// at the alignment layer. Per-sample source property labels ride along for
// the harness only.
class FeatureRecord {
 public:
  FeatureRecord(long iteration, Eigen::MatrixXd source_hidden,
                Eigen::MatrixXd target_hidden, Eigen::VectorXd source_property)
      : iteration(iteration),
        source_hidden(std::move(source_hidden)),
        target_hidden(std::move(target_hidden)),
        source_property_(std::move(source_property)) {}

  long iteration;
  Eigen::MatrixXd source_hidden;
  Eigen::MatrixXd target_hidden;

  const Eigen::VectorXd& source_property(EvalAccess) const { return source_property_; }

 private:
  Eigen::VectorXd source_property_;
};

struct FeatureTrace {
  int alignment_layer = 0;
  std::vector<FeatureRecord> records;
};

enum class DomainTag { Source, Target };

// Parameter-based paradigm: the shared parameter vector after every update.
// Batch composition, seeds and the batch property label are harness-only.
class ParamRecord {
 public:
  ParamRecord(long iteration, DomainTag tag, Eigen::VectorXd params,
              std::vector<long> batch_rows, std::uint64_t dropout_seed,
              std::uint64_t noise_seed, int batch_label)
      : iteration(iteration),
        tag(tag),
        params(std::move(params)),
        batch_rows_(std::move(batch_rows)),
        dropout_seed_(dropout_seed),
        noise_seed_(noise_seed),
        batch_label_(batch_label) {}

  long iteration;
  DomainTag tag;
  Eigen::VectorXd params;

  const std::vector<long>& batch_rows(EvalAccess) const { return batch_rows_; }
  std::uint64_t dropout_seed(EvalAccess) const { return dropout_seed_; }
  std::uint64_t noise_seed(EvalAccess) const { return noise_seed_; }
  int batch_label(EvalAccess) const { return batch_label_; }  // -1 on target records

 private:
  std::vector<long> batch_rows_;
  std::uint64_t dropout_seed_ = 0;
  std::uint64_t noise_seed_ = 0;
  int batch_label_ = -1;
};

struct ParamTrace {
  MlpSpec shared_spec;
  OptimizerConfig optimizer;
  Eigen::VectorXd initial_params;
  std::vector<ParamRecord> records;
};

// ----- Maximum mean discrepancy ----------------------------------------------

struct MmdKernel {
  MmdKernelKind kind = MmdKernelKind::Rbf;
  double bandwidth = 1.0;  // Rbf only

  static MmdKernel linear() { return {MmdKernelKind::Linear, 0.0}; }
  static MmdKernel rbf(double bandwidth) { return {MmdKernelKind::Rbf, bandwidth}; }
};

// Median pairwise distance over the concatenated rows; falls back to 1 when
// the batch is degenerate.
double median_heuristic_bandwidth(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

// Biased V-statistic: mean k(X,X) + mean k(Y,Y) - 2 mean k(X,Y).
double mmd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const MmdKernel& kernel);

// MMD value plus its gradients w.r.t. every row of x and y (bandwidth treated
// as a constant).
struct MmdWithGradients {
  double value = 0.0;
  Eigen::MatrixXd dx;
  Eigen::MatrixXd dy;
};
MmdWithGradients mmd_with_gradients(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                    const MmdKernel& kernel);

// ----- Training entry points --------------------------------------------------

struct SourceTrainResult {
  Mlp model;
  ModelArtifact artifact;
  std::vector<EpochMetrics> metrics;
};

// Standard supervised training on the source train split; per-epoch train and
// test metrics feed the overfitting study.
SourceTrainResult train_source(const DatasetSplit& source, const MlpSpec& spec,
                               const TrainConfig& cfg);

struct FineTuneResult {
  Mlp model;
  std::vector<EpochMetrics> metrics;
};

// Continues training from the source weights on the target train split.
FineTuneResult fine_tune(const Mlp& source_model, const DatasetSplit& target,
                         const TrainConfig& cfg);

struct MappingResult {
  Mlp source_model;
  Mlp target_model;
  FeatureTrace trace;
  std::vector<EpochMetrics> source_metrics;
  std::vector<EpochMetrics> target_metrics;
};

// Joint loss per iteration: bce_src + bce_tgt + mmd_weight * MMD(h_S, h_T) at
// the alignment layer; one batch from each domain per iteration, both models
// updated, hidden batches recorded. An epoch is a pass over the smaller
// domain's train split.
MappingResult cotrain_mapping(const DomainPair& pair, const MlpSpec& source_spec,
                              const MlpSpec& target_spec, const TrainConfig& cfg);

struct ParameterResult {
  Mlp shared_model;
  ParamTrace trace;
  std::vector<EpochMetrics> source_metrics;  // shared model on source splits
  std::vector<EpochMetrics> target_metrics;  // shared model on target splits
};

// Strict source/target alternation updating one fully-shared network. Source
// updates consume the fixed batches of `source_batches` (order reshuffled per
// epoch) so each update carries that batch's property label in the trace.
ParameterResult cotrain_parameter(const DomainPair& pair, const MlpSpec& shared_spec,
                                  const BatchedDataset& source_batches,
                                  const TrainConfig& cfg);

// Shared-model evaluation helper (also used by the attack/runner layers).
EpochMetrics evaluate_model(const Mlp& model, const DatasetSplit& split, int epoch);

// Replays a recorded source-side update from the preceding snapshot; used by
// the trace-replay invariant and exactness tests.
Eigen::VectorXd replay_param_update(const ParamTrace& trace, std::size_t record_index,
                                    const LabeledDataset& source_data, EvalAccess access);

}  // namespace leaklab
