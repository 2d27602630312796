#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace leaklab {

struct Attribute {
  std::string name;
  bool continuous = false;
  std::vector<std::string> categories;  // sorted; empty for continuous attrs

  int category_index(const std::string& value) const;  // -1 if unknown
};

// A parsed row: continuous attrs hold their numeric value, categorical attrs
// the index into the schema vocabulary. Provenance is kept for the
// source/target partition checks.
struct RawRow {
  std::vector<double> values;  // one per attribute
  int label = 0;               // 1 iff income >50K
  int file_origin = 0;         // 0 = train file, 1 = test file
  long line_no = 0;
  long uid = 0;
};

// Names a sensitive attribute whose value becomes the property label; the
// attribute itself is removed from the feature encoding.
struct PropertyTag {
  int attr_index = -1;
  int positive_category = -1;
  std::string attr_name;
  std::string positive_value;
};

struct RawDataset {
  std::vector<Attribute> schema;
  std::vector<RawRow> rows;
  std::optional<PropertyTag> property;
  long dropped_missing = 0;

  int attr_index(const std::string& name) const;  // -1 if unknown
};

struct NormStat {
  std::string column;
  double mean = 0.0;
  double stddev = 1.0;
};

struct LabeledDataset {
  Eigen::MatrixXd features;  // rows x d
  Eigen::VectorXd labels;    // 0/1
  std::optional<Eigen::VectorXd> property_labels;
  std::string property_attr;      // e.g. "sex"; empty when untagged
  std::string property_positive;  // e.g. "Male"
  std::vector<std::string> feature_names;
  std::vector<NormStat> norm_stats;
  std::vector<long> row_uids;

  long size() const { return features.rows(); }
  long dim() const { return features.cols(); }
};

struct DatasetSplit {
  LabeledDataset train;
  LabeledDataset test;
};

struct DomainPair {
  DatasetSplit source;
  DatasetSplit target;
};

// Fixed-size batches with per-batch binary labels; rows index into the
// originating dataset and the last partial batch is dropped.
struct BatchedDataset {
  int batch_size = 0;
  std::vector<std::vector<long>> batches;
  std::vector<int> labels;
};

enum class BatchRule { AnyNonWhite, AnyFemale };

// One partition per shadow model: disjoint train/out halves of the pool.
struct ShadowSplit {
  struct Partition {
    std::vector<long> train;
    std::vector<long> out;
  };
  std::vector<Partition> partitions;
};

// Parses the UCI comma-space layout of both files, normalizes the trailing
// period on test-file labels and drops rows containing a "?" field (count
// recorded on the result). Categorical vocabularies are collected over both
// files and sorted, so any subset encodes to the same feature layout.
RawDataset load_adult(const std::string& train_path, const std::string& test_path);

// One-hot categorical attrs, z-score continuous attrs with stats from the
// rows being encoded; drop_attrs and the property-tagged attr contribute no
// feature columns. Label 1 iff income >50K.
LabeledDataset preprocess(const RawDataset& raw,
                          const std::vector<std::string>& drop_attrs = {});

// Returns a copy tagged so that `property_attr` is excluded from features and
// property label 1 marks rows whose value equals `positive_value`.
RawDataset make_property_dataset(const RawDataset& raw, const std::string& property_attr,
                                 const std::string& positive_value);

// native-country == "United-States" rows become the source domain, everything
// else the target; train/test follow the file boundaries. The country
// attribute is dropped from features on both sides and normalization stats
// are computed per domain.
DomainPair split_domains(const RawDataset& raw);

// Shuffles rows by seed, groups into batches of B; AnyNonWhite labels a batch
// 1 iff it contains a property-label-0 member of the race dataset, AnyFemale
// likewise for the sex dataset.
BatchedDataset make_batch_property_dataset(const LabeledDataset& ds, int batch_size,
                                           BatchRule rule, std::uint64_t seed);

// Re-applies the batch labeling rule to a member list; the stored labels of a
// BatchedDataset must reproduce exactly.
int recompute_batch_label(const LabeledDataset& ds, const std::vector<long>& rows);

// For each shadow index an independent seeded shuffle then a half/half split.
ShadowSplit shadow_split(const LabeledDataset& pool, int n_shadow, std::uint64_t seed);

// Two spherical Gaussian blobs separated by `class_separation` on the first
// coordinate; deterministic test fixture.
LabeledDataset synth_gaussian(long n, int d, double class_separation, std::uint64_t seed);

LabeledDataset subset(const LabeledDataset& ds, const std::vector<long>& rows);

// Caches a preprocessed dataset in the flat text format plus a feature-name
// manifest line per column.
void save_dataset(const std::string& path, const LabeledDataset& ds);
LabeledDataset load_dataset(const std::string& path);

}  // namespace leaklab
