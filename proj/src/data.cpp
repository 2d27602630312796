#include "leaklab/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "leaklab/errors.hpp"
#include "leaklab/rng.hpp"
#include "leaklab/serialize.hpp"

namespace leaklab {

namespace {

constexpr int kAttrCount = 14;

struct AttrDef {
  const char* name;
  bool continuous;
};

// Canonical UCI Adult column order.
const AttrDef kAdultAttrs[kAttrCount] = {
    {"age", true},           {"workclass", false},      {"fnlwgt", true},
    {"education", false},    {"education-num", true},   {"marital-status", false},
    {"occupation", false},   {"relationship", false},   {"race", false},
    {"sex", false},          {"capital-gain", true},    {"capital-loss", true},
    {"hours-per-week", true}, {"native-country", false},
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

struct PendingRow {
  std::vector<std::string> fields;  // 14 attribute strings
  int label;
  int file_origin;
  long line_no;
};

void read_adult_file(const std::string& path, int file_origin,
                     std::vector<PendingRow>& out, long& dropped) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open dataset file: " + path);
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '|') continue;  // adult.test starts with a banner line
    std::vector<std::string> fields = split_fields(t);
    if (fields.size() != kAttrCount + 1) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(kAttrCount + 1) + " fields, got " +
                      std::to_string(fields.size()));
    }
    std::string label = fields.back();
    fields.pop_back();
    if (!label.empty() && label.back() == '.') label.pop_back();  // test-file form
    int y;
    if (label == ">50K") {
      y = 1;
    } else if (label == "<=50K") {
      y = 0;
    } else {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": unrecognized income label '" + label + "'");
    }
    bool missing = false;
    for (const auto& f : fields) {
      if (f == "?") {
        missing = true;
        break;
      }
    }
    if (missing) {
      ++dropped;
      continue;
    }
    out.push_back({std::move(fields), y, file_origin, line_no});
  }
}

}  // namespace

int Attribute::category_index(const std::string& value) const {
  const auto it = std::lower_bound(categories.begin(), categories.end(), value);
  if (it == categories.end() || *it != value) return -1;
  return static_cast<int>(it - categories.begin());
}

int RawDataset::attr_index(const std::string& name) const {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

RawDataset load_adult(const std::string& train_path, const std::string& test_path) {
  std::vector<PendingRow> pending;
  long dropped = 0;
  read_adult_file(train_path, 0, pending, dropped);
  read_adult_file(test_path, 1, pending, dropped);

  RawDataset ds;
  ds.dropped_missing = dropped;
  ds.schema.reserve(kAttrCount);
  for (const auto& def : kAdultAttrs) {
    ds.schema.push_back({def.name, def.continuous, {}});
  }

  // Vocabulary over both files, sorted for a stable feature layout.
  for (int a = 0; a < kAttrCount; ++a) {
    if (ds.schema[a].continuous) continue;
    std::set<std::string> values;
    for (const auto& row : pending) values.insert(row.fields[a]);
    ds.schema[a].categories.assign(values.begin(), values.end());
  }

  ds.rows.reserve(pending.size());
  long uid = 0;
  for (const auto& row : pending) {
    RawRow r;
    r.values.resize(kAttrCount);
    for (int a = 0; a < kAttrCount; ++a) {
      if (ds.schema[a].continuous) {
        try {
          r.values[a] = parse_double(row.fields[a]);
        } catch (const DataError&) {
          const std::string file = row.file_origin == 0 ? train_path : test_path;
          throw DataError(file + ":" + std::to_string(row.line_no) +
                          ": malformed numeric field '" + row.fields[a] + "'");
        }
      } else {
        r.values[a] = ds.schema[a].category_index(row.fields[a]);
      }
    }
    r.label = row.label;
    r.file_origin = row.file_origin;
    r.line_no = row.line_no;
    r.uid = uid++;
    ds.rows.push_back(std::move(r));
  }
  return ds;
}

RawDataset make_property_dataset(const RawDataset& raw, const std::string& property_attr,
                                 const std::string& positive_value) {
  const int idx = raw.attr_index(property_attr);
  if (idx < 0) throw ConfigError("unknown property attribute: " + property_attr);
  const Attribute& attr = raw.schema[idx];
  if (attr.continuous) {
    throw ConfigError("property attribute must be categorical: " + property_attr);
  }
  const int pos = attr.category_index(positive_value);
  if (pos < 0) {
    throw ConfigError("value '" + positive_value + "' never occurs for attribute " +
                      property_attr);
  }
  RawDataset out = raw;
  out.property = PropertyTag{idx, pos, property_attr, positive_value};
  return out;
}

LabeledDataset preprocess(const RawDataset& raw, const std::vector<std::string>& drop_attrs) {
  std::set<int> dropped;
  for (const auto& name : drop_attrs) {
    const int idx = raw.attr_index(name);
    if (idx < 0) throw ConfigError("unknown attribute in drop list: " + name);
    dropped.insert(idx);
  }
  if (raw.property) dropped.insert(raw.property->attr_index);
  if (raw.rows.empty()) throw DataError("preprocess: empty dataset");

  LabeledDataset ds;
  const long n = static_cast<long>(raw.rows.size());

  // Column layout in attribute order: one column per continuous attr, one per
  // category of each categorical attr.
  struct Column {
    int attr;
    int category;  // -1 for continuous
  };
  std::vector<Column> columns;
  for (int a = 0; a < static_cast<int>(raw.schema.size()); ++a) {
    if (dropped.count(a)) continue;
    if (raw.schema[a].continuous) {
      columns.push_back({a, -1});
      ds.feature_names.push_back(raw.schema[a].name);
    } else {
      for (int c = 0; c < static_cast<int>(raw.schema[a].categories.size()); ++c) {
        columns.push_back({a, c});
        ds.feature_names.push_back(raw.schema[a].name + "=" + raw.schema[a].categories[c]);
      }
    }
  }

  ds.features.resize(n, static_cast<long>(columns.size()));
  ds.labels.resize(n);
  ds.row_uids.reserve(n);
  for (long i = 0; i < n; ++i) {
    const RawRow& row = raw.rows[i];
    ds.labels[i] = row.label;
    ds.row_uids.push_back(row.uid);
    for (std::size_t j = 0; j < columns.size(); ++j) {
      const auto& col = columns[j];
      if (col.category < 0) {
        ds.features(i, static_cast<long>(j)) = row.values[col.attr];
      } else {
        ds.features(i, static_cast<long>(j)) =
            static_cast<int>(row.values[col.attr]) == col.category ? 1.0 : 0.0;
      }
    }
  }

  // Z-score continuous columns with stats from the rows being encoded.
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].category >= 0) continue;
    const long jj = static_cast<long>(j);
    const double mean = ds.features.col(jj).mean();
    const double var =
        (ds.features.col(jj).array() - mean).square().sum() / static_cast<double>(n);
    const double stddev = std::sqrt(var);
    if (stddev > 0.0) {
      ds.features.col(jj) = (ds.features.col(jj).array() - mean) / stddev;
    } else {
      ds.features.col(jj).setZero();
    }
    ds.norm_stats.push_back({ds.feature_names[j], mean, stddev});
  }

  if (raw.property) {
    Eigen::VectorXd prop(n);
    for (long i = 0; i < n; ++i) {
      prop[i] = static_cast<int>(raw.rows[i].values[raw.property->attr_index]) ==
                        raw.property->positive_category
                    ? 1.0
                    : 0.0;
    }
    ds.property_labels = std::move(prop);
    ds.property_attr = raw.property->attr_name;
    ds.property_positive = raw.property->positive_value;
  }
  return ds;
}

DomainPair split_domains(const RawDataset& raw) {
  const int country = raw.attr_index("native-country");
  if (country < 0) throw DataError("split_domains: native-country attribute missing");
  const int us = raw.schema[country].category_index("United-States");
  if (us < 0) throw DataError("split_domains: no United-States rows in data");

  RawDataset source = raw;
  RawDataset target = raw;
  source.rows.clear();
  target.rows.clear();
  for (const auto& row : raw.rows) {
    if (static_cast<int>(row.values[country]) == us) {
      source.rows.push_back(row);
    } else {
      target.rows.push_back(row);
    }
  }
  if (source.rows.empty() || target.rows.empty()) {
    throw DataError("split_domains: a domain is empty");
  }

  auto encode_domain = [](const RawDataset& domain) {
    // native-country is constant within a domain, so it carries no feature
    // information.
    LabeledDataset all = preprocess(domain, {"native-country"});
    std::vector<long> train_rows, test_rows;
    for (long i = 0; i < static_cast<long>(domain.rows.size()); ++i) {
      (domain.rows[i].file_origin == 0 ? train_rows : test_rows).push_back(i);
    }
    DatasetSplit split;
    split.train = subset(all, train_rows);
    split.test = subset(all, test_rows);
    return split;
  };

  DomainPair pair;
  pair.source = encode_domain(source);
  pair.target = encode_domain(target);
  return pair;
}

namespace {

void check_rule_compatible(const LabeledDataset& ds, BatchRule rule) {
  if (!ds.property_labels) {
    throw DataError("batch property dataset requires property labels");
  }
  if (ds.property_attr.empty()) return;  // synthetic fixtures carry no tag
  const bool race = ds.property_attr == "race" && ds.property_positive == "White";
  const bool sex = ds.property_attr == "sex" && ds.property_positive == "Male";
  if ((rule == BatchRule::AnyNonWhite && !race) ||
      (rule == BatchRule::AnyFemale && !sex)) {
    throw DataError("batch rule does not match property dataset (" +
                    ds.property_attr + "=" + ds.property_positive + ")");
  }
}

}  // namespace

int recompute_batch_label(const LabeledDataset& ds, const std::vector<long>& rows) {
  if (!ds.property_labels) {
    throw DataError("batch label requires property labels");
  }
  // AnyNonWhite on the race dataset and AnyFemale on the sex dataset both
  // fire on a property-label-0 member (property 1 = White / Male).
  for (long r : rows) {
    if (r < 0 || r >= ds.size()) throw ShapeError("batch row index out of range");
    if ((*ds.property_labels)[r] == 0.0) return 1;
  }
  return 0;
}

BatchedDataset make_batch_property_dataset(const LabeledDataset& ds, int batch_size,
                                           BatchRule rule, std::uint64_t seed) {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (batch_size > ds.size()) {
    throw DataError("batch size " + std::to_string(batch_size) +
                    " exceeds dataset size " + std::to_string(ds.size()));
  }
  check_rule_compatible(ds, rule);
  std::vector<long> order(ds.size());
  for (long i = 0; i < ds.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  BatchedDataset out;
  out.batch_size = batch_size;
  const long n_batches = ds.size() / batch_size;
  out.batches.reserve(n_batches);
  out.labels.reserve(n_batches);
  for (long b = 0; b < n_batches; ++b) {
    std::vector<long> rows(order.begin() + b * batch_size,
                           order.begin() + (b + 1) * batch_size);
    const int label = recompute_batch_label(ds, rows);
    out.batches.push_back(std::move(rows));
    out.labels.push_back(label);
  }
  return out;
}

ShadowSplit shadow_split(const LabeledDataset& pool, int n_shadow, std::uint64_t seed) {
  if (pool.size() < 2) throw DataError("shadow pool needs at least 2 rows");
  if (n_shadow < 1) throw ConfigError("n_shadow must be >= 1");
  ShadowSplit out;
  out.partitions.reserve(n_shadow);
  for (int s = 0; s < n_shadow; ++s) {
    std::vector<long> order(pool.size());
    for (long i = 0; i < pool.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, "shadow-split", static_cast<std::uint64_t>(s)));
    rng.shuffle(order);
    const long half = (pool.size() + 1) / 2;
    ShadowSplit::Partition part;
    part.train.assign(order.begin(), order.begin() + half);
    part.out.assign(order.begin() + half, order.end());
    out.partitions.push_back(std::move(part));
  }
  return out;
}

LabeledDataset synth_gaussian(long n, int d, double class_separation, std::uint64_t seed) {
  if (n < 1 || d < 1) throw ConfigError("synth_gaussian: n and d must be >= 1");
  Rng rng(seed);
  LabeledDataset ds;
  ds.features.resize(n, d);
  ds.labels.resize(n);
  ds.row_uids.reserve(n);
  for (long i = 0; i < n; ++i) {
    const int label = rng.uniform() < 0.5 ? 0 : 1;
    ds.labels[i] = label;
    for (int j = 0; j < d; ++j) ds.features(i, j) = rng.normal();
    ds.features(i, 0) += (label == 1 ? 0.5 : -0.5) * class_separation;
    ds.row_uids.push_back(i);
  }
  for (int j = 0; j < d; ++j) {
    ds.feature_names.push_back("x" + std::to_string(j));
  }
  return ds;
}

LabeledDataset subset(const LabeledDataset& ds, const std::vector<long>& rows) {
  LabeledDataset out;
  out.feature_names = ds.feature_names;
  out.norm_stats = ds.norm_stats;
  out.property_attr = ds.property_attr;
  out.property_positive = ds.property_positive;
  out.features.resize(static_cast<long>(rows.size()), ds.dim());
  out.labels.resize(static_cast<long>(rows.size()));
  out.row_uids.reserve(rows.size());
  const bool has_prop = ds.property_labels.has_value();
  Eigen::VectorXd prop;
  if (has_prop) prop.resize(static_cast<long>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const long r = rows[i];
    if (r < 0 || r >= ds.size()) throw ShapeError("subset: row index out of range");
    out.features.row(static_cast<long>(i)) = ds.features.row(r);
    out.labels[static_cast<long>(i)] = ds.labels[r];
    out.row_uids.push_back(ds.row_uids[r]);
    if (has_prop) prop[static_cast<long>(i)] = (*ds.property_labels)[r];
  }
  if (has_prop) out.property_labels = std::move(prop);
  return out;
}

void save_dataset(const std::string& path, const LabeledDataset& ds) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path);
  os << "dataset v1\n";
  os << "columns " << ds.feature_names.size() << "\n";
  for (const auto& name : ds.feature_names) os << name << "\n";
  os << "has_property " << (ds.property_labels ? 1 : 0) << "\n";
  if (ds.property_labels) {
    os << "property " << (ds.property_attr.empty() ? "-" : ds.property_attr) << " "
       << (ds.property_positive.empty() ? "-" : ds.property_positive) << "\n";
  }
  write_matrix(os, ds.features);
  write_vector(os, ds.labels);
  if (ds.property_labels) write_vector(os, *ds.property_labels);
  os << "uids " << ds.row_uids.size() << "\n";
  for (std::size_t i = 0; i < ds.row_uids.size(); ++i) {
    os << ds.row_uids[i] << (i + 1 == ds.row_uids.size() ? "" : " ");
  }
  os << "\n";
  os << "norm_stats " << ds.norm_stats.size() << "\n";
  for (const auto& s : ds.norm_stats) {
    os << s.column << " " << format_double(s.mean) << " " << format_double(s.stddev)
       << "\n";
  }
  if (!os) throw DataError("write failed: " + path);
}

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open for reading: " + path);
  std::string tok;
  auto expect = [&](const std::string& want) {
    if (!(is >> tok) || tok != want) {
      throw DataError(path + ": expected token '" + want + "'");
    }
  };
  expect("dataset");
  expect("v1");
  expect("columns");
  long n_cols = 0;
  is >> n_cols;
  LabeledDataset ds;
  for (long i = 0; i < n_cols; ++i) {
    if (!(is >> tok)) throw DataError(path + ": truncated column list");
    ds.feature_names.push_back(tok);
  }
  expect("has_property");
  int has_prop = 0;
  is >> has_prop;
  if (has_prop) {
    expect("property");
    std::string attr, positive;
    if (!(is >> attr >> positive)) throw DataError(path + ": truncated property tag");
    if (attr != "-") ds.property_attr = attr;
    if (positive != "-") ds.property_positive = positive;
  }
  ds.features = read_matrix(is);
  ds.labels = read_vector(is);
  if (has_prop) ds.property_labels = read_vector(is);
  expect("uids");
  long n_uids = 0;
  is >> n_uids;
  ds.row_uids.resize(n_uids);
  for (long i = 0; i < n_uids; ++i) is >> ds.row_uids[i];
  expect("norm_stats");
  long n_stats = 0;
  is >> n_stats;
  for (long i = 0; i < n_stats; ++i) {
    NormStat s;
    std::string mean_tok, std_tok;
    if (!(is >> s.column >> mean_tok >> std_tok)) {
      throw DataError(path + ": truncated norm stats");
    }
    s.mean = parse_double(mean_tok);
    s.stddev = parse_double(std_tok);
    ds.norm_stats.push_back(std::move(s));
  }
  if (ds.features.cols() != static_cast<long>(ds.feature_names.size()) ||
      ds.features.rows() != ds.labels.size()) {
    throw DataError(path + ": inconsistent dataset dimensions");
  }
  return ds;
}

}  // namespace leaklab
