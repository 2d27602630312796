#include "leaklab/serialize.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "leaklab/errors.hpp"

namespace leaklab {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') {
    throw DataError("malformed float token: '" + token + "'");
  }
  return v;
}

namespace {

std::string next_token(std::istream& is, const char* context) {
  std::string tok;
  if (!(is >> tok)) {
    throw DataError(std::string("unexpected end of stream while reading ") + context);
  }
  return tok;
}

long next_long(std::istream& is, const char* context) {
  const std::string tok = next_token(is, context);
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0') {
    throw DataError("malformed integer token: '" + tok + "'");
  }
  return v;
}

double next_double(std::istream& is, const char* context) {
  return parse_double(next_token(is, context));
}

void expect_token(std::istream& is, const std::string& expected) {
  const std::string tok = next_token(is, expected.c_str());
  if (tok != expected) {
    throw DataError("expected token '" + expected + "', got '" + tok + "'");
  }
}

}  // namespace

void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
  os << "vec " << v.size() << "\n";
  for (long i = 0; i < v.size(); ++i) {
    os << format_double(v[i]) << (i + 1 == v.size() ? "" : " ");
  }
  os << "\n";
}

Eigen::VectorXd read_vector(std::istream& is) {
  expect_token(is, "vec");
  const long n = next_long(is, "vector length");
  if (n < 0) throw DataError("negative vector length");
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i) v[i] = next_double(is, "vector entry");
  return v;
}

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  os << "mat " << m.rows() << " " << m.cols() << "\n";
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      os << format_double(m(r, c)) << (c + 1 == m.cols() ? "" : " ");
    }
    os << "\n";
  }
}

Eigen::MatrixXd read_matrix(std::istream& is) {
  expect_token(is, "mat");
  const long rows = next_long(is, "matrix rows");
  const long cols = next_long(is, "matrix cols");
  if (rows < 0 || cols < 0) throw DataError("negative matrix dimension");
  Eigen::MatrixXd m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) m(r, c) = next_double(is, "matrix entry");
  }
  return m;
}

void save_mlp(std::ostream& os, const Mlp& mlp) {
  const MlpSpec& spec = mlp.spec();
  os << "mlp v1\n";
  os << "input_dim " << spec.input_dim << "\n";
  os << "hidden " << spec.hidden_dims.size();
  for (int d : spec.hidden_dims) os << " " << d;
  os << "\n";
  os << "activation relu\n";
  os << "output sigmoid_scalar\n";
  os << "dropout " << format_double(spec.dropout_rate) << "\n";
  for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
    os << "layer " << l << "\n";
    write_matrix(os, mlp.layers()[l].weight);
    write_vector(os, mlp.layers()[l].bias);
  }
}

Mlp load_mlp(std::istream& is) {
  expect_token(is, "mlp");
  expect_token(is, "v1");
  MlpSpec spec;
  expect_token(is, "input_dim");
  spec.input_dim = static_cast<int>(next_long(is, "input_dim"));
  expect_token(is, "hidden");
  const long n_hidden = next_long(is, "hidden count");
  for (long i = 0; i < n_hidden; ++i) {
    spec.hidden_dims.push_back(static_cast<int>(next_long(is, "hidden dim")));
  }
  expect_token(is, "activation");
  expect_token(is, "relu");
  expect_token(is, "output");
  expect_token(is, "sigmoid_scalar");
  expect_token(is, "dropout");
  spec.dropout_rate = next_double(is, "dropout rate");

  std::vector<LayerParams> layers;
  for (int l = 0; l < spec.layer_count(); ++l) {
    expect_token(is, "layer");
    const long idx = next_long(is, "layer index");
    if (idx != l) throw DataError("layer index out of order");
    LayerParams p;
    p.weight = read_matrix(is);
    p.bias = read_vector(is);
    layers.push_back(std::move(p));
  }
  return Mlp(spec, std::move(layers));
}

void save_mlp_file(const std::string& path, const Mlp& mlp) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path);
  save_mlp(os, mlp);
  if (!os) throw DataError("write failed: " + path);
}

Mlp load_mlp_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open for reading: " + path);
  return load_mlp(is);
}

}  // namespace leaklab
