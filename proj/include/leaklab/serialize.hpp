#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "leaklab/nn.hpp"

namespace leaklab {

// Flat structured text format: whitespace-separated tokens, decimal floats
// printed with 17 significant digits so doubles round-trip bit-exactly.

std::string format_double(double v);
double parse_double(const std::string& token);

void write_vector(std::ostream& os, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector(std::istream& is);

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(std::istream& is);

// Model format: a spec header followed by row-major parameter arrays.
void save_mlp(std::ostream& os, const Mlp& mlp);
Mlp load_mlp(std::istream& is);
void save_mlp_file(const std::string& path, const Mlp& mlp);
Mlp load_mlp_file(const std::string& path);

}  // namespace leaklab
