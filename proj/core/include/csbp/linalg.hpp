#pragma once

#include <Eigen/Dense>

namespace csbp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant of degree 3, 5, 7, 9 or 13 (Higham 2005 thresholds).
Matrix expm(const Matrix& A);

/// True iff the directed graph with an edge i -> j for every strictly
/// positive off-diagonal entry A(i,j) is strongly connected.
bool strongly_connected(const Matrix& A);

/// Max-row-sum norm.
double norm_inf(const Matrix& A);

}  // namespace csbp
