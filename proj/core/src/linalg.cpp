#include "csbp/linalg.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace csbp {

namespace {

// theta_m from Higham (2005), Table 2.3, for double precision.
constexpr std::array<double, 5> kTheta = {1.495585217958292e-2, 2.539398330063230e-1,
                                          9.504178996162932e-1, 2.097847961257068e0,
                                          5.371920351148152e0};

void pade(const Matrix& A, int degree, Matrix& U, Matrix& V) {
  const Eigen::Index n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix A2 = A * A;
  switch (degree) {
    case 3: {
      constexpr double b[] = {120., 60., 12., 1.};
      U = A * (b[3] * A2 + b[1] * I);
      V = b[2] * A2 + b[0] * I;
      return;
    }
    case 5: {
      constexpr double b[] = {30240., 15120., 3360., 420., 30., 1.};
      const Matrix A4 = A2 * A2;
      U = A * (b[5] * A4 + b[3] * A2 + b[1] * I);
      V = b[4] * A4 + b[2] * A2 + b[0] * I;
      return;
    }
    case 7: {
      constexpr double b[] = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
      const Matrix A4 = A2 * A2;
      const Matrix A6 = A4 * A2;
      U = A * (b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
      V = b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
      return;
    }
    case 9: {
      constexpr double b[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                              2162160.,     110880.,     3960.,       90.,        1.};
      const Matrix A4 = A2 * A2;
      const Matrix A6 = A4 * A2;
      const Matrix A8 = A6 * A2;
      U = A * (b[9] * A8 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
      V = b[8] * A8 + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
      return;
    }
    default: {
      constexpr double b[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                              1187353796428800.,  129060195264000.,   10559470521600.,
                              670442572800.,      33522128640.,       1323241920.,
                              40840800.,          960960.,            16380.,
                              182.,               1.};
      const Matrix A4 = A2 * A2;
      const Matrix A6 = A4 * A2;
      U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 +
               b[3] * A2 + b[1] * I);
      V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 +
          b[0] * I;
      return;
    }
  }
}

}  // namespace

double norm_inf(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  return A.cwiseAbs().rowwise().sum().maxCoeff();
}

Matrix expm(const Matrix& A) {
  const Eigen::Index n = A.rows();
  if (n == 0) return Matrix(0, 0);
  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();

  constexpr std::array<int, 4> kLowDegrees = {3, 5, 7, 9};
  Matrix U, V;
  for (std::size_t k = 0; k < kLowDegrees.size(); ++k) {
    if (norm1 <= kTheta[k]) {
      pade(A, kLowDegrees[k], U, V);
      return (V - U).partialPivLu().solve(V + U);
    }
  }

  int squarings = 0;
  if (norm1 > kTheta[4]) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / kTheta[4]))));
  }
  const Matrix scaled = A / std::ldexp(1.0, squarings);
  pade(scaled, 13, U, V);
  Matrix result = (V - U).partialPivLu().solve(V + U);
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

bool strongly_connected(const Matrix& A) {
  const Eigen::Index n = A.rows();
  if (n <= 1) return true;

  auto reaches_all = [&](bool transpose) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    Eigen::Index count = 1;
    while (!stack.empty()) {
      const Eigen::Index i = stack.back();
      stack.pop_back();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i || seen[static_cast<std::size_t>(j)]) continue;
        const double w = transpose ? A(j, i) : A(i, j);
        if (w > 0.0) {
          seen[static_cast<std::size_t>(j)] = 1;
          ++count;
          stack.push_back(j);
        }
      }
    }
    return count == n;
  };
  return reaches_all(false) && reaches_all(true);
}

}  // namespace csbp
