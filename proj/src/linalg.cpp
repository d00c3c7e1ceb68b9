#include "rollhol/linalg.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "rollhol/manifold.hpp"

namespace rollhol {

Eigen::MatrixXd project_to_rotation(const Eigen::MatrixXd& P) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::MatrixXd R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0.0)
    throw NumericError("matrix is not close to a rotation (negative determinant)");
  return R;
}

bool rotation_log(const Eigen::MatrixXd& R, Eigen::MatrixXd& log_out, double pi_margin) {
  const int n = static_cast<int>(R.rows());
  Eigen::RealSchur<Eigen::MatrixXd> schur(R);
  const Eigen::MatrixXd& T = schur.matrixT();
  const Eigen::MatrixXd& Q = schur.matrixU();

  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  int i = 0;
  while (i < n) {
    bool block2 = (i + 1 < n) && std::abs(T(i + 1, i)) > 1e-10;
    if (block2) {
      double theta = std::atan2(T(i + 1, i) - T(i, i + 1), T(i, i) + T(i + 1, i + 1));
      if (std::abs(theta) > M_PI - pi_margin) return false;
      L(i, i + 1) = -theta;
      L(i + 1, i) = theta;
      i += 2;
    } else {
      if (T(i, i) < 0.0) return false;  // an isolated -1 eigenvalue: angle pi
      i += 1;
    }
  }
  log_out = Q * L * Q.transpose();
  log_out = 0.5 * (log_out - log_out.transpose().eval());
  return true;
}

std::vector<Eigen::MatrixXd> skew_pair_basis(int n) {
  std::vector<Eigen::MatrixXd> basis;
  basis.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  const double s = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
      E(a, b) = s;
      E(b, a) = -s;
      basis.push_back(std::move(E));
    }
  return basis;
}

double frobenius_dot(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  return (A.array() * B.array()).sum();
}

SpanResult matrix_span(const std::vector<Eigen::MatrixXd>& samples, double rel_tol,
                       double abs_floor) {
  SpanResult out;
  if (samples.empty()) return out;
  const int r = static_cast<int>(samples.front().rows());
  const int c = static_cast<int>(samples.front().cols());
  Eigen::MatrixXd S(static_cast<int>(samples.size()), r * c);
  for (std::size_t k = 0; k < samples.size(); ++k)
    S.row(static_cast<int>(k)) =
        Eigen::Map<const Eigen::VectorXd>(samples[k].data(), r * c).transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double cutoff = std::max(rel_tol * (sv.size() ? sv(0) : 0.0), abs_floor);
  for (int k = 0; k < sv.size(); ++k) {
    out.singular_values.push_back(sv(k));
    if (sv(k) >= cutoff) {
      Eigen::MatrixXd B = Eigen::Map<const Eigen::MatrixXd>(svd.matrixV().col(k).data(), r, c);
      out.basis.push_back(std::move(B));
      ++out.rank;
    }
  }
  return out;
}

double operator_norm(const Eigen::MatrixXd& A) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

}  // namespace rollhol
