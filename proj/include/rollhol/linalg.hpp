#ifndef ROLLHOL_LINALG_HPP
#define ROLLHOL_LINALG_HPP

#include <Eigen/Dense>
#include <vector>

namespace rollhol {

/// Nearest rotation in Frobenius norm (SVD polar factor). Throws
/// NumericError when the input is orientation-reversing.
Eigen::MatrixXd project_to_rotation(const Eigen::MatrixXd& P);

/// Principal logarithm of a rotation via the real Schur form. Returns false
/// (branch failure) when a rotation angle is within `pi_margin` of pi.
bool rotation_log(const Eigen::MatrixXd& R, Eigen::MatrixXd& log_out,
                  double pi_margin = 1e-6);

/// Orthonormal (Frobenius) basis of skew matrices: (e_a e_b^T - e_b e_a^T)/sqrt(2)
/// for a<b, row-major pair order.
std::vector<Eigen::MatrixXd> skew_pair_basis(int n);

/// Frobenius inner product.
double frobenius_dot(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Row-stacks vec(S_k), runs an SVD, and keeps singular directions above
/// max(rel_tol * sigma_max, abs_floor). Returns the retained orthonormal
/// basis (reshaped right singular vectors) and all singular values.
struct SpanResult {
  std::vector<Eigen::MatrixXd> basis;
  std::vector<double> singular_values;
  int rank = 0;
};
SpanResult matrix_span(const std::vector<Eigen::MatrixXd>& samples, double rel_tol,
                       double abs_floor);

/// Largest singular value.
double operator_norm(const Eigen::MatrixXd& A);

}  // namespace rollhol

#endif
