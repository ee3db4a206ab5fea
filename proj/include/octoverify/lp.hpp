#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace octo {

struct LpResult {
  Eigen::VectorXd x;
  double value{0.0};
  bool optimal{false};
};

// Dense tableau simplex for  max c'x  s.t.  A x <= b,  x >= 0,  with b >= 0,
// started from the slack basis.  Bland's rule, so degenerate problems do not
// cycle.  The returned point is feasible even when the iteration limit or
// unboundedness stops the search early; `optimal` says whether it finished.
inline LpResult simplex_max(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                            int max_iter = 0) {
  const auto m = A.rows(), n = A.cols();
  if (b.size() != m || c.size() != n) throw std::invalid_argument("simplex_max: dimension mismatch");
  if ((b.array() < 0.0).any() || !b.allFinite()) throw std::invalid_argument("simplex_max: b must be finite and >= 0");
  if (!A.allFinite() || !c.allFinite()) throw std::invalid_argument("simplex_max: non-finite coefficients");
  if (max_iter <= 0) max_iter = static_cast<int>(50 * (m + n) + 50);

  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  T.topLeftCorner(m, n) = A;
  T.block(0, n, m, m).setIdentity();
  T.col(n + m).head(m) = b;
  T.row(m).head(n) = -c.transpose();
  std::vector<Eigen::Index> basis(m);
  for (Eigen::Index i = 0; i < m; ++i) basis[i] = n + i;

  const double scale = std::max({1.0, A.cwiseAbs().maxCoeff(), c.cwiseAbs().maxCoeff()});
  const double tol = 1e-12 * scale;
  LpResult r;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n + m; ++j)
      if (T(m, j) < -tol) {
        enter = j;
        break;
      }
    if (enter < 0) {
      r.optimal = true;
      break;
    }
    Eigen::Index leave = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!(T(i, enter) > tol)) continue;
      const double ratio = T(i, n + m) / T(i, enter);
      if (leave < 0 || ratio < best || (ratio == best && basis[i] < basis[leave])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave < 0) break;
    T.row(leave) /= T(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i)
      if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
    basis[leave] = enter;
  }
  r.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[i] < n) r.x[basis[i]] = std::max(0.0, T(i, n + m));
  r.value = c.dot(r.x);
  return r;
}

}  // namespace octo
