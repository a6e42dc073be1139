#pragma once

// Dense strictly convex quadratic programming by the dual active-set method
// of Goldfarb and Idnani.
//
//   minimize   1/2 x'Hx + c'x
//   subject to n_i'x >= b_i,  i = 1..m
//
// H must be symmetric positive definite. The method starts from the
// unconstrained minimizer and adds violated constraints one at a time while
// keeping the iterate dual feasible, so every intermediate active set is
// linearly independent and the objective increases monotonically.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace ttca {

enum class QpStatus { Optimal, Infeasible, Stalled };

template <int Dim = Eigen::Dynamic>
struct QpResult {
  using Vector = Eigen::Matrix<double, Dim, 1>;

  QpStatus status = QpStatus::Stalled;
  Vector x;
  double objective = 0.0;
  std::vector<std::size_t> active;   // constraint indices, in activation order
  Eigen::VectorXd multipliers;       // one per constraint, zero if inactive
  int iterations = 0;
};

struct QpOptions {
  double feasibility_tol = 1e-13;  // relative slack
  int max_iterations = 1000;
};

template <int Dim = Eigen::Dynamic>
class DenseQp {
 public:
  using Matrix = Eigen::Matrix<double, Dim, Dim>;
  using Vector = Eigen::Matrix<double, Dim, 1>;
  using Normals = Eigen::Matrix<double, Dim, Eigen::Dynamic>;

  // Columns of `normals` are the constraint normals n_i.
  DenseQp(const Matrix& H, const Vector& c, const Normals& normals,
          const Eigen::VectorXd& bounds, QpOptions opts = {})
      : H_(H), c_(c), N_(normals), b_(bounds), opts_(opts) {}

  QpResult<Dim> solve() const {
    const Eigen::Index n = H_.rows();
    const Eigen::Index m = N_.cols();
    QpResult<Dim> out;
    out.multipliers = Eigen::VectorXd::Zero(m);

    const Eigen::LLT<Matrix> llt(H_);
    const Matrix Hinv = llt.solve(Matrix::Identity(n, n));

    Vector x = -(Hinv * c_);
    std::vector<std::size_t> active;
    std::vector<double> u;

    Eigen::VectorXd row_scale(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      row_scale(i) = N_.col(i).template lpNorm<Eigen::Infinity>();
    }

    for (int iter = 0; iter < opts_.max_iterations; ++iter) {
      out.iterations = iter + 1;

      // Most violated constraint, measured relative to the magnitudes that
      // enter the slack so the test is insensitive to row scaling.
      Eigen::Index p = -1;
      double worst = -opts_.feasibility_tol;
      const double x_scale = x.template lpNorm<Eigen::Infinity>();
      for (Eigen::Index i = 0; i < m; ++i) {
        if (is_active(active, static_cast<std::size_t>(i))) continue;
        const double s = (N_.col(i).dot(x) - b_(i)) /
                         (1.0 + std::abs(b_(i)) + row_scale(i) * x_scale);
        if (s < worst) {
          worst = s;
          p = i;
        }
      }
      if (p < 0) {
        out.status = QpStatus::Optimal;
        polish(Hinv, active, x, u);
        finish(out, x, active, u);
        return out;
      }

      const Vector np = N_.col(p);
      const double hn_norm = (Hinv * np).norm();
      double u_p = 0.0;
      for (;;) {
        Vector z;
        Eigen::VectorXd r;
        step_directions(Hinv, active, np, z, r);

        // Largest dual step that keeps active multipliers nonnegative.
        double t_dual = kInf;
        std::size_t drop = 0;
        for (std::size_t j = 0; j < active.size(); ++j) {
          if (r(static_cast<Eigen::Index>(j)) > 0.0) {
            const double t = u[j] / r(static_cast<Eigen::Index>(j));
            if (t < t_dual) {
              t_dual = t;
              drop = j;
            }
          }
        }

        const double zn = z.dot(np);
        // A vanishing z means n_p is a combination of the active normals.
        // With n rows active there is no null space left; whatever z holds
        // then is rounding noise and must not be stepped along.
        const bool full = static_cast<Eigen::Index>(active.size()) >= n;
        const bool primal_move = !full && z.norm() > 1e-11 * hn_norm && zn > 0.0;
        const double t_full =
            primal_move ? -(np.dot(x) - b_(p)) / zn : kInf;
        const double t = std::min(t_dual, t_full);

        if (!std::isfinite(t)) {
          out.status = QpStatus::Infeasible;
          finish(out, x, active, u);
          return out;
        }

        if (primal_move) x += t * z;
        for (std::size_t j = 0; j < active.size(); ++j) {
          u[j] -= t * r(static_cast<Eigen::Index>(j));
        }
        u_p += t;

        if (t == t_full) {
          active.push_back(static_cast<std::size_t>(p));
          u.push_back(u_p);
          break;
        }
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
        u.erase(u.begin() + static_cast<std::ptrdiff_t>(drop));
      }
    }

    out.status = QpStatus::Stalled;
    finish(out, x, active, u);
    return out;
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  static bool is_active(const std::vector<std::size_t>& active, std::size_t i) {
    return std::find(active.begin(), active.end(), i) != active.end();
  }

  // z: primal direction in the null space of the active normals.
  // r: how active multipliers change per unit of the new multiplier.
  void step_directions(const Matrix& Hinv,
                       const std::vector<std::size_t>& active,
                       const Vector& np, Vector& z, Eigen::VectorXd& r) const {
    const Vector Hn = Hinv * np;
    if (active.empty()) {
      z = Hn;
      r.resize(0);
      return;
    }
    const Eigen::Index k = static_cast<Eigen::Index>(active.size());
    Normals A(H_.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) {
      A.col(j) = N_.col(static_cast<Eigen::Index>(active[j]));
    }
    const Normals HA = Hinv * A;
    const Eigen::MatrixXd S = A.transpose() * HA;
    r = S.fullPivLu().solve(A.transpose() * Hn);
    z = Hn - HA * r;
  }

  // The iterate accumulates rounding over many partial steps. Once the active
  // set is settled, solve its equality problem directly:
  //   u = (A'H^-1 A)^-1 (b_A + A'H^-1 c),  x = H^-1 (A u - c).
  // Kept only if the multipliers stay nonnegative and the slacks improve.
  void polish(const Matrix& Hinv, const std::vector<std::size_t>& active,
              Vector& x, std::vector<double>& u) const {
    if (active.empty()) return;
    const Eigen::Index k = static_cast<Eigen::Index>(active.size());
    Normals A(H_.rows(), k);
    Eigen::VectorXd bA(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      A.col(j) = N_.col(static_cast<Eigen::Index>(active[j]));
      bA(j) = b_(static_cast<Eigen::Index>(active[j]));
    }
    const Normals HA = Hinv * A;
    const Eigen::MatrixXd S = A.transpose() * HA;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
    if (lu.rank() < k) return;
    const Eigen::VectorXd uu = lu.solve(bA + HA.transpose() * c_);
    if (uu.minCoeff() < 0.0) return;
    const Vector xx = HA * uu - Hinv * c_;
    const auto drift = [&](const Vector& v) {
      return (A.transpose() * v - bA).template lpNorm<Eigen::Infinity>();
    };
    if (!(drift(xx) <= drift(x))) return;
    for (Eigen::Index i = 0; i < N_.cols(); ++i) {
      if (is_active(active, static_cast<std::size_t>(i))) continue;
      const double scale = 1.0 + std::abs(b_(i)) +
                           N_.col(i).template lpNorm<Eigen::Infinity>() *
                               xx.template lpNorm<Eigen::Infinity>();
      if ((N_.col(i).dot(xx) - b_(i)) / scale < -opts_.feasibility_tol) return;
    }
    x = xx;
    for (Eigen::Index j = 0; j < k; ++j) u[static_cast<std::size_t>(j)] = uu(j);
  }

  void finish(QpResult<Dim>& out, const Vector& x,
              const std::vector<std::size_t>& active,
              const std::vector<double>& u) const {
    out.x = x;
    out.objective = 0.5 * x.dot(H_ * x) + c_.dot(x);
    out.active = active;
    for (std::size_t j = 0; j < active.size(); ++j) {
      out.multipliers(static_cast<Eigen::Index>(active[j])) = u[j];
    }
  }

  Matrix H_;
  Vector c_;
  Normals N_;
  Eigen::VectorXd b_;
  QpOptions opts_;
};

}  // namespace ttca
