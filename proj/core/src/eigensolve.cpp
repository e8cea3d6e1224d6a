#include "bolab/eigensolve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include <lapacke.h>

#include "bolab/error.hpp"

namespace bolab {

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

EigenResult finish(const SparseMatrix& a, Eigen::VectorXd values, Eigen::MatrixXd vectors, int k,
                   bool store_vectors) {
  EigenResult out;
  const int take = std::min<int>(k, static_cast<int>(values.size()));
  for (int i = 0; i < take; ++i) {
    out.eigenvalues.push_back(values(i));
    out.residuals.push_back(residual_norm(a, vectors.col(i), values(i)));
  }
  if (store_vectors) out.vectors = vectors.leftCols(take);
  return out;
}

// Applies (A - sigma I)^{-1} column by column.
class ShiftInvert {
 public:
  ShiftInvert(const SparseMatrix& a, double sigma, InnerSolver kind) : kind_(kind) {
    ColMatrix shifted = a;
    for (int i = 0; i < shifted.outerSize(); ++i) shifted.coeffRef(i, i) -= sigma;
    shifted.makeCompressed();
    if (kind_ == InnerSolver::SparseLDLT) {
      ldlt_.compute(shifted);
      if (ldlt_.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularShift, "LDL^T factorization of A - sigma I failed");
      }
      const auto& d = ldlt_.vectorD();
      const double dmax = d.cwiseAbs().maxCoeff();
      const double dmin = d.cwiseAbs().minCoeff();
      if (!(dmin > 1e-14 * dmax)) {
        throw Error(ErrorCode::SingularShift, "shift coincides with an eigenvalue to working precision");
      }
    } else {
      cg_.setTolerance(1e-14);
      cg_.setMaxIterations(static_cast<Eigen::Index>(std::max<std::size_t>(1000, 4 * a.rows())));
      cg_.compute(shifted);
      if (cg_.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularShift, "incomplete Cholesky of A - sigma I failed");
      }
    }
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd y(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (kind_ == InnerSolver::SparseLDLT) {
        y.col(c) = ldlt_.solve(x.col(c));
      } else {
        y.col(c) = cg_.solve(x.col(c));
        if (cg_.info() != Eigen::Success) {
          throw Error(ErrorCode::NoConvergence,
                      "inner conjugate gradient stalled (error " + std::to_string(cg_.error()) + ")");
        }
      }
    }
    return y;
  }

 private:
  InnerSolver kind_;
  Eigen::SimplicialLDLT<ColMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  Eigen::ConjugateGradient<ColMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg_;
};

}  // namespace

double residual_norm(const SparseMatrix& matrix, const Eigen::Ref<const Eigen::VectorXd>& v, double lambda) {
  const double nv = v.norm();
  if (nv == 0.0) return 0.0;
  return (matrix * v - lambda * v).norm() / nv;
}

EigenResult dense_lowest(const Eigen::MatrixXd& matrix, int k, bool store_vectors) {
  if (matrix.rows() != matrix.cols()) throw Error(ErrorCode::InvalidParameter, "matrix must be square");
  if (static_cast<std::size_t>(matrix.rows()) > kDenseLimit) {
    throw Error(ErrorCode::SizeError, "dense solve limited to " + std::to_string(kDenseLimit) + " rows");
  }
  if (k < 1) throw Error(ErrorCode::InvalidParameter, "k must be positive");
  // LAPACK dsyevr restricted to the k lowest pairs; it overwrites its input.
  const lapack_int n = static_cast<lapack_int>(matrix.rows());
  const lapack_int take = std::min<lapack_int>(k, n);
  Eigen::MatrixXd work = matrix;
  Eigen::VectorXd values(n);
  Eigen::MatrixXd vectors(n, take);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(take));
  lapack_int found = 0;
  const lapack_int status =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, work.data(), n, 0.0, 0.0, 1, take,
                     LAPACKE_dlamch('S'), &found, values.data(), vectors.data(), n, support.data());
  if (status != 0 || found != take) throw Error(ErrorCode::NoConvergence, "dense eigensolver failed");
  const SparseMatrix sparse = matrix.sparseView();
  EigenResult out = finish(sparse, values.head(take), vectors, k, store_vectors);
  out.info.method = "dense";
  return out;
}

EigenResult dense_lowest(const DiscreteOperator& op, int k, bool store_vectors) {
  if (op.dimension() > kDenseLimit) {
    throw Error(ErrorCode::SizeError, "dense solve limited to " + std::to_string(kDenseLimit) + " rows");
  }
  EigenResult out = dense_lowest(Eigen::MatrixXd(op.matrix()), k, store_vectors);
  out.info.grid = op.grid().describe();
  return out;
}

EigenResult iterative_lowest(const SparseMatrix& a, int k, const IterativeOptions& options) {
  const Eigen::Index n = a.rows();
  if (k < 1 || k > n) throw Error(ErrorCode::InvalidParameter, "k must lie in [1, dimension]");
  const Eigen::Index p = std::min<Eigen::Index>(n, k + std::max(options.guard, 0));
  const double sigma = options.shift;

  ShiftInvert inverse(a, sigma, options.inner);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index c = 0; c < p; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) x(r, c) = normal(rng);
  }

  Eigen::VectorXd theta;
  Eigen::MatrixXd ax;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  double best = std::numeric_limits<double>::infinity();
  int it = 0;
  for (it = 1; it <= options.max_iterations; ++it) {
    Eigen::MatrixXd y = inverse.apply(x);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    Eigen::MatrixXd aq = a * q;
    Eigen::MatrixXd h = q.transpose() * aq;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    theta = es.eigenvalues();
    x = q * es.eigenvectors();
    ax = aq * es.eigenvectors();

    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index l, Eigen::Index r) {
      return std::abs(theta(l) - sigma) < std::abs(theta(r) - sigma);
    });
    double worst = 0.0;
    for (int i = 0; i < k; ++i) {
      const Eigen::Index c = order[static_cast<std::size_t>(i)];
      worst = std::max(worst, (ax.col(c) - theta(c) * x.col(c)).norm());
    }
    best = std::min(best, worst);
    if (worst <= options.tolerance) break;
  }
  if (it > options.max_iterations) {
    throw Error(ErrorCode::NoConvergence, "subspace iteration stopped after " +
                                              std::to_string(options.max_iterations) +
                                              " iterations, best residual " + std::to_string(best));
  }

  // Keep the k pairs nearest the shift, reported in ascending order.
  std::vector<Eigen::Index> keep(order.begin(), order.begin() + k);
  std::sort(keep.begin(), keep.end(), [&](Eigen::Index l, Eigen::Index r) { return theta(l) < theta(r); });
  EigenResult out;
  if (options.store_vectors) out.vectors.resize(n, k);
  for (int i = 0; i < k; ++i) {
    const Eigen::Index c = keep[static_cast<std::size_t>(i)];
    out.eigenvalues.push_back(theta(c));
    out.residuals.push_back(residual_norm(a, x.col(c), theta(c)));
    if (options.store_vectors) out.vectors.col(i) = x.col(c);
  }
  out.info.method = options.inner == InnerSolver::SparseLDLT ? "shift-invert-subspace/ldlt" : "shift-invert-subspace/pcg";
  out.info.iterations = it;
  out.info.seed = options.seed;
  out.info.tolerance = options.tolerance;
  out.info.shift = sigma;
  return out;
}

EigenResult iterative_lowest(const DiscreteOperator& op, int k, const IterativeOptions& options) {
  EigenResult out = iterative_lowest(op.matrix(), k, options);
  out.info.grid = op.grid().describe();
  return out;
}

EigenResult iterative_nearest(const DiscreteOperator& op, int k, double shift, IterativeOptions options) {
  options.shift = shift;
  return iterative_lowest(op, k, options);
}

std::vector<Cluster> cluster_eigenvalues(const std::vector<double>& eigenvalues, double gap_tol) {
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (clusters.empty() || eigenvalues[i] - eigenvalues[i - 1] > gap_tol) {
      clusters.push_back(Cluster{i, 0, 0.0, 0.0});
    }
    auto& c = clusters.back();
    ++c.count;
    c.sum += eigenvalues[i];
    c.mean = c.sum / static_cast<double>(c.count);
  }
  return clusters;
}

std::vector<Cluster> cluster_eigenvalues(const EigenResult& result, double gap_tol) {
  return cluster_eigenvalues(result.eigenvalues, gap_tol);
}

}  // namespace bolab
