#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bolab/discretize.hpp"

namespace bolab {

struct SolverInfo {
  std::string method;
  int iterations = 0;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  double shift = 0.0;
  std::string grid;
};

/// Eigenpairs in ascending order. Residuals are ||A v - lambda v|| / ||v||.
/// Degenerate levels appear with multiplicity; use cluster_eigenvalues to
/// merge them.
struct EigenResult {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;
  Eigen::MatrixXd vectors;  ///< one column per eigenvalue; empty when not stored
  SolverInfo info;

  bool has_vectors() const noexcept { return vectors.cols() > 0; }
  std::size_t size() const noexcept { return eigenvalues.size(); }
};

inline constexpr std::size_t kDenseLimit = 4000;

/// Full symmetric diagonalization truncated to the k lowest pairs.
EigenResult dense_lowest(const DiscreteOperator& op, int k, bool store_vectors = true);
EigenResult dense_lowest(const Eigen::MatrixXd& matrix, int k, bool store_vectors = true);

enum class InnerSolver {
  SparseLDLT,  ///< sparse LDL^T factorization of A - sigma I; handles indefinite shifts
  PCG,         ///< conjugate gradient with incomplete Cholesky; needs sigma below the spectrum
};

struct IterativeOptions {
  double tolerance = 1e-9;
  std::uint64_t seed = 1;
  /// The solver returns the k eigenvalues nearest to this shift; any value
  /// below lambda_1 yields the k lowest.
  double shift = 0.0;
  int guard = 4;
  int max_iterations = 2000;
  InnerSolver inner = InnerSolver::SparseLDLT;
  bool store_vectors = true;
};

/// Shift-invert subspace iteration with Rayleigh-Ritz projection. The start
/// block is drawn from a generator seeded with `options.seed`, so equal
/// inputs give bit-identical output on one platform.
EigenResult iterative_lowest(const DiscreteOperator& op, int k, const IterativeOptions& options = {});
EigenResult iterative_lowest(const SparseMatrix& matrix, int k, const IterativeOptions& options = {});

/// Same solver targeting the k eigenvalues nearest `shift`.
EigenResult iterative_nearest(const DiscreteOperator& op, int k, double shift, IterativeOptions options = {});

struct Cluster {
  std::size_t first = 0;  ///< index of the first member in the eigenvalue list
  std::size_t count = 0;
  double mean = 0.0;
  double sum = 0.0;
};

/// Splits an ascending list wherever consecutive values differ by more than gap_tol.
std::vector<Cluster> cluster_eigenvalues(const std::vector<double>& eigenvalues, double gap_tol);
std::vector<Cluster> cluster_eigenvalues(const EigenResult& result, double gap_tol);

/// ||A v - lambda v|| / ||v||.
double residual_norm(const SparseMatrix& matrix, const Eigen::Ref<const Eigen::VectorXd>& v, double lambda);

}  // namespace bolab
