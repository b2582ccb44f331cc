#ifndef DMINER_LOGISTIC_HPP_
#define DMINER_LOGISTIC_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace dminer {

// Sparse 0/1 design matrix stored column-wise: columns[j] lists the rows
// where feature j is 1, in increasing order.
struct BinaryDesign {
  std::size_t n_rows = 0;
  std::vector<std::vector<std::uint32_t>> columns;
  // Per-column multiplier on the L1 penalty; empty means 1 for every column.
  std::vector<double> penalty_factor;
};

struct SolveOptions {
  int max_outer = 100;
  int max_inner = 2000;
  double tol = 1e-6;
};

// Weighted logistic regression with an L1 penalty on the coefficients
// (intercept unpenalized):
//
//   minimize  (1/W) sum_i w_i logloss(y_i, b0 + x_i . beta)
//             + lambda sum_j f_j |beta_j|
//
// solved by iteratively reweighted least squares with cyclic coordinate
// descent on each quadratic approximation, restricted to the active set
// between full sweeps. Successive calls to solve() warm-start from the
// previous solution, so a decreasing lambda path is cheap.
class L1Logistic {
 public:
  L1Logistic(const BinaryDesign& x, std::span<const double> y,
             std::span<const double> w);

  // Smallest lambda for which all coefficients are zero.
  double lambda_max() const;

  // Returns false if the iteration limit was hit before convergence; the
  // current iterate is kept either way.
  bool solve(double lambda, const SolveOptions& options = {});

  double intercept() const { return intercept_; }
  const std::vector<double>& beta() const { return beta_; }
  const std::vector<double>& linear_predictor() const { return eta_; }

  // Weighted mean log-loss of the current fit under `eval_weights`.
  double log_loss(std::span<const double> eval_weights) const;

 private:
  void refresh_eta();

  const BinaryDesign& x_;
  // Per column, the shorter of its row list and the complement of it.
  std::vector<std::vector<std::uint32_t>> stored_;
  std::vector<char> complement_;
  std::vector<double> factor_;
  std::span<const double> y_;
  std::span<const double> w_;
  double total_weight_ = 0;
  double intercept_ = 0;
  std::vector<double> beta_;
  std::vector<double> eta_;
};

// Geometric grid of `count` values from lambda_max down to
// lambda_max * min_ratio.
std::vector<double> lambda_grid(double lambda_max, int count, double min_ratio);

}  // namespace dminer

#endif  // DMINER_LOGISTIC_HPP_
