#include "dminer/logistic.hpp"

#include <algorithm>
#include <cmath>

namespace dminer {

namespace {

constexpr double kMinVariance = 1e-5;

double sigmoid(double t) {
  return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

L1Logistic::L1Logistic(const BinaryDesign& x, std::span<const double> y,
                       std::span<const double> w)
    : x_(x), y_(y), w_(w), beta_(x.columns.size(), 0.0), eta_(x.n_rows, 0.0) {
  double wy = 0;
  for (std::size_t i = 0; i < x_.n_rows; ++i) {
    total_weight_ += w_[i];
    wy += w_[i] * y_[i];
  }
  if (total_weight_ > 0) {
    const double p = std::clamp(wy / total_weight_, 1e-12, 1 - 1e-12);
    intercept_ = std::log(p / (1 - p));
  }
  factor_ = x_.penalty_factor;
  factor_.resize(x_.columns.size(), 1.0);
  stored_.resize(x_.columns.size());
  complement_.assign(x_.columns.size(), 0);
  for (std::size_t j = 0; j < x_.columns.size(); ++j) {
    const auto& col = x_.columns[j];
    if (2 * col.size() <= x_.n_rows) continue;
    complement_[j] = 1;
    auto& comp = stored_[j];
    comp.reserve(x_.n_rows - col.size());
    std::size_t k = 0;
    for (std::uint32_t i = 0; i < x_.n_rows; ++i) {
      if (k < col.size() && col[k] == i) {
        ++k;
      } else {
        comp.push_back(i);
      }
    }
  }
  refresh_eta();
}

void L1Logistic::refresh_eta() {
  double base = intercept_;
  for (std::size_t j = 0; j < beta_.size(); ++j) {
    if (complement_[j]) base += beta_[j];
  }
  std::fill(eta_.begin(), eta_.end(), base);
  for (std::size_t j = 0; j < beta_.size(); ++j) {
    if (beta_[j] == 0.0) continue;
    if (complement_[j]) {
      for (auto i : stored_[j]) eta_[i] -= beta_[j];
    } else {
      for (auto i : x_.columns[j]) eta_[i] += beta_[j];
    }
  }
}

double L1Logistic::lambda_max() const {
  // Gradient at beta = 0 with the intercept at its unpenalized optimum.
  double wy = 0;
  for (std::size_t i = 0; i < x_.n_rows; ++i) wy += w_[i] * y_[i];
  const double p = total_weight_ > 0 ? wy / total_weight_ : 0.5;
  double best = 0;
  for (std::size_t j = 0; j < x_.columns.size(); ++j) {
    if (factor_[j] <= 0) continue;
    double g = 0;
    for (auto i : x_.columns[j]) g += w_[i] * (y_[i] - p);
    best = std::max(best, std::abs(g) / factor_[j]);
  }
  return total_weight_ > 0 ? best / total_weight_ : 0.0;
}

bool L1Logistic::solve(double lambda, const SolveOptions& options) {
  const std::size_t n = x_.n_rows;
  const std::size_t m = beta_.size();
  if (total_weight_ <= 0) return true;
  const double penalty = lambda * total_weight_;
  // Working residual r_i = rt[i] + shift, so updates on mostly-one columns
  // and on the intercept touch only the complement rows.
  std::vector<double> v(n), rt(n), h(m);
  std::vector<char> active(m, 0);
  for (std::size_t j = 0; j < m; ++j) active[j] = beta_[j] != 0.0;

  for (int outer = 0; outer < options.max_outer; ++outer) {
    double v_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(eta_[i]);
      const double q = std::max(p * (1 - p), kMinVariance);
      v[i] = w_[i] * q;
      rt[i] = (y_[i] - p) / q;
      v_sum += v[i];
    }
    double shift = 0;
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0;
      if (complement_[j]) {
        for (auto i : stored_[j]) s += v[i];
        h[j] = v_sum - s;
      } else {
        for (auto i : x_.columns[j]) s += v[i];
        h[j] = s;
      }
    }
    auto total_vr = [&] {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += v[i] * rt[i];
      return s + shift * v_sum;
    };

    const double old_intercept = intercept_;
    const std::vector<double> old_beta = beta_;
    bool full_sweep = true;
    bool inner_converged = false;
    double vr = total_vr();  // sum_i v_i r_i
    for (int inner = 0; inner < options.max_inner; ++inner) {
      double max_change = 0;
      if (v_sum > 0) {
        const double d0 = vr / v_sum;
        if (d0 != 0.0) {
          intercept_ += d0;
          shift -= d0;
          vr = 0;
          max_change = std::max(max_change, v_sum * d0 * d0);
        }
      }
      bool activated = false;
      for (std::size_t j = 0; j < m; ++j) {
        if (!full_sweep && !active[j]) continue;
        if (h[j] <= 0) continue;
        double g;
        if (complement_[j]) {
          double s = 0;
          for (auto i : stored_[j]) s += v[i] * rt[i];
          g = vr - s - shift * (v_sum - h[j]);
        } else {
          double s = 0;
          for (auto i : x_.columns[j]) s += v[i] * rt[i];
          g = s + shift * h[j];
        }
        const double updated = soft_threshold(g + h[j] * beta_[j], penalty * factor_[j]) / h[j];
        const double d = updated - beta_[j];
        if (d == 0.0) continue;
        if (complement_[j]) {
          shift -= d;
          for (auto i : stored_[j]) rt[i] += d;
        } else {
          for (auto i : x_.columns[j]) rt[i] -= d;
        }
        vr -= d * h[j];
        beta_[j] = updated;
        max_change = std::max(max_change, h[j] * d * d);
        if (!active[j]) {
          active[j] = 1;
          activated = true;
        }
      }
      const bool small = max_change < options.tol * total_weight_;
      if (full_sweep) {
        if (small && !activated) {
          inner_converged = true;
          break;
        }
        full_sweep = false;
        vr = total_vr();  // drop accumulated rounding
      } else if (small) {
        full_sweep = true;
      }
    }

    refresh_eta();
    // Change measured on the scale of the quadratic approximation.
    const double d0 = intercept_ - old_intercept;
    double max_delta = v_sum * d0 * d0;
    for (std::size_t j = 0; j < m; ++j) {
      const double d = beta_[j] - old_beta[j];
      max_delta = std::max(max_delta, h[j] * d * d);
    }
    if (inner_converged && max_delta < options.tol * total_weight_) return true;
  }
  return false;
}

double L1Logistic::log_loss(std::span<const double> eval_weights) const {
  double total = 0, weight = 0;
  for (std::size_t i = 0; i < x_.n_rows; ++i) {
    const double wi = eval_weights[i];
    if (wi == 0.0) continue;
    const double t = eta_[i];
    // log(1 + exp(-t)) for y = 1, log(1 + exp(t)) for y = 0, computed stably.
    const double s = y_[i] > 0.5 ? -t : t;
    const double loss = s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
    total += wi * loss;
    weight += wi;
  }
  return weight > 0 ? total / weight : 0.0;
}

std::vector<double> lambda_grid(double lambda_max, int count, double min_ratio) {
  std::vector<double> grid;
  if (count <= 0) return grid;
  if (count == 1) return {lambda_max};
  const double step = std::log(min_ratio) / (count - 1);
  for (int k = 0; k < count; ++k) grid.push_back(lambda_max * std::exp(step * k));
  return grid;
}

}  // namespace dminer
