#include <cmath>
#include <vector>

#include "doctest.h"
#include "dminer/common.hpp"
#include "dminer/logistic.hpp"

using namespace dminer;

namespace {

struct Problem {
  BinaryDesign x;
  std::vector<std::vector<double>> dense;  // row-major 0/1
  std::vector<double> y, w;
};

// Columns with densities from sparse to mostly-ones, so both storage forms
// of the solver are exercised.
Problem random_problem(std::uint64_t seed, std::size_t n, std::size_t p) {
  Rng rng(seed);
  Problem pr;
  pr.x.n_rows = n;
  pr.x.columns.resize(p);
  pr.dense.assign(n, std::vector<double>(p, 0.0));
  std::vector<double> density(p);
  for (std::size_t j = 0; j < p; ++j) density[j] = 0.1 + 0.8 * static_cast<double>(j) / (p - 1);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = -0.3;
    for (std::size_t j = 0; j < p; ++j) {
      if (rng.bernoulli(density[j])) {
        pr.x.columns[j].push_back(static_cast<std::uint32_t>(i));
        pr.dense[i][j] = 1.0;
        eta += (j % 2 ? 1.2 : -0.8);
      }
    }
    pr.y.push_back(rng.bernoulli(1.0 / (1.0 + std::exp(-eta))) ? 1.0 : 0.0);
    pr.w.push_back(0.5 + rng.uniform());
  }
  return pr;
}

double objective(const Problem& pr, double b0, const std::vector<double>& beta, double lambda,
                 const std::vector<double>& factor) {
  double loss = 0, total = 0;
  for (std::size_t i = 0; i < pr.y.size(); ++i) {
    double eta = b0;
    for (std::size_t j = 0; j < beta.size(); ++j) eta += pr.dense[i][j] * beta[j];
    loss += pr.w[i] * (std::log1p(std::exp(-std::abs(eta))) + std::max(eta, 0.0) - pr.y[i] * eta);
    total += pr.w[i];
  }
  double pen = 0;
  for (std::size_t j = 0; j < beta.size(); ++j) pen += factor[j] * std::abs(beta[j]);
  return loss / total + lambda * pen;
}

// Proximal gradient descent on the dense problem.
std::pair<double, std::vector<double>> reference_fit(const Problem& pr, double lambda,
                                                     const std::vector<double>& factor) {
  const std::size_t n = pr.y.size(), p = factor.size();
  double total = 0;
  for (double w : pr.w) total += w;
  const double step = 1.0 / (0.25 * static_cast<double>(p + 1));
  double b0 = 0;
  std::vector<double> beta(p, 0.0), g(p);
  for (int it = 0; it < 60000; ++it) {
    double g0 = 0;
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double eta = b0;
      for (std::size_t j = 0; j < p; ++j) eta += pr.dense[i][j] * beta[j];
      const double r = pr.w[i] * (1.0 / (1.0 + std::exp(-eta)) - pr.y[i]) / total;
      g0 += r;
      for (std::size_t j = 0; j < p; ++j) g[j] += r * pr.dense[i][j];
    }
    b0 -= step * g0;
    for (std::size_t j = 0; j < p; ++j) {
      const double z = beta[j] - step * g[j];
      const double t = step * lambda * factor[j];
      beta[j] = z > t ? z - t : (z < -t ? z + t : 0.0);
    }
  }
  return {b0, beta};
}

}  // namespace

TEST_CASE("logistic: matches a dense proximal-gradient reference") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Problem pr = random_problem(seed, 300, 6);
    std::vector<double> factor = {1, 1, 1.5, 1, 1.5, 1};
    pr.x.penalty_factor = factor;
    L1Logistic fit(pr.x, pr.y, pr.w);
    const double lmax = fit.lambda_max();
    for (double ratio : {0.5, 0.1, 0.02}) {
      const double lambda = lmax * ratio;
      SolveOptions tight;
      tight.tol = 1e-10;
      CHECK(fit.solve(lambda, tight));
      const auto [b0, beta] = reference_fit(pr, lambda, factor);
      const double ours = objective(pr, fit.intercept(), fit.beta(), lambda, factor);
      const double ref = objective(pr, b0, beta, lambda, factor);
      CAPTURE(seed);
      CAPTURE(ratio);
      CHECK(ours <= ref + 1e-7);
      for (std::size_t j = 0; j < beta.size(); ++j) {
        CHECK(fit.beta()[j] == doctest::Approx(beta[j]).epsilon(1e-3).scale(1.0));
      }
    }
  }
}

TEST_CASE("logistic: lambda_max zeroes every coefficient, factors scale it") {
  Problem pr = random_problem(7, 200, 5);
  L1Logistic plain(pr.x, pr.y, pr.w);
  const double lmax = plain.lambda_max();
  CHECK(plain.solve(lmax * 1.0001));
  for (double b : plain.beta()) CHECK(b == 0.0);
  CHECK(plain.solve(lmax * 0.9));
  int nonzero = 0;
  for (double b : plain.beta()) nonzero += b != 0.0;
  CHECK(nonzero >= 1);

  pr.x.penalty_factor.assign(5, 2.0);
  L1Logistic doubled(pr.x, pr.y, pr.w);
  CHECK(doubled.lambda_max() == doctest::Approx(lmax / 2.0));
}

TEST_CASE("logistic: perfect predictor dominates") {
  BinaryDesign x;
  x.n_rows = 100;
  x.columns.resize(3);
  std::vector<double> y(100), w(100, 1.0);
  Rng rng(11);
  for (std::uint32_t i = 0; i < 100; ++i) {
    y[i] = i % 3 == 0;
    if (y[i] == 1.0) x.columns[0].push_back(i);
    if (rng.bernoulli(0.5)) x.columns[1].push_back(i);
    if (rng.bernoulli(0.5)) x.columns[2].push_back(i);
  }
  L1Logistic fit(x, y, w);
  fit.solve(fit.lambda_max() * 0.05);
  CHECK(fit.beta()[0] > 1.0);
  CHECK(std::abs(fit.beta()[0]) > 5 * std::abs(fit.beta()[1]));
  CHECK(std::abs(fit.beta()[0]) > 5 * std::abs(fit.beta()[2]));
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK((fit.linear_predictor()[i] > 0) == (y[i] == 1.0));
  }
}

TEST_CASE("lambda grid is geometric") {
  const auto g = lambda_grid(2.0, 20, 0.01);
  REQUIRE(g.size() == 20);
  CHECK(g.front() == doctest::Approx(2.0));
  CHECK(g.back() == doctest::Approx(0.02));
  for (std::size_t k = 1; k < g.size(); ++k) {
    CHECK(g[k] / g[k - 1] == doctest::Approx(g[1] / g[0]));
  }
}
