#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "stochdrive/errors.hpp"

namespace stochdrive {

struct BfgsOptions {
  int max_iterations = 200;
  // Stop when ||grad||_inf <= gradient_tol * max(1, |f|).
  double gradient_tol = 1e-8;
  // Central-difference step, relative to max(1, |x_i|).
  double fd_step = 1e-5;
  // Iterates farther than this from the origin count as divergence.
  double divergence_norm = 1e8;
  // Longest trial step, relative to max(1, ||x||).
  double max_step_ratio = 100.0;
};

template <int N>
struct BfgsResult {
  Eigen::Matrix<double, N, 1> x;
  double value = 0.0;
  double start_value = 0.0;
  double gradient_norm = 0.0;  // infinity norm at x
  int iterations = 0;
};

template <int N, typename F>
Eigen::Matrix<double, N, 1> central_difference(
    F& f, const Eigen::Matrix<double, N, 1>& x, double rel_step) {
  Eigen::Matrix<double, N, 1> g;
  Eigen::Matrix<double, N, 1> probe = x;
  for (int i = 0; i < N; ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x(i)));
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

// Quasi-Newton minimisation with inverse-Hessian BFGS updates, Armijo
// backtracking, and finite-difference gradients. Overflowing trial points
// only shorten the step; throws OptimizationError when an accepted iterate
// diverges (cost unbounded below).
template <int N, typename F>
BfgsResult<N> minimize_bfgs(F&& f, Eigen::Matrix<double, N, 1> x,
                            const BfgsOptions& opt = {}) {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;

  auto check = [&](double v, const Vec& at) {
    if (!std::isfinite(v) || !at.allFinite() ||
        at.norm() > opt.divergence_norm) {
      throw OptimizationError(fmt::format(
          "cost blow-up (value {}) at coefficients [{}]", v,
          fmt::join(at.data(), at.data() + N, ", ")));
    }
  };

  BfgsResult<N> res;
  double fx = f(x);
  check(fx, x);
  res.start_value = fx;
  Vec g = central_difference<N>(f, x, opt.fd_step);
  Mat H = Mat::Identity();
  bool scaled = false;

  int iter = 0;
  for (; iter < opt.max_iterations; ++iter) {
    if (g.template lpNorm<Eigen::Infinity>() <=
        opt.gradient_tol * std::max(1.0, std::abs(fx))) {
      break;
    }
    Vec p = -H * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      H.setIdentity();
      p = -g;
      slope = -g.squaredNorm();
    }
    // Trial steps are capped relative to |x| so a bounded cost never sends
    // a trial iterate past the divergence radius.
    double step = std::min(1.0, opt.max_step_ratio * std::max(1.0, x.norm()) /
                                    p.norm());
    Vec x_new;
    double f_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * p;
      f_new = f(x_new);
      if (!std::isfinite(f_new) && x_new.allFinite() &&
          x_new.norm() <= opt.divergence_norm) {
        step *= 0.1;  // overflowed trial point: shorten and retry
        continue;
      }
      check(f_new, x_new);
      if (f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      // Quadratic interpolation of the step, safeguarded.
      const double denom = 2.0 * (f_new - fx - slope * step);
      double next = denom > 0.0 ? -slope * step * step / denom : 0.5 * step;
      step = std::clamp(next, 0.1 * step, 0.5 * step);
    }
    if (!accepted) break;  // no further decrease resolvable

    const Vec g_new = central_difference<N>(f, x_new, opt.fd_step);
    const Vec s = x_new - x;
    const Vec y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        H = Mat::Identity() * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Mat I = Mat::Identity();
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    x = x_new;
    fx = f_new;
    g = g_new;
  }
  res.x = x;
  res.value = fx;
  res.gradient_norm = g.template lpNorm<Eigen::Infinity>();
  res.iterations = iter;
  return res;
}

}  // namespace stochdrive
