#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mlmlm/models.hpp"

namespace mlmlm {

namespace {

double eval_cubic(double a, double b, double c, double d, double y) {
  return ((a * y + b) * y + c) * y + d;
}

double polish(double a, double b, double c, double d, double y) {
  for (int it = 0; it < 3; ++it) {
    const double f = eval_cubic(a, b, c, d, y);
    const double df = (3.0 * a * y + 2.0 * b) * y + c;
    if (df == 0.0 || !std::isfinite(df)) break;
    const double next = y - f / df;
    if (!std::isfinite(next) || std::abs(eval_cubic(a, b, c, d, next)) >= std::abs(f)) break;
    y = next;
  }
  return y;
}

}  // namespace

std::vector<double> real_cubic_roots(double a, double b, double c, double d) {
  if (a == 0.0) throw std::invalid_argument("real_cubic_roots: leading coefficient is zero");
  const double p2 = b / a;
  const double p1 = c / a;
  const double p0 = d / a;
  // y = z - p2/3 gives z³ + p z + q = 0
  const double shift = p2 / 3.0;
  const double p = p1 - p2 * shift;
  const double q = 2.0 * shift * shift * shift - shift * p1 + p0;

  std::vector<double> roots;
  const double disc = 0.25 * q * q + p * p * p / 27.0;
  if (p == 0.0 && q == 0.0) {
    roots.push_back(-shift);
  } else if (disc > 0.0) {
    const double s = std::sqrt(disc);
    const double u = std::cbrt(-0.5 * q + s);
    const double v = std::cbrt(-0.5 * q - s);
    roots.push_back(u + v - shift);
  } else {
    // three real roots (some possibly repeated); p < 0 here
    const double r = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) {
      roots.push_back(r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) - shift);
    }
  }
  for (double& y : roots) y = polish(a, b, c, d, y);
  std::sort(roots.begin(), roots.end());
  return roots;
}

ScalarFit minimize_scalar_objective(std::span<const double> targets, std::span<const double> deltas,
                                    std::span<const double> weights) {
  if (targets.size() != deltas.size() || (!weights.empty() && weights.size() != targets.size())) {
    throw std::invalid_argument("minimize_scalar_objective: size mismatch");
  }
  if (targets.empty()) throw std::invalid_argument("minimize_scalar_objective: no targets");

  // dJ/dy = 4 Σ w (y − t)((y − t)² − δ²); expand in powers of y.
  double sw = 0.0, st = 0.0, c1 = 0.0, c0 = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const double w = weights.empty() ? 1.0 : weights[k];
    const double t = targets[k];
    const double d2 = deltas[k] * deltas[k];
    sw += w;
    st += w * t;
    c1 += w * (3.0 * t * t - d2);
    c0 += w * (d2 * t - t * t * t);
  }
  if (!(sw > 0.0)) throw std::invalid_argument("minimize_scalar_objective: weights must sum to > 0");

  auto objective = [&](double y) {
    double j = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const double w = weights.empty() ? 1.0 : weights[k];
      const double e = (y - targets[k]) * (y - targets[k]) - deltas[k] * deltas[k];
      j += w * e * e;
    }
    return j;
  };

  const auto roots = real_cubic_roots(sw, -3.0 * st, c1, c0);
  ScalarFit best{0.0, 0.0};
  bool found = false;
  for (double y : roots) {
    if (!std::isfinite(y)) continue;
    const double j = objective(y);
    // Equal minima happen when every target is the same (J is symmetric).
    // Take the root on the far side from 0.5 so a constant label keeps its side.
    const bool tie = found && std::abs(j - best.objective) <= 1e-12 * std::max(1.0, best.objective);
    if (!found || (tie ? std::abs(y - 0.5) > std::abs(best.score - 0.5) : j < best.objective)) {
      best = {y, j};
      found = true;
    }
  }
  if (!found) throw std::logic_error("cubic stationarity equation produced no finite real root");
  return best;
}

}  // namespace mlmlm
