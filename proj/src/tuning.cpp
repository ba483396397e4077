#include "mlmlm/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mlmlm/errors.hpp"
#include "mlmlm/format.hpp"
#include "mlmlm/linalg.hpp"
#include "mlmlm/metrics.hpp"
#include "mlmlm/parallel.hpp"

namespace mlmlm {

namespace {

constexpr double kLeverageLimit = 1.0 - 1e-12;
constexpr int kGridSteps = 80;  // s = 0.0 .. 8.0 in steps of 0.1

void check_loo_shape(const Matrix& loo, const Matrix& y) {
  if (loo.rows() != y.rows() || loo.cols() != y.rows()) {
    throw std::invalid_argument("LOO deltas must be N x N for N labelled instances");
  }
}

// Mean ranking loss over usable instances; value is NaN if there are none.
LrlValue lrl_unchecked(const Matrix& loo, const Matrix& y, double power) {
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < loo.rows(); ++i) {
    const Vector scores = idw_scores(loo.row(i), y, power);
    const auto loss = instance_ranking_loss(scores, y.row(i));
    if (!loss) continue;
    sum += *loss;
    ++used;
  }
  const double value = used == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(used);
  return {value, loo.rows() - used};
}

}  // namespace

Matrix loo_deltas(const Matrix& dx, const Matrix& dy, const RegularizedGram& gram, const Matrix& coefficients) {
  const std::size_t n = dx.rows();
  if (dy.rows() != n || coefficients.rows() != dx.cols() || coefficients.cols() != dy.cols()) {
    throw std::invalid_argument("loo_deltas: inconsistent system shapes");
  }
  const Vector h = leverages(gram, dx);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(h[i] < kLeverageLimit)) {
      throw NumericalError("leverage of instance " + std::to_string(i) + " is " + format_number(h[i]) +
                           "; leave-one-out prediction is undefined (use alpha > 0)");
    }
  }
  Matrix out = multiply(dx, coefficients);
  for (std::size_t i = 0; i < n; ++i) {
    const double scale = 1.0 / (1.0 - h[i]);
    for (std::size_t k = 0; k < out.cols(); ++k) out(i, k) = (out(i, k) - h[i] * dy(i, k)) * scale;
  }
  return out;
}

Matrix loo_deltas(const TrainingSystem& system) {
  return loo_deltas(system.dx, system.dy, system.gram, system.model.coefficients);
}

Matrix loo_scores(const Matrix& loo, const Matrix& y, double power) {
  check_loo_shape(loo, y);
  Matrix out(loo.rows(), y.cols());
  parallel_for(loo.rows(), [&](std::size_t i) {
    const Vector s = idw_scores(loo.row(i), y, power);
    std::copy(s.begin(), s.end(), out.row(i).begin());
  });
  return out;
}

LrlValue lrl(const Matrix& loo, const Matrix& y, double power) {
  check_loo_shape(loo, y);
  LrlValue v = lrl_unchecked(loo, y, power);
  if (std::isnan(v.value)) {
    throw DataError("LRL: no instance has both relevant and irrelevant labels");
  }
  return v;
}

std::vector<double> power_exponents() {
  std::vector<double> s(kGridSteps + 1);
  for (int k = 0; k <= kGridSteps; ++k) s[static_cast<std::size_t>(k)] = k / 10.0;
  return s;
}

PowerSearch search_power(const Matrix& loo, const Matrix& y) {
  check_loo_shape(loo, y);
  const std::vector<double> exps = power_exponents();
  std::vector<LrlPoint> curve(exps.size());
  parallel_for(exps.size(), [&](std::size_t k) {
    const double p = std::exp2(exps[k]);
    curve[k] = {exps[k], p, lrl_unchecked(loo, y, p).value};
  });
  std::size_t best = 0;
  for (std::size_t k = 1; k < curve.size(); ++k) {
    if (curve[k].lrl < curve[best].lrl) best = k;
  }
  return {curve[best].power, curve[best].exponent, std::move(curve)};
}

double cardinality_threshold(const Matrix& scores, const Matrix& y) {
  if (scores.rows() != y.rows() || scores.cols() != y.cols()) {
    throw std::invalid_argument("cardinality_threshold: score and label shapes differ");
  }
  const double target = card(y);
  std::vector<double> sorted(scores.values().begin(), scores.values().end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> cuts = sorted;
  cuts.push_back(0.0);
  cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // On [cuts[i], cuts[i+1]) the rule "score > t" keeps a constant count.
  const double n = static_cast<double>(std::max<std::size_t>(scores.rows(), 1));
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), cuts[i]);
    const double gap = std::abs(static_cast<double>(above) / n - target);
    if (gap <= best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return std::nextafter(cuts[best + 1], -std::numeric_limits<double>::infinity());
}

LabelVector local_rcut(std::span<const double> scores, std::size_t k_cut) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  LabelVector out(scores.size(), 0);
  const std::size_t k = std::min(k_cut, scores.size());
  for (std::size_t r = 0; r < k; ++r) out[order[r]] = 1;
  return out;
}

TunedMlMlm tune_ml_mlm(const TrainingSystem& system, std::optional<double> fixed_power) {
  const Matrix& y = system.model.train_labels;
  const Matrix loo = loo_deltas(system);
  TunedMlMlm tuned;
  tuned.model = system.model;
  if (fixed_power) {
    if (!(*fixed_power > 0.0)) throw UsageError("power must be positive");
    tuned.power = *fixed_power;
    tuned.lrl_curve = {{std::log2(*fixed_power), *fixed_power, lrl_unchecked(loo, y, *fixed_power).value}};
  } else {
    PowerSearch search = search_power(loo, y);
    tuned.power = search.power;
    tuned.lrl_curve = std::move(search.curve);
  }
  tuned.threshold = cardinality_threshold(loo_scores(loo, y, tuned.power), y);
  return tuned;
}

void write_lrl_curve_csv(std::ostream& out, const std::vector<LrlPoint>& curve) {
  out << "s,P,LRL\n";
  for (const auto& p : curve) {
    out << format_number(p.exponent) << ',' << format_number(p.power) << ',' << format_number(p.lrl) << '\n';
  }
}

}  // namespace mlmlm
