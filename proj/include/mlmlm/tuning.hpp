#pragma once

// Closed-form leave-one-out tuning for ML-MLM, and the two thresholding
// rules used by the distance-regression predictors.

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "mlmlm/matrix.hpp"
#include "mlmlm/models.hpp"

namespace mlmlm {

/// Out-of-sample distance predictions, row i = instance i left out:
///   (D̂y(i,:) − H(i,i) Dy(i,:)) / (1 − H(i,i)),  D̂y = Dx B̂.
/// Throws NumericalError naming the instance when H(i,i) >= 1 − 1e-12.
Matrix loo_deltas(const Matrix& dx, const Matrix& dy, const RegularizedGram& gram, const Matrix& coefficients);
Matrix loo_deltas(const TrainingSystem& system);

/// IDW scores of every row of `loo` at power P (N x L).
Matrix loo_scores(const Matrix& loo, const Matrix& y, double power);

struct LrlValue {
  double value;
  std::size_t skipped;  // instances with no relevant or no irrelevant label
};

/// Leave-one-out ranking loss at power P. Score ties between a relevant and
/// an irrelevant label are not counted as misorderings. Throws DataError
/// when no instance has both relevant and irrelevant labels.
LrlValue lrl(const Matrix& loo, const Matrix& y, double power);

/// Exponents s = 0.0, 0.1, ..., 8.0 of the power grid P = 2^s.
std::vector<double> power_exponents();

struct PowerSearch {
  double power;
  double exponent;
  std::vector<LrlPoint> curve;
};

/// Grid point with the smallest LRL; ties go to the smaller P. When no
/// instance is usable the curve holds NaN and the smallest P is returned.
PowerSearch search_power(const Matrix& loo, const Matrix& y);

/// Global threshold t matching the label cardinality of `y`.
///
/// Observed score values plus {0, 1} split the real line into intervals on
/// which the thresholded cardinality is constant. The interval whose
/// cardinality is closest to Card(y) wins (ties go to the higher interval)
/// and the largest double inside it is returned.
double cardinality_threshold(const Matrix& scores, const Matrix& y);

/// Marks the k_cut highest scores as relevant (ties to the smaller index).
LabelVector local_rcut(std::span<const double> scores, std::size_t k_cut);

/// LOO deltas, power search (or the given fixed power) and cardinality
/// threshold in one pass over the trained system.
TunedMlMlm tune_ml_mlm(const TrainingSystem& system, std::optional<double> fixed_power = std::nullopt);

/// CSV with header "s,P,LRL".
void write_lrl_curve_csv(std::ostream& out, const std::vector<LrlPoint>& curve);

}  // namespace mlmlm
