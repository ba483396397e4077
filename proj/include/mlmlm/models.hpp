#pragma once

// Distance-regression multi-label classifiers.
//
// All four predictors share one trained mapping from input-space distances
// (to the reference points R) onto output-space distances (to every training
// label vector). They differ only in how the predicted distances δ̂ are
// turned into a label vector:
//
//   ML-MLM   inverse-distance-weighted average of training label vectors,
//            thresholded globally;
//   NN-MLM   label vector of the nearest predicted target;
//   LLS-MLM  linearized multilateration solved in least squares;
//   BR-MLM   one scalar multilateration per label, solved via its cubic
//            stationarity condition.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlmlm/linalg.hpp"
#include "mlmlm/matrix.hpp"

namespace mlmlm {

using LabelVector = std::vector<std::uint8_t>;

enum class Uncertainty { low, medium, high };

std::string_view to_string(Uncertainty u);

/// low: d < 1, medium: 1 <= d <= sqrt(2), high: d > sqrt(2).
Uncertainty categorize_uncertainty(double min_distance);

struct Prediction {
  Vector scores;
  LabelVector labels;
  double min_distance = 0.0;  // smallest predicted distance after clamping at 0
  Uncertainty uncertainty = Uncertainty::low;
  bool rank_deficient = false;  // LLS-MLM only: minimum-norm path was taken
};

struct DistanceModel {
  Matrix references;    // K x M, unique training inputs
  Matrix coefficients;  // K x N
  double alpha = 0.0;
  Matrix train_labels;  // N x L, entries in {0, 1}
  std::vector<std::string> label_names;

  std::size_t num_references() const { return references.rows(); }
  std::size_t num_features() const { return references.cols(); }
  std::size_t num_targets() const { return train_labels.rows(); }
  std::size_t num_labels() const { return train_labels.cols(); }

  /// Throws DataError when the shape or label invariants do not hold.
  void validate() const;
};

/// Power and global threshold selected for ML-MLM.
struct LrlPoint {
  double exponent;  // s in P = 2^s
  double power;
  double lrl;
};

struct TunedMlMlm {
  DistanceModel model;
  double power = 1.0;
  double threshold = 0.5;
  std::vector<LrlPoint> lrl_curve;
};

/// BR-MLM: the shared mapping plus the projector U⁻¹Dxᵀ (K x N).
///
/// Every per-label model has coefficients projector · D_y^(l), where
/// D_y^(l)(i, k) = |y_il − y_kl|, so the projector alone determines all of
/// them. Predicted distances for label l take only two values per query:
/// one towards targets with y_kl = 0 and one towards targets with y_kl = 1.
struct LabelwiseModel {
  DistanceModel model;
  Matrix projector;
};

struct AlphaMode {
  bool automatic = true;
  double value = 0.0;

  static AlphaMode auto_quantile() { return {}; }
  static AlphaMode fixed(double v) { return {false, v}; }
};

/// Intermediate quantities of training kept for leave-one-out tuning.
struct TrainingSystem {
  DistanceModel model;
  Matrix dx;  // N x K input distances
  Matrix dy;  // N x N label-space distances
  RegularizedGram gram;
};

/// Rows of `x` with exact duplicates removed, first occurrence kept.
Matrix unique_rows(const Matrix& x);

/// Regularizer heuristic: the lower 1/1000 empirical quantile
/// (sorted[floor(count / 1000)]) of the strictly positive distances between
/// distinct pairs of reference points.
double auto_alpha(const Matrix& references);

TrainingSystem fit_distance_regression(const Matrix& x, const Matrix& y, AlphaMode alpha,
                                       std::vector<std::string> label_names = {});

DistanceModel train(const Matrix& x, const Matrix& y, AlphaMode alpha,
                    std::vector<std::string> label_names = {});

LabelwiseModel train_labelwise(const Matrix& x, const Matrix& y, AlphaMode alpha,
                               std::vector<std::string> label_names = {});

/// Raw (unclamped) distance estimates to every training target.
Vector predict_deltas(const DistanceModel& model, std::span<const double> x);

/// Inverse-distance-weighted label scores. Negative deltas are clamped to
/// 0; a zero delta has weight 1, a positive one δ^-P. Weights are evaluated
/// relative to the largest one so that large P cannot overflow.
Vector idw_scores(std::span<const double> deltas, const Matrix& train_labels, double power);

/// Index of the smallest predicted distance; ties go to the smallest index.
std::size_t nearest_target(std::span<const double> deltas);

Prediction ml_mlm_predict(const TunedMlMlm& model, std::span<const double> x);
Prediction ml_mlm_predict(const DistanceModel& model, double power, double threshold, std::span<const double> x);

/// ML-MLM scores with local RCut labels (K_cut from the NN-MLM prediction).
Prediction ml_mlm_predict_local_rcut(const TunedMlMlm& model, std::span<const double> x);
Prediction ml_mlm_predict_local_rcut(const DistanceModel& model, double power, std::span<const double> x);

Prediction nn_mlm_predict(const DistanceModel& model, std::span<const double> x);

Prediction lls_mlm_predict(const DistanceModel& model, std::span<const double> x);

Prediction br_mlm_predict(const LabelwiseModel& model, std::span<const double> x);

/// J(y) = Σ_k (‖y − t_k‖² − δ_k²)².
double multilateration_objective(std::span<const double> y, const Matrix& targets,
                                 std::span<const double> deltas);

/// Exhaustive minimizer of J over {0,1}^L, ties to the lexicographically
/// smallest vector. Rejects L > 20.
LabelVector brute_force_mlc(const Matrix& targets, std::span<const double> deltas, std::size_t num_labels);

/// Linearized multilateration with the nearest target as anchor.
struct LlsSolution {
  Vector scores;
  std::size_t anchor = 0;
  bool rank_deficient = false;
};

LlsSolution lls_solve(std::span<const double> deltas, const Matrix& targets);

/// Global minimizer over the reals of Σ_k w_k ((y − t_k)² − δ_k²)².
/// Between equal minima the one farther from 0.5 wins.
struct ScalarFit {
  double score;
  double objective;
};

ScalarFit minimize_scalar_objective(std::span<const double> targets, std::span<const double> deltas,
                                    std::span<const double> weights = {});

/// Real roots of a y³ + b y² + c y + d (a != 0), ascending.
std::vector<double> real_cubic_roots(double a, double b, double c, double d);

}  // namespace mlmlm
