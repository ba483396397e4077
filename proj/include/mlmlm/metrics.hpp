#pragma once

// Multi-label evaluation metrics and label-set statistics.
//
// Bipartition metrics take binary prediction and truth matrices (N x L);
// ranking metrics take a real-valued score matrix instead of predictions.
// Ranking metrics skip instances for which they are undefined (no relevant
// label, or for ranking loss also no irrelevant label) and report how many
// were skipped; their value is NaN when every instance was skipped.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlmlm/matrix.hpp"

namespace mlmlm {

struct EvalReport {
  double hamming_loss = 0.0;
  double accuracy = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double ranking_loss = 0.0;
  double coverage = 0.0;
  double one_error = 0.0;
  double average_precision = 0.0;

  // diagnostics
  std::size_t instances = 0;
  std::size_t ranking_loss_skipped = 0;
  std::size_t coverage_skipped = 0;
  std::size_t one_error_skipped = 0;
  double coverage_literal = 0.0;  // worst relevant rank without the −1
};

/// The twelve metric names in report order; these are the JSON/CSV keys.
const std::vector<std::string>& metric_names();
double metric_value(const EvalReport& report, std::string_view name);
/// True when smaller values are better (hamming_loss, ranking_loss, coverage, one_error).
bool metric_lower_is_better(std::string_view name);

struct LabelStats {
  double card = 0.0;
  double dens = 0.0;
  std::size_t unique_count = 0;  // distinct label vectors in train ∪ test
  std::size_t novel_count = 0;   // distinct test label vectors absent from train
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct RankingMetric {
  double value = 0.0;
  std::size_t skipped = 0;
};

double card(const Matrix& y);
double dens(const Matrix& y);
LabelStats label_stats(const Matrix& train_labels, const Matrix& test_labels);

double hamming_loss(const Matrix& pred, const Matrix& truth);
/// Mean Jaccard index; an instance with both sets empty scores 1.
double accuracy(const Matrix& pred, const Matrix& truth);
PrecisionRecall micro_scores(const Matrix& pred, const Matrix& truth);
/// Per-label precision and recall averaged over all L labels (a label
/// with a zero denominator contributes 0); F1 is their harmonic mean.
PrecisionRecall macro_scores(const Matrix& pred, const Matrix& truth);

/// Fraction of (relevant, irrelevant) pairs with score(relevant) <
/// score(irrelevant); nullopt when either set is empty.
std::optional<double> instance_ranking_loss(std::span<const double> scores, std::span<const double> truth);

RankingMetric ranking_loss(const Matrix& scores, const Matrix& truth);
/// Worst rank of a relevant label minus one (ties share the worse rank).
RankingMetric coverage(const Matrix& scores, const Matrix& truth);
RankingMetric coverage_literal(const Matrix& scores, const Matrix& truth);
/// Top-scored label (ties to the smaller index) is irrelevant.
RankingMetric one_error(const Matrix& scores, const Matrix& truth);
RankingMetric average_precision(const Matrix& scores, const Matrix& truth);

EvalReport evaluate(const Matrix& pred, const Matrix& scores, const Matrix& truth);

std::string to_json(const EvalReport& report);
std::string csv_header();
std::string csv_row(const EvalReport& report);

}  // namespace mlmlm
