#include "mlmlm/models.hpp"

#include <Eigen/Dense>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mlmlm/errors.hpp"
#include "mlmlm/kernels.hpp"
#include "mlmlm/tuning.hpp"

namespace mlmlm {

namespace {

void require_binary(const Matrix& y, const char* what) {
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double v = y.data()[k];
    if (v != 0.0 && v != 1.0) {
      throw DataError(std::string(what) + ": label entry " + std::to_string(v) + " at row " +
                      std::to_string(k / std::max<std::size_t>(1, y.cols())) + " is not 0/1");
    }
  }
}

double clamp_delta(double d) { return d > 0.0 ? d : 0.0; }

double min_clamped(std::span<const double> deltas) {
  double m = deltas.empty() ? 0.0 : clamp_delta(deltas[0]);
  for (double d : deltas) m = std::min(m, clamp_delta(d));
  return m;
}

void check_query(const DistanceModel& model, std::span<const double> x) {
  if (x.size() != model.num_features()) {
    throw std::invalid_argument("query has " + std::to_string(x.size()) + " features, model expects " +
                                std::to_string(model.num_features()));
  }
}

LabelVector row_as_labels(const Matrix& y, std::size_t i) {
  LabelVector out(y.cols());
  for (std::size_t c = 0; c < y.cols(); ++c) out[c] = y(i, c) != 0.0 ? 1 : 0;
  return out;
}

std::size_t cardinality(const LabelVector& v) {
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), std::uint8_t{1}));
}

}  // namespace

std::string_view to_string(Uncertainty u) {
  switch (u) {
    case Uncertainty::low:
      return "low";
    case Uncertainty::medium:
      return "medium";
    case Uncertainty::high:
      return "high";
  }
  return "unknown";
}

Uncertainty categorize_uncertainty(double min_distance) {
  if (min_distance < 1.0) return Uncertainty::low;
  if (min_distance <= std::sqrt(2.0)) return Uncertainty::medium;
  return Uncertainty::high;
}

void DistanceModel::validate() const {
  if (coefficients.rows() != references.rows()) {
    throw DataError("model: coefficient rows (" + std::to_string(coefficients.rows()) +
                    ") differ from reference count (" + std::to_string(references.rows()) + ")");
  }
  if (coefficients.cols() != train_labels.rows()) {
    throw DataError("model: coefficient columns differ from the number of training targets");
  }
  if (!label_names.empty() && label_names.size() != train_labels.cols()) {
    throw DataError("model: label name count differs from label columns");
  }
  require_binary(train_labels, "model");
}

Matrix unique_rows(const Matrix& x) {
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  auto row_less = [&](std::size_t a, std::size_t b) {
    const auto ra = x.row(a);
    const auto rb = x.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::stable_sort(order.begin(), order.end(), row_less);
  std::vector<bool> keep(x.rows(), false);
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || row_less(order[k - 1], order[k])) keep[order[k]] = true;
  }
  std::vector<double> values;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (!keep[i]) continue;
    values.insert(values.end(), x.row(i).begin(), x.row(i).end());
    ++kept;
  }
  return Matrix(kept, x.cols(), std::move(values));
}

double auto_alpha(const Matrix& references) {
  if (references.rows() < 2) throw std::invalid_argument("auto_alpha needs at least two reference points");
  const std::size_t k = references.rows();
  std::vector<double> distances;
  distances.reserve(k * (k - 1) / 2);
  const auto& kern = kernels::active();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double d = std::sqrt(kern.squared_l2(references.row(i).data(), references.row(j).data(),
                                                 references.cols()));
      if (d > 0.0) distances.push_back(d);
    }
  }
  if (distances.empty()) throw DataError("auto_alpha: all pairwise reference distances are zero");
  const std::size_t idx = distances.size() / 1000;
  std::nth_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(idx), distances.end());
  return distances[idx];
}

TrainingSystem fit_distance_regression(const Matrix& x, const Matrix& y, AlphaMode alpha,
                                       std::vector<std::string> label_names) {
  if (x.rows() != y.rows()) {
    throw std::invalid_argument("training inputs and labels differ in row count");
  }
  if (x.rows() < 2) throw DataError("training needs at least two instances");
  if (y.cols() == 0 || x.cols() == 0) throw DataError("training needs at least one feature and one label");
  require_binary(y, "training labels");
  if (!label_names.empty() && label_names.size() != y.cols()) {
    throw std::invalid_argument("label name count differs from label columns");
  }

  Matrix refs = unique_rows(x);
  if (refs.rows() < 2) throw DataError("training needs at least two distinct input rows");
  const double a = alpha.automatic ? auto_alpha(refs) : alpha.value;
  if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("alpha must be finite and non-negative");

  Matrix dx = pairwise_distances(x, refs);
  Matrix dy = pairwise_distances(y, y);
  RegularizedGram gram(dx, a);
  Matrix coefficients = gram.solve(transpose_multiply(dx, dy));

  DistanceModel model{std::move(refs), std::move(coefficients), a, y, std::move(label_names)};
  return TrainingSystem{std::move(model), std::move(dx), std::move(dy), std::move(gram)};
}

DistanceModel train(const Matrix& x, const Matrix& y, AlphaMode alpha, std::vector<std::string> label_names) {
  return fit_distance_regression(x, y, alpha, std::move(label_names)).model;
}

LabelwiseModel train_labelwise(const Matrix& x, const Matrix& y, AlphaMode alpha,
                               std::vector<std::string> label_names) {
  TrainingSystem sys = fit_distance_regression(x, y, alpha, std::move(label_names));
  Matrix projector = sys.gram.solve(sys.dx.transposed());
  return LabelwiseModel{std::move(sys.model), std::move(projector)};
}

Vector predict_deltas(const DistanceModel& model, std::span<const double> x) {
  check_query(model, x);
  const auto& k = kernels::active();
  Vector out(model.num_targets(), 0.0);
  for (std::size_t j = 0; j < model.num_references(); ++j) {
    const double d = std::sqrt(k.squared_l2(x.data(), model.references.row(j).data(), x.size()));
    if (d != 0.0) k.axpy(d, model.coefficients.row(j).data(), out.data(), out.size());
  }
  return out;
}

Vector idw_scores(std::span<const double> deltas, const Matrix& train_labels, double power) {
  if (!(power > 0.0)) throw std::invalid_argument("IDW power must be positive");
  if (deltas.size() != train_labels.rows()) throw std::invalid_argument("idw_scores: delta/label count mismatch");
  const std::size_t n = deltas.size();
  Vector log_w(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = clamp_delta(deltas[i]);
    log_w[i] = d > 0.0 ? -power * std::log(d) : 0.0;
    top = std::max(top, log_w[i]);
  }
  const auto& k = kernels::active();
  Vector scores(train_labels.cols(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::exp(log_w[i] - top);
    if (w == 0.0) continue;
    z += w;
    k.axpy(w, train_labels.row(i).data(), scores.data(), scores.size());
  }
  for (double& s : scores) s /= z;
  return scores;
}

std::size_t nearest_target(std::span<const double> deltas) {
  if (deltas.empty()) throw std::invalid_argument("nearest_target: empty delta vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < deltas.size(); ++i)
    if (deltas[i] < deltas[best]) best = i;
  return best;
}

Prediction ml_mlm_predict(const DistanceModel& model, double power, double threshold, std::span<const double> x) {
  const Vector deltas = predict_deltas(model, x);
  Prediction p;
  p.scores = idw_scores(deltas, model.train_labels, power);
  p.labels.resize(p.scores.size());
  for (std::size_t c = 0; c < p.scores.size(); ++c) p.labels[c] = p.scores[c] > threshold ? 1 : 0;
  p.min_distance = min_clamped(deltas);
  p.uncertainty = categorize_uncertainty(p.min_distance);
  return p;
}

Prediction ml_mlm_predict(const TunedMlMlm& tuned, std::span<const double> x) {
  return ml_mlm_predict(tuned.model, tuned.power, tuned.threshold, x);
}

Prediction ml_mlm_predict_local_rcut(const DistanceModel& model, double power, std::span<const double> x) {
  const Vector deltas = predict_deltas(model, x);
  const auto& labels = model.train_labels;
  Prediction p;
  p.scores = idw_scores(deltas, labels, power);
  p.labels = local_rcut(p.scores, cardinality(row_as_labels(labels, nearest_target(deltas))));
  p.min_distance = min_clamped(deltas);
  p.uncertainty = categorize_uncertainty(p.min_distance);
  return p;
}

Prediction ml_mlm_predict_local_rcut(const TunedMlMlm& tuned, std::span<const double> x) {
  return ml_mlm_predict_local_rcut(tuned.model, tuned.power, x);
}

Prediction nn_mlm_predict(const DistanceModel& model, std::span<const double> x) {
  const Vector deltas = predict_deltas(model, x);
  const std::size_t best = nearest_target(deltas);
  Prediction p;
  p.labels = row_as_labels(model.train_labels, best);
  p.scores.assign(model.train_labels.row(best).begin(), model.train_labels.row(best).end());
  p.min_distance = min_clamped(deltas);
  p.uncertainty = categorize_uncertainty(p.min_distance);
  return p;
}

LlsSolution lls_solve(std::span<const double> deltas, const Matrix& targets) {
  if (deltas.size() != targets.rows()) throw std::invalid_argument("lls_solve: delta/target count mismatch");
  const std::size_t n = targets.rows();
  const std::size_t l = targets.cols();
  const std::size_t anchor = nearest_target(deltas);
  const auto tb = targets.row(anchor);
  const double db2 = clamp_delta(deltas[anchor]) * clamp_delta(deltas[anchor]);
  double tb_norm2 = 0.0;
  for (double v : tb) tb_norm2 += v * v;

  // Normal equations of the anchor-differenced system, accumulated in
  // target order:  2(t_b − t_k)ᵀ y = (δ_k² − δ_b²) − (‖t_k‖² − ‖t_b‖²).
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l));
  Eigen::VectorXd atb = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(l));
  Eigen::VectorXd a_row(static_cast<Eigen::Index>(l));
  for (std::size_t k = 0; k < n; ++k) {
    if (k == anchor) continue;
    const auto tk = targets.row(k);
    double tk_norm2 = 0.0;
    bool zero_row = true;
    for (std::size_t c = 0; c < l; ++c) {
      a_row[static_cast<Eigen::Index>(c)] = 2.0 * (tb[c] - tk[c]);
      zero_row = zero_row && tb[c] == tk[c];
      tk_norm2 += tk[c] * tk[c];
    }
    if (zero_row) continue;
    const double dk = clamp_delta(deltas[k]);
    const double rhs = (dk * dk - db2) - (tk_norm2 - tb_norm2);
    ata.selfadjointView<Eigen::Lower>().rankUpdate(a_row);
    atb += rhs * a_row;
  }
  ata.triangularView<Eigen::StrictlyUpper>() = ata.transpose();

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(ata);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(l));
  if (cod.rank() > 0) y = cod.solve(atb);
  LlsSolution out;
  out.scores.assign(y.data(), y.data() + y.size());
  out.anchor = anchor;
  out.rank_deficient = cod.rank() < static_cast<Eigen::Index>(l);
  return out;
}

Prediction lls_mlm_predict(const DistanceModel& model, std::span<const double> x) {
  const Vector deltas = predict_deltas(model, x);
  LlsSolution sol = lls_solve(deltas, model.train_labels);
  Prediction p;
  p.labels = local_rcut(sol.scores, cardinality(row_as_labels(model.train_labels, sol.anchor)));
  p.scores = std::move(sol.scores);
  p.rank_deficient = sol.rank_deficient;
  p.min_distance = min_clamped(deltas);
  p.uncertainty = categorize_uncertainty(p.min_distance);
  return p;
}

Prediction br_mlm_predict(const LabelwiseModel& lw, std::span<const double> x) {
  const DistanceModel& model = lw.model;
  check_query(model, x);
  if (lw.projector.rows() != model.num_references() || lw.projector.cols() != model.num_targets()) {
    throw std::invalid_argument("br_mlm_predict: projector shape does not match the distance model");
  }
  const auto& k = kernels::active();
  const std::size_t n = model.num_targets();
  Vector d(model.num_references());
  for (std::size_t j = 0; j < d.size(); ++j)
    d[j] = std::sqrt(k.squared_l2(x.data(), model.references.row(j).data(), x.size()));

  // q = d · projector; the label-l distance to a target with value v is the
  // sum of q over training rows whose label l differs from v.
  Vector q(n, 0.0);
  for (std::size_t j = 0; j < d.size(); ++j)
    if (d[j] != 0.0) k.axpy(d[j], lw.projector.row(j).data(), q.data(), n);

  const Matrix& y = model.train_labels;
  const std::size_t l = y.cols();
  Vector to_zero(l, 0.0), to_one(l, 0.0), ones(l, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < l; ++c) {
      if (y(i, c) != 0.0) {
        to_zero[c] += q[i];
        ones[c] += 1.0;
      } else {
        to_one[c] += q[i];
      }
    }
  }

  Prediction p;
  p.scores.resize(l);
  for (std::size_t c = 0; c < l; ++c) {
    const double zeros = static_cast<double>(n) - ones[c];
    const double targets[2] = {0.0, 1.0};
    const double deltas[2] = {clamp_delta(to_zero[c]), clamp_delta(to_one[c])};
    const double weights[2] = {zeros, ones[c]};
    p.scores[c] = minimize_scalar_objective(targets, deltas, weights).score;
  }

  const Vector ml_deltas = predict_deltas(model, x);
  p.labels = local_rcut(p.scores, cardinality(row_as_labels(y, nearest_target(ml_deltas))));
  p.min_distance = min_clamped(ml_deltas);
  p.uncertainty = categorize_uncertainty(p.min_distance);
  return p;
}

double multilateration_objective(std::span<const double> y, const Matrix& targets,
                                 std::span<const double> deltas) {
  if (y.size() != targets.cols() || deltas.size() != targets.rows()) {
    throw std::invalid_argument("multilateration_objective: dimension mismatch");
  }
  double j = 0.0;
  for (std::size_t k = 0; k < targets.rows(); ++k) {
    double dist2 = 0.0;
    for (std::size_t c = 0; c < y.size(); ++c) {
      const double e = y[c] - targets(k, c);
      dist2 += e * e;
    }
    const double r = dist2 - deltas[k] * deltas[k];
    j += r * r;
  }
  return j;
}

LabelVector brute_force_mlc(const Matrix& targets, std::span<const double> deltas, std::size_t num_labels) {
  if (num_labels > 20) throw std::invalid_argument("brute_force_mlc: more than 20 labels");
  if (num_labels != targets.cols()) throw std::invalid_argument("brute_force_mlc: label count mismatch");
  const std::uint64_t count = std::uint64_t{1} << num_labels;
  Vector y(num_labels);
  LabelVector best(num_labels, 0);
  double best_j = std::numeric_limits<double>::infinity();
  // mask bit (L-1-c) holds y[c], so increasing masks are lexicographic order
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (std::size_t c = 0; c < num_labels; ++c) y[c] = static_cast<double>((mask >> (num_labels - 1 - c)) & 1u);
    const double j = multilateration_objective(y, targets, deltas);
    if (j < best_j) {
      best_j = j;
      for (std::size_t c = 0; c < num_labels; ++c) best[c] = static_cast<std::uint8_t>(y[c]);
    }
  }
  return best;
}

}  // namespace mlmlm
