#include "mlmlm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mlmlm/format.hpp"

namespace mlmlm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": shapes differ");
  }
}

bool on(double v) { return v != 0.0; }

double hmean(double a, double b) { return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

struct Counts {
  std::vector<double> tp, fp, fn;
};

Counts label_counts(const Matrix& pred, const Matrix& truth) {
  const std::size_t l = truth.cols();
  Counts c{std::vector<double>(l, 0.0), std::vector<double>(l, 0.0), std::vector<double>(l, 0.0)};
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      const bool p = on(pred(i, j));
      const bool g = on(truth(i, j));
      if (p && g) c.tp[j] += 1.0;
      if (p && !g) c.fp[j] += 1.0;
      if (!p && g) c.fn[j] += 1.0;
    }
  }
  return c;
}

template <typename PerInstance>
RankingMetric average_over_instances(const Matrix& scores, const Matrix& truth, const char* what,
                                     PerInstance per_instance) {
  require_same_shape(scores, truth, what);
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    const std::optional<double> v = per_instance(scores.row(i), truth.row(i));
    if (!v) continue;
    sum += *v;
    ++used;
  }
  return {used == 0 ? kNaN : sum / static_cast<double>(used), truth.rows() - used};
}

std::optional<double> instance_coverage(std::span<const double> z, std::span<const double> g, double offset) {
  double min_rel = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (on(g[j])) {
      min_rel = std::min(min_rel, z[j]);
      any = true;
    }
  }
  if (!any) return std::nullopt;
  const auto count = std::count_if(z.begin(), z.end(), [&](double v) { return v >= min_rel; });
  return static_cast<double>(count) + offset;
}

std::optional<double> instance_one_error(std::span<const double> z, std::span<const double> g) {
  if (std::none_of(g.begin(), g.end(), on)) return std::nullopt;
  std::size_t top = 0;
  for (std::size_t j = 1; j < z.size(); ++j) {
    if (z[j] > z[top]) top = j;
  }
  return on(g[top]) ? 0.0 : 1.0;
}

std::optional<double> instance_average_precision(std::span<const double> z, std::span<const double> g) {
  double sum = 0.0;
  std::size_t relevant = 0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (!on(g[j])) continue;
    ++relevant;
    double above_rel = 0.0, above = 0.0;
    for (std::size_t m = 0; m < z.size(); ++m) {
      if (z[m] >= z[j]) {
        above += 1.0;
        if (on(g[m])) above_rel += 1.0;
      }
    }
    sum += above_rel / above;
  }
  if (relevant == 0) return std::nullopt;
  return sum / static_cast<double>(relevant);
}

std::vector<std::uint8_t> row_key(const Matrix& y, std::size_t i) {
  std::vector<std::uint8_t> key(y.cols());
  for (std::size_t j = 0; j < y.cols(); ++j) key[j] = on(y(i, j)) ? 1 : 0;
  return key;
}

}  // namespace

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {
      "hamming_loss",    "accuracy",     "micro_precision", "micro_recall",
      "micro_f1",        "macro_precision", "macro_recall", "macro_f1",
      "ranking_loss",    "coverage",     "one_error",       "average_precision"};
  return names;
}

double metric_value(const EvalReport& r, std::string_view name) {
  if (name == "hamming_loss") return r.hamming_loss;
  if (name == "accuracy") return r.accuracy;
  if (name == "micro_precision") return r.micro_precision;
  if (name == "micro_recall") return r.micro_recall;
  if (name == "micro_f1") return r.micro_f1;
  if (name == "macro_precision") return r.macro_precision;
  if (name == "macro_recall") return r.macro_recall;
  if (name == "macro_f1") return r.macro_f1;
  if (name == "ranking_loss") return r.ranking_loss;
  if (name == "coverage") return r.coverage;
  if (name == "one_error") return r.one_error;
  if (name == "average_precision") return r.average_precision;
  throw std::invalid_argument("unknown metric: " + std::string(name));
}

bool metric_lower_is_better(std::string_view name) {
  return name == "hamming_loss" || name == "ranking_loss" || name == "coverage" || name == "one_error";
}

double card(const Matrix& y) {
  if (y.rows() == 0) return 0.0;
  double total = 0.0;
  for (double v : y.values()) total += on(v) ? 1.0 : 0.0;
  return total / static_cast<double>(y.rows());
}

double dens(const Matrix& y) {
  if (y.cols() == 0) return 0.0;
  return card(y) / static_cast<double>(y.cols());
}

LabelStats label_stats(const Matrix& train, const Matrix& test) {
  if (train.cols() != test.cols()) throw std::invalid_argument("label_stats: label counts differ");
  std::set<std::vector<std::uint8_t>> seen_train, all, novel;
  for (std::size_t i = 0; i < train.rows(); ++i) {
    auto k = row_key(train, i);
    all.insert(k);
    seen_train.insert(std::move(k));
  }
  for (std::size_t i = 0; i < test.rows(); ++i) {
    auto k = row_key(test, i);
    if (!seen_train.contains(k)) novel.insert(k);
    all.insert(std::move(k));
  }
  const std::size_t n = train.rows() + test.rows();
  double ones = 0.0;
  for (double v : train.values()) ones += on(v) ? 1.0 : 0.0;
  for (double v : test.values()) ones += on(v) ? 1.0 : 0.0;
  LabelStats s;
  s.card = n == 0 ? 0.0 : ones / static_cast<double>(n);
  s.dens = train.cols() == 0 ? 0.0 : s.card / static_cast<double>(train.cols());
  s.unique_count = all.size();
  s.novel_count = novel.size();
  return s;
}

double hamming_loss(const Matrix& pred, const Matrix& truth) {
  require_same_shape(pred, truth, "hamming_loss");
  if (truth.size() == 0) return kNaN;
  double diff = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (on(pred.values()[i]) != on(truth.values()[i])) diff += 1.0;
  }
  return diff / static_cast<double>(truth.size());
}

double accuracy(const Matrix& pred, const Matrix& truth) {
  require_same_shape(pred, truth, "accuracy");
  if (truth.rows() == 0) return kNaN;
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    double inter = 0.0, uni = 0.0;
    for (std::size_t j = 0; j < truth.cols(); ++j) {
      const bool p = on(pred(i, j));
      const bool g = on(truth(i, j));
      if (p && g) inter += 1.0;
      if (p || g) uni += 1.0;
    }
    sum += uni == 0.0 ? 1.0 : inter / uni;
  }
  return sum / static_cast<double>(truth.rows());
}

PrecisionRecall micro_scores(const Matrix& pred, const Matrix& truth) {
  require_same_shape(pred, truth, "micro_scores");
  const Counts c = label_counts(pred, truth);
  double tp = 0.0, fp = 0.0, fn = 0.0;
  for (std::size_t j = 0; j < c.tp.size(); ++j) {
    tp += c.tp[j];
    fp += c.fp[j];
    fn += c.fn[j];
  }
  PrecisionRecall r;
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  r.f1 = hmean(r.precision, r.recall);
  return r;
}

PrecisionRecall macro_scores(const Matrix& pred, const Matrix& truth) {
  require_same_shape(pred, truth, "macro_scores");
  const Counts c = label_counts(pred, truth);
  const std::size_t l = c.tp.size();
  PrecisionRecall r;
  if (l == 0) return r;
  for (std::size_t j = 0; j < l; ++j) {
    r.precision += ratio(c.tp[j], c.tp[j] + c.fp[j]);
    r.recall += ratio(c.tp[j], c.tp[j] + c.fn[j]);
  }
  r.precision /= static_cast<double>(l);
  r.recall /= static_cast<double>(l);
  r.f1 = hmean(r.precision, r.recall);
  return r;
}

std::optional<double> instance_ranking_loss(std::span<const double> z, std::span<const double> g) {
  if (z.size() != g.size()) throw std::invalid_argument("instance_ranking_loss: size mismatch");
  // Sort irrelevant scores once; for each relevant label count the
  // irrelevant ones scoring strictly higher.
  std::vector<double> irrelevant;
  std::vector<double> relevant;
  for (std::size_t j = 0; j < g.size(); ++j) (on(g[j]) ? relevant : irrelevant).push_back(z[j]);
  if (relevant.empty() || irrelevant.empty()) return std::nullopt;
  std::sort(irrelevant.begin(), irrelevant.end());
  double bad = 0.0;
  for (double r : relevant) {
    const auto it = std::upper_bound(irrelevant.begin(), irrelevant.end(), r);
    bad += static_cast<double>(irrelevant.end() - it);
  }
  return bad / (static_cast<double>(relevant.size()) * static_cast<double>(irrelevant.size()));
}

RankingMetric ranking_loss(const Matrix& scores, const Matrix& truth) {
  return average_over_instances(scores, truth, "ranking_loss", instance_ranking_loss);
}

RankingMetric coverage(const Matrix& scores, const Matrix& truth) {
  return average_over_instances(scores, truth, "coverage",
                                [](auto z, auto g) { return instance_coverage(z, g, -1.0); });
}

RankingMetric coverage_literal(const Matrix& scores, const Matrix& truth) {
  return average_over_instances(scores, truth, "coverage",
                                [](auto z, auto g) { return instance_coverage(z, g, 0.0); });
}

RankingMetric one_error(const Matrix& scores, const Matrix& truth) {
  return average_over_instances(scores, truth, "one_error", instance_one_error);
}

RankingMetric average_precision(const Matrix& scores, const Matrix& truth) {
  return average_over_instances(scores, truth, "average_precision", instance_average_precision);
}

EvalReport evaluate(const Matrix& pred, const Matrix& scores, const Matrix& truth) {
  require_same_shape(pred, truth, "evaluate");
  require_same_shape(scores, truth, "evaluate");
  EvalReport r;
  r.instances = truth.rows();
  r.hamming_loss = hamming_loss(pred, truth);
  r.accuracy = accuracy(pred, truth);
  const auto micro = micro_scores(pred, truth);
  r.micro_precision = micro.precision;
  r.micro_recall = micro.recall;
  r.micro_f1 = micro.f1;
  const auto macro = macro_scores(pred, truth);
  r.macro_precision = macro.precision;
  r.macro_recall = macro.recall;
  r.macro_f1 = macro.f1;
  const auto rl = ranking_loss(scores, truth);
  r.ranking_loss = rl.value;
  r.ranking_loss_skipped = rl.skipped;
  const auto cov = coverage(scores, truth);
  r.coverage = cov.value;
  r.coverage_skipped = cov.skipped;
  r.coverage_literal = coverage_literal(scores, truth).value;
  const auto oe = one_error(scores, truth);
  r.one_error = oe.value;
  r.one_error_skipped = oe.skipped;
  r.average_precision = average_precision(scores, truth).value;
  return r;
}

std::string to_json(const EvalReport& r) {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::ordered_json j;
  for (const auto& name : metric_names()) j[name] = num(metric_value(r, name));
  j["diagnostics"] = {
      {"instances", r.instances},
      {"ranking_loss_skipped", r.ranking_loss_skipped},
      {"coverage_skipped", r.coverage_skipped},
      {"one_error_skipped", r.one_error_skipped},
      {"coverage_literal", num(r.coverage_literal)},
  };
  return j.dump(2) + "\n";
}

std::string csv_header() {
  std::string out;
  for (const auto& name : metric_names()) {
    if (!out.empty()) out += ',';
    out += name;
  }
  return out;
}

std::string csv_row(const EvalReport& r) {
  std::string out;
  for (const auto& name : metric_names()) {
    if (!out.empty()) out += ',';
    out += format_number(metric_value(r, name));
  }
  return out;
}

}  // namespace mlmlm
