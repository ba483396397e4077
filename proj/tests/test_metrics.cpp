#include <doctest.h>

#include <cmath>
#include <random>

#include "mlmlm/metrics.hpp"
#include "oracles.hpp"

using namespace mlmlm;

namespace {

Matrix m(std::initializer_list<std::initializer_list<double>> rows) { return Matrix::from_rows(rows); }

bool same(double a, double b, double tol) { return (std::isnan(a) && std::isnan(b)) || std::abs(a - b) <= tol; }

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("card and dens") {
    CHECK(card(m({{1, 0}, {1, 1}})) == 1.5);
    CHECK(dens(m({{1, 0}, {1, 1}})) == 0.75);
    CHECK(card(Matrix(3, 4)) == 0.0);
    CHECK(dens(Matrix(3, 4, 1.0)) == 1.0);
  }

  TEST_CASE("label statistics count unique and novel label vectors") {
    const Matrix train = m({{1, 0}, {1, 0}, {0, 1}});
    const Matrix test = m({{1, 1}, {0, 1}, {1, 1}});
    const LabelStats s = label_stats(train, test);
    CHECK(s.unique_count == 3);
    CHECK(s.novel_count == 1);
    CHECK(s.card == doctest::Approx(8.0 / 6.0));
    CHECK(label_stats(train, train).novel_count == 0);
  }

  TEST_CASE("hamming loss") {
    CHECK(hamming_loss(m({{1, 0, 1}}), m({{1, 1, 0}})) == doctest::Approx(2.0 / 3.0));
    CHECK(hamming_loss(m({{1, 0}, {0, 1}}), m({{1, 0}, {0, 1}})) == 0.0);
    CHECK(hamming_loss(m({{1, 0}, {0, 1}}), m({{0, 1}, {1, 0}})) == 1.0);
    CHECK_THROWS_AS(hamming_loss(m({{1, 0}}), m({{1, 0, 1}})), std::invalid_argument);
  }

  TEST_CASE("accuracy") {
    CHECK(accuracy(m({{1, 0, 1}}), m({{1, 1, 0}})) == doctest::Approx(1.0 / 3.0));
    CHECK(accuracy(m({{1, 1, 0}}), m({{1, 1, 0}})) == 1.0);
    CHECK(accuracy(m({{1, 0}}), m({{0, 1}})) == 0.0);
    CHECK(accuracy(m({{0, 0}}), m({{0, 0}})) == 1.0);
  }

  TEST_CASE("micro and macro scores: two-label hand counts") {
    // label 1: TP=1, FP=1, FN=0; label 2: TP=0, FP=0, FN=1
    const Matrix pred = m({{1, 0}, {1, 0}});
    const Matrix truth = m({{1, 1}, {0, 0}});
    const PrecisionRecall mi = micro_scores(pred, truth);
    CHECK(mi.precision == doctest::Approx(0.5));
    CHECK(mi.recall == doctest::Approx(0.5));
    CHECK(mi.f1 == doctest::Approx(0.5));
    CHECK(macro_scores(pred, truth).f1 == doctest::Approx(1.0 / 3.0));
  }

  TEST_CASE("micro and macro scores: perfect predictions") {
    const Matrix y = m({{1, 0, 1}, {0, 1, 1}});
    CHECK(micro_scores(y, y).f1 == 1.0);
    CHECK(macro_scores(y, y).f1 == 1.0);
    CHECK(micro_scores(m({{1}}), m({{1}})).f1 == 1.0);
  }

  TEST_CASE("ranking loss") {
    CHECK(ranking_loss(m({{0.2, 0.5, 0.1}}), m({{1, 0, 0}})).value == 0.5);
    CHECK(ranking_loss(m({{0.9, 0.1}}), m({{1, 0}})).value == 0.0);
    CHECK(ranking_loss(m({{0.1, 0.9}}), m({{1, 0}})).value == 1.0);
    const RankingMetric r = ranking_loss(m({{0.3, 0.4}, {0.9, 0.1}}), m({{1, 1}, {1, 0}}));
    CHECK(r.skipped == 1);
    CHECK(r.value == 0.0);
    CHECK(std::isnan(ranking_loss(m({{0.3, 0.4}}), m({{0, 0}})).value));
  }

  TEST_CASE("coverage") {
    CHECK(coverage(m({{0.9, 0.5, 0.1}}), m({{1, 0, 1}})).value == 2.0);
    CHECK(coverage_literal(m({{0.9, 0.5, 0.1}}), m({{1, 0, 1}})).value == 3.0);
    CHECK(coverage(m({{0.9, 0.5, 0.1}}), m({{1, 0, 0}})).value == 0.0);
    CHECK(coverage(m({{0.1, 0.5, 0.9}}), m({{1, 0, 0}})).value == 2.0);
  }

  TEST_CASE("one error") {
    CHECK(one_error(m({{0.2, 0.5, 0.1}}), m({{1, 0, 0}})).value == 1.0);
    CHECK(one_error(m({{0.7, 0.5, 0.1}}), m({{1, 0, 0}})).value == 0.0);
    // tie at the top goes to the first label
    CHECK(one_error(m({{0.5, 0.5}}), m({{1, 0}})).value == 0.0);
    CHECK(one_error(m({{0.5, 0.5}}), m({{0, 1}})).value == 1.0);
  }

  TEST_CASE("average precision") {
    CHECK(average_precision(m({{0.1, 0.9}}), m({{1, 0}})).value == 0.5);
    CHECK(average_precision(m({{0.9, 0.8, 0.1}}), m({{1, 1, 0}})).value == 1.0);
    CHECK(average_precision(m({{0.9, 0.1}}), m({{1, 0}})).value == 1.0);
  }

  TEST_CASE("all twelve metrics match the naive oracles on 200 random problems") {
    std::mt19937_64 rng(51);
    std::uniform_int_distribution<std::size_t> nd(1, 20), ld(1, 6);
    std::uniform_int_distribution<int> levels(0, 4);
    for (int rep = 0; rep < 200; ++rep) {
      const std::size_t n = nd(rng), l = ld(rng);
      const auto p = oracle::random_labels(rng, n, l, 0.45);
      const auto g = oracle::random_labels(rng, n, l, 0.4);
      // coarse scores so that ties occur
      oracle::Grid z(n, std::vector<double>(l));
      for (auto& r : z)
        for (auto& v : r) v = levels(rng) / 4.0;
      const EvalReport e = evaluate(oracle::from_grid(p), oracle::from_grid(z), oracle::from_grid(g));
      const auto mi = oracle::micro(p, g);
      const auto ma = oracle::macro(p, g);
      CHECK(same(e.hamming_loss, oracle::hamming(p, g), 1e-12));
      CHECK(same(e.accuracy, oracle::jaccard_accuracy(p, g), 1e-12));
      CHECK(same(e.micro_precision, mi.p, 1e-12));
      CHECK(same(e.micro_recall, mi.r, 1e-12));
      CHECK(same(e.micro_f1, mi.f, 1e-12));
      CHECK(same(e.macro_precision, ma.p, 1e-12));
      CHECK(same(e.macro_recall, ma.r, 1e-12));
      CHECK(same(e.macro_f1, ma.f, 1e-12));
      CHECK(same(e.ranking_loss, oracle::ranking_loss(z, g), 1e-12));
      CHECK(same(e.coverage, oracle::coverage(z, g), 1e-12));
      CHECK(same(e.one_error, oracle::one_error(z, g), 1e-12));
      CHECK(same(e.average_precision, oracle::average_precision(z, g), 1e-12));
      CHECK(e.instances == n);
    }
  }

  TEST_CASE("ranking metrics are invariant under a strictly increasing transform") {
    std::mt19937_64 rng(52);
    const Matrix z = oracle::from_grid(oracle::random_grid(rng, 15, 5));
    const Matrix g = oracle::from_grid(oracle::random_labels(rng, 15, 5));
    Matrix t = z;
    for (std::size_t i = 0; i < t.rows(); ++i)
      for (double& v : t.row(i)) v = std::exp(3.0 * v) - 7.0;
    CHECK(ranking_loss(z, g).value == ranking_loss(t, g).value);
    CHECK(coverage(z, g).value == coverage(t, g).value);
    CHECK(one_error(z, g).value == one_error(t, g).value);
    CHECK(average_precision(z, g).value == average_precision(t, g).value);
  }

  TEST_CASE("bipartition symmetry and ranges") {
    std::mt19937_64 rng(53);
    for (int rep = 0; rep < 20; ++rep) {
      const Matrix a = oracle::from_grid(oracle::random_labels(rng, 8, 4));
      const Matrix b = oracle::from_grid(oracle::random_labels(rng, 8, 4));
      const Matrix z = oracle::from_grid(oracle::random_grid(rng, 8, 4));
      CHECK(hamming_loss(a, b) == hamming_loss(b, a));
      CHECK(accuracy(a, b) == accuracy(b, a));
      const RankingMetric c = coverage(z, b);
      if (!std::isnan(c.value)) {
        CHECK(c.value >= 0.0);
        CHECK(c.value <= 3.0);
      }
    }
  }

  TEST_CASE("report serialization") {
    const Matrix y = m({{1, 0}, {0, 1}});
    const EvalReport e = evaluate(y, y, y);
    CHECK(metric_names().size() == 12);
    CHECK(metric_names().front() == "hamming_loss");
    CHECK(metric_value(e, "average_precision") == 1.0);
    CHECK(metric_lower_is_better("coverage"));
    CHECK_FALSE(metric_lower_is_better("micro_f1"));
    const std::string json = to_json(e);
    CHECK(json.find("\"hamming_loss\": 0") != std::string::npos);
    CHECK(json.find("\"diagnostics\"") != std::string::npos);
    CHECK(csv_header().rfind("hamming_loss,accuracy,", 0) == 0);
    CHECK(csv_row(e).find("nan") == std::string::npos);
  }

  TEST_CASE("a report with an undefined ranking metric writes null") {
    const Matrix y = m({{0, 0}});
    const std::string json = to_json(evaluate(y, m({{0.2, 0.1}}), y));
    CHECK(json.find("\"ranking_loss\": null") != std::string::npos);
  }
}
