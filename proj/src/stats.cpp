#include "mlmlm/stats.hpp"

#include <algorithm>
#include <array>
#include <boost/math/distributions/chi_squared.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "mlmlm/errors.hpp"
#include "mlmlm/format.hpp"

namespace mlmlm {

namespace {

// k = 2..20 at alpha = 0.05
constexpr std::array<double, 19> kNemenyiQ05 = {
    1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164, 3.219,
    3.268, 3.313, 3.354, 3.391, 3.426, 3.458, 3.489, 3.517, 3.544};

bool is_alpha_05(double alpha) { return std::abs(alpha - 0.05) < 1e-12; }

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    std::string_view f = trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
    out.emplace_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

Direction parse_direction(std::string_view s) {
  if (s == "lower" || s == "lower_better" || s == "lower-better") return Direction::lower_better;
  if (s == "higher" || s == "higher_better" || s == "higher-better") return Direction::higher_better;
  throw UsageError("direction must be 'lower' or 'higher', got '" + std::string(s) + "'");
}

std::string_view to_string(Direction d) {
  return d == Direction::lower_better ? "lower_better" : "higher_better";
}

void ResultTable::validate() const {
  if (methods.size() < 2) throw DataError("result table needs at least two methods");
  if (datasets.size() < 2) throw DataError("result table needs at least two datasets");
  if (values.rows() != datasets.size() || values.cols() != methods.size()) {
    throw DataError("result table values do not match its method/dataset names");
  }
  if (!values.all_finite()) throw DataError("result table has missing or non-finite cells");
}

ResultTable parse_result_table(std::string_view text, Direction direction) {
  ResultTable t;
  t.direction = direction;
  std::vector<double> values;
  std::size_t line_no = 0;
  bool header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (!header) {
      if (fields.size() < 2) throw DataError("result table header needs a dataset column and methods");
      t.methods.assign(fields.begin() + 1, fields.end());
      header = true;
      continue;
    }
    if (fields.size() != t.methods.size() + 1) {
      throw DataError("result table line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(t.methods.size() + 1));
    }
    t.datasets.push_back(fields[0]);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      const std::string& f = fields[j];
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw DataError("result table line " + std::to_string(line_no) + ": bad value '" + fields[j] + "'");
      }
      values.push_back(v);
    }
  }
  t.values = Matrix(t.datasets.size(), t.methods.size(), std::move(values));
  t.validate();
  return t;
}

ResultTable read_result_table(const std::filesystem::path& path, Direction direction) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_result_table(ss.str(), direction);
}

void write_result_table(std::ostream& out, const ResultTable& t) {
  out << "dataset";
  for (const auto& m : t.methods) out << ',' << m;
  out << '\n';
  for (std::size_t i = 0; i < t.datasets.size(); ++i) {
    out << t.datasets[i];
    for (std::size_t j = 0; j < t.methods.size(); ++j) out << ',' << format_number(t.values(i, j));
    out << '\n';
  }
}

Vector average_ranks(const ResultTable& t) {
  t.validate();
  const std::size_t n = t.datasets.size();
  const std::size_t k = t.methods.size();
  Vector sum(k, 0.0);
  std::vector<std::size_t> order(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = t.values.row(i);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return t.direction == Direction::lower_better ? row[a] < row[b] : row[a] > row[b];
    });
    for (std::size_t s = 0; s < k;) {
      std::size_t e = s + 1;
      while (e < k && row[order[e]] == row[order[s]]) ++e;
      const double mid = (static_cast<double>(s + 1) + static_cast<double>(e)) / 2.0;
      for (std::size_t r = s; r < e; ++r) sum[order[r]] += mid;
      s = e;
    }
  }
  for (double& r : sum) r /= static_cast<double>(n);
  return sum;
}

FriedmanResult friedman_test(const ResultTable& t, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  const Vector ranks = average_ranks(t);
  const double n = static_cast<double>(t.datasets.size());
  const double k = static_cast<double>(t.methods.size());
  double sq = 0.0;
  for (double r : ranks) sq += r * r;
  FriedmanResult res;
  // clamp tiny negative rounding when all rankings tie
  res.statistic = std::max(0.0, 12.0 * n / (k * (k + 1.0)) * (sq - k * (k + 1.0) * (k + 1.0) / 4.0));
  res.df = t.methods.size() - 1;
  const boost::math::chi_squared dist(static_cast<double>(res.df));
  res.critical_value = boost::math::quantile(dist, 1.0 - alpha);
  res.p_value = boost::math::cdf(boost::math::complement(dist, res.statistic));
  res.reject = res.statistic > res.critical_value;
  return res;
}

double nemenyi_q(std::size_t k, double alpha) {
  if (!is_alpha_05(alpha)) throw UsageError("Nemenyi critical values are only available for alpha = 0.05");
  if (k < 2 || k > 20) throw UsageError("Nemenyi critical values cover 2 to 20 methods, got " + std::to_string(k));
  return kNemenyiQ05[k - 2];
}

double nemenyi_cd(std::size_t k, std::size_t n, double alpha) {
  if (n == 0) throw UsageError("Nemenyi CD needs at least one dataset");
  const double kd = static_cast<double>(k);
  return nemenyi_q(k, alpha) * std::sqrt(kd * (kd + 1.0) / (6.0 * static_cast<double>(n)));
}

CdDiagram cd_diagram_data(const ResultTable& t, double alpha) {
  CdDiagram d;
  d.methods = t.methods;
  d.alpha = alpha;
  d.average_ranks = average_ranks(t);
  d.cd = nemenyi_cd(t.methods.size(), t.datasets.size(), alpha);
  d.friedman = friedman_test(t, alpha);

  // On a line, mutually non-significant sets are runs in rank order; keep
  // the maximal runs of length >= 2.
  const std::size_t k = t.methods.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d.average_ranks[a] < d.average_ranks[b]; });
  std::size_t last_end = 0;
  for (std::size_t s = 0; s < k; ++s) {
    std::size_t e = s;
    while (e + 1 < k && d.average_ranks[order[e + 1]] - d.average_ranks[order[s]] <= d.cd) ++e;
    if (e > s && e + 1 > last_end) {
      d.cliques.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                             order.begin() + static_cast<std::ptrdiff_t>(e + 1));
      last_end = e + 1;
    }
  }
  return d;
}

std::string to_json(const CdDiagram& d) {
  nlohmann::ordered_json j;
  j["alpha"] = d.alpha;
  j["critical_difference"] = d.cd;
  j["friedman"] = {{"statistic", d.friedman.statistic},
                   {"df", d.friedman.df},
                   {"critical_value", d.friedman.critical_value},
                   {"p_value", d.friedman.p_value},
                   {"reject", d.friedman.reject}};
  auto methods = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < d.methods.size(); ++i) {
    methods.push_back({{"name", d.methods[i]}, {"average_rank", d.average_ranks[i]}});
  }
  j["methods"] = methods;
  auto cliques = nlohmann::ordered_json::array();
  for (const auto& c : d.cliques) {
    auto names = nlohmann::ordered_json::array();
    for (auto i : c) names.push_back(d.methods[i]);
    cliques.push_back(names);
  }
  j["cliques"] = cliques;
  return j.dump(2) + "\n";
}

}  // namespace mlmlm
