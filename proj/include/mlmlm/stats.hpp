#pragma once

// Friedman test and Nemenyi critical difference over a methods x datasets
// result table.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mlmlm/matrix.hpp"

namespace mlmlm {

enum class Direction { lower_better, higher_better };

Direction parse_direction(std::string_view s);  // "lower" / "higher" (optionally "_better")
std::string_view to_string(Direction d);

struct ResultTable {
  std::vector<std::string> methods;   // k columns
  std::vector<std::string> datasets;  // n rows
  Matrix values;                      // n x k
  Direction direction = Direction::lower_better;

  /// Throws DataError unless k >= 2, n >= 2 and every cell is finite.
  void validate() const;
};

/// Header row "dataset,<method>,...", then one row per dataset.
ResultTable parse_result_table(std::string_view csv_text, Direction direction);
ResultTable read_result_table(const std::filesystem::path& path, Direction direction);
void write_result_table(std::ostream& out, const ResultTable& table);

/// Per-dataset ranks (1 = best, ties get the mean of their positions),
/// averaged over datasets.
Vector average_ranks(const ResultTable& table);

struct FriedmanResult {
  double statistic = 0.0;
  double critical_value = 0.0;
  double p_value = 1.0;
  std::size_t df = 0;
  bool reject = false;
};

/// χ²_F = 12n/(k(k+1)) (Σ R_j² − k(k+1)²/4) against χ²(k−1).
FriedmanResult friedman_test(const ResultTable& table, double alpha = 0.05);

/// Studentized range quantile over √2 for k = 2..20; only alpha = 0.05.
double nemenyi_q(std::size_t k, double alpha = 0.05);

/// CD = q √(k(k+1) / (6n)).
double nemenyi_cd(std::size_t k, std::size_t n, double alpha = 0.05);

struct CdDiagram {
  std::vector<std::string> methods;
  Vector average_ranks;
  double cd = 0.0;
  double alpha = 0.05;
  FriedmanResult friedman;
  /// Maximal groups (two or more methods) whose rank spread is <= CD,
  /// as method indices in ascending rank order.
  std::vector<std::vector<std::size_t>> cliques;
};

CdDiagram cd_diagram_data(const ResultTable& table, double alpha = 0.05);

std::string to_json(const CdDiagram& diagram);

}  // namespace mlmlm
