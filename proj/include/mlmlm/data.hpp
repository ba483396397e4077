#pragma once

// Dataset ingestion: Mulan-style ARFF (dense and sparse) with an XML label
// manifest or a trailing label count, and a features/labels CSV pair.
// Numeric parsing is locale-independent.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlmlm/matrix.hpp"

namespace mlmlm {

enum class SourceFormat { arff_dense, arff_sparse, csv };

std::string_view to_string(SourceFormat f);

struct Dataset {
  std::string name;
  Matrix features;  // N x M
  Matrix labels;    // N x L, entries in {0, 1}
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;
  SourceFormat source_format = SourceFormat::csv;

  std::size_t num_instances() const { return features.rows(); }
  std::size_t num_features() const { return features.cols(); }
  std::size_t num_labels() const { return labels.cols(); }
};

struct SplitPair {
  Dataset train;
  Dataset test;
};

/// Which ARFF attributes are labels: the names listed in a manifest, or the
/// last `last` attributes. Exactly one must be set.
struct LabelSpec {
  std::optional<std::vector<std::string>> names;
  std::optional<std::size_t> last;

  static LabelSpec from_names(std::vector<std::string> n) { return {std::move(n), std::nullopt}; }
  static LabelSpec trailing(std::size_t count) { return {std::nullopt, count}; }
};

/// Label names of a Mulan XML manifest, in document order (nested labels
/// included).
std::vector<std::string> parse_label_xml(const std::filesystem::path& path);
std::vector<std::string> parse_label_xml_text(std::string_view text);

Dataset parse_arff(const std::filesystem::path& path, const LabelSpec& labels);
Dataset parse_arff_text(std::string_view text, const LabelSpec& labels, std::string fallback_name = "dataset");

/// Both files start with a header row of column names.
Dataset parse_csv(const std::filesystem::path& features_path, const std::filesystem::path& labels_path);
Dataset parse_csv_text(std::string_view features_text, std::string_view labels_text, std::string name = "dataset");

/// Features only; the label matrix is N x 0.
Dataset parse_features_csv(const std::filesystem::path& features_path);

/// Shortest round-trip number formatting, so parse_csv(write_csv(d)) == d.
void write_csv(const Dataset& ds, std::ostream& features_out, std::ostream& labels_out);
void write_csv(const Dataset& ds, const std::filesystem::path& features_path,
               const std::filesystem::path& labels_path);

/// Dense ARFF with the labels as trailing {0,1} attributes.
void write_arff(const Dataset& ds, std::ostream& out);

struct Diagnostics {
  std::size_t duplicate_rows = 0;    // feature rows equal to an earlier row
  std::size_t empty_label_rows = 0;  // instances without any relevant label
  std::size_t full_label_rows = 0;   // instances with every label relevant
  std::vector<std::size_t> constant_features;

  bool clean() const { return duplicate_rows == 0 && empty_label_rows == 0 && constant_features.empty(); }
};

Diagnostics validate(const Dataset& ds);

/// Throws DataError when feature or label schemas of the two sets differ.
void check_schemas(const Dataset& train, const Dataset& test);

/// FNV-1a over dimensions, names and the raw feature/label bytes.
std::uint64_t fingerprint(const Dataset& ds);

/// Per-feature min-max scaling to [0, 1] fitted on training data; constant
/// features map to 0.
struct MinMaxScaler {
  Vector min;
  Vector range;

  static MinMaxScaler fit(const Matrix& x);
  Matrix transform(const Matrix& x) const;
};

}  // namespace mlmlm
