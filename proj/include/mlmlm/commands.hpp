#pragma once

// The CLI subcommands as library functions. Each takes its inputs already
// parsed and writes to the given streams, so tests can drive them without a
// process boundary. Errors are thrown as DataError / NumericalError /
// UsageError; exit_code() maps them to the stable exit codes.

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mlmlm/data.hpp"
#include "mlmlm/metrics.hpp"
#include "mlmlm/model_io.hpp"
#include "mlmlm/models.hpp"
#include "mlmlm/stats.hpp"

namespace mlmlm {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

int exit_code(const std::exception& e);

/// Where a dataset comes from: an ARFF file with a label manifest or a
/// trailing label count, or a features CSV with an optional labels CSV.
struct DataSource {
  std::filesystem::path arff;
  std::filesystem::path labels_xml;
  std::optional<std::size_t> labels_last;
  std::filesystem::path features_csv;
  std::filesystem::path labels_csv;
};

/// With `require_labels` false a features-only CSV yields an N x 0 label matrix.
Dataset load_dataset(const DataSource& src, bool require_labels = true);

struct RunConfig {
  Method method = Method::ml_mlm;
  AlphaMode alpha = AlphaMode::auto_quantile();
  std::optional<double> power;              // nullopt: tuned on the LRL grid
  std::optional<ThresholdSpec> threshold;   // nullopt: method default
  bool minmax = false;
};

/// Builds a config from the textual flag values
/// (--alpha auto|<v>, --power tuned|<v>, --threshold cardinality|local-rcut|<t>, --scale off|minmax).
RunConfig parse_run_config(const std::string& method, const std::string& alpha, const std::string& power,
                           const std::string& threshold, const std::string& scale);

/// Train (and tune, where the method needs it) on one dataset.
ModelFile fit_model(const Dataset& train, const RunConfig& config);

void write_predictions_jsonl(std::ostream& out, const std::vector<Prediction>& preds);

struct PredictionSet {
  Matrix labels;  // N x L binary
  Matrix scores;  // N x L
};

PredictionSet read_predictions_jsonl(std::istream& in);

enum class OutputFormat { json, csv };
OutputFormat parse_format(const std::string& s);

/// Writes the model to `model_out`; the LRL curve goes to `lrl_csv` when given.
ModelFile cmd_train(const RunConfig& config, const Dataset& train, const std::filesystem::path& model_out,
                    std::ostream* lrl_csv, std::ostream& log);

void cmd_predict(const ModelFile& model, const Dataset& data, std::ostream& out, std::ostream& log);

/// `model` (optional) is only used to warn about label schema drift.
EvalReport cmd_evaluate(std::istream& predictions, const Dataset& truth, OutputFormat format, std::ostream& out,
                        std::ostream& log, const ModelFile* model = nullptr);

/// Benchmark manifest (JSON):
///   {"datasets": [{"name": ..., "train": ..., "test": ..., "labels_xml": ... | "labels_last": L},
///                 {"name": ..., "train_features": ..., "train_labels": ...,
///                  "test_features": ..., "test_labels": ...}]}
/// Relative paths are resolved against the manifest's directory.
struct BenchmarkEntry {
  std::string name;
  DataSource train;
  DataSource test;
};

std::vector<BenchmarkEntry> read_benchmark_manifest(const std::filesystem::path& path);

/// Writes <out_dir>/results.csv (one row per dataset and method),
/// <out_dir>/table_<metric>.csv (datasets x methods, the stats input) and
/// <out_dir>/reports/<dataset>_<method>.json.
void cmd_benchmark(const RunConfig& base, const std::vector<Method>& methods,
                   const std::vector<BenchmarkEntry>& datasets, const std::filesystem::path& out_dir,
                   std::ostream& log);

void cmd_stats(const ResultTable& table, double alpha, std::ostream& out);

/// CSV "index,min_distance,uncertainty" per instance.
void cmd_distbox(const ModelFile& model, const Dataset& data, std::ostream& out);

}  // namespace mlmlm
