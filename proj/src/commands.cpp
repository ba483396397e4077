#include "mlmlm/commands.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "mlmlm/errors.hpp"
#include "mlmlm/format.hpp"
#include "mlmlm/tuning.hpp"

namespace mlmlm {

namespace {

using json = nlohmann::ordered_json;

double parse_float(const std::string& s, const char* flag) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw UsageError(std::string(flag) + ": expected a number, got '" + s + "'");
  }
  return v;
}

Matrix labels_to_matrix(const std::vector<Prediction>& preds, std::size_t l, bool scores) {
  Matrix out(preds.size(), l);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t c = 0; c < l; ++c) out(i, c) = scores ? preds[i].scores[c] : preds[i].labels[c];
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const json& j, const char* key) {
  if (!j.contains(key)) return {};
  std::filesystem::path p = j.at(key).get<std::string>();
  return p.is_absolute() ? p : base / p;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int exit_code(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
  if (dynamic_cast<const DataError*>(&e)) return kExitData;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return kExitData;
  if (dynamic_cast<const std::ios_base::failure*>(&e)) return kExitData;
  return kExitNumerical;
}

Dataset load_dataset(const DataSource& src, bool require_labels) {
  const bool arff = !src.arff.empty();
  const bool csv = !src.features_csv.empty();
  if (arff == csv) throw UsageError("give exactly one of an ARFF file or a features CSV");
  if (arff) {
    const bool xml = !src.labels_xml.empty();
    if (xml == src.labels_last.has_value()) throw UsageError("ARFF input needs exactly one of --labels-xml or --labels-last");
    const LabelSpec spec = xml ? LabelSpec::from_names(parse_label_xml(src.labels_xml))
                               : LabelSpec::trailing(*src.labels_last);
    return parse_arff(src.arff, spec);
  }
  if (src.labels_csv.empty()) {
    if (require_labels) throw UsageError("CSV input needs a labels CSV");
    return parse_features_csv(src.features_csv);
  }
  return parse_csv(src.features_csv, src.labels_csv);
}

RunConfig parse_run_config(const std::string& method, const std::string& alpha, const std::string& power,
                           const std::string& threshold, const std::string& scale) {
  RunConfig c;
  c.method = parse_method(method);
  if (alpha != "auto") {
    const double a = parse_float(alpha, "--alpha");
    if (a < 0.0) throw UsageError("--alpha must be non-negative");
    c.alpha = AlphaMode::fixed(a);
  }
  if (power != "tuned") {
    const double p = parse_float(power, "--power");
    if (!(p > 0.0)) throw UsageError("--power must be positive");
    c.power = p;
  }
  if (threshold == "cardinality") c.threshold = ThresholdSpec{ThresholdMode::cardinality, 0.5};
  else if (threshold == "local-rcut") c.threshold = ThresholdSpec{ThresholdMode::local_rcut, 0.0};
  else if (!threshold.empty() && threshold != "default")
    c.threshold = ThresholdSpec{ThresholdMode::fixed, parse_float(threshold, "--threshold")};
  if (scale == "minmax") c.minmax = true;
  else if (scale != "off") throw UsageError("--scale must be 'off' or 'minmax'");
  return c;
}

ModelFile fit_model(const Dataset& data, const RunConfig& config) {
  if (data.num_labels() == 0) throw DataError("training data has no label columns");
  ModelFile m;
  m.method = config.method;
  m.threshold = config.threshold.value_or(default_threshold(config.method));
  if (m.threshold.mode == ThresholdMode::cardinality && config.method != Method::ml_mlm) {
    throw UsageError("cardinality thresholding applies to ml-mlm only");
  }
  m.alpha_auto = config.alpha.automatic;
  m.feature_names = data.feature_names;
  m.dataset_name = data.name;
  m.dataset_fingerprint = fingerprint(data);

  Matrix x = data.features;
  if (config.minmax) {
    m.scaler = MinMaxScaler::fit(x);
    x = m.scaler->transform(x);
  }

  switch (config.method) {
    case Method::ml_mlm: {
      TrainingSystem sys = fit_distance_regression(x, data.labels, config.alpha, data.label_names);
      const bool needs_loo = !config.power || m.threshold.mode == ThresholdMode::cardinality;
      if (needs_loo) {
        TunedMlMlm tuned = tune_ml_mlm(sys, config.power);
        m.power = tuned.power;
        m.lrl_curve = std::move(tuned.lrl_curve);
        if (m.threshold.mode == ThresholdMode::cardinality) m.threshold.value = tuned.threshold;
      } else {
        m.power = *config.power;
      }
      m.model = std::move(sys.model);
      break;
    }
    case Method::nn_mlm:
    case Method::lls_mlm:
      m.model = train(x, data.labels, config.alpha, data.label_names);
      break;
    case Method::br_mlm: {
      LabelwiseModel lw = train_labelwise(x, data.labels, config.alpha, data.label_names);
      m.model = std::move(lw.model);
      m.projector = std::move(lw.projector);
      break;
    }
  }
  return m;
}

void write_predictions_jsonl(std::ostream& out, const std::vector<Prediction>& preds) {
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Prediction& p = preds[i];
    json j;
    j["index"] = i;
    j["labels"] = p.labels;
    j["scores"] = p.scores;
    j["min_distance"] = p.min_distance;
    j["uncertainty"] = to_string(p.uncertainty);
    j["rank_deficient"] = p.rank_deficient;
    out << j.dump() << '\n';
  }
}

PredictionSet read_predictions_jsonl(std::istream& in) {
  std::vector<double> labels, scores;
  std::size_t n = 0;
  std::optional<std::size_t> l;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const auto lv = j.at("labels").get<std::vector<double>>();
      const auto sv = j.at("scores").get<std::vector<double>>();
      if (lv.size() != sv.size()) throw DataError("labels and scores differ in length");
      if (!l) l = lv.size();
      if (lv.size() != *l) throw DataError("label count changes between predictions");
      labels.insert(labels.end(), lv.begin(), lv.end());
      scores.insert(scores.end(), sv.begin(), sv.end());
      ++n;
    } catch (const json::exception& e) {
      throw DataError("predictions line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  const std::size_t cols = l.value_or(0);
  return {Matrix(n, cols, std::move(labels)), Matrix(n, cols, std::move(scores))};
}

OutputFormat parse_format(const std::string& s) {
  if (s == "json") return OutputFormat::json;
  if (s == "csv") return OutputFormat::csv;
  throw UsageError("--format must be 'json' or 'csv'");
}

ModelFile cmd_train(const RunConfig& config, const Dataset& train, const std::filesystem::path& model_out,
                    std::ostream* lrl_csv, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelFile m = fit_model(train, config);
  save_model(m, model_out);
  if (lrl_csv) write_lrl_curve_csv(*lrl_csv, m.lrl_curve);
  log << "trained " << to_string(m.method) << " on " << train.name << " (N=" << train.num_instances()
      << ", M=" << train.num_features() << ", L=" << train.num_labels() << ", K=" << m.model.num_references()
      << ", alpha=" << format_number(m.model.alpha);
  if (m.method == Method::ml_mlm) {
    log << ", P=" << format_number(m.power);
    if (m.threshold.mode != ThresholdMode::local_rcut) log << ", t=" << format_number(m.threshold.value);
  }
  log << ") in " << seconds_since(t0) << " s\n";
  return m;
}

void cmd_predict(const ModelFile& model, const Dataset& data, std::ostream& out, std::ostream& log) {
  if (data.num_instances() > 0 && data.num_features() != model.model.num_features()) {
    throw DataError("data has " + std::to_string(data.num_features()) + " features, model expects " +
                    std::to_string(model.model.num_features()));
  }
  if (!model.feature_names.empty() && data.feature_names != model.feature_names) {
    log << "warning: feature names differ from the training data\n";
  }
  write_predictions_jsonl(out, predict_all(model, data.features));
}

EvalReport cmd_evaluate(std::istream& predictions, const Dataset& truth, OutputFormat format, std::ostream& out,
                        std::ostream& log, const ModelFile* model) {
  const PredictionSet preds = read_predictions_jsonl(predictions);
  if (preds.labels.rows() == 0) throw DataError("no predictions to evaluate");
  if (preds.labels.rows() != truth.num_instances() || preds.labels.cols() != truth.num_labels()) {
    throw DataError("predictions are " + std::to_string(preds.labels.rows()) + " x " +
                    std::to_string(preds.labels.cols()) + " but the truth labels are " +
                    std::to_string(truth.num_instances()) + " x " + std::to_string(truth.num_labels()));
  }
  if (model && model->model.label_names != truth.label_names) {
    log << "warning: truth label names differ from the model's (schema drift)\n";
  }
  const EvalReport r = evaluate(preds.labels, preds.scores, truth.labels);
  if (format == OutputFormat::json) {
    out << to_json(r);
  } else {
    out << csv_header() << '\n' << csv_row(r) << '\n';
  }
  return r;
}

std::vector<BenchmarkEntry> read_benchmark_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open benchmark manifest " + path.string());
  const auto base = path.parent_path();
  std::vector<BenchmarkEntry> out;
  try {
    const json j = json::parse(in);
    for (const auto& d : j.at("datasets")) {
      BenchmarkEntry e;
      e.name = d.at("name").get<std::string>();
      std::optional<std::size_t> last;
      if (d.contains("labels_last")) last = d.at("labels_last").get<std::size_t>();
      const auto xml = resolve(base, d, "labels_xml");
      e.train = {resolve(base, d, "train"), xml, last, resolve(base, d, "train_features"),
                 resolve(base, d, "train_labels")};
      e.test = {resolve(base, d, "test"), xml, last, resolve(base, d, "test_features"), resolve(base, d, "test_labels")};
      out.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DataError("benchmark manifest " + path.string() + ": " + e.what());
  }
  if (out.empty()) throw DataError("benchmark manifest lists no datasets");
  return out;
}

void cmd_benchmark(const RunConfig& base, const std::vector<Method>& methods,
                   const std::vector<BenchmarkEntry>& datasets, const std::filesystem::path& out_dir,
                   std::ostream& log) {
  if (methods.empty()) throw UsageError("benchmark needs at least one method");
  std::filesystem::create_directories(out_dir / "reports");

  const auto& names = metric_names();
  std::map<std::string, Matrix> tables;
  for (const auto& m : names) tables.emplace(m, Matrix(datasets.size(), methods.size()));

  std::ofstream results(out_dir / "results.csv", std::ios::binary);
  if (!results) throw DataError("cannot write " + (out_dir / "results.csv").string());
  results << "dataset,method," << csv_header() << ",power,threshold\n";

  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const auto& entry = datasets[d];
    const Dataset train = load_dataset(entry.train);
    const Dataset test = load_dataset(entry.test);
    check_schemas(train, test);
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      RunConfig config = base;
      config.method = methods[k];
      const ModelFile model = fit_model(train, config);
      const auto preds = predict_all(model, test.features);
      const EvalReport r = evaluate(labels_to_matrix(preds, test.num_labels(), false),
                                    labels_to_matrix(preds, test.num_labels(), true), test.labels);
      for (const auto& m : names) tables.at(m)(d, k) = metric_value(r, m);

      const bool tuned = methods[k] == Method::ml_mlm;
      const bool has_t = tuned && model.threshold.mode != ThresholdMode::local_rcut;
      results << entry.name << ',' << to_string(methods[k]) << ',' << csv_row(r) << ','
              << (tuned ? format_number(model.power) : "") << ',' << (has_t ? format_number(model.threshold.value) : "")
              << '\n';
      std::ofstream report(out_dir / "reports" / (entry.name + "_" + std::string(to_string(methods[k])) + ".json"),
                           std::ios::binary);
      report << to_json(r);
      log << entry.name << ' ' << to_string(methods[k]) << ": ranking_loss=" << format_number(r.ranking_loss)
          << " accuracy=" << format_number(r.accuracy) << " (" << seconds_since(t0) << " s)\n";
    }
  }

  for (const auto& m : names) {
    ResultTable t;
    for (auto method : methods) t.methods.emplace_back(to_string(method));
    for (const auto& e : datasets) t.datasets.push_back(e.name);
    t.values = tables.at(m);
    t.direction = metric_lower_is_better(m) ? Direction::lower_better : Direction::higher_better;
    std::ofstream out(out_dir / ("table_" + m + ".csv"), std::ios::binary);
    write_result_table(out, t);
  }
}

void cmd_stats(const ResultTable& table, double alpha, std::ostream& out) {
  out << to_json(cd_diagram_data(table, alpha));
}

void cmd_distbox(const ModelFile& model, const Dataset& data, std::ostream& out) {
  const auto preds = predict_all(model, data.features);
  out << "index,min_distance,uncertainty\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out << i << ',' << format_number(preds[i].min_distance) << ',' << to_string(preds[i].uncertainty) << '\n';
  }
}

}  // namespace mlmlm
