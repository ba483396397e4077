// mlmlm: train, tune, predict, evaluate, benchmark and compare
// distance-regression multi-label classifiers.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <memory>

#include "mlmlm/commands.hpp"
#include "mlmlm/errors.hpp"
#include "mlmlm/kernels.hpp"
#include "mlmlm/parallel.hpp"

using namespace mlmlm;

namespace {

void add_data_options(CLI::App* cmd, DataSource& src, const std::string& prefix = "") {
  cmd->add_option("--" + prefix + "arff", src.arff, "ARFF dataset (dense or sparse)");
  cmd->add_option("--" + prefix + "features", src.features_csv, "features CSV (header row)");
  cmd->add_option("--" + prefix + "labels", src.labels_csv, "labels CSV (header row, 0/1)");
  if (prefix.empty()) {
    cmd->add_option("--labels-xml", src.labels_xml, "Mulan XML label manifest");
    cmd->add_option("--labels-last", src.labels_last, "the last L ARFF attributes are labels");
  }
}

struct ConfigFlags {
  std::string method = "ml-mlm";
  std::string alpha = "auto";
  std::string power = "tuned";
  std::string threshold = "default";
  std::string scale = "off";

  void add(CLI::App* cmd, bool with_method) {
    if (with_method) cmd->add_option("--method", method, "ml-mlm | nn-mlm | lls-mlm | br-mlm")->capture_default_str();
    cmd->add_option("--alpha", alpha, "auto | <float>")->capture_default_str();
    cmd->add_option("--power", power, "tuned | <float> (ml-mlm)")->capture_default_str();
    cmd->add_option("--threshold", threshold, "cardinality | local-rcut | <float>; default depends on method")
        ->capture_default_str();
    cmd->add_option("--scale", scale, "off | minmax")->capture_default_str();
  }

  RunConfig build() const { return parse_run_config(method, alpha, power, threshold, scale); }
};

// Writes to the file when a path is given, else stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw DataError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distance-regression multi-label classifiers (ML-MLM, NN-MLM, LLS-MLM, BR-MLM)"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  std::string simd;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.add_option("--simd", simd, "kernel backend: scalar | avx2 | neon (default: best available)");

  // train
  auto* train = app.add_subcommand("train", "train (and tune) a model");
  DataSource train_src;
  ConfigFlags train_cfg;
  std::string train_out, train_lrl;
  add_data_options(train, train_src);
  train_cfg.add(train, true);
  train->add_option("--out", train_out, "model file to write")->required();
  train->add_option("--lrl-curve", train_lrl, "write the LRL-vs-P curve as CSV (s,P,LRL)");

  // predict
  auto* predict = app.add_subcommand("predict", "predict label sets as JSON lines");
  DataSource predict_src;
  std::string predict_model, predict_out;
  add_data_options(predict, predict_src);
  predict->add_option("--model", predict_model, "model file")->required();
  predict->add_option("--out", predict_out, "output file (default: stdout)");

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score predictions against true labels");
  DataSource eval_src;
  std::string eval_pred, eval_out, eval_format = "json", eval_model;
  add_data_options(evaluate_cmd, eval_src);
  evaluate_cmd->add_option("--predictions", eval_pred, "JSON-lines predictions")->required();
  evaluate_cmd->add_option("--model", eval_model, "model file, to check label schema drift");
  evaluate_cmd->add_option("--format", eval_format, "json | csv")->capture_default_str();
  evaluate_cmd->add_option("--out", eval_out, "output file (default: stdout)");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "train and evaluate methods over a list of train/test splits");
  ConfigFlags bench_cfg;
  std::string bench_manifest, bench_out, bench_methods = "ml-mlm,nn-mlm";
  bench_cfg.add(bench, false);
  bench->add_option("--datasets", bench_manifest, "benchmark manifest (JSON)")->required();
  bench->add_option("--methods", bench_methods, "comma-separated methods")->capture_default_str();
  bench->add_option("--out", bench_out, "output directory")->required();

  // stats
  auto* stats = app.add_subcommand("stats", "Friedman test and Nemenyi CD diagram data");
  std::string stats_table, stats_direction, stats_out;
  double stats_alpha = 0.05;
  stats->add_option("--table", stats_table, "result table CSV (datasets x methods)")->required();
  stats->add_option("--direction", stats_direction, "lower | higher (which values are better)")->required();
  stats->add_option("--significance", stats_alpha, "significance level (only 0.05)")->capture_default_str();
  stats->add_option("--out", stats_out, "output file (default: stdout)");

  // distbox
  auto* distbox = app.add_subcommand("distbox", "per-instance minimum predicted distances as CSV");
  DataSource distbox_src;
  std::string distbox_model, distbox_out;
  add_data_options(distbox, distbox_src);
  distbox->add_option("--model", distbox_model, "model file")->required();
  distbox->add_option("--out", distbox_out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (threads > 0) set_thread_count(threads);
    if (!simd.empty()) kernels::set_backend(kernels::parse_backend(simd));

    if (*train) {
      const RunConfig config = train_cfg.build();
      const Dataset data = load_dataset(train_src);
      std::unique_ptr<std::ofstream> lrl;
      if (!train_lrl.empty()) {
        lrl = std::make_unique<std::ofstream>(train_lrl, std::ios::binary);
        if (!*lrl) throw DataError("cannot write " + train_lrl);
      }
      cmd_train(config, data, train_out, lrl.get(), std::cerr);
    } else if (*predict) {
      const ModelFile model = load_model(predict_model);
      const Dataset data = load_dataset(predict_src, false);
      Output out(predict_out);
      cmd_predict(model, data, out.stream(), std::cerr);
    } else if (*evaluate_cmd) {
      const OutputFormat format = parse_format(eval_format);
      const Dataset truth = load_dataset(eval_src);
      std::ifstream preds(eval_pred, std::ios::binary);
      if (!preds) throw DataError("cannot open " + eval_pred);
      std::unique_ptr<ModelFile> model;
      if (!eval_model.empty()) model = std::make_unique<ModelFile>(load_model(eval_model));
      Output out(eval_out);
      cmd_evaluate(preds, truth, format, out.stream(), std::cerr, model.get());
    } else if (*bench) {
      const RunConfig config = bench_cfg.build();
      std::vector<Method> methods;
      std::size_t start = 0;
      while (start <= bench_methods.size()) {
        auto comma = bench_methods.find(',', start);
        if (comma == std::string::npos) comma = bench_methods.size();
        methods.push_back(parse_method(bench_methods.substr(start, comma - start)));
        start = comma + 1;
      }
      cmd_benchmark(config, methods, read_benchmark_manifest(bench_manifest), bench_out, std::cerr);
    } else if (*stats) {
      const ResultTable table = read_result_table(stats_table, parse_direction(stats_direction));
      Output out(stats_out);
      cmd_stats(table, stats_alpha, out.stream());
    } else if (*distbox) {
      const ModelFile model = load_model(distbox_model);
      const Dataset data = load_dataset(distbox_src, false);
      Output out(distbox_out);
      cmd_distbox(model, data, out.stream());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  }
  return kExitOk;
}
