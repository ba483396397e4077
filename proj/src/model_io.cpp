#include "mlmlm/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "mlmlm/errors.hpp"
#include "mlmlm/parallel.hpp"

namespace mlmlm {

namespace {

constexpr char kMagic[8] = {'M', 'L', 'M', 'L', 'M', 'O', 'D', '\n'};
// A manifest larger than this is certainly corrupt.
constexpr std::uint64_t kMaxManifest = 64ull << 20;

using json = nlohmann::ordered_json;

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  v = to_le(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) throw DataError("model file truncated");
  return to_le(v);
}

void write_doubles(std::ostream& out, std::span<const double> values) {
  for (double d : values) write_u64(out, std::bit_cast<std::uint64_t>(d));
}

Matrix read_matrix(std::istream& in, std::size_t rows, std::size_t cols, const std::string& name) {
  std::vector<double> values(rows * cols);
  for (double& d : values) {
    std::uint64_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof(bits))) {
      throw DataError("model file truncated inside blob '" + name + "'");
    }
    d = std::bit_cast<double>(to_le(bits));
  }
  return Matrix(rows, cols, std::move(values));
}

json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

struct Blob {
  std::string name;
  const Matrix* matrix;
};

void apply_threshold(Prediction& p, const ThresholdSpec& t) {
  for (std::size_t c = 0; c < p.scores.size(); ++c) p.labels[c] = p.scores[c] > t.value ? 1 : 0;
}

Vector scale_row(const MinMaxScaler& s, std::span<const double> x) {
  if (x.size() != s.min.size()) throw DataError("query feature count differs from the scaler's");
  Vector out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = s.range[j] > 0.0 ? (x[j] - s.min[j]) / s.range[j] : 0.0;
  return out;
}

}  // namespace

Method parse_method(std::string_view s) {
  if (s == "ml-mlm") return Method::ml_mlm;
  if (s == "nn-mlm") return Method::nn_mlm;
  if (s == "lls-mlm") return Method::lls_mlm;
  if (s == "br-mlm") return Method::br_mlm;
  throw UsageError("unknown method '" + std::string(s) + "' (ml-mlm, nn-mlm, lls-mlm, br-mlm)");
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::ml_mlm:
      return "ml-mlm";
    case Method::nn_mlm:
      return "nn-mlm";
    case Method::lls_mlm:
      return "lls-mlm";
    case Method::br_mlm:
      return "br-mlm";
  }
  return "unknown";
}

ThresholdSpec default_threshold(Method m) {
  if (m == Method::ml_mlm) return {ThresholdMode::cardinality, 0.5};
  return {ThresholdMode::local_rcut, 0.0};
}

std::string_view to_string(ThresholdMode m) {
  switch (m) {
    case ThresholdMode::cardinality:
      return "cardinality";
    case ThresholdMode::local_rcut:
      return "local-rcut";
    case ThresholdMode::fixed:
      return "fixed";
  }
  return "unknown";
}

std::string fingerprint_hex(std::uint64_t fp) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
  return buf;
}

void save_model(const ModelFile& m, std::ostream& out) {
  m.model.validate();
  const Matrix scalars(1, 3, std::vector<double>{m.power, m.threshold.value, m.model.alpha});
  Matrix scaler_min, scaler_range;
  std::vector<Blob> blobs = {{"scalars", &scalars},
                             {"references", &m.model.references},
                             {"coefficients", &m.model.coefficients},
                             {"train_labels", &m.model.train_labels}};
  if (m.method == Method::br_mlm) blobs.push_back({"projector", &m.projector});
  if (m.scaler) {
    scaler_min = Matrix(1, m.scaler->min.size(), m.scaler->min);
    scaler_range = Matrix(1, m.scaler->range.size(), m.scaler->range);
    blobs.push_back({"scaler_min", &scaler_min});
    blobs.push_back({"scaler_range", &scaler_range});
  }

  json j;
  j["format_version"] = kModelFormatVersion;
  j["method"] = to_string(m.method);
  j["power"] = number(m.power);
  j["threshold"] = {{"mode", to_string(m.threshold.mode)}, {"value", number(m.threshold.value)}};
  j["alpha"] = number(m.model.alpha);
  j["alpha_mode"] = m.alpha_auto ? "auto" : "fixed";
  j["scaling"] = m.scaler ? "minmax" : "off";
  j["dimensions"] = {{"references", m.model.num_references()},
                     {"features", m.model.num_features()},
                     {"targets", m.model.num_targets()},
                     {"labels", m.model.num_labels()}};
  j["label_names"] = m.model.label_names;
  j["feature_names"] = m.feature_names;
  j["dataset"] = {{"name", m.dataset_name}, {"fingerprint", fingerprint_hex(m.dataset_fingerprint)}};
  auto curve = json::array();
  for (const auto& p : m.lrl_curve) curve.push_back({number(p.exponent), number(p.power), number(p.lrl)});
  j["lrl_curve"] = curve;
  auto blob_list = json::array();
  for (const auto& b : blobs) blob_list.push_back({{"name", b.name}, {"rows", b.matrix->rows()}, {"cols", b.matrix->cols()}});
  j["blobs"] = blob_list;

  const std::string manifest = j.dump(1);
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, manifest.size());
  out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
  for (const auto& b : blobs) write_doubles(out, b.matrix->values());
  if (!out) throw DataError("failed to write model file");
}

void save_model(const ModelFile& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot create model file " + path.string());
  save_model(m, out);
}

ModelFile load_model(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not an mlmlm model file");
  }
  const std::uint64_t len = read_u64(in);
  if (len > kMaxManifest) throw DataError("model manifest length is implausible");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw DataError("model file truncated in manifest");

  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("model manifest is not valid JSON: ") + e.what());
  }

  ModelFile m;
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("model format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kModelFormatVersion) + ")");
    }
    m.method = parse_method(j.at("method").get<std::string>());
    const std::string mode = j.at("threshold").at("mode").get<std::string>();
    if (mode == "cardinality") m.threshold.mode = ThresholdMode::cardinality;
    else if (mode == "local-rcut") m.threshold.mode = ThresholdMode::local_rcut;
    else if (mode == "fixed") m.threshold.mode = ThresholdMode::fixed;
    else throw DataError("unknown threshold mode '" + mode + "' in model file");
    m.alpha_auto = j.at("alpha_mode").get<std::string>() == "auto";
    m.model.label_names = j.at("label_names").get<std::vector<std::string>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.dataset_name = j.at("dataset").at("name").get<std::string>();
    m.dataset_fingerprint = std::stoull(j.at("dataset").at("fingerprint").get<std::string>(), nullptr, 16);
    for (const auto& p : j.at("lrl_curve")) {
      auto get = [](const json& v) {
        return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
      };
      m.lrl_curve.push_back({get(p.at(0)), get(p.at(1)), get(p.at(2))});
    }

    Matrix scaler_min, scaler_range;
    bool have_scalars = false;
    for (const auto& b : j.at("blobs")) {
      const std::string name = b.at("name").get<std::string>();
      const auto rows = b.at("rows").get<std::size_t>();
      const auto cols = b.at("cols").get<std::size_t>();
      if (rows != 0 && cols > (kMaxManifest << 8) / rows) throw DataError("blob '" + name + "' is implausibly large");
      Matrix mat = read_matrix(in, rows, cols, name);
      if (name == "scalars") {
        if (mat.size() != 3) throw DataError("scalars blob must hold 3 values");
        m.power = mat.values()[0];
        m.threshold.value = mat.values()[1];
        m.model.alpha = mat.values()[2];
        have_scalars = true;
      } else if (name == "references") {
        m.model.references = std::move(mat);
      } else if (name == "coefficients") {
        m.model.coefficients = std::move(mat);
      } else if (name == "train_labels") {
        m.model.train_labels = std::move(mat);
      } else if (name == "projector") {
        m.projector = std::move(mat);
      } else if (name == "scaler_min") {
        scaler_min = std::move(mat);
      } else if (name == "scaler_range") {
        scaler_range = std::move(mat);
      } else {
        throw DataError("unknown blob '" + name + "' in model file");
      }
    }
    if (!have_scalars) throw DataError("model file has no scalars blob");
    if (!scaler_min.empty() || !scaler_range.empty()) {
      if (scaler_min.size() != scaler_range.size()) throw DataError("scaler blobs differ in size");
      m.scaler = MinMaxScaler{scaler_min.values(), scaler_range.values()};
    }

    const auto& dims = j.at("dimensions");
    if (dims.at("references").get<std::size_t>() != m.model.num_references() ||
        dims.at("features").get<std::size_t>() != m.model.num_features() ||
        dims.at("targets").get<std::size_t>() != m.model.num_targets() ||
        dims.at("labels").get<std::size_t>() != m.model.num_labels()) {
      throw DataError("model manifest dimensions disagree with blob sizes");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("model manifest is malformed: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw DataError("model manifest has a malformed fingerprint");
  }
  m.model.validate();
  if (m.method == Method::br_mlm &&
      (m.projector.rows() != m.model.num_references() || m.projector.cols() != m.model.num_targets())) {
    throw DataError("br-mlm model lacks a projector of matching shape");
  }
  return m;
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  return load_model(in);
}

Prediction predict(const ModelFile& m, std::span<const double> raw) {
  Vector scaled;
  std::span<const double> x = raw;
  if (m.scaler) {
    scaled = scale_row(*m.scaler, raw);
    x = scaled;
  }
  const bool rcut = m.threshold.mode == ThresholdMode::local_rcut;
  Prediction p;
  switch (m.method) {
    case Method::ml_mlm:
      return rcut ? ml_mlm_predict_local_rcut(m.model, m.power, x) : ml_mlm_predict(m.model, m.power, m.threshold.value, x);
    case Method::nn_mlm:
      p = nn_mlm_predict(m.model, x);
      break;
    case Method::lls_mlm:
      p = lls_mlm_predict(m.model, x);
      break;
    case Method::br_mlm:
      p = br_mlm_predict(LabelwiseModel{m.model, m.projector}, x);
      break;
  }
  if (m.threshold.mode == ThresholdMode::fixed) apply_threshold(p, m.threshold);
  return p;
}

std::vector<Prediction> predict_all(const ModelFile& m, const Matrix& x) {
  if (x.rows() > 0 && x.cols() != m.model.num_features() && !m.scaler) {
    throw DataError("data has " + std::to_string(x.cols()) + " features, model expects " +
                    std::to_string(m.model.num_features()));
  }
  std::vector<Prediction> out(x.rows());
  parallel_for(x.rows(), [&](std::size_t i) { out[i] = predict(m, x.row(i)); });
  return out;
}

}  // namespace mlmlm
