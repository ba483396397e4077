#pragma once

// Trained-model container and the method dispatch used by the CLI.
//
// File layout: the 8 bytes "MLMLMOD\n", a little-endian uint64 manifest
// length, the JSON manifest, then the blobs listed in the manifest in that
// order as row-major little-endian float64 arrays. Scalars (P, t, alpha)
// live in the "scalars" blob so reloading is bit-exact; the manifest copies
// them for readability only.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlmlm/data.hpp"
#include "mlmlm/models.hpp"

namespace mlmlm {

inline constexpr int kModelFormatVersion = 1;

enum class Method { ml_mlm, nn_mlm, lls_mlm, br_mlm };

Method parse_method(std::string_view s);
std::string_view to_string(Method m);

enum class ThresholdMode { cardinality, local_rcut, fixed };

struct ThresholdSpec {
  ThresholdMode mode = ThresholdMode::cardinality;
  double value = 0.5;  // the tuned or fixed t; unused for local RCut
};

/// ml-mlm thresholds by cardinality, the other three by local RCut.
ThresholdSpec default_threshold(Method m);
std::string_view to_string(ThresholdMode m);

struct ModelFile {
  Method method = Method::ml_mlm;
  DistanceModel model;
  bool alpha_auto = true;
  double power = 1.0;
  ThresholdSpec threshold;
  Matrix projector;  // br-mlm only
  std::vector<LrlPoint> lrl_curve;
  std::vector<std::string> feature_names;
  std::optional<MinMaxScaler> scaler;
  std::string dataset_name;
  std::uint64_t dataset_fingerprint = 0;
};

void save_model(const ModelFile& m, std::ostream& out);
void save_model(const ModelFile& m, const std::filesystem::path& path);
ModelFile load_model(std::istream& in);
ModelFile load_model(const std::filesystem::path& path);

/// Prediction for one raw (unscaled) feature row.
Prediction predict(const ModelFile& m, std::span<const double> x);

/// One prediction per row, in row order.
std::vector<Prediction> predict_all(const ModelFile& m, const Matrix& x);

std::string fingerprint_hex(std::uint64_t fp);

}  // namespace mlmlm
