#include "mlmlm/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "mlmlm/errors.hpp"
#include "mlmlm/format.hpp"

namespace mlmlm {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool iequals_prefix(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] == '\\' && i + 2 < s.size()) ++i;
      out += s[i];
    }
    return out;
  }
  return std::string(s);
}

std::string at_line(std::size_t line) { return " (line " + std::to_string(line) + ")"; }

double parse_number(std::string_view token, std::size_t line) {
  token = trim(token);
  if (token.size() >= 2 && (token.front() == '\'' || token.front() == '"') && token.back() == token.front()) {
    token = token.substr(1, token.size() - 2);
  }
  if (token.empty() || token == "?") throw DataError("missing value" + at_line(line));
  if (token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw DataError("cannot parse number '" + std::string(token) + "'" + at_line(line));
  }
  if (!std::isfinite(v)) throw DataError("non-finite value '" + std::string(token) + "'" + at_line(line));
  return v;
}

// Splits on commas outside single or double quotes.
std::vector<std::string_view> split_fields(std::string_view s, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
    } else if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  out.push_back(s.substr(start));
  return out;
}

struct Attribute {
  std::string name;
  bool binary_nominal = false;
};

// "@attribute <name> <type>" with the name possibly quoted.
Attribute parse_attribute(std::string_view rest, std::size_t line) {
  rest = trim(rest);
  std::string name;
  std::string_view type;
  if (!rest.empty() && (rest.front() == '\'' || rest.front() == '"')) {
    const char q = rest.front();
    std::size_t i = 1;
    for (; i < rest.size(); ++i) {
      if (rest[i] == '\\') {
        ++i;
        continue;
      }
      if (rest[i] == q) break;
    }
    if (i >= rest.size()) throw DataError("unterminated attribute name" + at_line(line));
    name = unquote(rest.substr(0, i + 1));
    type = trim(rest.substr(i + 1));
  } else {
    const auto sp = rest.find_first_of(" \t");
    if (sp == std::string_view::npos) throw DataError("attribute without type" + at_line(line));
    name = std::string(rest.substr(0, sp));
    type = trim(rest.substr(sp));
  }

  if (!type.empty() && type.front() == '{') {
    const auto close = type.find('}');
    if (close == std::string_view::npos) throw DataError("unterminated nominal type" + at_line(line));
    std::set<std::string> values;
    for (auto v : split_fields(type.substr(1, close - 1))) values.insert(unquote(v));
    const bool ok = !values.empty() && std::all_of(values.begin(), values.end(),
                                                   [](const std::string& v) { return v == "0" || v == "1"; });
    if (!ok) throw DataError("nominal attribute '" + name + "' is not binary {0,1}" + at_line(line));
    return {name, true};
  }
  const std::string t = lower(type);
  if (t == "numeric" || t == "real" || t == "integer") return {name, false};
  throw DataError("unsupported type '" + std::string(type) + "' for attribute '" + name + "'" + at_line(line));
}

std::string relation_name(std::string_view rest) {
  std::string name = unquote(rest);
  const auto colon = name.find(':');
  if (colon != std::string::npos) name = name.substr(0, colon);
  return std::string(trim(name));
}

void check_label_values(const Matrix& y, const std::vector<std::size_t>& rows_line) {
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) {
      const double v = y(i, j);
      if (v != 0.0 && v != 1.0) {
        throw DataError("label value " + format_number(v) + " is not 0/1" +
                        (rows_line.empty() ? " (row " + std::to_string(i + 1) + ")" : at_line(rows_line[i])));
      }
    }
  }
}

std::string decode_entities(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    const auto semi = s.find(';', i);
    if (semi == std::string_view::npos) {
      out += s[i];
      continue;
    }
    const std::string_view ent = s.substr(i + 1, semi - i - 1);
    if (ent == "amp") out += '&';
    else if (ent == "lt") out += '<';
    else if (ent == "gt") out += '>';
    else if (ent == "quot") out += '"';
    else if (ent == "apos") out += '\'';
    else {
      out += s.substr(i, semi - i + 1);
    }
    i = semi;
  }
  return out;
}

std::vector<std::string> split_header(std::string_view line) {
  std::vector<std::string> out;
  for (auto f : split_fields(line)) out.push_back(unquote(f));
  return out;
}

// CSV body after the header row; returns the matrix and the column names.
Matrix parse_csv_body(std::string_view text, std::vector<std::string>& header, const char* what) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (!have_header) {
      header = split_header(t);
      have_header = true;
      continue;
    }
    const auto fields = split_fields(t);
    if (fields.size() != header.size()) {
      throw DataError(std::string(what) + ": expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()) + at_line(line_no));
    }
    for (auto f : fields) values.push_back(parse_number(f, line_no));
    ++rows;
  }
  if (!have_header) throw DataError(std::string(what) + ": missing header row");
  return Matrix(rows, header.size(), std::move(values));
}

void write_csv_matrix(std::ostream& out, const Matrix& m, const std::vector<std::string>& names) {
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j) out << ',';
    const bool quote = names[j].find_first_of(",'\" ") != std::string::npos;
    if (quote) {
      out << '"';
      for (char c : names[j]) {
        if (c == '"' || c == '\\') out << '\\';
        out << c;
      }
      out << '"';
    } else {
      out << names[j];
    }
  }
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_number(m(i, j));
    }
    out << '\n';
  }
}

std::string arff_name(const std::string& name) {
  std::string out = "'";
  for (char c : name) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  return out + "'";
}

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

}  // namespace

std::string_view to_string(SourceFormat f) {
  switch (f) {
    case SourceFormat::arff_dense:
      return "arff_dense";
    case SourceFormat::arff_sparse:
      return "arff_sparse";
    case SourceFormat::csv:
      return "csv";
  }
  return "unknown";
}

std::vector<std::string> parse_label_xml_text(std::string_view text) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = text.find("<label", pos)) != std::string_view::npos) {
    const auto end = text.find('>', pos);
    if (end == std::string_view::npos) throw DataError("label manifest: unterminated <label> element");
    const std::string_view tag = text.substr(pos, end - pos);
    pos = end;
    // skip <labels ...>
    if (tag.size() > 6 && !std::isspace(static_cast<unsigned char>(tag[6])) && tag[6] != '/') continue;
    const auto attr = tag.find("name");
    if (attr == std::string_view::npos) throw DataError("label manifest: <label> without name attribute");
    const auto eq = tag.find('=', attr);
    const auto open = tag.find_first_of("\"'", eq);
    if (eq == std::string_view::npos || open == std::string_view::npos) {
      throw DataError("label manifest: malformed name attribute");
    }
    const auto close = tag.find(tag[open], open + 1);
    if (close == std::string_view::npos) throw DataError("label manifest: unterminated name attribute");
    names.push_back(decode_entities(tag.substr(open + 1, close - open - 1)));
  }
  if (names.empty()) throw DataError("label manifest lists no labels");
  return names;
}

std::vector<std::string> parse_label_xml(const std::filesystem::path& path) {
  return parse_label_xml_text(read_file(path));
}

Dataset parse_arff_text(std::string_view text, const LabelSpec& spec, std::string fallback_name) {
  if (spec.names.has_value() == spec.last.has_value()) {
    throw UsageError("give either a label manifest or a trailing label count");
  }
  Dataset ds;
  ds.name = std::move(fallback_name);
  std::vector<Attribute> attrs;
  bool in_data = false;
  bool any_sparse = false;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> row_lines;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '%') continue;

    if (!in_data) {
      if (iequals_prefix(line, "@relation")) {
        const std::string name = relation_name(line.substr(9));
        if (!name.empty()) ds.name = name;
      } else if (iequals_prefix(line, "@attribute")) {
        attrs.push_back(parse_attribute(line.substr(10), line_no));
      } else if (iequals_prefix(line, "@data")) {
        in_data = true;
      } else {
        throw DataError("unexpected header line '" + std::string(line) + "'" + at_line(line_no));
      }
      continue;
    }

    std::vector<double> row(attrs.size(), 0.0);
    if (line.front() == '{') {
      any_sparse = true;
      const auto close = line.rfind('}');
      if (close == std::string_view::npos) throw DataError("unterminated sparse row" + at_line(line_no));
      const std::string_view body = trim(line.substr(1, close - 1));
      if (!body.empty()) {
        for (auto entry : split_fields(body)) {
          entry = trim(entry);
          const auto sp = entry.find_first_of(" \t");
          if (sp == std::string_view::npos) throw DataError("malformed sparse entry" + at_line(line_no));
          std::size_t idx = 0;
          const auto idx_tok = entry.substr(0, sp);
          const auto res = std::from_chars(idx_tok.data(), idx_tok.data() + idx_tok.size(), idx);
          if (res.ec != std::errc() || res.ptr != idx_tok.data() + idx_tok.size() || idx >= attrs.size()) {
            throw DataError("bad sparse index '" + std::string(idx_tok) + "'" + at_line(line_no));
          }
          row[idx] = parse_number(entry.substr(sp + 1), line_no);
        }
      }
    } else {
      const auto fields = split_fields(line);
      if (fields.size() != attrs.size()) {
        throw DataError("expected " + std::to_string(attrs.size()) + " values, got " +
                        std::to_string(fields.size()) + at_line(line_no));
      }
      for (std::size_t j = 0; j < fields.size(); ++j) row[j] = parse_number(fields[j], line_no);
    }
    for (std::size_t j = 0; j < attrs.size(); ++j) {
      if (attrs[j].binary_nominal && row[j] != 0.0 && row[j] != 1.0) {
        throw DataError("value of binary attribute '" + attrs[j].name + "' is not 0/1" + at_line(line_no));
      }
    }
    rows.push_back(std::move(row));
    row_lines.push_back(line_no);
  }
  if (!in_data) throw DataError("ARFF has no @data section");
  if (attrs.empty()) throw DataError("ARFF declares no attributes");

  std::vector<bool> is_label(attrs.size(), false);
  if (spec.names) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < attrs.size(); ++j) index.emplace(attrs[j].name, j);
    for (const auto& name : *spec.names) {
      const auto it = index.find(name);
      if (it == index.end()) throw DataError("label '" + name + "' from the manifest is not an ARFF attribute");
      is_label[it->second] = true;
    }
  } else {
    if (*spec.last == 0 || *spec.last >= attrs.size()) {
      throw DataError("trailing label count " + std::to_string(*spec.last) + " does not fit " +
                      std::to_string(attrs.size()) + " attributes");
    }
    for (std::size_t j = attrs.size() - *spec.last; j < attrs.size(); ++j) is_label[j] = true;
  }

  std::vector<std::size_t> feat_cols, label_cols;
  for (std::size_t j = 0; j < attrs.size(); ++j) (is_label[j] ? label_cols : feat_cols).push_back(j);
  if (feat_cols.empty()) throw DataError("ARFF has no feature attributes");

  const std::size_t n = rows.size();
  ds.features = Matrix(n, feat_cols.size());
  ds.labels = Matrix(n, label_cols.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < feat_cols.size(); ++c) ds.features(i, c) = rows[i][feat_cols[c]];
    for (std::size_t c = 0; c < label_cols.size(); ++c) ds.labels(i, c) = rows[i][label_cols[c]];
  }
  for (auto j : feat_cols) ds.feature_names.push_back(attrs[j].name);
  for (auto j : label_cols) ds.label_names.push_back(attrs[j].name);
  check_label_values(ds.labels, row_lines);
  ds.source_format = any_sparse ? SourceFormat::arff_sparse : SourceFormat::arff_dense;
  return ds;
}

Dataset parse_arff(const std::filesystem::path& path, const LabelSpec& labels) {
  return parse_arff_text(read_file(path), labels, path.stem().string());
}

Dataset parse_csv_text(std::string_view features_text, std::string_view labels_text, std::string name) {
  Dataset ds;
  ds.name = std::move(name);
  ds.source_format = SourceFormat::csv;
  ds.features = parse_csv_body(features_text, ds.feature_names, "features CSV");
  ds.labels = parse_csv_body(labels_text, ds.label_names, "labels CSV");
  if (ds.features.rows() != ds.labels.rows()) {
    throw DataError("features CSV has " + std::to_string(ds.features.rows()) + " rows but labels CSV has " +
                    std::to_string(ds.labels.rows()));
  }
  if (ds.feature_names.empty() || ds.label_names.empty()) throw DataError("CSV pair needs features and labels");
  check_label_values(ds.labels, {});
  return ds;
}

Dataset parse_csv(const std::filesystem::path& features_path, const std::filesystem::path& labels_path) {
  return parse_csv_text(read_file(features_path), read_file(labels_path), features_path.stem().string());
}

Dataset parse_features_csv(const std::filesystem::path& features_path) {
  Dataset ds;
  ds.name = features_path.stem().string();
  ds.source_format = SourceFormat::csv;
  ds.features = parse_csv_body(read_file(features_path), ds.feature_names, "features CSV");
  ds.labels = Matrix(ds.features.rows(), 0);
  return ds;
}

void write_csv(const Dataset& ds, std::ostream& features_out, std::ostream& labels_out) {
  write_csv_matrix(features_out, ds.features, ds.feature_names);
  write_csv_matrix(labels_out, ds.labels, ds.label_names);
}

void write_csv(const Dataset& ds, const std::filesystem::path& features_path,
               const std::filesystem::path& labels_path) {
  std::ofstream f(features_path, std::ios::binary);
  std::ofstream l(labels_path, std::ios::binary);
  if (!f || !l) throw DataError("cannot write CSV pair " + features_path.string());
  write_csv(ds, f, l);
}

void write_arff(const Dataset& ds, std::ostream& out) {
  out << "@relation " << arff_name(ds.name) << "\n\n";
  for (const auto& n : ds.feature_names) out << "@attribute " << arff_name(n) << " numeric\n";
  for (const auto& n : ds.label_names) out << "@attribute " << arff_name(n) << " {0,1}\n";
  out << "\n@data\n";
  for (std::size_t i = 0; i < ds.num_instances(); ++i) {
    for (std::size_t j = 0; j < ds.num_features(); ++j) out << (j ? "," : "") << format_number(ds.features(i, j));
    for (std::size_t j = 0; j < ds.num_labels(); ++j) out << ',' << format_number(ds.labels(i, j));
    out << '\n';
  }
}

Diagnostics validate(const Dataset& ds) {
  Diagnostics d;
  std::set<std::vector<double>> seen;
  for (std::size_t i = 0; i < ds.num_instances(); ++i) {
    const auto r = ds.features.row(i);
    if (!seen.emplace(r.begin(), r.end()).second) ++d.duplicate_rows;
    double ones = 0.0;
    for (double v : ds.labels.row(i)) ones += v;
    if (ones == 0.0) ++d.empty_label_rows;
    if (ds.num_labels() > 0 && ones == static_cast<double>(ds.num_labels())) ++d.full_label_rows;
  }
  for (std::size_t j = 0; j < ds.num_features(); ++j) {
    bool constant = true;
    for (std::size_t i = 1; i < ds.num_instances() && constant; ++i) {
      constant = ds.features(i, j) == ds.features(0, j);
    }
    if (constant) d.constant_features.push_back(j);
  }
  return d;
}

void check_schemas(const Dataset& train, const Dataset& test) {
  if (train.feature_names != test.feature_names) throw DataError("train and test feature schemas differ");
  if (train.label_names != test.label_names) throw DataError("train and test label schemas differ");
}

std::uint64_t fingerprint(const Dataset& ds) {
  std::uint64_t h = 14695981039346656037ull;
  const std::uint64_t dims[3] = {ds.num_instances(), ds.num_features(), ds.num_labels()};
  fnv(h, dims, sizeof(dims));
  for (const auto* names : {&ds.feature_names, &ds.label_names}) {
    for (const auto& n : *names) {
      fnv(h, n.data(), n.size());
      fnv(h, "\0", 1);
    }
  }
  fnv(h, ds.features.data(), ds.features.size() * sizeof(double));
  fnv(h, ds.labels.data(), ds.labels.size() * sizeof(double));
  return h;
}

MinMaxScaler MinMaxScaler::fit(const Matrix& x) {
  MinMaxScaler s;
  s.min.assign(x.cols(), 0.0);
  s.range.assign(x.cols(), 0.0);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double lo = x.rows() ? x(0, j) : 0.0;
    double hi = lo;
    for (std::size_t i = 1; i < x.rows(); ++i) {
      lo = std::min(lo, x(i, j));
      hi = std::max(hi, x(i, j));
    }
    s.min[j] = lo;
    s.range[j] = hi - lo;
  }
  return s;
}

Matrix MinMaxScaler::transform(const Matrix& x) const {
  if (x.cols() != min.size()) throw DataError("scaler was fitted on a different feature count");
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      out(i, j) = range[j] > 0.0 ? (x(i, j) - min[j]) / range[j] : 0.0;
    }
  }
  return out;
}

}  // namespace mlmlm
