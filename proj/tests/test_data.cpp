#include <doctest.h>

#include <filesystem>
#include <functional>
#include <random>
#include <sstream>

#include "mlmlm/data.hpp"
#include "mlmlm/errors.hpp"
#include "oracles.hpp"

using namespace mlmlm;

namespace {

const std::filesystem::path kFixtures = MLMLM_FIXTURES;

const char* kHeader =
    "@relation t\n"
    "@attribute a numeric\n"
    "@attribute b numeric\n"
    "@attribute y {0,1}\n"
    "@data\n";

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("dense ARFF with an XML label manifest") {
    const Dataset ds = parse_arff(kFixtures / "tiny.arff", LabelSpec::from_names(parse_label_xml(kFixtures / "tiny.xml")));
    CHECK(ds.name == "tiny");
    CHECK(ds.source_format == SourceFormat::arff_dense);
    CHECK(ds.feature_names == std::vector<std::string>{"f1", "f 2"});
    CHECK(ds.label_names == std::vector<std::string>{"amazed", "happy"});
    CHECK(ds.features == Matrix::from_rows({{0.5, 1.25}, {-2, 0}, {0.3, 4}}));
    CHECK(ds.labels == Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}}));
  }

  TEST_CASE("trailing label count selects the same columns") {
    const Dataset a = parse_arff(kFixtures / "tiny.arff", LabelSpec::trailing(2));
    const Dataset b = parse_arff(kFixtures / "tiny.arff", LabelSpec::from_names({"amazed", "happy"}));
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
  }

  TEST_CASE("sparse ARFF rows expand to dense") {
    const Dataset ds = parse_arff(kFixtures / "sparse.arff", LabelSpec::trailing(2));
    CHECK(ds.source_format == SourceFormat::arff_sparse);
    CHECK(ds.features == Matrix::from_rows({{1, 0}, {0, 2.5}, {0, 0}}));
    CHECK(ds.labels == Matrix::from_rows({{0, 1}, {1, 0}, {0, 0}}));
  }

  TEST_CASE("label manifests keep document order and decode entities") {
    const auto names = parse_label_xml_text(
        "<labels><labels name=\"group\"><label name=\"a&amp;b\"/></labels><label name='c'></label></labels>");
    CHECK(names == std::vector<std::string>{"a&b", "c"});
    CHECK_THROWS_AS(parse_label_xml_text("<labels></labels>"), DataError);
  }

  TEST_CASE("ARFF errors name the offending line") {
    const std::string bad_type = "@relation t\n@attribute a string\n@data\n";
    CHECK(message_of([&] { parse_arff_text(bad_type, LabelSpec::trailing(1)); }).find("line 2") != std::string::npos);
    CHECK_THROWS_AS(parse_arff_text(bad_type, LabelSpec::trailing(1)), DataError);

    const std::string nominal = "@relation t\n@attribute a {red,blue}\n@attribute y {0,1}\n@data\nred,1\n";
    CHECK_THROWS_AS(parse_arff_text(nominal, LabelSpec::trailing(1)), DataError);

    const std::string missing = std::string(kHeader) + "1,?,0\n";
    const std::string msg = message_of([&] { parse_arff_text(missing, LabelSpec::trailing(1)); });
    CHECK(msg.find("missing") != std::string::npos);
    CHECK(msg.find("line 6") != std::string::npos);

    CHECK_THROWS_AS(parse_arff_text(std::string(kHeader) + "1,nan,0\n", LabelSpec::trailing(1)), DataError);
    CHECK_THROWS_AS(parse_arff_text(std::string(kHeader) + "1,2\n", LabelSpec::trailing(1)), DataError);
    CHECK_THROWS_AS(parse_arff_text(std::string(kHeader) + "1,2,0\n", LabelSpec::from_names({"nope"})), DataError);
  }

  TEST_CASE("CSV pair") {
    const Dataset ds = parse_csv(kFixtures / "pair_features.csv", kFixtures / "pair_labels.csv");
    CHECK(ds.features == Matrix::from_rows({{1, 2}, {3, 4}}));
    CHECK(ds.labels == Matrix::from_rows({{1}, {0}}));
    CHECK(ds.label_names == std::vector<std::string>{"y"});
    CHECK_THROWS_AS(parse_csv_text("a,b\n1,2\n3,4\n", "y\n1\n"), DataError);
    CHECK_THROWS_AS(parse_csv_text("a\n1\n", "y\n2\n"), DataError);
  }

  TEST_CASE("features-only CSV has no label columns") {
    const Dataset ds = parse_features_csv(kFixtures / "pair_features.csv");
    CHECK(ds.num_instances() == 2);
    CHECK(ds.num_labels() == 0);
  }

  TEST_CASE("CSV export then import is bit-exact") {
    std::mt19937_64 rng(61);
    Dataset ds;
    ds.name = "rt";
    ds.features = oracle::from_grid(oracle::random_grid(rng, 25, 4, -1e3, 1e3));
    ds.features(0, 0) = 1e-300;
    ds.features(1, 1) = -0.1;
    ds.labels = oracle::from_grid(oracle::random_labels(rng, 25, 3));
    ds.feature_names = {"a", "b", "c", "d"};
    ds.label_names = {"p", "q", "r"};
    std::ostringstream f, l;
    write_csv(ds, f, l);
    const Dataset back = parse_csv_text(f.str(), l.str());
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
    CHECK(back.feature_names == ds.feature_names);
    CHECK(back.label_names == ds.label_names);
  }

  TEST_CASE("ARFF export then import preserves values") {
    const Dataset ds = parse_arff(kFixtures / "tiny.arff", LabelSpec::trailing(2));
    std::ostringstream out;
    write_arff(ds, out);
    const Dataset back = parse_arff_text(out.str(), LabelSpec::from_names(ds.label_names));
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
    CHECK(back.feature_names == ds.feature_names);
  }

  TEST_CASE("diagnostics") {
    Dataset ds = parse_arff(kFixtures / "tiny.arff", LabelSpec::trailing(2));
    CHECK(validate(ds).clean());
    ds.features = Matrix::from_rows({{1, 5}, {2, 5}, {1, 5}});
    ds.labels = Matrix::from_rows({{0, 0}, {1, 1}, {1, 0}});
    const Diagnostics d = validate(ds);
    CHECK(d.duplicate_rows == 1);
    CHECK(d.empty_label_rows == 1);
    CHECK(d.full_label_rows == 1);
    CHECK(d.constant_features == std::vector<std::size_t>{1});
  }

  TEST_CASE("schema checks and fingerprints") {
    const Dataset a = parse_arff(kFixtures / "tiny.arff", LabelSpec::trailing(2));
    Dataset b = a;
    CHECK_NOTHROW(check_schemas(a, b));
    CHECK(fingerprint(a) == fingerprint(b));
    b.features(0, 0) = 0.25;
    CHECK(fingerprint(a) != fingerprint(b));
    b.label_names[0] = "other";
    CHECK_THROWS_AS(check_schemas(a, b), DataError);
  }

  TEST_CASE("min-max scaling") {
    const Matrix x = Matrix::from_rows({{0, 7, -1}, {10, 7, 1}});
    const MinMaxScaler s = MinMaxScaler::fit(x);
    CHECK(s.transform(x) == Matrix::from_rows({{0, 0, 0}, {1, 0, 1}}));
    CHECK(s.transform(Matrix::from_rows({{5, 9, 0}})) == Matrix::from_rows({{0.5, 0, 0.5}}));
    CHECK_THROWS_AS(s.transform(Matrix(1, 2)), DataError);
  }
}
