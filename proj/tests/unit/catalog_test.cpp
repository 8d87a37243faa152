#include <gtest/gtest.h>

#include <random>

#include "hmdap/catalog.hpp"
#include "hmdap/csv.hpp"
#include "hmdap/error.hpp"
#include "oracles.hpp"

using namespace hmdap;
using hmdap::testing::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an hmdap::Error";
  return ErrorCode::Internal;
}

}  // namespace

TEST(InferSchema, HeaderAndNarrowing) {
  TempDir dir;
  const auto p = dir.write("a.csv", "a,b\n1,x\n2,y\n");
  EXPECT_EQ(infer_schema(p, ',', true), (Schema{{"a", ColumnType::Int64}, {"b", ColumnType::Utf8}}));
}

TEST(InferSchema, MixedNumericsWidenToFloat) {
  TempDir dir;
  const auto p = dir.write("a.csv", "1.5\n2\n");
  EXPECT_EQ(infer_schema(p, ',', false), (Schema{{"col0", ColumnType::Float64}}));
}

TEST(InferSchema, BoolAndEmptyColumns) {
  TempDir dir;
  const auto p = dir.write("a.csv", "f,n,e\ntrue,1,\nfalse,,\n");
  EXPECT_EQ(infer_schema(p, ',', true),
            (Schema{{"f", ColumnType::Bool}, {"n", ColumnType::Int64}, {"e", ColumnType::Utf8}}));
}

TEST(InferSchema, RaggedRowNamesLine) {
  TempDir dir;
  const auto p = dir.write("a.csv", "1,2\n3\n");
  try {
    infer_schema(p, ',', false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaInference);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(InferSchema, MissingFileIsIoError) {
  EXPECT_EQ(code_of([] { infer_schema("/nonexistent/file.csv", ',', true); }), ErrorCode::Io);
}

TEST(InferSchema, SampleLimitsInference) {
  TempDir dir;
  const auto p = dir.write("a.csv", "v\n1\n2\nhello\n");
  EXPECT_EQ(infer_schema(p, ',', true, 2), (Schema{{"v", ColumnType::Int64}}));
  EXPECT_EQ(infer_schema(p, ',', true, 3), (Schema{{"v", ColumnType::Utf8}}));
}

TEST(Catalog, RegisterListAndConflict) {
  TempDir dir;
  dir.write("trips.csv", "id,fare\n1,2.5\n");
  Catalog c(dir.path());
  c.load_file("trips", "trips.csv");
  const auto tables = c.list_tables();
  ASSERT_EQ(tables.size(), 1u);
  EXPECT_EQ(tables[0].table_name, "trips");
  EXPECT_EQ(code_of([&] { c.load_file("trips", "trips.csv"); }), ErrorCode::Conflict);
}

TEST(Catalog, ListSortedByName) {
  TempDir dir;
  dir.write("x.csv", "v\n1\n");
  Catalog c(dir.path());
  EXPECT_TRUE(c.list_tables().empty());
  c.load_file("b", "x.csv");
  c.load_file("a", "x.csv");
  const auto tables = c.list_tables();
  ASSERT_EQ(tables.size(), 2u);
  EXPECT_EQ(tables[0].table_name, "a");
  EXPECT_EQ(tables[1].table_name, "b");
  EXPECT_EQ(c.list_tables(), tables);
}

TEST(Catalog, ScanUsesEntrySchemaAndKeepsOrder) {
  TempDir dir;
  dir.write("t.csv", "id,fare,name\n3,1.5,a\n1,,b\n2,4,\n");
  Catalog c(dir.path());
  const auto e = c.load_file("t", "t.csv");
  const Relation r = c.scan("t");
  EXPECT_EQ(r.schema(), e.schema);
  ASSERT_EQ(r.row_count(), 3u);
  const auto rows = r.rows();
  EXPECT_EQ(rows[0][0], Value(std::int64_t{3}));
  EXPECT_TRUE(rows[1][1].is_null());
  EXPECT_EQ(rows[2][1], Value(4.0));
  EXPECT_TRUE(rows[2][2].is_null());
}

TEST(Catalog, ScanErrorNamesLine) {
  TempDir dir;
  dir.write("t.csv", "v\n1\n2\n");
  Catalog c(dir.path());
  c.load_file("t", "t.csv");
  dir.write("t.csv", "v\n1\nabc\n");
  try {
    c.scan("t");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Scan);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Catalog, UnknownTable) {
  Catalog c;
  EXPECT_EQ(code_of([&] { c.scan("nope"); }), ErrorCode::NotFound);
}

TEST(Catalog, ManifestRoundTripAndFieldNames) {
  TempDir dir;
  dir.write("t.tsv", "a\tb\n1\tx\n");
  {
    Catalog c(dir.path());
    c.load_file("t", "t.tsv", '\t');
    c.save();
  }
  const auto text = read_text_file(dir.path() / "catalog.json");
  for (const char* field : {"table_name", "source_path", "format", "delimiter", "has_header", "columns"}) {
    EXPECT_NE(text.find(std::string("\"") + field + "\""), std::string::npos) << field;
  }
  Catalog reloaded(dir.path());
  const auto e = reloaded.entry("t");
  EXPECT_EQ(e.delimiter, '\t');
  EXPECT_EQ(reloaded.scan("t").row_count(), 1u);
  EXPECT_EQ(manifest_from_json(manifest_to_json(reloaded.list_tables())), reloaded.list_tables());
}

TEST(Catalog, EmptySchemaRejected) {
  Catalog c;
  CatalogEntry e;
  e.table_name = "t";
  EXPECT_EQ(code_of([&] { c.register_table(e); }), ErrorCode::InvalidArgument);
}

// Property: scan yields one row per record, and the inferred schema always
// scans the file it was inferred from.
TEST(CatalogProperty, InferredSchemaScansAndCountsRecords) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> cells = {"1", "-7", "2.5", "true", "false", "", "x y", "\"q,uoted\"", "\"a\"\"b\""};
  for (int trial = 0; trial < 60; ++trial) {
    TempDir dir;
    const auto cols = std::uniform_int_distribution<int>(1, 5)(rng);
    const auto rows = std::uniform_int_distribution<int>(0, 30)(rng);
    std::string text;
    for (int c = 0; c < cols; ++c) text += (c ? "," : "") + std::string("c") + std::to_string(c);
    text += "\n";
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        // A lone empty cell would be a blank line, which the reader skips.
        std::string cell;
        do {
          cell = cells[std::uniform_int_distribution<std::size_t>(0, cells.size() - 1)(rng)];
        } while (cols == 1 && cell.empty());
        text += (c ? "," : "") + cell;
      }
      text += r % 2 ? "\r\n" : "\n";
    }
    dir.write("t.csv", text);
    Catalog c(dir.path());
    const auto e = c.load_file("t", "t.csv");
    EXPECT_EQ(infer_schema(dir.path() / "t.csv", ',', true), e.schema);
    const Relation r = c.scan("t");
    EXPECT_EQ(static_cast<int>(r.row_count()), rows) << text;
    r.validate();
  }
}

TEST(Csv, WriteQuotesAndNulls) {
  const Relation r(Schema{{"a", ColumnType::Int64}, {"b", ColumnType::Utf8}},
                   std::vector<Row>{{Value(std::int64_t{1}), Value("x,y")}, {Value::null(), Value("say \"hi\"")}});
  EXPECT_EQ(csv::write(r), "a,b\r\n1,\"x,y\"\r\n,\"say \"\"hi\"\"\"\r\n");
}

TEST(Csv, TwoByTwoIsThreeLines) {
  const Relation r(Schema{{"a", ColumnType::Int64}, {"b", ColumnType::Float64}},
                   std::vector<Row>{{Value(std::int64_t{1}), Value(0.5)}, {Value(std::int64_t{2}), Value::null()}});
  const auto text = csv::write(r);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_EQ(text, csv::write(r));
}

TEST(Csv, ParseRoundTripsWrite) {
  const Relation r(Schema{{"s", ColumnType::Utf8}, {"n", ColumnType::Int64}},
                   std::vector<Row>{{Value("multi\nline"), Value(1)}, {Value(""), Value(2)}, {Value("plain"), Value(3)},
                                    {Value::null(), Value(4)}});
  const auto records = csv::parse(csv::write(r), ',');
  ASSERT_EQ(records.size(), 5u);
  EXPECT_EQ(records[1].fields[0].text, "multi\nline");
  EXPECT_TRUE(records[2].fields[0].quoted);
  EXPECT_EQ(records[2].fields[0].text, "");
  EXPECT_FALSE(records[4].fields[0].quoted);
  EXPECT_EQ(records[4].fields[0].text, "");
}
