#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include <xlsql/dataset.hpp>

#include "support.hpp"

using namespace xlsql;
using xlsql::testing::data_path;
using xlsql::testing::fixture_schemas;
using nlohmann::json;

namespace
{
json tiny_schema_json()
{
    return json::parse(R"({
      "db_id": "tiny",
      "table_names": ["owner", "pet"],
      "table_names_original": ["Owner", "Pet"],
      "column_names": [[-1, "*"], [0, "owner id"], [0, "name"], [1, "pet id"], [1, "owner id"], [1, "kind"]],
      "column_names_original": [[-1, "*"], [0, "OwnerId"], [0, "Name"], [1, "PetId"], [1, "OwnerId"], [1, "Kind"]],
      "column_types": ["text", "number", "text", "number", "number", "text"],
      "primary_keys": [1, 3],
      "foreign_keys": [[4, 1]]
    })");
}

std::vector<Example> load(const std::string& name)
{
    return load_examples(data_path(name), fixture_schemas());
}
} // namespace

TEST(Schema, HandBuiltFixtureCounts)
{
    const Schema s = schema_from_json(tiny_schema_json());
    EXPECT_EQ(s.db_id, "tiny");
    ASSERT_EQ(s.tables.size(), 2u);
    ASSERT_EQ(s.columns.size(), 6u);
    EXPECT_TRUE(s.columns[0].is_all_columns());
    EXPECT_EQ(s.tables[0].column_indices, (std::vector<int>{1, 2}));
    EXPECT_EQ(s.tables[1].column_indices, (std::vector<int>{3, 4, 5}));
    EXPECT_EQ(s.columns[4].name_original, "OwnerId");
    EXPECT_EQ(s.columns[2].type, ColumnType::text);
    EXPECT_EQ(s.primary_keys, (std::vector<int>{1, 3}));
    ASSERT_EQ(s.foreign_keys.size(), 1u);
    EXPECT_EQ(s.foreign_keys[0].column, 4);
    EXPECT_EQ(s.foreign_keys[0].referenced, 1);
}

TEST(Schema, RoundTripThroughJson)
{
    for (const auto& schema : fixture_schemas())
        EXPECT_EQ(schema_from_json(to_json(schema)), schema) << schema.db_id;
}

TEST(Schema, CompositePrimaryKeysAreFlattened)
{
    auto doc = tiny_schema_json();
    doc["primary_keys"] = json::parse("[1, [3, 4]]");
    EXPECT_EQ(schema_from_json(doc).primary_keys, (std::vector<int>{1, 3, 4}));
}

TEST(Schema, RejectsBrokenInvariants)
{
    auto misplaced_star = tiny_schema_json();
    misplaced_star["column_names"][2] = json::parse(R"([-1, "*"])");
    misplaced_star["column_names_original"][2] = json::parse(R"([-1, "*"])");
    EXPECT_THROW(schema_from_json(misplaced_star), ValidationError);

    auto bad_table = tiny_schema_json();
    bad_table["column_names"][5] = json::parse(R"([7, "kind"])");
    bad_table["column_names_original"][5] = json::parse(R"([7, "Kind"])");
    EXPECT_THROW(schema_from_json(bad_table), ValidationError);

    auto empty_table = tiny_schema_json();
    empty_table["table_names"].push_back("ghost");
    empty_table["table_names_original"].push_back("Ghost");
    EXPECT_THROW(schema_from_json(empty_table), ValidationError);

    auto key_on_star = tiny_schema_json();
    key_on_star["foreign_keys"] = json::parse("[[0, 1]]");
    EXPECT_THROW(schema_from_json(key_on_star), ValidationError);

    auto key_out_of_range = tiny_schema_json();
    key_out_of_range["primary_keys"] = json::parse("[1, 99]");
    EXPECT_THROW(schema_from_json(key_out_of_range), ValidationError);

    auto mismatched = tiny_schema_json();
    mismatched["column_names_original"][5] = json::parse(R"([0, "Kind"])");
    EXPECT_THROW(schema_from_json(mismatched), ParseError);
}

TEST(Schema, MalformedRecordNamesTheRecord)
{
    auto doc = json::array({tiny_schema_json(), tiny_schema_json()});
    doc[1]["db_id"] = "second";
    doc[1]["column_types"][1] = "blob";
    try
    {
        parse_schemas(doc);
        FAIL() << "expected a parse error";
    }
    catch (const ParseError& e)
    {
        EXPECT_NE(std::string(e.what()).find("second"), std::string::npos) << e.what();
    }
}

TEST(SchemaSet, DuplicateDbIdIsAValidationError)
{
    auto doc = json::array({tiny_schema_json(), tiny_schema_json()});
    EXPECT_THROW(parse_schemas(doc), ValidationError);
}

TEST(SchemaSet, EmptyListGivesNoSchemas)
{
    EXPECT_TRUE(parse_schemas(json::array()).empty());
}

TEST(SchemaSet, FixtureFileKeepsFileOrder)
{
    const auto& set = fixture_schemas();
    ASSERT_EQ(set.size(), 3u);
    EXPECT_EQ(set.schemas()[0].db_id, "manufactory_1");
    EXPECT_EQ(set.schemas()[1].db_id, "concert_singer");
    EXPECT_EQ(set.schemas()[2].db_id, "retail");
    EXPECT_EQ(set.find("nope"), nullptr);
}

TEST(Examples, TokensComeFromTheFileWhenPresent)
{
    auto doc = json::parse(R"([{"db_id": "retail", "question": "How many?", "question_toks": ["How", "many", "?"],
                                "query": "SELECT count(*) FROM customers"}])");
    const auto examples = parse_examples(doc, fixture_schemas());
    EXPECT_EQ(examples[0].question_tokens, (std::vector<std::string>{"How", "many", "?"}));
}

TEST(Examples, TokenizedWhenTokensAreMissing)
{
    const auto examples = load("ar_test.json");
    ASSERT_EQ(examples.size(), 10u);
    EXPECT_EQ(examples[0].question_tokens, (std::vector<std::string>{"احسب", "عدد", "المنتجات", "."}));
}

TEST(Examples, UnknownDbIdReportsPositionAndId)
{
    auto doc = json::parse(R"([{"db_id": "retail", "question": "q", "query": "SELECT 1"},
                               {"db_id": "missing_db", "question": "q", "query": "SELECT 1"}])");
    try
    {
        parse_examples(doc, fixture_schemas());
        FAIL() << "expected a validation error";
    }
    catch (const ValidationError& e)
    {
        const std::string message = e.what();
        EXPECT_NE(message.find("missing_db"), std::string::npos);
        EXPECT_NE(message.find("example 1"), std::string::npos);
    }
}

TEST(Examples, QuestionWithoutTokensIsRejected)
{
    auto doc = json::parse(R"([{"db_id": "retail", "question": "   ", "query": "SELECT 1"}])");
    EXPECT_THROW(parse_examples(doc, fixture_schemas()), ValidationError);
}

TEST(Examples, EmptyFileIsAnEmptyCorpus)
{
    EXPECT_TRUE(load("empty.json").empty());
    EXPECT_TRUE(parse_examples(json::array(), fixture_schemas()).empty());
}

TEST(CorpusStats, HandCountedFixtureSplits)
{
    const auto train = load("ar_train.json");
    const auto test = load("ar_test.json");
    auto all = train;
    all.insert(all.end(), test.begin(), test.end());

    // Train: 7 questions, two spellings of one query, concert_singer (4 tables) and retail (2).
    EXPECT_EQ(corpus_stats(train, fixture_schemas()), (CorpusStats{7, 6, 2, 3.0}));
    EXPECT_EQ(corpus_stats(test, fixture_schemas()), (CorpusStats{10, 10, 1, 2.0}));
    const auto s = corpus_stats(all, fixture_schemas());
    EXPECT_EQ(s.n_questions, 17u);
    EXPECT_EQ(s.n_distinct_sql, 16u);
    EXPECT_EQ(s.n_databases, 3u);
    EXPECT_NEAR(s.avg_tables_per_db, 8.0 / 3.0, 1e-12);
}

TEST(CorpusStats, SingleExample)
{
    const auto test = load("ar_test.json");
    const std::vector<Example> one{test.front()};
    EXPECT_EQ(corpus_stats(one, fixture_schemas()), (CorpusStats{1, 1, 1, 2.0}));
}

TEST(CorpusStats, EmptyCorpusIsAllZero)
{
    EXPECT_EQ(corpus_stats({}, fixture_schemas()), CorpusStats{});
}

TEST(CorpusStats, DistinctSqlIgnoresCaseAndSpacingOutsideLiterals)
{
    EXPECT_EQ(normalize_sql_text("SELECT  name\nFROM T WHERE x = 'Ab  C'"), "select name from t where x = 'Ab  C'");
    EXPECT_NE(normalize_sql_text("select a from t where x = 'A'"), normalize_sql_text("select a from t where x = 'a'"));
}

TEST(CorpusStats, PartitionProperties)
{
    auto all = load("ar_train.json");
    const auto test = load("ar_test.json");
    all.insert(all.end(), test.begin(), test.end());
    const auto whole = corpus_stats(all, fixture_schemas());
    std::mt19937 rng(3);
    for (int round = 0; round < 200; ++round)
    {
        std::shuffle(all.begin(), all.end(), rng);
        const auto cut = static_cast<std::ptrdiff_t>(rng() % (all.size() + 1));
        const std::vector<Example> a(all.begin(), all.begin() + cut);
        const std::vector<Example> b(all.begin() + cut, all.end());
        const auto sa = corpus_stats(a, fixture_schemas());
        const auto sb = corpus_stats(b, fixture_schemas());
        EXPECT_EQ(sa.n_questions + sb.n_questions, whole.n_questions);
        EXPECT_LE(whole.n_distinct_sql, sa.n_distinct_sql + sb.n_distinct_sql);
        EXPECT_LE(sa.n_distinct_sql, sa.n_questions);
    }
}

TEST(SplitDisjoint, FixtureSplitsAreDisjoint)
{
    const auto report = check_split_disjoint(load("ar_train.json"), load("ar_test.json"));
    EXPECT_TRUE(report.disjoint);
    EXPECT_TRUE(report.overlap.empty());
}

TEST(SplitDisjoint, IdenticalListsOverlapOnEveryDb)
{
    const auto train = load("ar_train.json");
    const auto report = check_split_disjoint(train, train);
    EXPECT_FALSE(report.disjoint);
    EXPECT_EQ(report.overlap, (std::set<std::string>{"concert_singer", "retail"}));
}

TEST(SplitDisjoint, SymmetricInItsArguments)
{
    const auto a = load("ar_train.json");
    auto b = load("ar_test.json");
    b.push_back(a.back());
    const auto ab = check_split_disjoint(a, b);
    const auto ba = check_split_disjoint(b, a);
    EXPECT_EQ(ab.disjoint, ba.disjoint);
    EXPECT_EQ(ab.overlap, ba.overlap);
    EXPECT_EQ(ab.overlap, std::set<std::string>{"retail"});
}
