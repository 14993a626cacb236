#ifndef XLSQL_DATASET_HPP_INCLUDED
#define XLSQL_DATASET_HPP_INCLUDED

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "text.hpp"

namespace xlsql
{
enum class ColumnType : std::uint8_t
{
    text,
    number,
    time,
    boolean,
    others,
};

inline std::string_view to_string(ColumnType type) noexcept
{
    switch (type)
    {
    case ColumnType::text:
        return "text";
    case ColumnType::number:
        return "number";
    case ColumnType::time:
        return "time";
    case ColumnType::boolean:
        return "boolean";
    case ColumnType::others:
        return "others";
    }
    return "others";
}

/// Table index of the single all-columns ("*") entry.
inline constexpr int all_columns_table = -1;

struct Column
{
    int table_index = all_columns_table;
    std::string name_display;
    std::string name_original;
    ColumnType type = ColumnType::text;

    bool is_all_columns() const noexcept
    {
        return table_index == all_columns_table;
    }

    friend bool operator==(const Column&, const Column&) = default;
};

struct Table
{
    std::string name_display;
    std::string name_original;
    std::vector<int> column_indices;

    friend bool operator==(const Table&, const Table&) = default;
};

struct ForeignKey
{
    int column = 0;
    int referenced = 0;

    friend bool operator==(const ForeignKey&, const ForeignKey&) = default;
};

struct Schema
{
    std::string db_id;
    std::vector<Table> tables;
    std::vector<Column> columns;
    std::vector<int> primary_keys;
    std::vector<ForeignKey> foreign_keys;

    bool is_primary_key(int column) const
    {
        return std::find(primary_keys.begin(), primary_keys.end(), column) != primary_keys.end();
    }

    friend bool operator==(const Schema&, const Schema&) = default;
};

struct Example
{
    std::string question;
    std::vector<std::string> question_tokens;
    std::string query;
    std::string db_id;
};

/// Loaded schemas in file order with lookup by db_id.
class SchemaSet
{
public:
    SchemaSet() = default;

    explicit SchemaSet(std::vector<Schema> schemas) : schemas_(std::move(schemas))
    {
        for (std::size_t i = 0; i < schemas_.size(); ++i)
        {
            auto [it, inserted] = index_.emplace(schemas_[i].db_id, i);
            if (!inserted)
                throw ValidationError("duplicate db_id '" + schemas_[i].db_id + "' (records "
                                      + std::to_string(it->second) + " and " + std::to_string(i) + ")");
        }
    }

    const Schema* find(std::string_view db_id) const
    {
        auto it = index_.find(std::string(db_id));
        return it == index_.end() ? nullptr : &schemas_[it->second];
    }

    const Schema& at(std::string_view db_id) const
    {
        if (const Schema* schema = find(db_id))
            return *schema;
        throw ValidationError("unknown db_id '" + std::string(db_id) + "'");
    }

    std::size_t size() const noexcept
    {
        return schemas_.size();
    }
    bool empty() const noexcept
    {
        return schemas_.empty();
    }
    auto begin() const noexcept
    {
        return schemas_.begin();
    }
    auto end() const noexcept
    {
        return schemas_.end();
    }
    const std::vector<Schema>& schemas() const noexcept
    {
        return schemas_;
    }

private:
    std::vector<Schema> schemas_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct CorpusStats
{
    std::size_t n_questions = 0;
    std::size_t n_distinct_sql = 0;
    std::size_t n_databases = 0;
    double avg_tables_per_db = 0.0;

    friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

struct SplitReport
{
    bool disjoint = true;
    std::set<std::string> overlap;
};

namespace detail
{
    inline nlohmann::json read_json_file(const std::filesystem::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw ParseError("cannot open '" + path.string() + "'");
        try
        {
            return nlohmann::json::parse(in);
        }
        catch (const nlohmann::json::parse_error& e)
        {
            throw ParseError("'" + path.string() + "' is not valid JSON: " + e.what());
        }
    }

    inline std::string record_name(std::size_t index, const nlohmann::json& record)
    {
        std::string name = "record " + std::to_string(index);
        if (record.is_object())
        {
            auto it = record.find("db_id");
            if (it != record.end() && it->is_string())
                name += " (db_id '" + it->get<std::string>() + "')";
        }
        return name;
    }

    inline ColumnType parse_column_type(const std::string& name)
    {
        if (name == "text")
            return ColumnType::text;
        if (name == "number")
            return ColumnType::number;
        if (name == "time")
            return ColumnType::time;
        if (name == "boolean")
            return ColumnType::boolean;
        if (name == "others")
            return ColumnType::others;
        throw ParseError("unknown column type '" + name + "'");
    }

    // Some Spider releases store composite primary keys as nested lists.
    inline void flatten_keys(const nlohmann::json& node, std::vector<int>& out)
    {
        if (node.is_array())
        {
            for (const auto& child : node)
                flatten_keys(child, out);
        }
        else
        {
            out.push_back(node.get<int>());
        }
    }

    inline Schema schema_from_json(const nlohmann::json& record)
    {
        if (!record.is_object())
            throw ParseError("expected an object");

        Schema schema;
        schema.db_id = record.at("db_id").get<std::string>();
        const auto table_names = record.at("table_names").get<std::vector<std::string>>();
        const auto table_names_original = record.at("table_names_original").get<std::vector<std::string>>();
        const auto& column_names = record.at("column_names");
        const auto& column_names_original = record.at("column_names_original");
        const auto column_types = record.at("column_types").get<std::vector<std::string>>();

        if (table_names.size() != table_names_original.size())
            throw ParseError("table_names and table_names_original differ in length");
        if (column_names.size() != column_names_original.size() || column_names.size() != column_types.size())
            throw ParseError("column_names, column_names_original and column_types differ in length");

        for (std::size_t t = 0; t < table_names.size(); ++t)
            schema.tables.push_back(Table{table_names[t], table_names_original[t], {}});

        for (std::size_t c = 0; c < column_names.size(); ++c)
        {
            const auto& display = column_names[c];
            const auto& original = column_names_original[c];
            if (!display.is_array() || display.size() != 2 || !original.is_array() || original.size() != 2)
                throw ParseError("column entry " + std::to_string(c) + " is not a [table_index, name] pair");
            const int table = display[0].get<int>();
            if (original[0].get<int>() != table)
                throw ParseError("column entry " + std::to_string(c) + " has mismatched table indices");
            schema.columns.push_back(Column{table, display[1].get<std::string>(), original[1].get<std::string>(),
                                            parse_column_type(column_types[c])});
        }

        flatten_keys(record.at("primary_keys"), schema.primary_keys);
        for (const auto& pair : record.at("foreign_keys"))
        {
            if (!pair.is_array() || pair.size() != 2)
                throw ParseError("foreign key entry is not a pair");
            schema.foreign_keys.push_back(ForeignKey{pair[0].get<int>(), pair[1].get<int>()});
        }
        return schema;
    }
} // namespace detail

/// Checks the structural invariants and fills Table::column_indices.
inline void finalize_schema(Schema& schema)
{
    const std::string where = "schema '" + schema.db_id + "': ";
    const int n_tables = static_cast<int>(schema.tables.size());
    const int n_columns = static_cast<int>(schema.columns.size());

    for (auto& table : schema.tables)
        table.column_indices.clear();

    for (int c = 0; c < n_columns; ++c)
    {
        const Column& column = schema.columns[static_cast<std::size_t>(c)];
        if (column.is_all_columns())
        {
            if (c != 0)
                throw ValidationError(where + "all-columns entry at position " + std::to_string(c));
            continue;
        }
        if (c == 0)
            throw ValidationError(where + "position 0 must hold the all-columns entry");
        if (column.table_index < 0 || column.table_index >= n_tables)
            throw ValidationError(where + "column " + std::to_string(c) + " refers to table "
                                  + std::to_string(column.table_index));
        if (column.name_original.empty())
            throw ValidationError(where + "column " + std::to_string(c) + " has an empty name");
        schema.tables[static_cast<std::size_t>(column.table_index)].column_indices.push_back(c);
    }

    for (int t = 0; t < n_tables; ++t)
        if (schema.tables[static_cast<std::size_t>(t)].column_indices.empty())
            throw ValidationError(where + "table '" + schema.tables[static_cast<std::size_t>(t)].name_original
                                  + "' has no columns");

    auto keyable = [&](int c) { return c > 0 && c < n_columns; };
    for (int key : schema.primary_keys)
        if (!keyable(key))
            throw ValidationError(where + "primary key " + std::to_string(key) + " out of range");
    for (const auto& fk : schema.foreign_keys)
        if (!keyable(fk.column) || !keyable(fk.referenced))
            throw ValidationError(where + "foreign key (" + std::to_string(fk.column) + ", "
                                  + std::to_string(fk.referenced) + ") out of range");
}

inline Schema schema_from_json(const nlohmann::json& record)
{
    Schema schema = detail::schema_from_json(record);
    finalize_schema(schema);
    return schema;
}

/// Spider interchange representation of one schema.
inline nlohmann::json to_json(const Schema& schema)
{
    nlohmann::json record;
    record["db_id"] = schema.db_id;
    auto& table_names = record["table_names"] = nlohmann::json::array();
    auto& table_names_original = record["table_names_original"] = nlohmann::json::array();
    for (const auto& table : schema.tables)
    {
        table_names.push_back(table.name_display);
        table_names_original.push_back(table.name_original);
    }
    auto& column_names = record["column_names"] = nlohmann::json::array();
    auto& column_names_original = record["column_names_original"] = nlohmann::json::array();
    auto& column_types = record["column_types"] = nlohmann::json::array();
    for (const auto& column : schema.columns)
    {
        column_names.push_back({column.table_index, column.name_display});
        column_names_original.push_back({column.table_index, column.name_original});
        column_types.push_back(to_string(column.type));
    }
    record["primary_keys"] = schema.primary_keys;
    auto& foreign_keys = record["foreign_keys"] = nlohmann::json::array();
    for (const auto& fk : schema.foreign_keys)
        foreign_keys.push_back({fk.column, fk.referenced});
    return record;
}

inline SchemaSet parse_schemas(const nlohmann::json& document)
{
    if (!document.is_array())
        throw ParseError("schema file must hold a JSON array");
    std::vector<Schema> schemas;
    schemas.reserve(document.size());
    for (std::size_t i = 0; i < document.size(); ++i)
    {
        try
        {
            schemas.push_back(schema_from_json(document[i]));
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ParseError(detail::record_name(i, document[i]) + ": " + e.what());
        }
        catch (const ParseError& e)
        {
            throw ParseError(detail::record_name(i, document[i]) + ": " + e.what());
        }
    }
    return SchemaSet(std::move(schemas));
}

inline SchemaSet load_schemas(const std::filesystem::path& path)
{
    return parse_schemas(detail::read_json_file(path));
}

/// Examples in Spider format. Questions without question_toks are
/// tokenized in `language`, or in their detected language when unset.
inline std::vector<Example> parse_examples(const nlohmann::json& document, const SchemaSet& schemas,
                                           std::optional<Language> language = std::nullopt)
{
    if (!document.is_array())
        throw ParseError("example file must hold a JSON array");
    std::vector<Example> examples;
    examples.reserve(document.size());
    for (std::size_t i = 0; i < document.size(); ++i)
    {
        const auto& record = document[i];
        Example example;
        try
        {
            if (!record.is_object())
                throw ParseError("expected an object");
            example.db_id = record.at("db_id").get<std::string>();
            example.question = record.at("question").get<std::string>();
            example.query = record.at("query").get<std::string>();
            if (auto it = record.find("question_toks"); it != record.end() && !it->is_null())
                example.question_tokens = it->get<std::vector<std::string>>();
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ParseError(detail::record_name(i, record) + ": " + e.what());
        }
        catch (const ParseError& e)
        {
            throw ParseError(detail::record_name(i, record) + ": " + e.what());
        }

        if (!schemas.find(example.db_id))
            throw ValidationError("example " + std::to_string(i) + ": unknown db_id '" + example.db_id + "'");
        if (example.question_tokens.empty())
            example.question_tokens = tokenize(example.question, language.value_or(detect_language(example.question)));
        if (example.question_tokens.empty())
            throw ValidationError("example " + std::to_string(i) + " (db_id '" + example.db_id
                                  + "'): question has no tokens");
        examples.push_back(std::move(example));
    }
    return examples;
}

/// As parse_examples; a file holding only whitespace is an empty corpus.
inline std::vector<Example> load_examples(const std::filesystem::path& path, const SchemaSet& schemas,
                                          std::optional<Language> language = std::nullopt)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open '" + path.string() + "'");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (content.find_first_not_of(" \t\r\n") == std::string::npos)
        return {};
    auto document = nlohmann::json::parse(content, nullptr, false);
    if (document.is_discarded())
        throw ParseError("'" + path.string() + "' is not valid JSON");
    return parse_examples(document, schemas, language);
}

inline nlohmann::json to_json(const Example& example)
{
    return {{"db_id", example.db_id},
            {"question", example.question},
            {"question_toks", example.question_tokens},
            {"query", example.query}};
}

/// Distinctness key for gold SQL: whitespace runs collapsed, letters
/// lower-cased outside quoted literals.
inline std::string normalize_sql_text(std::string_view sql)
{
    std::string out;
    out.reserve(sql.size());
    char quote = 0;
    bool pending_space = false;
    for (char c : sql)
    {
        if (quote)
        {
            out.push_back(c);
            if (c == quote)
                quote = 0;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v')
        {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space)
            out.push_back(' ');
        pending_space = false;
        if (c == '\'' || c == '"')
            quote = c;
        out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
    return out;
}

/// Question count, distinct SQL count, database count and mean tables per
/// database over the databases the examples reference. All zero when empty.
inline CorpusStats corpus_stats(const std::vector<Example>& examples, const SchemaSet& schemas)
{
    CorpusStats stats;
    stats.n_questions = examples.size();
    std::unordered_set<std::string> distinct_sql;
    std::set<std::string> databases;
    for (const auto& example : examples)
    {
        distinct_sql.insert(normalize_sql_text(example.query));
        databases.insert(example.db_id);
    }
    stats.n_distinct_sql = distinct_sql.size();
    stats.n_databases = databases.size();
    if (!databases.empty())
    {
        std::size_t tables = 0;
        for (const auto& db_id : databases)
            tables += schemas.at(db_id).tables.size();
        stats.avg_tables_per_db = static_cast<double>(tables) / static_cast<double>(databases.size());
    }
    return stats;
}

inline nlohmann::json to_json(const CorpusStats& stats)
{
    return {{"n_questions", stats.n_questions},
            {"n_distinct_sql", stats.n_distinct_sql},
            {"n_databases", stats.n_databases},
            {"avg_tables_per_db", stats.avg_tables_per_db}};
}

inline SplitReport check_split_disjoint(const std::vector<Example>& train, const std::vector<Example>& test)
{
    std::set<std::string> train_dbs;
    for (const auto& example : train)
        train_dbs.insert(example.db_id);
    SplitReport report;
    for (const auto& example : test)
        if (train_dbs.contains(example.db_id))
            report.overlap.insert(example.db_id);
    report.disjoint = report.overlap.empty();
    return report;
}
} // namespace xlsql

#endif // XLSQL_DATASET_HPP_INCLUDED
