#ifndef XLSQL_TESTS_SUPPORT_HPP
#define XLSQL_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <xlsql/dataset.hpp>
#include <xlsql/embed.hpp>
#include <xlsql/linker.hpp>

namespace xlsql::testing
{
inline std::filesystem::path data_path(const std::string& name)
{
    return std::filesystem::path(XLSQL_TEST_DATA) / name;
}

inline const SchemaSet& fixture_schemas()
{
    static const SchemaSet schemas = load_schemas(data_path("tables.json"));
    return schemas;
}

inline const Schema& manufactory()
{
    return fixture_schemas().at("manufactory_1");
}

// (token index, item index) pairs; items are tables when `tables` is set.
using CellSet = std::set<std::pair<std::size_t, std::size_t>>;

inline CellSet cosine_cells(const LinkingCells& cells, bool tables)
{
    CellSet out;
    const std::size_t items = tables ? cells.n_table : cells.n_column;
    for (std::size_t q = 0; q < cells.n_question; ++q)
        for (std::size_t i = 0; i < items; ++i)
            if ((tables ? cells.table(q, i) : cells.column(q, i)) == MatchKind::cosine)
                out.emplace(q, i);
    return out;
}

inline CellSet cosine_cells(const RelationMatrix& m, bool tables)
{
    CellSet out;
    const std::size_t items = tables ? m.n_table() : m.n_column();
    const Relation wanted = tables ? Relation::question_table_cosine_match : Relation::question_column_cosine_match;
    for (std::size_t q = 0; q < m.n_question(); ++q)
        for (std::size_t i = 0; i < items; ++i)
            if (m.at(m.question_node(q), tables ? m.table_node(i) : m.column_node(i)) == wanted)
                out.emplace(q, i);
    return out;
}

// Randomized linking case: a schema whose names never string-match the
// question, raw vectors for tokens and item names, and some tokens the
// provider does not know.
struct CsrFixture
{
    Schema schema;
    std::vector<std::string> tokens;
    VectorStore store;
    // Raw vectors by text; absent texts are provider misses.
    std::vector<std::pair<std::string, std::vector<double>>> raw;
};

inline CsrFixture make_csr_fixture(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> n_tables_dist(1, 8);
    std::uniform_int_distribution<std::size_t> n_tokens_dist(1, 100);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr std::size_t dim = 16;

    CsrFixture f;
    f.schema.db_id = "fixture_" + std::to_string(seed);
    const std::size_t n_tables = n_tables_dist(rng);
    // Items = tables + real columns, at most 50.
    std::uniform_int_distribution<std::size_t> n_columns_dist(n_tables, 50 - n_tables);
    const std::size_t n_columns = n_columns_dist(rng);
    f.schema.columns.push_back({all_columns_table, "*", "*", ColumnType::text});
    for (std::size_t t = 0; t < n_tables; ++t)
        f.schema.tables.push_back({"table " + std::to_string(t), "table_" + std::to_string(t), {}});
    for (std::size_t c = 0; c < n_columns; ++c)
    {
        // Every table gets at least one column.
        const int table = static_cast<int>(c < n_tables ? c : rng() % n_tables);
        f.schema.columns.push_back(
            {table, "field " + std::to_string(c), "field_" + std::to_string(c), ColumnType::number});
    }
    finalize_schema(f.schema);

    auto random_vector = [&] {
        std::vector<double> v(dim);
        for (auto& x : v)
            x = gauss(rng);
        return v;
    };

    std::vector<std::vector<double>> item_vectors;
    auto add_item = [&](const std::string& name) {
        item_vectors.push_back(random_vector());
        f.raw.emplace_back(name, item_vectors.back());
    };
    for (const auto& t : f.schema.tables)
        add_item(t.name_display);
    for (std::size_t c = 1; c < f.schema.columns.size(); ++c)
        add_item(f.schema.columns[c].name_display);

    // A small vocabulary so that tokens repeat; words never occur in names.
    const std::size_t vocab = 1 + rng() % 60;
    std::vector<std::optional<std::vector<double>>> word_vectors(vocab);
    for (std::size_t w = 0; w < vocab; ++w)
    {
        if (unit(rng) < 0.1)
            continue; // unknown to the provider
        std::vector<double> v;
        if (unit(rng) < 0.6)
        {
            // Near some item, at a random distance, so cosines spread over [0, 1].
            v = item_vectors[rng() % item_vectors.size()];
            const double sigma = 0.05 + 1.5 * unit(rng);
            for (auto& x : v)
                x += sigma * gauss(rng);
        }
        else
            v = random_vector();
        word_vectors[w] = v;
        f.raw.emplace_back("w" + std::to_string(w), v);
    }
    const std::size_t n_tokens = n_tokens_dist(rng);
    for (std::size_t i = 0; i < n_tokens; ++i)
        f.tokens.push_back("w" + std::to_string(rng() % vocab));

    for (const auto& [text, v] : f.raw)
        f.store.insert(text, EmbeddingVector(v));
    return f;
}

// Brute force: every (token, item) pair, cosine from raw vectors, >= tau.
inline std::pair<CellSet, CellSet> csr_oracle(const CsrFixture& f, double tau)
{
    auto find = [&](const std::string& text) -> const std::vector<double>* {
        for (const auto& [key, v] : f.raw)
            if (key == text)
                return &v;
        return nullptr;
    };
    auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
        double ab = 0, aa = 0, bb = 0;
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            ab += a[i] * b[i];
            aa += a[i] * a[i];
            bb += b[i] * b[i];
        }
        return ab / (std::sqrt(aa) * std::sqrt(bb));
    };
    CellSet tables, columns;
    for (std::size_t q = 0; q < f.tokens.size(); ++q)
    {
        const auto* tv = find(f.tokens[q]);
        if (!tv)
            continue;
        for (std::size_t t = 0; t < f.schema.tables.size(); ++t)
            if (const auto* iv = find(f.schema.tables[t].name_display); iv && cosine(*tv, *iv) >= tau)
                tables.emplace(q, t);
        for (std::size_t c = 1; c < f.schema.columns.size(); ++c)
            if (const auto* iv = find(f.schema.columns[c].name_display); iv && cosine(*tv, *iv) >= tau)
                columns.emplace(q, c);
    }
    return {tables, columns};
}

struct MutationCase
{
    std::string name;
    std::string base;
    std::string mutated;
    bool should_match;
};

// Pairs over manufactory_1: reorderings and renamings that must keep the
// match, and single-feature changes that must break it.
inline std::vector<MutationCase> mutation_suite()
{
    return {
        {"select item reorder", "SELECT name , price FROM products", "SELECT price , name FROM products", true},
        {"where conjunct reorder", "SELECT name FROM products WHERE price > 10 AND manufacturer = 3",
         "SELECT name FROM products WHERE manufacturer = 3 AND price > 10", true},
        {"table alias renaming",
         "SELECT T1.name FROM products AS T1 JOIN manufacturers AS T2 ON T1.manufacturer = T2.code",
         "SELECT p.name FROM products AS p JOIN manufacturers AS m ON p.manufacturer = m.code", true},
        {"literal substitution", "SELECT name FROM products WHERE price > 10",
         "SELECT name FROM products WHERE price > 99", true},
        {"group-by and from reorder",
         "SELECT count(*) FROM products AS T1 JOIN manufacturers AS T2 ON T1.manufacturer = T2.code GROUP BY T2.name , "
         "T2.code",
         "SELECT count(*) FROM manufacturers AS T2 JOIN products AS T1 ON T1.manufacturer = T2.code GROUP BY T2.code , "
         "T2.name",
         true},
        {"order direction flip", "SELECT name FROM products ORDER BY price ASC",
         "SELECT name FROM products ORDER BY price DESC", false},
        {"aggregator change", "SELECT max(price) FROM products", "SELECT min(price) FROM products", false},
        {"distinct added", "SELECT founder FROM manufacturers", "SELECT DISTINCT founder FROM manufacturers", false},
        {"table change", "SELECT name FROM products", "SELECT name FROM manufacturers", false},
        {"aggregator removed", "SELECT avg(price) FROM products", "SELECT price FROM products", false},
    };
}
} // namespace xlsql::testing

#endif // XLSQL_TESTS_SUPPORT_HPP
