#ifndef XLSQL_MATRIX_EXPORT_HPP_INCLUDED
#define XLSQL_MATRIX_EXPORT_HPP_INCLUDED

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "errors.hpp"
#include "linker.hpp"
#include "relations.hpp"

// Matrix documents are the hand-off format for relation-aware encoders:
//
//   {"index": i, "db_id": ..., "n_question": q, "n_table": t, "n_column": c,
//    "side": q + t + c, "nodes": [label, ...], "relations": [[id, ...], ...]}
//
// Node labels are "question:<token>", "table:<name>" and
// "column:<table>.<name>" (the all-columns entry is "column:*"). Ids refer
// to the catalog written next to the documents.

namespace xlsql
{
inline nlohmann::json relation_catalog()
{
    nlohmann::json catalog = nlohmann::json::array();
    for (std::size_t id = 0; id < relation_count; ++id)
    {
        const Relation r = *relation_from_id(id);
        catalog.push_back({{"id", id}, {"name", name_of(r)}, {"inverse", id_of(inverse(r))}});
    }
    return catalog;
}

inline std::vector<std::string> node_labels(const Example& example, const Schema& schema)
{
    std::vector<std::string> labels;
    for (const auto& token : example.question_tokens)
        labels.push_back("question:" + token);
    for (const auto& table : schema.tables)
        labels.push_back("table:" + table.name_original);
    for (const auto& column : schema.columns)
        labels.push_back(column.is_all_columns()
                             ? std::string("column:*")
                             : "column:" + schema.tables[static_cast<std::size_t>(column.table_index)].name_original
                                   + "." + column.name_original);
    return labels;
}

inline nlohmann::json matrix_document(std::size_t index, const Example& example, const Schema& schema,
                                      const RelationMatrix& matrix)
{
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < matrix.side(); ++i)
    {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < matrix.side(); ++j)
            row.push_back(id_of(matrix.at(i, j)));
        rows.push_back(std::move(row));
    }
    return {{"index", index},
            {"db_id", example.db_id},
            {"n_question", matrix.n_question()},
            {"n_table", matrix.n_table()},
            {"n_column", matrix.n_column()},
            {"side", matrix.side()},
            {"nodes", node_labels(example, schema)},
            {"relations", std::move(rows)}};
}

/// Rebuilds a matrix from its document. Throws ParseError when the
/// document is not well formed or its dimensions disagree.
inline RelationMatrix matrix_from_document(const nlohmann::json& doc)
{
    try
    {
        const auto nq = doc.at("n_question").get<std::size_t>();
        const auto nt = doc.at("n_table").get<std::size_t>();
        const auto nc = doc.at("n_column").get<std::size_t>();
        const auto side = doc.at("side").get<std::size_t>();
        const auto& rows = doc.at("relations");
        if (side != nq + nt + nc)
            throw ParseError("side " + std::to_string(side) + " != n_question + n_table + n_column");
        if (doc.at("nodes").size() != side)
            throw ParseError("node label count differs from side");
        if (!rows.is_array() || rows.size() != side)
            throw ParseError("relation grid does not have 'side' rows");

        std::vector<Relation> cells(side * side);
        for (std::size_t i = 0; i < side; ++i)
        {
            if (!rows[i].is_array() || rows[i].size() != side)
                throw ParseError("row " + std::to_string(i) + " does not have 'side' entries");
            for (std::size_t j = 0; j < side; ++j)
            {
                auto r = relation_from_id(rows[i][j].get<std::size_t>());
                if (!r)
                    throw ParseError("unknown relation id at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
                cells[i * side + j] = *r;
            }
        }

        RelationMatrix m(nq, nt, nc);
        for (std::size_t i = 0; i < side; ++i)
            for (std::size_t j = i; j < side; ++j)
            {
                if (cells[i * side + j] != inverse(cells[j * side + i]))
                    throw ParseError("cells (" + std::to_string(i) + ", " + std::to_string(j)
                                     + ") and their transpose are not inverses");
                m.set_pair(i, j, cells[i * side + j]);
            }
        return m;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ParseError(std::string("malformed matrix document: ") + e.what());
    }
}

/// Problems found in a matrix document: inverse symmetry, dimensions, and
/// the self relations on the diagonal. Empty when the document is sound.
inline std::vector<std::string> verify_matrix_document(const nlohmann::json& doc)
{
    std::vector<std::string> problems;
    RelationMatrix m;
    try
    {
        m = matrix_from_document(doc);
    }
    catch (const ParseError& e)
    {
        problems.emplace_back(e.what());
        return problems;
    }
    for (std::size_t i = 0; i < m.side(); ++i)
    {
        Relation expected = Relation::column_column_identity;
        if (i < m.n_question())
            expected = Relation::question_question_identity;
        else if (i < m.n_question() + m.n_table())
            expected = Relation::table_table_identity;
        if (m.at(i, i) != expected)
            problems.push_back("diagonal cell " + std::to_string(i) + " is " + std::string(name_of(m.at(i, i))));
    }
    return problems;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << doc.dump() << '\n';
}

inline std::filesystem::path matrix_file_name(std::size_t index)
{
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.json", index);
    return name;
}

/// Writes relations.json (the catalog) and matrices/NNNNNN.json per example
/// under `directory`. Returns the number of matrix documents written.
inline std::size_t export_matrices(const std::filesystem::path& directory, std::span<const Example> examples,
                                   const SchemaSet& schemas, const std::vector<std::optional<RelationMatrix>>& matrices)
{
    std::filesystem::create_directories(directory / "matrices");
    write_json_file(directory / "relations.json", relation_catalog());
    std::size_t written = 0;
    for (std::size_t i = 0; i < matrices.size() && i < examples.size(); ++i)
    {
        if (!matrices[i])
            continue;
        write_json_file(directory / "matrices" / matrix_file_name(i),
                        matrix_document(i, examples[i], schemas.at(examples[i].db_id), *matrices[i]));
        ++written;
    }
    return written;
}
} // namespace xlsql

#endif // XLSQL_MATRIX_EXPORT_HPP_INCLUDED
