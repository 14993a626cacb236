#ifndef XLSQL_EVALUATE_HPP_INCLUDED
#define XLSQL_EVALUATE_HPP_INCLUDED

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "errors.hpp"
#include "sql_match.hpp"
#include "sql_parser.hpp"

namespace xlsql
{
struct LevelScore
{
    std::size_t count = 0;
    std::size_t matched = 0;

    /// Percentage; 0 for an empty level.
    double accuracy() const noexcept
    {
        return count == 0 ? 0.0 : 100.0 * static_cast<double>(matched) / static_cast<double>(count);
    }
};

struct Mismatch
{
    std::size_t index = 0;
    std::string clause; // "parse" when the prediction did not parse

    friend bool operator==(const Mismatch&, const Mismatch&) = default;
};

struct EvalReport
{
    std::size_t total = 0;
    std::size_t matched = 0;
    std::map<sql::Hardness, LevelScore> per_level;
    std::vector<Mismatch> mismatches;

    double overall_accuracy() const noexcept
    {
        return total == 0 ? 0.0 : 100.0 * static_cast<double>(matched) / static_cast<double>(total);
    }
};

struct EvalOutcome
{
    sql::Hardness level = sql::Hardness::easy;
    std::optional<std::string> difference;
};

/// Scores one prediction against one gold example. Gold that fails to
/// parse is a DataError; a prediction that fails to parse is a mismatch.
inline EvalOutcome evaluate_one(const std::string& predicted, const Example& gold, const SchemaSet& schemas)
{
    const Schema& schema = schemas.at(gold.db_id);
    sql::SqlStruct gold_sql;
    try
    {
        gold_sql = sql::parse_sql(gold.query, schema);
    }
    catch (const ParseError& e)
    {
        throw DataError("gold query does not parse (db '" + gold.db_id + "'): " + e.what());
    }
    catch (const ResolutionError& e)
    {
        throw DataError("gold query does not resolve (db '" + gold.db_id + "'): " + e.what());
    }

    EvalOutcome outcome;
    outcome.level = sql::hardness(gold_sql);
    try
    {
        outcome.difference = sql::first_difference(sql::parse_sql(predicted, schema), gold_sql);
    }
    catch (const ParseError&)
    {
        outcome.difference = "parse";
    }
    catch (const ResolutionError&)
    {
        outcome.difference = "parse";
    }
    return outcome;
}

/// Exact-match accuracy of predictions aligned with gold examples.
///
/// Work is split over `jobs` threads; the report does not depend on the
/// thread count. When several gold queries are invalid, the error for the
/// lowest index is raised.
inline EvalReport evaluate(std::span<const std::string> predictions, std::span<const Example> gold,
                           const SchemaSet& schemas, unsigned jobs = 1)
{
    if (predictions.size() != gold.size())
        throw DataError("got " + std::to_string(predictions.size()) + " predictions for " + std::to_string(gold.size())
                        + " gold examples");

    const std::size_t n = gold.size();
    std::vector<EvalOutcome> outcomes(n);
    std::vector<std::exception_ptr> errors(n);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
        {
            try
            {
                outcomes[i] = evaluate_one(predictions[i], gold[i], schemas);
            }
            catch (...)
            {
                errors[i] = std::current_exception();
            }
        }
    };

    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (jobs == 1)
    {
        work(0, n);
    }
    else
    {
        std::vector<std::jthread> workers;
        const std::size_t chunk = (n + jobs - 1) / jobs;
        for (std::size_t begin = 0; begin < n; begin += chunk)
            workers.emplace_back(work, begin, std::min(n, begin + chunk));
    }

    for (std::size_t i = 0; i < n; ++i)
    {
        if (!errors[i])
            continue;
        try
        {
            std::rethrow_exception(errors[i]);
        }
        catch (const std::exception& e)
        {
            throw DataError("example " + std::to_string(i) + ": " + e.what());
        }
    }

    EvalReport report;
    report.total = n;
    for (auto level : sql::all_hardness_levels)
        report.per_level[level] = {};
    for (std::size_t i = 0; i < n; ++i)
    {
        auto& level = report.per_level[outcomes[i].level];
        ++level.count;
        if (outcomes[i].difference)
        {
            report.mismatches.push_back({i, *outcomes[i].difference});
        }
        else
        {
            ++level.matched;
            ++report.matched;
        }
    }
    return report;
}

inline nlohmann::json to_json(const EvalReport& report)
{
    nlohmann::json levels = nlohmann::json::object();
    for (const auto& [level, score] : report.per_level)
        levels[std::string(sql::to_string(level))] = {
            {"count", score.count}, {"matched", score.matched}, {"accuracy", score.accuracy()}};
    nlohmann::json mismatches = nlohmann::json::array();
    for (const auto& m : report.mismatches)
        mismatches.push_back({{"index", m.index}, {"clause", m.clause}});
    return {{"total", report.total},
            {"matched", report.matched},
            {"overall_accuracy", report.overall_accuracy()},
            {"per_level", std::move(levels)},
            {"mismatches", std::move(mismatches)}};
}

/// Console table: one row per hardness level, then the overall row.
inline std::string format_report(const EvalReport& report)
{
    std::string out = "level     count  matched  accuracy\n";
    char line[96];
    for (auto level : sql::all_hardness_levels)
    {
        const auto it = report.per_level.find(level);
        const LevelScore score = it == report.per_level.end() ? LevelScore{} : it->second;
        std::snprintf(line, sizeof line, "%-8s %6zu %8zu %9.2f\n", std::string(sql::to_string(level)).c_str(),
                      score.count, score.matched, score.accuracy());
        out += line;
    }
    std::snprintf(line, sizeof line, "%-8s %6zu %8zu %9.2f\n", "all", report.total, report.matched,
                  report.overall_accuracy());
    out += line;
    return out;
}

/// One predicted query per line. A trailing newline does not add an entry.
inline std::vector<std::string> load_predictions(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open '" + path.string() + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
    {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}
} // namespace xlsql

#endif // XLSQL_EVALUATE_HPP_INCLUDED
