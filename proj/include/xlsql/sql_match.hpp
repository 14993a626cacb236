#ifndef XLSQL_SQL_MATCH_HPP_INCLUDED
#define XLSQL_SQL_MATCH_HPP_INCLUDED

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "dataset.hpp"
#include "sql_ast.hpp"

namespace xlsql::sql
{
namespace detail
{
    inline SqlPtr normalized(const SqlPtr& query, bool for_match);
    inline SqlStruct normalized(const SqlStruct& sql, bool for_match);

    inline Value normalized(const Value& value, bool for_match)
    {
        if (value.kind != Value::Kind::query)
            return value;
        return Value::of(normalized(value.query, for_match));
    }

    inline ConditionList normalized(const ConditionList& list, bool for_match)
    {
        ConditionList out;
        out.conditions.reserve(list.conditions.size());
        for (const auto& cond : list.conditions)
        {
            Condition c = cond;
            c.first = normalized(cond.first, for_match);
            if (cond.second)
                c.second = normalized(*cond.second, for_match);
            out.conditions.push_back(std::move(c));
        }
        std::sort(out.conditions.begin(), out.conditions.end());
        out.connectors = list.connectors;
        std::sort(out.connectors.begin(), out.connectors.end());
        if (for_match)
            out.connectors.erase(std::unique(out.connectors.begin(), out.connectors.end()), out.connectors.end());
        return out;
    }

    inline SqlStruct normalized(const SqlStruct& sql, bool for_match)
    {
        SqlStruct out;
        out.distinct = sql.distinct;
        out.select = sql.select;
        std::sort(out.select.begin(), out.select.end());

        for (const auto& source : sql.from.sources)
            out.from.sources.push_back(TableSource{source.table, normalized(source.query, for_match)});
        std::sort(out.from.sources.begin(), out.from.sources.end());
        if (!for_match)
            out.from.joins = normalized(sql.from.joins, for_match);

        out.where = normalized(sql.where, for_match);
        out.group_by = sql.group_by;
        std::sort(out.group_by.begin(), out.group_by.end());
        out.having = normalized(sql.having, for_match);
        out.order_by = sql.order_by;
        out.has_limit = sql.has_limit;
        out.intersect = normalized(sql.intersect, for_match);
        out.union_ = normalized(sql.union_, for_match);
        out.except = normalized(sql.except, for_match);
        return out;
    }

    inline SqlPtr normalized(const SqlPtr& query, bool for_match)
    {
        if (!query)
            return nullptr;
        return std::make_shared<const SqlStruct>(normalized(*query, for_match));
    }
} // namespace detail

/// Order-normalized form: every set-like clause sorted, recursively.
/// Join conditions are kept, so the form can be unparsed and reparsed.
inline SqlStruct canonicalize(const SqlStruct& sql)
{
    return detail::normalized(sql, false);
}

/// The part of a query exact match looks at: the canonical form without
/// join conditions and with and/or connectors reduced to a set.
inline SqlStruct match_key(const SqlStruct& sql)
{
    return detail::normalized(sql, true);
}

/// Name of the first clause where the two queries disagree under exact
/// match, or nullopt when they match.
inline std::optional<std::string> first_difference(const SqlStruct& pred, const SqlStruct& gold)
{
    const SqlStruct a = match_key(pred);
    const SqlStruct b = match_key(gold);
    if (a.distinct != b.distinct || a.select != b.select)
        return "select";
    if (a.from != b.from)
        return "from";
    if (a.where != b.where)
        return "where";
    if (a.group_by != b.group_by)
        return "group_by";
    if (a.having != b.having)
        return "having";
    if (a.order_by != b.order_by)
        return "order_by";
    if (a.has_limit != b.has_limit)
        return "limit";
    if (compare(a.intersect, b.intersect) != 0)
        return "intersect";
    if (compare(a.union_, b.union_) != 0)
        return "union";
    if (compare(a.except, b.except) != 0)
        return "except";
    return std::nullopt;
}

inline bool exact_match(const SqlStruct& pred, const SqlStruct& gold)
{
    return !first_difference(pred, gold).has_value();
}

enum class Hardness : std::uint8_t
{
    easy,
    medium,
    hard,
    extra,
};

inline constexpr Hardness all_hardness_levels[] = {Hardness::easy, Hardness::medium, Hardness::hard,
                                                   Hardness::extra};

inline std::string_view to_string(Hardness level) noexcept
{
    switch (level)
    {
    case Hardness::easy:
        return "easy";
    case Hardness::medium:
        return "medium";
    case Hardness::hard:
        return "hard";
    case Hardness::extra:
        return "extra";
    }
    return "extra";
}

/// Feature counts the hardness rule is defined over.
struct ComponentCounts
{
    int component1 = 0; // where, group by, order by, limit, each join, each OR, each LIKE
    int component2 = 0; // nested queries, including set operations
    int others = 0;     // >1 aggregation, >1 select item, >1 where condition, >1 group-by column
};

namespace detail
{
    inline int aggregations(const ValUnit& unit)
    {
        return (unit.left.agg != Agg::none) + (unit.right && unit.right->agg != Agg::none);
    }

    inline int nested_queries(const ConditionList& list)
    {
        int n = 0;
        for (const auto& cond : list.conditions)
        {
            n += cond.first.kind == Value::Kind::query;
            n += cond.second && cond.second->kind == Value::Kind::query;
        }
        return n;
    }
} // namespace detail

inline ComponentCounts count_components(const SqlStruct& sql)
{
    ComponentCounts counts;

    counts.component1 += !sql.where.empty();
    counts.component1 += !sql.group_by.empty();
    counts.component1 += !sql.order_by.empty();
    counts.component1 += sql.has_limit;
    if (!sql.from.sources.empty())
        counts.component1 += static_cast<int>(sql.from.sources.size()) - 1;
    for (const ConditionList* list : {&sql.from.joins, &sql.where, &sql.having})
    {
        counts.component1 += static_cast<int>(std::count(list->connectors.begin(), list->connectors.end(), Connector::or_));
        counts.component1 += static_cast<int>(std::count_if(list->conditions.begin(), list->conditions.end(),
                                                            [](const Condition& c) { return c.op == CondOp::like; }));
    }

    for (const ConditionList* list : {&sql.from.joins, &sql.where, &sql.having})
        counts.component2 += detail::nested_queries(*list);
    for (const auto& source : sql.from.sources)
        counts.component2 += source.is_query();
    counts.component2 += static_cast<bool>(sql.intersect) + static_cast<bool>(sql.union_) + static_cast<bool>(sql.except);

    int agg = 0;
    for (const auto& item : sql.select)
        agg += item.agg != Agg::none ? 1 : detail::aggregations(item.value);
    for (const auto& cond : sql.where.conditions)
        agg += detail::aggregations(cond.lhs);
    for (const auto& col : sql.group_by)
        agg += col.agg != Agg::none;
    for (const auto& unit : sql.order_by.items)
        agg += detail::aggregations(unit);
    for (const auto& cond : sql.having.conditions)
        agg += detail::aggregations(cond.lhs);

    counts.others += agg > 1;
    counts.others += sql.select.size() > 1;
    counts.others += sql.where.conditions.size() > 1;
    counts.others += sql.group_by.size() > 1;
    return counts;
}

namespace detail
{
    inline Hardness spider_thresholds(int component1, int others, int component2)
    {
        if (component1 <= 1 && others == 0 && component2 == 0)
            return Hardness::easy;
        if ((others <= 2 && component1 <= 1 && component2 == 0) || (component1 <= 2 && others < 2 && component2 == 0))
            return Hardness::medium;
        if ((others > 2 && component1 <= 2 && component2 == 0)
            || (component1 > 2 && component1 <= 3 && others <= 2 && component2 == 0)
            || (component1 <= 1 && others == 0 && component2 <= 1))
            return Hardness::hard;
        return Hardness::extra;
    }
} // namespace detail

/// Four-level difficulty from component counts.
///
/// Spider's thresholds, closed upward: the level is the highest threshold
/// level over all counts dominated by `c`. This only differs from the plain
/// thresholds at (component1 = 2, others >= 3) and (component1 = 3,
/// others = 2) without nesting, which Spider ranks hard although one
/// component fewer is already extra.
inline Hardness hardness(const ComponentCounts& c)
{
    // Beyond these bounds the thresholds no longer change.
    const int max1 = std::min(c.component1, 4);
    const int max_others = std::min(c.others, 3);
    const int max2 = std::min(c.component2, 2);
    Hardness level = Hardness::easy;
    for (int c1 = 0; c1 <= max1; ++c1)
        for (int o = 0; o <= max_others; ++o)
            for (int c2 = 0; c2 <= max2; ++c2)
                level = std::max(level, detail::spider_thresholds(c1, o, c2));
    return level;
}

inline Hardness hardness(const SqlStruct& sql)
{
    return hardness(count_components(sql));
}

namespace detail
{
    class Unparser
    {
    public:
        explicit Unparser(const Schema& schema) : schema_(schema) {}

        std::string query(const SqlStruct& sql) const
        {
            std::string out = "SELECT ";
            if (sql.distinct)
                out += "DISTINCT ";
            for (std::size_t i = 0; i < sql.select.size(); ++i)
            {
                if (i)
                    out += ", ";
                const auto& item = sql.select[i];
                if (item.agg != Agg::none)
                {
                    out += std::string(to_string(item.agg)) + "(";
                    if (item.value.op == UnitOp::none && item.value.left.distinct && item.value.left.agg == Agg::none)
                        out += "DISTINCT " + column(item.value.left.column);
                    else
                        out += val_unit(item.value);
                    out += ")";
                }
                else
                {
                    out += val_unit(item.value);
                }
            }

            out += " FROM ";
            for (std::size_t i = 0; i < sql.from.sources.size(); ++i)
            {
                if (i)
                    out += " JOIN ";
                const auto& source = sql.from.sources[i];
                out += source.is_query() ? "(" + query(*source.query) + ")"
                                         : schema_.tables[static_cast<std::size_t>(source.table)].name_original;
            }
            if (!sql.from.joins.empty())
                out += " ON " + conditions(sql.from.joins);

            if (!sql.where.empty())
                out += " WHERE " + conditions(sql.where);
            if (!sql.group_by.empty())
            {
                out += " GROUP BY ";
                for (std::size_t i = 0; i < sql.group_by.size(); ++i)
                    out += (i ? ", " : "") + col_unit(sql.group_by[i]);
            }
            if (!sql.having.empty())
                out += " HAVING " + conditions(sql.having);
            if (!sql.order_by.empty())
            {
                out += " ORDER BY ";
                for (std::size_t i = 0; i < sql.order_by.items.size(); ++i)
                    out += (i ? ", " : "") + val_unit(sql.order_by.items[i]);
                out += sql.order_by.direction == Direction::desc ? " DESC" : " ASC";
            }
            if (sql.has_limit)
                out += " LIMIT 1";
            if (sql.intersect)
                out += " INTERSECT " + query(*sql.intersect);
            if (sql.union_)
                out += " UNION " + query(*sql.union_);
            if (sql.except)
                out += " EXCEPT " + query(*sql.except);
            return out;
        }

    private:
        const Schema& schema_;

        std::string column(int id) const
        {
            if (id == 0)
                return "*";
            const Column& c = schema_.columns[static_cast<std::size_t>(id)];
            return schema_.tables[static_cast<std::size_t>(c.table_index)].name_original + "." + c.name_original;
        }

        std::string col_unit(const ColUnit& unit) const
        {
            std::string inner = (unit.distinct ? "DISTINCT " : "") + column(unit.column);
            if (unit.agg == Agg::none)
                return inner;
            return std::string(to_string(unit.agg)) + "(" + inner + ")";
        }

        std::string val_unit(const ValUnit& unit) const
        {
            std::string out = col_unit(unit.left);
            if (unit.op != UnitOp::none && unit.right)
                out += " " + std::string(to_string(unit.op)) + " " + col_unit(*unit.right);
            return out;
        }

        std::string value(const Value& v) const
        {
            switch (v.kind)
            {
            case Value::Kind::placeholder:
                return "'value'";
            case Value::Kind::column:
                return col_unit(v.column);
            case Value::Kind::query:
                return "(" + query(*v.query) + ")";
            }
            return "'value'";
        }

        std::string condition(const Condition& c) const
        {
            if (c.op == CondOp::exists)
                return std::string(c.negated ? "NOT " : "") + "EXISTS " + value(c.first);
            std::string out = val_unit(c.lhs) + " ";
            switch (c.op)
            {
            case CondOp::between:
                return out + (c.negated ? "NOT " : "") + "BETWEEN " + value(c.first) + " AND "
                       + value(c.second.value_or(Value::placeholder()));
            case CondOp::in:
            case CondOp::like:
                return out + (c.negated ? "NOT " : "") + std::string(to_string(c.op)) + " " + value(c.first);
            case CondOp::is:
                return out + "IS " + (c.negated ? "NOT " : "") + value(c.first);
            default:
                return (c.negated ? "NOT " : "") + out + std::string(to_string(c.op)) + " " + value(c.first);
            }
        }

        std::string conditions(const ConditionList& list) const
        {
            std::string out;
            for (std::size_t i = 0; i < list.conditions.size(); ++i)
            {
                if (i)
                    out += i - 1 < list.connectors.size() && list.connectors[i - 1] == Connector::or_ ? " OR " : " AND ";
                out += condition(list.conditions[i]);
            }
            return out;
        }
    };
} // namespace detail

/// SQL text of a structure: fully qualified columns, no aliases, literal
/// placeholders written as 'value'. Reparsing yields the same structure.
inline std::string unparse(const SqlStruct& sql, const Schema& schema)
{
    return detail::Unparser(schema).query(sql);
}
} // namespace xlsql::sql

#endif // XLSQL_SQL_MATCH_HPP_INCLUDED
