#ifndef XLSQL_SQL_AST_HPP_INCLUDED
#define XLSQL_SQL_AST_HPP_INCLUDED

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace xlsql::sql
{
enum class Agg : std::uint8_t
{
    none,
    max,
    min,
    count,
    sum,
    avg,
};

enum class UnitOp : std::uint8_t
{
    none,
    minus,
    plus,
    times,
    divide,
};

enum class CondOp : std::uint8_t
{
    between,
    eq,
    gt,
    lt,
    ge,
    le,
    ne,
    in,
    like,
    is,
    exists,
};

enum class Connector : std::uint8_t
{
    and_,
    or_,
};

enum class Direction : std::uint8_t
{
    asc,
    desc,
};

inline std::string_view to_string(Agg agg) noexcept
{
    constexpr std::string_view names[] = {"none", "max", "min", "count", "sum", "avg"};
    return names[static_cast<int>(agg)];
}

inline std::string_view to_string(UnitOp op) noexcept
{
    constexpr std::string_view names[] = {"", "-", "+", "*", "/"};
    return names[static_cast<int>(op)];
}

inline std::string_view to_string(CondOp op) noexcept
{
    constexpr std::string_view names[] = {"BETWEEN", "=", ">", "<", ">=", "<=", "!=", "IN", "LIKE", "IS", "EXISTS"};
    return names[static_cast<int>(op)];
}

/// Column id 0 is the all-columns entry.
struct ColUnit
{
    Agg agg = Agg::none;
    int column = 0;
    bool distinct = false;

    friend auto operator<=>(const ColUnit&, const ColUnit&) = default;
};

struct ValUnit
{
    UnitOp op = UnitOp::none;
    ColUnit left;
    std::optional<ColUnit> right;

    friend auto operator<=>(const ValUnit&, const ValUnit&) = default;
};

struct SqlStruct;
using SqlPtr = std::shared_ptr<const SqlStruct>;

std::strong_ordering compare(const SqlStruct& a, const SqlStruct& b);

inline std::strong_ordering compare(const SqlPtr& a, const SqlPtr& b)
{
    if (!a || !b)
        return static_cast<bool>(a) <=> static_cast<bool>(b);
    return compare(*a, *b);
}

/// Right-hand side of a condition. Literals collapse into one placeholder.
struct Value
{
    enum class Kind : std::uint8_t
    {
        placeholder,
        column,
        query,
    };

    Kind kind = Kind::placeholder;
    ColUnit column;
    SqlPtr query;

    static Value placeholder()
    {
        return {};
    }
    static Value of(ColUnit column)
    {
        return {Kind::column, column, nullptr};
    }
    static Value of(SqlPtr query)
    {
        return {Kind::query, {}, std::move(query)};
    }

    friend std::strong_ordering operator<=>(const Value& a, const Value& b)
    {
        if (auto c = a.kind <=> b.kind; c != 0)
            return c;
        switch (a.kind)
        {
        case Kind::placeholder:
            return std::strong_ordering::equal;
        case Kind::column:
            return a.column <=> b.column;
        case Kind::query:
            return compare(a.query, b.query);
        }
        return std::strong_ordering::equal;
    }
    friend bool operator==(const Value& a, const Value& b)
    {
        return (a <=> b) == 0;
    }
};

struct Condition
{
    bool negated = false;
    CondOp op = CondOp::eq;
    ValUnit lhs;
    Value first;
    std::optional<Value> second;

    friend auto operator<=>(const Condition&, const Condition&) = default;
};

struct ConditionList
{
    std::vector<Condition> conditions;
    /// connectors[i] joins conditions[i] and conditions[i + 1].
    std::vector<Connector> connectors;

    bool empty() const noexcept
    {
        return conditions.empty();
    }

    friend auto operator<=>(const ConditionList&, const ConditionList&) = default;
};

struct SelectItem
{
    Agg agg = Agg::none;
    ValUnit value;

    friend auto operator<=>(const SelectItem&, const SelectItem&) = default;
};

struct TableSource
{
    int table = -1; // -1 when the source is a sub-query
    SqlPtr query;

    bool is_query() const noexcept
    {
        return static_cast<bool>(query);
    }

    friend std::strong_ordering operator<=>(const TableSource& a, const TableSource& b)
    {
        if (auto c = a.table <=> b.table; c != 0)
            return c;
        return compare(a.query, b.query);
    }
    friend bool operator==(const TableSource& a, const TableSource& b)
    {
        return (a <=> b) == 0;
    }
};

struct FromClause
{
    std::vector<TableSource> sources;
    ConditionList joins;

    friend auto operator<=>(const FromClause&, const FromClause&) = default;
};

struct OrderBy
{
    Direction direction = Direction::asc;
    std::vector<ValUnit> items;

    bool empty() const noexcept
    {
        return items.empty();
    }

    friend auto operator<=>(const OrderBy&, const OrderBy&) = default;
};

/// Clause-decomposed query. Column and table ids index the schema it was
/// parsed against.
struct SqlStruct
{
    bool distinct = false;
    std::vector<SelectItem> select;
    FromClause from;
    ConditionList where;
    std::vector<ColUnit> group_by;
    ConditionList having;
    OrderBy order_by;
    bool has_limit = false;
    SqlPtr intersect;
    SqlPtr union_;
    SqlPtr except;

    friend std::strong_ordering operator<=>(const SqlStruct& a, const SqlStruct& b)
    {
        return compare(a, b);
    }
    friend bool operator==(const SqlStruct& a, const SqlStruct& b)
    {
        return compare(a, b) == 0;
    }
};

inline std::strong_ordering compare(const SqlStruct& a, const SqlStruct& b)
{
    if (auto c = a.distinct <=> b.distinct; c != 0)
        return c;
    if (auto c = a.select <=> b.select; c != 0)
        return c;
    if (auto c = a.from <=> b.from; c != 0)
        return c;
    if (auto c = a.where <=> b.where; c != 0)
        return c;
    if (auto c = a.group_by <=> b.group_by; c != 0)
        return c;
    if (auto c = a.having <=> b.having; c != 0)
        return c;
    if (auto c = a.order_by <=> b.order_by; c != 0)
        return c;
    if (auto c = a.has_limit <=> b.has_limit; c != 0)
        return c;
    if (auto c = compare(a.intersect, b.intersect); c != 0)
        return c;
    if (auto c = compare(a.union_, b.union_); c != 0)
        return c;
    return compare(a.except, b.except);
}
} // namespace xlsql::sql

#endif // XLSQL_SQL_AST_HPP_INCLUDED
