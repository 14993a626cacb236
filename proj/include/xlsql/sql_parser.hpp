#ifndef XLSQL_SQL_PARSER_HPP_INCLUDED
#define XLSQL_SQL_PARSER_HPP_INCLUDED

#include <algorithm>
#include <array>
#include <cctype>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "sql_ast.hpp"

namespace xlsql::sql
{
namespace detail
{
    inline std::string lower(std::string_view s)
    {
        std::string out(s);
        for (char& c : out)
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return out;
    }

    inline bool iequals(std::string_view a, std::string_view b)
    {
        return a.size() == b.size()
               && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
                      return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
                  });
    }

    struct Token
    {
        enum class Kind
        {
            ident,
            quoted_ident,
            number,
            string,
            symbol,
            end,
        };

        Kind kind = Kind::end;
        std::string text;
        std::size_t position = 0;
    };

    inline std::vector<Token> lex(std::string_view sql)
    {
        std::vector<Token> tokens;
        std::size_t i = 0;
        auto is_ident_start = [](unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; };
        auto is_ident_char = [](unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; };

        while (i < sql.size())
        {
            const auto c = static_cast<unsigned char>(sql[i]);
            if (std::isspace(c))
            {
                ++i;
                continue;
            }
            const std::size_t start = i;
            if (is_ident_start(c))
            {
                while (i < sql.size() && is_ident_char(static_cast<unsigned char>(sql[i])))
                    ++i;
                tokens.push_back({Token::Kind::ident, std::string(sql.substr(start, i - start)), start});
            }
            else if (std::isdigit(c) || (c == '.' && i + 1 < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i + 1]))))
            {
                while (i < sql.size() && (std::isdigit(static_cast<unsigned char>(sql[i])) || sql[i] == '.'))
                    ++i;
                if (i < sql.size() && (sql[i] == 'e' || sql[i] == 'E'))
                {
                    ++i;
                    if (i < sql.size() && (sql[i] == '+' || sql[i] == '-'))
                        ++i;
                    while (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i])))
                        ++i;
                }
                tokens.push_back({Token::Kind::number, std::string(sql.substr(start, i - start)), start});
            }
            else if (c == '\'' || c == '"' || c == '`')
            {
                const char quote = static_cast<char>(c);
                std::string text;
                ++i;
                bool closed = false;
                while (i < sql.size())
                {
                    if (sql[i] == quote)
                    {
                        if (i + 1 < sql.size() && sql[i + 1] == quote)
                        {
                            text.push_back(quote);
                            i += 2;
                            continue;
                        }
                        ++i;
                        closed = true;
                        break;
                    }
                    text.push_back(sql[i++]);
                }
                if (!closed)
                    throw ParseError("unterminated quoted text", start);
                tokens.push_back({quote == '`' ? Token::Kind::quoted_ident : Token::Kind::string, std::move(text), start});
            }
            else
            {
                static constexpr std::array<std::string_view, 4> two_char{"!=", "<>", ">=", "<="};
                std::string_view rest = sql.substr(i);
                auto it = std::find_if(two_char.begin(), two_char.end(),
                                       [&](std::string_view op) { return rest.starts_with(op); });
                if (it != two_char.end())
                {
                    tokens.push_back({Token::Kind::symbol, std::string(*it), start});
                    i += 2;
                }
                else if (std::string_view("(),.*=<>+-/;").find(static_cast<char>(c)) != std::string_view::npos)
                {
                    tokens.push_back({Token::Kind::symbol, std::string(1, static_cast<char>(c)), start});
                    ++i;
                }
                else
                {
                    throw ParseError(std::string("unexpected character '") + static_cast<char>(c) + "'", start);
                }
            }
        }
        tokens.push_back({Token::Kind::end, "", sql.size()});
        return tokens;
    }

    inline bool is_reserved(std::string_view word)
    {
        static constexpr std::array<std::string_view, 33> reserved{
            "select", "from",   "where",  "group", "by",    "having", "order", "limit", "join",
            "on",     "as",     "and",    "or",    "not",   "in",     "like",  "between", "is",
            "exists", "union",  "intersect", "except", "distinct", "asc", "desc", "null", "inner",
            "left",   "right",  "outer",  "cross", "all",   "offset"};
        const std::string w = lower(word);
        return std::find(reserved.begin(), reserved.end(), w) != reserved.end();
    }

    inline std::optional<Agg> agg_from_name(std::string_view word)
    {
        const std::string w = lower(word);
        if (w == "max")
            return Agg::max;
        if (w == "min")
            return Agg::min;
        if (w == "count")
            return Agg::count;
        if (w == "sum")
            return Agg::sum;
        if (w == "avg")
            return Agg::avg;
        return std::nullopt;
    }

    // One FROM-clause binding: a schema table or a sub-query, with its alias.
    struct Binding
    {
        std::string alias; // lower-cased, may be empty
        int table = -1;
        SqlPtr query;
    };

    struct Scope
    {
        const Scope* parent = nullptr;
        std::vector<Binding> bindings;
    };

    class Parser
    {
    public:
        Parser(std::string_view sql, const Schema& schema) : tokens_(lex(sql)), schema_(schema) {}

        SqlStruct parse()
        {
            SqlStruct result = parse_query(nullptr);
            accept_symbol(";");
            if (peek().kind != Token::Kind::end)
                fail("unexpected trailing input '" + peek().text + "'");
            return result;
        }

    private:
        std::vector<Token> tokens_;
        std::size_t pos_ = 0;
        const Schema& schema_;

        const Token& peek(std::size_t ahead = 0) const
        {
            return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
        }

        [[noreturn]] void fail(const std::string& message) const
        {
            throw ParseError(message, peek().position);
        }

        bool is_keyword(std::string_view word, std::size_t ahead = 0) const
        {
            const Token& t = peek(ahead);
            return t.kind == Token::Kind::ident && iequals(t.text, word);
        }

        bool accept_keyword(std::string_view word)
        {
            if (!is_keyword(word))
                return false;
            ++pos_;
            return true;
        }

        void expect_keyword(std::string_view word)
        {
            if (!accept_keyword(word))
                fail("expected " + std::string(word) + ", got '" + peek().text + "'");
        }

        bool is_symbol(std::string_view symbol, std::size_t ahead = 0) const
        {
            const Token& t = peek(ahead);
            return t.kind == Token::Kind::symbol && t.text == symbol;
        }

        bool accept_symbol(std::string_view symbol)
        {
            if (!is_symbol(symbol))
                return false;
            ++pos_;
            return true;
        }

        void expect_symbol(std::string_view symbol)
        {
            if (!accept_symbol(symbol))
                fail("expected '" + std::string(symbol) + "', got '" + peek().text + "'");
        }

        bool is_name(std::size_t ahead = 0) const
        {
            const Token& t = peek(ahead);
            return t.kind == Token::Kind::quoted_ident || (t.kind == Token::Kind::ident && !is_reserved(t.text));
        }

        std::string expect_name()
        {
            if (!is_name())
                fail("expected an identifier, got '" + peek().text + "'");
            return tokens_[pos_++].text;
        }

        // Position of this query's FROM keyword, skipping parenthesized groups.
        std::size_t find_from() const
        {
            int depth = 0;
            for (std::size_t i = pos_; i < tokens_.size(); ++i)
            {
                const Token& t = tokens_[i];
                if (t.kind == Token::Kind::symbol && t.text == "(")
                    ++depth;
                else if (t.kind == Token::Kind::symbol && t.text == ")")
                {
                    if (depth == 0)
                        break;
                    --depth;
                }
                else if (depth == 0 && t.kind == Token::Kind::ident)
                {
                    if (iequals(t.text, "from"))
                        return i;
                    if (iequals(t.text, "union") || iequals(t.text, "intersect") || iequals(t.text, "except"))
                        break;
                }
                else if (t.kind == Token::Kind::end)
                    break;
            }
            fail("expected FROM clause");
        }

        SqlStruct parse_query(const Scope* parent)
        {
            expect_keyword("select");
            SqlStruct sql;
            sql.distinct = accept_keyword("distinct");

            const std::size_t select_start = pos_;
            const std::size_t from_pos = find_from();

            Scope scope{parent, {}};
            pos_ = from_pos;
            parse_from(scope, sql.from);
            const std::size_t from_end = pos_;

            pos_ = select_start;
            do
            {
                sql.select.push_back(parse_select_item(scope));
            } while (accept_symbol(","));
            if (pos_ != from_pos)
                fail("unexpected '" + peek().text + "' in select list");
            pos_ = from_end;

            if (accept_keyword("where"))
                sql.where = parse_conditions(scope);
            if (accept_keyword("group"))
            {
                expect_keyword("by");
                do
                {
                    sql.group_by.push_back(parse_col_unit(scope));
                } while (accept_symbol(","));
            }
            if (accept_keyword("having"))
                sql.having = parse_conditions(scope);
            if (accept_keyword("order"))
            {
                expect_keyword("by");
                do
                {
                    sql.order_by.items.push_back(parse_val_unit(scope));
                    if (accept_keyword("desc"))
                        sql.order_by.direction = Direction::desc;
                    else if (accept_keyword("asc"))
                        sql.order_by.direction = Direction::asc;
                } while (accept_symbol(","));
            }
            if (accept_keyword("limit"))
            {
                if (peek().kind != Token::Kind::number)
                    fail("expected a number after LIMIT");
                ++pos_;
                sql.has_limit = true;
            }

            if (accept_keyword("intersect"))
                sql.intersect = std::make_shared<const SqlStruct>(parse_set_operand(parent));
            else if (accept_keyword("union"))
            {
                accept_keyword("all");
                sql.union_ = std::make_shared<const SqlStruct>(parse_set_operand(parent));
            }
            else if (accept_keyword("except"))
                sql.except = std::make_shared<const SqlStruct>(parse_set_operand(parent));
            return sql;
        }

        SqlStruct parse_set_operand(const Scope* parent)
        {
            if (accept_symbol("("))
            {
                SqlStruct nested = parse_query(parent);
                expect_symbol(")");
                return nested;
            }
            return parse_query(parent);
        }

        SqlPtr parse_subquery(const Scope* parent)
        {
            expect_symbol("(");
            auto nested = std::make_shared<const SqlStruct>(parse_query(parent));
            expect_symbol(")");
            return nested;
        }

        void parse_from(Scope& scope, FromClause& from)
        {
            expect_keyword("from");
            parse_table_ref(scope, from);
            for (;;)
            {
                if (accept_symbol(","))
                {
                    parse_table_ref(scope, from);
                    continue;
                }
                const std::size_t save = pos_;
                for (auto word : {"inner", "left", "right", "outer", "cross"})
                    accept_keyword(word);
                if (accept_keyword("join"))
                {
                    parse_table_ref(scope, from);
                    continue;
                }
                pos_ = save;
                if (accept_keyword("on"))
                {
                    ConditionList on = parse_conditions(scope);
                    if (!from.joins.empty())
                        from.joins.connectors.push_back(Connector::and_);
                    append(from.joins, std::move(on));
                    continue;
                }
                break;
            }
        }

        void parse_table_ref(Scope& scope, FromClause& from)
        {
            Binding binding;
            if (is_symbol("(") && is_keyword("select", 1))
            {
                binding.query = parse_subquery(scope.parent);
            }
            else
            {
                const std::size_t at = peek().position;
                const std::string name = expect_name();
                const auto& tables = schema_.tables;
                auto it = std::find_if(tables.begin(), tables.end(),
                                       [&](const Table& t) { return iequals(t.name_original, name); });
                if (it == tables.end())
                    throw ResolutionError("at position " + std::to_string(at) + ": unknown table '" + name
                                          + "' in database '" + schema_.db_id + "'");
                binding.table = static_cast<int>(it - tables.begin());
            }
            if (accept_keyword("as"))
                binding.alias = lower(expect_name());
            else if (is_name())
                binding.alias = lower(expect_name());
            from.sources.push_back(TableSource{binding.table, binding.query});
            scope.bindings.push_back(std::move(binding));
        }

        static void append(ConditionList& into, ConditionList&& more)
        {
            into.conditions.insert(into.conditions.end(), more.conditions.begin(), more.conditions.end());
            into.connectors.insert(into.connectors.end(), more.connectors.begin(), more.connectors.end());
        }

        SelectItem parse_select_item(const Scope& scope)
        {
            SelectItem item;
            if (peek().kind == Token::Kind::ident && is_symbol("(", 1))
            {
                if (auto agg = agg_from_name(peek().text))
                {
                    pos_ += 2;
                    const bool distinct = accept_keyword("distinct");
                    ValUnit inner = parse_val_unit(scope);
                    expect_symbol(")");
                    inner.left.distinct = inner.left.distinct || distinct;
                    if (const auto op = peek_unit_op())
                    {
                        if (inner.op != UnitOp::none || inner.left.agg != Agg::none)
                            fail("arithmetic on a compound aggregate is outside the supported subset");
                        ++pos_;
                        item.value.op = *op;
                        item.value.left = ColUnit{*agg, inner.left.column, inner.left.distinct};
                        item.value.right = parse_col_unit(scope);
                    }
                    else
                    {
                        item.agg = *agg;
                        item.value = inner;
                    }
                    skip_output_alias();
                    return item;
                }
            }
            item.value = parse_val_unit(scope);
            skip_output_alias();
            return item;
        }

        void skip_output_alias()
        {
            if (accept_keyword("as"))
                expect_name();
        }

        std::optional<UnitOp> peek_unit_op() const
        {
            if (peek().kind != Token::Kind::symbol)
                return std::nullopt;
            const std::string& s = peek().text;
            if (s == "-")
                return UnitOp::minus;
            if (s == "+")
                return UnitOp::plus;
            if (s == "*")
                return UnitOp::times;
            if (s == "/")
                return UnitOp::divide;
            return std::nullopt;
        }

        ValUnit parse_val_unit(const Scope& scope)
        {
            if (is_symbol("(") && !is_keyword("select", 1))
            {
                ++pos_;
                ValUnit unit = parse_val_unit(scope);
                expect_symbol(")");
                return unit;
            }
            ValUnit unit;
            unit.left = parse_col_unit(scope);
            if (const auto op = peek_unit_op())
            {
                ++pos_;
                unit.op = *op;
                unit.right = parse_col_unit(scope);
            }
            return unit;
        }

        ColUnit parse_col_unit(const Scope& scope)
        {
            if (peek().kind == Token::Kind::ident && is_symbol("(", 1))
            {
                if (auto agg = agg_from_name(peek().text))
                {
                    pos_ += 2;
                    const bool distinct = accept_keyword("distinct");
                    const int column = parse_column(scope);
                    expect_symbol(")");
                    return ColUnit{*agg, column, distinct};
                }
            }
            if (accept_symbol("("))
            {
                ColUnit unit = parse_col_unit(scope);
                expect_symbol(")");
                return unit;
            }
            const bool distinct = accept_keyword("distinct");
            return ColUnit{Agg::none, parse_column(scope), distinct};
        }

        int parse_column(const Scope& scope)
        {
            const std::size_t at = peek().position;
            if (accept_symbol("*"))
                return 0;
            const std::string first = expect_name();
            if (accept_symbol("."))
            {
                if (accept_symbol("*"))
                {
                    find_binding(scope, first, at);
                    return 0;
                }
                const std::string column = expect_name();
                return resolve_qualified(scope, first, column, at);
            }
            return resolve_unqualified(scope, first, at);
        }

        int column_in_table(int table, std::string_view name) const
        {
            for (int c : schema_.tables[static_cast<std::size_t>(table)].column_indices)
                if (iequals(schema_.columns[static_cast<std::size_t>(c)].name_original, name))
                    return c;
            return -1;
        }

        // Tables reachable through a sub-query's FROM clause, outermost first.
        void collect_tables(const SqlStruct& sql, std::vector<int>& out) const
        {
            for (const auto& source : sql.from.sources)
            {
                if (source.is_query())
                    collect_tables(*source.query, out);
                else
                    out.push_back(source.table);
            }
        }

        int column_in_binding(const Binding& binding, std::string_view name) const
        {
            if (binding.table >= 0)
                return column_in_table(binding.table, name);
            std::vector<int> tables;
            collect_tables(*binding.query, tables);
            for (int t : tables)
                if (int c = column_in_table(t, name); c >= 0)
                    return c;
            return -1;
        }

        const Binding* lookup_binding(const Scope& scope, std::string_view qualifier) const
        {
            for (const Scope* s = &scope; s; s = s->parent)
                for (const auto& binding : s->bindings)
                    if (!binding.alias.empty() && iequals(binding.alias, qualifier))
                        return &binding;
            for (const Scope* s = &scope; s; s = s->parent)
                for (const auto& binding : s->bindings)
                    if (binding.table >= 0
                        && iequals(schema_.tables[static_cast<std::size_t>(binding.table)].name_original, qualifier))
                        return &binding;
            return nullptr;
        }

        // A table named inside an unaliased sub-query source, as unparse() writes it.
        std::optional<int> table_behind_subquery(const Scope& scope, std::string_view qualifier) const
        {
            for (const Scope* s = &scope; s; s = s->parent)
                for (const auto& binding : s->bindings)
                {
                    if (binding.table >= 0)
                        continue;
                    std::vector<int> tables;
                    collect_tables(*binding.query, tables);
                    for (int t : tables)
                        if (iequals(schema_.tables[static_cast<std::size_t>(t)].name_original, qualifier))
                            return t;
                }
            return std::nullopt;
        }

        const Binding& find_binding(const Scope& scope, std::string_view qualifier, std::size_t at) const
        {
            if (const Binding* binding = lookup_binding(scope, qualifier))
                return *binding;
            throw ResolutionError("at position " + std::to_string(at) + ": unknown table or alias '"
                                  + std::string(qualifier) + "'");
        }

        int resolve_qualified(const Scope& scope, std::string_view qualifier, std::string_view name,
                              std::size_t at) const
        {
            int column = -1;
            if (const Binding* binding = lookup_binding(scope, qualifier))
                column = column_in_binding(*binding, name);
            else if (auto table = table_behind_subquery(scope, qualifier))
                column = column_in_table(*table, name);
            else
                find_binding(scope, qualifier, at);
            if (column < 0)
                throw ResolutionError("at position " + std::to_string(at) + ": unknown column '"
                                      + std::string(qualifier) + "." + std::string(name) + "'");
            return column;
        }

        int resolve_unqualified(const Scope& scope, std::string_view name, std::size_t at) const
        {
            for (const Scope* s = &scope; s; s = s->parent)
                for (const auto& binding : s->bindings)
                    if (int c = column_in_binding(binding, name); c >= 0)
                        return c;
            throw ResolutionError("at position " + std::to_string(at) + ": unknown column '" + std::string(name)
                                  + "'");
        }

        ConditionList parse_conditions(const Scope& scope)
        {
            ConditionList list;
            parse_condition_group(scope, list);
            for (;;)
            {
                if (accept_keyword("and"))
                    list.connectors.push_back(Connector::and_);
                else if (accept_keyword("or"))
                    list.connectors.push_back(Connector::or_);
                else
                    break;
                parse_condition_group(scope, list);
            }
            return list;
        }

        // A single condition, or a parenthesized group flattened into the list.
        void parse_condition_group(const Scope& scope, ConditionList& list)
        {
            if (is_symbol("(") && !is_keyword("select", 1))
            {
                const std::size_t save = pos_;
                try
                {
                    ++pos_;
                    ConditionList inner = parse_conditions(scope);
                    expect_symbol(")");
                    append(list, std::move(inner));
                    return;
                }
                catch (const ParseError&)
                {
                    pos_ = save;
                }
            }
            list.conditions.push_back(parse_condition(scope));
        }

        Condition parse_condition(const Scope& scope)
        {
            Condition cond;
            while (accept_keyword("not"))
                cond.negated = !cond.negated;

            if (accept_keyword("exists"))
            {
                cond.op = CondOp::exists;
                cond.first = Value::of(parse_subquery(&scope));
                return cond;
            }

            cond.lhs = parse_val_unit(scope);
            if (accept_keyword("not"))
                cond.negated = !cond.negated;

            const Token& t = peek();
            if (accept_keyword("between"))
            {
                cond.op = CondOp::between;
                cond.first = parse_value(scope);
                expect_keyword("and");
                cond.second = parse_value(scope);
                return cond;
            }
            if (accept_keyword("in"))
                cond.op = CondOp::in;
            else if (accept_keyword("like"))
                cond.op = CondOp::like;
            else if (accept_keyword("is"))
            {
                cond.op = CondOp::is;
                if (accept_keyword("not"))
                    cond.negated = !cond.negated;
            }
            else if (t.kind == Token::Kind::symbol)
            {
                if (t.text == "=")
                    cond.op = CondOp::eq;
                else if (t.text == ">")
                    cond.op = CondOp::gt;
                else if (t.text == "<")
                    cond.op = CondOp::lt;
                else if (t.text == ">=")
                    cond.op = CondOp::ge;
                else if (t.text == "<=")
                    cond.op = CondOp::le;
                else if (t.text == "!=" || t.text == "<>")
                    cond.op = CondOp::ne;
                else
                    fail("expected a comparison operator, got '" + t.text + "'");
                ++pos_;
            }
            else
            {
                fail("expected a comparison operator, got '" + t.text + "'");
            }
            cond.first = parse_value(scope);
            return cond;
        }

        bool is_literal(std::size_t ahead = 0) const
        {
            const Token& t = peek(ahead);
            if (t.kind == Token::Kind::number || t.kind == Token::Kind::string)
                return true;
            if (t.kind == Token::Kind::symbol && t.text == "-" && peek(ahead + 1).kind == Token::Kind::number)
                return true;
            return t.kind == Token::Kind::ident
                   && (iequals(t.text, "null") || iequals(t.text, "true") || iequals(t.text, "false"));
        }

        void skip_literal()
        {
            if (accept_symbol("-"))
            {
                ++pos_;
                return;
            }
            ++pos_;
        }

        Value parse_value(const Scope& scope)
        {
            if (is_symbol("(") && is_keyword("select", 1))
                return Value::of(parse_subquery(&scope));
            if (is_symbol("(") && is_literal(1))
            {
                ++pos_;
                do
                {
                    if (!is_literal())
                        fail("expected a literal in value list");
                    skip_literal();
                } while (accept_symbol(","));
                expect_symbol(")");
                return Value::placeholder();
            }
            if (is_literal())
            {
                skip_literal();
                return Value::placeholder();
            }
            return Value::of(parse_col_unit(scope));
        }
    };
} // namespace detail

/// Parses one statement of the Spider SQL subset against a schema.
/// Literal values become placeholders; aliases resolve to schema ids.
inline SqlStruct parse_sql(std::string_view query, const Schema& schema)
{
    SqlStruct sql = detail::Parser(query, schema).parse();
    if (sql.select.empty())
        throw ParseError("empty select list");
    return sql;
}
} // namespace xlsql::sql

#endif // XLSQL_SQL_PARSER_HPP_INCLUDED
