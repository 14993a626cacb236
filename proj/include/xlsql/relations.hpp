#ifndef XLSQL_RELATIONS_HPP_INCLUDED
#define XLSQL_RELATIONS_HPP_INCLUDED

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace xlsql
{
/// Typed edge between two nodes of the question-schema graph, read as
/// "row node -> column node". Ids are stable; exported matrices use them.
enum class Relation : std::uint8_t
{
    question_question_identity,
    question_question_adjacent_forward, // column token follows the row token
    question_question_adjacent_backward,
    question_question_distant,
    question_question_dependency_forward, // row token is the head
    question_question_dependency_backward,

    question_table_exact_match,
    question_table_partial_match,
    question_table_cosine_match,
    question_table_no_match,
    table_question_exact_match,
    table_question_partial_match,
    table_question_cosine_match,
    table_question_no_match,

    question_column_exact_match,
    question_column_partial_match,
    question_column_cosine_match,
    question_column_no_match,
    column_question_exact_match,
    column_question_partial_match,
    column_question_cosine_match,
    column_question_no_match,

    table_column_has,
    table_column_primary_key,
    table_column_none,
    column_table_has,
    column_table_primary_key,
    column_table_none,

    column_column_identity,
    column_column_same_table,
    column_column_foreign_key_forward, // row column references the column column
    column_column_foreign_key_backward,
    column_column_none,

    table_table_identity,
    table_table_foreign_key,
    table_table_none,
};

inline constexpr std::size_t relation_count = static_cast<std::size_t>(Relation::table_table_none) + 1;

namespace detail
{
    struct RelationInfo
    {
        std::string_view name;
        Relation inverse;
    };

    using R = Relation;
    inline constexpr std::array<RelationInfo, relation_count> relation_table{{
        {"question-question-identity", R::question_question_identity},
        {"question-question-adjacent-forward", R::question_question_adjacent_backward},
        {"question-question-adjacent-backward", R::question_question_adjacent_forward},
        {"question-question-distant", R::question_question_distant},
        {"question-question-dependency-forward", R::question_question_dependency_backward},
        {"question-question-dependency-backward", R::question_question_dependency_forward},

        {"question-table-exact-match", R::table_question_exact_match},
        {"question-table-partial-match", R::table_question_partial_match},
        {"question-table-cosine-match", R::table_question_cosine_match},
        {"question-table-no-match", R::table_question_no_match},
        {"table-question-exact-match", R::question_table_exact_match},
        {"table-question-partial-match", R::question_table_partial_match},
        {"table-question-cosine-match", R::question_table_cosine_match},
        {"table-question-no-match", R::question_table_no_match},

        {"question-column-exact-match", R::column_question_exact_match},
        {"question-column-partial-match", R::column_question_partial_match},
        {"question-column-cosine-match", R::column_question_cosine_match},
        {"question-column-no-match", R::column_question_no_match},
        {"column-question-exact-match", R::question_column_exact_match},
        {"column-question-partial-match", R::question_column_partial_match},
        {"column-question-cosine-match", R::question_column_cosine_match},
        {"column-question-no-match", R::question_column_no_match},

        {"table-column-has", R::column_table_has},
        {"table-column-primary-key", R::column_table_primary_key},
        {"table-column-none", R::column_table_none},
        {"column-table-has", R::table_column_has},
        {"column-table-primary-key", R::table_column_primary_key},
        {"column-table-none", R::table_column_none},

        {"column-column-identity", R::column_column_identity},
        {"column-column-same-table", R::column_column_same_table},
        {"column-column-foreign-key-forward", R::column_column_foreign_key_backward},
        {"column-column-foreign-key-backward", R::column_column_foreign_key_forward},
        {"column-column-none", R::column_column_none},

        {"table-table-identity", R::table_table_identity},
        {"table-table-foreign-key", R::table_table_foreign_key},
        {"table-table-none", R::table_table_none},
    }};
} // namespace detail

constexpr std::uint8_t id_of(Relation r) noexcept
{
    return static_cast<std::uint8_t>(r);
}

constexpr std::string_view name_of(Relation r) noexcept
{
    return detail::relation_table[id_of(r)].name;
}

constexpr Relation inverse(Relation r) noexcept
{
    return detail::relation_table[id_of(r)].inverse;
}

constexpr std::optional<Relation> relation_from_id(std::size_t id) noexcept
{
    if (id >= relation_count)
        return std::nullopt;
    return static_cast<Relation>(id);
}

constexpr std::optional<Relation> relation_from_name(std::string_view name) noexcept
{
    for (std::size_t i = 0; i < relation_count; ++i)
        if (detail::relation_table[i].name == name)
            return static_cast<Relation>(i);
    return std::nullopt;
}

static_assert([] {
    for (std::size_t i = 0; i < relation_count; ++i)
        if (inverse(inverse(static_cast<Relation>(i))) != static_cast<Relation>(i))
            return false;
    return true;
}());
} // namespace xlsql

#endif // XLSQL_RELATIONS_HPP_INCLUDED
