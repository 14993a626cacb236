#ifndef XLSQL_LINKER_HPP_INCLUDED
#define XLSQL_LINKER_HPP_INCLUDED

#include <algorithm>
#include <exception>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "embed.hpp"
#include "errors.hpp"
#include "relations.hpp"
#include "text.hpp"

namespace xlsql
{
enum class ItemNameSource
{
    display,
    original,
};

struct LinkingConfig
{
    double tau = 0.78;
    bool csr_enabled = true;
    /// Longest question span compared by cosine; 1 means single tokens.
    std::size_t max_span = 1;
    ItemNameSource item_names = ItemNameSource::display;

    void validate() const
    {
        if (!(tau > 0.0 && tau <= 1.0))
            throw ValidationError("tau must lie in (0, 1], got " + std::to_string(tau));
        if (max_span < 1)
            throw ValidationError("span length must be at least 1");
    }
};

enum class MatchKind : std::uint8_t
{
    none,
    partial,
    exact,
    cosine,
};

/// Question-to-schema linking cells: one MatchKind per (token, table) and
/// per (token, column) pair.
struct LinkingCells
{
    std::size_t n_question = 0;
    std::size_t n_table = 0;
    std::size_t n_column = 0;
    std::vector<MatchKind> table_cells;
    std::vector<MatchKind> column_cells;

    LinkingCells() = default;
    LinkingCells(std::size_t q, std::size_t t, std::size_t c)
    : n_question(q), n_table(t), n_column(c), table_cells(q * t, MatchKind::none), column_cells(q * c, MatchKind::none)
    {}

    MatchKind& table(std::size_t q, std::size_t t)
    {
        return table_cells[q * n_table + t];
    }
    MatchKind table(std::size_t q, std::size_t t) const
    {
        return table_cells[q * n_table + t];
    }
    MatchKind& column(std::size_t q, std::size_t c)
    {
        return column_cells[q * n_column + c];
    }
    MatchKind column(std::size_t q, std::size_t c) const
    {
        return column_cells[q * n_column + c];
    }

    friend bool operator==(const LinkingCells&, const LinkingCells&) = default;
};

/// A syntactic dependency between two question tokens, supplied from outside.
struct DependencyEdge
{
    std::size_t head = 0;
    std::size_t dependent = 0;
    std::string label;
};

/// Dense relation matrix over question tokens, then tables, then columns.
class RelationMatrix
{
public:
    RelationMatrix() = default;

    RelationMatrix(std::size_t n_question, std::size_t n_table, std::size_t n_column)
    : n_question_(n_question), n_table_(n_table), n_column_(n_column),
      cells_(side() * side(), Relation::question_question_distant)
    {}

    std::size_t n_question() const noexcept
    {
        return n_question_;
    }
    std::size_t n_table() const noexcept
    {
        return n_table_;
    }
    std::size_t n_column() const noexcept
    {
        return n_column_;
    }
    std::size_t side() const noexcept
    {
        return n_question_ + n_table_ + n_column_;
    }

    std::size_t question_node(std::size_t i) const noexcept
    {
        return i;
    }
    std::size_t table_node(std::size_t t) const noexcept
    {
        return n_question_ + t;
    }
    std::size_t column_node(std::size_t c) const noexcept
    {
        return n_question_ + n_table_ + c;
    }

    Relation at(std::size_t row, std::size_t col) const noexcept
    {
        return cells_[row * side() + col];
    }

    /// Sets (row, col) to r and (col, row) to inverse(r).
    void set_pair(std::size_t row, std::size_t col, Relation r) noexcept
    {
        cells_[row * side() + col] = r;
        cells_[col * side() + row] = inverse(r);
    }

    std::span<const Relation> cells() const noexcept
    {
        return cells_;
    }

    /// Count of cells holding r.
    std::size_t count(Relation r) const noexcept
    {
        return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), r));
    }

    friend bool operator==(const RelationMatrix&, const RelationMatrix&) = default;

private:
    std::size_t n_question_ = 0;
    std::size_t n_table_ = 0;
    std::size_t n_column_ = 0;
    std::vector<Relation> cells_;
};

/// First (row, col) where cells[row][col] != inverse(cells[col][row]), if any.
inline std::optional<std::pair<std::size_t, std::size_t>> find_asymmetry(const RelationMatrix& m)
{
    for (std::size_t i = 0; i < m.side(); ++i)
        for (std::size_t j = i; j < m.side(); ++j)
            if (m.at(i, j) != inverse(m.at(j, i)))
                return std::pair{i, j};
    return std::nullopt;
}

namespace detail
{
    inline std::vector<std::string> linking_keys(std::span<const std::string> tokens)
    {
        std::vector<std::string> keys;
        keys.reserve(tokens.size());
        for (const auto& token : tokens)
            keys.push_back(normalize_key(token));
        return keys;
    }

    inline std::string item_text(const Schema& schema, bool is_table, std::size_t index, ItemNameSource source)
    {
        if (is_table)
        {
            const Table& t = schema.tables[index];
            return source == ItemNameSource::display ? t.name_display : t.name_original;
        }
        const Column& c = schema.columns[index];
        return source == ItemNameSource::display ? c.name_display : c.name_original;
    }

    inline std::string join_span(std::span<const std::string> keys, std::size_t start, std::size_t length)
    {
        std::string phrase;
        for (std::size_t k = start; k < start + length; ++k)
        {
            if (k > start)
                phrase += ' ';
            phrase += keys[k];
        }
        return phrase;
    }

    inline MatchKind string_match(std::span<const std::string> span, const std::vector<std::string>& words)
    {
        if (span.empty() || words.empty() || span.size() > words.size())
            return MatchKind::none;
        if (span.size() == words.size())
            return std::equal(span.begin(), span.end(), words.begin()) ? MatchKind::exact : MatchKind::none;
        auto it = std::search(words.begin(), words.end(), span.begin(), span.end());
        return it == words.end() ? MatchKind::none : MatchKind::partial;
    }

    // Distinct texts cosine linking embeds: question spans, then item names.
    inline std::vector<std::string> csr_texts(std::span<const std::string> keys, const Schema& schema,
                                              const LinkingConfig& config)
    {
        std::vector<std::string> texts;
        std::unordered_set<std::string> seen;
        auto request = [&](std::string text) {
            if (!text.empty() && seen.insert(text).second)
                texts.push_back(std::move(text));
        };
        const std::size_t max_span = std::min(config.max_span, keys.size());
        for (std::size_t length = 1; length <= max_span; ++length)
            for (std::size_t start = 0; start + length <= keys.size(); ++start)
                if (std::none_of(keys.begin() + static_cast<std::ptrdiff_t>(start),
                                 keys.begin() + static_cast<std::ptrdiff_t>(start + length),
                                 [](const std::string& k) { return k.empty(); }))
                    request(join_span(keys, start, length));
        for (std::size_t t = 0; t < schema.tables.size(); ++t)
            request(normalize_key(item_text(schema, true, t, config.item_names)));
        for (std::size_t c = 1; c < schema.columns.size(); ++c)
            request(normalize_key(item_text(schema, false, c, config.item_names)));
        return texts;
    }
} // namespace detail

/// Exact and partial name matches between question tokens and schema items.
///
/// A span of tokens exactly matches an item when it equals the item's
/// display-name word sequence, and partially matches when it is a strict
/// contiguous part of it. Spans are tried longest first and a cell keeps the
/// first match it receives. The all-columns entry never links.
inline LinkingCells string_link(std::span<const std::string> tokens, const Schema& schema)
{
    const auto keys = detail::linking_keys(tokens);
    LinkingCells cells(keys.size(), schema.tables.size(), schema.columns.size());

    std::vector<std::vector<std::string>> table_words;
    std::vector<std::vector<std::string>> column_words;
    std::size_t longest = 0;
    for (const auto& table : schema.tables)
    {
        table_words.push_back(name_words(table.name_display));
        longest = std::max(longest, table_words.back().size());
    }
    for (std::size_t c = 0; c < schema.columns.size(); ++c)
    {
        column_words.push_back(c == 0 ? std::vector<std::string>{} : name_words(schema.columns[c].name_display));
        longest = std::max(longest, column_words.back().size());
    }

    for (std::size_t length = std::min(longest, keys.size()); length >= 1; --length)
    {
        for (std::size_t start = 0; start + length <= keys.size(); ++start)
        {
            const std::span<const std::string> span(keys.data() + start, length);
            if (std::any_of(span.begin(), span.end(), [](const std::string& k) { return k.empty(); }))
                continue;
            for (std::size_t t = 0; t < table_words.size(); ++t)
                if (auto kind = detail::string_match(span, table_words[t]); kind != MatchKind::none)
                    for (std::size_t q = start; q < start + length; ++q)
                        if (cells.table(q, t) == MatchKind::none)
                            cells.table(q, t) = kind;
            for (std::size_t c = 1; c < column_words.size(); ++c)
                if (auto kind = detail::string_match(span, column_words[c]); kind != MatchKind::none)
                    for (std::size_t q = start; q < start + length; ++q)
                        if (cells.column(q, c) == MatchKind::none)
                            cells.column(q, c) = kind;
        }
    }
    return cells;
}

struct CsrResult
{
    LinkingCells cells; // only MatchKind::cosine or none
    std::size_t provider_misses = 0;
};

/// Cosine-similarity links between question tokens (or spans, when
/// config.max_span > 1) and schema items.
///
/// A cell becomes a cosine match when the cosine between the token text
/// and the item's full name is at least config.tau. Texts the provider
/// has no vector for are skipped and counted in provider_misses. Priority
/// against string matches is applied by overlay().
inline CsrResult csr_link(std::span<const std::string> tokens, const Schema& schema, EmbeddingProvider& provider,
                          const LinkingConfig& config)
{
    config.validate();
    const auto keys = detail::linking_keys(tokens);
    CsrResult result{LinkingCells(keys.size(), schema.tables.size(), schema.columns.size()), 0};
    if (!config.csr_enabled || keys.empty())
        return result;

    const std::size_t max_span = std::min(config.max_span, keys.size());
    const std::vector<std::string> texts = detail::csr_texts(keys, schema, config);
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < texts.size(); ++i)
        slot.emplace(texts[i], i);

    const auto raw = provider.embed(texts);
    if (raw.size() != texts.size())
        throw ProtocolError("provider returned " + std::to_string(raw.size()) + " vectors for "
                            + std::to_string(texts.size()) + " texts");

    // Unit-normalize once; cosine is then a dot product.
    std::vector<std::optional<EmbeddingVector>> unit(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i)
    {
        if (raw[i] && raw[i]->norm() > 0.0)
            unit[i] = raw[i]->normalized();
        else
            ++result.provider_misses;
    }
    auto vector_of = [&](const std::string& text) -> const EmbeddingVector* {
        auto it = slot.find(text);
        if (it == slot.end() || !unit[it->second])
            return nullptr;
        return &*unit[it->second];
    };

    std::vector<const EmbeddingVector*> table_vectors;
    for (std::size_t t = 0; t < schema.tables.size(); ++t)
        table_vectors.push_back(vector_of(normalize_key(detail::item_text(schema, true, t, config.item_names))));
    std::vector<const EmbeddingVector*> column_vectors{nullptr};
    for (std::size_t c = 1; c < schema.columns.size(); ++c)
        column_vectors.push_back(vector_of(normalize_key(detail::item_text(schema, false, c, config.item_names))));

    for (std::size_t length = 1; length <= max_span; ++length)
    {
        for (std::size_t start = 0; start + length <= keys.size(); ++start)
        {
            const EmbeddingVector* span_vector = vector_of(detail::join_span(keys, start, length));
            if (!span_vector)
                continue;
            for (std::size_t t = 0; t < table_vectors.size(); ++t)
                if (table_vectors[t] && dot(*span_vector, *table_vectors[t]) >= config.tau)
                    for (std::size_t q = start; q < start + length; ++q)
                        result.cells.table(q, t) = MatchKind::cosine;
            for (std::size_t c = 1; c < column_vectors.size(); ++c)
                if (column_vectors[c] && dot(*span_vector, *column_vectors[c]) >= config.tau)
                    for (std::size_t q = start; q < start + length; ++q)
                        result.cells.column(q, c) = MatchKind::cosine;
        }
    }
    return result;
}

/// Adds cosine matches to cells that have no string match.
inline void overlay(LinkingCells& base, const LinkingCells& csr)
{
    for (std::size_t i = 0; i < base.table_cells.size(); ++i)
        if (base.table_cells[i] == MatchKind::none && csr.table_cells[i] == MatchKind::cosine)
            base.table_cells[i] = MatchKind::cosine;
    for (std::size_t i = 0; i < base.column_cells.size(); ++i)
        if (base.column_cells[i] == MatchKind::none && csr.column_cells[i] == MatchKind::cosine)
            base.column_cells[i] = MatchKind::cosine;
}

namespace detail
{
    inline Relation question_table_relation(MatchKind kind)
    {
        switch (kind)
        {
        case MatchKind::exact:
            return Relation::question_table_exact_match;
        case MatchKind::partial:
            return Relation::question_table_partial_match;
        case MatchKind::cosine:
            return Relation::question_table_cosine_match;
        case MatchKind::none:
            break;
        }
        return Relation::question_table_no_match;
    }

    inline Relation question_column_relation(MatchKind kind)
    {
        switch (kind)
        {
        case MatchKind::exact:
            return Relation::question_column_exact_match;
        case MatchKind::partial:
            return Relation::question_column_partial_match;
        case MatchKind::cosine:
            return Relation::question_column_cosine_match;
        case MatchKind::none:
            break;
        }
        return Relation::question_column_no_match;
    }
} // namespace detail

/// Full relation matrix from already computed linking cells.
inline RelationMatrix assemble_matrix(const LinkingCells& links, const Schema& schema,
                                      std::span<const DependencyEdge> dependencies = {})
{
    const std::size_t nq = links.n_question;
    const std::size_t nt = schema.tables.size();
    const std::size_t nc = schema.columns.size();
    RelationMatrix m(nq, nt, nc);

    for (std::size_t i = 0; i < nq; ++i)
    {
        m.set_pair(i, i, Relation::question_question_identity);
        if (i + 1 < nq)
            m.set_pair(i, i + 1, Relation::question_question_adjacent_forward);
    }
    for (const auto& edge : dependencies)
        if (edge.head < nq && edge.dependent < nq && edge.head != edge.dependent)
            m.set_pair(edge.head, edge.dependent, Relation::question_question_dependency_forward);

    for (std::size_t q = 0; q < nq; ++q)
    {
        for (std::size_t t = 0; t < nt; ++t)
            m.set_pair(m.question_node(q), m.table_node(t), detail::question_table_relation(links.table(q, t)));
        for (std::size_t c = 0; c < nc; ++c)
            m.set_pair(m.question_node(q), m.column_node(c), detail::question_column_relation(links.column(q, c)));
    }

    for (std::size_t a = 0; a < nt; ++a)
        for (std::size_t b = a; b < nt; ++b)
            m.set_pair(m.table_node(a), m.table_node(b), a == b ? Relation::table_table_identity : Relation::table_table_none);

    for (std::size_t t = 0; t < nt; ++t)
        for (std::size_t c = 0; c < nc; ++c)
        {
            const Column& column = schema.columns[c];
            Relation r = Relation::table_column_none;
            if (column.table_index == static_cast<int>(t))
                r = schema.is_primary_key(static_cast<int>(c)) ? Relation::table_column_primary_key
                                                               : Relation::table_column_has;
            m.set_pair(m.table_node(t), m.column_node(c), r);
        }

    for (std::size_t a = 0; a < nc; ++a)
        for (std::size_t b = a; b < nc; ++b)
        {
            Relation r = Relation::column_column_none;
            if (a == b)
                r = Relation::column_column_identity;
            else if (!schema.columns[a].is_all_columns() && schema.columns[a].table_index == schema.columns[b].table_index)
                r = Relation::column_column_same_table;
            m.set_pair(m.column_node(a), m.column_node(b), r);
        }

    for (const auto& fk : schema.foreign_keys)
    {
        const auto from = static_cast<std::size_t>(fk.column);
        const auto to = static_cast<std::size_t>(fk.referenced);
        if (from == to)
            continue;
        const Relation current = m.at(m.column_node(from), m.column_node(to));
        // A pair declared in both directions keeps the first declaration.
        if (current != Relation::column_column_foreign_key_forward && current != Relation::column_column_foreign_key_backward)
            m.set_pair(m.column_node(from), m.column_node(to), Relation::column_column_foreign_key_forward);
        const auto ta = static_cast<std::size_t>(schema.columns[from].table_index);
        const auto tb = static_cast<std::size_t>(schema.columns[to].table_index);
        if (ta != tb)
            m.set_pair(m.table_node(ta), m.table_node(tb), Relation::table_table_foreign_key);
    }
    return m;
}

/// Relation matrix of one example: question adjacency (and optional
/// dependency edges), schema structure, and linking cells from string
/// matching overlaid with cosine matches when a provider is given and CSR
/// is enabled.
inline RelationMatrix build_matrix(const Example& example, const Schema& schema, EmbeddingProvider* provider,
                                   const LinkingConfig& config, std::span<const DependencyEdge> dependencies = {},
                                   std::size_t* provider_misses = nullptr)
{
    config.validate();
    LinkingCells links = string_link(example.question_tokens, schema);
    if (provider && config.csr_enabled)
    {
        CsrResult csr = csr_link(example.question_tokens, schema, *provider, config);
        overlay(links, csr.cells);
        if (provider_misses)
            *provider_misses += csr.provider_misses;
    }
    return assemble_matrix(links, schema, dependencies);
}

struct LinkFailure
{
    std::size_t index = 0;
    std::string message;
};

struct LinkStats
{
    std::size_t n_examples = 0;
    std::size_t n_table_cosine = 0;
    std::size_t n_column_cosine = 0;
    std::size_t n_table_exact = 0;
    std::size_t n_table_partial = 0;
    std::size_t n_column_exact = 0;
    std::size_t n_column_partial = 0;
    std::size_t provider_misses = 0;
    std::vector<LinkFailure> failures;

    std::size_t total_relations() const noexcept
    {
        return n_table_cosine + n_column_cosine;
    }
    double per_example_avg_table() const noexcept
    {
        return n_examples == 0 ? 0.0 : static_cast<double>(n_table_cosine) / static_cast<double>(n_examples);
    }
    double per_example_avg_column() const noexcept
    {
        return n_examples == 0 ? 0.0 : static_cast<double>(n_column_cosine) / static_cast<double>(n_examples);
    }

    /// Adds the question-to-schema link counts of one matrix.
    void add(const RelationMatrix& m)
    {
        n_table_cosine += m.count(Relation::question_table_cosine_match);
        n_column_cosine += m.count(Relation::question_column_cosine_match);
        n_table_exact += m.count(Relation::question_table_exact_match);
        n_table_partial += m.count(Relation::question_table_partial_match);
        n_column_exact += m.count(Relation::question_column_exact_match);
        n_column_partial += m.count(Relation::question_column_partial_match);
    }
};

inline nlohmann::json to_json(const LinkStats& stats)
{
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : stats.failures)
        failures.push_back({{"index", f.index}, {"message", f.message}});
    return {{"n_examples", stats.n_examples},
            {"n_table_cosine", stats.n_table_cosine},
            {"n_column_cosine", stats.n_column_cosine},
            {"per_example_avg_table", stats.per_example_avg_table()},
            {"per_example_avg_column", stats.per_example_avg_column()},
            {"total_relations", stats.total_relations()},
            {"n_table_exact", stats.n_table_exact},
            {"n_table_partial", stats.n_table_partial},
            {"n_column_exact", stats.n_column_exact},
            {"n_column_partial", stats.n_column_partial},
            {"provider_misses", stats.provider_misses},
            {"failures", std::move(failures)}};
}

struct CorpusLinks
{
    /// Aligned with the input examples; empty where linking failed.
    std::vector<std::optional<RelationMatrix>> matrices;
    LinkStats stats;
};

/// Builds every example's matrix and aggregates the link counts.
///
/// Per-example failures are collected in stats.failures; a TransportError
/// from the provider aborts the run. With jobs > 1 the provider is called
/// from several threads and must tolerate that. Results do not depend on
/// the thread count.
inline CorpusLinks link_corpus(std::span<const Example> examples, const SchemaSet& schemas, EmbeddingProvider* provider,
                               const LinkingConfig& config, unsigned jobs = 1,
                               std::span<const std::vector<DependencyEdge>> dependencies = {})
{
    config.validate();
    const std::size_t n = examples.size();
    CorpusLinks result;
    result.matrices.resize(n);
    result.stats.n_examples = n;
    std::vector<std::string> errors(n);
    std::vector<std::size_t> misses(n, 0);
    std::vector<std::exception_ptr> fatal(n);

    // Warm batching providers with every distinct text up front.
    if (provider && config.csr_enabled)
    {
        std::vector<std::string> texts;
        std::unordered_set<std::string> seen;
        for (const auto& example : examples)
        {
            const Schema* schema = schemas.find(example.db_id);
            if (!schema)
                continue;
            for (auto& text : detail::csr_texts(detail::linking_keys(example.question_tokens), *schema, config))
                if (seen.insert(text).second)
                    texts.push_back(std::move(text));
        }
        constexpr std::size_t chunk = 1024;
        for (std::size_t begin = 0; begin < texts.size(); begin += chunk)
        {
            const std::size_t count = std::min(chunk, texts.size() - begin);
            provider->embed(std::span<const std::string>(texts.data() + begin, count));
        }
    }

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
        {
            try
            {
                const Schema& schema = schemas.at(examples[i].db_id);
                std::span<const DependencyEdge> deps;
                if (i < dependencies.size())
                    deps = dependencies[i];
                result.matrices[i] = build_matrix(examples[i], schema, provider, config, deps, &misses[i]);
            }
            catch (const TransportError&)
            {
                fatal[i] = std::current_exception();
                return;
            }
            catch (const std::exception& e)
            {
                errors[i] = e.what();
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

    for (const auto& e : fatal)
        if (e)
            std::rethrow_exception(e);

    for (std::size_t i = 0; i < n; ++i)
    {
        result.stats.provider_misses += misses[i];
        if (result.matrices[i])
            result.stats.add(*result.matrices[i]);
        else
            result.stats.failures.push_back({i, errors[i]});
    }
    return result;
}

/// Dependency edges per example: a JSON array aligned with the example
/// file, each entry an array of {"head", "dependent", "label"} objects.
inline std::vector<std::vector<DependencyEdge>> load_dependency_edges(const std::filesystem::path& path)
{
    const auto document = detail::read_json_file(path);
    if (!document.is_array())
        throw ParseError("dependency file must hold a JSON array");
    std::vector<std::vector<DependencyEdge>> out;
    out.reserve(document.size());
    for (std::size_t i = 0; i < document.size(); ++i)
    {
        std::vector<DependencyEdge> edges;
        try
        {
            for (const auto& e : document[i])
                edges.push_back({e.at("head").get<std::size_t>(), e.at("dependent").get<std::size_t>(),
                                 e.value("label", std::string())});
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ParseError("dependency record " + std::to_string(i) + ": " + e.what());
        }
        out.push_back(std::move(edges));
    }
    return out;
}
} // namespace xlsql

#endif // XLSQL_LINKER_HPP_INCLUDED
