#ifndef XLSQL_EMBED_HPP_INCLUDED
#define XLSQL_EMBED_HPP_INCLUDED

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "text.hpp"

namespace xlsql
{
class EmbeddingVector
{
public:
    EmbeddingVector() = default;

    explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values))
    {
        if (values_.empty())
            throw ValidationError("embedding vector must have dim > 0");
    }

    std::size_t dim() const noexcept
    {
        return values_.size();
    }

    std::span<const double> values() const noexcept
    {
        return values_;
    }

    double operator[](std::size_t i) const noexcept
    {
        return values_[i];
    }

    double norm() const noexcept
    {
        double sum = 0.0;
        for (double v : values_)
            sum += v * v;
        return std::sqrt(sum);
    }

    /// Unit-length copy. Throws on the zero vector.
    EmbeddingVector normalized() const
    {
        const double n = norm();
        if (n == 0.0)
            throw ValidationError("cannot normalize the zero vector");
        std::vector<double> out(values_.size());
        for (std::size_t i = 0; i < values_.size(); ++i)
            out[i] = values_[i] / n;
        return EmbeddingVector(std::move(out));
    }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
    std::vector<double> values_;
};

inline double dot(const EmbeddingVector& a, const EmbeddingVector& b)
{
    if (a.dim() != b.dim())
        throw ValidationError("dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    double sum = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i)
        sum += a[i] * b[i];
    return sum;
}

/// dot(a, b) / (|a| |b|). Throws on dimension mismatch or a zero vector.
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b)
{
    const double d = dot(a, b);
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0)
        throw ValidationError("cosine similarity of a zero vector");
    return d / (na * nb);
}

struct ProviderInfo
{
    std::string name;
    std::size_t dim = 0; // 0 until known
    std::string languages;
};

/// Source of embeddings for arbitrary text.
///
/// Implementations return one entry per input text, in order; an empty
/// entry means the provider has no vector for that text. The same text
/// yields the same vector for the lifetime of the provider. Transport
/// failures throw TransportError.
class EmbeddingProvider
{
public:
    virtual ~EmbeddingProvider() = default;

    virtual ProviderInfo info() const = 0;

    virtual std::vector<std::optional<EmbeddingVector>> embed(std::span<const std::string> texts) = 0;

    std::optional<EmbeddingVector> embed_one(const std::string& text)
    {
        auto out = embed(std::span<const std::string>(&text, 1));
        return out.empty() ? std::nullopt : std::move(out.front());
    }
};

/// In-memory vector table keyed by normalize_key(text), backed by a text
/// file: a header line holding the dimension, then one
/// `key<TAB>v1 v2 ...` record per line.
class VectorStore final : public EmbeddingProvider
{
public:
    explicit VectorStore(std::string name = "file") : name_(std::move(name)) {}

    static VectorStore load(const std::filesystem::path& path, std::string name = {})
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw ParseError("cannot open vector file '" + path.string() + "'");
        VectorStore store(name.empty() ? path.stem().string() : std::move(name));

        std::string line;
        if (!std::getline(in, line))
            return store;
        std::size_t dim = 0;
        {
            const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), dim);
            if (ec != std::errc() || dim == 0)
                throw ParseError("vector file '" + path.string() + "': header must be the dimension");
        }

        std::size_t line_no = 1;
        while (std::getline(in, line))
        {
            ++line_no;
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (line.empty())
                continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos)
                throw ParseError("vector file '" + path.string() + "' line " + std::to_string(line_no)
                                 + ": missing tab");
            std::vector<double> values;
            values.reserve(dim);
            const char* p = line.data() + tab + 1;
            const char* end = line.data() + line.size();
            while (p < end)
            {
                while (p < end && *p == ' ')
                    ++p;
                if (p == end)
                    break;
                double v = 0.0;
                const auto [next, ec] = std::from_chars(p, end, v);
                if (ec != std::errc())
                    throw ParseError("vector file '" + path.string() + "' line " + std::to_string(line_no)
                                     + ": bad number");
                values.push_back(v);
                p = next;
            }
            if (values.size() != dim)
                throw ParseError("vector file '" + path.string() + "' line " + std::to_string(line_no) + ": expected "
                                 + std::to_string(dim) + " values, got " + std::to_string(values.size()));
            store.insert(line.substr(0, tab), EmbeddingVector(std::move(values)));
        }
        return store;
    }

    /// Writes every entry in key order; values round-trip exactly.
    void save(const std::filesystem::path& path) const
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write vector file '" + path.string() + "'");
        out << dim_ << '\n';
        char buffer[32];
        for (const auto& [key, vector] : entries_)
        {
            out << key << '\t';
            for (std::size_t i = 0; i < vector.dim(); ++i)
            {
                const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, vector[i]);
                if (i)
                    out << ' ';
                out.write(buffer, ptr - buffer);
            }
            out << '\n';
        }
    }

    void insert(std::string_view text, EmbeddingVector vector)
    {
        if (dim_ == 0)
            dim_ = vector.dim();
        else if (vector.dim() != dim_)
            throw ValidationError("vector for '" + std::string(text) + "' has dim " + std::to_string(vector.dim())
                                  + ", store has " + std::to_string(dim_));
        entries_.insert_or_assign(normalize_key(text), std::move(vector));
    }

    std::optional<EmbeddingVector> lookup(std::string_view text) const
    {
        auto it = entries_.find(normalize_key(text));
        if (it == entries_.end())
            return std::nullopt;
        return it->second;
    }

    std::size_t size() const noexcept
    {
        return entries_.size();
    }

    const std::map<std::string, EmbeddingVector>& entries() const noexcept
    {
        return entries_;
    }

    ProviderInfo info() const override
    {
        return {name_, dim_, "any"};
    }

    std::vector<std::optional<EmbeddingVector>> embed(std::span<const std::string> texts) override
    {
        std::vector<std::optional<EmbeddingVector>> out;
        out.reserve(texts.size());
        for (const auto& text : texts)
            out.push_back(lookup(text));
        return out;
    }

private:
    std::string name_;
    std::size_t dim_ = 0;
    std::map<std::string, EmbeddingVector> entries_;
};

inline std::optional<EmbeddingVector> file_store_lookup(const VectorStore& store, std::string_view text)
{
    return store.lookup(text);
}

struct TextPair
{
    std::string left;
    std::string right;
    std::string label;
};

struct SimilarityRow
{
    std::string provider;
    std::string pair;
    std::optional<double> percentage; // empty when the row could not be computed
    std::string reason;
};

struct SimilarityReport
{
    std::vector<SimilarityRow> rows;
};

/// 100 x cosine for every (provider, pair). A failing provider or a text
/// without a vector yields a row with no percentage and a reason.
inline SimilarityReport similarity_matrix_report(std::span<EmbeddingProvider* const> providers,
                                                 std::span<const TextPair> pairs)
{
    SimilarityReport report;
    std::vector<std::string> texts;
    for (const auto& pair : pairs)
    {
        texts.push_back(pair.left);
        texts.push_back(pair.right);
    }
    auto label_of = [](const TextPair& pair) {
        return pair.label.empty() ? pair.left + " / " + pair.right : pair.label;
    };

    for (EmbeddingProvider* provider : providers)
    {
        const std::string name = provider->info().name;
        std::vector<std::optional<EmbeddingVector>> vectors;
        try
        {
            vectors = provider->embed(texts);
        }
        catch (const Error& e)
        {
            for (const auto& pair : pairs)
                report.rows.push_back({name, label_of(pair), std::nullopt, e.what()});
            continue;
        }
        for (std::size_t i = 0; i < pairs.size(); ++i)
        {
            SimilarityRow row{name, label_of(pairs[i]), std::nullopt, {}};
            const auto& a = vectors[2 * i];
            const auto& b = vectors[2 * i + 1];
            if (!a)
                row.reason = "no vector for '" + pairs[i].left + "'";
            else if (!b)
                row.reason = "no vector for '" + pairs[i].right + "'";
            else
            {
                try
                {
                    row.percentage = 100.0 * cosine_similarity(*a, *b);
                }
                catch (const Error& e)
                {
                    row.reason = e.what();
                }
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

/// Tab-separated pairs: `left<TAB>right[<TAB>label]`; '#' starts a comment.
inline std::vector<TextPair> load_pairs(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open pair file '" + path.string() + "'");
    std::vector<TextPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        const auto first = line.find('\t');
        if (first == std::string::npos)
            throw ParseError("pair file '" + path.string() + "' line " + std::to_string(line_no) + ": missing tab");
        const auto second = line.find('\t', first + 1);
        TextPair pair;
        pair.left = line.substr(0, first);
        pair.right = line.substr(first + 1, second == std::string::npos ? std::string::npos : second - first - 1);
        if (second != std::string::npos)
            pair.label = line.substr(second + 1);
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

inline std::string format_report(const SimilarityReport& report)
{
    std::string out;
    char number[32];
    for (const auto& row : report.rows)
    {
        out += row.provider + '\t' + row.pair + '\t';
        if (row.percentage)
        {
            std::snprintf(number, sizeof number, "%.2f", *row.percentage);
            out += number;
        }
        else
        {
            out += "n/a\t" + row.reason;
        }
        out += '\n';
    }
    return out;
}

inline nlohmann::json to_json(const SimilarityReport& report)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows)
    {
        nlohmann::json r{{"provider", row.provider}, {"pair", row.pair}};
        if (row.percentage)
            r["similarity"] = *row.percentage;
        else
            r["error"] = row.reason;
        rows.push_back(std::move(r));
    }
    return {{"rows", std::move(rows)}};
}
} // namespace xlsql

#endif // XLSQL_EMBED_HPP_INCLUDED
