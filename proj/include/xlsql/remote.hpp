#ifndef XLSQL_REMOTE_HPP_INCLUDED
#define XLSQL_REMOTE_HPP_INCLUDED

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "embed.hpp"
#include "errors.hpp"
#include "text.hpp"

namespace xlsql
{
struct RemoteOptions
{
    /// Base URL such as http://127.0.0.1:8000; "/embed" and "/health" are appended.
    std::string endpoint;
    std::string name = "remote";
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
    std::chrono::milliseconds timeout{30000};
    std::size_t max_batch = 64;
};

/// EMBED_ENDPOINT, or an empty string when unset.
inline std::string endpoint_from_environment()
{
    const char* value = std::getenv("EMBED_ENDPOINT");
    return value ? std::string(value) : std::string();
}

/// Client for the remote embedding service.
///
/// Wire contract: POST {"texts": [...]} to <endpoint>/embed, answer
/// {"dim": n, "vectors": [[...], ...]} with one vector (or null) per text.
/// Texts are sent in normalize_key form and every answer is cached under
/// that key for the lifetime of the client, so a text is requested at most
/// once. Safe for concurrent embed() calls.
class RemoteEmbeddingClient final : public EmbeddingProvider
{
public:
    explicit RemoteEmbeddingClient(RemoteOptions options) : options_(std::move(options))
    {
        if (options_.endpoint.empty())
            throw ValidationError("remote provider needs an endpoint (flag or EMBED_ENDPOINT)");
        split_endpoint();
    }

    ProviderInfo info() const override
    {
        return {options_.name, dim_.load(), "any"};
    }

    std::vector<std::optional<EmbeddingVector>> embed(std::span<const std::string> texts) override
    {
        std::vector<std::string> keys;
        keys.reserve(texts.size());
        for (const auto& text : texts)
            keys.push_back(normalize_key(text));

        std::vector<std::string> missing;
        {
            std::lock_guard lock(mutex_);
            std::unordered_set<std::string> seen;
            for (const auto& key : keys)
                if (!cache_.contains(key) && seen.insert(key).second)
                    missing.push_back(key);
        }

        for (std::size_t begin = 0; begin < missing.size(); begin += options_.max_batch)
        {
            const std::size_t end = std::min(missing.size(), begin + options_.max_batch);
            std::vector<std::string> batch(missing.begin() + static_cast<std::ptrdiff_t>(begin),
                                           missing.begin() + static_cast<std::ptrdiff_t>(end));
            auto vectors = request(batch);
            std::lock_guard lock(mutex_);
            for (std::size_t i = 0; i < batch.size(); ++i)
                cache_.try_emplace(batch[i], std::move(vectors[i]));
        }

        std::vector<std::optional<EmbeddingVector>> out;
        out.reserve(keys.size());
        std::lock_guard lock(mutex_);
        for (const auto& key : keys)
            out.push_back(cache_.at(key));
        return out;
    }

    /// Number of HTTP requests that produced a valid answer.
    std::size_t requests_sent() const noexcept
    {
        return requests_.load();
    }

    /// Every cached vector, ready to be saved as a reproducible fixture.
    VectorStore snapshot() const
    {
        VectorStore store(options_.name);
        std::lock_guard lock(mutex_);
        for (const auto& [key, vector] : cache_)
            if (vector)
                store.insert(key, *vector);
        return store;
    }

    /// Body of GET <endpoint>/health, or nullopt when unreachable.
    std::optional<nlohmann::json> health() const
    {
        auto client = make_client();
        auto response = client.Get(path_prefix_ + "/health");
        if (!response || response->status != 200)
            return std::nullopt;
        auto body = nlohmann::json::parse(response->body, nullptr, false);
        if (body.is_discarded())
            return std::nullopt;
        return body;
    }

private:
    RemoteOptions options_;
    std::string host_;
    std::string path_prefix_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::optional<EmbeddingVector>> cache_;
    std::atomic<std::size_t> dim_{0};
    std::atomic<std::size_t> requests_{0};

    void split_endpoint()
    {
        std::string url = options_.endpoint;
        if (url.find("://") == std::string::npos)
            url = "http://" + url;
        const auto scheme_end = url.find("://") + 3;
        const auto slash = url.find('/', scheme_end);
        host_ = url.substr(0, slash);
        path_prefix_ = slash == std::string::npos ? std::string() : url.substr(slash);
        while (!path_prefix_.empty() && path_prefix_.back() == '/')
            path_prefix_.pop_back();
    }

    httplib::Client make_client() const
    {
        httplib::Client client(host_);
        const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
        const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - seconds);
        client.set_connection_timeout(seconds.count(), micros.count());
        client.set_read_timeout(seconds.count(), micros.count());
        client.set_write_timeout(seconds.count(), micros.count());
        return client;
    }

    std::vector<std::optional<EmbeddingVector>> request(const std::vector<std::string>& batch)
    {
        const std::string body = nlohmann::json{{"texts", batch}}.dump();
        std::string failure;
        auto backoff = options_.initial_backoff;
        for (int attempt = 0; attempt < options_.attempts; ++attempt)
        {
            if (attempt > 0)
            {
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            }
            auto client = make_client();
            auto response = client.Post(path_prefix_ + "/embed", body, "application/json");
            if (!response)
            {
                failure = httplib::to_string(response.error());
                continue;
            }
            if (response->status >= 500)
            {
                failure = "HTTP " + std::to_string(response->status);
                continue;
            }
            if (response->status != 200)
                throw ProtocolError("embedding service answered HTTP " + std::to_string(response->status));
            auto vectors = decode(response->body, batch.size());
            ++requests_;
            return vectors;
        }
        throw TransportError("embedding service at " + options_.endpoint + " unreachable after "
                             + std::to_string(options_.attempts) + " attempts: " + failure);
    }

    std::vector<std::optional<EmbeddingVector>> decode(const std::string& body, std::size_t expected)
    {
        auto doc = nlohmann::json::parse(body, nullptr, false);
        if (doc.is_discarded() || !doc.is_object())
            throw ProtocolError("embedding response is not a JSON object");
        auto dim_it = doc.find("dim");
        auto vec_it = doc.find("vectors");
        if (dim_it == doc.end() || !dim_it->is_number_unsigned() || vec_it == doc.end() || !vec_it->is_array())
            throw ProtocolError("embedding response lacks 'dim' or 'vectors'");
        const auto dim = dim_it->get<std::size_t>();
        if (dim == 0)
            throw ProtocolError("embedding response has dim 0");
        if (vec_it->size() != expected)
            throw ProtocolError("embedding response has " + std::to_string(vec_it->size()) + " vectors for "
                                + std::to_string(expected) + " texts");
        std::size_t known = 0;
        if (!dim_.compare_exchange_strong(known, dim) && known != dim)
            throw ProtocolError("embedding dimension changed from " + std::to_string(known) + " to "
                                + std::to_string(dim));

        std::vector<std::optional<EmbeddingVector>> out;
        out.reserve(expected);
        for (const auto& entry : *vec_it)
        {
            if (entry.is_null())
            {
                out.emplace_back();
                continue;
            }
            if (!entry.is_array() || entry.size() != dim)
                throw ProtocolError("embedding response vector does not have dim " + std::to_string(dim));
            std::vector<double> values;
            values.reserve(dim);
            for (const auto& v : entry)
            {
                if (!v.is_number())
                    throw ProtocolError("embedding response vector holds a non-number");
                values.push_back(v.get<double>());
            }
            out.emplace_back(EmbeddingVector(std::move(values)));
        }
        return out;
    }
};
} // namespace xlsql

#endif // XLSQL_REMOTE_HPP_INCLUDED
