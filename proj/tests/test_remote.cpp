#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include <xlsql/linker.hpp>
#include <xlsql/remote.hpp>

#include "support.hpp"

using namespace xlsql;
using nlohmann::json;

namespace
{
constexpr std::size_t server_dim = 8;

// Deterministic pseudo-embedding of a text.
std::vector<double> fake_embedding(const std::string& text)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text)
        h = (h ^ c) * 1099511628211ull;
    std::mt19937_64 rng(h);
    std::normal_distribution<double> g;
    std::vector<double> v(server_dim);
    for (auto& x : v)
        x = g(rng);
    return v;
}

// In-process embedding service speaking the wire contract.
class FakeService
{
public:
    // Answers the first `failures` requests with this status before behaving.
    int failures = 0;
    int failure_status = 503;
    // Replaces the body of every answer when set.
    std::function<std::string(const json&)> override_body;

    FakeService()
    {
        server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests;
            const auto body = json::parse(req.body);
            {
                std::lock_guard lock(mutex_);
                for (const auto& t : body.at("texts"))
                    received.push_back(t.get<std::string>());
            }
            if (failures > 0)
            {
                --failures;
                res.status = failure_status;
                return;
            }
            if (override_body)
            {
                res.set_content(override_body(body), "application/json");
                return;
            }
            json vectors = json::array();
            for (const auto& t : body.at("texts"))
            {
                const auto text = t.get<std::string>();
                vectors.push_back(text == "unknown" ? json(nullptr) : json(fake_embedding(text)));
            }
            res.set_content(json{{"dim", server_dim}, {"vectors", vectors}}.dump(), "application/json");
        });
        server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"status": "ok", "model": "fake", "dim": 8})", "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~FakeService()
    {
        server_.stop();
        thread_.join();
    }

    std::string endpoint() const
    {
        return "http://127.0.0.1:" + std::to_string(port_);
    }

    RemoteOptions options() const
    {
        RemoteOptions o;
        o.endpoint = endpoint();
        o.initial_backoff = std::chrono::milliseconds(1);
        o.timeout = std::chrono::milliseconds(5000);
        return o;
    }

    std::vector<std::string> received_texts()
    {
        std::lock_guard lock(mutex_);
        return received;
    }

    std::atomic<int> requests{0};

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::mutex mutex_;
    std::vector<std::string> received;
};

std::vector<std::string> texts(std::initializer_list<const char*> list)
{
    return {list.begin(), list.end()};
}
} // namespace

TEST(RemoteClient, OneVectorPerTextInOrder)
{
    FakeService service;
    RemoteEmbeddingClient client(service.options());
    const auto out = client.embed(texts({"a", "b"}));
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0]->values().size(), server_dim);
    EXPECT_EQ(*out[0], EmbeddingVector(fake_embedding("a")));
    EXPECT_EQ(*out[1], EmbeddingVector(fake_embedding("b")));
    EXPECT_EQ(client.info().dim, server_dim);
}

TEST(RemoteClient, RepeatedTextGetsIdenticalVectorsAndOneRequestSlot)
{
    FakeService service;
    RemoteEmbeddingClient client(service.options());
    const auto out = client.embed(texts({"king", "queen", "king"}));
    EXPECT_EQ(out[0], out[2]);
    EXPECT_EQ(service.received_texts(), texts({"king", "queen"}));
}

TEST(RemoteClient, SecondCallIsServedFromCache)
{
    FakeService service;
    RemoteEmbeddingClient client(service.options());
    const auto batch = texts({"travel", "سفر", "man"});
    const auto first = client.embed(batch);
    const int after_first = service.requests.load();
    const auto second = client.embed(batch);
    EXPECT_EQ(service.requests.load(), after_first);
    EXPECT_EQ(client.requests_sent(), 1u);
    ASSERT_EQ(first.size(), second.size());
    for (std::size_t i = 0; i < first.size(); ++i)
        EXPECT_EQ(first[i], second[i]);
}

TEST(RemoteClient, SendsNormalizedKeys)
{
    FakeService service;
    RemoteEmbeddingClient client(service.options());
    client.embed(texts({"  King ", "المـنتجات"}));
    EXPECT_EQ(service.received_texts(), texts({"king", "المنتجات"}));
    // A differently spelled but equal key is a cache hit.
    client.embed(texts({"KING"}));
    EXPECT_EQ(service.requests.load(), 1);
}

TEST(RemoteClient, SplitsLargeBatches)
{
    FakeService service;
    auto options = service.options();
    options.max_batch = 4;
    RemoteEmbeddingClient client(options);
    std::vector<std::string> batch;
    for (int i = 0; i < 10; ++i)
        batch.push_back("t" + std::to_string(i));
    const auto out = client.embed(batch);
    EXPECT_EQ(service.requests.load(), 3);
    for (std::size_t i = 0; i < batch.size(); ++i)
        EXPECT_EQ(*out[i], EmbeddingVector(fake_embedding(batch[i])));
}

TEST(RemoteClient, NullEntriesAreMisses)
{
    FakeService service;
    RemoteEmbeddingClient client(service.options());
    const auto out = client.embed(texts({"unknown", "known"}));
    EXPECT_FALSE(out[0]);
    EXPECT_TRUE(out[1]);
}

TEST(RemoteClient, RetriesServerErrors)
{
    FakeService service;
    service.failures = 2;
    RemoteEmbeddingClient client(service.options());
    const auto out = client.embed(texts({"x"}));
    EXPECT_TRUE(out[0]);
    EXPECT_EQ(service.requests.load(), 3);
}

TEST(RemoteClient, GivesUpAfterThreeAttempts)
{
    FakeService service;
    service.failures = 100;
    RemoteEmbeddingClient client(service.options());
    EXPECT_THROW(client.embed(texts({"x"})), TransportError);
    EXPECT_EQ(service.requests.load(), 3);
}

TEST(RemoteClient, UnreachableServiceIsATransportError)
{
    int port = 0;
    {
        FakeService probe; // take a free port, then release it
        port = std::stoi(probe.endpoint().substr(probe.endpoint().rfind(':') + 1));
    }
    RemoteOptions options;
    options.endpoint = "http://127.0.0.1:" + std::to_string(port);
    options.initial_backoff = std::chrono::milliseconds(1);
    options.timeout = std::chrono::milliseconds(500);
    RemoteEmbeddingClient client(options);
    EXPECT_THROW(client.embed(texts({"x"})), TransportError);
    EXPECT_FALSE(client.health());
}

TEST(RemoteClient, ClientErrorsAreProtocolErrors)
{
    FakeService service;
    service.failures = 1;
    service.failure_status = 400;
    RemoteEmbeddingClient client(service.options());
    EXPECT_THROW(client.embed(texts({"x"})), ProtocolError);
    EXPECT_EQ(service.requests.load(), 1);
}

TEST(RemoteClient, MalformedResponsesAreProtocolErrors)
{
    const std::vector<std::function<std::string(const json&)>> bodies{
        [](const json&) { return std::string("not json"); },
        [](const json&) { return std::string("[1, 2]"); },
        [](const json&) { return json{{"vectors", json::array()}}.dump(); },
        [](const json&) { return json{{"dim", 2}, {"vectors", json::array()}}.dump(); },
        [](const json&) { return json{{"dim", 2}, {"vectors", {{1.0, 2.0, 3.0}}}}.dump(); },
        [](const json&) { return json{{"dim", 2}, {"vectors", {{1.0, "x"}}}}.dump(); },
        [](const json&) { return json{{"dim", 0}, {"vectors", {{1.0}}}}.dump(); },
    };
    for (std::size_t i = 0; i < bodies.size(); ++i)
    {
        FakeService service;
        service.override_body = bodies[i];
        RemoteEmbeddingClient client(service.options());
        EXPECT_THROW(client.embed(texts({"x"})), ProtocolError) << "case " << i;
    }
}

TEST(RemoteClient, DimensionMayNotChangeBetweenAnswers)
{
    FakeService service;
    int call = 0;
    service.override_body = [&call](const json&) {
        const std::size_t dim = ++call == 1 ? 2 : 3;
        return json{{"dim", dim}, {"vectors", {std::vector<double>(dim, 1.0)}}}.dump();
    };
    RemoteEmbeddingClient client(service.options());
    client.embed(texts({"a"}));
    EXPECT_THROW(client.embed(texts({"b"})), ProtocolError);
}

TEST(RemoteClient, EndpointIsRequired)
{
    EXPECT_THROW(RemoteEmbeddingClient(RemoteOptions{}), ValidationError);
}

TEST(RemoteClient, HealthReportsTheModel)
{
    FakeService service;
    RemoteEmbeddingClient client(service.options());
    const auto health = client.health();
    ASSERT_TRUE(health);
    EXPECT_EQ(health->at("status"), "ok");
    EXPECT_EQ(health->at("model"), "fake");
}

TEST(RemoteClient, EndpointWithPathPrefix)
{
    FakeService service;
    auto options = service.options();
    options.endpoint = service.endpoint() + "/";
    RemoteEmbeddingClient client(options);
    EXPECT_TRUE(client.embed(texts({"a"}))[0]);
}

TEST(RemoteClient, ConcurrentBatchesAgree)
{
    FakeService service;
    RemoteEmbeddingClient client(service.options());
    std::vector<std::string> words;
    for (int i = 0; i < 40; ++i)
        words.push_back("w" + std::to_string(i % 25));
    std::vector<std::vector<std::optional<EmbeddingVector>>> results(8);
    {
        std::vector<std::jthread> threads;
        for (std::size_t t = 0; t < results.size(); ++t)
            threads.emplace_back([&, t] {
                auto shuffled = words;
                std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937(static_cast<unsigned>(t)));
                auto out = client.embed(shuffled);
                for (std::size_t i = 0; i < shuffled.size(); ++i)
                    ASSERT_EQ(*out[i], EmbeddingVector(fake_embedding(shuffled[i])));
            });
    }
    EXPECT_EQ(client.snapshot().size(), 25u);
}

// A file store seeded with the remote's answers links exactly like the remote.
TEST(RemoteClient, FileStoreSeededFromRemoteLinksIdentically)
{
    FakeService service;
    const auto& schemas = xlsql::testing::fixture_schemas();
    const auto examples = load_examples(xlsql::testing::data_path("ar_test.json"), schemas);
    LinkingConfig config;
    config.tau = 0.3; // the fake vectors are random, so use a low bar to get links

    RemoteEmbeddingClient remote(service.options());
    const auto via_remote = link_corpus(examples, schemas, &remote, config, 3);

    const auto path = std::filesystem::temp_directory_path() / "xlsql_remote_snapshot.vec";
    remote.snapshot().save(path);
    auto store = VectorStore::load(path);
    const auto via_store = link_corpus(examples, schemas, &store, config, 1);

    ASSERT_EQ(via_remote.matrices.size(), via_store.matrices.size());
    for (std::size_t i = 0; i < via_store.matrices.size(); ++i)
        EXPECT_EQ(via_remote.matrices[i], via_store.matrices[i]) << i;
    EXPECT_GT(via_store.stats.total_relations(), 0u);
    EXPECT_EQ(to_json(via_remote.stats), to_json(via_store.stats));
}
