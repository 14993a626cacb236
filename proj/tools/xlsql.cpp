// xlsql: corpus statistics, relation-matrix linking, exact-match evaluation
// and embedding similarity checks from the command line.
//
// Exit status: 0 on success, 1 on validation or data errors (including bad
// flags), 2 when the embedding service cannot be reached.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <xlsql/dataset.hpp>
#include <xlsql/embed.hpp>
#include <xlsql/evaluate.hpp>
#include <xlsql/linker.hpp>
#include <xlsql/matrix_export.hpp>
#include <xlsql/remote.hpp>

namespace fs = std::filesystem;

namespace
{
struct RunConfig
{
    std::string schemas;
    std::vector<std::string> examples;
    std::string train;
    std::string test;
    std::string predictions;
    std::vector<std::string> vectors; // [name=]path
    std::string pairs;
    std::string dependencies;
    std::string record_vectors;
    double tau = 0.78;
    bool no_csr = false;
    std::string provider = "file";
    std::string endpoint;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    std::string out;
    std::string language = "auto";
    std::size_t span = 1;
    std::string item_names = "display";
};

std::optional<xlsql::Language> language_of(const RunConfig& config)
{
    if (config.language == "arabic")
        return xlsql::Language::arabic;
    if (config.language == "english")
        return xlsql::Language::english;
    return std::nullopt;
}

xlsql::LinkingConfig linking_config(const RunConfig& config)
{
    xlsql::LinkingConfig linking;
    linking.tau = config.tau;
    linking.csr_enabled = !config.no_csr;
    linking.max_span = config.span;
    linking.item_names =
        config.item_names == "original" ? xlsql::ItemNameSource::original : xlsql::ItemNameSource::display;
    linking.validate();
    return linking;
}

std::string format_fixed(double value, int digits = 2)
{
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
    return buffer;
}

std::pair<std::string, std::string> split_named_path(const std::string& spec)
{
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        return {fs::path(spec).stem().string(), spec};
    return {spec.substr(0, eq), spec.substr(eq + 1)};
}

std::string remote_endpoint(const RunConfig& config)
{
    return config.endpoint.empty() ? xlsql::endpoint_from_environment() : config.endpoint;
}

void require(bool condition, const std::string& message)
{
    if (!condition)
        throw xlsql::ValidationError(message);
}

std::vector<std::string> example_files(const RunConfig& config)
{
    std::vector<std::string> files = config.examples;
    if (!config.train.empty())
        files.push_back(config.train);
    if (!config.test.empty())
        files.push_back(config.test);
    return files;
}

void write_output(const RunConfig& config, const std::string& name, const nlohmann::json& doc)
{
    if (config.out.empty())
        return;
    fs::create_directories(config.out);
    std::ofstream file(fs::path(config.out) / name, std::ios::binary | std::ios::trunc);
    if (!file)
        throw xlsql::Error("cannot write '" + (fs::path(config.out) / name).string() + "'");
    file << doc.dump(2) << '\n';
}

// Provider for link and export-matrix; null when cosine linking is off.
struct ProviderHandle
{
    std::unique_ptr<xlsql::VectorStore> store;
    std::unique_ptr<xlsql::RemoteEmbeddingClient> remote;

    xlsql::EmbeddingProvider* get() const
    {
        if (remote)
            return remote.get();
        return store.get();
    }
};

ProviderHandle open_provider(const RunConfig& config)
{
    ProviderHandle handle;
    if (config.no_csr)
        return handle;
    if (config.provider == "remote")
    {
        xlsql::RemoteOptions options;
        options.endpoint = remote_endpoint(config);
        handle.remote = std::make_unique<xlsql::RemoteEmbeddingClient>(options);
        return handle;
    }
    require(config.vectors.size() == 1, "the file provider needs exactly one --vectors file (or pass --no-csr)");
    auto [name, path] = split_named_path(config.vectors.front());
    handle.store = std::make_unique<xlsql::VectorStore>(xlsql::VectorStore::load(path, name));
    return handle;
}

int cmd_stats(const RunConfig& config)
{
    const auto schemas = xlsql::load_schemas(config.schemas);
    const auto language = language_of(config);
    require(!config.examples.empty() || !config.train.empty() || !config.test.empty(),
            "stats needs --examples or --train/--test");

    std::vector<std::pair<std::string, std::vector<xlsql::Example>>> splits;
    std::vector<xlsql::Example> all;
    for (const auto& path : config.examples)
        splits.emplace_back(fs::path(path).stem().string(), xlsql::load_examples(path, schemas, language));
    std::vector<xlsql::Example> train, test;
    if (!config.train.empty())
        train = xlsql::load_examples(config.train, schemas, language);
    if (!config.test.empty())
        test = xlsql::load_examples(config.test, schemas, language);
    for (const auto& [name, examples] : splits)
        all.insert(all.end(), examples.begin(), examples.end());
    all.insert(all.end(), train.begin(), train.end());
    all.insert(all.end(), test.begin(), test.end());

    std::vector<std::pair<std::string, xlsql::CorpusStats>> rows;
    rows.emplace_back("all", xlsql::corpus_stats(all, schemas));
    if (!config.train.empty())
        rows.emplace_back("train", xlsql::corpus_stats(train, schemas));
    if (!config.test.empty())
        rows.emplace_back("test", xlsql::corpus_stats(test, schemas));
    if (config.train.empty() && config.test.empty() && splits.size() > 1)
        for (const auto& [name, examples] : splits)
            rows.emplace_back(name, xlsql::corpus_stats(examples, schemas));

    std::printf("%-8s %10s %13s %10s %10s\n", "split", "questions", "distinct_sql", "databases", "tables/db");
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [name, stats] : rows)
    {
        std::printf("%-8s %10zu %13zu %10zu %10s\n", name.c_str(), stats.n_questions, stats.n_distinct_sql,
                    stats.n_databases, format_fixed(stats.avg_tables_per_db).c_str());
        doc[name] = xlsql::to_json(stats);
    }

    int status = 0;
    if (!config.train.empty() && !config.test.empty())
    {
        const auto report = xlsql::check_split_disjoint(train, test);
        std::printf("split disjoint: %s\n", report.disjoint ? "true" : "false");
        doc["disjoint"] = report.disjoint;
        doc["overlap"] = report.overlap;
        if (!report.disjoint)
        {
            std::string list;
            for (const auto& db : report.overlap)
                list += (list.empty() ? "" : ", ") + db;
            std::fflush(stdout);
            std::fprintf(stderr, "error: train and test share databases: %s\n", list.c_str());
            status = 1;
        }
    }
    write_output(config, "stats.json", doc);
    return status;
}

void print_link_stats(const std::string& name, const xlsql::LinkStats& stats)
{
    std::printf("[%s]\n", name.c_str());
    std::printf("  examples             %zu\n", stats.n_examples);
    std::printf("  failures             %zu\n", stats.failures.size());
    std::printf("  cosine links         table %zu  column %zu  total %zu\n", stats.n_table_cosine,
                stats.n_column_cosine, stats.total_relations());
    std::printf("  per-example average  table %s  column %s\n", format_fixed(stats.per_example_avg_table()).c_str(),
                format_fixed(stats.per_example_avg_column()).c_str());
    std::printf("  exact links          table %zu  column %zu\n", stats.n_table_exact, stats.n_column_exact);
    std::printf("  partial links        table %zu  column %zu\n", stats.n_table_partial, stats.n_column_partial);
    std::printf("  provider misses      %zu\n", stats.provider_misses);
    std::fflush(stdout);
    for (const auto& failure : stats.failures)
        std::fprintf(stderr, "warning: %s example %zu not linked: %s\n", name.c_str(), failure.index,
                     failure.message.c_str());
}

// Shared by link and export-matrix. With `verify`, every written document
// is read back and checked; problems make the command fail.
int run_link(const RunConfig& config, bool verify)
{
    const auto schemas = xlsql::load_schemas(config.schemas);
    const auto linking = linking_config(config);
    const auto language = language_of(config);
    const auto files = example_files(config);
    require(!files.empty(), "no example files given (--examples, --train or --test)");
    require(!verify || !config.out.empty(), "export-matrix needs --out");
    require(config.dependencies.empty() || files.size() == 1, "--dependencies needs exactly one example file");

    std::vector<std::vector<xlsql::DependencyEdge>> dependencies;
    if (!config.dependencies.empty())
        dependencies = xlsql::load_dependency_edges(config.dependencies);

    ProviderHandle provider = open_provider(config);
    xlsql::LinkStats total;
    nlohmann::json summary = nlohmann::json::object();
    std::size_t problems = 0;
    for (const auto& path : files)
    {
        const std::string name = fs::path(path).stem().string();
        const auto examples = xlsql::load_examples(path, schemas, language);
        if (!dependencies.empty())
            require(dependencies.size() == examples.size(), "dependency file has " +
                                                                std::to_string(dependencies.size()) + " entries for "
                                                                + std::to_string(examples.size()) + " examples");
        auto links = xlsql::link_corpus(examples, schemas, provider.get(), linking, config.jobs, dependencies);
        print_link_stats(name, links.stats);
        summary[name] = xlsql::to_json(links.stats);

        total.n_examples += links.stats.n_examples;
        total.n_table_cosine += links.stats.n_table_cosine;
        total.n_column_cosine += links.stats.n_column_cosine;
        total.n_table_exact += links.stats.n_table_exact;
        total.n_table_partial += links.stats.n_table_partial;
        total.n_column_exact += links.stats.n_column_exact;
        total.n_column_partial += links.stats.n_column_partial;
        total.provider_misses += links.stats.provider_misses;

        if (config.out.empty())
            continue;
        const fs::path directory = files.size() == 1 ? fs::path(config.out) : fs::path(config.out) / name;
        xlsql::export_matrices(directory, examples, schemas, links.matrices);
        if (!verify)
            continue;
        for (std::size_t i = 0; i < links.matrices.size(); ++i)
        {
            if (!links.matrices[i])
                continue;
            const auto file = directory / "matrices" / xlsql::matrix_file_name(i);
            for (const auto& problem : xlsql::verify_matrix_document(xlsql::detail::read_json_file(file)))
            {
                std::fprintf(stderr, "error: %s: %s\n", file.string().c_str(), problem.c_str());
                ++problems;
            }
        }
    }
    if (files.size() > 1)
    {
        print_link_stats("all", total);
        summary["all"] = xlsql::to_json(total);
    }
    summary["tau"] = linking.tau;
    summary["csr"] = linking.csr_enabled;
    write_output(config, "link_stats.json", summary);

    if (!config.record_vectors.empty())
    {
        require(provider.remote != nullptr, "--record-vectors needs the remote provider");
        provider.remote->snapshot().save(config.record_vectors);
    }
    if (verify)
        std::printf("verified matrices: %s\n", problems == 0 ? "ok" : "FAILED");
    return problems == 0 ? 0 : 1;
}

int cmd_evaluate(const RunConfig& config)
{
    const auto schemas = xlsql::load_schemas(config.schemas);
    const auto files = example_files(config);
    require(files.size() == 1, "evaluate needs exactly one gold example file");
    const auto gold = xlsql::load_examples(files.front(), schemas, language_of(config));
    const auto predictions = xlsql::load_predictions(config.predictions);
    const auto report = xlsql::evaluate(predictions, gold, schemas, config.jobs);
    std::fputs(xlsql::format_report(report).c_str(), stdout);
    write_output(config, "eval.json", xlsql::to_json(report));
    return 0;
}

int cmd_simcheck(const RunConfig& config)
{
    const auto pairs = xlsql::load_pairs(config.pairs);
    std::vector<std::unique_ptr<xlsql::EmbeddingProvider>> owned;
    for (const auto& spec : config.vectors)
    {
        auto [name, path] = split_named_path(spec);
        owned.push_back(std::make_unique<xlsql::VectorStore>(xlsql::VectorStore::load(path, name)));
    }
    if (config.provider == "remote" || !config.endpoint.empty())
    {
        xlsql::RemoteOptions options;
        options.endpoint = remote_endpoint(config);
        owned.push_back(std::make_unique<xlsql::RemoteEmbeddingClient>(options));
    }
    require(!owned.empty(), "simcheck needs --vectors files or a remote endpoint");

    std::vector<xlsql::EmbeddingProvider*> providers;
    for (const auto& p : owned)
        providers.push_back(p.get());
    const auto report = xlsql::similarity_matrix_report(providers, pairs);

    std::printf("%-16s %-32s %10s\n", "provider", "pair", "similarity");
    for (const auto& row : report.rows)
        std::printf("%-16s %-32s %10s\n", row.provider.c_str(), row.pair.c_str(),
                    row.percentage ? format_fixed(*row.percentage).c_str() : "n/a");
    std::fflush(stdout);
    for (const auto& row : report.rows)
        if (!row.percentage)
            std::fprintf(stderr, "warning: %s / %s: %s\n", row.provider.c_str(), row.pair.c_str(),
                         row.reason.c_str());
    write_output(config, "simcheck.json", xlsql::to_json(report));
    return 0;
}
} // namespace

int main(int argc, char** argv)
{
    RunConfig config;
    CLI::App app{"Cross-lingual text-to-SQL preprocessing and evaluation"};
    app.set_config("--config", "", "TOML or INI file with default flag values; flags given on the command line win");
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--schemas", config.schemas, "tables.json with the database schemas")->check(CLI::ExistingFile);
    app.add_option("--examples", config.examples, "Example file(s) in Spider format")->check(CLI::ExistingFile);
    app.add_option("--train", config.train, "Training split")->check(CLI::ExistingFile);
    app.add_option("--test", config.test, "Test split")->check(CLI::ExistingFile);
    app.add_option("--predictions", config.predictions, "One predicted query per line")->check(CLI::ExistingFile);
    app.add_option("--vectors", config.vectors, "Vector file, optionally as name=path");
    app.add_option("--pairs", config.pairs, "Tab-separated text pairs for simcheck")->check(CLI::ExistingFile);
    app.add_option("--dependencies", config.dependencies, "Dependency edges aligned with the examples")
        ->check(CLI::ExistingFile);
    app.add_option("--record-vectors", config.record_vectors, "Save every vector fetched from the remote provider");
    app.add_option("--tau", config.tau, "Cosine threshold for cosine-match links")->capture_default_str();
    app.add_flag("--no-csr", config.no_csr, "Disable cosine-similarity linking");
    app.add_option("--provider", config.provider, "Embedding provider")
        ->check(CLI::IsMember({"file", "remote"}))
        ->capture_default_str();
    app.add_option("--endpoint", config.endpoint, "Embedding service URL (default: $EMBED_ENDPOINT)");
    app.add_option("--jobs", config.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--out", config.out, "Output directory");
    app.add_option("--language", config.language, "Tokenization language for questions without tokens")
        ->check(CLI::IsMember({"auto", "arabic", "english"}))
        ->capture_default_str();
    app.add_option("--span", config.span, "Longest question span compared by cosine")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--item-names", config.item_names, "Schema names used for cosine linking")
        ->check(CLI::IsMember({"display", "original"}))
        ->capture_default_str();

    auto* stats = app.add_subcommand("stats", "Corpus statistics and split disjointness");
    auto* link = app.add_subcommand("link", "Build relation matrices and report link counts");
    auto* export_matrix = app.add_subcommand("export-matrix", "Write relation matrices and verify them");
    auto* evaluate = app.add_subcommand("evaluate", "Exact-match accuracy by hardness level");
    auto* simcheck = app.add_subcommand("simcheck", "Cosine similarity of text pairs per provider");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try
    {
        if (*stats || *link || *export_matrix || *evaluate)
            require(!config.schemas.empty(), "--schemas is required");
        if (*stats)
            return cmd_stats(config);
        if (*link)
            return run_link(config, false);
        if (*export_matrix)
            return run_link(config, true);
        if (*evaluate)
        {
            require(!config.predictions.empty(), "--predictions is required");
            return cmd_evaluate(config);
        }
        if (*simcheck)
        {
            require(!config.pairs.empty(), "--pairs is required");
            return cmd_simcheck(config);
        }
    }
    catch (const xlsql::TransportError& e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    catch (const std::exception& e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
