#include <emergent/runner.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace emergent;

enum ExitCode : int { Ok = 0, Invalid = 1, Numeric = 2 };

int cmd_validate(const std::string& path) {
    cli::RunConfig config;
    try {
        config = cli::load_config(path);
    } catch (const cli::ConfigError& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return Invalid;
    }
    auto violations = cli::validate(config);
    if (violations.empty()) {
        std::cout << "ok: " << path << "\n";
        return Ok;
    }
    for (const auto& v : violations) std::cerr << "invalid: " << v << "\n";
    return Invalid;
}

int cmd_run(const std::string& path, const std::optional<std::string>& output, std::optional<std::size_t> threads) {
    try {
        auto config = cli::load_config(path);
        if (output) config.output = *output;
        if (threads) config.threads = *threads;
        auto outcome = cli::run(config);
        for (const auto& w : outcome.summary["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
        for (const auto& f : outcome.files) std::cout << "wrote " << f << "\n";
        std::cout << "wall time " << outcome.summary["wall_time_s"].get<double>() << " s\n";
        return Ok;
    } catch (const cli::ValidationFailure& e) {
        for (const auto& v : e.violations) std::cerr << "invalid: " << v << "\n";
        return Invalid;
    } catch (const cli::ConfigError& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return Invalid;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return Invalid;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return Numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Numeric;
    }
}

void cmd_list_models() {
    for (const auto& m : cli::model_catalog()) {
        std::cout << m.name << "\n  required:";
        for (const auto& p : m.required) std::cout << " " << p;
        if (!m.optional.empty()) {
            std::cout << "\n  optional:";
            for (const auto& p : m.optional) std::cout << " " << p;
        }
        std::cout << "\n  tasks:";
        for (const auto& t : m.tasks) std::cout << " " << t;
        std::cout << "\n";
    }
    std::cout << "latent graphs (principle_b):";
    for (const auto& g : models::latent_graph_catalog()) std::cout << " " << g.name;
    std::cout << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Emergent non-Hermitian lattices from isospectral reduction"};
    app.require_subcommand(1);

    std::string run_path;
    std::optional<std::string> output;
    std::optional<std::size_t> threads;
    auto* run = app.add_subcommand("run", "Run the task described by a JSON config");
    run->add_option("config", run_path, "Path to the config file")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--output", output, "Override the output prefix");
    run->add_option("-j,--threads", threads, "Worker threads (0 = hardware concurrency)");

    std::string validate_path;
    auto* val = app.add_subcommand("validate", "Check a config without running it");
    val->add_option("config", validate_path, "Path to the config file")->required()->check(CLI::ExistingFile);

    auto* list = app.add_subcommand("list-models", "List models, their parameters and supported tasks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Ok : Invalid;
    }

    if (*run) return cmd_run(run_path, output, threads);
    if (*val) return cmd_validate(validate_path);
    if (*list) cmd_list_models();
    return Ok;
}
