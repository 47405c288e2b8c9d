// Batch front-end: rydcat <command> [--config file.json] [--set key=value]...
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure,
// 4 data file missing or malformed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"

namespace {

enum Exit { ok = 0, config_error = 2, numeric_error = 3, data_error = 4 };

struct Invocation {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string output_dir;
    long long seed = -1;
};

int execute(const std::string& command, const Invocation& inv) {
    using namespace rydcat;
    using namespace rydcat::cli;
    namespace fs = std::filesystem;
    try {
        const json file = inv.config_file.empty() ? json() : load_config_file(inv.config_file);
        const Params params = resolve(command, file, inv.overrides);

        Context ctx;
        ctx.seed = 1;
        if (file.is_object() && file.contains("seed")) {
            if (!file["seed"].is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
            ctx.seed = file["seed"].get<std::uint64_t>();
        }
        if (inv.seed >= 0) ctx.seed = static_cast<std::uint64_t>(inv.seed);
        std::string out = "out/" + command;
        if (file.is_object() && file.contains("output_dir")) {
            if (!file["output_dir"].is_string()) throw ConfigError("output_dir must be a string");
            out = file["output_dir"].get<std::string>();
        }
        if (!inv.output_dir.empty()) out = inv.output_dir;
        ctx.out = out;
        std::error_code ec;
        fs::create_directories(ctx.out, ec);
        if (ec) throw ConfigError("cannot create output directory " + out + ": " + ec.message());

        const json summary = run_command(params, ctx);

        json manifest = {{"command", command},
                         {"seed", ctx.seed},
                         {"output_dir", out},
                         {"parameters", params.values()},
                         {"data_dir", rydberg::data_dir().string()},
                         {"files", ctx.files},
                         {"summary", summary}};
        std::ofstream(ctx.out / "manifest.json") << manifest.dump(2) << '\n';
        std::cout << summary.dump(2) << '\n';
        return ok;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return numeric_error;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spin-cat simulation toolkit: bifurcation dynamics, QJMC decoherence, dressing scans, "
                 "Rydberg pair mixing and mechanical transfer"};
    app.require_subcommand(0, 1);
    Invocation inv;
    std::string chosen;

    for (const auto& name : rydcat::cli::command_names()) {
        auto* sub = app.add_subcommand(name, rydcat::cli::command_description(name));
        sub->add_option("-c,--config", inv.config_file, "JSON config file {command, seed, output_dir, parameters}");
        sub->add_option("-s,--set", inv.overrides, "scalar override key=value (repeatable)");
        sub->add_option("-o,--output-dir", inv.output_dir, "output directory (default out/<command>)");
        sub->add_option("--seed", inv.seed, "master seed")->check(CLI::NonNegativeNumber);
        sub->callback([&chosen, name] { chosen = name; });
    }
    bool list = false;
    app.add_flag("--list-keys", list, "print every command's keys and defaults, then exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }
    if (list) {
        for (const auto& [k, v] : rydcat::cli::command_defaults()) std::cout << k << ' ' << v.dump() << '\n';
        return ok;
    }
    if (chosen.empty()) {
        std::cerr << app.help();
        return config_error;
    }
    return execute(chosen, inv);
}
