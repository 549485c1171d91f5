#include <CLI11.hpp>

#include <iostream>

#include "ergolab/cli_recipes.hpp"

using namespace ergolab;

int main(int argc, char** argv) {
    CLI::App app{"ergolab: ergospheres, horizons, and waves in moving media"};
    std::string config_path, out_dir = "out";
    std::uint64_t seed = 0;
    bool list_recipes = false;
    app.add_option("--config", config_path, "experiment config file (key = value)");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
    app.add_flag("--list-recipes", list_recipes, "print the bundled experiment recipes");
    CLI11_PARSE(app, argc, argv);

    if (list_recipes) {
        for (const auto& r : cli::recipe_catalog())
            std::cout << r.name << "\t" << r.config << "\t" << r.description << "\n";
        return cli::kPass;
    }
    if (config_path.empty()) {
        std::cerr << "error: --config is required (or use --list-recipes)\n";
        return cli::kValidationError;
    }
    try {
        KeyValueConfig cfg = KeyValueConfig::parse(read_text_file(config_path));
        int code = cli::run_config(cfg, out_dir,
                                   seed_opt->count() ? std::optional<std::uint64_t>(seed)
                                                     : std::nullopt);
        if (code == cli::kAssertFail) std::cerr << "one or more checks failed; see manifest\n";
        return code;
    } catch (const ConfigParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return cli::kParseError;
    } catch (const ConfigValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return cli::kValidationError;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return cli::kRuntimeError;
    }
}
