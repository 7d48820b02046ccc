#include <iostream>

#include <CLI11.hpp>
#include <omp.h>

#include "parquetry/config.hpp"
#include "parquetry/demo.hpp"
#include "parquetry/error.hpp"
#include "parquetry/pipeline.hpp"
#include "parquetry/service.hpp"

using namespace parquetry;

int main(int argc, char** argv) {
    CLI::App app{"Approximate a target image with veneer patches and emit laser cut plans"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string project = ".";
    std::string config_path;
    std::vector<std::string> overrides;
    int threads = -1;
    bool force = false;
    app.add_option("-p,--project", project, "Project directory")->capture_default_str();
    app.add_option("-c,--config", config_path, "Config file (default <project>/config.txt)");
    app.add_option("-s,--set", overrides, "Override a config entry, key=value");
    app.add_option("--threads", threads, "Worker thread cap")->check(CLI::NonNegativeNumber);
    app.add_flag("-f,--force", force, "Re-run stages even when their inputs are unchanged");

    auto* init = app.add_subcommand("init", "Write a config file with every default");
    bool overwrite = false;
    init->add_flag("--overwrite", overwrite, "Replace an existing config");
    app.add_subcommand("demo", "Write a small synthetic project (64x64 target, two panels)");
    app.add_subcommand("ingest", "Load targets and source panels; resets the pool");
    app.add_subcommand("features", "Gamut tables and feature maps");
    app.add_subcommand("morph", "Relax the grid toward masked target edges");
    app.add_subcommand("segment", "Split targets into patches (regular | labels | morph)");
    auto* match = app.add_subcommand("match", "Place every patch on the persisted pool");
    bool reset_pool = false;
    match->add_flag("--reset-pool", reset_pool, "Start from untouched source panels");
    app.add_subcommand("seams", "Optimize the cuts between overlapping patches");
    app.add_subcommand("export", "Preview and SVG cut plans");
    app.add_subcommand("render", "Preview image only");
    app.add_subcommand("ablate", "Repeat reconstruction on one pool until it runs out");
    auto* serve = app.add_subcommand("serve", "Start the local HTTP service");
    std::string host = "127.0.0.1";
    int port = 8765;
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--port", port)->capture_default_str();
    app.add_subcommand("all", "ingest through export with a fresh pool");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kConfigError;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    const std::filesystem::path root(project);
    const std::filesystem::path cfg_file = config_path.empty() ? root / "config.txt" : std::filesystem::path(config_path);

    try {
        if (cmd == "demo") {
            write_demo_project(root);
            std::cout << "wrote demo project to " << root.string() << "\n";
            return kOk;
        }
        if (cmd == "init") {
            if (std::filesystem::exists(cfg_file) && !overwrite) {
                std::cerr << cfg_file.string() << " exists; pass --overwrite to replace it\n";
                return kConfigError;
            }
            Config c;
            for (const auto& kv : overrides) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
                set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
            }
            c.validate();
            save_config(c, cfg_file);
            std::filesystem::create_directories(root / "targets");
            std::filesystem::create_directories(root / "sources");
            std::cout << "wrote " << cfg_file.string() << "\n";
            return kOk;
        }

        Config cfg;
        if (std::filesystem::exists(cfg_file)) {
            cfg = load_config(cfg_file);
        } else if (!config_path.empty()) {
            throw ConfigError("config file " + cfg_file.string() + " not found");
        }
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
            set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        cfg.validate();
        if (threads >= 0) cfg.threads = threads;
        if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

        if (cmd == "serve") {
            Service svc(root, cfg);
            std::cout << "serving " << root.string() << " on http://" << host << ":" << port << std::endl;
            return svc.listen(host, port) ? kOk : kFailure;
        }

        Pipeline p(root, cfg);
        p.force = force;
        if (cmd == "ingest") p.ingest();
        else if (cmd == "features") p.features();
        else if (cmd == "morph") p.morph();
        else if (cmd == "segment") p.segment();
        else if (cmd == "match") return p.match(reset_pool);
        else if (cmd == "seams") p.seams();
        else if (cmd == "export") p.export_plan();
        else if (cmd == "render") p.render();
        else if (cmd == "ablate") return p.ablate();
        else if (cmd == "all") return p.all();
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ResourceExhausted& e) {
        std::cerr << "source material exhausted: " << e.what() << "\n";
        return kExhausted;
    } catch (const FabricabilityError& e) {
        std::cerr << "fabricability violation: " << e.what() << "\n";
        return kFabricability;
    } catch (const MissingArtifact& e) {
        std::cerr << "missing input: " << e.what() << "\n";
        return kFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
