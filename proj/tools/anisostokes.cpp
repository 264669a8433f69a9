#include "anisostokes/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>

using namespace anisostokes;

int main(int argc, char** argv)
{
    CLI::App app{"Anisotropic Stokes and Navier-Stokes transmission problems on a truncated two-phase domain"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> level;
    std::optional<double> radius;
    std::optional<int> threads;
    app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--set", sets, "override a config key, key=value (repeatable)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--level", level, "mesh refinement level");
    app.add_option("--radius", radius, "truncation box half-width");
    app.add_option("--threads", threads, "worker threads (falls back to ANISOSTOKES_THREADS)");

    std::optional<std::string> kind, density, backend;
    std::optional<double> lambda;
    bool equal_order = false;
    bool operators = false;
    const std::map<std::string, std::string> about{
        {"mesh", "build the interface-fitted mesh and write its statistics and VTK file"},
        {"solve-stokes", "manufactured Stokes solve with error norms"},
        {"potential", "single, double, adjoint single layer or Newtonian potential"},
        {"transmit", "linear transmission problem"},
        {"navier-stokes", "Picard iteration for the convected transmission problem"},
        {"infsup", "discrete inf-sup constant"},
        {"verify", "run the invariant suite"}};
    for (const auto& name : command_names()) {
        CLI::App* sub = app.add_subcommand(name, about.at(name));
        if (name == "potential") {
            sub->add_option("--kind", kind, "single | double | newtonian | adjoint-single");
            sub->add_option("--density", density, "nu | constant | random | smooth");
            sub->add_flag("--operators", operators, "materialize the boundary operators and report their spectra");
        } else if (name == "transmit" || name == "navier-stokes") {
            sub->add_option("--backend", backend, "monolithic | representation");
            if (name == "navier-stokes") sub->add_option("--lambda", lambda, "convection coefficient");
        } else if (name == "infsup") {
            sub->add_flag("--equal-order", equal_order, "P1/P1 pair instead of MINI");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: config: " << e.what() << '\n';
        return exit_code(ErrorCategory::config);
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        std::vector<std::pair<std::string, std::string>> overrides;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw Error(ErrorCategory::config, "--set expects key=value, got '" + s + "'");
            overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        if (out_dir) overrides.emplace_back("output.dir", *out_dir);
        if (seed) overrides.emplace_back("seed", std::to_string(*seed));
        if (level) overrides.emplace_back("mesh.level", std::to_string(*level));
        if (radius) overrides.emplace_back("mesh.radius", format_double(*radius));
        if (threads) overrides.emplace_back("threads", std::to_string(*threads));
        if (kind) overrides.emplace_back("potential.kind", *kind);
        if (density) overrides.emplace_back("potential.density", *density);
        if (operators) overrides.emplace_back("potential.operators", "true");
        if (backend) overrides.emplace_back("transmission.backend", *backend);
        if (lambda) overrides.emplace_back("navier.lambda", format_double(*lambda));
        if (equal_order) overrides.emplace_back("infsup.equal_order", "true");

        const std::optional<std::filesystem::path> file =
            config_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_path);
        const RunConfig cfg = resolve_config(file, overrides, std::getenv("ANISOSTOKES_THREADS"));
        const CommandResult r = dispatch(command, cfg, std::cout);
        for (const auto& p : r.artifacts) std::cout << "wrote " << p.string() << '\n';
        return r.exit_code;
    } catch (const Error& e) {
        std::cerr << "error: " << category_name(e.category()) << ": " << e.what() << '\n';
        return exit_code(e.category());
    } catch (const std::bad_alloc&) {
        std::cerr << "error: resource: out of memory\n";
        return exit_code(ErrorCategory::resource);
    } catch (const std::exception& e) {
        std::cerr << "error: solver: " << e.what() << '\n';
        return exit_code(ErrorCategory::solver);
    }
}
