// Command-line front end: mfe <command> [--spec PATH ...] [options]

#include <mfe/experiments.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_input = 1;
constexpr int exit_quality = 2;

struct Flags {
    std::vector<std::string> specs;
    double h = 0.05;
    std::string schedule;
    std::string out;
    std::uint64_t seed = 1;
    double tol_scale = 1.0;
    std::string epsilons;
    std::string lambdas;
};

std::vector<double> parse_list(const std::string& csv, const char* what)
{
    std::vector<double> v;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw mfe::InputError(std::string(what) + ": cannot parse '" + item + "'");
        }
    }
    if (v.empty()) throw mfe::InputError(std::string(what) + ": no values");
    return v;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Robin functions and mean field energies on plane domains"};
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1);
    Flags f;
    const char* env_out = std::getenv("MFE_OUT_DIR");
    f.out = env_out && *env_out ? env_out : "mfe-out";

    const std::vector<std::pair<std::string, std::string>> commands{
        {"robin", "supremum of the Robin function with a convergence report"},
        {"energy", "lambda continuation and the -1 - 4 pi gamma estimate"},
        {"verify-theorem1", "energy estimates and rearrangement comparisons over several domains"},
        {"strip-check", "covering strip width against pi/(2 sqrt e) plus a continuation probe"},
        {"testfn-bound", "glued bubble test function over an (epsilon, Lambda) grid"},
        {"blowup-trace", "concentration diagnostics along a continuation"},
        {"suite", "full acceptance battery"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--spec", f.specs, "domain spec file (repeatable)");
        sub->add_option("--h", f.h, "global mesh edge length")->capture_default_str();
        sub->add_option("--schedule", f.schedule, "comma-separated lambda values; suffix pi allowed (7.9pi)");
        sub->add_option("--out", f.out, "output directory (default $MFE_OUT_DIR or ./mfe-out)");
        sub->add_option("--seed", f.seed, "seed for randomized checks")->capture_default_str();
        sub->add_option("--tol-scale", f.tol_scale, "multiplier applied to every tolerance")->capture_default_str();
        sub->add_option("--epsilons", f.epsilons, "bubble scales for testfn-bound");
        sub->add_option("--lambdas", f.lambdas, "bubble shapes for testfn-bound");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_input;
    }

    mfe::ExperimentConfig cfg;
    std::vector<mfe::NamedDomain> domains;
    try {
        cfg.command = app.get_subcommands().front()->get_name();
        cfg.spec_paths = f.specs;
        cfg.h = f.h;
        if (!f.schedule.empty()) cfg.schedule = mfe::parse_schedule(f.schedule);
        if (!f.epsilons.empty()) cfg.epsilons = parse_list(f.epsilons, "--epsilons");
        if (!f.lambdas.empty()) cfg.lambdas = parse_list(f.lambdas, "--lambdas");
        cfg.out_dir = f.out;
        cfg.seed = f.seed;
        cfg.tol_scale = f.tol_scale;
        cfg.validate();
        domains = mfe::load_domains(cfg.spec_paths);
    } catch (const mfe::Error& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return exit_input;
    }

    mfe::CommandOutput out;
    try {
        out = mfe::run_command(cfg, domains, [](const mfe::CriterionResult& c) {
            std::cout << mfe::format_criterion(c) << std::endl;
        });
    } catch (const mfe::InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return exit_input;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure in " << cfg.command << ": " << e.what() << '\n';
        return exit_quality;
    }

    const std::string stamp = mfe::utc_timestamp();
    try {
        for (const auto& [file, rep] : out.reports) {
            const auto path = std::filesystem::path(cfg.out_dir) / file;
            mfe::write_report_file(path, rep.render(stamp));
            std::cout << (rep.ok() ? "ok     " : "FAILED ") << path.string() << '\n';
            for (const auto& g : rep.failures()) std::cout << "  gate: " << g << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "cannot write reports: " << e.what() << '\n';
        return exit_input;
    }
    return out.ok() ? exit_ok : exit_quality;
}
