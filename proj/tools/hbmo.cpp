#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hbmo/circle_oracle.hpp"
#include "hbmo/config.hpp"
#include "hbmo/errors.hpp"
#include "hbmo/evolve.hpp"
#include "hbmo/experiments.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kNumerical = 1;
constexpr int kUsage = 2;

struct TableArgs {
    double r0 = 1.0;
    double v0 = 0.0;
    std::size_t base_n = 10;
    std::size_t levels = 8;
    std::size_t refinement = 4;
    std::string out;
};

struct ConvergeArgs {
    std::string mode = "ideal";
    std::vector<std::size_t> grids{16, 32, 64, 128, 256};
    double r0 = 0.3;
    std::size_t divisions = 512;
    std::size_t substeps = 64;
    double c2 = 2.0;
    std::string averaging = "endpoints";
    std::string out;
};

struct EvolveArgs {
    std::string config;
    std::string out;
};

// Writes to the named file, or stdout when the name is empty.
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
    if (path.empty()) {
        fn(std::cout);
        return;
    }
    std::ofstream os(path);
    if (!os) throw hbmo::ConfigError("cannot write '" + path + "'");
    fn(os);
}

int cmd_circle_table(const TableArgs& a) {
    const auto rows = hbmo::convergence_table(a.r0, a.v0, a.base_n, a.levels, a.refinement);
    emit(a.out, [&](std::ostream& os) { hbmo::write_convergence_csv(rows, os); });
    for (std::size_t k = 2; k < rows.size(); ++k)
        if (!rows[k].order || *rows[k].order < 0.9) {
            std::cerr << "order below 0.9 at N=" << rows[k].n << '\n';
            return kNumerical;
        }
    return kOk;
}

int cmd_converge(const ConvergeArgs& a) {
    hbmo::ExperimentSpec spec;
    spec.mode = hbmo::parse_distance_mode(a.mode);
    spec.r0 = a.r0;
    spec.threshold_divisions = a.divisions;
    spec.solver_substeps = a.substeps;
    spec.c2 = a.c2;
    if (a.averaging == "endpoints") spec.averaging = hbmo::RadiusAveraging::endpoints;
    else if (a.averaging == "length_weighted") spec.averaging = hbmo::RadiusAveraging::length_weighted;
    else if (a.averaging == "uniform") spec.averaging = hbmo::RadiusAveraging::uniform;
    else throw hbmo::ConfigError("unknown averaging '" + a.averaging + "'");
    const auto rows = hbmo::grid_convergence(spec, a.grids);
    emit(a.out, [&](std::ostream& os) { hbmo::write_convergence_csv(rows, os, "l2_error"); });
    return kOk;
}

int cmd_evolve(const EvolveArgs& a) {
    hbmo::Config cfg = hbmo::Config::load(a.config);
    hbmo::EvolveConfig e = hbmo::parse_evolve_config(cfg);
    if (!a.out.empty()) e.output_dir = a.out;
    const auto rep = hbmo::run_evolve(e);
    std::cerr << "steps: " << rep.steps_done << ", frames: " << rep.frames_written << ", output: " << e.output_dir.string()
              << '\n';
    if (rep.extinct_time) std::cerr << "phase vanished at t=" << *rep.extinct_time << '\n';
    if (e.kind == hbmo::RunKind::volume) std::cerr << "max volume residual: " << rep.max_volume_residual << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyperbolic threshold dynamics: oracle tables, convergence studies and evolutions"};
    app.require_subcommand(1);

    TableArgs table;
    auto* t = app.add_subcommand("circle-table", "Idealized recursion error at half the extinction time");
    t->add_option("--r0", table.r0, "initial radius")->capture_default_str()->check(CLI::PositiveNumber);
    t->add_option("--v0", table.v0, "initial normal velocity")->capture_default_str();
    t->add_option("--base", table.base_n, "coarsest number of steps")->capture_default_str()->check(CLI::Range(4, 1 << 30));
    t->add_option("--levels", table.levels, "number of refinements")->capture_default_str()->check(CLI::Range(1, 16));
    t->add_option("--refinement", table.refinement, "step-count ratio between levels")->capture_default_str()->check(CLI::Range(2, 64));
    t->add_option("-o,--out", table.out, "CSV file (default: stdout)");

    ConvergeArgs conv;
    auto* c = app.add_subcommand("converge", "Grid convergence of a collapsing circle");
    c->add_option("--mode", conv.mode, "distance rebuild: ideal|reconstructed")
        ->capture_default_str()
        ->check(CLI::IsMember({"ideal", "reconstructed"}));
    c->add_option("--grids", conv.grids, "ascending grid sizes")->delimiter(',')->capture_default_str();
    c->add_option("--r0", conv.r0, "initial radius")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--divisions", conv.divisions, "threshold steps per extinction time")->capture_default_str();
    c->add_option("--substeps", conv.substeps, "solver steps per threshold step")->capture_default_str();
    c->add_option("--c2", conv.c2, "squared wave speed")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--averaging", conv.averaging, "radius estimate: endpoints|length_weighted|uniform")
        ->capture_default_str()
        ->check(CLI::IsMember({"endpoints", "length_weighted", "uniform"}));
    c->add_option("-o,--out", conv.out, "CSV file (default: stdout)");

    EvolveArgs ev;
    auto* e = app.add_subcommand("evolve", "Run an evolution described by a key=value config");
    e->add_option("config", ev.config, "config file")->required()->check(CLI::ExistingFile);
    e->add_option("-o,--out", ev.out, "output directory (overrides output.dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (t->parsed()) return cmd_circle_table(table);
        if (c->parsed()) return cmd_converge(conv);
        if (e->parsed()) return cmd_evolve(ev);
    } catch (const hbmo::ConfigError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kUsage;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kNumerical;
    }
    return kUsage;
}
