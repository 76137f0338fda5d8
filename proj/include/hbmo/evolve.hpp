#pragma once

// Config-driven runs: scalar two-phase, N-phase, and volume-preserving
// N-phase evolutions with frame files and CSV logs.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hbmo/config.hpp"
#include "hbmo/errors.hpp"
#include "hbmo/grid.hpp"
#include "hbmo/hbmo_core.hpp"
#include "hbmo/multiphase.hpp"
#include "hbmo/signed_distance.hpp"
#include "hbmo/volume_preserve.hpp"

namespace hbmo {

enum class RunKind { scalar, multiphase, volume };
enum class PhaseLayout { disks, voronoi };

struct EvolveConfig {
    RunKind kind = RunKind::scalar;
    std::size_t grid_n = 128;
    double domain = 1.0;
    double threshold_dt = 0.0;
    std::size_t steps = 0;
    std::size_t frame_every = 1;
    std::filesystem::path output_dir = "hbmo_out";
    std::filesystem::path frames_dir = "frames";   // relative to output_dir unless absolute
    std::filesystem::path radii_csv = "radii.csv"; // likewise
    SolverParams solver;

    // scalar runs
    InitialShape shape;
    std::string mask_path;
    std::vector<double> velocity;  // one value (constant) or one per initial segment
    std::string velocity_file;     // one sample per line, read at run time
    std::optional<Point> radius_center;
    RadiusAveraging averaging = RadiusAveraging::endpoints;

    // N-phase runs
    PhaseLayout layout = PhaseLayout::disks;
    std::vector<std::vector<double>> phase_data;  // disks: cx cy r; voronoi: x y
    double eps = 0.0;
    std::size_t radius_phase = 1;

    // volume-preserving runs
    std::vector<double> volume_targets;  // empty: from the initial partition
    double volume_tol = 0.0;             // 0: 1e-4 * domain area
    std::size_t volume_max_sweeps = 50;

    std::size_t phase_count() const {
        return layout == PhaseLayout::disks ? phase_data.size() + 1 : phase_data.size();
    }
    std::filesystem::path frames_path() const { return output_dir / frames_dir; }
    std::filesystem::path radii_path() const { return output_dir / radii_csv; }
};

namespace detail {

inline std::optional<Point> point_from(Config& c, const std::string& key) {
    const auto v = c.get_list(key);
    if (v.empty()) return std::nullopt;
    if (v.size() != 2) {
        c.fail(key, "expects two numbers 'x y'");
        return std::nullopt;
    }
    return Point{v[0], v[1]};
}

/// Whitespace-separated numbers from a file.
inline std::vector<double> read_numbers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        const auto d = to_double(tok);
        if (!d) throw ConfigError("'" + path + "' contains a non-number '" + tok + "'");
        out.push_back(*d);
    }
    return out;
}

} // namespace detail

/// Reads and validates every key; throws one ConfigError naming all problems.
inline EvolveConfig parse_evolve_config(Config& c) {
    EvolveConfig e;
    const std::string kind = c.get_string("hbmo.kind", "scalar");
    if (kind == "scalar") e.kind = RunKind::scalar;
    else if (kind == "multiphase") e.kind = RunKind::multiphase;
    else if (kind == "volume") e.kind = RunKind::volume;
    else c.fail("hbmo.kind", "must be scalar|multiphase|volume, got '" + kind + "'");

    e.grid_n = c.get_size("grid.n", e.grid_n);
    if (e.grid_n < 3) c.fail("grid.n", "must be at least 3");
    e.domain = c.get_double("domain", e.domain);
    if (!(e.domain > 0.0)) c.fail("domain", "must be positive");
    e.threshold_dt = c.require_double("hbmo.threshold_dt");
    if (c.has("hbmo.threshold_dt") && !(e.threshold_dt > 0.0)) c.fail("hbmo.threshold_dt", "must be positive");
    e.steps = c.get_size("hbmo.steps", 0);
    if (e.steps < 1) c.fail("hbmo.steps", "must be at least 1");

    e.output_dir = c.get_string("output.dir", e.output_dir.string());
    e.frames_dir = c.get_string("output.frames_dir", e.frames_dir.string());
    e.radii_csv = c.get_string("output.radii_csv", e.radii_csv.string());
    e.frame_every = c.get_size("output.frame_every", 1);
    if (e.frame_every < 1) c.fail("output.frame_every", "must be at least 1");

    e.solver.c2 = c.get_double("solver.c2", e.solver.c2);
    e.solver.c2_first = c.get_double("solver.c2_first", e.solver.c2_first);
    e.solver.substeps = c.get_size("solver.inner_substeps", e.solver.substeps);
    e.solver.cfl_safety = c.get_double("solver.cfl", e.solver.cfl_safety);
    if (!(e.solver.c2 > 0.0)) c.fail("solver.c2", "must be positive");
    if (!(e.solver.c2_first > 0.0)) c.fail("solver.c2_first", "must be positive");
    if (e.solver.substeps < 1) c.fail("solver.inner_substeps", "must be at least 1");
    if (!(e.solver.cfl_safety > 0.0 && e.solver.cfl_safety <= 1.0)) c.fail("solver.cfl", "must lie in (0, 1]");

    const double h = e.grid_n >= 3 ? e.domain / static_cast<double>(e.grid_n - 1) : 0.0;

    if (e.kind == RunKind::scalar) {
        const std::string shape = c.get_string("initial.shape", "circle");
        e.shape.smoothing_time = c.get_double("initial.smoothing", shape == "mask" ? h * h : 0.0);
        if (e.shape.smoothing_time < 0.0) c.fail("initial.smoothing", "must be non-negative");
        if (shape == "circle") {
            e.shape.kind = ShapeKind::circle;
            e.shape.center = detail::point_from(c, "initial.center").value_or(Point{0.5 * e.domain, 0.5 * e.domain});
            e.shape.radius = c.get_double("initial.radius", 0.3 * e.domain);
            if (!(e.shape.radius > 0.0)) c.fail("initial.radius", "must be positive");
        } else if (shape == "polyline") {
            e.shape.kind = ShapeKind::polyline;
            std::vector<double> flat;
            if (c.has("initial.file")) {
                const std::string path = c.require_string("initial.file");
                try {
                    flat = detail::read_numbers(path);
                } catch (const ConfigError& err) {
                    c.fail("initial.file", err.what());
                }
            } else {
                flat = c.get_list("initial.vertices");
            }
            if (flat.size() % 2 != 0) c.fail("initial.vertices", "expects 'x y' pairs");
            for (std::size_t k = 0; k + 1 < flat.size(); k += 2) e.shape.polygon.vertices.push_back({flat[k], flat[k + 1]});
            if (e.shape.polygon.vertices.size() < 3) c.fail("initial.vertices", "needs at least 3 vertices");
        } else if (shape == "mask") {
            e.shape.kind = ShapeKind::mask;
            e.mask_path = c.require_string("initial.file");
        } else {
            c.fail("initial.shape", "must be circle|polyline|mask, got '" + shape + "'");
        }
        e.velocity_file = c.get_string("initial.velocity_file", "");
        e.velocity = c.get_list("initial.velocity");
        if (e.velocity.size() > 1) c.fail("initial.velocity", "takes one constant; use initial.velocity_file for per-segment samples");
        if (e.velocity.empty()) e.velocity = {0.0};
        e.radius_center = detail::point_from(c, "output.radius_center");
        if (!e.radius_center && e.shape.kind == ShapeKind::circle) e.radius_center = e.shape.center;
        const std::string avg = c.get_string("output.averaging", "endpoints");
        if (avg == "endpoints") e.averaging = RadiusAveraging::endpoints;
        else if (avg == "length_weighted") e.averaging = RadiusAveraging::length_weighted;
        else if (avg == "uniform") e.averaging = RadiusAveraging::uniform;
        else c.fail("output.averaging", "must be endpoints|length_weighted|uniform");
    } else {
        const std::string layout = c.get_string("phases.layout", "disks");
        if (layout == "disks") {
            e.layout = PhaseLayout::disks;
            e.phase_data = c.get_groups("phases.disks");
            if (e.phase_data.empty()) c.fail("phases.disks", "needs at least one 'cx cy r' triple");
            for (const auto& d : e.phase_data)
                if (d.size() != 3 || !(d[2] > 0.0)) {
                    c.fail("phases.disks", "entries must be 'cx cy r' with r > 0");
                    break;
                }
        } else if (layout == "voronoi") {
            e.layout = PhaseLayout::voronoi;
            e.phase_data = c.get_groups("phases.seeds");
            if (e.phase_data.size() < 2) c.fail("phases.seeds", "needs at least two 'x y' seeds");
            for (const auto& d : e.phase_data)
                if (d.size() != 2) {
                    c.fail("phases.seeds", "entries must be 'x y' pairs");
                    break;
                }
        } else {
            c.fail("phases.layout", "must be disks|voronoi, got '" + layout + "'");
        }
        e.eps = c.get_double("multiphase.eps", 0.0);
        if (e.eps != 0.0 && !(e.eps > 2.0 * h)) c.fail("multiphase.eps", "must exceed 2h = " + std::to_string(2.0 * h));
        e.radius_center = detail::point_from(c, "output.radius_center");
        e.radius_phase = c.get_size("output.radius_phase", 1);
        if (e.radius_center && e.radius_phase >= e.phase_count())
            c.fail("output.radius_phase", "is not a phase index");

        if (e.kind == RunKind::volume) {
            const std::string t = c.get_string("volume.targets", "from-initial");
            if (t != "from-initial") {
                e.volume_targets = c.get_list("volume.targets");
                if (e.volume_targets.size() != e.phase_count())
                    c.fail("volume.targets", "needs one value per phase (" + std::to_string(e.phase_count()) + ")");
            }
            e.volume_tol = c.get_double("volume.tol", 1e-4 * e.domain * e.domain);
            if (!(e.volume_tol > 0.0)) c.fail("volume.tol", "must be positive");
            e.volume_max_sweeps = c.get_size("volume.max_sweeps", 50);
            if (e.volume_max_sweeps < 1) c.fail("volume.max_sweeps", "must be at least 1");
        }
    }
    c.reject_unknown();
    c.throw_if_errors();
    return e;
}

/// Initial per-phase scores. Disks: phase 0 is the background, phase k the
/// k-th disk (overlaps go to the deeper disk). Voronoi: nearest seed.
inline std::vector<ScalarField> initial_scores(const EvolveConfig& e, const Grid2D& g) {
    std::vector<ScalarField> s;
    if (e.layout == PhaseLayout::disks) {
        s.emplace_back(g, 0.0);
        for (const auto& d : e.phase_data) {
            const Point c{d[0], d[1]};
            const double r = d[2];
            s.push_back(ScalarField::sample(g, [&](Point x) { return r - norm(x - c); }));
        }
        for (std::size_t k = 0; k < g.size(); ++k) {
            double top = s[1][k];
            for (std::size_t i = 2; i < s.size(); ++i) top = std::max(top, s[i][k]);
            s[0][k] = -top;
        }
    } else {
        for (const auto& d : e.phase_data) {
            const Point c{d[0], d[1]};
            s.push_back(ScalarField::sample(g, [&](Point x) { return -norm(x - c); }));
        }
    }
    return s;
}

/// All phase boundaries of one frame.
inline void write_boundaries_csv(const PhaseSet& ps, double time, std::ostream& os) {
    const auto old_prec = os.precision(17);
    os << "# schema: hbmo-boundaries/1\n";
    os << "# t=" << time << '\n';
    os << "phase,x1,y1,x2,y2\n";
    for (std::size_t i = 0; i < ps.phases(); ++i)
        for (const auto& s : ps.boundaries[i].segments)
            os << i << ',' << s.p.x << ',' << s.p.y << ',' << s.q.x << ',' << s.q.y << '\n';
    os.precision(old_prec);
}

struct EvolveReport {
    std::size_t frames_written = 0;
    std::size_t steps_done = 0;
    std::optional<double> extinct_time;
    double max_volume_residual = 0.0;
};

namespace detail {

inline std::string frame_name(const char* stem, std::size_t step, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%05zu.%s", stem, step, ext);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot write '" + p.string() + "'");
    os << std::setprecision(12);
    return os;
}

inline EvolveReport evolve_scalar(const EvolveConfig& e) {
    const auto out = e.output_dir;
    const auto frames = e.frames_path();
    HbmoRunConfig rc;
    rc.grid_n = e.grid_n;
    rc.domain = e.domain;
    rc.shape = e.shape;
    if (e.shape.kind == ShapeKind::mask) {
        std::ifstream in(e.mask_path);
        if (!in) throw ConfigError("initial.file: cannot open '" + e.mask_path + "'");
        rc.shape.mask = read_field_snapshot(in);
    }
    rc.velocity_constant = e.velocity[0];
    if (!e.velocity_file.empty()) rc.velocity_per_segment = read_numbers(e.velocity_file);
    rc.threshold_dt = e.threshold_dt;
    rc.steps = e.steps;
    rc.solver = e.solver;
    rc.radius_center = e.radius_center;
    rc.averaging = e.averaging;
    const Trajectory traj = run(rc);

    EvolveReport rep;
    {
        auto os = open_out(frames / frame_name("frame", 0, "csv"));
        write_interface_csv(traj.initial, 0.0, os);
        ++rep.frames_written;
    }
    auto summary = open_out(out / "summary.csv");
    summary << "# schema: hbmo-summary/1\nstep,t,segments,length\n";
    summary << 0 << ',' << 0.0 << ',' << traj.initial.size() << ',' << traj.initial.length() << '\n';
    for (std::size_t n = 0; n < traj.frames.size(); ++n) {
        const auto& f = traj.frames[n];
        const std::size_t step = n + 1;
        summary << step << ',' << f.time << ',' << f.gamma.size() << ',' << f.gamma.length() << '\n';
        if (step % e.frame_every == 0) {
            auto os = open_out(frames / frame_name("frame", step, "csv"));
            write_interface_csv(f.gamma, f.time, os);
            ++rep.frames_written;
        }
    }
    if (e.radius_center) {
        auto os = open_out(e.radii_path());
        os << "# schema: hbmo-radii/1\nt,mean_radius\n";
        const double r0 = average_radius(traj.initial, *e.radius_center, e.averaging).radius;
        os << 0.0 << ',' << r0 << '\n';
        for (const auto& [t, r] : traj.radii) os << t << ',' << r << '\n';
    }
    rep.steps_done = traj.frames.size();
    rep.extinct_time = traj.extinct_time;
    return rep;
}

inline EvolveReport evolve_phases(const EvolveConfig& e) {
    const auto out = e.output_dir;
    const auto frames = e.frames_path();
    const auto phases = out / "phases";
    const Grid2D g = make_grid(e.grid_n, e.domain);
    MultiphaseParams mp;
    mp.eps = e.eps;
    mp.solver = e.solver;
    const auto scores = initial_scores(e, g);
    MultiphaseState state = init_multiphase(scores, e.threshold_dt, mp);
    const std::size_t n = state.basis.phases;

    std::optional<VolumeTargets> targets;
    VolumeParams vp;
    vp.max_sweeps = e.volume_max_sweeps;
    if (e.kind == RunKind::volume) {
        targets = e.volume_targets.empty() ? targets_from(state.phases, e.volume_tol)
                                           : VolumeTargets{e.volume_targets, 1e-3, e.volume_tol};
        targets->validate(g);
    }

    EvolveReport rep;
    auto summary = open_out(out / "summary.csv");
    summary << "# schema: hbmo-summary/1\nstep,t";
    for (std::size_t i = 0; i < n; ++i) summary << ",measure_" << i;
    summary << '\n';
    std::optional<std::ofstream> radii;
    if (e.radius_center) {
        radii = open_out(e.radii_path());
        *radii << "# schema: hbmo-radii/1\nt,mean_radius\n";
    }
    std::optional<std::ofstream> vlog;
    if (targets) {
        vlog = open_out(out / "volume_residuals.csv");
        *vlog << "# schema: hbmo-volume/1\nstep,t,phase,measure,target,residual,lambda\n";
    }

    auto record = [&](const MultiphaseState& s, const std::vector<double>* lambda) {
        const auto m = phase_measures(s.phases);
        summary << s.step_index << ',' << s.time();
        for (double v : m) summary << ',' << v;
        summary << '\n';
        if (radii) {
            const auto& b = s.phases.boundaries[e.radius_phase];
            *radii << s.time() << ',' << (b.empty() ? 0.0 : average_radius(b, *e.radius_center).radius) << '\n';
        }
        if (vlog) {
            for (std::size_t i = 0; i < n; ++i) {
                const double res = m[i] - targets->area[i];
                rep.max_volume_residual = std::max(rep.max_volume_residual, std::abs(res));
                *vlog << s.step_index << ',' << s.time() << ',' << i << ',' << m[i] << ',' << targets->area[i] << ','
                      << res << ',' << (lambda ? (*lambda)[i] : 0.0) << '\n';
            }
        }
        if (s.step_index % e.frame_every == 0) {
            auto fb = open_out(frames / frame_name("frame", s.step_index, "csv"));
            write_boundaries_csv(s.phases, s.time(), fb);
            auto fp = open_out(phases / frame_name("phases", s.step_index, "csv"));
            write_phase_csv(s.phases, s.time(), fp);
            ++rep.frames_written;
        }
    };

    record(state, nullptr);
    for (std::size_t k = 0; k < e.steps; ++k) {
        if (targets) {
            ConstrainedOutcome o = constrained_step(state, *targets, mp, vp);
            state = std::move(o.state);
            record(state, &o.lambda);
        } else {
            state = multiphase_step(state, mp);
            record(state, nullptr);
        }
        ++rep.steps_done;
    }
    return rep;
}

} // namespace detail

/// Runs the configured evolution and writes its artifacts under
/// e.output_dir: frame files, summary.csv, and depending on the run the radii
/// CSV, phases/phases_NNNNN.csv and volume_residuals.csv.
inline EvolveReport run_evolve(const EvolveConfig& e) {
    std::filesystem::create_directories(e.frames_path());
    std::filesystem::create_directories(e.radii_path().parent_path());
    if (e.kind != RunKind::scalar) std::filesystem::create_directories(e.output_dir / "phases");
    return e.kind == RunKind::scalar ? detail::evolve_scalar(e) : detail::evolve_phases(e);
}

} // namespace hbmo
