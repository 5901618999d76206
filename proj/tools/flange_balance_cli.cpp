// Batch front-end: read joint/load/config files, run the pipeline, write
// tables, traces and plot-ready CSV.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "flange_balance/import.hpp"
#include "flange_balance/json_io.hpp"
#include "flange_balance/optimizer.hpp"
#include "flange_balance/reports.hpp"
#include "flange_balance/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_nonconverged = 3;
constexpr int exit_io = 4;

struct Options {
    std::string model_path;
    std::string gasket_path;
    std::string loads_path;
    std::string config_path;
    std::string out_dir;
    std::string matrix_path;
    std::string dofmap_path;
    std::optional<double> tolerance;
    std::optional<int> max_iters;
    std::optional<double> fm;
    std::optional<double> overload;
    std::optional<int> sectors;
};

/// Exclusive lock file in the output directory; prevents concurrent clobbering.
class OutputLock {
public:
    explicit OutputLock(const fs::path& dir) : path_(dir / ".flange_balance.lock") {
        if (fs::exists(path_))
            throw std::runtime_error("output directory is locked by another run: " + path_.string());
        std::ofstream lock(path_);
        lock << "locked\n";
    }
    ~OutputLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }

private:
    fs::path path_;
};

flange::JointModel load_model(const Options& opt) {
    flange::JointModel model = flange::read_joint_model_file(opt.model_path);
    if (!opt.gasket_path.empty()) model.gasket = flange::read_gasket_csv_file(opt.gasket_path);
    if (opt.sectors) model.geometry.n_sectors = *opt.sectors;
    return model;
}

flange::OptimizerConfig load_config(const Options& opt) {
    flange::OptimizerConfig cfg;
    if (!opt.config_path.empty()) {
        std::ifstream in(opt.config_path);
        if (!in) throw std::runtime_error("config json: cannot open " + opt.config_path);
        cfg = flange::optimizer_config_from_json(json::parse(in));
    }
    if (opt.tolerance) cfg.tolerance = *opt.tolerance;
    if (opt.max_iters) cfg.max_iterations = *opt.max_iters;
    if (opt.fm) cfg.rigidity_factor.value = *opt.fm;
    if (opt.overload) cfg.initial_overload_factor = *opt.overload;
    return cfg;
}

/// The manifest is written before any solve begins.
void write_manifest(const Options& opt, const std::string& command) {
    json m;
    m["tool_version"] = flange::tool_version;
    m["command"] = command;
    json inputs = json::object();
    for (const auto& p : {opt.model_path, opt.gasket_path, opt.loads_path, opt.config_path,
                          opt.matrix_path, opt.dofmap_path})
        if (!p.empty()) inputs[p] = flange::content_hash(p);
    m["inputs"] = inputs;
    json ov = json::object();
    if (opt.tolerance) ov["tolerance"] = *opt.tolerance;
    if (opt.max_iters) ov["max_iterations"] = *opt.max_iters;
    if (opt.fm) ov["rigidity_factor"] = *opt.fm;
    if (opt.overload) ov["initial_overload_factor"] = *opt.overload;
    if (opt.sectors) ov["n_sectors"] = *opt.sectors;
    m["overrides"] = ov;
    flange::write_text_file(fs::path(opt.out_dir) / "manifest.json", m.dump(2) + "\n");
}

void write_error_record(const std::string& out_dir, int code, const std::string& message) {
    if (out_dir.empty()) return;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    json e{{"exit_code", code}, {"error", message}};
    try {
        flange::write_text_file(fs::path(out_dir) / "error.json", e.dump(2) + "\n");
    } catch (...) {
    }
}

int run_check(const Options& opt) {
    const auto model = load_model(opt);
    std::vector<std::string> violations;
    if (!opt.loads_path.empty()) {
        const auto lc = flange::read_load_case_file(opt.loads_path, model.geometry.n_bolts);
        violations = flange::validate(model, lc);
    } else {
        violations = flange::validate(model);
    }
    if (!opt.out_dir.empty()) {
        fs::create_directories(opt.out_dir);
        json r{{"valid", violations.empty()}, {"violations", violations}};
        flange::write_text_file(fs::path(opt.out_dir) / "validation.json", r.dump(2) + "\n");
    }
    if (!violations.empty()) {
        for (const auto& v : violations) std::cerr << "violation: " << v << "\n";
        return exit_validation;
    }
    std::cout << "model valid\n";
    return exit_ok;
}

int run_solve(const Options& opt) {
    const auto model = load_model(opt);
    const auto lc = flange::read_load_case_file(opt.loads_path, model.geometry.n_bolts);
    {
        const auto v = flange::validate(model, lc);
        if (!v.empty()) {
            for (const auto& s : v) std::cerr << "violation: " << s << "\n";
            return exit_validation;
        }
    }
    fs::create_directories(opt.out_dir);
    OutputLock lock{opt.out_dir};
    write_manifest(opt, "solve");
    const auto cfg = load_config(opt);

    const auto cj = flange::build_condensed_joint(model);
    std::vector<double> preloads(static_cast<std::size_t>(model.geometry.n_bolts));
    for (int i = 0; i < model.geometry.n_bolts; ++i)
        preloads[static_cast<std::size_t>(i)] =
            model.preload_force_from_io(lc.preloads[static_cast<std::size_t>(i)]);
    const flange::ExternalLoads loads{lc.axial_load_N, lc.bending_moment_Nm, lc.moment_plane_angle_rad};
    const auto st = flange::solve_joint(cj, preloads, loads, cfg.solver);

    flange::write_text_file(fs::path(opt.out_dir) / "stress_field.csv", flange::stress_field_csv(cj, st));
    json sol;
    sol["bolt_forces_N"] = st.bolt_forces_N;
    sol["lock_lengths_m"] = st.lock_lengths_m;
    sol["closures_m"] = st.closures_m;
    sol["station_angles_rad"] = st.field.sector_angles_rad;
    sol["stress_per_sector_Pa"] = st.field.stress_per_sector_Pa;
    sol["stress_at_external_radius_Pa"] = st.field.stress_at_external_radius_Pa;
    sol["equilibrium_residual"] = flange::equilibrium_residual(cj, st, loads);
    flange::write_text_file(fs::path(opt.out_dir) / "solution.json", sol.dump(2) + "\n");
    std::cout << "solve complete: residual " << sol["equilibrium_residual"].get<double>() << "\n";
    return exit_ok;
}

int run_optimize(const Options& opt) {
    const auto model = load_model(opt);
    const auto lc = flange::read_load_case_file(opt.loads_path, model.geometry.n_bolts);
    {
        const auto v = flange::validate(model, lc);
        if (!v.empty()) {
            for (const auto& s : v) std::cerr << "violation: " << s << "\n";
            return exit_validation;
        }
    }
    fs::create_directories(opt.out_dir);
    OutputLock lock{opt.out_dir};
    write_manifest(opt, "optimize");
    const auto cfg = load_config(opt);

    const auto cj = flange::build_condensed_joint(model);
    const auto result = flange::optimize(cj, lc, cfg);

    const fs::path out(opt.out_dir);
    flange::write_text_file(out / "result.json",
                            flange::optimization_result_to_json(model, result).dump(2) + "\n");
    flange::write_text_file(out / "preload_table.csv", flange::preload_table_csv(model, result));
    flange::write_text_file(out / "iteration_trace.csv", flange::iteration_trace_csv(result));
    flange::write_text_file(out / "polar_stress.csv", flange::polar_stress_csv(result));
    flange::write_text_file(out / "external_radius_profile.csv",
                            flange::external_radius_profile_csv(result));
    flange::write_text_file(out / "convergence_band.csv",
                            flange::convergence_band_csv(result, cfg.tolerance));

    if (!result.converged) {
        std::cerr << "optimize: not converged after " << result.iterations << " iterations\n";
        return exit_nonconverged;
    }
    std::cout << "converged in " << result.iterations << " iterations, target "
              << result.target_stress_Pa << " Pa\n";
    return exit_ok;
}

int run_condense(const Options& opt) {
    fs::create_directories(opt.out_dir);
    OutputLock lock{opt.out_dir};
    write_manifest(opt, "condense");
    flange::StiffnessSystem system;
    std::vector<int> masters;
    if (!opt.matrix_path.empty()) {
        system = flange::import_condensed(opt.matrix_path, opt.dofmap_path);
        for (int i = 0; i < system.K.rows(); ++i)
            if (!system.constrained_dofs.count(i)) masters.push_back(i);
    } else {
        const auto model = load_model(opt);
        const auto v = flange::validate(model);
        if (!v.empty()) {
            for (const auto& s : v) std::cerr << "violation: " << s << "\n";
            return exit_validation;
        }
        auto ring = flange::assemble_ring_model(model);
        masters = ring.pipeline_masters();
        system = std::move(ring.system);
    }
    const auto se = flange::Superelement::condense(system, masters);

    flange::mm::write_symmetric_file((fs::path(opt.out_dir) / "reduced.mtx").string(),
                                     se.K_reduced());
    std::vector<flange::DofEntry> master_entries;
    for (int m : se.masters()) master_entries.push_back(system.dof_map[static_cast<std::size_t>(m)]);
    flange::write_text_file(fs::path(opt.out_dir) / "reduced_dofmap.json",
                            flange::dof_map_to_json(flange::DofMap(std::move(master_entries))).dump(2) + "\n");
    std::cout << "condensed to " << se.masters().size() << " master DOFs\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("FLANGE_BALANCE_THREADS"))
        Eigen::setNbThreads(std::max(1, std::atoi(threads)));
    else
        Eigen::setNbThreads(1);

    CLI::App app{"Bolted-flange gasket stress balancing"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--model", opt.model_path, "Joint model JSON");
        cmd->add_option("--gasket", opt.gasket_path, "Gasket compression curve CSV");
        cmd->add_option("--loads", opt.loads_path, "Load case JSON");
        cmd->add_option("--config", opt.config_path, "Optimizer config JSON");
        auto* o = cmd->add_option("--out", opt.out_dir, "Output directory");
        if (needs_out) o->required();
        cmd->add_option("--tolerance", [&opt](const CLI::results_t& r) {
            opt.tolerance = std::stod(r[0]); return true; }, "Relative stress tolerance");
        cmd->add_option("--max-iters", [&opt](const CLI::results_t& r) {
            opt.max_iters = std::stoi(r[0]); return true; }, "Maximum secant iterations");
        cmd->add_option("--fm", [&opt](const CLI::results_t& r) {
            opt.fm = std::stod(r[0]); return true; }, "Rigidity factor F_m");
        cmd->add_option("--overload", [&opt](const CLI::results_t& r) {
            opt.overload = std::stod(r[0]); return true; }, "Bootstrap overload factor");
        cmd->add_option("--sectors", [&opt](const CLI::results_t& r) {
            opt.sectors = std::stoi(r[0]); return true; }, "Circumferential station count");
    };

    auto* check = app.add_subcommand("check", "Validate inputs only");
    add_common(check, false);
    check->get_option("--model")->required();

    auto* solve = app.add_subcommand("solve", "Single analysis: pretension + external loads");
    add_common(solve, true);
    solve->get_option("--model")->required();
    solve->get_option("--loads")->required();

    auto* optimize = app.add_subcommand("optimize", "Full preload balancing pipeline");
    add_common(optimize, true);
    optimize->get_option("--model")->required();
    optimize->get_option("--loads")->required();

    auto* condense = app.add_subcommand("condense", "Assemble or import, export reduced matrix");
    add_common(condense, true);
    condense->add_option("--matrix", opt.matrix_path, "Condensed matrix (MatrixMarket)");
    condense->add_option("--dofmap", opt.dofmap_path, "DOF map JSON for --matrix");

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "check") return run_check(opt);
        if (command == "solve") return run_solve(opt);
        if (command == "optimize") return run_optimize(opt);
        if (command == "condense") return run_condense(opt);
        std::cerr << "unknown subcommand\n";
        return exit_io;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        write_error_record(opt.out_dir, exit_validation, e.what());
        return exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        write_error_record(opt.out_dir, exit_io, e.what());
        return exit_io;
    }
}
