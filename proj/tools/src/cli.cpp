#include "kaczmarz/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "kaczmarz/diagnostics.hpp"
#include "kaczmarz/error.hpp"
#include "kaczmarz/experiment.hpp"

namespace kaczmarz {

namespace {

struct SolverFlags {
    std::string method = "srbk";
    double eta = 0.1;
    std::size_t k_max = 10;
    std::size_t block_rows = 0; // 0: follow k_max
    double alpha = 1.95;
    double tol = 1e-3;
    std::size_t max_iter = 1'000'000;
    std::uint64_t seed = 0;
    std::string stopping = "error";

    SolverConfig config() const
    {
        SolverConfig cfg;
        cfg.method = parse_method(method);
        cfg.eta = eta;
        cfg.k_max = k_max;
        cfg.block_rows = block_rows == 0 ? k_max : block_rows;
        cfg.alpha = alpha;
        cfg.tol = tol;
        cfg.max_iter = max_iter;
        cfg.seed = seed;
        cfg.stopping = parse_stopping(stopping);
        return cfg;
    }
};

void add_solver_flags(CLI::App& app, SolverFlags& f)
{
    app.add_option("--method", f.method, "k, rk, srk, rbk, gbk, rabk, srbk-full, srbk or multi")->capture_default_str();
    app.add_option("--eta", f.eta, "Sampling ratio for the simple random sample")->capture_default_str();
    app.add_option("--kmax", f.k_max, "Maximum block size")->capture_default_str();
    app.add_option("--nr", f.block_rows, "Partition block size for rbk/rabk (default: kmax)");
    app.add_option("--alpha", f.alpha, "Extrapolation step for rabk")->capture_default_str();
    app.add_option("--tol", f.tol, "Stopping tolerance")->capture_default_str();
    app.add_option("--max-iter", f.max_iter, "Iteration cap")->capture_default_str();
    app.add_option("--seed", f.seed, "Solver seed")->capture_default_str();
    app.add_option("--stopping", f.stopping, "error (against x_star) or residual")->capture_default_str();
}

struct ProblemFlags {
    std::string mm;
    bool transpose = false;
    std::string rhs = "randn";
    std::string gaussian = "1000,100";
    std::size_t identity = 0;
    std::size_t rhs_count = 1;
    std::uint64_t problem_seed = 1;

    ProblemSource source() const
    {
        ProblemSource src;
        src.rhs_count = rhs_count;
        src.seed = problem_seed;
        if (!mm.empty()) {
            src.kind = ProblemSource::Kind::MatrixMarket;
            src.path = mm;
            src.transpose = transpose;
            src.rhs = rhs;
        } else if (identity > 0) {
            src.kind = ProblemSource::Kind::Identity;
            src.m = identity;
        } else {
            src.kind = ProblemSource::Kind::Gaussian;
            const auto [m, n] = parse_shape(gaussian);
            src.m = m;
            src.n = n;
        }
        return src;
    }

    static std::pair<std::size_t, std::size_t> parse_shape(const std::string& text)
    {
        const auto comma = text.find_first_of(",x");
        try {
            if (comma == std::string::npos) {
                throw std::invalid_argument(text);
            }
            return {std::stoul(text.substr(0, comma)), std::stoul(text.substr(comma + 1))};
        } catch (const std::logic_error&) {
            throw ConfigError("expected a shape like 5000,500 but got '" + text + "'");
        }
    }
};

void add_problem_flags(CLI::App& app, ProblemFlags& f)
{
    app.add_option("--mm", f.mm, "Matrix Market file for A");
    app.add_flag("--transpose", f.transpose, "Use the transpose of the file matrix");
    app.add_option("--rhs", f.rhs, "x_star generator for file matrices: randn or ones")->capture_default_str();
    app.add_option("--gaussian", f.gaussian, "Gaussian matrix shape m,n")->capture_default_str();
    app.add_option("--identity", f.identity, "Identity matrix of this order");
    app.add_option("--kb", f.rhs_count, "Number of right-hand sides")->capture_default_str();
    app.add_option("--problem-seed", f.problem_seed, "Seed for generated problems")->capture_default_str();
}

void print_row(std::ostream& out, const ResultRow& row)
{
    write_csv(out, {row});
}

void write_reconstruction(const std::string& path, std::size_t n, std::span<const double> x)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write '" + path + "'");
    }
    // Column-major walk over the N x N image; each line is "pixel value".
    for (std::size_t col = 0; col < n; ++col) {
        for (std::size_t row = 0; row < n; ++row) {
            const std::size_t pixel = row * n + col;
            out << pixel << ' ' << format_double(x[pixel]) << '\n';
        }
    }
    if (!out) {
        throw IoError("write failed for '" + path + "'");
    }
}

} // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Kaczmarz-family solvers for consistent linear systems", "kaczmarz"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "kaczmarz 0.1.0");

    // solve
    SolverFlags solve_solver;
    ProblemFlags solve_problem;
    std::string trajectory_path;
    CLI::App* solve = app.add_subcommand("solve", "Solve one system and print a result row");
    add_solver_flags(*solve, solve_solver);
    add_problem_flags(*solve, solve_problem);
    solve->add_option("--trajectory", trajectory_path, "Write the per-iteration trajectory CSV here");

    // bench
    std::string bench_config;
    std::map<std::string, std::string> bench_kv;
    CLI::App* bench = app.add_subcommand("bench", "Run a problems x methods grid and write a CSV");
    bench->add_option("--config", bench_config, "key = value experiment file");
    const std::vector<std::pair<std::string, std::string>> bench_keys = {
        {"--problem", "problem"},   {"--m", "m"},           {"--n", "n"},
        {"--kb", "rhs_count"},      {"--problem-seed", "problem_seed"},
        {"--mm", "path"},           {"--rhs", "rhs"},       {"--tomo-n", "tomo_n"},
        {"--angles", "angles"},     {"--rays", "rays"},     {"--span", "span"},
        {"--methods", "methods"},   {"--tol", "tol"},       {"--max-iter", "max_iter"},
        {"--eta", "eta"},           {"--kmax", "k_max"},    {"--nr", "block_rows"},
        {"--alpha", "alpha"},       {"--seed", "seed"},     {"--stopping", "stopping"},
        {"--reps", "repetitions"},  {"--output", "output"}, {"--threads", "threads"},
    };
    for (const auto& [flag, key] : bench_keys) {
        bench->add_option_function<std::string>(
            flag, [&bench_kv, key = key](const std::string& v) { bench_kv[key] = v; }, "config key '" + key + "'");
    }
    bench->add_flag_function("--transpose", [&bench_kv](std::int64_t) { bench_kv["transpose"] = "true"; },
                             "Use the transpose of the file matrix");

    // tomo
    std::size_t tomo_n = 60;
    std::string tomo_angles = "0:1:178";
    std::size_t tomo_rays = 125;
    double tomo_span = 0.0;
    bool tomo_info = false;
    bool tomo_solve = false;
    std::string tomo_dump;
    SolverFlags tomo_solver;
    tomo_solver.stopping = "residual";
    CLI::App* tomo = app.add_subcommand("tomo", "Generate a parallel-beam tomography problem");
    tomo->add_option("--n", tomo_n, "Grid size N (N x N pixels)")->capture_default_str();
    tomo->add_option("--angles", tomo_angles, "Angles in degrees: start:step:stop or a comma list")->capture_default_str();
    tomo->add_option("--rays", tomo_rays, "Rays per angle")->capture_default_str();
    tomo->add_option("--span", tomo_span, "Width covered by the rays (default sqrt(2) N)");
    tomo->add_flag("--info", tomo_info, "Print the system size before zero-row dropping");
    tomo->add_flag("--solve", tomo_solve, "Solve the system and print a result row");
    tomo->add_option("--dump", tomo_dump, "Write the reconstruction as 'pixel value' lines");
    add_solver_flags(*tomo, tomo_solver);

    // mm-info
    std::string info_path;
    CLI::App* mm_info = app.add_subcommand("mm-info", "Print the size and nonzero count of a Matrix Market file");
    mm_info->add_option("path", info_path, "Matrix Market file")->required();

    // verify-bounds
    SolverFlags vb_solver;
    vb_solver.method = "srbk-full";
    vb_solver.tol = 1e-8;
    vb_solver.max_iter = 10'000;
    ProblemFlags vb_problem;
    vb_problem.gaussian = "80,25";
    std::size_t vb_runs = 10;
    std::string vb_output;
    CLI::App* verify = app.add_subcommand("verify-bounds", "Check per-step error ratios against contraction factors");
    add_solver_flags(*verify, vb_solver);
    add_problem_flags(*verify, vb_problem);
    verify->add_option("--runs", vb_runs, "Seeds seed .. seed+runs-1")->capture_default_str();
    verify->add_option("--output", vb_output, "BoundReport CSV path (default: stdout summary only)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (solve->parsed()) {
            const SolverConfig cfg = solve_solver.config();
            const ProblemInstance inst = build_problem(solve_problem.source());
            Trajectory traj;
            const ResultRow row = run_single(inst, cfg, trajectory_path.empty() ? nullptr : &traj);
            print_row(out, row);
            if (!trajectory_path.empty()) {
                write_trajectory_csv(trajectory_path, traj);
            }
        } else if (bench->parsed()) {
            std::map<std::string, std::string> kv;
            if (!bench_config.empty()) {
                kv = read_key_value_config(bench_config);
            }
            for (const auto& [key, value] : bench_kv) {
                kv[key] = value;
            }
            const ExperimentSpec spec = spec_from_config(kv);
            const std::vector<ResultRow> rows = run_experiment(spec);
            if (spec.output.empty()) {
                write_csv(out, rows);
            } else {
                write_csv(spec.output, rows);
                out << "wrote " << rows.size() << " rows to " << spec.output.string() << '\n';
            }
        } else if (tomo->parsed()) {
            TomoGeometry g;
            g.n = tomo_n;
            g.angles_deg = parse_angles(tomo_angles);
            g.rays = tomo_rays;
            if (tomo_span > 0.0) {
                g.span = tomo_span;
            }
            const TomoProblem p = gen_paralleltomo(g);
            if (tomo_info || (!tomo_solve && tomo_dump.empty())) {
                out << p.rows_before_drop << " x " << p.instance.a.cols() << '\n';
                out << "nonzero rows " << p.instance.a.rows() << ", dropped " << p.dropped_rows << ", nnz "
                    << p.instance.a.nnz() << '\n';
            }
            if (tomo_solve || !tomo_dump.empty()) {
                const SolverConfig cfg = tomo_solver.config();
                if (cfg.method == Method::MultiRhs) {
                    throw ConfigError("tomo solves a single right-hand side; choose a single-vector method");
                }
                const Vector x0(p.instance.a.cols(), 0.0);
                const auto start = std::chrono::steady_clock::now();
                const SolveResult result = kaczmarz::solve(p.instance.a, p.instance.rhs(0), cfg, x0, p.instance.x_star->col(0));
                const auto stop = std::chrono::steady_clock::now();
                out << "method " << to_string(cfg.method) << ", IT " << result.trajectory.iterations() << ", CPU "
                    << format_double(std::chrono::duration<double>(stop - start).count()) << ", RES "
                    << format_double(result.trajectory.final_res()) << ", " << to_string(result.trajectory.status)
                    << '\n';
                if (!tomo_dump.empty()) {
                    write_reconstruction(tomo_dump, g.n, result.state.x);
                }
            }
        } else if (mm_info->parsed()) {
            const ProblemMatrix a = load_matrix_market(info_path);
            out << a.rows() << " x " << a.cols() << ", nnz " << a.nnz() << '\n';
        } else if (verify->parsed()) {
            SolverConfig cfg = vb_solver.config();
            cfg.record_indices = false;
            ProblemSource src = vb_problem.source();
            src.rhs_count = 1;
            const ProblemInstance inst = build_problem(src);
            std::vector<std::uint64_t> seeds(vb_runs);
            for (std::size_t r = 0; r < vb_runs; ++r) {
                seeds[r] = cfg.seed + r;
            }
            const BoundReport report =
                verify_trajectory_bound(inst.a, inst.rhs(0), inst.x_star->col(0), cfg, seeds);
            if (!vb_output.empty()) {
                write_bound_csv(vb_output, report);
            }
            out << "steps " << report.records.size() << ", violations " << report.violations << ", max_violation "
                << format_double(report.max_violation) << ", min_slack " << format_double(report.min_slack) << '\n';
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int cli_main(int argc, char** argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return cli_main(args, std::cout, std::cerr);
}

} // namespace kaczmarz
