#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kaczmarz/problems.hpp"
#include "kaczmarz/solvers.hpp"

namespace kaczmarz {

/// Where an experiment's system comes from.
struct ProblemSource {
    enum class Kind { Gaussian, MatrixMarket, Tomography, Identity };
    Kind kind = Kind::Gaussian;

    // Gaussian / Identity
    std::size_t m = 1000;
    std::size_t n = 100;
    std::size_t rhs_count = 1;
    std::uint64_t seed = 1;

    // Matrix Market
    std::filesystem::path path;
    bool transpose = false;
    /// Right-hand side generator for file matrices: "randn" or "ones".
    std::string rhs = "randn";

    // Tomography
    TomoGeometry geometry;

    std::string label() const;
};

ProblemInstance build_problem(const ProblemSource& src);

struct ExperimentSpec {
    std::vector<ProblemSource> problems;
    std::vector<SolverConfig> methods;
    std::size_t repetitions = 5;
    std::filesystem::path output;
    /// Worker threads for independent (problem, method, repetition) cells.
    std::size_t threads = 1;

    void validate() const;
};

struct ResultRow {
    std::string problem;
    std::string method;
    double eta = 0.0;
    std::size_t k_max = 0;
    std::size_t block_rows = 0;
    double alpha = 0.0;
    double tol = 0.0;
    std::uint64_t seed = 0; ///< base seed; repetition r used seed + r
    std::size_t repetitions = 0;
    double mean_it = 0.0;
    double mean_cpu_s = 0.0;
    double final_res = 0.0; ///< worst final metric over repetitions
    /// CONVERGED only if every repetition converged; otherwise NOT-CONVERGED
    /// (or DIVERGED), and the IT/CPU means must not be read as converged.
    std::string status;
    /// Mean rows evaluated for selection per iteration.
    double mean_rows_touched = 0.0;
    std::string error; ///< non-empty if the problem could not be built
};

/// Run every (problem, method, repetition) cell. Problem construction errors
/// are reported in the affected rows; other cells still run. Rows are
/// ordered by problem, then method, as given in the spec.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

/// Solve one instance with a config (single or multi-RHS by cfg.method) and
/// return the aggregated row for one repetition.
ResultRow run_single(const ProblemInstance& inst, const SolverConfig& cfg, Trajectory* trajectory = nullptr);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

std::vector<std::string> result_csv_header();
void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_csv(const std::filesystem::path& path);

/// Columns: t, res, block_size, elapsed_ns.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// key = value lines; '#' starts a comment. Keys are documented in README.
std::map<std::string, std::string> read_key_value_config(const std::filesystem::path& path);
ExperimentSpec spec_from_config(const std::map<std::string, std::string>& kv);

} // namespace kaczmarz
