#include "kaczmarz/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "kaczmarz/error.hpp"
#include "kaczmarz/multirhs.hpp"
#include "kaczmarz/rng.hpp"

namespace kaczmarz {

namespace {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

template <typename T>
T parse_field(const std::string& s, const std::string& what)
{
    T v{};
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("cannot parse " + what + " from '" + s + "'");
    }
    return v;
}

double parse_double(const std::string& s, const std::string& what)
{
    if (s == "nan") {
        return std::nan("");
    }
    if (s == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    return parse_field<double>(s, what);
}

bool parse_bool(const std::string& s)
{
    return s == "1" || s == "true" || s == "yes" || s == "on";
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    return out;
}

struct CellOutcome {
    std::size_t iterations = 0;
    double cpu_s = 0.0;
    double final_res = 0.0;
    Status status = Status::MaxIter;
    double rows_per_it = 0.0;
};

CellOutcome run_cell(const ProblemInstance& inst, const SolverConfig& cfg, Trajectory* trajectory)
{
    SolverConfig run_cfg = cfg;
    if (trajectory == nullptr) {
        run_cfg.record_indices = false;
    }
    Trajectory traj;
    const auto start = std::chrono::steady_clock::now();
    if (cfg.method == Method::MultiRhs) {
        DenseColMajor x0(inst.a.cols(), inst.rhs_count());
        traj = solve_multirhs(inst.a, inst.b, run_cfg, x0, inst.x_star).trajectory;
    } else {
        const Vector x0(inst.a.cols(), 0.0);
        std::optional<std::span<const double>> star;
        if (inst.x_star) {
            star = inst.x_star->col(0);
        }
        traj = solve(inst.a, inst.rhs(0), run_cfg, x0, star).trajectory;
    }
    const auto stop = std::chrono::steady_clock::now();

    CellOutcome out;
    out.iterations = traj.iterations();
    out.cpu_s = std::chrono::duration<double>(stop - start).count();
    out.final_res = traj.final_res();
    out.status = traj.status;
    std::size_t touched = 0;
    for (const IterationRecord& r : traj.records) {
        touched += r.rows_touched;
    }
    out.rows_per_it = traj.records.empty() ? 0.0 : static_cast<double>(touched) / static_cast<double>(traj.records.size());
    if (trajectory != nullptr) {
        *trajectory = std::move(traj);
    }
    return out;
}

ResultRow row_header(const std::string& label, const SolverConfig& cfg)
{
    ResultRow row;
    row.problem = label;
    row.method = std::string(to_string(cfg.method));
    row.eta = cfg.eta;
    row.k_max = cfg.k_max;
    row.block_rows = cfg.block_rows;
    row.alpha = cfg.alpha;
    row.tol = cfg.tol;
    row.seed = cfg.seed;
    return row;
}

void aggregate(ResultRow& row, const std::vector<CellOutcome>& cells)
{
    row.repetitions = cells.size();
    bool all_converged = true;
    bool any_diverged = false;
    double it = 0.0;
    double cpu = 0.0;
    double rows = 0.0;
    double worst = 0.0;
    for (const CellOutcome& c : cells) {
        it += static_cast<double>(c.iterations);
        cpu += c.cpu_s;
        rows += c.rows_per_it;
        worst = std::isnan(c.final_res) ? c.final_res : std::max(worst, c.final_res);
        all_converged = all_converged && c.status == Status::Converged;
        any_diverged = any_diverged || c.status == Status::Diverged;
    }
    const auto n = static_cast<double>(std::max<std::size_t>(cells.size(), 1));
    row.mean_it = it / n;
    row.mean_cpu_s = cpu / n;
    row.mean_rows_touched = rows / n;
    row.final_res = worst;
    row.status = any_diverged ? "DIVERGED" : (all_converged ? "CONVERGED" : "NOT-CONVERGED");
}

} // namespace

std::string ProblemSource::label() const
{
    switch (kind) {
    case Kind::Gaussian:
        return "randn(" + std::to_string(m) + "," + std::to_string(n) + ")";
    case Kind::Identity:
        return "identity(" + std::to_string(m) + ")";
    case Kind::MatrixMarket:
        return path.stem().string() + (transpose ? "^T" : "");
    case Kind::Tomography:
        return "paralleltomo(" + std::to_string(geometry.n) + "," + std::to_string(geometry.angles_deg.size()) +
               " angles," + std::to_string(geometry.rays) + ")";
    }
    return "?";
}

ProblemInstance build_problem(const ProblemSource& src)
{
    switch (src.kind) {
    case ProblemSource::Kind::Gaussian: {
        ProblemInstance inst = gen_gaussian(src.m, src.n, src.rhs_count, src.seed);
        inst.label = src.label();
        return inst;
    }
    case ProblemSource::Kind::Identity: {
        std::vector<Triplet> entries;
        for (std::size_t i = 0; i < src.m; ++i) {
            entries.push_back({i, i, 1.0});
        }
        DenseColMajor ones(src.m, src.rhs_count, 1.0);
        return make_consistent(build_csr(src.m, src.m, entries), std::move(ones), src.label());
    }
    case ProblemSource::Kind::MatrixMarket: {
        if (!std::filesystem::exists(src.path)) {
            throw IoError("matrix file '" + src.path.string() + "' not found");
        }
        ProblemMatrix a = load_matrix_market(src.path, src.transpose);
        DenseColMajor xs(a.cols(), src.rhs_count, 1.0);
        if (src.rhs == "randn") {
            RngStream rng(src.seed);
            for (std::size_t j = 0; j < xs.cols(); ++j) {
                for (double& v : xs.col(j)) {
                    v = rng.normal();
                }
            }
        } else if (src.rhs != "ones") {
            throw ConfigError("unknown right-hand side generator '" + src.rhs + "' (expected randn or ones)");
        }
        return make_consistent(std::move(a), std::move(xs), src.label());
    }
    case ProblemSource::Kind::Tomography:
        return gen_paralleltomo(src.geometry).instance;
    }
    throw ConfigError("unknown problem kind");
}

void ExperimentSpec::validate() const
{
    if (repetitions < 1) {
        throw ConfigError("repetitions must be at least 1");
    }
    if (methods.empty()) {
        throw ConfigError("experiment needs at least one method");
    }
    if (problems.empty()) {
        throw ConfigError("experiment needs at least one problem");
    }
    for (const SolverConfig& cfg : methods) {
        cfg.validate();
    }
}

ResultRow run_single(const ProblemInstance& inst, const SolverConfig& cfg, Trajectory* trajectory)
{
    ResultRow row = row_header(inst.label, cfg);
    aggregate(row, {run_cell(inst, cfg, trajectory)});
    return row;
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec)
{
    spec.validate();

    std::vector<std::optional<ProblemInstance>> instances(spec.problems.size());
    std::vector<std::string> build_errors(spec.problems.size());
    for (std::size_t p = 0; p < spec.problems.size(); ++p) {
        try {
            instances[p] = build_problem(spec.problems[p]);
        } catch (const Error& e) {
            build_errors[p] = e.what();
        }
    }

    struct Cell {
        std::size_t problem;
        std::size_t method;
        std::size_t rep;
    };
    std::vector<Cell> cells;
    for (std::size_t p = 0; p < spec.problems.size(); ++p) {
        if (!instances[p]) {
            continue;
        }
        for (std::size_t m = 0; m < spec.methods.size(); ++m) {
            for (std::size_t r = 0; r < spec.repetitions; ++r) {
                cells.push_back({p, m, r});
            }
        }
    }

    // outcomes[p][m][r]; each cell writes its own slot.
    std::vector<std::vector<std::vector<CellOutcome>>> outcomes(
        spec.problems.size(),
        std::vector<std::vector<CellOutcome>>(spec.methods.size(), std::vector<CellOutcome>(spec.repetitions)));
    std::vector<std::vector<std::string>> cell_errors(spec.problems.size(),
                                                      std::vector<std::string>(spec.methods.size()));
    std::mutex error_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t c = next++; c < cells.size(); c = next++) {
            const Cell& cell = cells[c];
            SolverConfig cfg = spec.methods[cell.method];
            cfg.seed += cell.rep;
            try {
                outcomes[cell.problem][cell.method][cell.rep] = run_cell(*instances[cell.problem], cfg, nullptr);
            } catch (const Error& e) {
                std::lock_guard lock(error_mutex);
                cell_errors[cell.problem][cell.method] = e.what();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(spec.threads, cells.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }

    std::vector<ResultRow> rows;
    for (std::size_t p = 0; p < spec.problems.size(); ++p) {
        const std::string label = instances[p] ? instances[p]->label : spec.problems[p].label();
        for (std::size_t m = 0; m < spec.methods.size(); ++m) {
            ResultRow row = row_header(label, spec.methods[m]);
            if (!instances[p]) {
                row.status = "ERROR";
                row.error = build_errors[p];
            } else if (!cell_errors[p][m].empty()) {
                row.status = "ERROR";
                row.error = cell_errors[p][m];
            } else {
                aggregate(row, outcomes[p][m]);
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::vector<std::string> result_csv_header()
{
    return {"problem", "method", "eta", "k_max", "block_rows", "alpha", "tol", "seed", "repetitions",
            "it",      "cpu_s",  "res", "status", "rows_per_it", "error"};
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows)
{
    const auto header = result_csv_header();
    for (std::size_t c = 0; c < header.size(); ++c) {
        out << (c ? "," : "") << header[c];
    }
    out << '\n';
    for (const ResultRow& r : rows) {
        out << csv_field(r.problem) << ',' << csv_field(r.method) << ',' << format_double(r.eta) << ',' << r.k_max
            << ',' << r.block_rows << ',' << format_double(r.alpha) << ',' << format_double(r.tol) << ',' << r.seed
            << ',' << r.repetitions << ',' << format_double(r.mean_it) << ',' << format_double(r.mean_cpu_s) << ','
            << format_double(r.final_res) << ',' << csv_field(r.status) << ',' << format_double(r.mean_rows_touched)
            << ',' << csv_field(r.error) << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows)
{
    std::ofstream out = open_out(path);
    write_csv(out, rows);
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

std::vector<ResultRow> read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != result_csv_header()) {
        throw IoError("'" + path.string() + "' is not a result CSV");
    }
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != result_csv_header().size()) {
            throw IoError("'" + path.string() + "': wrong field count in row " + std::to_string(rows.size() + 1));
        }
        ResultRow r;
        r.problem = f[0];
        r.method = f[1];
        r.eta = parse_double(f[2], "eta");
        r.k_max = parse_field<std::size_t>(f[3], "k_max");
        r.block_rows = parse_field<std::size_t>(f[4], "block_rows");
        r.alpha = parse_double(f[5], "alpha");
        r.tol = parse_double(f[6], "tol");
        r.seed = parse_field<std::uint64_t>(f[7], "seed");
        r.repetitions = parse_field<std::size_t>(f[8], "repetitions");
        r.mean_it = parse_double(f[9], "it");
        r.mean_cpu_s = parse_double(f[10], "cpu_s");
        r.final_res = parse_double(f[11], "res");
        r.status = f[12];
        r.mean_rows_touched = parse_double(f[13], "rows_per_it");
        r.error = f[14];
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory)
{
    std::ofstream out = open_out(path);
    out << "t,res,block_size,elapsed_ns\n";
    for (const IterationRecord& r : trajectory.records) {
        out << r.t << ',' << format_double(r.res) << ',' << r.block_size << ',' << r.elapsed_ns << '\n';
    }
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

Trajectory read_trajectory_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(in, line) || line != "t,res,block_size,elapsed_ns") {
        throw IoError("'" + path.string() + "' is not a trajectory CSV");
    }
    Trajectory traj;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 4) {
            throw IoError("'" + path.string() + "': wrong field count");
        }
        IterationRecord r;
        r.t = parse_field<std::size_t>(f[0], "t");
        r.res = parse_double(f[1], "res");
        r.block_size = parse_field<std::size_t>(f[2], "block_size");
        r.elapsed_ns = parse_field<std::uint64_t>(f[3], "elapsed_ns");
        traj.push(std::move(r));
    }
    return traj;
}

std::map<std::string, std::string> read_key_value_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config '" + path.string() + "'");
    }
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) {
            return std::string{};
        }
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

ExperimentSpec spec_from_config(const std::map<std::string, std::string>& kv)
{
    static const char* known[] = {"problem", "m",      "n",          "rhs_count", "problem_seed", "path",
                                  "transpose", "rhs",  "tomo_n",     "angles",    "rays",         "span",
                                  "methods", "tol",    "max_iter",   "eta",       "k_max",        "block_rows",
                                  "alpha",   "seed",   "stopping",   "repetitions", "output",     "threads"};
    for (const auto& [key, value] : kv) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    auto get = [&](const std::string& key, const std::string& fallback) {
        const auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    };

    ExperimentSpec spec;
    ProblemSource src;
    const std::string kind = get("problem", "gaussian");
    if (kind == "gaussian") {
        src.kind = ProblemSource::Kind::Gaussian;
    } else if (kind == "mm") {
        src.kind = ProblemSource::Kind::MatrixMarket;
    } else if (kind == "tomo") {
        src.kind = ProblemSource::Kind::Tomography;
    } else if (kind == "identity") {
        src.kind = ProblemSource::Kind::Identity;
    } else {
        throw ConfigError("unknown problem kind '" + kind + "' (expected gaussian, mm, tomo or identity)");
    }
    src.m = parse_field<std::size_t>(get("m", "1000"), "m");
    src.n = parse_field<std::size_t>(get("n", "100"), "n");
    src.rhs_count = parse_field<std::size_t>(get("rhs_count", "1"), "rhs_count");
    src.seed = parse_field<std::uint64_t>(get("problem_seed", "1"), "problem_seed");
    src.path = get("path", "");
    src.transpose = parse_bool(get("transpose", "false"));
    src.rhs = get("rhs", "randn");
    src.geometry.n = parse_field<std::size_t>(get("tomo_n", "60"), "tomo_n");
    src.geometry.angles_deg = parse_angles(get("angles", "0:1:178"));
    src.geometry.rays = parse_field<std::size_t>(get("rays", "125"), "rays");
    if (kv.count("span")) {
        src.geometry.span = parse_double(kv.at("span"), "span");
    }
    spec.problems.push_back(src);

    SolverConfig base;
    base.tol = parse_double(get("tol", "1e-3"), "tol");
    base.max_iter = parse_field<std::size_t>(get("max_iter", "1000000"), "max_iter");
    base.eta = parse_double(get("eta", "0.1"), "eta");
    base.k_max = parse_field<std::size_t>(get("k_max", "10"), "k_max");
    base.block_rows = parse_field<std::size_t>(get("block_rows", std::to_string(base.k_max)), "block_rows");
    base.alpha = parse_double(get("alpha", "1.95"), "alpha");
    base.seed = parse_field<std::uint64_t>(get("seed", "0"), "seed");
    base.stopping = parse_stopping(get("stopping", "error"));

    std::stringstream methods(get("methods", "srbk"));
    std::string name;
    while (std::getline(methods, name, ',')) {
        name.erase(0, name.find_first_not_of(' '));
        name.erase(name.find_last_not_of(' ') + 1);
        if (name.empty()) {
            continue;
        }
        SolverConfig cfg = base;
        cfg.method = parse_method(name);
        spec.methods.push_back(cfg);
    }
    spec.repetitions = parse_field<std::size_t>(get("repetitions", "5"), "repetitions");
    spec.output = get("output", "");
    spec.threads = parse_field<std::size_t>(get("threads", "1"), "threads");
    spec.validate();
    return spec;
}

} // namespace kaczmarz
