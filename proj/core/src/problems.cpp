#include "kaczmarz/problems.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string_view>

#include "kaczmarz/error.hpp"
#include "kaczmarz/rng.hpp"

namespace kaczmarz {

namespace {

// Exact values at multiples of 90 degrees so axis-aligned rays stay exactly
// axis-aligned.
std::pair<double, double> sincos_deg(double deg)
{
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) {
        r += 360.0;
    }
    if (r == 0.0) {
        return {0.0, 1.0};
    }
    if (r == 90.0) {
        return {1.0, 0.0};
    }
    if (r == 180.0) {
        return {0.0, -1.0};
    }
    if (r == 270.0) {
        return {-1.0, 0.0};
    }
    const double rad = r * std::numbers::pi / 180.0;
    return {std::sin(rad), std::cos(rad)};
}

// Parameter interval [s_in, s_out] where p + s*d lies in [lo, hi]^2.
bool clip_to_square(const RayLine& ray, double lo, double hi, double& s_in, double& s_out)
{
    s_in = -std::numeric_limits<double>::infinity();
    s_out = std::numeric_limits<double>::infinity();
    const double p[2] = {ray.px, ray.py};
    const double d[2] = {ray.dx, ray.dy};
    for (int axis = 0; axis < 2; ++axis) {
        if (d[axis] == 0.0) {
            if (p[axis] < lo || p[axis] >= hi) {
                return false;
            }
            continue;
        }
        double a = (lo - p[axis]) / d[axis];
        double b = (hi - p[axis]) / d[axis];
        if (a > b) {
            std::swap(a, b);
        }
        s_in = std::max(s_in, a);
        s_out = std::min(s_out, b);
    }
    return s_out > s_in;
}

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) {
            ++i;
        }
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') {
            ++i;
        }
        if (i > start) {
            out.push_back(s.substr(start, i - start));
        }
    }
    return out;
}

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& out)
{
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

struct MmHeader {
    MatrixMarketInfo info;
    bool skew = false;
    std::size_t size_line = 0;
};

MmHeader parse_header(std::istream& in, const std::string& path, std::size_t& line_no)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(path, 1, "empty file");
    }
    line_no = 1;
    const auto banner = split_ws(trim(line));
    if (banner.size() != 5 || lower(banner[0]) != "%%matrixmarket") {
        throw ParseError(path, 1, "missing '%%MatrixMarket matrix <format> <field> <symmetry>' banner");
    }
    if (lower(banner[1]) != "matrix") {
        throw ParseError(path, 1, "unsupported object '" + std::string(banner[1]) + "'");
    }
    MmHeader h;
    const std::string format = lower(banner[2]);
    if (format == "coordinate") {
        h.info.coordinate = true;
    } else if (format == "array") {
        h.info.coordinate = false;
    } else {
        throw ParseError(path, 1, "unknown format '" + std::string(banner[2]) + "'");
    }
    const std::string field = lower(banner[3]);
    if (field == "complex") {
        throw ParseError(path, 1, "complex matrices are not supported");
    }
    if (field == "pattern") {
        throw ParseError(path, 1, "pattern matrices carry no values and are not supported");
    }
    if (field != "real" && field != "integer" && field != "double") {
        throw ParseError(path, 1, "unknown field '" + std::string(banner[3]) + "'");
    }
    const std::string symmetry = lower(banner[4]);
    if (symmetry == "general") {
        h.info.symmetric = false;
    } else if (symmetry == "symmetric") {
        h.info.symmetric = true;
    } else if (symmetry == "skew-symmetric") {
        h.info.symmetric = true;
        h.skew = true;
    } else {
        throw ParseError(path, 1, "unsupported symmetry '" + std::string(banner[4]) + "'");
    }

    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '%') {
            continue;
        }
        const auto toks = split_ws(t);
        const std::size_t want = h.info.coordinate ? 3 : 2;
        if (toks.size() != want || !parse_number(toks[0], h.info.rows) || !parse_number(toks[1], h.info.cols) ||
            (h.info.coordinate && !parse_number(toks[2], h.info.declared_entries))) {
            throw ParseError(path, line_no, "malformed size line");
        }
        if (!h.info.coordinate) {
            h.info.declared_entries = h.info.symmetric
                                          ? (h.skew ? h.info.rows * (h.info.rows - 1) / 2
                                                    : h.info.rows * (h.info.rows + 1) / 2)
                                          : h.info.rows * h.info.cols;
        }
        if (h.info.symmetric && h.info.rows != h.info.cols) {
            throw ParseError(path, line_no, "symmetric matrix must be square");
        }
        h.size_line = line_no;
        return h;
    }
    throw ParseError(path, line_no, "missing size line");
}

} // namespace

double TomoGeometry::ray_span() const
{
    return span.value_or(std::numbers::sqrt2 * static_cast<double>(n));
}

void TomoGeometry::validate() const
{
    if (n < 1) {
        throw ConfigError("tomography grid size must be at least 1");
    }
    if (rays < 1) {
        throw ConfigError("tomography needs at least one ray per angle");
    }
    if (angles_deg.empty()) {
        throw ConfigError("tomography angle list is empty");
    }
    if (span && !(*span >= 0.0)) {
        throw ConfigError("tomography ray span must be non-negative");
    }
}

std::vector<double> parse_angles(const std::string& text)
{
    std::vector<double> out;
    const auto t = trim(text);
    if (t.find(':') != std::string_view::npos) {
        std::vector<double> parts;
        std::size_t start = 0;
        while (true) {
            const auto colon = t.find(':', start);
            const auto tok = trim(t.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start));
            double v = 0.0;
            if (!parse_number(tok, v)) {
                throw ConfigError("bad angle range '" + text + "'");
            }
            parts.push_back(v);
            if (colon == std::string_view::npos) {
                break;
            }
            start = colon + 1;
        }
        if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0]) {
            throw ConfigError("angle range must be start:step:stop with step > 0 and stop >= start");
        }
        const auto count = static_cast<std::size_t>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9)) + 1;
        for (std::size_t k = 0; k < count; ++k) {
            out.push_back(parts[0] + static_cast<double>(k) * parts[1]);
        }
        return out;
    }
    std::size_t start = 0;
    while (start <= t.size()) {
        const auto comma = t.find(',', start);
        const auto tok = trim(t.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        double v = 0.0;
        if (!parse_number(tok, v)) {
            throw ConfigError("bad angle list '" + text + "'");
        }
        out.push_back(v);
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

RayLine tomo_ray(const TomoGeometry& g, std::size_t angle_index, std::size_t ray_index)
{
    const auto [s, c] = sincos_deg(g.angles_deg.at(angle_index));
    const double d = g.ray_span();
    const double offset =
        g.rays == 1 ? 0.0 : -d / 2.0 + d * static_cast<double>(ray_index) / static_cast<double>(g.rays - 1);
    return RayLine{offset * c, offset * s, -s, c};
}

std::vector<std::pair<std::size_t, double>> trace_ray(std::size_t n, const RayLine& ray)
{
    std::vector<std::pair<std::size_t, double>> out;
    const double half = static_cast<double>(n) / 2.0;
    double s_in = 0.0;
    double s_out = 0.0;
    if (!clip_to_square(ray, -half, half, s_in, s_out)) {
        return out;
    }
    // Parameters where the ray crosses interior grid lines, plus the ends.
    std::vector<double> cuts{s_in, s_out};
    const double p[2] = {ray.px, ray.py};
    const double d[2] = {ray.dx, ray.dy};
    for (int axis = 0; axis < 2; ++axis) {
        if (d[axis] == 0.0) {
            continue;
        }
        for (std::size_t k = 1; k < n; ++k) {
            const double s = (static_cast<double>(k) - half - p[axis]) / d[axis];
            if (s > s_in && s < s_out) {
                cuts.push_back(s);
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());

    std::map<std::size_t, double> lengths;
    const double min_len = 1e-12 * std::max(1.0, static_cast<double>(n));
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double len = cuts[k + 1] - cuts[k];
        if (len <= min_len) {
            continue;
        }
        const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
        const double x = ray.px + mid * ray.dx + half;
        const double y = ray.py + mid * ray.dy + half;
        const auto col = static_cast<std::size_t>(std::clamp(std::floor(x), 0.0, static_cast<double>(n - 1)));
        const auto row = static_cast<std::size_t>(std::clamp(std::floor(y), 0.0, static_cast<double>(n - 1)));
        lengths[row * n + col] += len;
    }
    out.assign(lengths.begin(), lengths.end());
    return out;
}

Vector ellipse_phantom(std::size_t n)
{
    struct Ellipse {
        double a, b, value;
    };
    // Innermost first: the first ellipse containing a pixel centre sets it.
    constexpr Ellipse layers[] = {{0.25, 0.15, 1.0}, {0.50, 0.35, 0.6}, {0.85, 0.65, 0.3}};
    Vector x(n * n, 0.0);
    for (std::size_t row = 0; row < n; ++row) {
        for (std::size_t col = 0; col < n; ++col) {
            const double u = (static_cast<double>(col) + 0.5) / static_cast<double>(n) * 2.0 - 1.0;
            const double v = (static_cast<double>(row) + 0.5) / static_cast<double>(n) * 2.0 - 1.0;
            for (const Ellipse& e : layers) {
                if (u * u / (e.a * e.a) + v * v / (e.b * e.b) <= 1.0) {
                    x[row * n + col] = e.value;
                    break;
                }
            }
        }
    }
    return x;
}

TomoProblem gen_paralleltomo(const TomoGeometry& g)
{
    g.validate();
    TomoProblem out;
    out.rows_before_drop = g.angles_deg.size() * g.rays;
    std::vector<Triplet> entries;
    std::size_t kept = 0;
    for (std::size_t a = 0; a < g.angles_deg.size(); ++a) {
        for (std::size_t r = 0; r < g.rays; ++r) {
            const auto row = trace_ray(g.n, tomo_ray(g, a, r));
            if (row.empty()) {
                ++out.dropped_rows;
                continue;
            }
            for (const auto& [pixel, len] : row) {
                entries.push_back({kept, pixel, len});
            }
            ++kept;
        }
    }
    ProblemMatrix a = ProblemMatrix::from_triplets(kept, g.n * g.n, entries);
    const Vector phantom = ellipse_phantom(g.n);
    out.instance = make_consistent(std::move(a), phantom,
                                   "paralleltomo(" + std::to_string(g.n) + "," + std::to_string(g.angles_deg.size()) +
                                       " angles," + std::to_string(g.rays) + ")");
    return out;
}

ProblemInstance gen_gaussian(std::size_t m, std::size_t n, std::size_t k_b, std::uint64_t seed)
{
    if (m < 1 || n < 1 || k_b < 1) {
        throw ContractError("gen_gaussian: dimensions must be positive");
    }
    RngStream rng(seed);
    std::vector<double> a(m * n);
    for (double& v : a) {
        v = rng.normal();
    }
    std::vector<double> xs(n * k_b);
    for (double& v : xs) {
        v = rng.normal();
    }
    return make_consistent(ProblemMatrix::from_dense(m, n, std::move(a)), DenseColMajor(n, k_b, std::move(xs)),
                           "randn(" + std::to_string(m) + "," + std::to_string(n) + ")");
}

ProblemInstance make_consistent(ProblemMatrix a, DenseColMajor x_star, std::string label)
{
    if (x_star.rows() != a.cols()) {
        throw ContractError("make_consistent: x_star has " + std::to_string(x_star.rows()) + " rows, A has " +
                            std::to_string(a.cols()) + " columns");
    }
    ProblemInstance inst;
    inst.b = DenseColMajor(a.rows(), x_star.cols());
    for (std::size_t j = 0; j < x_star.cols(); ++j) {
        const Vector col = a.multiply(x_star.col(j));
        std::copy(col.begin(), col.end(), inst.b.col(j).begin());
    }
    inst.a = std::move(a);
    inst.x_star = std::move(x_star);
    inst.label = std::move(label);
    return inst;
}

ProblemInstance make_consistent(ProblemMatrix a, std::span<const double> x_star, std::string label)
{
    return make_consistent(std::move(a), DenseColMajor::from_column(x_star), std::move(label));
}

MatrixMarketInfo read_matrix_market_info(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::size_t line_no = 0;
    return parse_header(in, path.string(), line_no).info;
}

ProblemMatrix load_matrix_market(const std::filesystem::path& path, bool transpose)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    const std::string name = path.string();
    std::size_t line_no = 0;
    const MmHeader h = parse_header(in, name, line_no);
    const MatrixMarketInfo& info = h.info;

    std::vector<Triplet> entries;
    entries.reserve(info.symmetric ? 2 * info.declared_entries : info.declared_entries);
    auto push = [&](std::size_t i, std::size_t j, double v) {
        entries.push_back({i, j, v});
        if (info.symmetric && i != j) {
            entries.push_back({j, i, h.skew ? -v : v});
        }
    };

    std::size_t seen = 0;
    // Array storage walks column-major; symmetric arrays store the lower
    // triangle only (strictly lower for skew-symmetric).
    std::size_t arr_i = 0;
    std::size_t arr_j = 0;
    auto first_row_of = [&](std::size_t j) { return info.symmetric ? (h.skew ? j + 1 : j) : std::size_t{0}; };
    if (!info.coordinate) {
        arr_i = first_row_of(0);
        while (arr_j < info.cols && arr_i >= info.rows) {
            ++arr_j;
            arr_i = first_row_of(arr_j);
        }
    }

    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '%') {
            continue;
        }
        if (seen == info.declared_entries) {
            throw ParseError(name, line_no, "more entries than the declared " + std::to_string(info.declared_entries));
        }
        const auto toks = split_ws(t);
        if (info.coordinate) {
            std::size_t i = 0;
            std::size_t j = 0;
            double v = 0.0;
            if (toks.size() != 3 || !parse_number(toks[0], i) || !parse_number(toks[1], j) ||
                !parse_number(toks[2], v)) {
                throw ParseError(name, line_no, "malformed coordinate entry");
            }
            if (i < 1 || j < 1 || i > info.rows || j > info.cols) {
                throw ParseError(name, line_no,
                                 "index (" + std::to_string(i) + ", " + std::to_string(j) +
                                     ") outside the declared " + std::to_string(info.rows) + " x " +
                                     std::to_string(info.cols));
            }
            if (info.symmetric && j > i) {
                throw ParseError(name, line_no, "symmetric storage must list the lower triangle only");
            }
            push(i - 1, j - 1, v);
        } else {
            double v = 0.0;
            if (toks.size() != 1 || !parse_number(toks[0], v)) {
                throw ParseError(name, line_no, "malformed array entry");
            }
            if (v != 0.0) {
                push(arr_i, arr_j, v);
            }
            ++arr_i;
            while (arr_j < info.cols && arr_i >= info.rows) {
                ++arr_j;
                arr_i = first_row_of(arr_j);
            }
        }
        ++seen;
    }
    if (seen != info.declared_entries) {
        throw ParseError(name, line_no,
                         "expected " + std::to_string(info.declared_entries) + " entries, found " +
                             std::to_string(seen));
    }
    if (transpose) {
        for (Triplet& e : entries) {
            std::swap(e.row, e.col);
        }
        return ProblemMatrix::from_triplets(info.cols, info.rows, entries);
    }
    return ProblemMatrix::from_triplets(info.rows, info.cols, entries);
}

void write_matrix_market(const std::filesystem::path& path, const ProblemMatrix& a)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    auto fmt = [](double v) {
        char buf[32];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, ptr);
    };
    out << "%%MatrixMarket matrix coordinate real general\n";
    if (a.is_sparse()) {
        out << a.rows() << ' ' << a.cols() << ' ' << a.values().size() << '\n';
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const RowView r = a.row(i);
            for (std::size_t p = 0; p < r.cols.size(); ++p) {
                out << i + 1 << ' ' << r.cols[p] + 1 << ' ' << fmt(r.values[p]) << '\n';
            }
        }
    } else {
        out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const RowView r = a.row(i);
            for (std::size_t j = 0; j < a.cols(); ++j) {
                if (r.values[j] != 0.0) {
                    out << i + 1 << ' ' << j + 1 << ' ' << fmt(r.values[j]) << '\n';
                }
            }
        }
    }
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

} // namespace kaczmarz
