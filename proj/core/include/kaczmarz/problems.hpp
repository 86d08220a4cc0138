#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kaczmarz/matrix.hpp"

namespace kaczmarz {

/// (A, B, X_star) experiment triple. Single right-hand sides are stored as a
/// one-column B.
struct ProblemInstance {
    ProblemMatrix a;
    DenseColMajor b;
    std::optional<DenseColMajor> x_star;
    std::string label;

    std::size_t rhs_count() const noexcept { return b.cols(); }
    std::span<const double> rhs(std::size_t j = 0) const { return b.col(j); }
};

/// Parallel-beam geometry on an N x N grid of unit pixels centred at the
/// origin. Each angle (degrees) casts `rays` parallel rays whose offsets are
/// evenly spaced over [-span/2, span/2]; span defaults to sqrt(2) * N, the
/// grid diagonal.
struct TomoGeometry {
    std::size_t n = 60;
    std::vector<double> angles_deg;
    std::size_t rays = 125;
    std::optional<double> span;

    double ray_span() const;
    void validate() const;
};

/// Parse "start:step:stop" (inclusive stop) or a comma list into degrees.
std::vector<double> parse_angles(const std::string& text);

struct TomoProblem {
    ProblemInstance instance;
    std::size_t rows_before_drop = 0;
    std::size_t dropped_rows = 0;
};

/// Ray r at angle theta passes through t_r*(cos th, sin th) with direction
/// (-sin th, cos th); t_r is the r-th offset. Pixel (row, col) covers
/// [col - N/2, col + 1 - N/2] x [row - N/2, row + 1 - N/2] and has column
/// index row * N + col.
struct RayLine {
    double px, py; ///< point on the ray
    double dx, dy; ///< unit direction
};
RayLine tomo_ray(const TomoGeometry& g, std::size_t angle_index, std::size_t ray_index);

/// Intersection lengths of one ray with the grid's pixels (Siddon traversal),
/// as (pixel, length) pairs in increasing pixel order.
std::vector<std::pair<std::size_t, double>> trace_ray(std::size_t n, const RayLine& ray);

/// Build the tomography system. Rows are ordered angle-major; rows that miss
/// the grid are dropped and counted. x_star is ellipse_phantom(N), b = A x_star.
TomoProblem gen_paralleltomo(const TomoGeometry& g);

/// Nested concentric ellipses centred in the grid, sampled at pixel centres
/// with normalized coordinates u = (col + 0.5)/N*2 - 1, v = (row + 0.5)/N*2 - 1:
///   1.0 inside u^2/0.25^2 + v^2/0.15^2 <= 1
///   0.6 inside u^2/0.50^2 + v^2/0.35^2 <= 1
///   0.3 inside u^2/0.85^2 + v^2/0.65^2 <= 1
///   0.0 elsewhere.
Vector ellipse_phantom(std::size_t n);

/// A = randn(m, n), X_star = randn(n, k_b), B = A X_star, all drawn from one
/// stream seeded with `seed` (A row-major first, then X_star column-major).
ProblemInstance gen_gaussian(std::size_t m, std::size_t n, std::size_t k_b, std::uint64_t seed);

/// b = A x_star for each column of x_star.
ProblemInstance make_consistent(ProblemMatrix a, DenseColMajor x_star, std::string label = {});
ProblemInstance make_consistent(ProblemMatrix a, std::span<const double> x_star, std::string label = {});

struct MatrixMarketInfo {
    std::size_t rows = 0;
    std::size_t cols = 0;
    /// Entries as declared in the size line (before symmetric expansion).
    std::size_t declared_entries = 0;
    bool coordinate = true;
    bool symmetric = false;
};

/// Read a real Matrix Market file (coordinate or array; general or
/// symmetric). Symmetric storage is expanded; `transpose` returns A^T.
/// Malformed input raises ParseError with the offending line number.
ProblemMatrix load_matrix_market(const std::filesystem::path& path, bool transpose = false);

/// Header and size line only.
MatrixMarketInfo read_matrix_market_info(const std::filesystem::path& path);

/// Write A as "coordinate real general" with 1-based indices and
/// round-trip precision values.
void write_matrix_market(const std::filesystem::path& path, const ProblemMatrix& a);

} // namespace kaczmarz
