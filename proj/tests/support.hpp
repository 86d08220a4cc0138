#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "kaczmarz/matrix.hpp"
#include "kaczmarz/problems.hpp"
#include "kaczmarz/rng.hpp"

namespace ktest {

using kaczmarz::ProblemMatrix;
using kaczmarz::Vector;

inline Eigen::MatrixXd to_eigen(const kaczmarz::DenseMatrix& m)
{
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(i, j) = m(i, j);
        }
    }
    return out;
}

inline Eigen::MatrixXd to_eigen(const ProblemMatrix& a)
{
    return to_eigen(a.to_dense());
}

inline Eigen::VectorXd to_eigen(std::span<const double> v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Vector randn(std::size_t n, kaczmarz::RngStream& rng)
{
    Vector v(n);
    for (double& x : v) {
        x = rng.normal();
    }
    return v;
}

// Sparse matrix with roughly `density` nonzeros per entry and no empty rows.
inline ProblemMatrix random_sparse(std::size_t m, std::size_t n, double density, kaczmarz::RngStream& rng)
{
    std::vector<kaczmarz::Triplet> t;
    for (std::size_t i = 0; i < m; ++i) {
        t.push_back({i, rng.below(n), rng.normal()});
        for (std::size_t j = 0; j < n; ++j) {
            if (rng.uniform() < density) {
                t.push_back({i, j, rng.normal()});
            }
        }
    }
    return kaczmarz::build_csr(m, n, t);
}

inline double dist_sq(std::span<const double> x, std::span<const double> y)
{
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += (x[i] - y[i]) * (x[i] - y[i]);
    }
    return s;
}

// Moore-Penrose pseudoinverse through Eigen's SVD, relative cutoff 1e-12.
inline Eigen::MatrixXd pinv(const Eigen::MatrixXd& m)
{
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd s = svd.singularValues();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > s(0) * 1e-12) {
            inv(i) = 1.0 / s(i);
        }
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

} // namespace ktest
