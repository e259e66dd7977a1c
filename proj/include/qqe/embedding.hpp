#pragma once

#include <string>

#include <Eigen/Eigenvalues>

#include "qqe/io.hpp"
#include "qqe/types.hpp"

namespace qqe {

struct PcaResult {
    /// n x p projected coordinates.
    Matrix embedding;
    /// d x p orthonormal directions, one per column.
    Eigen::MatrixXd components;
    /// Top-p covariance eigenvalues, descending.
    Vector eigenvalues;
    /// Set when p exceeds the numerical rank; the surplus columns are zero.
    bool rank_deficient = false;
};

/// Projects centered data onto the top-p eigenvectors of the sample
/// covariance. Each direction's largest-magnitude loading is made positive.
inline PcaResult pca_fit(const Eigen::Ref<const Matrix>& x, Index p) {
    const Index n = x.rows();
    const Index d = x.cols();
    if (p < 1) throw Error(ErrorCode::InvalidParameter, "PCA target dimension must be at least 1");
    if (p > std::min(n - 1, d)) {
        throw Error(ErrorCode::InvalidParameter, "PCA target dimension " + std::to_string(p) + " exceeds min(n-1, d) = " +
                                                     std::to_string(std::min(n - 1, d)));
    }
    if (!x.allFinite()) throw Error(ErrorCode::NonFinite, "PCA input contains NaN or Inf");

    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw Error(ErrorCode::RankTooLow, "covariance eigendecomposition failed");

    // Eigen returns ascending eigenvalues.
    PcaResult out;
    out.components.resize(d, p);
    out.eigenvalues.resize(p);
    const double top = std::max(eig.eigenvalues()(d - 1), 0.0);
    const double rank_tol = 1e-12 * std::max(top, 1e-300);
    for (Index c = 0; c < p; ++c) {
        const Index src = d - 1 - c;
        Eigen::VectorXd v = eig.eigenvectors().col(src);
        const double lambda = eig.eigenvalues()(src);
        Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        if (!(lambda > rank_tol)) {
            out.rank_deficient = true;
            v.setZero();
        }
        out.components.col(c) = v;
        out.eigenvalues(c) = std::max(lambda, 0.0);
    }
    out.embedding = centered * out.components;
    return out;
}

inline Matrix pca_init(const Eigen::Ref<const Matrix>& x, Index p) { return pca_fit(x, p).embedding; }

/// Reads an embedding produced by an external tool: plain reals, row i
/// corresponding to dataset row i.
inline Matrix load_external_embedding(const std::string& path, Index expected_n) {
    Matrix m = io::read_matrix(path);
    if (m.rows() != expected_n) {
        throw Error(ErrorCode::RowCountMismatch, path + ": " + std::to_string(m.rows()) + " rows, expected " +
                                                     std::to_string(expected_n));
    }
    if (!m.allFinite()) throw Error(ErrorCode::NonFinite, path + ": embedding contains NaN or Inf");
    return m;
}

}  // namespace qqe
