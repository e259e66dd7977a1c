#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

#include "qqe/knn.hpp"
#include "qqe/types.hpp"

namespace qqe {

// ---------------------------------------------------------------------------
// Kernels

struct KernelSpec {
    enum class Kind { Rbf, Linear };
    Kind kind = Kind::Rbf;
    /// RBF bandwidth; unset means the median heuristic.
    std::optional<double> bandwidth;

    static KernelSpec rbf(std::optional<double> h = std::nullopt) { return {Kind::Rbf, h}; }
    static KernelSpec linear() { return {Kind::Linear, std::nullopt}; }
};

/// Median of all pairwise Euclidean distances (average of the two middle
/// values for an even count).
inline double median_pairwise_distance(const Eigen::Ref<const Matrix>& points) {
    const Index n = points.rows();
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) dist.push_back((points.row(i) - points.row(j)).norm());
    }
    if (dist.empty()) return 0.0;
    const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    if (dist.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(dist.begin(), mid);
    return 0.5 * (lower + upper);
}

namespace detail {

inline Matrix stack_rows(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
    Matrix out(a.rows() + b.rows(), a.cols());
    out << a, b;
    return out;
}

inline double resolve_bandwidth(const KernelSpec& k, const Eigen::Ref<const Matrix>& pooled) {
    if (k.bandwidth) {
        if (!(*k.bandwidth > 0.0)) throw Error(ErrorCode::InvalidParameter, "RBF bandwidth must be positive");
        return *k.bandwidth;
    }
    return std::max(median_pairwise_distance(pooled), kDefaultEpsilon);
}

}  // namespace detail

/// Kernel matrix K(i, j) = k(a_i, b_j). RBF: exp(-|a - b|^2 / (2 h^2)).
inline Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                                     KernelSpec::Kind kind, double bandwidth) {
    if (kind == KernelSpec::Kind::Linear) return a * b.transpose();
    Eigen::MatrixXd k(a.rows(), b.rows());
    const double denom = 2.0 * bandwidth * bandwidth;
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < b.rows(); ++j) k(i, j) = std::exp(-(a.row(i) - b.row(j)).squaredNorm() / denom);
    }
    return k;
}

// ---------------------------------------------------------------------------
// Kernel density estimate

/// Gaussian product-kernel KDE with per-dimension Scott bandwidths
/// h_l = sd_l * n^(-1/(d+4)), each floored at eps.
class Kde {
public:
    explicit Kde(Matrix sample, double eps = kDefaultEpsilon) : sample_(std::move(sample)) {
        const Index n = sample_.rows();
        const Index d = sample_.cols();
        if (n < 2) throw Error(ErrorCode::TooFewPoints, "KDE needs at least 2 points");
        const double factor = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
        const Eigen::RowVectorXd mean = sample_.colwise().mean();
        bandwidth_.resize(d);
        for (Index l = 0; l < d; ++l) {
            const double var = (sample_.col(l).array() - mean(l)).square().sum() / static_cast<double>(n - 1);
            bandwidth_(l) = std::max(std::sqrt(var) * factor, eps);
        }
        log_norm_ = -static_cast<double>(d) * 0.5 * std::log(2.0 * std::numbers::pi) - bandwidth_.array().log().sum();
    }

    const Vector& bandwidth() const { return bandwidth_; }

    double density(const Eigen::Ref<const Eigen::RowVectorXd>& query) const {
        double total = 0.0;
        for (Index i = 0; i < sample_.rows(); ++i) {
            const double z2 = ((query - sample_.row(i)).array() / bandwidth_.transpose().array()).square().sum();
            total += std::exp(log_norm_ - 0.5 * z2);
        }
        return total / static_cast<double>(sample_.rows());
    }

private:
    Matrix sample_;
    Vector bandwidth_;
    double log_norm_ = 0.0;
};

inline double kde_density(const Eigen::Ref<const Matrix>& sample, const Eigen::Ref<const Eigen::RowVectorXd>& query) {
    return Kde(sample).density(query);
}

// ---------------------------------------------------------------------------
// Two-sample measures

enum class KlPairing {
    /// sum_i p(x_i) log(p(x_i) / q(y_i)), pairing row i of X with row i of Y.
    MatchedIndex,
    /// sum_i p(x_i) log(p(x_i) / q(x_i)), both densities at x_i.
    SamePoint,
};

/// Plug-in KL divergence between KDE estimates of X and Y. Both density
/// vectors are normalized to sum to one over the sample points; log
/// arguments are floored at eps.
inline double kl_divergence(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                            KlPairing pairing = KlPairing::MatchedIndex, double eps = kDefaultEpsilon) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "kl_divergence needs equally sized samples");
    }
    const Kde px(x), qy(y);
    const Index n = x.rows();
    Vector p(n), q(n);
    for (Index i = 0; i < n; ++i) {
        p(i) = px.density(x.row(i));
        q(i) = pairing == KlPairing::MatchedIndex ? qy.density(y.row(i)) : qy.density(x.row(i));
    }
    p /= p.sum();
    q /= q.sum();
    double kl = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double pi = std::max(p(i), eps);
        const double qi = std::max(q(i), eps);
        kl += p(i) * std::log(pi / qi);
    }
    return kl;
}

/// Biased MMD^2 estimate; RBF bandwidth from the pooled sample when unset.
inline double mmd_squared(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                          const KernelSpec& kernel = KernelSpec::rbf()) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "mmd_squared needs equally sized samples");
    }
    const double h = kernel.kind == KernelSpec::Kind::Rbf ? detail::resolve_bandwidth(kernel, detail::stack_rows(x, y)) : 0.0;
    const double n2 = static_cast<double>(x.rows()) * static_cast<double>(x.rows());
    const double kxx = kernel_matrix(x, x, kernel.kind, h).sum();
    const double kyy = kernel_matrix(y, y, kernel.kind, h).sum();
    const double kxy = kernel_matrix(x, y, kernel.kind, h).sum();
    return std::max(0.0, (kxx + kyy - 2.0 * kxy) / n2);
}

/// HSIC = tr(Kx H Ky H) / (n-1)^2 with H the centering matrix. With the
/// median heuristic each sample gets its own bandwidth.
inline double hsic(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                   const KernelSpec& kernel = KernelSpec::rbf()) {
    const Index n = x.rows();
    if (y.rows() != n) throw Error(ErrorCode::ShapeMismatch, "hsic needs samples of equal size");
    if (n < 2) throw Error(ErrorCode::TooFewPoints, "hsic needs at least 2 points");
    const bool rbf = kernel.kind == KernelSpec::Kind::Rbf;
    const Eigen::MatrixXd kx = kernel_matrix(x, x, kernel.kind, rbf ? detail::resolve_bandwidth(kernel, x) : 0.0);
    const Eigen::MatrixXd ky = kernel_matrix(y, y, kernel.kind, rbf ? detail::resolve_bandwidth(kernel, y) : 0.0);
    // tr(Kx H Ky H) = sum_ij (H Kx H)_ij (Ky)_ji; double-center Kx in place.
    Eigen::MatrixXd kxc = kx;
    const Eigen::RowVectorXd col_mean = kx.colwise().mean();
    const Eigen::VectorXd row_mean = kx.rowwise().mean();
    const double all_mean = kx.mean();
    kxc.rowwise() -= col_mean;
    kxc.colwise() -= row_mean;
    kxc.array() += all_mean;
    const double tr = (kxc.array() * ky.transpose().array()).sum();
    const double value = tr / (static_cast<double>(n - 1) * static_cast<double>(n - 1));
    return value < 0.0 && value > -1e-12 ? 0.0 : value;
}

/// Percentage of points with at least one same-label point among their k
/// nearest neighbors (self excluded), for each requested k.
inline std::map<int, double> recall_at_k(const Eigen::Ref<const Matrix>& points, const std::vector<int>& labels,
                                         const std::vector<int>& ks) {
    const Index n = points.rows();
    if (static_cast<Index>(labels.size()) != n) throw Error(ErrorCode::LabelLengthMismatch, "one label per point required");
    int kmax = 0;
    for (int k : ks) {
        if (k < 1) throw Error(ErrorCode::InvalidParameter, "recall k must be positive");
        if (k >= n) throw Error(ErrorCode::KTooLarge, "recall k=" + std::to_string(k) + " must be smaller than n");
        kmax = std::max(kmax, k);
    }
    // first_hit[i] = rank (1-based) of the nearest same-label neighbor.
    std::vector<int> first_hit(static_cast<std::size_t>(n), kmax + 1);
    for (Index i = 0; i < n; ++i) {
        const auto nn = nearest_rows(points, i, kmax);
        for (int r = 0; r < kmax; ++r) {
            if (labels[static_cast<std::size_t>(nn[static_cast<std::size_t>(r)].second)] == labels[static_cast<std::size_t>(i)]) {
                first_hit[static_cast<std::size_t>(i)] = r + 1;
                break;
            }
        }
    }
    std::map<int, double> out;
    for (int k : ks) {
        const auto hits = std::count_if(first_hit.begin(), first_hit.end(), [k](int r) { return r <= k; });
        out[k] = 100.0 * static_cast<double>(hits) / static_cast<double>(n);
    }
    return out;
}

}  // namespace qqe
