#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <span>

#include "ttscale/errors.hpp"
#include "ttscale/verifiers.hpp"

// Fréchet distance between Gaussians fitted to feature sets, the standard
// distribution-level video/image quality measure:
//
//   d^2 = |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2})
//
// tr((S_a S_b)^{1/2}) is computed through the symmetric product
// S_a^{1/2} S_b S_a^{1/2}, whose eigenvalues are real; tiny negative ones
// from roundoff are clamped to zero. See Dowson & Landau (1982).

namespace ttscale {

inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    Eigen::VectorXd vals = eig.eigenvalues();
    for (int i = 0; i < vals.size(); ++i) vals[i] = vals[i] > 0.0 ? std::sqrt(vals[i]) : 0.0;
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

inline double frechet_gaussian(const Eigen::VectorXd& mu_a, const Eigen::MatrixXd& cov_a,
                               const Eigen::VectorXd& mu_b, const Eigen::MatrixXd& cov_b) {
    if (mu_a.size() != mu_b.size() || cov_a.rows() != cov_b.rows() ||
        cov_a.rows() != mu_a.size() || cov_a.rows() != cov_a.cols() ||
        cov_b.rows() != cov_b.cols())
        throw ArityError("frechet_gaussian: mismatched dimensions");
    Eigen::MatrixXd sqrt_a = psd_sqrt(cov_a);
    Eigen::MatrixXd inner = sqrt_a * cov_b * sqrt_a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner);
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    double tr_sqrt = 0.0;
    for (int i = 0; i < eig.eigenvalues().size(); ++i) {
        double v = eig.eigenvalues()[i];
        if (v > 0.0) tr_sqrt += std::sqrt(v);
    }
    double d2 = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * tr_sqrt;
    return d2 > 0.0 ? d2 : 0.0;  // roundoff can push the exact zero negative
}

struct GaussianMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Sample mean and unbiased covariance. Sets smaller than dim+1 cannot be full
// rank, so those get a +1e-6 I ridge.
inline GaussianMoments fit_moments(std::span<const FrameFeature> samples) {
    if (samples.empty()) throw ArityError("fit_moments: empty feature set");
    const auto dim = static_cast<Eigen::Index>(samples.front().size());
    for (const FrameFeature& s : samples)
        if (static_cast<Eigen::Index>(s.size()) != dim)
            throw ArityError("fit_moments: inconsistent feature dimensions");
    GaussianMoments g;
    g.mean = Eigen::VectorXd::Zero(dim);
    for (const FrameFeature& s : samples)
        g.mean += Eigen::Map<const Eigen::VectorXd>(s.data(), dim);
    g.mean /= static_cast<double>(samples.size());
    g.cov = Eigen::MatrixXd::Zero(dim, dim);
    if (samples.size() > 1) {
        for (const FrameFeature& s : samples) {
            Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(s.data(), dim) - g.mean;
            g.cov += d * d.transpose();
        }
        g.cov /= static_cast<double>(samples.size() - 1);
    }
    if (samples.size() < static_cast<size_t>(dim) + 1)
        g.cov += 1e-6 * Eigen::MatrixXd::Identity(dim, dim);
    return g;
}

inline double frechet_distance(std::span<const FrameFeature> a, std::span<const FrameFeature> b) {
    GaussianMoments ga = fit_moments(a);
    GaussianMoments gb = fit_moments(b);
    return frechet_gaussian(ga.mean, ga.cov, gb.mean, gb.cov);
}

}  // namespace ttscale
