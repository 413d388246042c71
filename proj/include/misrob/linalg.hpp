#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "misrob/errors.hpp"

namespace misrob {

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& M) {
    return 0.5 * (M + M.transpose());
}

// Symmetric inverse square root via eigendecomposition.
inline Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& M, double rel_floor = 1e-12) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(M));
    const Eigen::VectorXd ev = es.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    Eigen::VectorXd inv(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] <= rel_floor * top)
            throw SingularMatrixError("sym_inv_sqrt: matrix not positive definite");
        inv[i] = 1.0 / std::sqrt(ev[i]);
    }
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

inline Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(M));
    Eigen::VectorXd r = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * r.asDiagonal() * es.eigenvectors().transpose();
}

// Projection onto the PSD cone: eigenvalues clipped at zero.
inline Eigen::MatrixXd psd_project(const Eigen::MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(M));
    Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
}

inline double min_eigenvalue(const Eigen::MatrixXd& M) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(symmetrize(M)).eigenvalues().minCoeff();
}

inline double op_norm(const Eigen::MatrixXd& M) {
    const Eigen::VectorXd ev =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(symmetrize(M)).eigenvalues();
    return ev.cwiseAbs().maxCoeff();
}

}  // namespace misrob
