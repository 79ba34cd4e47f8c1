#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "fdkit/errors.hpp"
#include "fdkit/systems.hpp"

namespace fdkit {

inline double spectral_abscissa(const MatrixXd& A) {
    Eigen::EigenSolver<MatrixXd> es(A, false);
    return es.eigenvalues().real().maxCoeff();
}

/// Symmetric principal square root of a symmetric positive (semi)definite
/// matrix, via eigendecomposition.
inline MatrixXd sym_sqrt(const MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    if (es.eigenvalues().minCoeff() < -1e-12)
        throw Error("matrix not positive semidefinite in sym_sqrt");
    VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// Symmetric principal inverse square root.
inline MatrixXd sym_inv_sqrt(const MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw Error("matrix not positive definite in sym_inv_sqrt");
    VectorXd d = es.eigenvalues().cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// Solve A X + X A^T = W by Kronecker vectorization (desk-scale n).
inline MatrixXd solve_lyapunov(const MatrixXd& A, const MatrixXd& W) {
    const Eigen::Index n = A.rows();
    MatrixXd K = MatrixXd::Zero(n * n, n * n);
    // vec(AX) = (I (x) A) vec(X), vec(X A^T) = (A (x) I) vec(X)
    for (Eigen::Index i = 0; i < n; ++i)
        K.block(i * n, i * n, n, n) += A;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index r = 0; r < n; ++r)
                K(j * n + r, i * n + r) += A(j, i);
    VectorXd w(n * n);
    for (Eigen::Index j = 0; j < n; ++j)
        w.segment(j * n, n) = W.col(j);
    VectorXd xv = K.fullPivLu().solve(w);
    MatrixXd X(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        X.col(j) = xv.segment(j * n, n);
    return 0.5 * (X + X.transpose().eval());
}

/// Stabilizing gain by eigenvalue shifting: solve
/// (A + beta I) Z + Z (A + beta I)^T = 2 B B^T and take K = B^T Z^+.
inline MatrixXd stabilizing_gain(const MatrixXd& A, const MatrixXd& B) {
    const double alpha = spectral_abscissa(A);
    if (alpha < 0.0)
        return MatrixXd::Zero(B.cols(), A.rows()); // already Hurwitz
    const double beta = alpha + 0.5 + A.norm();
    const MatrixXd As = A + beta * MatrixXd::Identity(A.rows(), A.cols());
    const MatrixXd Z = solve_lyapunov(As, (2.0 * B * B.transpose()).eval());
    MatrixXd K = Z.completeOrthogonalDecomposition().solve(B).transpose();
    if (spectral_abscissa(A - B * K) >= 0.0)
        throw RiccatiNoStabilizingSolution("eigenvalue-shift initialization failed");
    return K;
}

/// Stabilizing solution of A^T X + X A - X B R^{-1} B^T X + Q = 0 by
/// Kleinman-Newton iteration: each step solves the closed-loop Lyapunov
/// equation for the current gain and re-linearizes.
inline MatrixXd solve_care_kleinman(const MatrixXd& A, const MatrixXd& B,
                                    const MatrixXd& Q, const MatrixXd& R,
                                    int max_iter = 100) {
    const Eigen::Index n = A.rows();
    const MatrixXd Rinv = R.inverse();
    MatrixXd K = stabilizing_gain(A, B);
    MatrixXd X = MatrixXd::Zero(n, n);
    auto residual = [&](const MatrixXd& Xc) {
        return (A.transpose() * Xc + Xc * A - Xc * B * Rinv * B.transpose() * Xc + Q).eval();
    };
    for (int it = 0; it < max_iter; ++it) {
        const MatrixXd Acl = A - B * K;
        // Acl^T X + X Acl = -(Q + K^T R K)
        const MatrixXd rhs = -(Q + K.transpose() * R * K);
        X = solve_lyapunov(Acl.transpose().eval(), rhs);
        K = Rinv * B.transpose() * X;
        const double res = residual(X).norm();
        if (res < 1e-12 * (1.0 + X.norm())) {
            if (spectral_abscissa(A - B * K) >= 0.0)
                throw RiccatiNoStabilizingSolution("converged X is not stabilizing");
            return X;
        }
    }
    throw RiccatiNotConverged("after " + std::to_string(max_iter) + " iterations");
}

/// Design data for the normalized factor pair of an LTI plant.
struct LtiFactorization {
    MatrixXd X;  // control-side Riccati solution
    MatrixXd Y;  // filter-side Riccati solution
    MatrixXd F;  // state feedback, A + B F Hurwitz
    MatrixXd V0; // input pre-filter, (I + D^T D)^{-1/2}
    MatrixXd L0; // observer gain, A - L0 C Hurwitz
    MatrixXd W0; // output post-filter, (I + D D^T)^{-1/2}
};

/// Control-side normalization: X solves
///   (A - B S^{-1} D^T C)^T X + X (A - B S^{-1} D^T C) - X B S^{-1} B^T X + C^T R^{-1} C = 0
/// with S = I + D^T D, R = I + D D^T; F = -S^{-1} (B^T X + D^T C), V0 = S^{-1/2}.
inline void lti_normalized_rcf(const LtiSystem& sys, LtiFactorization& fac) {
    const MatrixXd S = MatrixXd::Identity(sys.p(), sys.p()) + sys.D.transpose() * sys.D;
    const MatrixXd R = MatrixXd::Identity(sys.m(), sys.m()) + sys.D * sys.D.transpose();
    const MatrixXd Sinv = S.inverse();
    const MatrixXd Ahat = sys.A - sys.B * Sinv * sys.D.transpose() * sys.C;
    const MatrixXd Q = sys.C.transpose() * R.inverse() * sys.C;
    fac.X = solve_care_kleinman(Ahat, sys.B, Q, S);
    fac.F = -Sinv * (sys.B.transpose() * fac.X + sys.D.transpose() * sys.C);
    fac.V0 = sym_inv_sqrt(S);
    if (spectral_abscissa(sys.A + sys.B * fac.F) >= 0.0)
        throw RiccatiNoStabilizingSolution("A + B F not Hurwitz");
}

/// Filter-side normalization, computed as the control-side problem of the
/// transposed plant: Y >= 0 stabilizing, L0 = (Y C^T + B D^T) R^{-1}, W0 = R^{-1/2}.
inline void lti_normalized_lcf(const LtiSystem& sys, LtiFactorization& fac) {
    LtiSystem dual = LtiSystem::make(sys.A.transpose(), sys.C.transpose(),
                                     sys.B.transpose(), sys.D.transpose());
    LtiFactorization dual_fac;
    lti_normalized_rcf(dual, dual_fac);
    fac.Y = dual_fac.X;
    const MatrixXd R = MatrixXd::Identity(sys.m(), sys.m()) + sys.D * sys.D.transpose();
    fac.L0 = (fac.Y * sys.C.transpose() + sys.B * sys.D.transpose()) * R.inverse();
    fac.W0 = sym_inv_sqrt(R);
    if (spectral_abscissa(sys.A - fac.L0 * sys.C) >= 0.0)
        throw RiccatiNoStabilizingSolution("A - L0 C not Hurwitz");
}

inline LtiFactorization lti_normalize(const LtiSystem& sys) {
    LtiFactorization fac;
    lti_normalized_rcf(sys, fac);
    lti_normalized_lcf(sys, fac);
    return fac;
}

/// Frobenius residual of the control-side Riccati equation at X.
inline double care_residual(const LtiSystem& sys, const MatrixXd& X) {
    const MatrixXd S = MatrixXd::Identity(sys.p(), sys.p()) + sys.D.transpose() * sys.D;
    const MatrixXd R = MatrixXd::Identity(sys.m(), sys.m()) + sys.D * sys.D.transpose();
    const MatrixXd Ahat = sys.A - sys.B * S.inverse() * sys.D.transpose() * sys.C;
    return (Ahat.transpose() * X + X * Ahat -
            X * sys.B * S.inverse() * sys.B.transpose() * X +
            sys.C.transpose() * R.inverse() * sys.C).norm();
}

} // namespace fdkit
