// Small dense linear algebra over jet-valued scalars.
//
// Jet matrices are inverted by Gauss-Jordan elimination with pivoting on the
// value part.  Least-squares systems with jet entries are solved degree by
// degree: one SVD of the value-part matrix provides the pseudo-inverse, and
// higher coefficients follow from the Leibniz expansion of A*x = b.

#pragma once

#include "supiverify/jet.hpp"

#include <Eigen/Dense>

#include <vector>

namespace sv {

using JetMatrix = std::vector<std::vector<Jet>>;

inline JetMatrix jet_matrix_inverse(const JetMatrix& a) {
    const std::size_t n = a.size();
    if (n == 0 || a[0].empty()) throw error("jet_matrix_inverse: empty matrix");
    const JetSpace& sp = a[0][0].space();
    JetMatrix w = a;
    JetMatrix inv(n, std::vector<Jet>(n, Jet(sp)));
    for (std::size_t i = 0; i < n; ++i)
        inv[i][i] = Jet::constant(sp, Cplx(1.0));
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(w[col][col].value());
        for (std::size_t r = col + 1; r < n; ++r) {
            double v = std::abs(w[r][col].value());
            if (v > best) { best = v; piv = r; }
        }
        if (best < jet_config().division_floor)
            throw error("jet_matrix_inverse: matrix is singular at the base point");
        std::swap(w[col], w[piv]);
        std::swap(inv[col], inv[piv]);
        Jet d = w[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            w[col][j] = w[col][j] / d;
            inv[col][j] = inv[col][j] / d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            Jet f = w[r][col];
            if (f.max_abs() == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                w[r][j] -= f * w[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

inline Jet jet_matrix_det(const JetMatrix& a) {
    const std::size_t n = a.size();
    if (n == 0) throw error("jet_matrix_det: empty matrix");
    const JetSpace& sp = a[0][0].space();
    if (n == 1) return a[0][0];
    Jet det(sp);
    for (std::size_t j = 0; j < n; ++j) {
        JetMatrix minor(n - 1, std::vector<Jet>(n - 1, Jet(sp)));
        for (std::size_t r = 1; r < n; ++r) {
            std::size_t cc = 0;
            for (std::size_t c = 0; c < n; ++c) {
                if (c == j) continue;
                minor[r - 1][cc++] = a[r][c];
            }
        }
        Jet term = a[0][j] * jet_matrix_det(minor);
        if (j % 2 == 0) det += term;
        else det -= term;
    }
    return det;
}

// Least squares over jet scalars.  All entries must live on one jet space.
struct JetLeastSquares {
    std::vector<Jet> solution;
    double value_residual = 0.0;   // residual of the value-level solve
    double condition = 0.0;        // sigma_max / sigma_min over the kept rank
    int rank = 0;
    int columns = 0;
    bool unique = false;           // full column rank at the value level
};

inline JetLeastSquares jet_least_squares(const std::vector<std::vector<Jet>>& a,
                                         const std::vector<Jet>& b,
                                         double rank_tol = 1e-8) {
    const std::size_t rows = a.size();
    if (rows == 0 || b.size() != rows)
        throw error("jet_least_squares: shape mismatch");
    const std::size_t cols = a[0].size();
    const JetSpace& sp = a[0][0].space();
    const int nc = sp.size();

    // per-degree coefficient matrices
    std::vector<Eigen::MatrixXcd> ak(static_cast<std::size_t>(nc),
                                     Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows),
                                                            static_cast<Eigen::Index>(cols)));
    std::vector<Eigen::VectorXcd> bk(static_cast<std::size_t>(nc),
                                     Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(rows)));
    for (std::size_t r = 0; r < rows; ++r) {
        if (a[r].size() != cols) throw error("jet_least_squares: ragged matrix");
        for (std::size_t c = 0; c < cols; ++c)
            for (int k = 0; k < nc; ++k)
                ak[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(r),
                                                static_cast<Eigen::Index>(c)) =
                    a[r][c].coeff(sp.exponents(k));
        for (int k = 0; k < nc; ++k)
            bk[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(r)) =
                b[r].coeff(sp.exponents(k));
    }

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ak[0], Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sing = svd.singularValues();
    double smax = sing.size() ? sing(0) : 0.0;
    int rank = 0;
    for (Eigen::Index k = 0; k < sing.size(); ++k)
        if (sing(k) > rank_tol * smax) ++rank;
    if (rank == 0) throw error("jet_least_squares: zero matrix at the base point");
    double smin = sing(rank - 1);

    auto pinv_apply = [&](const Eigen::VectorXcd& v) {
        Eigen::VectorXcd uv = svd.matrixU().adjoint() * v;
        for (Eigen::Index k = 0; k < uv.size(); ++k)
            uv(k) = (k < rank) ? uv(k) / sing(k) : Cplx(0.0);
        return Eigen::VectorXcd(svd.matrixV() * uv);
    };

    // degree cascade: ak[0] x^(alpha) = b^(alpha) - sum_{0<beta<=alpha} ak[beta] x^(alpha-beta)
    std::vector<Eigen::VectorXcd> xk(static_cast<std::size_t>(nc));
    for (int k = 0; k < nc; ++k) {
        const MultiIndex& alpha = sp.exponents(k);
        Eigen::VectorXcd rhs = bk[static_cast<std::size_t>(k)];
        for (int j = 1; j < nc; ++j) {
            const MultiIndex& beta = sp.exponents(j);
            MultiIndex gamma{0, 0, 0, 0};
            bool ok = true;
            for (int d = 0; d < kMaxDim; ++d) {
                if (beta[d] > alpha[d]) { ok = false; break; }
                gamma[d] = static_cast<std::uint8_t>(alpha[d] - beta[d]);
            }
            if (!ok) continue;
            int l = sp.index_of(gamma);
            rhs -= ak[static_cast<std::size_t>(j)] * xk[static_cast<std::size_t>(l)];
        }
        xk[static_cast<std::size_t>(k)] = pinv_apply(rhs);
    }

    JetLeastSquares out;
    out.columns = static_cast<int>(cols);
    out.rank = rank;
    out.unique = (rank == static_cast<int>(cols));
    out.condition = smax / smin;
    Eigen::VectorXcd r0 = ak[0] * xk[0] - bk[0];
    out.value_residual = r0.cwiseAbs().maxCoeff();
    out.solution.assign(cols, Jet(sp));
    for (std::size_t c = 0; c < cols; ++c)
        for (int k = 0; k < nc; ++k)
            out.solution[c].coeff(k) = xk[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(c));
    return out;
}

} // namespace sv
