#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "qib/errors.hpp"
#include "qib/matrix.hpp"

namespace qib {

inline constexpr double kHermTol = 1e-12;   // max-norm Hermiticity contract
inline constexpr double kRankTol = 1e-12;   // relative support cutoff for matrix functions

struct EigenDecomposition {
    std::vector<double> eigenvalues; // ascending
    ComplexMatrix eigenvectors;      // columns, unitary
};

namespace detail {

// Cyclic Jacobi for complex Hermitian matrices. Sweeps row pairs until the
// off-diagonal Frobenius mass drops below 1e-14 * ||H||_F. Plenty at the
// dimensions this project uses (<= ~32).
inline void jacobi_hermitian(ComplexMatrix& a, ComplexMatrix* v) {
    const std::size_t n = a.rows();
    if (v) *v = ComplexMatrix::identity(n);
    if (n == 1) { a(0, 0) = a(0, 0).real(); return; }

    const double norm = a.frobenius_norm();
    if (norm == 0.0) return;
    const double stop = 1e-14 * norm;

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off2 = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off2 += std::norm(a(p, q));
        if (std::sqrt(2.0 * off2) <= stop) return;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cxd z = a(p, q);
                const double az = std::abs(z);
                if (az == 0.0) continue;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                if (az <= 1e-18 * (std::abs(app) + std::abs(aqq) + 1e-300)) {
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    continue;
                }

                // Rotation U: U_pp = c, U_pq = s e^{i phi}, U_qp = -s e^{-i phi},
                // U_qq = c with phi = arg(A_pq); annihilates A'_pq.
                const cxd phase = z / az;
                const double tau = (aqq - app) / (2.0 * az);
                const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                              : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const cxd se_pos = s * phase;            // s e^{+i phi}
                const cxd se_neg = s * std::conj(phase); // s e^{-i phi}

                // A <- A U (columns p, q)
                for (std::size_t k = 0; k < n; ++k) {
                    const cxd akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - se_neg * akq;
                    a(k, q) = se_pos * akp + c * akq;
                }
                // A <- U^dagger A (rows p, q)
                for (std::size_t k = 0; k < n; ++k) {
                    const cxd apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - se_pos * aqk;
                    a(q, k) = se_neg * apk + c * aqk;
                }
                // Annihilated entries and diagonals, set exactly
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = app - t * az;
                a(q, q) = aqq + t * az;

                if (v) {
                    for (std::size_t k = 0; k < n; ++k) {
                        const cxd vkp = (*v)(k, p), vkq = (*v)(k, q);
                        (*v)(k, p) = c * vkp - se_neg * vkq;
                        (*v)(k, q) = se_pos * vkp + c * vkq;
                    }
                }
            }
        }
    }
    throw std::runtime_error("jacobi_hermitian: no convergence within sweep budget");
}

inline void require_hermitian(const ComplexMatrix& h, const char* op) {
    if (!h.is_square())
        throw ContractViolationError(std::string(op) + ": matrix not square");
    if (h.hermiticity_defect() > kHermTol)
        throw ContractViolationError(std::string(op) + ": input not Hermitian within tolerance");
}

} // namespace detail

inline EigenDecomposition hermitian_eig(const ComplexMatrix& h) {
    detail::require_hermitian(h, "hermitian_eig");
    ComplexMatrix a = h;
    ComplexMatrix v;
    detail::jacobi_hermitian(a, &v);

    const std::size_t n = h.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = ComplexMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]).real();
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
    }
    return out;
}

// Eigenvalues only (ascending); skips accumulating the eigenvector basis.
inline std::vector<double> hermitian_eigenvalues(const ComplexMatrix& h) {
    detail::require_hermitian(h, "hermitian_eigenvalues");
    ComplexMatrix a = h;
    detail::jacobi_hermitian(a, nullptr);
    std::vector<double> ev(h.rows());
    for (std::size_t i = 0; i < ev.size(); ++i) ev[i] = a(i, i).real();
    std::sort(ev.begin(), ev.end());
    return ev;
}

// f(H) by spectral calculus. With support_only, eigenvalues within
// kRankTol * max|eigenvalue| of zero map to 0 instead of f(0); this is the
// 0 log 0 = 0 convention and the pseudo-inverse convention in one place.
inline ComplexMatrix matrix_func(const ComplexMatrix& h, const std::function<double(double)>& f,
                                 bool support_only = false) {
    const EigenDecomposition eig = hermitian_eig(h);
    double lam_max = 0.0;
    for (double lam : eig.eigenvalues) lam_max = std::max(lam_max, std::abs(lam));
    const double cutoff = kRankTol * lam_max;

    const std::size_t n = h.rows();
    std::vector<double> flam(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double lam = eig.eigenvalues[i];
        flam[i] = (support_only && std::abs(lam) <= cutoff) ? 0.0 : f(lam);
    }

    ComplexMatrix out(n, n);
    const ComplexMatrix& v = eig.eigenvectors;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cxd s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += v(i, k) * flam[k] * std::conj(v(j, k));
            out(i, j) = s;
        }
    return out.hermitized();
}

inline ComplexMatrix matrix_log(const ComplexMatrix& h, bool support_only = false) {
    double lam_max = 0.0;
    const EigenDecomposition probe = hermitian_eig(h);
    for (double lam : probe.eigenvalues) lam_max = std::max(lam_max, std::abs(lam));
    const double cutoff = kRankTol * lam_max;
    for (double lam : probe.eigenvalues) {
        if (support_only) {
            if (lam < -cutoff)
                throw std::domain_error("matrix_log: negative eigenvalue beyond rank tolerance");
        } else if (lam <= 0.0) {
            throw std::domain_error("matrix_log: spectrum not strictly positive (use support_only)");
        }
    }
    return matrix_func(h, [](double x) { return std::log(x); }, support_only);
}

inline ComplexMatrix matrix_exp(const ComplexMatrix& h) {
    return matrix_func(h, [](double x) { return std::exp(x); });
}

// H^p on the support; negative eigenvalues beyond the rank tolerance are a
// domain error for non-integer p.
inline ComplexMatrix matrix_pow(const ComplexMatrix& h, double p, bool support_only = true) {
    const EigenDecomposition probe = hermitian_eig(h);
    double lam_max = 0.0;
    for (double lam : probe.eigenvalues) lam_max = std::max(lam_max, std::abs(lam));
    const double cutoff = kRankTol * lam_max;
    for (double lam : probe.eigenvalues)
        if (lam < -cutoff && p != std::floor(p))
            throw std::domain_error("matrix_pow: negative eigenvalue beyond rank tolerance");
    return matrix_func(h, [p](double x) { return std::pow(x, p); }, support_only);
}

// Sum of absolute eigenvalues.
inline double trace_norm(const ComplexMatrix& h) {
    detail::require_hermitian(h, "trace_norm");
    const auto ev = hermitian_eigenvalues(h);
    double s = 0.0;
    for (double lam : ev) s += std::abs(lam);
    return s;
}

} // namespace qib
