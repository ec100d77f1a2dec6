#pragma once

#include <stdexcept>

#include "qib/matrix.hpp"
#include "qib/rng.hpp"

namespace qib {

namespace detail {

inline ComplexMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    ComplexMatrix g(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) g(i, j) = cxd(rng.gaussian(), rng.gaussian());
    return g;
}

// Modified Gram-Schmidt with one reorthogonalization pass. Normalization by
// the positive column norm fixes the phases of the triangular factor, which
// is what makes QR of a Gaussian matrix Haar distributed.
inline void orthonormalize_columns(ComplexMatrix& m, Rng& rng) {
    const std::size_t rows = m.rows(), cols = m.cols();
    for (std::size_t j = 0; j < cols; ++j) {
        for (int attempt = 0;; ++attempt) {
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t i = 0; i < j; ++i) {
                    cxd proj = 0.0;
                    for (std::size_t r = 0; r < rows; ++r) proj += std::conj(m(r, i)) * m(r, j);
                    for (std::size_t r = 0; r < rows; ++r) m(r, j) -= proj * m(r, i);
                }
            }
            double norm2 = 0.0;
            for (std::size_t r = 0; r < rows; ++r) norm2 += std::norm(m(r, j));
            const double norm = std::sqrt(norm2);
            if (norm > 1e-8) {
                for (std::size_t r = 0; r < rows; ++r) m(r, j) *= (1.0 / norm);
                break;
            }
            // degenerate column (measure zero for Gaussian input): redraw
            if (attempt > 8) throw std::runtime_error("orthonormalize_columns: persistent degeneracy");
            for (std::size_t r = 0; r < rows; ++r) m(r, j) = cxd(rng.gaussian(), rng.gaussian());
        }
    }
}

} // namespace detail

// Haar-distributed isometry V (d_out x d_in) with V^dagger V = I, obtained by
// orthonormalizing a standard complex Gaussian matrix.
inline ComplexMatrix random_isometry(std::size_t d_in, std::size_t d_out, Rng& rng) {
    if (d_out < d_in) throw std::invalid_argument("random_isometry: d_out must be >= d_in");
    ComplexMatrix g = detail::gaussian_matrix(d_out, d_in, rng);
    detail::orthonormalize_columns(g, rng);
    return g;
}

} // namespace qib
