#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qib/eigen.hpp"
#include "qib/errors.hpp"
#include "qib/matrix.hpp"
#include "qib/subsystems.hpp"

namespace qib {

inline constexpr double kEigNegTol = 1e-10;  // tolerated numerical negativity of states
inline constexpr double kTraceTol = 1e-10;

// Shannon entropy of a spectrum in nats, 0 log 0 = 0. Eigenvalues in
// [-kEigNegTol, 0] are treated as exact zeros; anything more negative is a
// real violation and throws, because silently clamping it would corrupt the
// rate curves downstream.
inline double entropy_of_spectrum(const std::vector<double>& lam) {
    double s = 0.0;
    for (double p : lam) {
        if (p < -kEigNegTol)
            throw InvalidStateError("entropy: eigenvalue below -1e-10, not a state");
        if (p > 0.0) s -= p * std::log(p);
    }
    return s;
}

class DensityMatrix {
public:
    DensityMatrix() = default;

    // Validating constructor: Hermiticity, unit trace, spectrum >= -1e-10.
    DensityMatrix(ComplexMatrix m, SubsystemDims dims) : mat_(std::move(m)), dims_(std::move(dims)) {
        check_shape();
        if (mat_.hermiticity_defect() > kHermTol)
            throw InvalidStateError("DensityMatrix: not Hermitian within 1e-12");
        if (std::abs(mat_.trace() - cxd(1.0, 0.0)) > kTraceTol)
            throw InvalidStateError("DensityMatrix: trace differs from 1 beyond 1e-10");
        for (double lam : hermitian_eigenvalues(mat_))
            if (lam < -kEigNegTol) throw InvalidStateError("DensityMatrix: negative eigenvalue beyond 1e-10");
    }

    // For states produced internally by construction-preserving operations
    // (channel images, partial traces of valid states).
    static DensityMatrix unchecked(ComplexMatrix m, SubsystemDims dims) {
        DensityMatrix d;
        d.mat_ = std::move(m);
        d.dims_ = std::move(dims);
        d.check_shape();
        return d;
    }

    const ComplexMatrix& matrix() const { return mat_; }
    const SubsystemDims& dims() const { return dims_; }
    std::size_t dim() const { return mat_.rows(); }

    DensityMatrix partial_traced(const std::vector<Label>& keep) const {
        return unchecked(partial_trace(mat_, dims_, keep), dims_.kept(keep));
    }

private:
    void check_shape() const {
        if (!dims_.consistent_with(mat_))
            throw std::invalid_argument("DensityMatrix: dims inconsistent with matrix");
    }

    ComplexMatrix mat_;
    SubsystemDims dims_;
};

// A density matrix with exactly two labeled factors. State validation (or
// not) is decided by how the underlying DensityMatrix was built.
class BipartiteState {
public:
    BipartiteState() = default;

    explicit BipartiteState(DensityMatrix state) : state_(std::move(state)) {
        if (state_.dims().count() != 2)
            throw std::invalid_argument("BipartiteState requires exactly two factors");
    }

    BipartiteState(ComplexMatrix m, SubsystemDims dims)
        : BipartiteState(DensityMatrix(std::move(m), std::move(dims))) {}

    static BipartiteState unchecked(ComplexMatrix m, SubsystemDims dims) {
        return BipartiteState(DensityMatrix::unchecked(std::move(m), std::move(dims)));
    }

    const DensityMatrix& state() const { return state_; }
    const ComplexMatrix& matrix() const { return state_.matrix(); }
    const SubsystemDims& dims() const { return state_.dims(); }
    Label label(std::size_t i) const { return state_.dims().factor(i).label; }

    DensityMatrix marginal(Label keep) const { return state_.partial_traced({keep}); }

private:
    DensityMatrix state_;
};

inline double von_neumann_entropy(const DensityMatrix& rho) {
    return entropy_of_spectrum(hermitian_eigenvalues(rho.matrix()));
}

// S(A) + S(B) - S(AB), in nats.
inline double mutual_information(const BipartiteState& rho) {
    const double s_a = von_neumann_entropy(rho.marginal(rho.label(0)));
    const double s_b = von_neumann_entropy(rho.marginal(rho.label(1)));
    const double s_ab = von_neumann_entropy(rho.state());
    return s_a + s_b - s_ab;
}

// Purification |w> = sum_k sqrt(lambda_k) |k>_ref (x) |v_k>, with {lambda_k, v_k}
// the eigensystem of rho. The reference space is padded to dim(rho) even for
// rank-deficient input, keeping the output square and the dims predictable.
inline BipartiteState purify(const DensityMatrix& rho, Label ref_label = Label::x_prime) {
    if (rho.dims().count() != 1)
        throw std::invalid_argument("purify expects a single-factor density matrix");
    const Label sys_label = rho.dims().factor(0).label;
    if (sys_label == ref_label) throw std::invalid_argument("purify: reference label collides");

    const EigenDecomposition eig = hermitian_eig(rho.matrix());
    const std::size_t d = rho.dim();

    std::vector<cxd> w(d * d, cxd(0.0, 0.0)); // index (k, i) -> k*d + i
    for (std::size_t k = 0; k < d; ++k) {
        const double lam = std::max(eig.eigenvalues[k], 0.0);
        if (lam == 0.0) continue;
        const double root = std::sqrt(lam);
        for (std::size_t i = 0; i < d; ++i) w[k * d + i] = root * eig.eigenvectors(i, k);
    }

    ComplexMatrix tau(d * d, d * d);
    for (std::size_t r = 0; r < d * d; ++r)
        for (std::size_t c = 0; c < d * d; ++c) tau(r, c) = w[r] * std::conj(w[c]);

    return BipartiteState::unchecked(std::move(tau),
                                     SubsystemDims{{ref_label, d}, {sys_label, d}});
}

} // namespace qib
