#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qib/channels.hpp"
#include "qib/states.hpp"

namespace qib {

// Two-qubit test states used throughout the test and CLI layer. Basis order
// |x y> with x slowest: 0 = up-up, 1 = up-down, 2 = down-up, 3 = down-down.

// Classical (unentangled) state: diagonal with weights
// p1 |uu>, p2 |du>, p3 |ud>, p4 |dd>.
inline BipartiteState classical_state(double p1, double p2, double p3, double p4) {
    const double sum = p1 + p2 + p3 + p4;
    if (p1 < 0 || p2 < 0 || p3 < 0 || p4 < 0 || std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("classical_state: weights must be nonnegative and sum to 1");
    ComplexMatrix m(4, 4);
    m(0, 0) = p1; // up, up
    m(2, 2) = p2; // down, up
    m(1, 1) = p3; // up, down
    m(3, 3) = p4; // down, down
    return BipartiteState(std::move(m), SubsystemDims{{Label::x, 2}, {Label::y, 2}});
}

// Entangled state 1/2 |uu><uu| + 1/4 |uu><dd| + 1/4 |dd><uu| + 1/2 |dd><dd|,
// equivalently a Bell state mixed with classical correlations.
inline BipartiteState bell_mix_state() {
    ComplexMatrix m(4, 4);
    m(0, 0) = 0.5;
    m(0, 3) = 0.25;
    m(3, 0) = 0.25;
    m(3, 3) = 0.5;
    return BipartiteState(std::move(m), SubsystemDims{{Label::x, 2}, {Label::y, 2}});
}

// p1 |v><v| + p2 |w><w| with v = (|uu> + |dd>)/sqrt(2), w = |dd>.
inline BipartiteState vw_mix_state(double p1, double p2) {
    if (p1 < 0 || p2 < 0 || std::abs(p1 + p2 - 1.0) > 1e-9)
        throw std::invalid_argument("vw_mix_state: weights must be nonnegative and sum to 1");
    ComplexMatrix m(4, 4);
    m(0, 0) = 0.5 * p1;
    m(0, 3) = 0.5 * p1;
    m(3, 0) = 0.5 * p1;
    m(3, 3) = 0.5 * p1 + p2;
    return BipartiteState(std::move(m), SubsystemDims{{Label::x, 2}, {Label::y, 2}});
}

// The analytic benchmark channel rho -> (rho + Z rho Z)/2: kills off-diagonal
// elements in the computational basis. Kraus pair {I/sqrt2, Z/sqrt2}.
inline KrausChannel dephasing_channel() {
    const double r = 1.0 / std::sqrt(2.0);
    ComplexMatrix k1(2, 2), k2(2, 2);
    k1(0, 0) = r;
    k1(1, 1) = -r;
    k2(0, 0) = r;
    k2(1, 1) = r;
    return KrausChannel{2, 2, {k1, k2}};
}

// rho -> sigma Tr(rho) for a fixed single-system state sigma.
inline KrausChannel replacement_channel(const DensityMatrix& sigma, std::size_t d_in) {
    const EigenDecomposition eig = hermitian_eig(sigma.matrix());
    KrausChannel n;
    n.d_in = d_in;
    n.d_out = sigma.dim();
    for (std::size_t k = 0; k < eig.eigenvalues.size(); ++k) {
        const double lam = std::max(eig.eigenvalues[k], 0.0);
        if (lam == 0.0) continue;
        for (std::size_t i = 0; i < d_in; ++i) {
            ComplexMatrix op(n.d_out, d_in); // sqrt(lam) |phi_k><i|
            for (std::size_t a = 0; a < n.d_out; ++a) op(a, i) = std::sqrt(lam) * eig.eigenvectors(a, k);
            n.kraus.push_back(std::move(op));
        }
    }
    return n;
}

} // namespace qib
