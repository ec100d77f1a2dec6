#pragma once

#include "qib/matrix.hpp"
#include "qib/rng.hpp"
#include "qib/states.hpp"
#include "qib/subsystems.hpp"

namespace qib::test {

inline ComplexMatrix random_hermitian(std::size_t d, Rng& rng) {
    ComplexMatrix g(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) g(i, j) = cxd(rng.gaussian(), rng.gaussian());
    return (g + g.dagger()).hermitized();
}

// Hilbert-Schmidt random state G G^dagger / Tr.
inline ComplexMatrix random_density(std::size_t d, Rng& rng) {
    ComplexMatrix g(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) g(i, j) = cxd(rng.gaussian(), rng.gaussian());
    ComplexMatrix rho = g * g.dagger();
    rho *= cxd(1.0 / rho.trace().real(), 0.0);
    return rho.hermitized();
}

inline DensityMatrix random_density_state(std::size_t d, Rng& rng, Label label = Label::x) {
    return DensityMatrix::unchecked(random_density(d, rng), SubsystemDims::single(label, d));
}

inline BipartiteState random_bipartite(std::size_t da, std::size_t db, Rng& rng,
                                       Label la = Label::x, Label lb = Label::y) {
    return BipartiteState::unchecked(random_density(da * db, rng),
                                     SubsystemDims{{la, da}, {lb, db}});
}

} // namespace qib::test
