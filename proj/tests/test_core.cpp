#include <catch2/catch_amalgamated.hpp>

#include "qib/eigen.hpp"
#include "qib/matrix.hpp"
#include "qib/random.hpp"
#include "qib/rng.hpp"
#include "qib/subsystems.hpp"
#include "test_support.hpp"

using namespace qib;
using Catch::Matchers::WithinAbs;

namespace {

ComplexMatrix diag2(double a, double b) {
    ComplexMatrix m(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

ComplexMatrix reconstruct(const EigenDecomposition& eig) {
    const std::size_t n = eig.eigenvalues.size();
    ComplexMatrix lambda(n, n);
    for (std::size_t i = 0; i < n; ++i) lambda(i, i) = eig.eigenvalues[i];
    return eig.eigenvectors * lambda * eig.eigenvectors.dagger();
}

} // namespace

TEST_CASE("hermitian_eig on diagonal input", "[eigen]") {
    const auto eig = hermitian_eig(diag2(0.4, 0.6));
    REQUIRE_THAT(eig.eigenvalues[0], WithinAbs(0.4, 1e-14));
    REQUIRE_THAT(eig.eigenvalues[1], WithinAbs(0.6, 1e-14));
    REQUIRE(max_abs_diff(eig.eigenvectors, ComplexMatrix::identity(2)) < 1e-12);
}

TEST_CASE("hermitian_eig 2x2 off-diagonal", "[eigen]") {
    ComplexMatrix h(2, 2);
    h(0, 0) = 0.5;
    h(0, 1) = 0.25;
    h(1, 0) = 0.25;
    h(1, 1) = 0.5;
    const auto eig = hermitian_eig(h);
    // roots of the characteristic polynomial by hand
    REQUIRE_THAT(eig.eigenvalues[0], WithinAbs(0.25, 1e-12));
    REQUIRE_THAT(eig.eigenvalues[1], WithinAbs(0.75, 1e-12));
    REQUIRE(max_abs_diff(reconstruct(eig), h) < 1e-12);
}

TEST_CASE("hermitian_eig Pauli X", "[eigen]") {
    ComplexMatrix x(2, 2);
    x(0, 1) = 1.0;
    x(1, 0) = 1.0;
    const auto ev = hermitian_eigenvalues(x);
    REQUIRE_THAT(ev[0], WithinAbs(-1.0, 1e-12));
    REQUIRE_THAT(ev[1], WithinAbs(1.0, 1e-12));
}

TEST_CASE("hermitian_eig rejects non-Hermitian input", "[eigen]") {
    ComplexMatrix m(2, 2);
    m(0, 1) = 1.0;
    REQUIRE_THROWS_AS(hermitian_eig(m), ContractViolationError);
}

TEST_CASE("hermitian_eig random reconstruction", "[eigen][property]") {
    Rng rng(42);
    for (std::size_t d = 2; d <= 8; ++d) {
        for (int rep = 0; rep < 20; ++rep) {
            const ComplexMatrix h = test::random_hermitian(d, rng);
            const auto eig = hermitian_eig(h);
            for (std::size_t i = 1; i < d; ++i) REQUIRE(eig.eigenvalues[i] >= eig.eigenvalues[i - 1]);
            REQUIRE(max_abs_diff(reconstruct(eig), h) < 1e-10);
            REQUIRE(max_abs_diff(eig.eigenvectors.dagger() * eig.eigenvectors,
                                 ComplexMatrix::identity(d)) < 1e-10);
        }
    }
}

TEST_CASE("matrix_log and matrix_exp basics", "[eigen]") {
    REQUIRE(matrix_log(ComplexMatrix::identity(2)).max_abs() < 1e-14);
    REQUIRE(max_abs_diff(matrix_exp(ComplexMatrix(2, 2)), ComplexMatrix::identity(2)) < 1e-14);
    const ComplexMatrix l = matrix_log(diag2(0.4, 0.6));
    REQUIRE_THAT(l(0, 0).real(), WithinAbs(std::log(0.4), 1e-13));
    REQUIRE_THAT(l(1, 1).real(), WithinAbs(std::log(0.6), 1e-13));
    REQUIRE_THROWS_AS(matrix_log(diag2(1.0, -0.5)), std::domain_error);
}

TEST_CASE("matrix_exp inverts matrix_log on full-rank states", "[eigen][property]") {
    Rng rng(7);
    for (int rep = 0; rep < 25; ++rep) {
        const ComplexMatrix rho = test::random_density(4, rng);
        REQUIRE(max_abs_diff(matrix_exp(matrix_log(rho)), rho) < 1e-9);
    }
}

TEST_CASE("matrix_log support convention", "[eigen]") {
    const ComplexMatrix l = matrix_log(diag2(0.0, 1.0), true);
    REQUIRE(l.max_abs() < 1e-14); // log 1 = 0 on the support, 0 off it
    REQUIRE_THROWS_AS(matrix_log(diag2(-0.5, 1.0), true), std::domain_error);
}

TEST_CASE("kron basics", "[matrix]") {
    REQUIRE(max_abs_diff(kron(ComplexMatrix::identity(2), ComplexMatrix::identity(2)),
                         ComplexMatrix::identity(4)) == 0.0);

    ComplexMatrix d = kron(diag2(2.0, 3.0), ComplexMatrix::identity(2));
    for (std::size_t i = 0; i < 4; ++i)
        REQUIRE_THAT(d(i, i).real(), WithinAbs(i < 2 ? 2.0 : 3.0, 0.0));

    // |up><up| (x) |down><down| puts the single 1 at composite index (0,1)
    ComplexMatrix up(2, 2), down(2, 2);
    up(0, 0) = 1.0;
    down(1, 1) = 1.0;
    const ComplexMatrix p = kron(up, down);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            REQUIRE(p(i, j) == ((i == 1 && j == 1) ? cxd(1.0, 0.0) : cxd(0.0, 0.0)));
}

TEST_CASE("kron associativity and assembly-order reproducibility", "[matrix]") {
    Rng rng(3);
    const ComplexMatrix a = test::random_hermitian(2, rng);
    const ComplexMatrix b = test::random_hermitian(3, rng);
    const ComplexMatrix c = test::random_hermitian(2, rng);
    // the documented grouping is bit-reproducible
    REQUIRE(max_abs_diff(kron(kron(a, b), c), kron(kron(a, b), c)) == 0.0);
    // regrouping agrees mathematically (floating-point products may differ in the last bits)
    REQUIRE(max_abs_diff(kron(kron(a, b), c), kron(a, kron(b, c))) < 1e-12);
}

TEST_CASE("partial_trace factorizes product operators", "[subsystems]") {
    Rng rng(11);
    const ComplexMatrix rho = test::random_density(2, rng);
    const ComplexMatrix sigma = test::random_hermitian(3, rng);
    const SubsystemDims dims{{Label::x, 2}, {Label::y, 3}};
    const ComplexMatrix traced = partial_trace(kron(rho, sigma), dims, {Label::x});
    REQUIRE(max_abs_diff(traced, rho * sigma.trace()) < 1e-12);
}

TEST_CASE("partial_trace of the entangled example state", "[subsystems]") {
    ComplexMatrix rho(4, 4);
    rho(0, 0) = 0.5;
    rho(0, 3) = 0.25;
    rho(3, 0) = 0.25;
    rho(3, 3) = 0.5;
    const SubsystemDims dims{{Label::x, 2}, {Label::y, 2}};
    const ComplexMatrix rho_x = partial_trace(rho, dims, {Label::x});
    REQUIRE(max_abs_diff(rho_x, diag2(0.5, 0.5)) < 1e-14);
}

TEST_CASE("partial_trace of the unnormalized maximally entangled operator", "[subsystems]") {
    // Phi = sum_ij |ii><jj| on (x, x~); tracing the output leaves I_x
    ComplexMatrix phi(4, 4);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) phi(i * 2 + i, j * 2 + j) = 1.0;
    const SubsystemDims dims{{Label::x, 2}, {Label::x_tilde, 2}};
    REQUIRE(max_abs_diff(partial_trace(phi, dims, {Label::x}), ComplexMatrix::identity(2)) == 0.0);
    REQUIRE_THROWS_AS(partial_trace(phi, dims, {Label::y}), std::invalid_argument);
}

TEST_CASE("partial_trace preserves the total trace", "[subsystems][property]") {
    Rng rng(5);
    const SubsystemDims dims{{Label::x, 2}, {Label::y, 4}};
    for (int rep = 0; rep < 10; ++rep) {
        const ComplexMatrix m = test::random_density(8, rng);
        const cxd t0 = m.trace();
        REQUIRE(std::abs(partial_trace(m, dims, {Label::x}).trace() - t0) < 1e-12);
        REQUIRE(std::abs(partial_trace(m, dims, {Label::y}).trace() - t0) < 1e-12);
    }
}

TEST_CASE("partial_transpose factorized case, involution, swap", "[subsystems]") {
    Rng rng(9);
    const ComplexMatrix a = test::random_hermitian(2, rng);
    const ComplexMatrix b = test::random_hermitian(2, rng);
    const SubsystemDims dims{{Label::x, 2}, {Label::y, 2}};

    REQUIRE(max_abs_diff(partial_transpose(kron(a, b), dims, Label::x), kron(a.transpose(), b)) == 0.0);

    const ComplexMatrix m = test::random_hermitian(4, rng);
    REQUIRE(max_abs_diff(partial_transpose(partial_transpose(m, dims, Label::x), dims, Label::x), m) ==
            0.0);
    REQUIRE_THAT(partial_transpose(m, dims, Label::x).trace().real(), WithinAbs(m.trace().real(), 1e-13));

    // Phi^{T_x} is the SWAP matrix
    ComplexMatrix phi(4, 4);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) phi(i * 2 + i, j * 2 + j) = 1.0;
    const ComplexMatrix swapped = partial_transpose(phi, dims, Label::x);
    ComplexMatrix swap(4, 4);
    swap(0, 0) = 1.0;
    swap(1, 2) = 1.0;
    swap(2, 1) = 1.0;
    swap(3, 3) = 1.0;
    REQUIRE(max_abs_diff(swapped, swap) == 0.0);
}

TEST_CASE("partial_transpose is linear", "[subsystems][property]") {
    Rng rng(13);
    const SubsystemDims dims{{Label::x, 2}, {Label::y, 3}};
    const ComplexMatrix a = test::random_hermitian(6, rng);
    const ComplexMatrix b = test::random_hermitian(6, rng);
    const ComplexMatrix lhs = partial_transpose(a + b * cxd(2.5, 0.0), dims, Label::y);
    const ComplexMatrix rhs =
        partial_transpose(a, dims, Label::y) + partial_transpose(b, dims, Label::y) * cxd(2.5, 0.0);
    REQUIRE(max_abs_diff(lhs, rhs) == 0.0);
}

TEST_CASE("embed_operator acts as identity elsewhere", "[subsystems]") {
    Rng rng(17);
    const ComplexMatrix a = test::random_hermitian(2, rng);
    const SubsystemDims sub{{Label::x, 2}};
    const SubsystemDims full{{Label::x_prime, 3}, {Label::x, 2}};
    REQUIRE(max_abs_diff(embed_operator(a, sub, full), kron(ComplexMatrix::identity(3), a)) == 0.0);

    const SubsystemDims full2{{Label::x, 2}, {Label::y, 3}};
    REQUIRE(max_abs_diff(embed_operator(a, sub, full2), kron(a, ComplexMatrix::identity(3))) == 0.0);

    // middle-slot embedding
    const ComplexMatrix b = test::random_hermitian(4, rng);
    const SubsystemDims sub_b{{Label::x, 2}, {Label::y, 2}};
    const SubsystemDims full3{{Label::x, 2}, {Label::x_tilde, 3}, {Label::y, 2}};
    const ComplexMatrix e = embed_operator(b, sub_b, full3);
    REQUIRE(e.rows() == 12);
    // contract back: tracing the middle identity gives 3 * b
    REQUIRE(max_abs_diff(partial_trace(e, full3, {Label::x, Label::y}), b * cxd(3.0, 0.0)) < 1e-12);
}

TEST_CASE("trace_norm", "[eigen]") {
    REQUIRE_THAT(trace_norm(diag2(0.5, -0.5)), WithinAbs(1.0, 1e-13));
    Rng rng(23);
    const ComplexMatrix rho = test::random_density(3, rng);
    REQUIRE_THAT(trace_norm(rho - rho), WithinAbs(0.0, 1e-14));
    REQUIRE_THAT(trace_norm(diag2(0.75, 0.25) - diag2(0.25, 0.75)), WithinAbs(1.0, 1e-13));
    for (int rep = 0; rep < 20; ++rep) {
        const ComplexMatrix h = test::random_hermitian(4, rng);
        REQUIRE(trace_norm(h) >= std::abs(h.trace().real()) - 1e-12);
    }
}

TEST_CASE("random_isometry contract", "[random]") {
    Rng rng(31);
    for (auto [din, dout] : {std::pair<std::size_t, std::size_t>{1, 1}, {2, 2}, {2, 8}, {3, 5}}) {
        const ComplexMatrix v = random_isometry(din, dout, rng);
        REQUIRE(v.rows() == dout);
        REQUIRE(v.cols() == din);
        REQUIRE(max_abs_diff(v.dagger() * v, ComplexMatrix::identity(din)) < 1e-10);
    }
    // scalar case is a unit-modulus number
    const ComplexMatrix s = random_isometry(1, 1, rng);
    REQUIRE_THAT(std::abs(s(0, 0)), WithinAbs(1.0, 1e-12));

    Rng a(99), b(99);
    REQUIRE(max_abs_diff(random_isometry(2, 4, a), random_isometry(2, 4, b)) == 0.0);

    Rng c(1);
    REQUIRE_THROWS_AS(random_isometry(3, 2, c), std::invalid_argument);
}

TEST_CASE("rng streams are stable and independent", "[rng]") {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
    REQUIRE(Rng::stream_key(1, 2, 3) != Rng::stream_key(1, 3, 2));
}
