#include <catch2/catch_amalgamated.hpp>

#include "qib/channels.hpp"
#include "qib/io.hpp"
#include "qib/presets.hpp"
#include "qib/random.hpp"
#include "qib/solver.hpp"
#include "qib/states.hpp"
#include "test_support.hpp"

using namespace qib;
using Catch::Matchers::WithinAbs;

namespace {

// scalar oracle for binary entropy in nats
double h2(double p) {
    double s = 0.0;
    if (p > 0) s -= p * std::log(p);
    if (p < 1) s -= (1 - p) * std::log(1 - p);
    return s;
}

DensityMatrix qubit_diag(double a, double b, Label l = Label::x) {
    ComplexMatrix m(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return DensityMatrix(std::move(m), SubsystemDims::single(l, 2));
}

KrausChannel random_cptp(std::size_t d, std::size_t rank, std::uint64_t seed) {
    Rng rng(seed);
    return random_channel(d, d, rank, rng);
}

// channel action compared entrywise on the Choi matrix, which determines the
// action on every input
double channel_action_diff(const KrausChannel& a, const KrausChannel& b) {
    return max_abs_diff(kraus_to_choi(a).mat, kraus_to_choi(b).mat);
}

} // namespace

TEST_CASE("von Neumann entropy on reference spectra", "[states]") {
    REQUIRE_THAT(von_neumann_entropy(qubit_diag(0.5, 0.5)), WithinAbs(std::log(2.0), 1e-12));
    REQUIRE_THAT(von_neumann_entropy(qubit_diag(0.4, 0.6)), WithinAbs(h2(0.4), 1e-12));
    REQUIRE_THAT(von_neumann_entropy(qubit_diag(0.4, 0.6)), WithinAbs(0.6730116670092565, 1e-12));
    REQUIRE_THAT(von_neumann_entropy(qubit_diag(1.0, 0.0)), WithinAbs(0.0, 1e-10));

    ComplexMatrix bad(2, 2);
    bad(0, 0) = 1.01;
    bad(1, 1) = -0.01;
    REQUIRE_THROWS_AS(
        von_neumann_entropy(DensityMatrix::unchecked(std::move(bad), SubsystemDims::single(Label::x, 2))),
        InvalidStateError);
}

TEST_CASE("mutual information of product and example states", "[states]") {
    Rng rng(2024);
    const ComplexMatrix a = test::random_density(2, rng);
    const ComplexMatrix b = test::random_density(3, rng);
    const BipartiteState prod =
        BipartiteState::unchecked(kron(a, b), SubsystemDims{{Label::x, 2}, {Label::y, 3}});
    REQUIRE_THAT(mutual_information(prod), WithinAbs(0.0, 1e-10));

    // scalar oracle: 2 ln 2 - S(3/4, 1/4) for the entangled example
    const double expect2 = 2.0 * std::log(2.0) - h2(0.75);
    REQUIRE_THAT(mutual_information(bell_mix_state()), WithinAbs(expect2, 1e-11));
    REQUIRE_THAT(mutual_information(bell_mix_state()), WithinAbs(0.8239592165010822, 1e-10));

    // classical table oracle for the diagonal state
    const double p[4] = {0.1, 0.2, 0.3, 0.4};
    const double px[2] = {p[0] + p[2], p[1] + p[3]};
    const double py[2] = {p[0] + p[1], p[2] + p[3]};
    double mi = 0.0;
    const double table[2][2] = {{p[0], p[2]}, {p[1], p[3]}}; // [x][y]
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) mi += table[x][y] * std::log(table[x][y] / (px[x] * py[y]));
    REQUIRE_THAT(mutual_information(classical_state(0.1, 0.2, 0.3, 0.4)), WithinAbs(mi, 1e-12));
    REQUIRE_THAT(mi, WithinAbs(0.0040217432304824, 1e-12));
}

TEST_CASE("purify reproduces the stated vector on diagonal input", "[states]") {
    const BipartiteState tau = purify(qubit_diag(0.4, 0.6));
    // |w> = sqrt(0.4)|00> + sqrt(0.6)|11> on (x', x)
    ComplexMatrix expect(4, 4);
    const double r0 = std::sqrt(0.4), r1 = std::sqrt(0.6);
    expect(0, 0) = 0.4;
    expect(0, 3) = r0 * r1;
    expect(3, 0) = r0 * r1;
    expect(3, 3) = 0.6;
    REQUIRE(max_abs_diff(tau.matrix(), expect) < 1e-12);
    REQUIRE(tau.label(0) == Label::x_prime);
}

TEST_CASE("purify contracts: purity, marginal, padding", "[states][property]") {
    Rng rng(8);
    for (int rep = 0; rep < 15; ++rep) {
        const DensityMatrix rho = test::random_density_state(3, rng);
        const BipartiteState tau = purify(rho);
        REQUIRE(von_neumann_entropy(tau.state()) < 1e-9);
        REQUIRE(max_abs_diff(tau.marginal(Label::x).matrix(), rho.matrix()) < 1e-10);
        REQUIRE(tau.dims().factor(0).dim == 3); // reference padded to dim(rho)
        // pure bipartite state: I(A;B) = 2 S(marginal)
        REQUIRE_THAT(mutual_information(tau),
                     WithinAbs(2.0 * von_neumann_entropy(rho), 1e-9));
    }

    // pure input: product purification
    ComplexMatrix v(2, 2);
    v(0, 0) = 0.5;
    v(0, 1) = cxd(0.0, 0.5);
    v(1, 0) = cxd(0.0, -0.5);
    v(1, 1) = 0.5;
    const DensityMatrix pure(v, SubsystemDims::single(Label::x, 2));
    const BipartiteState tau = purify(pure);
    REQUIRE_THAT(mutual_information(tau), WithinAbs(0.0, 1e-9));

    // maximally mixed input: maximally entangled purification
    const BipartiteState bell = purify(qubit_diag(0.5, 0.5));
    REQUIRE_THAT(mutual_information(bell), WithinAbs(2.0 * std::log(2.0), 1e-9));
}

TEST_CASE("Fannes continuity bound", "[states][property]") {
    Rng rng(77);
    const double inv_e = 1.0 / std::exp(1.0);
    int used = 0;
    for (int rep = 0; rep < 1000 && used < 200; ++rep) {
        const std::size_t d = 2 + rep % 3;
        ComplexMatrix rho = test::random_density(d, rng);
        ComplexMatrix sigma = test::random_density(d, rng);
        // pull sigma toward rho so a good fraction of pairs are inside t <= 1/e
        const double c = 0.05 + 0.45 * rng.uniform();
        sigma = (rho * cxd(1.0 - c, 0.0) + sigma * cxd(c, 0.0)).hermitized();
        const double t = trace_norm(rho - sigma);
        if (t > inv_e) continue;
        ++used;
        const double ds = std::abs(entropy_of_spectrum(hermitian_eigenvalues(rho)) -
                                   entropy_of_spectrum(hermitian_eigenvalues(sigma)));
        const double eta = (t > 0.0) ? -t * std::log(t) : 0.0;
        REQUIRE(ds <= t * std::log(static_cast<double>(d)) + eta / std::log(2.0) + 1e-12);
    }
    REQUIRE(used >= 200);
}

TEST_CASE("kraus_to_choi on the named channels", "[channels]") {
    // identity: Phi = sum_ij |ii><jj|
    const ChoiMatrix phi = kraus_to_choi(identity_channel(2));
    ComplexMatrix expect(4, 4);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) expect(i * 2 + i, j * 2 + j) = 1.0;
    REQUIRE(max_abs_diff(phi.mat, expect) < 1e-14);

    // dephasing: diagonal blocks survive, cross blocks vanish
    const ChoiMatrix deph = kraus_to_choi(dephasing_channel());
    ComplexMatrix expect_d(4, 4);
    expect_d(0, 0) = 1.0;
    expect_d(3, 3) = 1.0;
    REQUIRE(max_abs_diff(deph.mat, expect_d) < 1e-14);

    // replacement to sigma: Choi = I (x) sigma
    Rng rng(4);
    const ComplexMatrix sig = test::random_density(2, rng);
    const KrausChannel rep =
        replacement_channel(DensityMatrix::unchecked(sig, SubsystemDims::single(Label::x_tilde, 2)), 2);
    REQUIRE(max_abs_diff(kraus_to_choi(rep).mat, kron(ComplexMatrix::identity(2), sig)) < 1e-12);
}

TEST_CASE("choi_to_kraus inverts kraus_to_choi", "[channels][property]") {
    // identity Choi: a single Kraus operator equal to I up to a global phase
    const KrausChannel id_back = choi_to_kraus(kraus_to_choi(identity_channel(2)));
    REQUIRE(id_back.kraus.size() == 1);
    REQUIRE(channel_action_diff(id_back, identity_channel(2)) < 1e-12);

    // dephasing Choi: rank two
    const KrausChannel deph_back = choi_to_kraus(kraus_to_choi(dephasing_channel()));
    REQUIRE(deph_back.kraus.size() == 2);
    REQUIRE(channel_action_diff(deph_back, dephasing_channel()) < 1e-12);

    for (std::uint64_t s = 0; s < 20; ++s) {
        const KrausChannel n = random_cptp(2, 4, 100 + s);
        REQUIRE(n.completeness_defect() < 1e-10);
        const ChoiMatrix psi = kraus_to_choi(n);
        const KrausChannel back = choi_to_kraus(psi);
        REQUIRE(back.completeness_defect() < 1e-9);
        REQUIRE(max_abs_diff(kraus_to_choi(back).mat, psi.mat) < 1e-9);
    }

    // negative eigenvalue: not completely positive
    ChoiMatrix swap;
    swap.d_in = 2;
    swap.d_out = 2;
    swap.mat = partial_transpose(kraus_to_choi(identity_channel(2)).mat,
                                 SubsystemDims{{Label::x, 2}, {Label::x_tilde, 2}}, Label::x);
    REQUIRE_THROWS_AS(choi_to_kraus(swap), NotCompletelyPositiveError);
}

TEST_CASE("validate_cptp", "[channels]") {
    const ChoiMatrix phi = kraus_to_choi(identity_channel(2));
    REQUIRE(validate_cptp(phi).pass());

    ChoiMatrix scaled = phi;
    scaled.mat *= cxd(1.1, 0.0);
    const CptpReport rep = validate_cptp(scaled);
    REQUIRE_FALSE(rep.tp_ok);
    REQUIRE_THAT(rep.tp_deviation, WithinAbs(0.1, 1e-12));

    ChoiMatrix swap;
    swap.d_in = 2;
    swap.d_out = 2;
    swap.mat = partial_transpose(phi.mat, phi.dims(), Label::x);
    const CptpReport rep2 = validate_cptp(swap);
    REQUIRE_FALSE(rep2.cp_ok);
    REQUIRE_THAT(rep2.min_eigenvalue, WithinAbs(-1.0, 1e-12));

    for (std::uint64_t s = 0; s < 10; ++s)
        REQUIRE(validate_cptp(kraus_to_choi(random_cptp(2, 3, 500 + s))).pass());
}

TEST_CASE("apply_channel on the example states", "[channels]") {
    const BipartiteState rho1 = classical_state(0.1, 0.2, 0.3, 0.4);
    const BipartiteState unchanged = apply_channel(identity_channel(2), rho1, Label::x);
    REQUIRE(max_abs_diff(unchanged.matrix(), rho1.matrix()) < 1e-14);

    // dephasing leaves the diagonal state untouched
    const BipartiteState dephased1 = apply_channel(dephasing_channel(), rho1, Label::x);
    REQUIRE(max_abs_diff(dephased1.matrix(), rho1.matrix()) < 1e-14);

    // on the entangled state it kills the off-diagonals
    const BipartiteState dephased2 = apply_channel(dephasing_channel(), bell_mix_state(), Label::x);
    ComplexMatrix expect(4, 4);
    expect(0, 0) = 0.5;
    expect(3, 3) = 0.5;
    REQUIRE(max_abs_diff(dephased2.matrix(), expect) < 1e-14);
    REQUIRE_THAT(dephased2.matrix().trace().real(), WithinAbs(1.0, 1e-12));

    REQUIRE_THROWS_AS(apply_channel(KrausChannel{3, 3, {ComplexMatrix::identity(3)}},
                                    rho1, Label::x),
                      std::invalid_argument);
}

TEST_CASE("choi_apply agrees with the Kraus path", "[channels][property]") {
    const BipartiteState rho2 = bell_mix_state();

    const ChoiMatrix phi = kraus_to_choi(identity_channel(2));
    REQUIRE(max_abs_diff(choi_apply(phi, rho2, Label::x).matrix(), rho2.matrix()) < 1e-12);

    const ChoiMatrix deph = kraus_to_choi(dephasing_channel());
    REQUIRE(max_abs_diff(choi_apply(deph, rho2, Label::x).matrix(),
                         apply_channel(dephasing_channel(), rho2, Label::x).matrix()) < 1e-12);

    // replacement destroys the X correlations: output sigma (x) rho_y
    Rng rng(6);
    const ComplexMatrix sig = test::random_density(2, rng);
    const KrausChannel rep =
        replacement_channel(DensityMatrix::unchecked(sig, SubsystemDims::single(Label::x_tilde, 2)), 2);
    const BipartiteState out = choi_apply(kraus_to_choi(rep), rho2, Label::x);
    REQUIRE(max_abs_diff(out.matrix(), kron(sig, rho2.marginal(Label::y).matrix())) < 1e-10);

    for (std::uint64_t s = 0; s < 25; ++s) {
        Rng r(9000 + s);
        const BipartiteState rho = test::random_bipartite(2, 2, r);
        const KrausChannel n = random_cptp(2, 4, 777 + s);
        const BipartiteState via_kraus = apply_channel(n, rho, Label::x);
        const BipartiteState via_choi = choi_apply(kraus_to_choi(n), rho, Label::x);
        REQUIRE(max_abs_diff(via_kraus.matrix(), via_choi.matrix()) < 1e-9);
        REQUIRE_THAT(via_choi.matrix().trace().real(), WithinAbs(1.0, 1e-10));
    }
}

TEST_CASE("joint_from_choi matches the examples and choi_apply", "[channels][property]") {
    const BipartiteState tau = purify(qubit_diag(0.4, 0.6));

    // identity channel preserves the pure state
    const BipartiteState identity_out = joint_from_choi(kraus_to_choi(identity_channel(2)), tau);
    REQUIRE(max_abs_diff(identity_out.matrix(), tau.matrix()) < 1e-10);

    // dephasing: the classically correlated state with weights 0.4, 0.6
    const BipartiteState deph_out = joint_from_choi(kraus_to_choi(dephasing_channel()), tau);
    ComplexMatrix expect(4, 4);
    expect(0, 0) = 0.4;
    expect(3, 3) = 0.6;
    REQUIRE(max_abs_diff(deph_out.matrix(), expect) < 1e-10);

    // replacement: rho_x' (x) sigma
    Rng rng(15);
    const ComplexMatrix sig = test::random_density(2, rng);
    const KrausChannel rep =
        replacement_channel(DensityMatrix::unchecked(sig, SubsystemDims::single(Label::x_tilde, 2)), 2);
    const BipartiteState rep_out = joint_from_choi(kraus_to_choi(rep), tau);
    REQUIRE(max_abs_diff(rep_out.matrix(), kron(tau.marginal(Label::x_prime).matrix(), sig)) < 1e-10);

    // agreement with choi_apply on purifications of random states
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng r(311 + s);
        const BipartiteState t = purify(test::random_density_state(2, r));
        const KrausChannel n = random_cptp(2, 4, 1300 + s);
        const ChoiMatrix psi = kraus_to_choi(n);
        REQUIRE(max_abs_diff(joint_from_choi(psi, t).matrix(),
                             choi_apply(psi, t, Label::x).matrix()) < 1e-9);
    }
}

TEST_CASE("data processing inequality", "[channels][property]") {
    for (std::uint64_t s = 0; s < 40; ++s) {
        Rng r(4242 + s);
        const BipartiteState rho = test::random_bipartite(2, 2, r);
        const double i_xy = mutual_information(rho);
        const KrausChannel n = random_cptp(2, 1 + s % 4, 51 + s);
        const double i_xty = mutual_information(apply_channel(n, rho, Label::x));
        REQUIRE(i_xty <= i_xy + 1e-9);
    }
}

TEST_CASE("channel serialization roundtrip", "[io]") {
    const KrausChannel n = random_cptp(2, 4, 90210);
    const json j = channel_to_json(n);
    const KrausChannel back = channel_from_json(j);
    REQUIRE(back.d_in == n.d_in);
    REQUIRE(back.kraus.size() == n.kraus.size());
    REQUIRE(channel_action_diff(n, back) == 0.0); // doubles survive json exactly

    const ChoiMatrix psi = kraus_to_choi(n);
    const ChoiMatrix psi_back = choi_from_json(choi_to_json(psi));
    REQUIRE(max_abs_diff(psi.mat, psi_back.mat) == 0.0);

    json bad = j;
    bad["kraus"][0][0] = json::array({1.0});
    REQUIRE_THROWS_AS(channel_from_json(bad), std::invalid_argument);
}

TEST_CASE("state spec parsing", "[io]") {
    const BipartiteState s1 = state_from_spec_json(state_spec_to_json("classical", {0.1, 0.2, 0.3, 0.4}));
    REQUIRE(max_abs_diff(s1.matrix(), classical_state(0.1, 0.2, 0.3, 0.4).matrix()) == 0.0);

    const BipartiteState s2 = state_from_spec_json(json::parse(R"({"preset":{"name":"bell_mix"}})"));
    REQUIRE(max_abs_diff(s2.matrix(), bell_mix_state().matrix()) == 0.0);

    json explicit_state;
    explicit_state["dims"]["x"] = 2;
    explicit_state["dims"]["y"] = 2;
    explicit_state["matrix"] = matrix_to_json(bell_mix_state().matrix());
    REQUIRE(max_abs_diff(state_from_spec_json(explicit_state).matrix(), bell_mix_state().matrix()) ==
            0.0);

    REQUIRE_THROWS_AS(state_from_spec_json(json::parse(R"({"preset":{"name":"nope"}})")),
                      std::invalid_argument);
    // explicit matrices must pass state validation
    json bad = explicit_state;
    bad["matrix"][0] = json::array({2.0, 0.0});
    REQUIRE_THROWS_AS(state_from_spec_json(bad), InvalidStateError);
}
