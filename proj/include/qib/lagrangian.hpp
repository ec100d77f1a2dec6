#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qib/channels.hpp"
#include "qib/classical_ib.hpp"
#include "qib/eigen.hpp"
#include "qib/solver.hpp"
#include "qib/solver_config.hpp"

namespace qib {

// Machinery around the constrained-optimum equation: the distortion
// operator, the Lagrangian as an explicit function of the Choi matrix, its
// gradient, and the self-consistent channel iteration built from them.

namespace detail {

// Joint spaces used by the adjoint contractions below.
inline SubsystemDims tau_space(const ProblemInstance& inst) {
    return SubsystemDims{{Label::x_prime, inst.d_x}, {Label::x, inst.d_x}, {Label::x_tilde, inst.d_x}};
}
inline SubsystemDims rho_space(const ProblemInstance& inst) {
    return SubsystemDims{{Label::x, inst.d_x}, {Label::x_tilde, inst.d_x}, {Label::y, inst.d_y}};
}

// E*(O) = Tr_{x'} [ tau_{x'x} O ] for O on (x', x~): the adjoint of the map
// psi^{T_x} -> tau_{x' x~}. Result lives on (x, x~).
inline ComplexMatrix tau_adjoint(const ProblemInstance& inst, const ComplexMatrix& op_xp_xt) {
    const SubsystemDims full = tau_space(inst);
    const SubsystemDims tau_dims{{Label::x_prime, inst.d_x}, {Label::x, inst.d_x}};
    const SubsystemDims op_dims{{Label::x_prime, inst.d_x}, {Label::x_tilde, inst.d_x}};
    const ComplexMatrix lhs = embed_operator(inst.tau_xpx.matrix(), tau_dims, full);
    const ComplexMatrix rhs = embed_operator(op_xp_xt, op_dims, full);
    return partial_trace(lhs * rhs, full, {Label::x, Label::x_tilde}).hermitized();
}

// F*(O) = Tr_y [ rho_xy O ] for O on (x~, y). Result lives on (x, x~).
inline ComplexMatrix rho_adjoint(const ProblemInstance& inst, const ComplexMatrix& op_xt_y) {
    const SubsystemDims full = rho_space(inst);
    const SubsystemDims rho_dims{{Label::x, inst.d_x}, {Label::y, inst.d_y}};
    const SubsystemDims op_dims{{Label::x_tilde, inst.d_x}, {Label::y, inst.d_y}};
    const ComplexMatrix lhs = embed_operator(inst.rho_xy.matrix(), rho_dims, full);
    const ComplexMatrix rhs = embed_operator(op_xt_y, op_dims, full);
    return partial_trace(lhs * rhs, full, {Label::x, Label::x_tilde}).hermitized();
}

// rho_{x~ y} = Tr_x [ psi^{T_x} rho_xy ] as a plain matrix map; accepts
// non-CPTP arguments, which the finite-difference checks rely on.
inline ComplexMatrix output_rho_matrix(const ProblemInstance& inst, const ComplexMatrix& psi_tx) {
    const SubsystemDims full = rho_space(inst);
    const SubsystemDims psi_dims{{Label::x, inst.d_x}, {Label::x_tilde, inst.d_x}};
    const SubsystemDims rho_dims{{Label::x, inst.d_x}, {Label::y, inst.d_y}};
    const ComplexMatrix lhs = embed_operator(psi_tx, psi_dims, full);
    const ComplexMatrix rhs = embed_operator(inst.rho_xy.matrix(), rho_dims, full);
    return partial_trace(lhs * rhs, full, {Label::x_tilde, Label::y}).hermitized();
}

// tau_{x' x~} = (W (x) I) psi (W (x) I)^dagger with psi = (psi^{T_x})^{T_x}.
inline ComplexMatrix output_tau_matrix(const ProblemInstance& inst, const ComplexMatrix& w,
                                       const ComplexMatrix& psi_tx) {
    const SubsystemDims psi_dims{{Label::x, inst.d_x}, {Label::x_tilde, inst.d_x}};
    const ComplexMatrix psi = partial_transpose(psi_tx, psi_dims, Label::x);
    const ComplexMatrix w_full = kron(w, ComplexMatrix::identity(inst.d_x));
    return (w_full * psi * w_full.dagger()).hermitized();
}

inline double entropy_of_matrix(const ComplexMatrix& m) {
    return entropy_of_spectrum(hermitian_eigenvalues(m.hermitized()));
}

} // namespace detail

// Quantum analogue of the KL exponent in the classical optimal channel:
// D = beta I_x (x) log rho_x~  -  beta Tr_y { rho_x^{-1/2} rho_xy rho_x^{-1/2}
// (log rho_{x~ y} (x) I_x) }, on (x, x~) in canonical order. Logs are taken
// on the support.
inline ComplexMatrix distortion_operator(const ProblemInstance& inst, const DensityMatrix& rho_xt,
                                         const BipartiteState& rho_xty, double beta) {
    if (beta < 0.0) throw std::invalid_argument("distortion_operator: beta must be >= 0");
    const std::size_t d = inst.d_x;
    if (rho_xt.dim() != d) throw std::invalid_argument("distortion_operator: dim mismatch");

    const ComplexMatrix first = kron(ComplexMatrix::identity(d), matrix_log(rho_xt.matrix(), true));

    const ComplexMatrix inv_sqrt_y =
        kron(matrix_pow(inst.rho_x.matrix(), -0.5, true), ComplexMatrix::identity(inst.d_y));
    const ComplexMatrix sigma = (inv_sqrt_y * inst.rho_xy.matrix() * inv_sqrt_y).hermitized();

    const SubsystemDims full = detail::rho_space(inst);
    const SubsystemDims sigma_dims{{Label::x, d}, {Label::y, inst.d_y}};
    const SubsystemDims log_dims{{Label::x_tilde, d}, {Label::y, inst.d_y}};
    const ComplexMatrix log_xty = matrix_log(rho_xty.matrix(), true);
    const ComplexMatrix second =
        partial_trace(embed_operator(sigma, sigma_dims, full) * embed_operator(log_xty, log_dims, full),
                      full, {Label::x, Label::x_tilde});

    return ((first - second) * cxd(beta, 0.0)).hermitized();
}

// L = I(X';X~) - beta I(X~;Y) - Tr { psi^{T_x} (Lambda (x) I) }, evaluated as
// an explicit function of the matrix psi^{T_x}. The entropies of all five
// channel-dependent states are computed from the linear maps, so the value
// stays well defined slightly off the trace-preserving manifold.
inline double lagrangian_from_tx(const ProblemInstance& inst, const ComplexMatrix& w,
                                 const ComplexMatrix& psi_tx, double beta,
                                 const ComplexMatrix& lambda) {
    const SubsystemDims out_rho{{Label::x_tilde, inst.d_x}, {Label::y, inst.d_y}};
    const SubsystemDims out_tau{{Label::x_prime, inst.d_x}, {Label::x_tilde, inst.d_x}};

    const ComplexMatrix rho_out = detail::output_rho_matrix(inst, psi_tx);
    const ComplexMatrix tau_out = detail::output_tau_matrix(inst, w, psi_tx);

    const double s_tau = detail::entropy_of_matrix(tau_out);
    const double s_tau_xp = detail::entropy_of_matrix(partial_trace(tau_out, out_tau, {Label::x_prime}));
    const double s_tau_xt = detail::entropy_of_matrix(partial_trace(tau_out, out_tau, {Label::x_tilde}));
    const double s_rho = detail::entropy_of_matrix(rho_out);
    const double s_rho_xt = detail::entropy_of_matrix(partial_trace(rho_out, out_rho, {Label::x_tilde}));
    const double s_rho_y = detail::entropy_of_matrix(partial_trace(rho_out, out_rho, {Label::y}));

    const ComplexMatrix lambda_full = kron(lambda, ComplexMatrix::identity(inst.d_x));
    const double norm_term = (psi_tx * lambda_full).trace().real();

    return (s_tau_xp + s_tau_xt - s_tau) - beta * (s_rho_xt + s_rho_y - s_rho) - norm_term;
}

inline double lagrangian(const ProblemInstance& inst, const ChoiMatrix& psi, double beta,
                         const ComplexMatrix& lambda) {
    const ComplexMatrix w = purification_matrix(inst.tau_xpx);
    const ComplexMatrix psi_tx = partial_transpose(psi.mat, psi.dims(), Label::x);
    return lagrangian_from_tx(inst, w, psi_tx, beta, lambda);
}

struct GradientResult {
    ComplexMatrix gradient;        // G on (x, x~): dL[B] = Tr(G B)
    bool support_projected = false; // a channel-dependent state was rank deficient
};

// Gradient of the Lagrangian with respect to psi^{T_x}, assembled from the
// directional derivatives of the five entropies plus the multiplier term.
// The derivative of Tr f(A) along B is Tr(f'(A) B) with f' = 1 + log for
// f = x log x, pulled back through the two linear state maps.
inline GradientResult lagrangian_gradient(const ProblemInstance& inst, const ChoiMatrix& psi,
                                          double beta, const ComplexMatrix& lambda) {
    const std::size_t d = inst.d_x;
    const SubsystemDims out_rho{{Label::x_tilde, d}, {Label::y, inst.d_y}};
    const SubsystemDims out_tau{{Label::x_prime, d}, {Label::x_tilde, d}};

    const ComplexMatrix w = purification_matrix(inst.tau_xpx);
    const ComplexMatrix psi_tx = partial_transpose(psi.mat, psi.dims(), Label::x);
    const ComplexMatrix rho_out = detail::output_rho_matrix(inst, psi_tx);
    const ComplexMatrix tau_out = detail::output_tau_matrix(inst, w, psi_tx);

    GradientResult res;
    auto log_plus_id = [&res](const ComplexMatrix& m) {
        const auto ev = hermitian_eigenvalues(m.hermitized());
        double lam_max = 0.0;
        for (double lam : ev) lam_max = std::max(lam_max, std::abs(lam));
        for (double lam : ev)
            if (std::abs(lam) <= kRankTol * lam_max) res.support_projected = true;
        return matrix_log(m.hermitized(), true) + ComplexMatrix::identity(m.rows());
    };

    const ComplexMatrix f_tau = log_plus_id(tau_out);
    const ComplexMatrix f_tau_xp = log_plus_id(partial_trace(tau_out, out_tau, {Label::x_prime}));
    const ComplexMatrix f_tau_xt = log_plus_id(partial_trace(tau_out, out_tau, {Label::x_tilde}));
    const ComplexMatrix f_rho = log_plus_id(rho_out);
    const ComplexMatrix f_rho_xt = log_plus_id(partial_trace(rho_out, out_rho, {Label::x_tilde}));
    const ComplexMatrix f_rho_y = log_plus_id(partial_trace(rho_out, out_rho, {Label::y}));

    const ComplexMatrix id_d = ComplexMatrix::identity(d);
    const ComplexMatrix id_y = ComplexMatrix::identity(inst.d_y);

    ComplexMatrix g = detail::tau_adjoint(inst, f_tau);
    g -= detail::tau_adjoint(inst, kron(f_tau_xp, id_d));
    g -= detail::tau_adjoint(inst, kron(id_d, f_tau_xt));

    ComplexMatrix g_rho = detail::rho_adjoint(inst, kron(f_rho_xt, id_y));
    g_rho += detail::rho_adjoint(inst, kron(ComplexMatrix::identity(d), f_rho_y));
    g_rho -= detail::rho_adjoint(inst, f_rho);

    g += g_rho * cxd(beta, 0.0);
    g -= kron(lambda, id_d);
    res.gradient = g.hermitized();
    return res;
}

// Canonical multiplier for a given channel: Lambda is only defined up to the
// constraint it enforces, so take the x~-averaged partial trace of the
// Lambda-free gradient. At a constrained stationary point the remainder
// G0 - Lambda (x) I vanishes.
inline ComplexMatrix extract_lambda(const ProblemInstance& inst, const ChoiMatrix& psi, double beta) {
    const GradientResult g0 = lagrangian_gradient(inst, psi, beta, ComplexMatrix(inst.d_x, inst.d_x));
    const SubsystemDims dims{{Label::x, inst.d_x}, {Label::x_tilde, inst.d_x}};
    ComplexMatrix lam = partial_trace(g0.gradient, dims, {Label::x});
    lam *= cxd(1.0 / static_cast<double>(inst.d_x), 0.0);
    return lam;
}

// Stationarity residual || G0 - Lambda (x) I ||_max with the canonical Lambda.
inline double gradient_residual(const ProblemInstance& inst, const ChoiMatrix& psi, double beta) {
    const ComplexMatrix lam = extract_lambda(inst, psi, beta);
    const GradientResult g = lagrangian_gradient(inst, psi, beta, lam);
    return g.gradient.max_abs();
}

struct FixedPointDiagnostics {
    bool converged = false;
    std::size_t iterations = 0;
    double final_delta = 0.0;   // last damped step size, max-norm
    double map_residual = 0.0;  // undamped self-consistency defect of the channel equation
    double tp_defect = 0.0;     // ||Tr_x~ psi - I||_max of the returned channel
    bool support_projected = false;
};

struct FixedPointResult {
    Evaluation eval;
    ChoiMatrix psi;
    FixedPointDiagnostics diag;
};

// Deterministic initial guess shared with the classical solver: a diagonal
// Choi matrix built from a perturbed-identity conditional distribution.
inline ClassicalChannel fixed_point_init_channel(std::size_t d, const SolverConfig& cfg) {
    Rng rng(Rng::stream_key(cfg.seed, 0x9f1dULL));
    return perturbed_identity_channel(d, d, rng);
}

inline ChoiMatrix choi_from_classical(const ClassicalChannel& q) {
    ChoiMatrix psi;
    psi.d_in = q.n_in();
    psi.d_out = q.n_out();
    psi.mat = ComplexMatrix(psi.d_in * psi.d_out, psi.d_in * psi.d_out);
    for (std::size_t x = 0; x < psi.d_in; ++x)
        for (std::size_t xt = 0; xt < psi.d_out; ++xt)
            psi.mat(x * psi.d_out + xt, x * psi.d_out + xt) = q(xt, x);
    return psi;
}

// Self-consistent iteration for the optimal-channel equation: from the
// current channel build the distortion exponent, exponentiate, sandwich with
// rho_x^{-1/2}, then absorb the normalisation multiplier by the symmetric
// renormalisation that restores Tr_x~ psi = I exactly. A damped update keeps
// the plain iteration from oscillating. Experimental beyond the diagonal
// (classical) case, where it reproduces the classical solver step for step.
inline FixedPointResult fixed_point_solve(const ProblemInstance& inst, double beta,
                                          const SolverConfig& cfg,
                                          const std::optional<ChoiMatrix>& init = std::nullopt) {
    cfg.validate();
    if (beta < 0.0) throw std::invalid_argument("fixed_point_solve: beta must be >= 0");
    const std::size_t d = inst.d_x;
    const SubsystemDims psi_dims{{Label::x, d}, {Label::x_tilde, d}};
    const SubsystemDims out_rho{{Label::x_tilde, d}, {Label::y, inst.d_y}};

    const ComplexMatrix rho_x_inv_sqrt = matrix_pow(inst.rho_x.matrix(), -0.5, true);
    const ComplexMatrix inv_sqrt_full = kron(rho_x_inv_sqrt, ComplexMatrix::identity(d));
    const ComplexMatrix inv_sqrt_y = kron(rho_x_inv_sqrt, ComplexMatrix::identity(inst.d_y));
    const ComplexMatrix sigma = (inv_sqrt_y * inst.rho_xy.matrix() * inv_sqrt_y).hermitized();
    const SubsystemDims full = detail::rho_space(inst);
    const SubsystemDims sigma_dims{{Label::x, d}, {Label::y, inst.d_y}};
    const SubsystemDims log_dims{{Label::x_tilde, d}, {Label::y, inst.d_y}};
    const ComplexMatrix sigma_hat = embed_operator(sigma, sigma_dims, full);

    FixedPointResult out;

    ComplexMatrix psi = init ? init->mat : choi_from_classical(fixed_point_init_channel(d, cfg)).mat;
    if (psi.rows() != d * d) throw std::invalid_argument("fixed_point_solve: init dim mismatch");

    // One application of the self-consistent map (with the multiplier absorbed).
    auto step = [&](const ComplexMatrix& cur) -> ComplexMatrix {
        const ComplexMatrix cur_tx = partial_transpose(cur, psi_dims, Label::x);
        const ComplexMatrix rho_out = detail::output_rho_matrix(inst, cur_tx);
        ComplexMatrix rho_xt = partial_trace(rho_out, out_rho, {Label::x_tilde}).hermitized();

        const ComplexMatrix log_xt = matrix_log(rho_xt, true);
        {
            const auto ev = hermitian_eigenvalues(rho_xt);
            if (ev.front() <= kRankTol * std::max(ev.back(), 0.0)) out.diag.support_projected = true;
        }
        const ComplexMatrix log_out = matrix_log(rho_out.hermitized(), true);
        const ComplexMatrix contracted = partial_trace(
            sigma_hat * embed_operator(log_out, log_dims, full), full, {Label::x, Label::x_tilde});

        // exponent of the channel equation, shifted by its top eigenvalue;
        // the shift cancels in the renormalisation and prevents overflow at
        // large beta
        ComplexMatrix expo =
            (kron(ComplexMatrix::identity(d), log_xt) * cxd(1.0 - beta, 0.0) +
             contracted * cxd(beta, 0.0))
                .hermitized();
        const auto expo_ev = hermitian_eigenvalues(expo);
        expo -= ComplexMatrix::identity(d * d) * cxd(expo_ev.back(), 0.0);

        ComplexMatrix cand_tx = (inv_sqrt_full * matrix_exp(expo) * inv_sqrt_full).hermitized();
        ComplexMatrix cand = partial_transpose(cand_tx, psi_dims, Label::x);

        // absorb the multiplier: symmetric renormalisation to Tr_x~ psi = I
        ComplexMatrix norm = partial_trace(cand, psi_dims, {Label::x}).hermitized();
        const ComplexMatrix g = matrix_pow(norm, -0.5, true);
        const ComplexMatrix g_full = kron(g, ComplexMatrix::identity(d));
        return (g_full * cand * g_full).hermitized();
    };

    double delta = 0.0;
    std::size_t it = 0;
    for (; it < cfg.max_fp_iters; ++it) {
        const ComplexMatrix next = step(psi);
        ComplexMatrix damped = psi * cxd(1.0 - cfg.fp_damping, 0.0) + next * cxd(cfg.fp_damping, 0.0);
        delta = max_abs_diff(damped, psi);
        psi = std::move(damped);
        if (delta < cfg.fixed_point_tol) { ++it; break; }
    }

    out.diag.iterations = it;
    out.diag.final_delta = delta;
    out.diag.map_residual = max_abs_diff(step(psi), psi);
    out.diag.tp_defect =
        max_abs_diff(partial_trace(psi, psi_dims, {Label::x}), ComplexMatrix::identity(d));
    out.diag.converged = delta < cfg.fixed_point_tol && out.diag.tp_defect < 1e-6;

    out.psi.d_in = d;
    out.psi.d_out = d;
    out.psi.mat = psi;
    out.eval = evaluate(inst, choi_to_kraus(out.psi, 1e-8));
    return out;
}

} // namespace qib
