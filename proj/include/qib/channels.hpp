#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qib/eigen.hpp"
#include "qib/errors.hpp"
#include "qib/matrix.hpp"
#include "qib/states.hpp"
#include "qib/subsystems.hpp"

namespace qib {

inline constexpr double kCptpTol = 1e-10;

// CPTP map in Kraus form: N(rho) = sum_i K_i rho K_i^dagger, with any
// ensemble weights absorbed into the operators themselves.
struct KrausChannel {
    std::size_t d_in = 0;
    std::size_t d_out = 0;
    std::vector<ComplexMatrix> kraus; // each d_out x d_in

    // max-norm of sum K_i^dagger K_i - I
    double completeness_defect() const {
        ComplexMatrix s(d_in, d_in);
        for (const auto& k : kraus) s += k.dagger() * k;
        return max_abs_diff(s, ComplexMatrix::identity(d_in));
    }

    void require_valid() const {
        if (kraus.empty()) throw std::invalid_argument("KrausChannel: no Kraus operators");
        for (const auto& k : kraus)
            if (k.rows() != d_out || k.cols() != d_in)
                throw std::invalid_argument("KrausChannel: operator shape mismatch");
        if (completeness_defect() > kCptpTol)
            throw ContractViolationError("KrausChannel: completeness relation violated");
    }
};

inline KrausChannel identity_channel(std::size_t d) {
    return KrausChannel{d, d, {ComplexMatrix::identity(d)}};
}

// Choi matrix on (x, x~), unnormalized convention: Psi = sum_ij |i><j| (x) N(|i><j|),
// so Tr Psi = d_in and trace preservation reads Tr_{x~} Psi = I_x.
struct ChoiMatrix {
    std::size_t d_in = 0;
    std::size_t d_out = 0;
    ComplexMatrix mat; // (d_in * d_out) square, basis (x, x~), x slowest

    SubsystemDims dims() const { return SubsystemDims{{Label::x, d_in}, {Label::x_tilde, d_out}}; }
};

struct CptpReport {
    double min_eigenvalue = 0.0;
    double tp_deviation = 0.0; // max-norm of Tr_x~ Psi - I_x
    bool cp_ok = false;
    bool tp_ok = false;
    bool pass() const { return cp_ok && tp_ok; }
};

inline CptpReport validate_cptp(const ChoiMatrix& psi, double tol = kCptpTol) {
    CptpReport rep;
    const auto ev = hermitian_eigenvalues(psi.mat.hermitized());
    rep.min_eigenvalue = ev.empty() ? 0.0 : ev.front();
    const ComplexMatrix tr_out = partial_trace(psi.mat, psi.dims(), {Label::x});
    rep.tp_deviation = max_abs_diff(tr_out, ComplexMatrix::identity(psi.d_in));
    rep.cp_ok = rep.min_eigenvalue >= -tol;
    rep.tp_ok = rep.tp_deviation <= std::max(tol, 1e-8);
    return rep;
}

// Psi[(i,a),(j,b)] = sum_k K_k(a,i) conj(K_k(b,j))
inline ChoiMatrix kraus_to_choi(const KrausChannel& n) {
    ChoiMatrix psi;
    psi.d_in = n.d_in;
    psi.d_out = n.d_out;
    psi.mat = ComplexMatrix(n.d_in * n.d_out, n.d_in * n.d_out);
    for (const auto& k : n.kraus)
        for (std::size_t i = 0; i < n.d_in; ++i)
            for (std::size_t a = 0; a < n.d_out; ++a) {
                const cxd left = k(a, i);
                if (left == cxd(0.0, 0.0)) continue;
                for (std::size_t j = 0; j < n.d_in; ++j)
                    for (std::size_t b = 0; b < n.d_out; ++b)
                        psi.mat(i * n.d_out + a, j * n.d_out + b) += left * std::conj(k(b, j));
            }
    return psi;
}

// Kraus operators from the eigendecomposition of the Choi matrix.
inline KrausChannel choi_to_kraus(const ChoiMatrix& psi, double tol = kCptpTol) {
    const EigenDecomposition eig = hermitian_eig(psi.mat.hermitized());
    KrausChannel n;
    n.d_in = psi.d_in;
    n.d_out = psi.d_out;
    for (std::size_t k = 0; k < eig.eigenvalues.size(); ++k) {
        const double lam = eig.eigenvalues[k];
        if (lam < -tol)
            throw NotCompletelyPositiveError("choi_to_kraus: negative Choi eigenvalue beyond tolerance");
        if (lam <= tol) continue;
        const double root = std::sqrt(lam);
        ComplexMatrix op(psi.d_out, psi.d_in);
        for (std::size_t i = 0; i < psi.d_in; ++i)
            for (std::size_t a = 0; a < psi.d_out; ++a)
                op(a, i) = root * eig.eigenvectors(i * psi.d_out + a, k);
        n.kraus.push_back(std::move(op));
    }
    if (n.kraus.empty()) throw NotCompletelyPositiveError("choi_to_kraus: zero Choi matrix");
    return n;
}

// Apply the channel to the `target` factor of a multipartite state. The
// target label is replaced by out_label (dimension d_out) in the output.
inline DensityMatrix apply_channel(const KrausChannel& n, const DensityMatrix& rho, Label target,
                                   Label out_label = Label::x_tilde) {
    const SubsystemDims& dims = rho.dims();
    if (dims.dim_of(target) != n.d_in)
        throw std::invalid_argument("apply_channel: channel input dim does not match target factor");
    if (target != out_label && dims.has(out_label))
        throw std::invalid_argument("apply_channel: output label already present in state");
    const SubsystemDims out_dims = dims.with_replaced(target, out_label, n.d_out);

    const std::size_t pos = dims.position_of(target);
    std::size_t pre = 1, post = 1;
    for (std::size_t i = 0; i < pos; ++i) pre *= dims.factor(i).dim;
    for (std::size_t i = pos + 1; i < dims.count(); ++i) post *= dims.factor(i).dim;

    ComplexMatrix out(pre * n.d_out * post, pre * n.d_out * post);
    for (const auto& k : n.kraus) {
        // embedded = I_pre (x) K (x) I_post
        ComplexMatrix embedded = kron(kron(ComplexMatrix::identity(pre), k), ComplexMatrix::identity(post));
        out += embedded * rho.matrix() * embedded.dagger();
    }
    return DensityMatrix::unchecked(out.hermitized(), out_dims);
}

inline BipartiteState apply_channel(const KrausChannel& n, const BipartiteState& rho, Label target,
                                    Label out_label = Label::x_tilde) {
    return BipartiteState(apply_channel(n, rho.state(), target, out_label));
}

// rho_{x~ y} = Tr_x { Psi^{T_x} rho_xy }  (Choi application without a Kraus
// decomposition). Implemented on the joint space obtained by inserting the
// output factor right after the target.
inline DensityMatrix choi_apply(const ChoiMatrix& psi, const DensityMatrix& rho, Label target,
                                Label out_label = Label::x_tilde) {
    const SubsystemDims& dims = rho.dims();
    if (dims.dim_of(target) != psi.d_in)
        throw std::invalid_argument("choi_apply: channel input dim does not match target factor");
    if (dims.has(out_label))
        throw std::invalid_argument("choi_apply: output label already present in state");

    const SubsystemDims full = dims.with_inserted_after(target, out_label, psi.d_out);
    const SubsystemDims psi_dims{{target, psi.d_in}, {out_label, psi.d_out}};

    const ComplexMatrix psi_tx = partial_transpose(psi.mat, psi_dims, target);
    const ComplexMatrix psi_hat = embed_operator(psi_tx, psi_dims, full);
    const ComplexMatrix rho_hat = embed_operator(rho.matrix(), dims, full);

    std::vector<Label> keep;
    for (const auto& f : full.factors())
        if (f.label != target) keep.push_back(f.label);

    ComplexMatrix res = partial_trace(psi_hat * rho_hat, full, keep);
    return DensityMatrix::unchecked(res.hermitized(), full.kept(keep));
}

inline BipartiteState choi_apply(const ChoiMatrix& psi, const BipartiteState& rho, Label target,
                                 Label out_label = Label::x_tilde) {
    return BipartiteState(choi_apply(psi, rho.state(), target, out_label));
}

// Reshape a pure bipartite state |w><w| into the matrix W with
// |w> = sum_{k,i} W(k,i) |k>|i>, so that tau = (W (x) I) Phi (W (x) I)^dagger.
inline ComplexMatrix purification_matrix(const BipartiteState& tau) {
    const std::size_t d_ref = tau.dims().factor(0).dim;
    const std::size_t d_sys = tau.dims().factor(1).dim;
    const EigenDecomposition eig = hermitian_eig(tau.matrix());
    const std::size_t dim = tau.matrix().rows();
    if (std::abs(eig.eigenvalues.back() - 1.0) > 1e-9)
        throw std::invalid_argument("purification_matrix: state is not pure");
    ComplexMatrix w(d_ref, d_sys);
    for (std::size_t k = 0; k < d_ref; ++k)
        for (std::size_t i = 0; i < d_sys; ++i) w(k, i) = eig.eigenvectors(k * d_sys + i, dim - 1);
    return w;
}

// tau_{x' x~} as an explicit function of the Choi matrix: the joint output
// state is (W (x) I) Psi (W (x) I)^dagger with W from the pure input.
inline BipartiteState joint_from_choi(const ChoiMatrix& psi, const BipartiteState& tau,
                                      Label out_label = Label::x_tilde) {
    const std::size_t d_sys = tau.dims().factor(1).dim;
    if (d_sys != psi.d_in) throw std::invalid_argument("joint_from_choi: dim mismatch");
    const ComplexMatrix w = purification_matrix(tau);
    const ComplexMatrix w_full = kron(w, ComplexMatrix::identity(psi.d_out));
    ComplexMatrix res = w_full * psi.mat * w_full.dagger();
    return BipartiteState::unchecked(res.hermitized(),
                                     SubsystemDims{{tau.dims().factor(0).label, w.rows()},
                                                   {out_label, psi.d_out}});
}

} // namespace qib
