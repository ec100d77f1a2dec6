#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qib/errors.hpp"
#include "qib/parallel.hpp"
#include "qib/rng.hpp"
#include "qib/solver_config.hpp"

namespace qib {

// Joint probability table P(x, y), row-major |X| x |Y|.
class JointDistribution {
public:
    JointDistribution(std::size_t nx, std::size_t ny, std::vector<double> p)
        : nx_(nx), ny_(ny), p_(std::move(p)) {
        if (nx_ == 0 || ny_ == 0 || p_.size() != nx_ * ny_)
            throw std::invalid_argument("JointDistribution: shape mismatch");
        double sum = 0.0;
        for (double v : p_) {
            if (v < 0.0) throw std::invalid_argument("JointDistribution: negative entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("JointDistribution: entries must sum to 1 within 1e-12");
    }

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    double operator()(std::size_t x, std::size_t y) const { return p_[x * ny_ + y]; }

    std::vector<double> marginal_x() const {
        std::vector<double> m(nx_, 0.0);
        for (std::size_t x = 0; x < nx_; ++x)
            for (std::size_t y = 0; y < ny_; ++y) m[x] += (*this)(x, y);
        return m;
    }

    std::vector<double> marginal_y() const {
        std::vector<double> m(ny_, 0.0);
        for (std::size_t x = 0; x < nx_; ++x)
            for (std::size_t y = 0; y < ny_; ++y) m[y] += (*this)(x, y);
        return m;
    }

    // Rows with P(x) = 0 carry no conditional P(y|x) and are dropped; this is
    // the documented input normalization.
    JointDistribution without_zero_rows() const {
        const auto px = marginal_x();
        std::vector<double> q;
        std::size_t kept = 0;
        for (std::size_t x = 0; x < nx_; ++x) {
            if (px[x] <= 0.0) continue;
            ++kept;
            for (std::size_t y = 0; y < ny_; ++y) q.push_back((*this)(x, y));
        }
        if (kept == 0) throw std::invalid_argument("JointDistribution: all rows empty");
        return JointDistribution(kept, ny_, std::move(q));
    }

    double mutual_information() const {
        const auto px = marginal_x();
        const auto py = marginal_y();
        double mi = 0.0;
        for (std::size_t x = 0; x < nx_; ++x)
            for (std::size_t y = 0; y < ny_; ++y) {
                const double p = (*this)(x, y);
                if (p > 0.0) mi += p * std::log(p / (px[x] * py[y]));
            }
        return mi;
    }

private:
    std::size_t nx_, ny_;
    std::vector<double> p_;
};

// Conditional distribution P(x~ | x): column-stochastic, entry (xt, x).
class ClassicalChannel {
public:
    ClassicalChannel() = default;
    ClassicalChannel(std::size_t n_out, std::size_t n_in)
        : n_out_(n_out), n_in_(n_in), q_(n_out * n_in, 0.0) {}

    std::size_t n_out() const { return n_out_; }
    std::size_t n_in() const { return n_in_; }
    double& operator()(std::size_t xt, std::size_t x) { return q_[xt * n_in_ + x]; }
    double operator()(std::size_t xt, std::size_t x) const { return q_[xt * n_in_ + x]; }

    double column_defect() const {
        double worst = 0.0;
        for (std::size_t x = 0; x < n_in_; ++x) {
            double s = 0.0;
            for (std::size_t xt = 0; xt < n_out_; ++xt) {
                if ((*this)(xt, x) < 0.0) return std::numeric_limits<double>::infinity();
                s += (*this)(xt, x);
            }
            worst = std::max(worst, std::abs(s - 1.0));
        }
        return worst;
    }

    void require_stochastic(double tol = 1e-10) const {
        if (n_out_ == 0 || n_in_ == 0) throw std::invalid_argument("ClassicalChannel: empty");
        if (column_defect() > tol)
            throw ContractViolationError("ClassicalChannel: columns not stochastic within tolerance");
    }

private:
    std::size_t n_out_ = 0, n_in_ = 0;
    std::vector<double> q_;
};

// KL(p || q) in nats with the 0 log 0 = 0 convention; +infinity when p has
// mass outside the support of q.
inline double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: length mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
        d += p[i] * std::log(p[i] / q[i]);
    }
    return d;
}

struct IBSolution {
    ClassicalChannel channel;
    double beta = 0.0;
    double I_xxt = 0.0; // I(X; X~), nats
    double I_xty = 0.0; // I(X~; Y), nats
    std::size_t iterations = 0;
    double residual = 0.0; // self-consistency defect of the optimal-channel equation
};

namespace detail {

struct IBWorkspace {
    std::vector<double> px;                  // P(x)
    std::vector<std::vector<double>> cond;   // P(y|x)
    std::size_t nx, ny;
};

inline IBWorkspace ib_workspace(const JointDistribution& pxy) {
    IBWorkspace w;
    w.nx = pxy.nx();
    w.ny = pxy.ny();
    w.px = pxy.marginal_x();
    for (double p : w.px)
        if (p <= 0.0)
            throw std::invalid_argument("ib_iterate: zero-probability X row; drop it first");
    w.cond.assign(w.nx, std::vector<double>(w.ny));
    for (std::size_t x = 0; x < w.nx; ++x)
        for (std::size_t y = 0; y < w.ny; ++y) w.cond[x][y] = pxy(x, y) / w.px[x];
    return w;
}

// One optimal-channel update: q'(xt|x) proportional to m(xt) e^{-beta KL}.
// Computed in log space with a per-column max shift; otherwise beta beyond
// ~50 underflows the exponent and silently zeroes columns.
inline ClassicalChannel ib_channel_update(const IBWorkspace& w, const ClassicalChannel& q,
                                          double beta,
                                          std::vector<double>* marginal_out = nullptr) {
    const std::size_t d_xt = q.n_out();
    std::vector<double> m(d_xt, 0.0);
    for (std::size_t xt = 0; xt < d_xt; ++xt)
        for (std::size_t x = 0; x < w.nx; ++x) m[xt] += w.px[x] * q(xt, x);
    if (marginal_out) *marginal_out = m;

    // decoder P(y | xt)
    std::vector<std::vector<double>> dec(d_xt, std::vector<double>(w.ny, 0.0));
    for (std::size_t xt = 0; xt < d_xt; ++xt) {
        if (m[xt] <= 0.0) continue;
        for (std::size_t x = 0; x < w.nx; ++x) {
            const double wgt = q(xt, x) * w.px[x];
            if (wgt <= 0.0) continue;
            for (std::size_t y = 0; y < w.ny; ++y) dec[xt][y] += wgt * w.cond[x][y];
        }
        for (std::size_t y = 0; y < w.ny; ++y) dec[xt][y] /= m[xt];
    }

    const double neg_inf = -std::numeric_limits<double>::infinity();
    ClassicalChannel out(d_xt, w.nx);
    for (std::size_t x = 0; x < w.nx; ++x) {
        std::vector<double> logw(d_xt, neg_inf);
        double best = neg_inf;
        for (std::size_t xt = 0; xt < d_xt; ++xt) {
            if (m[xt] <= 0.0) continue;
            const double kl = kl_divergence(w.cond[x], dec[xt]);
            if (std::isinf(kl)) continue; // support lost: zero weight, never negative
            logw[xt] = std::log(m[xt]) - beta * kl;
            best = std::max(best, logw[xt]);
        }
        if (std::isinf(best)) {
            // every option is excluded; park the mass on the heaviest cluster
            const std::size_t pick =
                static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin());
            out(pick, x) = 1.0;
            continue;
        }
        double z = 0.0;
        for (std::size_t xt = 0; xt < d_xt; ++xt)
            if (!std::isinf(logw[xt])) z += std::exp(logw[xt] - best);
        for (std::size_t xt = 0; xt < d_xt; ++xt)
            if (!std::isinf(logw[xt])) out(xt, x) = std::exp(logw[xt] - best) / z;
    }
    return out;
}

inline double discrete_mi(const std::vector<std::vector<double>>& joint) {
    std::vector<double> pa(joint.size(), 0.0), pb(joint.empty() ? 0 : joint[0].size(), 0.0);
    for (std::size_t a = 0; a < joint.size(); ++a)
        for (std::size_t b = 0; b < joint[a].size(); ++b) {
            pa[a] += joint[a][b];
            pb[b] += joint[a][b];
        }
    double mi = 0.0;
    for (std::size_t a = 0; a < joint.size(); ++a)
        for (std::size_t b = 0; b < joint[a].size(); ++b) {
            const double p = joint[a][b];
            if (p > 0.0) mi += p * std::log(p / (pa[a] * pb[b]));
        }
    return mi;
}

} // namespace detail

// I(X; X~) for a channel applied to P(x).
inline double channel_mutual_information(const std::vector<double>& px, const ClassicalChannel& q) {
    std::vector<std::vector<double>> joint(px.size(), std::vector<double>(q.n_out(), 0.0));
    for (std::size_t x = 0; x < px.size(); ++x)
        for (std::size_t xt = 0; xt < q.n_out(); ++xt) joint[x][xt] = px[x] * q(xt, x);
    return detail::discrete_mi(joint);
}

// I(X~; Y) for the composed joint sum_x q(x~|x) P(x, y).
inline double relevance_mutual_information(const JointDistribution& pxy, const ClassicalChannel& q) {
    std::vector<std::vector<double>> joint(q.n_out(), std::vector<double>(pxy.ny(), 0.0));
    for (std::size_t xt = 0; xt < q.n_out(); ++xt)
        for (std::size_t x = 0; x < pxy.nx(); ++x)
            for (std::size_t y = 0; y < pxy.ny(); ++y) joint[xt][y] += q(xt, x) * pxy(x, y);
    return detail::discrete_mi(joint);
}

// IB Lagrangian I(X;X~) - beta I(X~;Y); the alternating iteration never
// increases it, which the tests check.
inline double classical_ib_lagrangian(const JointDistribution& pxy, const ClassicalChannel& q,
                                      double beta) {
    return channel_mutual_information(pxy.marginal_x(), q) -
           beta * relevance_mutual_information(pxy, q);
}

inline ClassicalChannel uniform_channel(std::size_t d_xt, std::size_t nx) {
    ClassicalChannel q(d_xt, nx);
    for (std::size_t xt = 0; xt < d_xt; ++xt)
        for (std::size_t x = 0; x < nx; ++x) q(xt, x) = 1.0 / static_cast<double>(d_xt);
    return q;
}

// Identity-like assignment with a deterministic random perturbation.
inline ClassicalChannel perturbed_identity_channel(std::size_t d_xt, std::size_t nx, Rng& rng,
                                                   double strength = 0.05) {
    ClassicalChannel q(d_xt, nx);
    for (std::size_t x = 0; x < nx; ++x) {
        double sum = 0.0;
        for (std::size_t xt = 0; xt < d_xt; ++xt) {
            const double base = (xt == x % d_xt) ? 1.0 : 0.0;
            q(xt, x) = base + strength * rng.uniform_pos();
            sum += q(xt, x);
        }
        for (std::size_t xt = 0; xt < d_xt; ++xt) q(xt, x) /= sum;
    }
    return q;
}

inline ClassicalChannel random_stochastic_channel(std::size_t d_xt, std::size_t nx, Rng& rng) {
    ClassicalChannel q(d_xt, nx);
    for (std::size_t x = 0; x < nx; ++x) {
        double sum = 0.0;
        for (std::size_t xt = 0; xt < d_xt; ++xt) {
            q(xt, x) = -std::log(rng.uniform_pos()); // Dirichlet(1,...,1) column
            sum += q(xt, x);
        }
        for (std::size_t xt = 0; xt < d_xt; ++xt) q(xt, x) /= sum;
    }
    return q;
}

// Self-consistent iteration for the optimal-channel equation: alternate the
// channel update with the cluster marginal and decoder induced by it, until
// the channel stops moving in max-norm.
inline IBSolution ib_iterate(const JointDistribution& pxy, double beta, std::size_t d_xt,
                             const ClassicalChannel& init, const SolverConfig& config) {
    if (d_xt < 1) throw std::invalid_argument("ib_iterate: d_xt must be >= 1");
    if (beta < 0.0) throw std::invalid_argument("ib_iterate: beta must be >= 0");
    init.require_stochastic(1e-8);
    if (init.n_in() != pxy.nx() || init.n_out() != d_xt)
        throw std::invalid_argument("ib_iterate: init channel shape mismatch");

    const detail::IBWorkspace w = detail::ib_workspace(pxy);
    ClassicalChannel q = init;

    std::size_t iters = 0;
    for (; iters < config.max_fp_iters; ++iters) {
        ClassicalChannel next = detail::ib_channel_update(w, q, beta);
        double delta = 0.0;
        for (std::size_t xt = 0; xt < d_xt; ++xt)
            for (std::size_t x = 0; x < w.nx; ++x)
                delta = std::max(delta, std::abs(next(xt, x) - q(xt, x)));
        q = std::move(next);
        if (delta < config.fixed_point_tol) { ++iters; break; }
    }

    IBSolution sol;
    sol.beta = beta;
    sol.iterations = iters;
    // Self-consistency residual of the fixed-point equation at the returned channel.
    ClassicalChannel target = detail::ib_channel_update(w, q, beta);
    double res = 0.0;
    for (std::size_t xt = 0; xt < d_xt; ++xt)
        for (std::size_t x = 0; x < w.nx; ++x) res = std::max(res, std::abs(target(xt, x) - q(xt, x)));
    sol.residual = res;
    sol.I_xxt = channel_mutual_information(w.px, q);
    sol.I_xty = relevance_mutual_information(pxy, q);
    sol.channel = std::move(q);
    return sol;
}

enum class RateNormalization {
    quantum_embedding, // divide by I(X;X') = 2 H(X) of the purified embedding
    raw_nats
};

struct ClassicalRatePoint {
    double J = 0.0;        // requested fraction of I(X;Y)
    double rate = 0.0;     // normalized (or raw) compression rate
    double I_xty = 0.0;    // nats
    double I_xxt = 0.0;    // nats
    bool feasible = false;
    std::size_t evals = 0;
    ClassicalChannel channel;
};

struct ClassicalRateCurve {
    std::vector<ClassicalRatePoint> points;
    double I_xy = 0.0;
    double I_ref = 1.0;
    // per-beta solutions, for diagnostics
    std::vector<IBSolution> sweep;
};

// Sweep beta with restarts, then answer every J target from the shared
// solution pool. Minimizing over one pool makes the curve nondecreasing in J
// by construction.
inline ClassicalRateCurve classical_rate_curve(const JointDistribution& pxy_in,
                                               const std::vector<double>& j_grid, std::size_t d_xt,
                                               const SolverConfig& config,
                                               RateNormalization norm = RateNormalization::quantum_embedding) {
    config.validate();
    for (double j : j_grid)
        if (j <= 0.0 || j > 1.0) throw std::invalid_argument("classical_rate_curve: J targets must lie in (0, 1]");

    const JointDistribution pxy = pxy_in.without_zero_rows();
    const double i_xy = pxy.mutual_information();
    if (i_xy <= 1e-12) throw DegenerateInstanceError("classical_rate_curve: I(X;Y) = 0");

    const auto px = pxy.marginal_x();
    double h_x = 0.0;
    for (double p : px) h_x -= p * std::log(p);
    const double i_ref = (norm == RateNormalization::quantum_embedding) ? 2.0 * h_x : 1.0;

    const std::vector<double> betas = config.resolved_beta_grid();
    const std::size_t inits = 1 + config.restarts;
    std::vector<IBSolution> pool(betas.size() * inits);

    parallel_for(pool.size(), config.threads, [&](std::size_t idx) {
        const std::size_t bi = idx / inits;
        const std::size_t r = idx % inits;
        Rng rng(Rng::stream_key(config.seed, 0x1b, bi, r));
        ClassicalChannel init = (r == 0) ? perturbed_identity_channel(d_xt, pxy.nx(), rng)
                                         : random_stochastic_channel(d_xt, pxy.nx(), rng);
        pool[idx] = ib_iterate(pxy, betas[bi], d_xt, init, config);
    });

    ClassicalRateCurve curve;
    curve.I_xy = i_xy;
    curve.I_ref = i_ref;
    curve.sweep = pool;

    for (double j : j_grid) {
        ClassicalRatePoint pt;
        pt.J = j;
        pt.evals = pool.size();
        const IBSolution* best = nullptr;
        for (const auto& sol : pool) {
            if (sol.I_xty / i_xy < j) continue;
            if (!best || sol.I_xxt < best->I_xxt) best = &sol;
        }
        if (best) {
            pt.feasible = true;
            pt.I_xxt = best->I_xxt;
            pt.I_xty = best->I_xty;
            pt.rate = best->I_xxt / i_ref;
            pt.channel = best->channel;
        }
        curve.points.push_back(std::move(pt));
    }
    return curve;
}

} // namespace qib
