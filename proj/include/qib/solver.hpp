#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qib/channels.hpp"
#include "qib/errors.hpp"
#include "qib/parallel.hpp"
#include "qib/presets.hpp"
#include "qib/random.hpp"
#include "qib/rng.hpp"
#include "qib/solver_config.hpp"
#include "qib/states.hpp"

namespace qib {

// Everything fixed by the input state rho_xy: marginal, purification, and
// the two reference informations that normalize the rate curve.
struct ProblemInstance {
    BipartiteState rho_xy;  // (x, y)
    DensityMatrix rho_x;    // (x)
    BipartiteState tau_xpx; // (x', x), pure
    double I_xy = 0.0;      // I(X;Y), nats
    double I_xpx = 0.0;     // I(X';X) = 2 S(rho_x), global state is pure
    double S_x = 0.0;
    double S_y = 0.0;
    std::size_t d_x = 0;
    std::size_t d_y = 0;

    static ProblemInstance build(const BipartiteState& rho_xy) {
        if (rho_xy.label(0) != Label::x || rho_xy.label(1) != Label::y)
            throw std::invalid_argument("ProblemInstance: state must carry factors (x, y)");
        ProblemInstance inst;
        inst.rho_xy = rho_xy;
        inst.d_x = rho_xy.dims().factor(0).dim;
        inst.d_y = rho_xy.dims().factor(1).dim;
        inst.rho_x = rho_xy.marginal(Label::x);
        inst.S_x = von_neumann_entropy(inst.rho_x);
        inst.S_y = von_neumann_entropy(rho_xy.marginal(Label::y));
        inst.I_xy = inst.S_x + inst.S_y - von_neumann_entropy(rho_xy.state());
        if (inst.I_xy <= 1e-12)
            throw DegenerateInstanceError("ProblemInstance: I(X;Y) = 0, nothing to preserve");
        inst.I_xpx = 2.0 * inst.S_x;
        inst.tau_xpx = purify(inst.rho_x, Label::x_prime);
        return inst;
    }
};

struct Evaluation {
    double I_xty = 0.0;   // I(X~;Y) on rho_{x~ y}, nats
    double I_xp_xt = 0.0; // I(X';X~) on tau_{x' x~}, nats
    double J_norm = 0.0;  // I_xty / I(X;Y)
    double R_norm = 0.0;  // I_xp_xt / I(X';X)
};

// Objective and constraint of the bottleneck problem for one channel.
inline Evaluation evaluate(const ProblemInstance& inst, const KrausChannel& n) {
    if (n.d_in != inst.d_x) throw std::invalid_argument("evaluate: channel input dim mismatch");

    const BipartiteState rho_xty = apply_channel(n, inst.rho_xy, Label::x);
    const BipartiteState tau_xpxt = apply_channel(n, inst.tau_xpx, Label::x);

    const double s_xt = von_neumann_entropy(rho_xty.marginal(Label::x_tilde));
    const double s_xty = von_neumann_entropy(rho_xty.state());
    const double s_xt_tau = von_neumann_entropy(tau_xpxt.marginal(Label::x_tilde));
    const double s_xpxt = von_neumann_entropy(tau_xpxt.state());

    Evaluation ev;
    ev.I_xty = s_xt + inst.S_y - s_xty;
    ev.I_xp_xt = s_xt_tau + inst.S_x - s_xpxt;
    ev.J_norm = ev.I_xty / inst.I_xy;
    ev.R_norm = ev.I_xp_xt / inst.I_xpx;
    return ev;
}

// Random CPTP map: Kraus operators are the d_out-row blocks of a Haar
// isometry from d_in to d_out * kraus_rank, so completeness holds by
// construction.
inline KrausChannel random_channel(std::size_t d_in, std::size_t d_out, std::size_t kraus_rank,
                                   Rng& rng) {
    if (kraus_rank < 1) throw std::invalid_argument("random_channel: kraus_rank must be >= 1");
    const ComplexMatrix v = random_isometry(d_in, d_out * kraus_rank, rng);
    KrausChannel n;
    n.d_in = d_in;
    n.d_out = d_out;
    for (std::size_t k = 0; k < kraus_rank; ++k) {
        ComplexMatrix op(d_out, d_in);
        for (std::size_t a = 0; a < d_out; ++a)
            for (std::size_t i = 0; i < d_in; ++i) op(a, i) = v(k * d_out + a, i);
        n.kraus.push_back(std::move(op));
    }
    return n;
}

// Gaussian kick on the stacked isometry, re-orthonormalized. Stays CPTP for
// any scale; action is continuous in scale around zero.
inline KrausChannel mutate_channel(const KrausChannel& n, double scale, Rng& rng) {
    if (scale <= 0.0) throw std::invalid_argument("mutate_channel: scale must be > 0");
    const std::size_t rank = n.kraus.size();
    ComplexMatrix v(rank * n.d_out, n.d_in);
    for (std::size_t k = 0; k < rank; ++k)
        for (std::size_t a = 0; a < n.d_out; ++a)
            for (std::size_t i = 0; i < n.d_in; ++i)
                v(k * n.d_out + a, i) = n.kraus[k](a, i) + scale * cxd(rng.gaussian(), rng.gaussian());
    detail::orthonormalize_columns(v, rng);

    KrausChannel out;
    out.d_in = n.d_in;
    out.d_out = n.d_out;
    for (std::size_t k = 0; k < rank; ++k) {
        ComplexMatrix op(n.d_out, n.d_in);
        for (std::size_t a = 0; a < n.d_out; ++a)
            for (std::size_t i = 0; i < n.d_in; ++i) op(a, i) = v(k * n.d_out + a, i);
        out.kraus.push_back(std::move(op));
    }
    return out;
}

// Extend the Kraus list with zero operators. The action is unchanged, but
// mutations of the stacked isometry can then explore every CPTP direction;
// a rank-1 seed would breed only unitaries.
inline KrausChannel pad_to_rank(KrausChannel n, std::size_t rank) {
    while (n.kraus.size() < rank) n.kraus.push_back(ComplexMatrix(n.d_out, n.d_in));
    return n;
}

enum class SearchFailure { none, target_above_one, budget_exhausted };

struct SearchResult {
    bool found = false;
    Evaluation eval;
    KrausChannel channel;
    std::size_t evaluations = 0;
    std::size_t generations = 0;
    SearchFailure failure = SearchFailure::none;
};

namespace detail {

struct Candidate {
    KrausChannel channel;
    Evaluation eval;
};

inline bool candidate_feasible(const Evaluation& ev, double j_target) {
    return ev.J_norm >= j_target - 1e-9;
}

// Ordering used for survivor selection. Feasible candidates come first,
// cheapest rate first; infeasible ones are ranked by how close they are to
// the constraint, which gives the search a path into the feasible region.
inline bool candidate_better(const Candidate& a, const Candidate& b, double j_target,
                             const SolverConfig& cfg) {
    if (cfg.constraint_mode == ConstraintMode::penalty) {
        const double sa = a.eval.R_norm + cfg.penalty_weight * std::max(0.0, j_target - a.eval.J_norm);
        const double sb = b.eval.R_norm + cfg.penalty_weight * std::max(0.0, j_target - b.eval.J_norm);
        return sa < sb;
    }
    const bool fa = candidate_feasible(a.eval, j_target);
    const bool fb = candidate_feasible(b.eval, j_target);
    if (fa != fb) return fa;
    if (fa) return a.eval.R_norm < b.eval.R_norm;
    return a.eval.J_norm > b.eval.J_norm;
}

inline SearchResult search_one_restart(const ProblemInstance& inst, double j_target,
                                       const SolverConfig& cfg, std::size_t restart,
                                       const std::optional<KrausChannel>& warm_start,
                                       std::uint64_t point_key) {
    const std::size_t d = inst.d_x;
    const std::size_t rank = cfg.kraus_rank == 0 ? d * d : cfg.kraus_rank;

    SearchResult res;
    std::vector<Candidate> pop;
    pop.reserve(cfg.population + 2);

    // The identity channel anchors the population: it is feasible for every
    // J <= 1, which random draws essentially never are near J = 1.
    pop.push_back({pad_to_rank(identity_channel(d), rank), {}});
    if (warm_start) pop.push_back({pad_to_rank(*warm_start, rank), {}});
    {
        Rng rng(Rng::stream_key(cfg.seed, point_key, restart, 0xffffffffULL));
        while (pop.size() < cfg.population) pop.push_back({random_channel(d, d, rank, rng), {}});
    }
    for (auto& c : pop) {
        c.eval = evaluate(inst, c.channel);
        ++res.evaluations;
    }

    auto better = [&](const Candidate& a, const Candidate& b) {
        return candidate_better(a, b, j_target, cfg);
    };

    std::optional<Candidate> best_feasible;
    double progress_metric = std::numeric_limits<double>::infinity();
    std::size_t stall = 0;

    for (std::size_t gen = 0; gen < cfg.iterations; ++gen) {
        res.generations = gen + 1;
        std::stable_sort(pop.begin(), pop.end(), better);
        for (const auto& c : pop) {
            if (candidate_feasible(c.eval, j_target) &&
                (!best_feasible || c.eval.R_norm < best_feasible->eval.R_norm))
                best_feasible = c;
        }
        pop.resize(cfg.survivors);

        // Stall detection: stop once neither the best feasible rate nor the
        // bootstrap progress toward feasibility moves.
        const double metric = best_feasible ? best_feasible->eval.R_norm : 2.0 - pop.front().eval.J_norm;
        if (metric < progress_metric - cfg.stall_tol) {
            progress_metric = metric;
            stall = 0;
        } else if (++stall >= cfg.stall_generations) {
            break;
        }

        const double scale =
            std::max(cfg.mutation_scale * std::pow(cfg.mutation_decay, static_cast<double>(gen)),
                     cfg.mutation_floor);
        const std::size_t children = cfg.population - pop.size();
        for (std::size_t c = 0; c < children; ++c) {
            Rng rng(Rng::stream_key(cfg.seed, point_key, restart, gen, c));
            Candidate child;
            child.channel = mutate_channel(pop[c % cfg.survivors].channel, scale, rng);
            child.eval = evaluate(inst, child.channel);
            ++res.evaluations;
            pop.push_back(std::move(child));
        }
    }

    if (best_feasible) {
        res.found = true;
        res.eval = best_feasible->eval;
        res.channel = best_feasible->channel;
    } else {
        res.failure = SearchFailure::budget_exhausted;
    }
    return res;
}

} // namespace detail

// Population search over CPTP maps: keep the feasible channels with the
// lowest rate, refill by mutating them with a geometrically decaying scale,
// repeat until stable. Deterministic given the seed, independent of the
// thread count.
inline SearchResult random_search(const ProblemInstance& inst, double j_target,
                                  const SolverConfig& cfg,
                                  const std::optional<KrausChannel>& warm_start = std::nullopt,
                                  std::uint64_t point_key = 0) {
    cfg.validate();
    if (j_target <= 0.0) throw std::invalid_argument("random_search: J target must be positive");
    if (j_target > 1.0 + 1e-9) {
        SearchResult res;
        res.failure = SearchFailure::target_above_one; // data processing forbids J_norm > 1
        return res;
    }

    std::vector<SearchResult> per_restart(std::max<std::size_t>(cfg.restarts, 1));
    parallel_for(per_restart.size(), cfg.threads, [&](std::size_t r) {
        per_restart[r] = detail::search_one_restart(inst, j_target, cfg, r, warm_start, point_key);
    });

    SearchResult best;
    best.failure = SearchFailure::budget_exhausted;
    for (const auto& r : per_restart) {
        best.evaluations += r.evaluations;
        best.generations += r.generations;
        if (r.found && (!best.found || r.eval.R_norm < best.eval.R_norm)) {
            best.found = true;
            best.failure = SearchFailure::none;
            best.eval = r.eval;
            best.channel = r.channel;
        }
    }
    return best;
}

struct RatePoint {
    double J = 0.0;
    Evaluation eval;
    KrausChannel channel;
    bool feasible = false;
    std::size_t evaluations = 0;
    std::size_t generations = 0;
};

struct RateCurve {
    std::vector<RatePoint> points; // J ascending
};

// Rate curve over a grid of relevance targets. Points are solved in
// descending J order so each search is warm-started with the previous best
// channel (feasible for every lower target); a final pass replaces any point
// by a cheaper feasible channel found at higher J, which makes the curve
// exactly nondecreasing.
inline RateCurve rate_curve(const ProblemInstance& inst, const std::vector<double>& j_grid,
                            const SolverConfig& cfg) {
    if (j_grid.empty()) throw std::invalid_argument("rate_curve: empty grid");
    for (std::size_t i = 0; i < j_grid.size(); ++i) {
        if (j_grid[i] <= 0.0 || j_grid[i] > 1.0)
            throw std::invalid_argument("rate_curve: J targets must lie in (0, 1]");
        if (i > 0 && j_grid[i] <= j_grid[i - 1])
            throw std::invalid_argument("rate_curve: grid must be strictly increasing");
    }

    RateCurve curve;
    curve.points.resize(j_grid.size());
    std::optional<KrausChannel> warm;
    for (std::size_t k = j_grid.size(); k-- > 0;) {
        RatePoint& pt = curve.points[k];
        pt.J = j_grid[k];
        const SearchResult res = random_search(inst, j_grid[k], cfg, warm, k + 1);
        pt.feasible = res.found;
        pt.evaluations = res.evaluations;
        pt.generations = res.generations;
        if (res.found) {
            pt.eval = res.eval;
            pt.channel = res.channel;
            warm = res.channel;
        }
    }

    // monotone repair: a channel feasible at higher J is feasible here too
    for (std::size_t k = curve.points.size() - 1; k-- > 0;) {
        const RatePoint& above = curve.points[k + 1];
        RatePoint& here = curve.points[k];
        if (above.feasible && (!here.feasible || above.eval.R_norm < here.eval.R_norm)) {
            here.eval = above.eval;
            here.channel = above.channel;
            here.feasible = true;
        }
    }
    return curve;
}

struct ConvexityReport {
    bool pass = false;
    // (index i, second difference R_{i+1} - 2 R_i + R_{i-1}) for violations
    std::vector<std::pair<std::size_t, double>> violations;
};

// Numerical convexity check: second differences of the rate over the point
// sequence must not dip below -slack.
inline ConvexityReport convexity_check(const RateCurve& curve, double slack) {
    if (curve.points.size() < 3) throw std::invalid_argument("convexity_check: need at least 3 points");
    ConvexityReport rep;
    for (std::size_t i = 1; i + 1 < curve.points.size(); ++i) {
        const double d2 = curve.points[i + 1].eval.R_norm - 2.0 * curve.points[i].eval.R_norm +
                          curve.points[i - 1].eval.R_norm;
        if (d2 < -slack) rep.violations.emplace_back(i, d2);
    }
    rep.pass = rep.violations.empty();
    return rep;
}

struct DephasingBenchmarkReport {
    double J_norm = 0.0;
    double R_norm = 0.0;
    double I_xty = 0.0;
    double I_xp_xt = 0.0;
    bool pass = false;
};

// Analytic endpoint check: on a diagonal state the dephasing channel keeps
// all relevance (J = 1) at exactly half the reference rate (R = 1/2).
inline DephasingBenchmarkReport analytic_dephasing_benchmark(double p1, double p2, double p3,
                                                             double p4, double tol = 1e-10) {
    const ProblemInstance inst = ProblemInstance::build(classical_state(p1, p2, p3, p4));
    const Evaluation ev = evaluate(inst, dephasing_channel());
    DephasingBenchmarkReport rep;
    rep.J_norm = ev.J_norm;
    rep.R_norm = ev.R_norm;
    rep.I_xty = ev.I_xty;
    rep.I_xp_xt = ev.I_xp_xt;
    rep.pass = std::abs(ev.J_norm - 1.0) <= tol && std::abs(ev.R_norm - 0.5) <= tol;
    return rep;
}

} // namespace qib
