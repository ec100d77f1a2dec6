#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qib {

enum class ConstraintMode {
    filter, // discard candidates that miss the relevance target
    penalty // score = R_norm + weight * max(0, J_target - J_norm)
};

// Knobs for both solvers. Defaults are sized so a single grid point of the
// two-qubit examples runs in seconds.
struct SolverConfig {
    std::size_t population = 64;
    std::size_t survivors = 8;
    std::size_t iterations = 1500; // search generations per restart
    double mutation_scale = 0.3;   // initial Gaussian noise on the stacked isometry
    double mutation_decay = 0.97;  // per-generation factor
    double mutation_floor = 1e-3;
    std::size_t kraus_rank = 0; // 0 = d_in * d_out (reaches every CPTP map)
    std::size_t restarts = 4;
    std::vector<double> beta_grid; // empty = default_beta_grid()
    double fixed_point_tol = 1e-10;
    std::size_t max_fp_iters = 20000;
    std::uint64_t seed = 1;
    ConstraintMode constraint_mode = ConstraintMode::filter;
    double penalty_weight = 10.0;
    double fp_damping = 0.3;
    // stop a restart early once the best score stops improving
    std::size_t stall_generations = 300;
    double stall_tol = 1e-9;
    unsigned threads = 0; // 0 = hardware concurrency

    void validate() const {
        if (population == 0 || survivors == 0 || survivors > population)
            throw std::invalid_argument("SolverConfig: need 0 < survivors <= population");
        if (mutation_scale <= 0 || mutation_decay <= 0 || mutation_floor <= 0)
            throw std::invalid_argument("SolverConfig: mutation scales must be positive");
        if (fixed_point_tol <= 0) throw std::invalid_argument("SolverConfig: fixed_point_tol must be positive");
        if (fp_damping <= 0 || fp_damping > 1)
            throw std::invalid_argument("SolverConfig: fp_damping must be in (0, 1]");
    }

    // Geometric grid 2^-4 .. 2^10, 30 points.
    static std::vector<double> default_beta_grid() {
        return geometric_grid(std::pow(2.0, -4), std::pow(2.0, 10), 30);
    }

    static std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
        if (lo <= 0 || hi < lo || count < 2) throw std::invalid_argument("geometric_grid: bad bounds");
        std::vector<double> g(count);
        const double step = std::log(hi / lo) / static_cast<double>(count - 1);
        for (std::size_t i = 0; i < count; ++i) g[i] = lo * std::exp(step * static_cast<double>(i));
        return g;
    }

    std::vector<double> resolved_beta_grid() const {
        return beta_grid.empty() ? default_beta_grid() : beta_grid;
    }
};

} // namespace qib
