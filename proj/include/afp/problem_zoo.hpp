#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>

#include "afp/operator_core.hpp"
#include "afp/vec.hpp"

namespace afp {

// Dense row-major matrix, just big enough for the benchmark generators.
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

    Vec mul(const Vec& x) const;    // A x
    Vec mul_t(const Vec& x) const;  // A^T x
};

// Policeman-vs-Burglar bilinear game on m^2 houses:
//   L^(i)_{j,k} = w_hat^(i)_j * (1 - exp(-theta_decay * |j-k|)),
// w_j = |N(0,1)|, w_hat^(i)_j = |w_j + N(0, noise_var)|.
struct GameInstance {
    int m = 0;
    int p1 = 0, p2 = 0;
    int n = 0;
    double theta_decay = 0.8;
    Vec w;                    // base wealths
    std::vector<Mat> L_comp;  // n payoff observations L^(i)
    Mat L;                    // mean payoff
    double lipschitz_estimate = 0.0;  // spectral norm of the block-skew map
    double lambda_bfs = 0.0;

    void write_csv(std::ostream& os) const;  // w then the w_hat matrix
};

GameInstance generate_game(int m, int n, double theta_decay, double noise_var,
                           std::uint64_t seed);

// Euclidean projection onto the standard simplex (sort-and-threshold).
Vec simplex_project(const Vec& v);

// Reference projection via exhaustive KKT support search; O(2^d), test use only.
Vec simplex_project_bruteforce(const Vec& v);

// Backward-forward splitting operator of the game as a finite-sum handle of
// dimension p1+p2: component i maps u to G_i(J u) + (1/lambda)(u - J u) with
// J the product-simplex projection.  Declared beta = lambda/2 (audited).
OperatorHandle bfs_operator(std::shared_ptr<const GameInstance> game);

// gap = max_j (L v)_j - min_k (L^T w)_k; zero iff (v, w) is a saddle point.
double duality_gap(const Mat& L, const Vec& v, const Vec& w);

// Synthetic finite-sum quadratic G_i x = c_i * A x with mean A = Q diag(spec) Q^T,
// spectrum log-spaced in [1/cond, 1]; known root x* = 0, beta = 1.
OperatorHandle quadratic_finitesum(int p, int n, double cond, std::uint64_t seed);

}  // namespace afp
