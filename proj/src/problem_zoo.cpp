#include "afp/problem_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

namespace afp {

Vec Mat::mul(const Vec& x) const {
    if (static_cast<int>(x.size()) != cols) throw std::invalid_argument("Mat::mul: size");
    Vec r(rows, 0.0);
    for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        const double* row = a.data() + static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
        r[static_cast<std::size_t>(i)] = s;
    }
    return r;
}

Vec Mat::mul_t(const Vec& x) const {
    if (static_cast<int>(x.size()) != rows) throw std::invalid_argument("Mat::mul_t: size");
    Vec r(cols, 0.0);
    for (int i = 0; i < rows; ++i) {
        const double* row = a.data() + static_cast<std::size_t>(i) * cols;
        const double xi = x[static_cast<std::size_t>(i)];
        for (int j = 0; j < cols; ++j) r[static_cast<std::size_t>(j)] += row[j] * xi;
    }
    return r;
}

namespace {

// Spectral norm of L via 50 power-iteration steps on L^T L.  The block-skew
// map [w -> L^T w; v -> -L v] has the same spectral norm.
double power_iteration_norm(const Mat& L, std::mt19937_64& rng, int iters = 50) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec v(L.cols);
    for (auto& x : v) x = gauss(rng);
    for (int it = 0; it < iters; ++it) {
        Vec u = L.mul_t(L.mul(v));
        double nn = norm2(u);
        if (nn == 0.0) return 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = u[j] / nn;
    }
    return std::sqrt(norm2(L.mul_t(L.mul(v))));
}

}  // namespace

GameInstance generate_game(int m, int n, double theta_decay, double noise_var,
                           std::uint64_t seed) {
    if (m < 1 || n < 1) throw std::invalid_argument("generate_game: m, n must be >= 1");
    if (noise_var < 0.0) throw std::invalid_argument("generate_game: noise_var must be >= 0");
    GameInstance game;
    game.m = m;
    game.p1 = game.p2 = m * m;
    game.n = n;
    game.theta_decay = theta_decay;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int p1 = game.p1;

    game.w.resize(p1);
    for (auto& wj : game.w) wj = std::abs(gauss(rng));

    // Kernel 1 - exp(-theta * |j-k|); zero diagonal by construction.
    Mat kernel(p1, p1);
    for (int j = 0; j < p1; ++j)
        for (int k = 0; k < p1; ++k)
            kernel(j, k) = 1.0 - std::exp(-theta_decay * std::abs(j - k));

    const double noise_sd = std::sqrt(noise_var);
    game.L_comp.reserve(n);
    game.L = Mat(p1, p1);
    for (int i = 0; i < n; ++i) {
        Mat Li(p1, p1);
        for (int j = 0; j < p1; ++j) {
            double w_hat = std::abs(game.w[static_cast<std::size_t>(j)] +
                                    (noise_sd > 0.0 ? noise_sd * gauss(rng) : 0.0));
            for (int k = 0; k < p1; ++k) Li(j, k) = w_hat * kernel(j, k);
        }
        for (std::size_t idx = 0; idx < Li.a.size(); ++idx) game.L.a[idx] += Li.a[idx];
        game.L_comp.push_back(std::move(Li));
    }
    for (auto& v : game.L.a) v /= n;

    game.lipschitz_estimate = power_iteration_norm(game.L, rng);
    game.lambda_bfs = game.lipschitz_estimate > 0.0 ? 0.5 / game.lipschitz_estimate : 1.0;
    return game;
}

void GameInstance::write_csv(std::ostream& os) const {
    os << "w";
    for (double v : w) os << ',' << v;
    os << '\n';
    for (int i = 0; i < n; ++i) {
        os << "w_hat_" << (i + 1);
        // Recover w_hat from the first off-diagonal column (kernel value known).
        const Mat& Li = L_comp[static_cast<std::size_t>(i)];
        double k01 = 1.0 - std::exp(-theta_decay);
        for (int j = 0; j < p1; ++j) {
            int col = j == 0 ? 1 : j - 1;
            os << ',' << Li(j, col) / (k01 > 0.0 ? k01 : 1.0);
        }
        os << '\n';
    }
}

Vec simplex_project(const Vec& v) {
    if (v.empty()) throw std::invalid_argument("simplex_project: empty input");
    if (!all_finite(v)) throw std::invalid_argument("simplex_project: non-finite input");
    Vec u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, theta = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        css += u[i];
        double cand = (css - 1.0) / static_cast<double>(i + 1);
        if (u[i] - cand > 0.0) theta = cand;
    }
    Vec r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = std::max(v[i] - theta, 0.0);
    return r;
}

Vec simplex_project_bruteforce(const Vec& v) {
    const int d = static_cast<int>(v.size());
    if (d > 20) throw std::invalid_argument("simplex_project_bruteforce: d too large");
    Vec best;
    double best_dist = std::numeric_limits<double>::infinity();
    // Try every support set: theta = (sum_S v - 1)/|S|; KKT requires
    // v_i - theta > 0 on S and v_i - theta <= 0 off S.
    for (unsigned mask = 1; mask < (1u << d); ++mask) {
        double sum = 0.0;
        int count = 0;
        for (int i = 0; i < d; ++i)
            if (mask & (1u << i)) sum += v[static_cast<std::size_t>(i)], ++count;
        double theta = (sum - 1.0) / count;
        bool ok = true;
        for (int i = 0; i < d && ok; ++i) {
            double wi = v[static_cast<std::size_t>(i)] - theta;
            if (mask & (1u << i)) ok = wi > -1e-14;
            else ok = wi <= 1e-14;
        }
        if (!ok) continue;
        Vec w(v.size(), 0.0);
        double dist = 0.0;
        for (int i = 0; i < d; ++i) {
            if (mask & (1u << i)) w[static_cast<std::size_t>(i)] =
                std::max(v[static_cast<std::size_t>(i)] - theta, 0.0);
            double diff = w[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(i)];
            dist += diff * diff;
        }
        if (dist < best_dist) {
            best_dist = dist;
            best = w;
        }
    }
    return best;
}

namespace {

// u = [u_v; u_w] -> J u = [proj(u_v); proj(u_w)]
Vec product_simplex_project(const Vec& u, int p1) {
    Vec uv(u.begin(), u.begin() + p1);
    Vec uw(u.begin() + p1, u.end());
    Vec jv = simplex_project(uv);
    Vec jw = simplex_project(uw);
    jv.insert(jv.end(), jw.begin(), jw.end());
    return jv;
}

Vec bfs_value(const Mat& L, double lambda, const Vec& u, int p1) {
    Vec Ju = product_simplex_project(u, p1);
    Vec v(Ju.begin(), Ju.begin() + p1);
    Vec w(Ju.begin() + p1, Ju.end());
    Vec g = L.mul_t(w);  // L^T w
    Vec lv = L.mul(v);   // L v
    g.reserve(u.size());
    for (double x : lv) g.push_back(-x);
    for (std::size_t i = 0; i < u.size(); ++i) g[i] += (u[i] - Ju[i]) / lambda;
    return g;
}

}  // namespace

OperatorHandle bfs_operator(std::shared_ptr<const GameInstance> game) {
    if (!game) throw std::invalid_argument("bfs_operator: null game");
    const int p1 = game->p1;
    const int p = game->p1 + game->p2;
    const double lambda = game->lambda_bfs;

    auto full = [game, lambda, p1](const Vec& u) { return bfs_value(game->L, lambda, u, p1); };
    std::vector<OperatorHandle::EvalFn> comps;
    comps.reserve(game->n);
    for (int i = 0; i < game->n; ++i) {
        const Mat* Li = &game->L_comp[static_cast<std::size_t>(i)];
        comps.push_back([game, Li, lambda, p1](const Vec& u) {
            return bfs_value(*Li, lambda, u, p1);
        });
    }

    CoCoercivityProfile prof;
    prof.beta = lambda / 2.0;  // declared assumption, checked by cocoercivity_audit
    prof.beta_bar = 0.0;
    return OperatorHandle(p, std::move(full), std::move(comps), prof);
}

double duality_gap(const Mat& L, const Vec& v, const Vec& w) {
    auto check_simplex = [](const Vec& x, const char* name) {
        double sum = 0.0;
        for (double xi : x) {
            if (xi < -1e-9) throw std::invalid_argument(std::string("duality_gap: ") + name +
                                                        " has a negative entry");
            sum += xi;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument(std::string("duality_gap: ") + name +
                                        " is not on the simplex");
    };
    check_simplex(v, "v");
    check_simplex(w, "w");
    Vec lv = L.mul(v);
    Vec ltw = L.mul_t(w);
    double hi = *std::max_element(lv.begin(), lv.end());
    double lo = *std::min_element(ltw.begin(), ltw.end());
    return hi - lo;
}

OperatorHandle quadratic_finitesum(int p, int n, double cond, std::uint64_t seed) {
    if (cond < 1.0) throw std::invalid_argument("quadratic_finitesum: cond must be >= 1");
    if (p < 1 || n < 1) throw std::invalid_argument("quadratic_finitesum: p, n must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Orthogonal Q from Gram-Schmidt on a Gaussian matrix.
    std::vector<Vec> q(p, Vec(p));
    for (auto& col : q)
        for (auto& x : col) x = gauss(rng);
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < j; ++i) axpy(-dot(q[j], q[i]), q[i], q[j]);
        double nn = norm2(q[j]);
        if (nn < 1e-12) throw std::runtime_error("quadratic_finitesum: degenerate basis");
        for (auto& x : q[j]) x /= nn;
    }

    // Spectrum log-spaced in [1/cond, 1]; A = Q diag Q^T.
    Vec spec(p);
    for (int i = 0; i < p; ++i)
        spec[static_cast<std::size_t>(i)] =
            p == 1 ? 1.0
                   : std::exp(std::log(1.0 / cond) +
                              (std::log(1.0) - std::log(1.0 / cond)) * i / (p - 1.0));
    auto A = std::make_shared<Mat>(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            double s = 0.0;
            for (int l = 0; l < p; ++l)
                s += q[l][static_cast<std::size_t>(i)] * spec[static_cast<std::size_t>(l)] *
                     q[l][static_cast<std::size_t>(j)];
            (*A)(i, j) = s;
        }

    // Component scales c_i >= 0.1 with mean exactly 1 so the finite-sum mean
    // reproduces A.
    Vec c(n);
    double mean = 0.0;
    for (auto& ci : c) {
        ci = std::max(0.1, 1.0 + 0.3 * gauss(rng));
        mean += ci;
    }
    mean /= n;
    for (auto& ci : c) ci /= mean;

    auto full = [A](const Vec& x) { return A->mul(x); };
    std::vector<OperatorHandle::EvalFn> comps;
    comps.reserve(n);
    for (int i = 0; i < n; ++i) {
        double ci = c[static_cast<std::size_t>(i)];
        comps.push_back([A, ci](const Vec& x) { return scaled(ci, A->mul(x)); });
    }

    CoCoercivityProfile prof;
    prof.beta = 1.0;  // gradient co-coercivity with lambda_max(A) = 1
    prof.beta_bar = 0.0;
    OperatorHandle op(p, std::move(full), std::move(comps), prof);
    op.set_known_root(Vec(p, 0.0));
    return op;
}

}  // namespace afp
