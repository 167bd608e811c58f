#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "afp/vec.hpp"

namespace afp {

// One per-iteration log row.  monitor_slack is only present when the
// (test-mode) error monitor is enabled on the oracle.
struct TraceRecord {
    long k = 0;
    double t_k = 0.0;
    double eta_k = 0.0;
    double res_abs = 0.0;
    double res_rel = 0.0;
    int tau_used = 0;
    double full_passes = 0.0;
    std::optional<double> monitor_slack;
    std::uint64_t seed = 0;
};

struct Trace {
    std::vector<TraceRecord> rows;
    bool converged = false;
    long iterations = 0;  // last iteration index reached
    Vec final_y;          // iterate at the last iteration
};

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

// Least-squares fit of log(res_abs^2) against log(k + tau) over rows with
// k in [k_lo, k_hi].  Requires at least 10 usable points.
FitResult rate_slope(const Trace& trace, long k_lo, long k_hi, int tau = 0);

// Same fit on raw (k, res_abs) pairs, e.g. seed-averaged traces.
FitResult rate_slope(const std::vector<std::pair<long, double>>& pts, long k_lo, long k_hi,
                     int tau = 0);

// R0^2 of the deterministic residual bound:
//   R0^2 = eta*(3s+tau-1)^2/2 * |Gy0|^2 + 2 s^3/(eta*gamma) * |y0 - x*|^2.
double residual_bound_R0_sq(double eta, double s, int tau, double gamma, double res0,
                            double dist0);

// Max over logged k of res_abs^2 * eta*(k+3s+tau-1)^2/4 - R0_sq.
// Nonpositive return means the pointwise bound holds along the whole trace.
double bound_check(const Trace& trace, double R0_sq, double eta, double s, int tau);

// Ordinary least-squares fit of K (iterations-to-epsilon) against tau.
FitResult tau_sweep_fit(const std::vector<std::pair<int, long>>& pairs);

// First iteration k with res_rel <= eps, or -1 if never reached.
long iterations_to(const Trace& trace, double eps_rel);

}  // namespace afp
