#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "afp/diagnostics.hpp"
#include "afp/operator_core.hpp"
#include "afp/vec.hpp"

namespace afp {

class OracleStrategy;  // oracle_suite

enum class EtaMode { Theory, Heuristic };

// Constants of the theoretical stepsize bound: kappa, Theta, Theta_hat are
// declared by the oracle variant in use; alpha, theta, Lambda are derived.
struct StepsizeBound {
    double kappa = 1.0;
    double Theta = 0.0;
    double Theta_hat = 0.0;

    double alpha(double s) const { return (2.0 * s + 1.0) / ((s + 1.0) * (s + 1.0)); }
    double theta(double s) const { return 1.0 - (1.0 - kappa) * alpha(s); }
    double Lambda(double s, double gamma) const { return 1.0 + s - gamma; }
};

struct SolverConfig {
    double s = 1.1;
    double gamma = 1.0;
    int tau = 0;
    EtaMode eta_mode = EtaMode::Heuristic;
    // Explicit heuristic stepsize; 0 means "use the default 1/(1+tau)".
    double eta = 0.0;
    long k_max = 10000;
    double eps_rel = 0.0;
    std::uint64_t seed = 0;
    // Residual-logging stride; 0 = auto (1 when p*n <= 1e6, else 10).
    int log_stride = 0;
    StepsizeBound bound;

    // Throws std::invalid_argument naming the violated requirement.
    void validate(bool delayed_oracle_attached) const;
};

struct ScheduleValues {
    double t_k;
    double gamma_k;
    double eta_k;
};

// t_k = k + 3s + tau, gamma_k = gamma, eta_k = eta * t_k / (2 (t_k - s)).
ScheduleValues schedule(long k, const SolverConfig& cfg, double eta);

// Case-split theoretical stepsize; throws std::invalid_argument naming the
// violated hypothesis (kappa <= alpha, s < 1+3gamma, Theta*beta_bar > Theta_hat*beta, ...).
double theory_stepsize(const CoCoercivityProfile& profile, const StepsizeBound& bound,
                       const SolverConfig& cfg);

// Resolved base stepsize for a run: theory_stepsize in theory mode, otherwise
// the explicit heuristic value (default 1/(1+tau)).
double resolve_eta(const OperatorHandle& op, const SolverConfig& cfg);

struct SolverState {
    Vec x, y, z;
    long k = 0;
    Vec g_tilde;
    ScheduleValues sched{0.0, 0.0, 0.0};
};

// One AFP update:
//   x' = y - eta_k * g_tilde
//   z' = z + (gamma_k / s) (x' - y)
//   y' = ((t_k - s)/t_k) x' + (s/t_k) z'
void afp_step(SolverState& state, const Vec& estimator, const ScheduleValues& sched, double s);

// KM baseline update y' = y - lambda_km * (2 beta) * Gy.
void km_step(Vec& y, const Vec& Gy, double lambda_km, double beta);

// Lyapunov diagnostic L_k evaluated at state (y^k, z^k) with the schedule of
// step k-1; requires a known root.  When check_lower_bound is set (valid for
// s >= 1+3gamma) the theoretical lower bound is asserted and a violation
// throws std::runtime_error.
double lyapunov_L(const SolverState& state, const Vec& x_star, const ScheduleValues& prev_sched,
                  const Vec& Gy, double s, double eta, bool check_lower_bound = false);

// Main driver: iterates AFP with the given oracle until k_max or the relative
// residual drops below eps_rel.  The logged true residual is never fed back
// into the iteration.
Trace run(OperatorHandle& op, OracleStrategy& oracle, const SolverConfig& cfg, const Vec& y0);

// KM baseline driver with the same logging conventions.
Trace run_km(OperatorHandle& op, const SolverConfig& cfg, const Vec& y0, double lambda_km);

}  // namespace afp
