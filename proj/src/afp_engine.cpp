#include "afp/afp_engine.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <string>

#include "afp/oracle_suite.hpp"

namespace afp {

void SolverConfig::validate(bool delayed_oracle_attached) const {
    if (!(s > 1.0)) throw std::invalid_argument("solver config: s must be > 1");
    if (gamma < 0.0 || gamma > 1.0)
        throw std::invalid_argument("solver config: gamma must lie in [0,1]");
    if (tau < 0) throw std::invalid_argument("solver config: tau must be >= 0");
    if (eta_mode == EtaMode::Theory && s < 1.0 + 3.0 * gamma)
        throw std::invalid_argument("solver config: theory mode requires s >= 1 + 3*gamma");
    if (delayed_oracle_attached && tau < 1)
        throw std::invalid_argument("solver config: tau >= 1 required with a delayed oracle");
    if (k_max < 0) throw std::invalid_argument("solver config: k_max must be >= 0");
    if (eps_rel < 0.0) throw std::invalid_argument("solver config: eps_rel must be >= 0");
    if (eta_mode == EtaMode::Heuristic && eta < 0.0)
        throw std::invalid_argument("solver config: eta must be >= 0");
}

ScheduleValues schedule(long k, const SolverConfig& cfg, double eta) {
    if (k < 0) throw std::invalid_argument("schedule: k must be >= 0");
    if (!(eta > 0.0)) throw std::invalid_argument("schedule: eta must be > 0");
    double t = static_cast<double>(k) + 3.0 * cfg.s + cfg.tau;
    assert(t > cfg.s && "schedule: t_k <= s cannot happen under config invariants");
    return ScheduleValues{t, cfg.gamma, eta * t / (2.0 * (t - cfg.s))};
}

double theory_stepsize(const CoCoercivityProfile& profile, const StepsizeBound& bound,
                       const SolverConfig& cfg) {
    const double s = cfg.s, gamma = cfg.gamma;
    const double alpha = bound.alpha(s);
    if (!(bound.kappa > alpha && bound.kappa <= 1.0))
        throw std::invalid_argument("theory_stepsize: hypothesis alpha < kappa <= 1 violated");
    if (bound.Theta * profile.beta_bar > bound.Theta_hat * profile.beta + 1e-15)
        throw std::invalid_argument(
            "theory_stepsize: hypothesis Theta*beta_bar <= Theta_hat*beta violated");
    if (profile.beta <= 0.0 && profile.beta_bar <= 0.0)
        throw std::invalid_argument("theory_stepsize: need beta > 0 or beta_bar > 0");

    const double theta = bound.theta(s);
    const double Lambda = bound.Lambda(s, gamma);
    const double denom = 7.0 * Lambda * bound.Theta + 3.0 * theta * (1.0 + cfg.tau);

    // First case applies when beta_bar is small enough relative to the
    // beta-driven bound (always when beta = 0 disables the second case).
    if (profile.beta_bar > 0.0 && bound.Theta_hat > 0.0) {
        bool first_case = true;
        if (profile.beta > 0.0) {
            double threshold = 7.0 * Lambda * bound.Theta_hat * profile.beta / denom;
            first_case = profile.beta_bar <= threshold;
        }
        if (first_case) return 3.0 * theta * profile.beta_bar / (7.0 * Lambda * bound.Theta_hat);
    }
    if (profile.beta <= 0.0)
        throw std::invalid_argument("theory_stepsize: beta = 0 outside the beta_bar case");
    return 3.0 * theta * profile.beta / denom;
}

double resolve_eta(const OperatorHandle& op, const SolverConfig& cfg) {
    if (cfg.eta_mode == EtaMode::Theory) return theory_stepsize(op.profile(), cfg.bound, cfg);
    if (cfg.eta > 0.0) return cfg.eta;
    return 1.0 / (1.0 + cfg.tau);
}

void afp_step(SolverState& state, const Vec& estimator, const ScheduleValues& sched, double s) {
    if (!all_finite(estimator))
        throw std::runtime_error("afp_step: non-finite estimator at k=" +
                                 std::to_string(state.k));
    const double t = sched.t_k;
    // x' = y - eta_k * G~
    state.x = state.y;
    axpy(-sched.eta_k, estimator, state.x);
    // z' = z + (gamma_k/s) (x' - y)
    Vec dx = sub(state.x, state.y);
    axpy(sched.gamma_k / s, dx, state.z);
    // y' = ((t-s)/t) x' + (s/t) z'
    for (std::size_t i = 0; i < state.y.size(); ++i)
        state.y[i] = ((t - s) / t) * state.x[i] + (s / t) * state.z[i];
    state.g_tilde = estimator;
    state.sched = sched;
    state.k += 1;
}

void km_step(Vec& y, const Vec& Gy, double lambda_km, double beta) {
    if (!(lambda_km > 0.0 && lambda_km < 1.0))
        throw std::invalid_argument("km_step: lambda_km must lie in (0,1)");
    if (!all_finite(Gy)) throw std::runtime_error("km_step: non-finite operator value");
    axpy(-lambda_km * 2.0 * beta, Gy, y);
}

double lyapunov_L(const SolverState& state, const Vec& x_star, const ScheduleValues& prev_sched,
                  const Vec& Gy, double s, double eta, bool check_lower_bound) {
    const double t_prev = prev_sched.t_k;
    const double a_k = prev_sched.eta_k * t_prev * (t_prev - s);
    const double L = 0.5 * a_k * norm2sq(Gy) +
                     s * t_prev * dot(Gy, sub(state.y, state.z)) +
                     s * s * (s - 1.0) / (2.0 * prev_sched.eta_k * prev_sched.gamma_k) *
                         norm2sq(sub(state.z, x_star));
    if (check_lower_bound) {
        const double zdist = norm2sq(sub(state.z, x_star));
        const double lb = eta * t_prev * t_prev / 8.0 * norm2sq(Gy) +
                          s * s * (t_prev - 3.0 * s) / (eta * t_prev) * zdist;
        if (L < lb - 1e-9 * (1.0 + std::abs(lb)))
            throw std::runtime_error("lyapunov_L: lower bound violated at k=" +
                                     std::to_string(state.k));
    }
    return L;
}

namespace {

int effective_stride(const OperatorHandle& op, const SolverConfig& cfg) {
    if (cfg.log_stride > 0) return cfg.log_stride;
    double work = static_cast<double>(op.dimension()) *
                  (op.finite_sum() ? op.n_components() : 1);
    return work <= 1e6 ? 1 : 10;
}

}  // namespace

Trace run(OperatorHandle& op, OracleStrategy& oracle, const SolverConfig& cfg, const Vec& y0) {
    cfg.validate(false);
    const double eta = resolve_eta(op, cfg);
    const int stride = effective_stride(op, cfg);

    SolverState state;
    state.x = state.y = state.z = y0;  // z^0 := y^0
    oracle.reset(op, y0);

    Trace trace;
    double res0 = norm2(op.evaluate_uncounted(y0));
    if (!std::isfinite(res0)) throw std::runtime_error("run: non-finite residual at k=0");
    int last_tau_used = 0;
    std::optional<double> last_slack;

    for (long k = 0;; ++k) {
        bool log_now = (k % stride == 0) || k == cfg.k_max;
        double res = -1.0, rel = -1.0;
        if (log_now || cfg.eps_rel > 0.0) {
            res = norm2(op.evaluate_uncounted(state.y));
            if (!std::isfinite(res))
                throw std::runtime_error("run: non-finite residual at k=" + std::to_string(k));
            rel = res0 > 0.0 ? res / res0 : res;
        }
        bool stop_eps = cfg.eps_rel > 0.0 && rel >= 0.0 && rel <= cfg.eps_rel;
        if (log_now || stop_eps) {
            ScheduleValues sc = schedule(k, cfg, eta);
            trace.rows.push_back(TraceRecord{k, sc.t_k, sc.eta_k, res, rel, last_tau_used,
                                             op.full_passes(), last_slack, cfg.seed});
        }
        trace.iterations = k;
        if (stop_eps) {
            trace.converged = true;
            break;
        }
        if (k >= cfg.k_max) break;

        Estimate est = oracle.next(op, state.y, k);
        last_tau_used = est.tau_used;
        last_slack = est.monitor_slack;
        afp_step(state, est.g, schedule(k, cfg, eta), cfg.s);
    }
    trace.final_y = state.y;
    return trace;
}

Trace run_km(OperatorHandle& op, const SolverConfig& cfg, const Vec& y0, double lambda_km) {
    const double beta = op.profile().beta;
    if (!(beta > 0.0)) throw std::invalid_argument("run_km: operator must declare beta > 0");
    const int stride = effective_stride(op, cfg);

    Vec y = y0;
    Trace trace;
    double res0 = norm2(op.evaluate_uncounted(y0));

    for (long k = 0;; ++k) {
        double res = norm2(op.evaluate_uncounted(y));
        if (!std::isfinite(res))
            throw std::runtime_error("run_km: non-finite residual at k=" + std::to_string(k));
        double rel = res0 > 0.0 ? res / res0 : res;
        if (k % stride == 0 || k == cfg.k_max)
            trace.rows.push_back(
                TraceRecord{k, 0.0, lambda_km * 2.0 * beta, res, rel, 0,
                            op.full_passes(), std::nullopt, cfg.seed});
        trace.iterations = k;
        if (cfg.eps_rel > 0.0 && rel <= cfg.eps_rel) {
            trace.converged = true;
            break;
        }
        if (k >= cfg.k_max) break;
        Vec Gy = op.evaluate(y);
        km_step(y, Gy, lambda_km, beta);
    }
    trace.final_y = y;
    return trace;
}

}  // namespace afp
