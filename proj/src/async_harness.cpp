#include "afp/async_harness.hpp"

#include <algorithm>
#include <ostream>

namespace afp {

namespace {

// Raw (pre-threshold) delay for the worker_speeds model: the active worker
// rotates with k, and its delay is the number of iterations since that
// worker's last commit, i.e. its integer service time.
int worker_speeds_delay(const DelayModel& model, long k) {
    if (model.worker_speeds.empty())
        throw std::invalid_argument("DelayModel: worker_speeds requires at least one worker");
    int w = static_cast<int>(k % static_cast<long>(model.worker_speeds.size()));
    return std::max(0, model.worker_speeds[static_cast<std::size_t>(w)] - 1);
}

}  // namespace

int sample_delay(const DelayModel& model, long k, std::mt19937_64& rng) {
    if (k < 0) throw std::invalid_argument("sample_delay: k must be >= 0");
    const int cap = static_cast<int>(std::min<long>(model.tau_cap, k));
    int d = 0;
    switch (model.kind) {
        case DelayModel::Kind::Fixed:
            d = model.fixed_d;
            break;
        case DelayModel::Kind::Uniform: {
            std::uniform_int_distribution<int> dist(0, model.tau_cap);
            d = dist(rng);
            break;
        }
        case DelayModel::Kind::WorkerSpeeds: {
            // Bounded retry: resample up to tau_cap+1 times for a delay within
            // the threshold, then fall back to tau_cap itself.
            d = worker_speeds_delay(model, k);
            int attempts = 0;
            while (d > model.tau_cap && attempts < model.tau_cap + 1) {
                d = worker_speeds_delay(model, k + attempts + 1);
                ++attempts;
            }
            if (d > model.tau_cap) d = model.tau_cap;
            break;
        }
    }
    return std::clamp(d, 0, cap);
}

void EventLog::write_csv(std::ostream& os) const {
    os << "k,worker,issued,commit,accepted\n";
    for (const auto& e : events)
        os << e.k << ',' << e.worker << ',' << e.issued << ',' << e.commit << ','
           << (e.accepted ? 1 : 0) << '\n';
}

long EventLog::max_staleness() const {
    long m = 0;
    for (const auto& e : events)
        if (e.accepted) m = std::max(m, e.k - e.issued);
    return m;
}

ConsistentDelayedOracle::ConsistentDelayedOracle(const DelayModel& model, int tau, bool monitor,
                                                 double Theta, EventLog* log)
    : model_(model),
      tau_(tau),
      monitor_(monitor),
      Theta_(Theta < 0.0 ? tau : Theta),
      log_(log),
      rng_(model.seed),
      ring_(tau) {
    if (tau < 0) throw std::invalid_argument("ConsistentDelayedOracle: tau must be >= 0");
    model_.tau_cap = tau;
}

void ConsistentDelayedOracle::reset(OperatorHandle& /*op*/, const Vec& /*y0*/) {
    ring_ = HistoryRing(tau_);
    g_diff_.clear();
    g_diff_first_l_ = 1;
    prev_gy_.clear();
    max_staleness_ = 0;
    rng_.seed(model_.seed);
}

Estimate ConsistentDelayedOracle::next(OperatorHandle& op, const Vec& y, long k) {
    // Worker commit: the server stores G y^k before selecting, so tau_k = 0 is
    // realizable.
    Vec gy = op.evaluate(y);
    ring_.push(k, gy);
    if (monitor_) {
        if (k >= 1) {
            g_diff_.push_back(norm2sq(sub(gy, prev_gy_)));
            while (static_cast<int>(g_diff_.size()) > tau_) {
                g_diff_.pop_front();
                g_diff_first_l_ += 1;
            }
        }
        prev_gy_ = gy;
    }

    int tau_k = sample_delay(model_, k, rng_);
    max_staleness_ = std::max(max_staleness_, tau_k);
    if (log_) log_->events.push_back(Event{k, 0, k - tau_k, k, true});

    Estimate est;
    est.g = delayed_oracle(ring_, k, tau_k, tau_);
    est.tau_used = tau_k;
    if (monitor_) {
        double e_sq = norm2sq(sub(est.g, gy));
        est.monitor_slack = monitor_slack(
            e_sq, k, tau_k, Theta_, 0.0,
            [this](long l) -> double {
                if (l < g_diff_first_l_ ||
                    l >= g_diff_first_l_ + static_cast<long>(g_diff_.size()))
                    return 0.0;
                return g_diff_[static_cast<std::size_t>(l - g_diff_first_l_)];
            },
            {});
    }
    return est;
}

SimulationResult simulate_consistent(OperatorHandle& op, const SolverConfig& cfg,
                                     const DelayModel& model, const Vec& y0, bool monitor) {
    if (model.tau_cap != cfg.tau)
        throw std::invalid_argument("simulate_consistent: model.tau_cap must equal cfg.tau");
    SimulationResult result;
    ConsistentDelayedOracle oracle(model, cfg.tau, monitor, -1.0, &result.log);
    result.trace = run(op, oracle, cfg, y0);
    result.max_staleness = oracle.max_staleness_seen();
    return result;
}

SimulationResult simulate_decentralized(OperatorHandle& op, PickStrategy strategy,
                                        const SolverConfig& cfg, const Vec& y0, bool monitor,
                                        int m, int tau_cap) {
    SimulationResult result;
    AggregatedOracle oracle(strategy, m, tau_cap, cfg.seed, monitor);
    result.trace = run(op, oracle, cfg, y0);
    result.max_staleness = oracle.max_staleness_seen();

    const int n = op.n_components();
    int cap = tau_cap;
    if (cap < 0)
        cap = strategy == PickStrategy::Incremental ? n
              : strategy == PickStrategy::Shuffling ? 2 * n
                                                    : 2 * ((n + m - 1) / m);
    if (result.max_staleness > cap)
        throw std::runtime_error("simulate_decentralized: staleness cap violated");
    return result;
}

}  // namespace afp
