#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "afp/afp_engine.hpp"
#include "afp/oracle_suite.hpp"

namespace afp {

// Delay generator for the consistent (server-worker) simulation.  All
// asynchrony is logical time: same (kind, seed) always yields the same
// delay sequence.
struct DelayModel {
    enum class Kind { Fixed, Uniform, WorkerSpeeds };
    Kind kind = Kind::Uniform;
    int fixed_d = 0;
    int tau_cap = 0;
    // WorkerSpeeds: integer service steps per worker; the emitted delay is the
    // number of iterations since that worker's last commit, threshold-enforced
    // with bounded retry (tau_cap+1 attempts, then fallback tau_cap).
    std::vector<int> worker_speeds;
    std::uint64_t seed = 0;
};

// tau_k in [0, min(k, tau_cap)]: the clamp guarantees pre-history is never
// requested beyond the k=0 convention.
int sample_delay(const DelayModel& model, long k, std::mt19937_64& rng);

struct Event {
    long k = 0;
    int worker = 0;
    long issued = 0;
    long commit = 0;
    bool accepted = true;
};

struct EventLog {
    std::vector<Event> events;
    void write_csv(std::ostream& os) const;
    // Max accepted staleness k - issued over the whole log.
    long max_staleness() const;
};

// Consistent-asynchrony oracle: the server stores G y^k in the ring (worker
// commit), then selects G~^k = G y^{k - tau_k}.  With monitoring on, the
// pointwise Theta-bound slack is attached to each estimate.
class ConsistentDelayedOracle final : public OracleStrategy {
  public:
    ConsistentDelayedOracle(const DelayModel& model, int tau, bool monitor = false,
                            double Theta = -1.0, EventLog* log = nullptr);

    void reset(OperatorHandle& op, const Vec& y0) override;
    Estimate next(OperatorHandle& op, const Vec& y, long k) override;
    int max_staleness_seen() const override { return max_staleness_; }

  private:
    DelayModel model_;
    int tau_;
    bool monitor_;
    double Theta_;
    EventLog* log_;
    std::mt19937_64 rng_;
    HistoryRing ring_;
    std::deque<double> g_diff_;  // |G y^l - G y^{l-1}|^2, l = k-tau+1 .. k
    long g_diff_first_l_ = 1;
    Vec prev_gy_;
    int max_staleness_ = 0;
};

struct SimulationResult {
    Trace trace;
    EventLog log;
    int max_staleness = 0;
};

// Server-worker consistent-delay simulation wrapped around the AFP engine.
SimulationResult simulate_consistent(OperatorHandle& op, const SolverConfig& cfg,
                                     const DelayModel& model, const Vec& y0,
                                     bool monitor = false);

// Decentralized aggregated simulation (Algorithm-style): synchronous buffer
// fill at k=0, then one component refresh per iteration.  Asserts the
// staleness caps tau = n (incremental) and tau = 2n (shuffling).
SimulationResult simulate_decentralized(OperatorHandle& op, PickStrategy strategy,
                                        const SolverConfig& cfg, const Vec& y0,
                                        bool monitor = false, int m = 1, int tau_cap = -1);

}  // namespace afp
