#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>

#include "afp/operator_core.hpp"
#include "afp/vec.hpp"

namespace afp {

// Result of one oracle query: the estimator, the staleness actually used
// (max component staleness for aggregated strategies), and the optional
// test-mode monitor slack.
struct Estimate {
    Vec g;
    int tau_used = 0;
    std::optional<double> monitor_slack;
};

// A rule producing the delayed inexact estimator of G y^k.  Strategies own
// their randomness and history; reset() is called once with the initial point
// before the first iteration.
class OracleStrategy {
  public:
    virtual ~OracleStrategy() = default;
    virtual void reset(OperatorHandle& op, const Vec& y0) { (void)op, (void)y0; }
    virtual Estimate next(OperatorHandle& op, const Vec& y, long k) = 0;
    virtual int max_staleness_seen() const { return 0; }
};

// Bounded memory of the tau+1 most recent values keyed by iteration index.
// Lookups below the oldest stored index clamp to it, mirroring the
// pre-history convention y^0 = y^{-1} = ... .
class HistoryRing {
  public:
    explicit HistoryRing(int tau) : capacity_(tau + 1) {
        if (tau < 0) throw std::invalid_argument("HistoryRing: tau must be >= 0");
    }
    void push(long index, Vec value);
    const Vec& lookup(long index) const;
    long newest_index() const { return newest_; }
    bool empty() const { return entries_.empty(); }

  private:
    int capacity_;
    long newest_ = -1;
    std::deque<Vec> entries_;  // entries_[0] is the oldest
};

// Exact oracle: G~^k = G y^k, e^k = 0.
class ExactOracle final : public OracleStrategy {
  public:
    Estimate next(OperatorHandle& op, const Vec& y, long k) override;
};

// Consistent delayed selection G~^k = G y^{k - tau_k} out of a ring that
// already holds index k.  Free function so the harness can wire its own
// delay sampling and event logging around it.
const Vec& delayed_oracle(const HistoryRing& ring, long k, int tau_k, int tau);

// b_k = max{b_min, min{ceil(r_scale * (k+1)^3), n}}; nondecreasing in k.
int batch_schedule(long k, double r_scale, int n, int b_min);

enum class PickStrategy { Incremental, Shuffling, RandomM };

// Per-epoch permutation state for the shuffling strategy.
struct PickState {
    std::vector<int> perm;  // current epoch permutation of 1..n
    std::mt19937_64 rng;
};

// Active index set I_k (1-based).  Incremental: {(k mod n)+1}.  Shuffling:
// singleton under an epoch permutation resampled whenever k mod n = 0.
// RandomM: m distinct indices sampled without replacement.
std::vector<int> pick_indices(PickStrategy strategy, long k, int n, int m, PickState& state);

// n slots of per-component values with staleness counters and a running sum
// that is re-synchronized every n updates to stop floating-point drift.
class ComponentBuffer {
  public:
    ComponentBuffer(int n, int p) : slots_(n, Vec(p, 0.0)), staleness_(n, 0), sum_(p, 0.0) {}

    // Synchronous fill: every slot gets its fresh value, staleness 0.
    void initialize(const std::vector<Vec>& fresh);
    // Replace slots in I_k (1-based) with fresh values, reset their staleness,
    // age every other slot by one.
    void update(const std::vector<int>& I_k, const std::vector<Vec>& fresh);

    Vec mean() const;
    int max_staleness() const;
    const Vec& running_sum() const { return sum_; }
    double sum_drift() const;  // relative error of running sum vs recomputation
    int n() const { return static_cast<int>(slots_.size()); }

  private:
    void resync();
    std::vector<Vec> slots_;
    std::vector<int> staleness_;
    Vec sum_;
    long updates_since_resync_ = 0;
};

// Pointwise error-condition bound for the deterministic cases (kappa = 1,
// delta_k = 0):
//   bound = Theta * sum_{l=max(k-tau_k+1,1)}^{k} g_diff[l]
//         + Theta_hat * sum_{l=max(k-tau_k+1,1)}^{k} d_diff[l]
// where g_diff[l] = |G y^l - G y^{l-1}|^2 and d_diff[l] = D(y^l, y^{l-1}),
// both indexed from l = 1 (l <= 0 contributes 0 by the pre-history
// convention).  Returns slack = bound - e_sq.
double monitor_slack(double e_sq, long k, int tau_k, double Theta, double Theta_hat,
                     const std::function<double(long)>& g_diff,
                     const std::function<double(long)>& d_diff);

// Stochastic mini-batch oracle at a delayed point:
//   G~^k = (1/b_k) sum_{i in B_k} G_i y^{k - tau_k},
// with B_k sampled without replacement; b_k >= n clamps to the full batch.
class MinibatchDelayedOracle final : public OracleStrategy {
  public:
    MinibatchDelayedOracle(int tau, double r_scale, int b_min, std::uint64_t seed,
                           std::function<int(long)> delay_fn = {});

    void reset(OperatorHandle& op, const Vec& y0) override;
    Estimate next(OperatorHandle& op, const Vec& y, long k) override;
    int max_staleness_seen() const override { return max_staleness_; }
    int last_batch_size() const { return last_batch_; }

  private:
    int tau_;
    double r_scale_;
    int b_min_;
    std::mt19937_64 rng_;
    std::function<int(long)> delay_fn_;  // defaults to uniform(0..tau)
    HistoryRing y_ring_;
    int max_staleness_ = 0;
    int last_batch_ = 0;
};

// Inconsistent aggregated oracle (incremental / shuffling / random-m):
// G~^k = (1/n) sum_i Ghat_i with single-slot (or m-slot) refresh per
// iteration.  With monitoring enabled, pays one uncounted full evaluation and
// n uncounted component evaluations per iteration to verify the Theta_hat
// bound pointwise.
class AggregatedOracle final : public OracleStrategy {
  public:
    AggregatedOracle(PickStrategy strategy, int m, int tau_cap, std::uint64_t seed,
                     bool monitor = false, double Theta_hat = -1.0);

    void reset(OperatorHandle& op, const Vec& y0) override;
    Estimate next(OperatorHandle& op, const Vec& y, long k) override;
    int max_staleness_seen() const override { return max_staleness_; }
    const ComponentBuffer& buffer() const { return *buf_; }

  private:
    PickStrategy strategy_;
    int m_;
    int tau_cap_;
    bool monitor_;
    double Theta_hat_;
    PickState pick_state_;
    std::unique_ptr<ComponentBuffer> buf_;
    std::deque<double> d_hist_;  // D(y^l, y^{l-1}) for the last tau_cap values of l
    long d_hist_first_l_ = 1;
    Vec prev_y_;
    int max_staleness_ = 0;
};

}  // namespace afp
