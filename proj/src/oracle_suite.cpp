#include "afp/oracle_suite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace afp {

void HistoryRing::push(long index, Vec value) {
    if (index != newest_ + 1)
        throw std::logic_error("HistoryRing: indices must be pushed consecutively");
    entries_.push_back(std::move(value));
    newest_ = index;
    while (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
}

const Vec& HistoryRing::lookup(long index) const {
    if (entries_.empty()) throw std::logic_error("HistoryRing: empty");
    long oldest = newest_ - static_cast<long>(entries_.size()) + 1;
    // Pre-history convention: indices below the oldest stored (in particular
    // negative ones) clamp to the oldest value.
    long l = std::clamp(index, oldest, newest_);
    return entries_[static_cast<std::size_t>(l - oldest)];
}

Estimate ExactOracle::next(OperatorHandle& op, const Vec& y, long /*k*/) {
    return Estimate{op.evaluate(y), 0, std::nullopt};
}

const Vec& delayed_oracle(const HistoryRing& ring, long k, int tau_k, int tau) {
    if (tau_k < 0 || tau_k > tau)
        throw std::invalid_argument("delayed_oracle: tau_k outside [0, tau], retry required");
    if (ring.newest_index() < k)
        throw std::logic_error("delayed_oracle: ring does not hold index k yet");
    return ring.lookup(k - tau_k);
}

int batch_schedule(long k, double r_scale, int n, int b_min) {
    if (!(r_scale > 0.0)) throw std::invalid_argument("batch_schedule: r_scale must be > 0");
    if (b_min < 1) throw std::invalid_argument("batch_schedule: b_min must be >= 1");
    double cube = r_scale * std::pow(static_cast<double>(k + 1), 3.0);
    double capped = std::min(std::ceil(cube), static_cast<double>(n));
    return std::max(b_min, static_cast<int>(capped));
}

std::vector<int> pick_indices(PickStrategy strategy, long k, int n, int m, PickState& state) {
    if (n < 1) throw std::invalid_argument("pick_indices: n must be >= 1");
    switch (strategy) {
        case PickStrategy::Incremental:
            return {static_cast<int>(k % n) + 1};
        case PickStrategy::Shuffling: {
            if (k % n == 0 || state.perm.size() != static_cast<std::size_t>(n)) {
                state.perm.resize(n);
                std::iota(state.perm.begin(), state.perm.end(), 1);
                std::shuffle(state.perm.begin(), state.perm.end(), state.rng);
            }
            return {state.perm[static_cast<std::size_t>(k % n)]};
        }
        case PickStrategy::RandomM: {
            if (m < 1 || m > n) throw std::invalid_argument("pick_indices: need 1 <= m <= n");
            // Partial Fisher-Yates for m distinct indices.
            std::vector<int> pool(n);
            std::iota(pool.begin(), pool.end(), 1);
            std::vector<int> out;
            out.reserve(m);
            for (int j = 0; j < m; ++j) {
                std::uniform_int_distribution<int> pick(j, n - 1);
                std::swap(pool[j], pool[pick(state.rng)]);
                out.push_back(pool[j]);
            }
            return out;
        }
    }
    throw std::logic_error("pick_indices: unknown strategy");
}

void ComponentBuffer::initialize(const std::vector<Vec>& fresh) {
    if (fresh.size() != slots_.size())
        throw std::invalid_argument("ComponentBuffer: initialize needs one value per slot");
    slots_ = fresh;
    std::fill(staleness_.begin(), staleness_.end(), 0);
    resync();
    updates_since_resync_ = 0;
}

void ComponentBuffer::update(const std::vector<int>& I_k, const std::vector<Vec>& fresh) {
    if (I_k.size() != fresh.size())
        throw std::invalid_argument("ComponentBuffer: index/value count mismatch");
    for (auto& st : staleness_) st += 1;
    for (std::size_t j = 0; j < I_k.size(); ++j) {
        int i = I_k[j];
        if (i < 1 || i > n()) throw std::out_of_range("ComponentBuffer: slot index");
        auto& slot = slots_[static_cast<std::size_t>(i - 1)];
        // new_sum = old_sum + (fresh - old)
        for (std::size_t d = 0; d < sum_.size(); ++d) sum_[d] += fresh[j][d] - slot[d];
        slot = fresh[j];
        staleness_[static_cast<std::size_t>(i - 1)] = 0;
    }
    updates_since_resync_ += static_cast<long>(I_k.size());
    if (updates_since_resync_ >= n()) {
        resync();
        updates_since_resync_ = 0;
    }
}

void ComponentBuffer::resync() {
    std::fill(sum_.begin(), sum_.end(), 0.0);
    for (const auto& s : slots_)
        for (std::size_t d = 0; d < sum_.size(); ++d) sum_[d] += s[d];
}

Vec ComponentBuffer::mean() const { return scaled(1.0 / n(), sum_); }

int ComponentBuffer::max_staleness() const {
    return *std::max_element(staleness_.begin(), staleness_.end());
}

double ComponentBuffer::sum_drift() const {
    Vec exact(sum_.size(), 0.0);
    for (const auto& s : slots_)
        for (std::size_t d = 0; d < exact.size(); ++d) exact[d] += s[d];
    double num = norm2(sub(sum_, exact));
    return num / (1.0 + norm2(exact));
}

double monitor_slack(double e_sq, long k, int tau_k, double Theta, double Theta_hat,
                     const std::function<double(long)>& g_diff,
                     const std::function<double(long)>& d_diff) {
    double bound = 0.0;
    for (long l = std::max<long>(k - tau_k + 1, 1); l <= k; ++l) {
        if (Theta > 0.0 && g_diff) bound += Theta * g_diff(l);
        if (Theta_hat > 0.0 && d_diff) bound += Theta_hat * d_diff(l);
    }
    return bound - e_sq;
}

MinibatchDelayedOracle::MinibatchDelayedOracle(int tau, double r_scale, int b_min,
                                               std::uint64_t seed,
                                               std::function<int(long)> delay_fn)
    : tau_(tau),
      r_scale_(r_scale),
      b_min_(b_min),
      rng_(seed),
      delay_fn_(std::move(delay_fn)),
      y_ring_(tau) {
    if (tau < 0) throw std::invalid_argument("MinibatchDelayedOracle: tau must be >= 0");
}

void MinibatchDelayedOracle::reset(OperatorHandle& op, const Vec& y0) {
    if (!op.finite_sum())
        throw std::logic_error("MinibatchDelayedOracle: finite-sum operator required");
    y_ring_ = HistoryRing(tau_);
    max_staleness_ = 0;
    (void)y0;
}

Estimate MinibatchDelayedOracle::next(OperatorHandle& op, const Vec& y, long k) {
    y_ring_.push(k, y);
    int tau_k;
    if (delay_fn_) {
        tau_k = delay_fn_(k);
        if (tau_k < 0 || tau_k > tau_)
            throw std::invalid_argument("MinibatchDelayedOracle: delay outside [0, tau]");
    } else {
        std::uniform_int_distribution<int> d(0, tau_);
        tau_k = d(rng_);
    }
    tau_k = std::min<long>(tau_k, k);
    max_staleness_ = std::max(max_staleness_, tau_k);
    const Vec& y_del = y_ring_.lookup(k - tau_k);

    const int n = op.n_components();
    int b = std::min(batch_schedule(k, r_scale_, n, b_min_), n);
    last_batch_ = b;
    // Sample b distinct components (without replacement).
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 1);
    Vec g(op.dimension(), 0.0);
    for (int j = 0; j < b; ++j) {
        std::uniform_int_distribution<int> pick(j, n - 1);
        std::swap(pool[j], pool[pick(rng_)]);
        axpy(1.0, op.evaluate_component(pool[j], y_del), g);
    }
    for (auto& v : g) v /= b;
    // Expectation-only error contract: the monitor is advisory here.
    return Estimate{std::move(g), tau_k, std::nullopt};
}

AggregatedOracle::AggregatedOracle(PickStrategy strategy, int m, int tau_cap,
                                   std::uint64_t seed, bool monitor, double Theta_hat)
    : strategy_(strategy), m_(m), tau_cap_(tau_cap), monitor_(monitor), Theta_hat_(Theta_hat) {
    pick_state_.rng.seed(seed);
}

void AggregatedOracle::reset(OperatorHandle& op, const Vec& y0) {
    if (!op.finite_sum())
        throw std::logic_error("AggregatedOracle: finite-sum operator required");
    const int n = op.n_components();
    if (tau_cap_ < 0) {
        // Algorithm defaults: tau = n (incremental), 2n (shuffling),
        // 2*ceil(n/m) (random-m convention).
        if (strategy_ == PickStrategy::Incremental) tau_cap_ = n;
        else if (strategy_ == PickStrategy::Shuffling) tau_cap_ = 2 * n;
        else tau_cap_ = 2 * ((n + m_ - 1) / m_);
    }
    if (Theta_hat_ < 0.0) Theta_hat_ = tau_cap_;
    buf_ = std::make_unique<ComponentBuffer>(n, op.dimension());
    // Synchronous initialization: one full pass fills every slot at y^0.
    std::vector<Vec> fresh;
    fresh.reserve(n);
    for (int i = 1; i <= n; ++i) fresh.push_back(op.evaluate_component(i, y0));
    buf_->initialize(fresh);
    d_hist_.clear();
    d_hist_first_l_ = 1;
    prev_y_ = y0;
    max_staleness_ = 0;
    pick_state_.perm.clear();
}

Estimate AggregatedOracle::next(OperatorHandle& op, const Vec& y, long k) {
    if (!buf_) throw std::logic_error("AggregatedOracle: reset() not called");
    if (monitor_ && k >= 1) {
        d_hist_.push_back(op.D_value(y, prev_y_));  // D(y^k, y^{k-1}), uncounted
        while (static_cast<int>(d_hist_.size()) > tau_cap_) {
            d_hist_.pop_front();
            d_hist_first_l_ += 1;
        }
    }
    prev_y_ = y;

    std::vector<int> I_k = pick_indices(strategy_, k, op.n_components(), m_, pick_state_);
    std::vector<Vec> fresh;
    fresh.reserve(I_k.size());
    for (int i : I_k) fresh.push_back(op.evaluate_component(i, y));
    buf_->update(I_k, fresh);

    int stale = buf_->max_staleness();
    if (stale > tau_cap_)
        throw std::runtime_error("AggregatedOracle: staleness " + std::to_string(stale) +
                                 " exceeds cap " + std::to_string(tau_cap_) + " at k=" +
                                 std::to_string(k));
    max_staleness_ = std::max(max_staleness_, stale);

    Estimate est;
    est.g = buf_->mean();
    est.tau_used = stale;
    if (monitor_) {
        Vec gy = op.evaluate_uncounted(y);
        double e_sq = norm2sq(sub(est.g, gy));
        est.monitor_slack = monitor_slack(
            e_sq, k, stale, 0.0, Theta_hat_, {}, [this](long l) -> double {
                if (l < d_hist_first_l_ ||
                    l >= d_hist_first_l_ + static_cast<long>(d_hist_.size()))
                    return 0.0;
                return d_hist_[static_cast<std::size_t>(l - d_hist_first_l_)];
            });
    }
    return est;
}

}  // namespace afp
