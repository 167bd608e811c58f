#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "afp/vec.hpp"

namespace afp {

// Declared co-coercivity profile: <Gx-Gy, x-y> >= beta*|Gx-Gy|^2 + beta_bar*D(x,y).
// For finite-sum operators D defaults to (1/n) * sum_i |G_i x - G_i y|^2.
struct CoCoercivityProfile {
    double beta = 0.0;
    double beta_bar = 0.0;
    // Optional custom D-rule; if absent, the finite-sum default is used (or 0).
    std::function<double(const Vec&, const Vec&)> D;
};

// An evaluable operator G : R^p -> R^p, optionally with finite-sum structure
// G = (1/n) * sum_i G_i.  Evaluation counters are the single source of truth
// for full-pass accounting; diagnostic evaluations must use the _uncounted
// variants so that benchmark x-axes stay faithful.
class OperatorHandle {
  public:
    using EvalFn = std::function<Vec(const Vec&)>;

    OperatorHandle(int p, EvalFn eval, CoCoercivityProfile profile)
        : p_(p), eval_(std::move(eval)), profile_(std::move(profile)) {
        if (p_ <= 0) throw std::invalid_argument("OperatorHandle: dimension must be positive");
        if (!eval_) throw std::invalid_argument("OperatorHandle: missing evaluate rule");
    }

    OperatorHandle(int p, EvalFn eval, std::vector<EvalFn> components, CoCoercivityProfile profile)
        : OperatorHandle(p, std::move(eval), std::move(profile)) {
        components_ = std::move(components);
        if (components_.empty())
            throw std::invalid_argument("OperatorHandle: empty component list");
    }

    int dimension() const { return p_; }
    bool finite_sum() const { return !components_.empty(); }
    int n_components() const { return static_cast<int>(components_.size()); }
    const CoCoercivityProfile& profile() const { return profile_; }
    CoCoercivityProfile& profile() { return profile_; }

    // Counting evaluation of the full operator.  For finite-sum operators this
    // costs n component evaluations worth of work.
    Vec evaluate(const Vec& x) {
        check_dim(x);
        if (finite_sum())
            component_calls_ += n_components();
        else
            full_calls_ += 1;
        return eval_(x);
    }

    // Counting evaluation of component i (1-based, matching the usual
    // finite-sum indexing G_1, ..., G_n).
    Vec evaluate_component(int i, const Vec& x) {
        check_dim(x);
        if (!finite_sum())
            throw std::logic_error("evaluate_component: operator has no finite-sum structure");
        if (i < 1 || i > n_components())
            throw std::out_of_range("evaluate_component: index " + std::to_string(i) +
                                    " out of range [1," + std::to_string(n_components()) + "]");
        component_calls_ += 1;
        return components_[static_cast<std::size_t>(i - 1)](x);
    }

    // Diagnostic (non-counting) evaluations: used for residual logging and
    // test-mode monitors only.
    Vec evaluate_uncounted(const Vec& x) const {
        check_dim(x);
        return eval_(x);
    }
    Vec evaluate_component_uncounted(int i, const Vec& x) const {
        check_dim(x);
        if (!finite_sum())
            throw std::logic_error("evaluate_component: operator has no finite-sum structure");
        if (i < 1 || i > n_components())
            throw std::out_of_range("evaluate_component: index out of range");
        return components_[static_cast<std::size_t>(i - 1)](x);
    }

    // D(x, y) per the profile; finite-sum default when no custom rule is set.
    double D_value(const Vec& x, const Vec& y) const {
        if (profile_.D) return profile_.D(x, y);
        if (!finite_sum()) return 0.0;
        double s = 0.0;
        for (const auto& g : components_) s += norm2sq(sub(g(x), g(y)));
        return s / n_components();
    }

    std::int64_t component_calls() const { return component_calls_; }
    std::int64_t full_calls() const { return full_calls_; }

    // "Number of full passes": component-calls / n for finite sums, otherwise
    // the plain evaluation count.
    double full_passes() const {
        if (finite_sum()) return static_cast<double>(component_calls_) / n_components();
        return static_cast<double>(full_calls_);
    }

    void reset_counters() {
        component_calls_ = 0;
        full_calls_ = 0;
    }

    // Benchmark problems with a known root declare it here so that Lyapunov
    // and residual-bound diagnostics become available.
    void set_known_root(Vec root) { root_ = std::move(root); }
    const std::optional<Vec>& known_root() const { return root_; }

  private:
    void check_dim(const Vec& x) const {
        if (static_cast<int>(x.size()) != p_)
            throw std::invalid_argument("operator input has dimension " +
                                        std::to_string(x.size()) + ", expected " +
                                        std::to_string(p_));
    }

    int p_;
    EvalFn eval_;
    std::vector<EvalFn> components_;
    CoCoercivityProfile profile_;
    std::optional<Vec> root_;
    std::int64_t component_calls_ = 0;
    std::int64_t full_calls_ = 0;
};

struct AuditReport {
    double min_slack = 0.0;
    Vec worst_x, worst_y;
};

// Sample-based check of the generalized co-coercivity inequality with the
// declared (beta, beta_bar, D).  Report-only: a negative min_slack means the
// declared profile is violated on some sampled pair.
AuditReport cocoercivity_audit(const OperatorHandle& op, int sample_count, std::uint64_t rng_seed);

}  // namespace afp
