#include "afp/operator_core.hpp"

#include <random>

namespace afp {

AuditReport cocoercivity_audit(const OperatorHandle& op, int sample_count,
                               std::uint64_t rng_seed) {
    if (sample_count < 1) throw std::invalid_argument("cocoercivity_audit: sample_count >= 1");
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto& prof = op.profile();

    AuditReport report;
    report.min_slack = std::numeric_limits<double>::infinity();
    Vec x(op.dimension()), y(op.dimension());
    for (int t = 0; t < sample_count; ++t) {
        for (auto& v : x) v = gauss(rng);
        for (auto& v : y) v = gauss(rng);
        Vec gx = op.evaluate_uncounted(x);
        Vec gy = op.evaluate_uncounted(y);
        Vec d = sub(gx, gy);
        double slack = dot(d, sub(x, y)) - prof.beta * norm2sq(d);
        if (prof.beta_bar > 0.0) slack -= prof.beta_bar * op.D_value(x, y);
        if (slack < report.min_slack) {
            report.min_slack = slack;
            report.worst_x = x;
            report.worst_y = y;
        }
    }
    return report;
}

}  // namespace afp
