#include "afp/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace afp {

namespace {

FitResult ols(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) sx += xs[i], sy += ys[i];
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    FitResult fit;
    if (sxx == 0.0) throw std::invalid_argument("ols: degenerate abscissae");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

}  // namespace

FitResult rate_slope(const std::vector<std::pair<long, double>>& pts, long k_lo, long k_hi,
                     int tau) {
    if (!(k_hi > k_lo && k_lo >= 1))
        throw std::invalid_argument("rate_slope: need k_hi > k_lo >= 1");
    std::vector<double> xs, ys;
    for (const auto& [k, res] : pts) {
        if (k < k_lo || k > k_hi || !(res > 0.0)) continue;
        xs.push_back(std::log(static_cast<double>(k + tau)));
        ys.push_back(2.0 * std::log(res));  // log(res^2)
    }
    if (xs.size() < 10)
        throw std::invalid_argument("rate_slope: fewer than 10 usable points in window");
    return ols(xs, ys);
}

FitResult rate_slope(const Trace& trace, long k_lo, long k_hi, int tau) {
    std::vector<std::pair<long, double>> pts;
    pts.reserve(trace.rows.size());
    for (const auto& row : trace.rows) pts.emplace_back(row.k, row.res_abs);
    return rate_slope(pts, k_lo, k_hi, tau);
}

double residual_bound_R0_sq(double eta, double s, int tau, double gamma, double res0,
                            double dist0) {
    if (!(eta > 0.0 && gamma > 0.0))
        throw std::invalid_argument("residual_bound_R0_sq: eta, gamma must be > 0");
    const double a = 3.0 * s + tau - 1.0;
    return eta * a * a / 2.0 * res0 * res0 + 2.0 * s * s * s / (eta * gamma) * dist0 * dist0;
}

double bound_check(const Trace& trace, double R0_sq, double eta, double s, int tau) {
    double worst = -R0_sq;  // value for an empty trace
    bool any = false;
    for (const auto& row : trace.rows) {
        if (row.res_abs < 0.0) continue;  // unlogged residual
        const double denom = row.k + 3.0 * s + tau - 1.0;
        const double v = row.res_abs * row.res_abs * eta * denom * denom / 4.0 - R0_sq;
        worst = any ? std::max(worst, v) : v;
        any = true;
    }
    return worst;
}

FitResult tau_sweep_fit(const std::vector<std::pair<int, long>>& pairs) {
    if (pairs.size() < 5) throw std::invalid_argument("tau_sweep_fit: need at least 5 points");
    std::vector<double> xs, ys;
    for (const auto& [tau, K] : pairs) {
        xs.push_back(static_cast<double>(tau));
        ys.push_back(static_cast<double>(K));
    }
    return ols(xs, ys);
}

long iterations_to(const Trace& trace, double eps_rel) {
    for (const auto& row : trace.rows)
        if (row.res_rel >= 0.0 && row.res_rel <= eps_rel) return row.k;
    return -1;
}

}  // namespace afp
