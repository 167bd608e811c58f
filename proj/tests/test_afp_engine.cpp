#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "afp/afp_engine.hpp"
#include "afp/async_harness.hpp"
#include "afp/oracle_suite.hpp"
#include "afp/problem_zoo.hpp"

using namespace afp;

namespace {

OperatorHandle scalar_identity() {
    return OperatorHandle(1, [](const Vec& x) { return x; }, CoCoercivityProfile{1.0, 0.0});
}

SolverConfig scalar_cfg() {
    SolverConfig cfg;
    cfg.s = 4.0;
    cfg.gamma = 1.0;
    cfg.tau = 1;
    cfg.eta = 0.1;
    return cfg;
}

}  // namespace

TEST_CASE("schedule closed-form values") {
    SolverConfig cfg;
    cfg.s = 1.1;
    cfg.gamma = 1.0;
    cfg.tau = 10;
    ScheduleValues sc = schedule(0, cfg, 0.1);
    CHECK(sc.t_k == doctest::Approx(13.3).epsilon(1e-12));
    CHECK(sc.gamma_k == 1.0);
    CHECK(sc.eta_k == doctest::Approx(0.1 * 13.3 / (2.0 * 12.2)).epsilon(1e-12));
    CHECK(sc.eta_k == doctest::Approx(0.054508).epsilon(1e-5));

    SolverConfig cfg2 = scalar_cfg();
    ScheduleValues sc2 = schedule(0, cfg2, 0.1);
    CHECK(sc2.t_k == 13.0);
    CHECK(sc2.eta_k == doctest::Approx(1.3 / 18.0).epsilon(1e-12));
    CHECK(sc2.eta_k == doctest::Approx(0.0722222).epsilon(1e-6));
}

TEST_CASE("schedule invariants: unit increments and eta sandwich") {
    SolverConfig cfg;
    cfg.s = 2.5;
    cfg.gamma = 0.4;
    cfg.tau = 3;
    double prev_t = 0.0, prev_eta = 1.0;
    for (long k = 0; k <= 2000; ++k) {
        ScheduleValues sc = schedule(k, cfg, 0.2);
        if (k > 0) {
            CHECK(sc.t_k - prev_t == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(sc.eta_k <= prev_eta);  // decreases to eta/2 from above
        }
        CHECK(sc.eta_k >= 0.1 - 1e-14);
        CHECK(sc.eta_k <= 0.2 + 1e-14);
        prev_t = sc.t_k;
        prev_eta = sc.eta_k;
    }
    CHECK(schedule(2000000, cfg, 0.2).eta_k == doctest::Approx(0.1).epsilon(1e-5));
    CHECK_THROWS_AS(schedule(-1, cfg, 0.2), std::invalid_argument);
    CHECK_THROWS_AS(schedule(0, cfg, 0.0), std::invalid_argument);
}

TEST_CASE("theory_stepsize: pure-delay case") {
    CoCoercivityProfile prof{1.0, 0.0};
    StepsizeBound bound{1.0, 10.0, 0.0};  // Theta = tau = 10
    SolverConfig cfg;
    cfg.s = 1.1;
    cfg.gamma = 0.0;  // Lambda = 1 + s - gamma must be 1.1 -> gamma = 1 gives 1.1
    cfg.gamma = 1.0;
    cfg.tau = 10;
    cfg.eta_mode = EtaMode::Theory;
    // (7*1.1 + 3)*10 + 3 = 110 in the denominator with 3*beta on top.
    double eta = theory_stepsize(prof, bound, cfg);
    CHECK(eta == doctest::Approx(3.0 / 110.0).epsilon(1e-12));
    CHECK(eta == doctest::Approx(0.0272727).epsilon(1e-5));
}

TEST_CASE("theory_stepsize: beta_bar branch") {
    CoCoercivityProfile prof{0.0, 1.0};
    StepsizeBound bound{1.0, 0.0, 4.0};  // Theta_hat = tau = 4
    SolverConfig cfg;
    cfg.s = 4.0;
    cfg.gamma = 1.0;
    cfg.tau = 4;
    cfg.eta_mode = EtaMode::Theory;
    double eta = theory_stepsize(prof, bound, cfg);
    CHECK(eta == doctest::Approx(3.0 / 112.0).epsilon(1e-12));
}

TEST_CASE("theory_stepsize: exact case modeled as tau=1") {
    CoCoercivityProfile prof{1.0, 0.0};
    StepsizeBound bound{1.0, 1.0, 0.0};
    SolverConfig cfg;
    cfg.s = 4.0;
    cfg.gamma = 1.0;
    cfg.tau = 1;
    cfg.eta_mode = EtaMode::Theory;
    double eta = theory_stepsize(prof, bound, cfg);
    CHECK(eta == doctest::Approx(3.0 / 34.0).epsilon(1e-12));
}

TEST_CASE("theory_stepsize: hypothesis violations are named") {
    SolverConfig cfg;
    cfg.s = 4.0;
    cfg.gamma = 1.0;
    cfg.tau = 1;
    StepsizeBound bound{1.0, 1.0, 0.0};
    // kappa <= alpha
    StepsizeBound bad_kappa = bound;
    bad_kappa.kappa = 0.3;  // alpha(4) = 9/25 = 0.36 > 0.3
    CHECK_THROWS_WITH_AS(theory_stepsize(CoCoercivityProfile{1.0, 0.0}, bad_kappa, cfg),
                         doctest::Contains("alpha < kappa"), std::invalid_argument);
    // s < 1 + 3 gamma is a config-level rule, not a stepsize precondition.
    SolverConfig bad_s = cfg;
    bad_s.s = 2.0;
    bad_s.eta_mode = EtaMode::Theory;
    CHECK_THROWS_WITH_AS(bad_s.validate(false), doctest::Contains("s >= 1 + 3*gamma"),
                         std::invalid_argument);
    CHECK_NOTHROW(theory_stepsize(CoCoercivityProfile{1.0, 0.0}, bound, bad_s));
    // Theta * beta_bar > Theta_hat * beta
    CHECK_THROWS_WITH_AS(theory_stepsize(CoCoercivityProfile{1.0, 0.5}, bound, cfg),
                         doctest::Contains("Theta*beta_bar"), std::invalid_argument);
}

TEST_CASE("afp_step: scalar reference recursion") {
    SolverConfig cfg = scalar_cfg();
    SolverState st;
    st.x = st.y = st.z = Vec{1.0};
    ScheduleValues sc = schedule(0, cfg, 0.1);
    afp_step(st, Vec{1.0}, sc, cfg.s);  // exact estimator G y0 = y0 = 1
    CHECK(st.x[0] == doctest::Approx(0.9277778).epsilon(1e-6));
    CHECK(st.z[0] == doctest::Approx(0.9819444).epsilon(1e-6));
    CHECK(st.y[0] == doctest::Approx(0.9444444).epsilon(1e-6));
    CHECK(st.k == 1);
}

TEST_CASE("afp_step: zero estimator is a pure averaging step") {
    SolverConfig cfg = scalar_cfg();
    SolverState st;
    st.x = Vec{0.2};
    st.y = Vec{0.5};
    st.z = Vec{0.9};
    ScheduleValues sc = schedule(3, cfg, 0.1);
    afp_step(st, Vec{0.0}, sc, cfg.s);
    CHECK(st.x[0] == 0.5);   // x' = y
    CHECK(st.z[0] == 0.9);   // z unchanged
    CHECK(st.y[0] == doctest::Approx(((sc.t_k - cfg.s) * 0.5 + cfg.s * 0.9) / sc.t_k));
}

TEST_CASE("afp_step: root is a fixed point") {
    SolverConfig cfg = scalar_cfg();
    SolverState st;
    st.x = st.y = st.z = Vec{0.0};
    afp_step(st, Vec{0.0}, schedule(0, cfg, 0.1), cfg.s);
    CHECK(st.y[0] == 0.0);
    CHECK(st.z[0] == 0.0);
    CHECK(st.x[0] == 0.0);
    CHECK(st.k == 1);
}

TEST_CASE("afp_step rejects non-finite estimators") {
    SolverConfig cfg = scalar_cfg();
    SolverState st;
    st.x = st.y = st.z = Vec{1.0};
    st.k = 7;
    CHECK_THROWS_WITH_AS(afp_step(st, Vec{std::nan("")}, schedule(7, cfg, 0.1), cfg.s),
                         doctest::Contains("k=7"), std::runtime_error);
}

TEST_CASE("km_step scalar arithmetic") {
    Vec y{1.0};
    km_step(y, Vec{0.0}, 0.5, 1.0);
    CHECK(y[0] == 1.0);  // Gy = 0 leaves y unchanged
    km_step(y, Vec{1.0}, 0.5, 1.0);
    CHECK(y[0] == 0.0);  // 1 - 0.5*2*1*1
    y = Vec{1.0};
    km_step(y, Vec{1.0}, 0.25, 1.0);
    CHECK(y[0] == 0.5);
    CHECK_THROWS_AS(km_step(y, Vec{1.0}, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(km_step(y, Vec{1.0}, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("lyapunov_L: zero at the root, scalar hand expansion") {
    SolverConfig cfg = scalar_cfg();
    const double eta = 0.1, s = cfg.s;
    SolverState st;
    st.x = st.y = st.z = Vec{0.0};
    st.k = 1;
    ScheduleValues sc0 = schedule(0, cfg, eta);
    CHECK(lyapunov_L(st, Vec{0.0}, sc0, Vec{0.0}, s, eta) == 0.0);

    // One exact AFP step from y0 = z0 = 1; x* = 0, Gy = y.
    st.x = st.y = st.z = Vec{1.0};
    st.k = 0;
    afp_step(st, Vec{1.0}, sc0, s);
    double y = st.y[0], z = st.z[0];
    double t0 = sc0.t_k, eta0 = sc0.eta_k;
    double a1 = eta0 * t0 * (t0 - s);
    double expected = 0.5 * a1 * y * y + s * t0 * y * (y - z) +
                      s * s * (s - 1.0) / (2.0 * eta0 * sc0.gamma_k) * z * z;
    CHECK(lyapunov_L(st, Vec{0.0}, sc0, Vec{y}, s, eta) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("lyapunov_L lower bound holds along a theory-mode quadratic run") {
    OperatorHandle op = quadratic_finitesum(20, 1, 50.0, 31);
    SolverConfig cfg;
    cfg.s = 4.0;
    cfg.gamma = 1.0;
    cfg.tau = 1;
    cfg.eta_mode = EtaMode::Theory;
    cfg.bound = StepsizeBound{1.0, 1.0, 0.0};
    double eta = theory_stepsize(op.profile(), cfg.bound, cfg);

    SolverState st;
    st.x = st.y = st.z = Vec(20, 1.0);
    Vec root(20, 0.0);
    for (long k = 0; k < 500; ++k) {
        ScheduleValues sc = schedule(k, cfg, eta);
        Vec gy = op.evaluate_uncounted(st.y);
        if (k > 0) {
            ScheduleValues prev = schedule(k - 1, cfg, eta);
            // throws on a Lemma-style lower-bound violation
            CHECK_NOTHROW(lyapunov_L(st, root, prev, gy, cfg.s, eta, true));
        }
        afp_step(st, gy, sc, cfg.s);
    }
}

TEST_CASE("run: k_max=0 yields the single k=0 row") {
    OperatorHandle op = scalar_identity();
    SolverConfig cfg = scalar_cfg();
    cfg.k_max = 0;
    ExactOracle oracle;
    Trace trace = run(op, oracle, cfg, Vec{2.0});
    REQUIRE(trace.rows.size() == 1);
    CHECK(trace.rows[0].k == 0);
    CHECK(trace.rows[0].res_abs == 2.0);
    CHECK(trace.rows[0].res_rel == 1.0);
    CHECK(trace.iterations == 0);
}

TEST_CASE("run: theory mode converges on the quadratic within 1e4") {
    OperatorHandle op = quadratic_finitesum(50, 1, 100.0, 41);
    SolverConfig cfg;
    cfg.s = 4.0;
    cfg.gamma = 1.0;
    cfg.tau = 1;
    cfg.eta_mode = EtaMode::Theory;
    cfg.bound = StepsizeBound{1.0, 1.0, 0.0};
    cfg.k_max = 10000;
    cfg.eps_rel = 1e-2;  // theory stepsizes are conservative; sublinear tail
    ExactOracle oracle;
    Trace trace = run(op, oracle, cfg, Vec(50, 1.0));
    CHECK(trace.converged);
    CHECK(trace.rows.back().res_rel <= 1e-2);
}

TEST_CASE("run: identical config and seed give bit-identical traces") {
    SolverConfig cfg;
    cfg.s = 1.1;
    cfg.tau = 5;
    cfg.k_max = 300;
    cfg.seed = 99;
    DelayModel model;
    model.kind = DelayModel::Kind::Uniform;
    model.tau_cap = 5;
    model.seed = 99;
    OperatorHandle op1 = quadratic_finitesum(10, 4, 20.0, 43);
    OperatorHandle op2 = quadratic_finitesum(10, 4, 20.0, 43);
    ConsistentDelayedOracle o1(model, 5), o2(model, 5);
    Trace a = run(op1, o1, cfg, Vec(10, 1.0));
    Trace b = run(op2, o2, cfg, Vec(10, 1.0));
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].res_abs == b.rows[i].res_abs);
        CHECK(a.rows[i].tau_used == b.rows[i].tau_used);
    }
    CHECK(a.final_y == b.final_y);
}

TEST_CASE("run: root start stays exactly at the root") {
    OperatorHandle op = quadratic_finitesum(10, 4, 10.0, 47);
    SolverConfig cfg;
    cfg.s = 4.0;
    cfg.tau = 1;
    cfg.k_max = 10;
    ExactOracle oracle;
    Trace trace = run(op, oracle, cfg, Vec(10, 0.0));
    CHECK(norm2(trace.final_y) == 0.0);
}

TEST_CASE("config validation messages") {
    SolverConfig cfg = scalar_cfg();
    cfg.s = 1.0;
    CHECK_THROWS_AS(cfg.validate(false), std::invalid_argument);
    cfg = scalar_cfg();
    cfg.gamma = 1.5;
    CHECK_THROWS_AS(cfg.validate(false), std::invalid_argument);
    cfg = scalar_cfg();
    cfg.gamma = -0.1;
    CHECK_THROWS_AS(cfg.validate(false), std::invalid_argument);
    cfg = scalar_cfg();
    cfg.tau = -1;
    CHECK_THROWS_AS(cfg.validate(false), std::invalid_argument);
    cfg = scalar_cfg();
    cfg.tau = 0;
    CHECK_THROWS_AS(cfg.validate(true), std::invalid_argument);  // delayed oracle needs tau >= 1
    cfg = scalar_cfg();
    CHECK_NOTHROW(cfg.validate(false));
}

// Known red: the 5x iteration advantage over KM does not materialize on this
// benchmark. KM contracts geometrically on the strongly monotone quadratic
// (its O(1/k) rate is only an upper envelope), while AFP's accelerated
// sublinear schedule cannot beat a linear rate at this accuracy. The check is
// kept as stated rather than weakened; see the acceptance report for the
// measured iteration counts.
TEST_CASE("afp reaches 1e-6 in at most a fifth of the KM iterations") {
    OperatorHandle op_afp = quadratic_finitesum(50, 1, 100.0, 53);
    OperatorHandle op_km = quadratic_finitesum(50, 1, 100.0, 53);
    SolverConfig cfg;
    cfg.s = 4.0;
    cfg.gamma = 1.0;
    cfg.tau = 1;
    cfg.eta_mode = EtaMode::Theory;
    cfg.bound = StepsizeBound{1.0, 1.0, 0.0};
    cfg.k_max = 200000;
    cfg.eps_rel = 1e-6;
    cfg.log_stride = 10;
    ExactOracle oracle;
    Trace afp_trace = run(op_afp, oracle, cfg, Vec(50, 1.0));
    Trace km_trace = run_km(op_km, cfg, Vec(50, 1.0), 0.5);
    REQUIRE(km_trace.converged);
    // If AFP does not reach 1e-6 within the budget, k_max is a lower bound on
    // its iteration count, so the comparison below is still valid.
    long afp_iters = afp_trace.converged ? afp_trace.iterations : cfg.k_max;
    CHECK(afp_iters * 5 <= km_trace.iterations);
}
