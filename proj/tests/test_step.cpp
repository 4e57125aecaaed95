#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "kam/flow.hpp"
#include "kam/step.hpp"
#include "oracles.hpp"

using namespace kam;

namespace {

const double kPhi = 0.5 * (1.0 + std::sqrt(5.0));

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

NormalForm plain_nf(const Vector& omega, const Series& hbar)
{
    NormalForm N;
    N.omega0 = omega;
    N.lin = omega;
    N.hbar = hbar;
    return N;
}

// {N, F} + R - [R] with N = <omega0, y> + hbar, kept to |l| <= 4
double bracket_residual(const NormalForm& N, const Series& F, const Series& R, const AnalyticDomain& dom)
{
    const int K = std::max(F.k_max(), R.k_max());
    const Series Ns = Series::linear(N.omega0, 0, 4) + N.hbar.with_cutoffs(0, 4);
    const Series res = poisson_bracket(Ns, F, K, 4) + R - average(R);
    return weighted_norm(truncate(res, K, 4), dom);
}

// RK4 on the flow of F using only series gradients; z = (y, x)
Vector rk4_flow(const Series& F, Vector z, int steps)
{
    const int n = F.dim();
    const auto gx = gradient_x(F);
    const auto gy = gradient_y(F);
    auto field = [&](const Vector& s) {
        const Vector y = s.head(n), x = s.tail(n);
        Vector d(2 * n);
        for (int i = 0; i < n; ++i) {
            d[i] = -evaluate_real(gx[i], y, x);
            d[n + i] = evaluate_real(gy[i], y, x);
        }
        return d;
    };
    const double h = 1.0 / steps;
    for (int s = 0; s < steps; ++s) {
        const Vector k1 = field(z);
        const Vector k2 = field(z + 0.5 * h * k1);
        const Vector k3 = field(z + 0.5 * h * k2);
        const Vector k4 = field(z + h * k3);
        z += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return z;
}

StepPlan test_plan()
{
    StepPlan plan;
    plan.domain = AnalyticDomain(1.0, 0.5);
    plan.next_domain = AnalyticDomain(1.0, 0.375);
    plan.gamma = 0.1;
    plan.tau = 1.2;
    return plan;
}

}  // namespace

TEST_CASE("solve_homological: constant divisor closed form")
{
    const Vector omega = vec({1.0, kPhi});
    const NormalForm N = plain_nf(omega, Series(2, 0, 4));
    const double eps = 1e-3;
    const std::vector<int> k0{2, -1};
    const Series R = Series::cos_term(k0, {0, 0}, eps, 8, 4);
    const Series F = solve_homological(N, R, 0.1, 1.2, 8);
    const double div = 2.0 - kPhi;
    const Series want = Series::sin_term(k0, {0, 0}, eps / div, 8, 4);
    CHECK(weighted_norm(F - want, AnalyticDomain(1.0, 0.0)) <= 1e-16);
    CHECK(homological_residual(N, F, R, AnalyticDomain(1.0, 0.5)) <= 1e-17);
    CHECK(bracket_residual(N, F, R, AnalyticDomain(1.0, 0.5)) <= 1e-17);
}

TEST_CASE("solve_homological: averaged input gives F = 0")
{
    const NormalForm N = plain_nf(vec({1.0, kPhi}), Series(2, 0, 4));
    const Series R = Series::constant(2, 2.0, 8, 4) + Series::linear(vec({0.3, 0.1}), 8, 4);
    CHECK(solve_homological(N, R, 0.1, 1.2, 8).empty());
}

TEST_CASE("solve_homological: twist term in hbar")
{
    const Vector omega = vec({1.0, kPhi});
    Series hbar(2, 0, 4);
    hbar.accumulate(MultiIndex({0, 0}, {2, 0}), 0.5);
    hbar.finalize();
    const NormalForm N = plain_nf(omega, hbar);
    const Series R = Series::cos_term({1, 0}, {1, 0}, 1.0, 8, 4);
    const Series F = solve_homological(N, R, 0.1, 1.2, 8);
    CHECK_FALSE(F.empty());
    CHECK(bracket_residual(N, F, R, AnalyticDomain(0.5, 0.2)) <= 1e-12);
    CHECK(homological_residual(N, F, R, AnalyticDomain(0.5, 0.2)) <= 1e-12);
}

TEST_CASE("solve_homological: random instances against the bracket oracle")
{
    std::mt19937_64 rng(41);
    const Vector omega = vec({1.0, kPhi});
    for (int trial = 0; trial < 20; ++trial) {
        const Series hbar = average(oracle::random_series(rng, 2, 0, 4, 6, 0.02));
        const NormalForm N = plain_nf(omega, hbar);
        const Series R = oracle::random_series(rng, 2, 10, 4, 20);
        const Series F = solve_homological(N, R, 0.1, 1.2, 10);
        const AnalyticDomain dom(0.5, 0.1);
        CHECK(bracket_residual(N, F, R, dom) <= 1e-10 * weighted_norm(R, dom));
    }
}

TEST_CASE("solve_homological: small divisors are rejected")
{
    const NormalForm N = plain_nf(vec({1.0, 2.0}), Series(2, 0, 4));
    const Series R = Series::cos_term({2, -1}, {0, 0}, 1.0, 8, 4);
    try {
        solve_homological(N, R, 0.1, 1.2, 8);
        FAIL("resonant mode accepted");
    } catch (const KamError& e) {
        CHECK(e.cause() == Cause::SmallDivisor);
    }
}

TEST_CASE("lie_transform: trivial cases")
{
    std::mt19937_64 rng(43);
    const Series H = oracle::random_series(rng, 2, 3, 2, 6);
    const Series zero(2, 3, 2);
    const LieResult a = lie_transform(H, zero, 6, 20, 8, AnalyticDomain(1.0, 0.1));
    CHECK(weighted_norm(a.value - H, AnalyticDomain(1.0, 0.1)) == 0.0);
    CHECK(a.increment.empty());

    const Series Hx = average(oracle::random_series(rng, 2, 0, 3, 5));
    const Series Fx = average(oracle::random_series(rng, 2, 0, 3, 5));
    const LieResult b = lie_transform(Hx, Fx, 6, 4, 8, AnalyticDomain(1.0, 0.1));
    CHECK(weighted_norm(b.value - Hx, AnalyticDomain(1.0, 0.1)) <= 1e-16);
}

TEST_CASE("lie_transform agrees with the integrated flow of F")
{
    std::mt19937_64 rng(47);
    const Series H = oracle::random_series(rng, 2, 3, 2, 8);
    Series F = oracle::random_series(rng, 2, 3, 2, 8);
    const AnalyticDomain dom(1.0, 0.0);
    F *= 1e-3 / weighted_norm(F, dom);
    const LieResult lie = lie_transform(H, F, 6, 24, 10, dom);

    std::uniform_real_distribution<double> uy(-0.5, 0.5), ux(0.0, 2 * M_PI);
    double worst = 0.0;
    for (int p = 0; p < 50; ++p) {
        const Vector y = vec({uy(rng), uy(rng)});
        const Vector x = vec({ux(rng), ux(rng)});
        Vector z(4);
        z << y, x;
        const Vector end = rk4_flow(F, z, 200);
        const double want = evaluate_real(H, end.head(2), end.tail(2));
        worst = std::max(worst, std::abs(evaluate_real(lie.value, y, x) - want));
    }
    CHECK(worst <= 1e-8);
    CHECK(lie.tail <= 1e-12);
}

TEST_CASE("split_after_transform examples")
{
    Series H = Series::constant(2, 3.0, 1, 2) + Series::linear(vec({2.0, 0.0}), 1, 2) +
               Series::cos_term({1, 0}, {0, 1}, 1.0, 1, 2);
    H.accumulate(MultiIndex({0, 0}, {2, 0}), 1.0);
    H.finalize();
    const Split s = split_after_transform(H);
    CHECK(s.e_inc == 3.0);
    CHECK(s.p01 == vec({2.0, 0.0}));
    CHECK(s.hbar_inc.size() == 1);
    CHECK(s.hbar_inc.coeff(MultiIndex({0, 0}, {2, 0})) == Complex(1.0));
    CHECK(weighted_norm(s.P_plus - Series::cos_term({1, 0}, {0, 1}, 1.0, 1, 2), AnalyticDomain(1, 1)) == 0.0);

    const Series osc = Series::cos_term({1, 1}, {1, 1}, 0.5, 2, 2);
    const Split z = split_after_transform(osc);
    CHECK(z.e_inc == 0.0);
    CHECK(z.p01.norm() == 0.0);
    CHECK(z.hbar_inc.empty());
    CHECK(weighted_norm(z.P_plus - osc, AnalyticDomain(1, 1)) == 0.0);

    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 20; ++trial) {
        const Series R = oracle::random_series(rng, 2, 4, 4, 20) + average(oracle::random_series(rng, 2, 0, 4, 8));
        const Split sp = split_after_transform(R);
        const Series back = Series::constant(2, sp.e_inc, 4, 4) + Series::linear(sp.p01, 4, 4) + sp.hbar_inc + sp.P_plus;
        CHECK(weighted_norm(back - R, AnalyticDomain(1, 1)) == 0.0);
    }
}

TEST_CASE("translate_parameter: linear map and constant drift")
{
    const Vector xi0 = vec({1.0, kPhi});
    const FrequencyMap id = identity_map(xi0, 0.1);
    const Vector c = vec({1e-4, -2e-5});
    TranslationOptions opt;
    const auto r = translate_parameter(id, [&](const Vector&) { return c; }, xi0, opt);
    CHECK((r.xi - (xi0 - c)).norm() <= 1e-15);

    const auto base = translate_parameter(id, [](const Vector&) { return Vector(Vector::Zero(2)); }, xi0, opt);
    CHECK(base.xi == xi0);
    CHECK(base.residual == 0.0);
}

TEST_CASE("translate_parameter: quadratic map against a zooming grid search")
{
    const Vector xi0 = vec({0.4, 0.7});
    const double delta = 0.1;
    const Vector c = vec({1e-4, 1e-4});
    FrequencyMap map = quadratic_map(xi0, delta, 0.1);
    const Vector target = map.omega0();

    // grid search for |omega(xi) + c - omega(xi0)| on shrinking boxes
    Vector centre = xi0;
    double half = delta;
    for (int level = 0; level < 12; ++level) {
        double best = INFINITY;
        Vector arg = centre;
        const int N = 40;
        for (int i = -N; i <= N; ++i)
            for (int j = -N; j <= N; ++j) {
                const Vector xi = centre + vec({half * i / N, half * j / N});
                const double v = (map(xi) + c - target).norm();
                if (v < best) {
                    best = v;
                    arg = xi;
                }
            }
        centre = arg;
        half *= 4.0 / N;
    }

    TranslationOptions opt;
    const auto smooth = translate_parameter(map, [&](const Vector&) { return c; }, xi0, opt);
    CHECK((smooth.xi - centre).norm() <= 1e-10);

    map.smooth = false;
    const auto compass = translate_parameter(map, [&](const Vector&) { return c; }, xi0, opt);
    CHECK((compass.xi - centre).norm() <= 1e-10);
    CHECK(compass.method != smooth.method);
}

TEST_CASE("translate_parameter: targets outside the ball")
{
    const Vector xi0 = vec({1.0, kPhi});
    const FrequencyMap id = identity_map(xi0, 0.1);
    TranslationOptions opt;
    try {
        translate_parameter(id, [](const Vector&) { return Vector(Vector::Constant(2, 0.5)); }, xi0, opt);
        FAIL("escaped the ball");
    } catch (const KamError& e) {
        CHECK((e.cause() == Cause::BoundaryApproach || e.cause() == Cause::TranslationFailure));
    }
}

TEST_CASE("kam_step: zero perturbation")
{
    Problem p;
    p.freq = identity_map(vec({1.0, kPhi}), 0.1);
    p.perturbation = [](const Vector&) { return Series(2, 8, 4); };
    p.epsilon = 1e-6;
    const StepPlan plan = test_plan();
    const KamState s0 = initial_state(p, p.freq.base_point, plan);
    const auto [s1, rep] = kam_step(p, {}, s0, plan, TranslationOptions{});
    CHECK(s1.nu == 1);
    CHECK(s1.xi == s0.xi);
    CHECK(s1.P.empty());
    CHECK(rep.norms.P_before == 0.0);
    CHECK(rep.norms.P_after == 0.0);
    CHECK(rep.norms.F == 0.0);
    CHECK(rep.xi_increment == 0.0);
    CHECK(rep.freq_residual == 0.0);
}

TEST_CASE("kam_step: single mode first step")
{
    const double eps = 1e-6;
    Problem p;
    p.freq = identity_map(vec({1.0, kPhi}), 0.1);
    p.perturbation = [](const Vector&) { return Series::cos_term({1, 0}, {0, 0}, 1.0, 1, 0); };
    p.epsilon = eps;
    const StepPlan plan = test_plan();
    const KamState s0 = initial_state(p, p.freq.base_point, plan);
    const auto [s1, rep] = kam_step(p, {}, s0, plan, TranslationOptions{});
    // F = eps sin(x1) / <(1,0), omega0>
    const Series want = Series::sin_term({1, 0}, {0, 0}, eps, 8, 4);
    REQUIRE(s1.generators.size() == 1);
    CHECK(weighted_norm(s1.generators[0] - want, AnalyticDomain(1.0, 0.0)) <= 1e-20);
    CHECK(rep.norms.P_after <= 10 * eps * rep.norms.P_before);
    CHECK(rep.freq_residual <= 1e-14);
    CHECK(rep.homological_residual <= 1e-20);
}

TEST_CASE("kam_step: oversize generator is a non-contraction")
{
    Problem p;
    p.freq = identity_map(vec({1.0, kPhi}), 0.1);
    p.perturbation = [](const Vector&) { return Series::cos_term({1, 0}, {0, 0}, 1.0, 1, 0); };
    p.epsilon = 0.5;
    StepPlan plan = test_plan();
    plan.domain = AnalyticDomain(0.01, 0.5);
    const KamState s0 = initial_state(p, p.freq.base_point, plan);
    try {
        kam_step(p, {}, s0, plan, TranslationOptions{});
        FAIL("accepted");
    } catch (const KamError& e) {
        CHECK(e.cause() == Cause::NonContraction);
    }
}

TEST_CASE("symplectic defect of time-one maps")
{
    std::mt19937_64 rng(59);
    Series F = oracle::random_series(rng, 2, 3, 2, 8);
    F *= 1e-3 / weighted_norm(F, AnalyticDomain(1.0, 0.0));
    const auto rep = symplectic_defect(F, 20, 1, 0.5);
    CHECK(rep.points == 20);
    CHECK(rep.max_defect <= 1e-6);

    // the map itself against an independent RK4
    const PhaseState z{0.1, -0.2, 0.3, 1.1};
    const PhaseState a = time_one_map(F, z);
    Vector zz(4);
    zz << 0.1, -0.2, 0.3, 1.1;
    const Vector b = rk4_flow(F, zz, 400);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);

    // identity flow: only central-difference roundoff, about 1e-16 / h
    CHECK(symplectic_defect(Series(2, 0, 1), 5, 1, 0.5).max_defect <= 1e-10);
}

TEST_CASE("StepReport JSON")
{
    StepReport r;
    r.nu = 2;
    r.xi = vec({1, 2});
    r.xi_next = vec({1, 2});
    r.p01 = vec({0, 0});
    const nlohmann::json j = r;
    CHECK(j["nu"] == 2);
    CHECK(j.contains("norms"));
    CHECK(j["xi"].size() == 2);
}
