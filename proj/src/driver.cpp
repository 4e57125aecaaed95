#include "kam/driver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace kam {

namespace {

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

double paper_cutoff(double log_mu_prev, int eta)
{
    const double base = std::floor(-log_mu_prev) + 1.0;
    if (base <= 1.0) return 1.0;
    return std::pow(base, 3.0 * eta);
}

// largest coefficient-majorant of the y-Hessian of hbar on |y| < s
double hessian_bound(const Series& hbar, double s)
{
    if (hbar.empty()) return 0.0;
    const AnalyticDomain dom(s, 0.0);
    double best = 0.0;
    for (int i = 0; i < hbar.dim(); ++i)
        for (int j = 0; j < hbar.dim(); ++j)
            best = std::max(best, weighted_norm(derivative_y(derivative_y(hbar, i), j), dom));
    return best;
}

}  // namespace

AnalyticDomain Schedule::domain(int nu) const
{
    return AnalyticDomain(std::min(s[nu], s0), r[nu]);
}

int minimal_eta(double rho)
{
    int eta = 1;
    while (std::pow(1.0 + rho, eta) <= 2.0) ++eta;
    return eta;
}

Schedule make_schedule(double eps, double tau, int eta, double r, double s, double Mstar, int steps, double c0)
{
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    if (!(r > 0.0) || !(s > 0.0)) throw std::invalid_argument("r and s must be positive");
    if (steps < 0) throw std::invalid_argument("steps must be non-negative");
    Schedule sc;
    sc.epsilon = eps;
    sc.tau = tau;
    sc.eta = eta > 0 ? eta : minimal_eta(sc.rho);
    sc.c0 = c0;
    sc.Mstar = Mstar;
    sc.r0 = r;
    sc.s_input = s;
    sc.gamma0 = std::pow(eps, 1.0 / 20.0);
    const double log_mu0 = std::log(eps) / (40.0 * sc.eta * (tau + 1.0));
    sc.mu0 = std::exp(log_mu0);
    sc.K1 = paper_cutoff(log_mu0, sc.eta);
    sc.s0 = s * sc.gamma0 / (16.0 * (Mstar + 2.0) * std::pow(sc.K1, tau + 1.0));
    sc.mu_star = sc.mu0 / (std::pow(Mstar + 2.0, 3) * std::pow(sc.K1, 5.0 * (tau + 1.0)));

    const int len = std::max(steps + 1, 10);
    const double log_gain = std::log(std::pow(8.0, 4) * c0);
    sc.log_mu.push_back(log_mu0);
    for (int nu = 1; nu < len; ++nu) sc.log_mu.push_back(log_gain + (1.0 + sc.rho) * sc.log_mu.back());

    bool decreasing = sc.mu0 < 1.0;
    for (int nu = 1; nu < 10; ++nu)
        if (!(sc.log_mu[nu] < sc.log_mu[nu - 1])) decreasing = false;
    sc.feasible = decreasing;
    // mu_1 < mu_0 iff log mu_0 < -log_gain / rho
    sc.eps_threshold_log10 = -(log_gain / sc.rho) * 40.0 * sc.eta * (tau + 1.0) / std::log(10.0);

    sc.log_mu.resize(steps + 1);
    double partial = 0.0;
    for (int nu = 0; nu <= steps; ++nu) {
        sc.mu.push_back(std::exp(sc.log_mu[nu]));
        sc.alpha.push_back(std::exp(sc.log_mu[nu] / 5.0));
        sc.K.push_back(nu == 0 ? sc.K1 : paper_cutoff(sc.log_mu[nu - 1], sc.eta));
        if (nu > 0) partial += std::ldexp(1.0, -nu - 1);
        sc.r.push_back(r * (1.0 - partial));
        sc.s.push_back(nu == 0 ? sc.s0 : sc.alpha[nu - 1] * sc.s[nu - 1] / 8.0);
    }
    return sc;
}

Series state_hamiltonian(const KamState& s)
{
    return s.nf.as_series(s.P.k_max(), s.P.l_max()) + s.P;
}

ConvergenceTrace run(const Problem& problem, const RunOptions& opt)
{
    ConvergenceTrace t;
    const int n = problem.freq.n;
    t.xi0 = problem.freq.base_point;
    t.xi_star = t.xi0;
    const Vector omega0 = problem.freq.omega0();

    const double Mstar = hessian_bound(problem.hbar0.dim() == n ? problem.hbar0 : Series(n, 0, 0), opt.s);
    t.schedule = make_schedule(problem.epsilon, opt.tau, opt.eta, opt.r, opt.s, Mstar, opt.steps, opt.c0);
    t.gamma = opt.gamma > 0.0 ? opt.gamma : t.schedule.gamma0;

    t.dioph = check_diophantine(omega0, t.gamma, opt.tau, opt.kmax);
    if (!t.dioph.valid) {
        t.cause = Cause::Certification;
        std::ostringstream os;
        os << "omega(xi0) fails the Diophantine bound up to |k| <= " << opt.kmax << ": min scaled divisor "
           << t.dioph.min_scaled << " < gamma " << t.gamma << " at witness k = " << nlohmann::json(t.dioph.witness_k);
        t.message = os.str();
        return t;
    }
    t.a2 = certify_weak_convexity(problem.freq, opt.a2_samples, opt.seed);
    if (!t.a2.pass) {
        t.cause = Cause::Certification;
        t.message = "weak convexity lower bound fails on sampled pairs, worst ratio " + std::to_string(t.a2.worst_ratio);
        return t;
    }

    for (int nu = 0; nu < opt.steps; ++nu) {
        StepPlan p;
        p.K = opt.kmax;
        p.L = 4;
        p.K_store = 3 * opt.kmax;
        p.L_store = 8;
        p.lie_order = opt.lie_order;
        p.domain = t.schedule.domain(nu);
        p.next_domain = t.schedule.domain(nu + 1);
        p.gamma = t.gamma;
        p.tau = opt.tau;
        p.symplectic_points = opt.symplectic_points;
        p.seed = opt.seed;
        t.plans.push_back(p);
    }
    if (t.plans.empty()) {
        StepPlan p;
        p.domain = t.schedule.domain(0);
        p.next_domain = p.domain;
        t.final_state = initial_state(problem, t.xi0, p);
        t.P_norms.push_back(weighted_norm(t.final_state.P, p.domain));
        t.final_residual = (t.final_state.nf.lin - omega0).norm();
        return t;
    }

    KamState state = initial_state(problem, t.xi0, t.plans[0]);
    const Series hbar0 = state.nf.hbar;
    t.P_norms.push_back(weighted_norm(state.P, t.plans[0].domain));
    TranslationOptions topt;
    topt.tol = opt.translation_tol;

    for (int nu = 0; nu < opt.steps; ++nu) {
        if (opt.stop_tol > 0.0 && t.P_norms.back() < opt.stop_tol) break;
        const std::vector<StepPlan> history(t.plans.begin(), t.plans.begin() + nu);
        try {
            auto [next, rep] = kam_step(problem, history, state, t.plans[nu], topt);
            state = std::move(next);
            t.P_norms.push_back(rep.norms.P_after);
            t.increments.push_back(rep.xi_increment);
            t.freq_residuals.push_back(rep.freq_residual);
            t.steps.push_back(std::move(rep));
        } catch (const KamError& e) {
            t.cause = e.cause();
            t.message = "step " + std::to_string(nu) + ": " + e.what();
            break;
        }
    }

    t.final_state = state;
    t.xi_star = state.xi;
    t.final_residual = (state.nf.lin - omega0).norm();

    t.fitted_exponent = std::numeric_limits<double>::infinity();
    for (std::size_t nu = 1; nu + 1 < t.P_norms.size(); ++nu) {
        const double a = t.P_norms[nu], b = t.P_norms[nu + 1];
        if (a > 0.0 && a < 1.0 && b > 0.0) t.fitted_exponent = std::min(t.fitted_exponent, std::log(b) / std::log(a));
    }
    for (std::size_t nu = 0; nu < t.increments.size(); ++nu)
        t.cauchy_C = std::max(t.cauchy_C, t.increments[nu] / t.schedule.mu[nu]);
    t.hbar_drift = weighted_norm(state.nf.hbar - hbar0, state.domain);
    t.hbar_within_bound = t.hbar_drift <= 2.0 * std::sqrt(t.schedule.mu_star);
    return t;
}

void to_json(nlohmann::json& j, const Schedule& s)
{
    j = {{"epsilon", s.epsilon},
         {"tau", s.tau},
         {"rho", s.rho},
         {"eta", s.eta},
         {"c0", s.c0},
         {"Mstar", s.Mstar},
         {"gamma0", s.gamma0},
         {"mu0", s.mu0},
         {"r0", s.r0},
         {"s", s.s_input},
         {"s0", s.s0},
         {"K1", s.K1},
         {"mu_star", s.mu_star},
         {"log_mu", s.log_mu},
         {"alpha_log", [&] {
              std::vector<double> v;
              for (double l : s.log_mu) v.push_back(l / 5.0);
              return v;
          }()},
         {"s_nu", s.s},
         {"r_nu", s.r},
         {"K_nu", s.K},
         {"feasible", s.feasible},
         {"eps_threshold_log10", s.eps_threshold_log10}};
}

nlohmann::json trace_header(const ConvergenceTrace& t, const Problem& problem)
{
    nlohmann::json plans = nlohmann::json::array();
    for (const auto& p : t.plans)
        plans.push_back({{"K", p.K},
                         {"L", p.L},
                         {"K_store", p.K_store},
                         {"L_store", p.L_store},
                         {"lie_order", p.lie_order},
                         {"s", p.domain.s},
                         {"r", p.domain.r}});
    return {{"type", "header"},
            {"problem", problem.descriptor},
            {"frequency_map", problem.freq.descriptor},
            {"n", problem.freq.n},
            {"epsilon", problem.epsilon},
            {"xi0", to_std(t.xi0)},
            {"delta", problem.freq.ball_radius},
            {"gamma", t.gamma},
            {"schedule", t.schedule},
            {"plans", plans},
            {"certificates", {{"diophantine", t.dioph}, {"weak_convexity", t.a2}}}};
}

nlohmann::json trace_summary(const ConvergenceTrace& t, const TorusReport* torus)
{
    nlohmann::json j = {{"success", t.success()},
                        {"cause", to_string(t.cause)},
                        {"message", t.message},
                        {"steps_completed", t.steps.size()},
                        {"xi0", to_std(t.xi0)},
                        {"xi_star", to_std(t.xi_star)},
                        {"freq_residual", t.final_residual},
                        {"P_norms", t.P_norms},
                        {"increments", t.increments},
                        {"freq_residuals", t.freq_residuals},
                        {"fitted_exponent", t.fitted_exponent},
                        {"cauchy_C", t.cauchy_C},
                        {"hbar_drift", t.hbar_drift},
                        {"hbar_within_bound", t.hbar_within_bound}};
    if (torus) j["torus"] = *torus;
    return j;
}

}  // namespace kam
