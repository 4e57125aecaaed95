#ifndef KAM_DRIVER_HPP
#define KAM_DRIVER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "kam/flow.hpp"
#include "kam/frequency.hpp"
#include "kam/step.hpp"

namespace kam {

/// Parameter schedule of the iteration with rho = 1/10. The mu
/// recurrence is kept in log form; with c0 = 1 it contracts only for
/// astronomically small eps, so it is diagnostic. The numerical truncation is
/// the fixed cutoff k_max.
struct Schedule {
    double epsilon = 0.0;
    double tau = 0.0;
    double rho = 0.1;
    int eta = 8;
    double c0 = 1.0;
    double Mstar = 0.0;
    double gamma0 = 0.0;
    double mu0 = 0.0;
    double r0 = 0.0;
    double s_input = 0.0;
    double s0 = 0.0;
    double K1 = 1.0;
    double mu_star = 0.0;
    std::vector<double> log_mu;  // natural log of mu_nu, nu = 0..steps
    std::vector<double> mu;
    std::vector<double> alpha;
    std::vector<double> s;       // recurrence s_nu
    std::vector<double> r;
    std::vector<double> K;       // schedule cutoffs, clamped to >= 1
    bool feasible = false;
    double eps_threshold_log10 = 0.0;  // schedule contracts for eps below 10^this

    /// Norm domain used at step nu: s capped at s0.
    AnalyticDomain domain(int nu) const;
};

/// Smallest integer eta with (1 + rho)^eta > 2.
int minimal_eta(double rho = 0.1);

Schedule make_schedule(double eps, double tau, int eta, double r, double s, double Mstar, int steps,
                       double c0 = 1.0);

struct RunOptions {
    int steps = 5;
    double stop_tol = 0.0;
    double translation_tol = 1e-14;
    int kmax = 8;
    int lie_order = 6;
    double r = 0.5;
    double s = 1.0;
    int eta = 0;  // 0 selects minimal_eta()
    double c0 = 1.0;
    double gamma = 0.0;  // <= 0 selects eps^(1/20)
    double tau = 1.2;
    std::uint64_t seed = 1;
    int a2_samples = 2000;
    int symplectic_points = 20;
};

struct ConvergenceTrace {
    Schedule schedule;
    DiophantineCert dioph;
    WeakConvexityReport a2;
    double gamma = 0.0;
    std::vector<StepPlan> plans;
    std::vector<StepReport> steps;
    std::vector<double> P_norms;         // ||P_nu||, nu = 0..steps
    std::vector<double> increments;      // |xi_{nu+1} - xi_nu|
    std::vector<double> freq_residuals;  // after each step
    Vector xi0;
    Vector xi_star;
    double final_residual = 0.0;
    double fitted_exponent = 0.0;  // min log||P_{nu+1}|| / log||P_nu|| over nu >= 1
    double cauchy_C = 0.0;         // max |xi_{nu+1} - xi_nu| / mu_nu
    double hbar_drift = 0.0;       // ||hbar_nu - hbar_0||
    bool hbar_within_bound = true; // hbar_drift <= 2 sqrt(mu_star)
    KamState final_state;
    Cause cause = Cause::None;
    std::string message;

    bool success() const { return cause == Cause::None; }
};

/// Certifies omega(xi0) and the weak convexity bound, then iterates kam_step.
/// Never throws KamError: failures end the trace with a cause.
ConvergenceTrace run(const Problem& problem, const RunOptions& opt);

/// e + <lin, y> + hbar + P of a state, as one series.
Series state_hamiltonian(const KamState& s);

void to_json(nlohmann::json& j, const Schedule& s);
/// Header line for the JSON-lines trace.
nlohmann::json trace_header(const ConvergenceTrace& t, const Problem& problem);
nlohmann::json trace_summary(const ConvergenceTrace& t, const TorusReport* torus = nullptr);

}  // namespace kam

#endif  // KAM_DRIVER_HPP
