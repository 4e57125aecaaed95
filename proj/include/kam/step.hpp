#ifndef KAM_STEP_HPP
#define KAM_STEP_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "kam/errors.hpp"
#include "kam/frequency.hpp"
#include "kam/series.hpp"

namespace kam {

/// H(y, x, xi) = <omega(xi), y> + eps P(y, x, xi) + hbar0(y).
struct Problem {
    FrequencyMap freq;
    std::function<Series(const Vector&)> perturbation;  // P(xi), not yet scaled by eps
    double epsilon = 0.0;
    Series hbar0;  // empty means zero
    std::string descriptor;
};

/// N = e + <lin, y> + hbar(y). The divisors use omega0; lin = omega(xi) plus
/// the accumulated drift is what the translation drives back to omega0.
struct NormalForm {
    double e = 0.0;
    Vector omega0;
    Vector lin;
    Series hbar;
    std::vector<Vector> drift;  // p01^j at the state's xi

    Vector drift_total() const;
    Series as_series(int k_max, int l_max) const;
};

struct KamState {
    int nu = 0;
    Vector xi;
    NormalForm nf;
    Series P;
    AnalyticDomain domain;
    std::vector<Series> generators;  // F_0 .. F_{nu-1} at xi
};

/// Everything one step needs besides the state.
struct StepPlan {
    int K = 8;         // truncation |k| <= K for R and F
    int L = 4;         // truncation |l| <= L for R and F
    int K_store = 24;  // cutoffs for the transformed Hamiltonian
    int L_store = 8;
    int lie_order = 6;
    AnalyticDomain domain;
    AnalyticDomain next_domain;
    double gamma = 0.1;
    double tau = 1.2;
    int symplectic_points = 20;
    std::uint64_t seed = 1;
};

struct StepNorms {
    double P_before = 0.0;
    double R = 0.0;
    double P_minus_R = 0.0;
    double F = 0.0;
    double P_after = 0.0;
};

struct StepReport {
    int nu = 0;
    Vector xi;
    Vector xi_next;
    double freq_residual = 0.0;
    double xi_increment = 0.0;
    StepNorms norms;
    double homological_residual = 0.0;  // ||{N,F} + R - [R]||, absolute
    double transform_tail = 0.0;
    double symplectic_defect = 0.0;
    double contraction_ratio = 0.0;  // P_after / P_before
    double e = 0.0;
    Vector p01;
    double hbar_norm = 0.0;
    int translation_iterations = 0;
    std::string translation_method;
};

/// Solves i <k, omega0 + d_y hbar(y)> f_k(y) = p_k(y) mode by mode in the
/// degree <= 4 polynomial algebra, so that {N, F} + R - [R] = 0 there.
Series solve_homological(const NormalForm& N, const Series& R, double gamma, double tau, int K);

/// ||{N, F} + R - [R]|| with N = <omega0, y> + hbar, brackets kept to |l| <= 4.
double homological_residual(const NormalForm& N, const Series& F, const Series& R, const AnalyticDomain& dom);

struct LieResult {
    Series value;
    Series increment;   // value - H, summed without H to avoid cancellation
    double tail = 0.0;  // ||ad^{J+1} H|| / (J+1)!
};

/// sum_{j <= J} ad_F^j(H) / j! with ad_F(G) = {G, F}, i.e. H composed with the
/// time-1 flow of F.
LieResult lie_transform(const Series& H, const Series& F, int order, int K, int L, const AnalyticDomain& dom);

struct Split {
    double e_inc = 0.0;
    Vector p01;
    Series hbar_inc;
    Series P_plus;
};

/// Sorts the angle average by degree (0 -> e, 1 -> p01, >= 2 -> hbar); the
/// oscillating part is the new perturbation.
Split split_after_transform(const Series& H_new);

struct TranslationOptions {
    double tol = 1e-14;
    int max_iter = 60;
    double start_radius = 0.0;  // compass search; 0 picks |residual at start|
};

struct TranslationResult {
    Vector xi;
    double residual = 0.0;
    int iterations = 0;
    std::string method;
};

/// Root of omega(xi) + drift(xi) = omega(xi0) inside B(xi0, delta). Damped
/// quasi-Newton for smooth maps, compass search otherwise. Throws
/// KamError(TranslationFailure) or KamError(BoundaryApproach) when the root
/// lies beyond 0.9 delta.
TranslationResult translate_parameter(const FrequencyMap& map, const std::function<Vector(const Vector&)>& drift,
                                      const Vector& xi_start, const TranslationOptions& opt);

KamState initial_state(const Problem& problem, const Vector& xi, const StepPlan& first);

struct StepOutcome {
    KamState next;  // same xi, nu + 1
    Series F;
    StepNorms norms;
    double homological_residual = 0.0;
    double transform_tail = 0.0;
    Vector p01;
};

/// Truncate, solve, transform and split at the state's own xi.
StepOutcome advance(const KamState& state, const StepPlan& plan);

/// Recomputes the state after plans[0..steps) at parameter xi.
KamState replay(const Problem& problem, const std::vector<StepPlan>& plans, const Vector& xi, int steps);

/// Guard: max ||d_x F|| < s/8 and max ||d_y F|| < (r - r_next)/8, so the
/// time-1 map sends the next domain into the current one.
void check_generator_size(const Series& F, const StepPlan& plan);

/// One full step; history holds the plans of steps 0..nu-1.
std::pair<KamState, StepReport> kam_step(const Problem& problem, const std::vector<StepPlan>& history,
                                         const KamState& state, const StepPlan& plan,
                                         const TranslationOptions& topt);

void to_json(nlohmann::json& j, const StepReport& r);

}  // namespace kam

#endif  // KAM_STEP_HPP
