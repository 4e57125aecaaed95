#ifndef KAM_FREQUENCY_HPP
#define KAM_FREQUENCY_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kam/modulus.hpp"
#include "kam/series.hpp"

namespace kam {

/// xi -> omega(xi) on the ball B(xi0, delta), with the lower modulus of the
/// weak convexity bound |omega(xi) - omega(zeta)| >= w2(|xi - zeta|).
struct FrequencyMap {
    int n = 0;
    std::function<Vector(const Vector&)> eval;
    Vector base_point;
    double ball_radius = 0.0;
    ModulusOfContinuity lower_modulus = ModulusOfContinuity::lipschitz();
    std::string descriptor;
    /// false selects the derivative-free translation search
    bool smooth = true;

    Vector operator()(const Vector& xi) const { return eval(xi); }
    Vector omega0() const { return eval(base_point); }
};

FrequencyMap identity_map(const Vector& xi0, double delta);
/// omega(xi) = xi + c * (xi o xi), componentwise square.
FrequencyMap quadratic_map(const Vector& xi0, double delta, double c);
/// omega(xi) = a * xi.
FrequencyMap scaled_map(const Vector& xi0, double delta, double a);

/// |<k, omega>|; rejects k = 0.
double small_divisor(const std::vector<int>& k, const Vector& omega);

/// Finite-cutoff Diophantine check of omega up to |k| <= k_max.
struct DiophantineCert {
    double gamma = 0.0;
    double tau = 0.0;
    int k_max = 0;
    double min_scaled = 0.0;          // min |<k,omega>| |k|^tau
    std::vector<int> witness_k;       // argmin, lexicographically smallest on ties
    bool valid = false;               // min_scaled >= gamma
    std::vector<int> first_failing_k; // first k in scan order below gamma (violations only)
};

/// Scans shells |k| = 1..k_max over the half space whose first nonzero
/// component is positive; the divisor is even in k.
DiophantineCert check_diophantine(const Vector& omega, double gamma, double tau, int k_max);

/// Scaled divisor |<k,omega>| |k|^tau as computed by the scan.
double scaled_divisor(const std::vector<int>& k, const Vector& omega, double tau);

struct WeakConvexityReport {
    int samples = 0;
    std::uint64_t seed = 0;
    double worst_ratio = 0.0;
    Vector worst_xi;
    Vector worst_zeta;
    bool pass = false;
};

/// Sampled check of |omega(xi) - omega(zeta)| / w2(|xi - zeta|) >= 1 on pairs
/// in B(xi0, delta) with 0 < |xi - zeta| <= 1.
WeakConvexityReport certify_weak_convexity(const FrequencyMap& map, int samples, std::uint64_t seed);

/// "golden" -> (1, phi) in 2D; "spread" -> (1, sqrt 2, sqrt 3, sqrt 5, ...).
Vector named_frequency(const std::string& name, int n);

void to_json(nlohmann::json& j, const DiophantineCert& c);
void to_json(nlohmann::json& j, const WeakConvexityReport& r);

}  // namespace kam

#endif  // KAM_FREQUENCY_HPP
