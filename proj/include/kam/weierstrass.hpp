#ifndef KAM_WEIERSTRASS_HPP
#define KAM_WEIERSTRASS_HPP

#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "kam/modulus.hpp"
#include "kam/series.hpp"

namespace kam {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Raised when the b-sequence violates b_m/2 - sum_{n>m} b_n > 0.
class InfeasibleSequence : public std::invalid_argument {
public:
    InfeasibleSequence(int m, const std::string& what) : std::invalid_argument(what), first_bad_m(m) {}
    int first_bad_m;
};

/// Positive coefficient sequence b_n with a closed-form tail.
struct BSequence {
    enum class Form { Gaussian, Geometric, Harmonic, Custom };

    Form form = Form::Gaussian;
    double c = 5.0;  // exp(-c n^2) or q^n
    std::function<Real(int)> custom;
    std::string custom_name;

    static BSequence gaussian(double c);
    static BSequence geometric(double q);
    static BSequence harmonic();

    Real b(int n) const;
    /// sum_{n > m} b_n, or +inf when the series diverges.
    Real tail(int m) const;
    bool summable() const;
    std::string name() const;
};

struct WeierstrassFamily {
    BSequence b;
    ModulusOfContinuity w1 = ModulusOfContinuity::lipschitz();
    int M = 0;
    std::vector<BigInt> a;         // a[m-1] = a_m
    std::vector<Real> b_values;    // b_values[m-1] = b_m
    Real total;                    // sum_{n >= 1} b_n
    Real tail_bound;               // sum_{n > M} b_n
    bool fits_int64 = true;        // every a_m fits a signed 64-bit integer

    double tail_bound_double() const { return static_cast<double>(tail_bound); }
};

/// Greedy construction: a_0 = 1 and a_m = a_{m-1} q with q the smallest even
/// integer meeting the growth condition a_m / a_{m-1} >= 2 pi sum b / b_m and
/// a_m >= 1 / w1^{-1}((b_m/2 - sum_{n>m} b_n) / m).
WeierstrassFamily build_weierstrass(const ModulusOfContinuity& w1, const BSequence& b, int M);

struct FamilyCheck {
    bool positivity = false;
    bool a1 = false;
    bool a2 = false;
    bool a3 = false;
    bool all() const { return positivity && a1 && a2 && a3; }
};

/// Re-evaluates every construction inequality: integers exactly, reals in
/// 50-digit arithmetic without the construction margin.
FamilyCheck verify(const WeierstrassFamily& fam);

struct WeierstrassValue {
    double value = 0.0;
    double error_bound = 0.0;
};

/// Partial sum over n <= M with the phase a_n x reduced exactly.
WeierstrassValue eval_weierstrass(const WeierstrassFamily& fam, double x);
Real eval_weierstrass_exact(const WeierstrassFamily& fam, const Rational& x);
/// f(x + h) - f(x) via the sine difference identity, each phase reduced exactly.
Real weierstrass_difference(const WeierstrassFamily& fam, const Rational& x, const Rational& h);

struct ProbeResult {
    int m = 0;
    double r_m = 0.0;
    double dx = 0.0;
    double quotient = 0.0;
    double threshold = 0.0;  // m / 2
    bool degenerate = false;
    bool exceeds = false;
};

/// Difference quotients |f(x + dx) - f(x)| / w(|dx|) at the offsets
/// dx = (-sgn(r_m)/2 - r_m) / a_m.
std::vector<ProbeResult> probe_quotient_growth(const WeierstrassFamily& fam, double x, int m_first, int m_last);
std::vector<ProbeResult> probe_quotient_growth(const WeierstrassFamily& fam, double x, int m_first, int m_last,
                                               const ModulusOfContinuity& w);

struct OmegaStar {
    int N = 0;
    double value = 0.0;
};

/// Explicit upper modulus 4 sum_{n > N(h)} b_n; a step function of h.
OmegaStar omega_star(const WeierstrassFamily& fam, double h);

struct SeminormSpec {
    Vector center;
    double radius = 1.0;
    int pairs = 1000;
    std::uint64_t seed = 1;
};

/// Empirical sup of ||P(xi) - P(zeta)|| / w(|xi - zeta|), a lower bound for
/// the seminorm.
double seminorm(const std::function<Series(const Vector&)>& family, const ModulusOfContinuity& w,
                const AnalyticDomain& dom, const SeminormSpec& spec);

void to_json(nlohmann::json& j, const WeierstrassFamily& fam);
WeierstrassFamily family_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const FamilyCheck& c);
void to_json(nlohmann::json& j, const ProbeResult& p);

/// CSV with columns x, f(x), err_bound on a uniform grid of [lo, hi].
void write_samples_csv(std::ostream& os, const WeierstrassFamily& fam, double lo, double hi, int count);

}  // namespace kam

#endif  // KAM_WEIERSTRASS_HPP
