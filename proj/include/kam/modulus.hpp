#ifndef KAM_MODULUS_HPP
#define KAM_MODULUS_HPP

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <json.hpp>

namespace kam {

/// Extended precision used wherever construction inequalities must be
/// re-verified with margin to spare.
using Real = boost::multiprecision::cpp_bin_float_50;

/// A modulus of continuity: strictly increasing on (0, 1], vanishing at 0+.
/// The log-Lipschitz member is 1 / (1 - ln x), which behaves like -1/ln x at 0+.
class ModulusOfContinuity {
public:
    enum class Kind { Hoelder, Lipschitz, LogLipschitz, Custom };

    static ModulusOfContinuity hoelder(double exponent, double scale = 1.0);
    static ModulusOfContinuity lipschitz(double scale = 1.0);
    static ModulusOfContinuity log_lipschitz(double scale = 1.0);
    static ModulusOfContinuity custom(std::function<double(double)> fn, std::string name);

    /// Parses "holder:<beta>", "lipschitz", "loglip", each optionally
    /// followed by "*<scale>".
    static ModulusOfContinuity parse(const std::string& spec);

    Kind kind() const { return kind_; }
    double exponent() const { return exponent_; }
    double scale() const { return scale_; }
    std::string spec() const;

    template <typename T>
    T operator()(const T& x) const
    {
        using std::log;
        using std::pow;
        switch (kind_) {
        case Kind::Hoelder: return T(scale_) * pow(x, T(exponent_));
        case Kind::Lipschitz: return T(scale_) * x;
        case Kind::LogLipschitz: return T(scale_) / (T(1) - log(x));
        case Kind::Custom: return T(scale_ * fn_(static_cast<double>(x)));
        }
        return T(0);
    }

    /// Inverse on the range of the modulus; closed form except for Custom,
    /// which is inverted by bisection in log x.
    template <typename T>
    T inverse(const T& y) const
    {
        using std::exp;
        using std::pow;
        switch (kind_) {
        case Kind::Hoelder: return pow(y / T(scale_), T(1.0 / exponent_));
        case Kind::Lipschitz: return y / T(scale_);
        case Kind::LogLipschitz: return exp(T(1) - T(scale_) / y);
        case Kind::Custom: return T(custom_inverse(static_cast<double>(y)));
        }
        return T(0);
    }

private:
    double custom_inverse(double y) const;

    Kind kind_ = Kind::Lipschitz;
    double exponent_ = 1.0;
    double scale_ = 1.0;
    std::function<double(double)> fn_;
    std::string name_;
};

enum class Trend { Decreasing, Increasing, Mixed };

/// Dyadic-grid estimate of limsup w1(x)/w2(x) as x -> 0+.
struct OrderingReport {
    bool established = false;   // w1 <~ w2 on the grid
    double observed_sup = 0.0;  // max ratio over the grid
    double tail_value = 0.0;    // ratio at the finest grid point
    Trend tail_trend = Trend::Mixed;
    std::vector<double> ratios;  // x = 2^-j, j = 1..40
    std::string relation;
};

OrderingReport compare_moduli(const ModulusOfContinuity& w1, const ModulusOfContinuity& w2);

struct ModulusCheck {
    bool strictly_increasing = false;
    bool vanishing_trend = false;
    bool bounded_x_over_w = false;
    double max_x_over_w = 0.0;
    bool valid() const { return strictly_increasing && vanishing_trend && bounded_x_over_w; }
    std::string note;
};

/// Grid check of the modulus axioms at x = 2^-j, j <= 40. The limits involved
/// cannot be certified from a finite grid; the note says so.
ModulusCheck validate(const ModulusOfContinuity& w);

const char* to_string(Trend t);
void to_json(nlohmann::json& j, const OrderingReport& r);
void to_json(nlohmann::json& j, const ModulusCheck& c);

}  // namespace kam

#endif  // KAM_MODULUS_HPP
