#include "kam/modulus.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace kam {

namespace {

constexpr int kGridLevels = 40;
constexpr int kTailStart = 31;
constexpr double kGrowthFactor = 1.1;

}  // namespace

ModulusOfContinuity ModulusOfContinuity::hoelder(double exponent, double scale)
{
    if (!(exponent > 0.0 && exponent <= 1.0)) throw std::invalid_argument("Hoelder exponent must be in (0, 1]");
    if (!(scale > 0.0)) throw std::invalid_argument("modulus scale must be positive");
    ModulusOfContinuity w;
    w.kind_ = Kind::Hoelder;
    w.exponent_ = exponent;
    w.scale_ = scale;
    return w;
}

ModulusOfContinuity ModulusOfContinuity::lipschitz(double scale)
{
    if (!(scale > 0.0)) throw std::invalid_argument("modulus scale must be positive");
    ModulusOfContinuity w;
    w.kind_ = Kind::Lipschitz;
    w.scale_ = scale;
    return w;
}

ModulusOfContinuity ModulusOfContinuity::log_lipschitz(double scale)
{
    if (!(scale > 0.0)) throw std::invalid_argument("modulus scale must be positive");
    ModulusOfContinuity w;
    w.kind_ = Kind::LogLipschitz;
    w.scale_ = scale;
    return w;
}

ModulusOfContinuity ModulusOfContinuity::custom(std::function<double(double)> fn, std::string name)
{
    ModulusOfContinuity w;
    w.kind_ = Kind::Custom;
    w.fn_ = std::move(fn);
    w.name_ = std::move(name);
    return w;
}

ModulusOfContinuity ModulusOfContinuity::parse(const std::string& spec)
{
    std::string body = spec;
    double scale = 1.0;
    if (auto star = body.find('*'); star != std::string::npos) {
        scale = std::stod(body.substr(star + 1));
        body = body.substr(0, star);
    }
    std::string name = body;
    std::string arg;
    if (auto colon = body.find(':'); colon != std::string::npos) {
        name = body.substr(0, colon);
        arg = body.substr(colon + 1);
    }
    if (name == "holder" || name == "hoelder") {
        if (arg.empty()) throw std::invalid_argument("holder modulus needs an exponent, e.g. holder:0.5");
        return hoelder(std::stod(arg), scale);
    }
    if (name == "lipschitz" || name == "identity") return lipschitz(scale);
    if (name == "loglip" || name == "log-lipschitz") return log_lipschitz(scale);
    throw std::invalid_argument("unknown modulus spec '" + spec + "'");
}

std::string ModulusOfContinuity::spec() const
{
    std::string base;
    switch (kind_) {
    case Kind::Hoelder: {
        nlohmann::json e = exponent_;
        base = "holder:" + e.dump();
        break;
    }
    case Kind::Lipschitz: base = "lipschitz"; break;
    case Kind::LogLipschitz: base = "loglip"; break;
    case Kind::Custom: base = "custom:" + name_; break;
    }
    if (scale_ != 1.0) {
        nlohmann::json s = scale_;
        base += "*" + s.dump();
    }
    return base;
}

double ModulusOfContinuity::custom_inverse(double y) const
{
    // bisection in log x on [2^-60, 1], widened towards the smallest normal
    // double when y lies below w(2^-60)
    double lo = std::ldexp(1.0, -60);
    if ((*this)(lo) > y) lo = std::numeric_limits<double>::min();
    double hi = 1.0;
    if ((*this)(hi) < y) throw std::domain_error("value outside the range of the custom modulus");
    double llo = std::log(lo), lhi = std::log(hi);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (llo + lhi);
        if ((*this)(std::exp(mid)) < y)
            llo = mid;
        else
            lhi = mid;
    }
    return std::exp(lhi);
}

OrderingReport compare_moduli(const ModulusOfContinuity& w1, const ModulusOfContinuity& w2)
{
    OrderingReport rep;
    bool finite = true;
    for (int j = 1; j <= kGridLevels; ++j) {
        const double x = std::ldexp(1.0, -j);
        const double q = w1(x) / w2(x);
        if (!std::isfinite(q)) finite = false;
        rep.ratios.push_back(q);
    }
    rep.observed_sup = *std::max_element(rep.ratios.begin(), rep.ratios.end());
    rep.tail_value = rep.ratios.back();

    bool inc = true, dec = true;
    for (int j = kTailStart; j < kGridLevels; ++j) {
        const double a = rep.ratios[j - 1], b = rep.ratios[j];
        if (!(b > a)) inc = false;
        if (!(b < a)) dec = false;
    }
    rep.tail_trend = inc ? Trend::Increasing : (dec ? Trend::Decreasing : Trend::Mixed);
    const bool growing = inc && rep.tail_value >= kGrowthFactor * rep.ratios[kTailStart - 1];
    rep.established = finite && !growing;
    rep.relation = rep.established ? "w1 <~ w2" : "not established";
    return rep;
}

ModulusCheck validate(const ModulusOfContinuity& w)
{
    ModulusCheck c;
    c.strictly_increasing = true;
    double prev = w(1.0);
    if (!(prev > 0.0)) c.strictly_increasing = false;
    for (int j = 1; j <= kGridLevels; ++j) {
        const double v = w(std::ldexp(1.0, -j));
        if (!(v > 0.0) || !(v < prev)) c.strictly_increasing = false;
        prev = v;
    }
    c.vanishing_trend = w(std::ldexp(1.0, -kGridLevels)) < w(0.5);
    const auto lip = compare_moduli(ModulusOfContinuity::lipschitz(), w);
    c.bounded_x_over_w = lip.established;
    c.max_x_over_w = lip.observed_sup;
    c.note = "dyadic grid x = 2^-j, j <= 40; limits at 0+ are not certified beyond the grid";
    return c;
}

const char* to_string(Trend t)
{
    switch (t) {
    case Trend::Decreasing: return "decreasing";
    case Trend::Increasing: return "increasing";
    case Trend::Mixed: return "mixed";
    }
    return "mixed";
}

void to_json(nlohmann::json& j, const OrderingReport& r)
{
    j = {{"established", r.established}, {"relation", r.relation},   {"observed_sup", r.observed_sup},
         {"tail_value", r.tail_value},   {"tail_trend", to_string(r.tail_trend)}, {"ratios", r.ratios}};
}

void to_json(nlohmann::json& j, const ModulusCheck& c)
{
    j = {{"strictly_increasing", c.strictly_increasing},
         {"vanishing_trend", c.vanishing_trend},
         {"bounded_x_over_w", c.bounded_x_over_w},
         {"max_x_over_w", c.max_x_over_w},
         {"valid", c.valid()},
         {"note", c.note}};
}

}  // namespace kam
