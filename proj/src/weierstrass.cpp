#include "kam/weierstrass.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <boost/math/constants/constants.hpp>

namespace kam {

namespace {

const Real kPi = boost::math::constants::pi<Real>();

// construction margin; verification re-checks without it
const Real kMargin = Real("1e-40");

// sin(pi t / q) with t/q reduced modulo 2 and folded into [-1/2, 1/2]
Real sin_pi(const Rational& theta)
{
    BigInt p = numerator(theta);
    const BigInt q = denominator(theta);
    const BigInt two_q = 2 * q;
    p %= two_q;
    if (p < 0) p += two_q;
    if (p > q) p -= two_q;
    if (2 * p > q)
        p = q - p;
    else if (2 * p < -q)
        p = -q - p;
    return sin(kPi * static_cast<Real>(p) / static_cast<Real>(q));
}

Real cos_pi(const Rational& theta) { return sin_pi(theta + Rational(1, 2)); }

Real to_real(const BigInt& v) { return static_cast<Real>(v); }

}  // namespace

BSequence BSequence::gaussian(double c)
{
    if (!(c > 0.0)) throw std::invalid_argument("gaussian b-sequence needs c > 0");
    BSequence s;
    s.form = Form::Gaussian;
    s.c = c;
    return s;
}

BSequence BSequence::geometric(double q)
{
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("geometric b-sequence needs 0 < q < 1");
    BSequence s;
    s.form = Form::Geometric;
    s.c = q;
    return s;
}

BSequence BSequence::harmonic()
{
    BSequence s;
    s.form = Form::Harmonic;
    return s;
}

Real BSequence::b(int n) const
{
    switch (form) {
    case Form::Gaussian: return exp(-Real(c) * Real(n) * Real(n));
    case Form::Geometric: return pow(Real(c), n);
    case Form::Harmonic: return Real(1) / Real(n);
    case Form::Custom: return custom(n);
    }
    return Real(0);
}

bool BSequence::summable() const { return form != Form::Harmonic; }

Real BSequence::tail(int m) const
{
    switch (form) {
    case Form::Harmonic: return std::numeric_limits<Real>::infinity();
    case Form::Geometric: return pow(Real(c), m + 1) / (Real(1) - Real(c));
    case Form::Gaussian: {
        // explicit terms until negligible, then a geometric majorant of the rest
        Real sum = 0;
        int n = m + 1;
        for (;; ++n) {
            const Real t = b(n);
            sum += t;
            if (t < sum * Real("1e-70")) break;
        }
        const int N = n + 1;
        const Real ratio = exp(-Real(c) * Real(2 * N + 1));
        return sum + b(N) / (Real(1) - ratio);
    }
    case Form::Custom: {
        Real sum = 0;
        for (int n = m + 1; n < m + 100000; ++n) {
            const Real t = custom(n);
            sum += t;
            if (t < sum * Real("1e-60")) break;
        }
        return sum;
    }
    }
    return Real(0);
}

std::string BSequence::name() const
{
    switch (form) {
    case Form::Gaussian: return "gaussian";
    case Form::Geometric: return "geometric";
    case Form::Harmonic: return "harmonic";
    case Form::Custom: return "custom:" + custom_name;
    }
    return "custom";
}

WeierstrassFamily build_weierstrass(const ModulusOfContinuity& w1, const BSequence& b, int M)
{
    if (M < 1) throw std::invalid_argument("a Weierstrass family needs M >= 1 terms");
    if (!b.summable()) throw InfeasibleSequence(1, "b-sequence is not summable; positivity fails at m = 1");

    WeierstrassFamily fam;
    fam.b = b;
    fam.w1 = w1;
    fam.M = M;
    fam.total = b.b(1) + b.tail(1);
    fam.tail_bound = b.tail(M);

    BigInt prev = 1;
    for (int m = 1; m <= M; ++m) {
        const Real bm = b.b(m);
        const Real gap = bm / 2 - b.tail(m);
        if (!(gap > 0))
            throw InfeasibleSequence(m, "b_m/2 - sum_{n>m} b_n is not positive at m = " + std::to_string(m));
        const Real q_growth = 2 * kPi * fam.total / bm;
        const Real a_floor = Real(1) / w1.inverse(gap / m);
        Real need = std::max(q_growth, a_floor / to_real(prev));
        need *= Real(1) + kMargin;
        BigInt q = ceil(need).convert_to<BigInt>();
        if (q < 2) q = 2;
        if (q % 2 != 0) q += 1;
        prev *= q;
        fam.a.push_back(prev);
        fam.b_values.push_back(bm);
        if (prev > BigInt(std::numeric_limits<std::int64_t>::max())) fam.fits_int64 = false;
    }
    return fam;
}

FamilyCheck verify(const WeierstrassFamily& fam)
{
    FamilyCheck c;
    c.positivity = c.a1 = c.a2 = c.a3 = true;
    BigInt prev = 1;
    for (int m = 1; m <= fam.M; ++m) {
        const BigInt& am = fam.a[m - 1];
        const Real bm = fam.b.b(m);
        if (am <= 0 || am % 2 != 0 || am % prev != 0 || (am / prev) % 2 != 0) c.a1 = false;
        const Real gap = bm / 2 - fam.b.tail(m);
        if (!(gap > 0)) {
            c.positivity = false;
            c.a3 = false;
        } else if (!(to_real(am) * fam.w1.inverse(gap / m) >= 1)) {
            c.a3 = false;
        }
        if (am % prev == 0 && !(to_real(am / prev) * bm >= 2 * kPi * fam.total)) c.a2 = false;
        prev = am;
    }
    return c;
}

Real eval_weierstrass_exact(const WeierstrassFamily& fam, const Rational& x)
{
    Real sum = 0;
    for (int n = 1; n <= fam.M; ++n) sum += fam.b_values[n - 1] * sin_pi(Rational(fam.a[n - 1]) * x);
    return sum;
}

WeierstrassValue eval_weierstrass(const WeierstrassFamily& fam, double x)
{
    WeierstrassValue v;
    v.value = static_cast<double>(eval_weierstrass_exact(fam, Rational(x)));
    v.error_bound = fam.tail_bound_double();
    return v;
}

Real weierstrass_difference(const WeierstrassFamily& fam, const Rational& x, const Rational& h)
{
    // sin A - sin B = 2 cos((A + B)/2) sin((A - B)/2)
    Real sum = 0;
    for (int n = 1; n <= fam.M; ++n) {
        const Rational a(fam.a[n - 1]);
        const Rational half_sum = a * (2 * x + h) / 2;
        const Rational half_diff = a * h / 2;
        sum += fam.b_values[n - 1] * 2 * cos_pi(half_sum) * sin_pi(half_diff);
    }
    return sum;
}

std::vector<ProbeResult> probe_quotient_growth(const WeierstrassFamily& fam, double x, int m_first, int m_last)
{
    return probe_quotient_growth(fam, x, m_first, m_last, fam.w1);
}

std::vector<ProbeResult> probe_quotient_growth(const WeierstrassFamily& fam, double x, int m_first, int m_last,
                                               const ModulusOfContinuity& w)
{
    if (m_first < 1 || m_last > fam.M || m_first > m_last)
        throw std::invalid_argument("probe range must satisfy 1 <= m_first <= m_last <= M");
    const Rational X(x);
    if (Rational(fam.a[m_first - 1]) * X < 1 && Rational(fam.a[m_first - 1]) * X > -1)
        throw std::invalid_argument("probe point too close to 0: need |a_m x| >= 1");

    std::vector<ProbeResult> out;
    for (int m = m_first; m <= m_last; ++m) {
        ProbeResult p;
        p.m = m;
        p.threshold = 0.5 * m;
        const Rational ax = Rational(fam.a[m - 1]) * X;
        // nearest integer, halves rounded up
        const Rational shifted = ax + Rational(1, 2);
        BigInt nearest = numerator(shifted) / denominator(shifted);
        if (shifted < 0 && nearest * denominator(shifted) != numerator(shifted)) nearest -= 1;
        const Rational r = ax - Rational(nearest);
        p.r_m = static_cast<double>(r);
        if (std::abs(p.r_m) < 1e-12) {
            p.degenerate = true;
            out.push_back(p);
            continue;
        }
        const int sgn = r > 0 ? 1 : -1;
        const Rational dx = (Rational(-sgn, 2) - r) / Rational(fam.a[m - 1]);
        p.dx = static_cast<double>(dx);
        const Real df = abs(weierstrass_difference(fam, X, dx));
        const Real adx = abs(static_cast<Real>(dx));
        p.quotient = static_cast<double>(df / w(adx));
        p.exceeds = p.quotient > p.threshold;
        out.push_back(p);
    }
    return out;
}

OmegaStar omega_star(const WeierstrassFamily& fam, double h)
{
    if (!(h > 0.0 && h <= 1.0)) throw std::invalid_argument("omega_star needs 0 < h <= 1");
    // tails[N] = sum_{n > N} b_n including the truncation tail
    std::vector<Real> tails(fam.M + 1);
    tails[fam.M] = fam.tail_bound;
    for (int N = fam.M - 1; N >= 0; --N) tails[N] = tails[N + 1] + fam.b_values[N];
    Real partial = 0;
    OmegaStar out;
    for (int N = 1; N <= fam.M; ++N) {
        partial += to_real(fam.a[N - 1]) * fam.b_values[N - 1];
        if (Real(h) * kPi * partial <= 2 * tails[N])
            out.N = N;
        else
            break;
    }
    out.value = static_cast<double>(4 * tails[out.N]);
    return out;
}

double seminorm(const std::function<Series(const Vector&)>& family, const ModulusOfContinuity& w,
                const AnalyticDomain& dom, const SeminormSpec& spec)
{
    if (spec.pairs < 1) throw std::invalid_argument("seminorm needs at least one pair");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int n = static_cast<int>(spec.center.size());
    auto draw = [&]() {
        Vector d(n);
        for (;;) {
            for (int i = 0; i < n; ++i) d[i] = u(rng);
            if (d.norm() <= 1.0) return Vector(spec.center + spec.radius * d);
        }
    };
    double best = 0.0;
    int drawn = 0;
    while (drawn < spec.pairs) {
        const Vector xi = draw();
        const Vector zeta = draw();
        const double d = (xi - zeta).norm();
        if (!(d > 0.0) || d > 1.0) continue;
        ++drawn;
        const double q = weighted_norm(family(xi) - family(zeta), dom) / w(d);
        best = std::max(best, q);
    }
    return best;
}

void to_json(nlohmann::json& j, const WeierstrassFamily& fam)
{
    std::vector<std::string> a;
    for (const auto& v : fam.a) a.push_back(v.str());
    std::vector<double> b;
    for (const auto& v : fam.b_values) b.push_back(static_cast<double>(v));
    j = {{"b_form", fam.b.name()},
         {"c", fam.b.c},
         {"M", fam.M},
         {"modulus", fam.w1.spec()},
         {"a", a},
         {"b", b},
         {"tail_bound", fam.tail_bound_double()},
         {"fits_int64", fam.fits_int64}};
}

WeierstrassFamily family_from_json(const nlohmann::json& j)
{
    const std::string form = j.at("b_form").get<std::string>();
    const double c = j.at("c").get<double>();
    BSequence b;
    if (form == "gaussian")
        b = BSequence::gaussian(c);
    else if (form == "geometric")
        b = BSequence::geometric(c);
    else if (form == "harmonic")
        b = BSequence::harmonic();
    else
        throw std::invalid_argument("family file: unsupported b_form '" + form + "'");
    auto fam = build_weierstrass(ModulusOfContinuity::parse(j.at("modulus").get<std::string>()), b,
                                 j.at("M").get<int>());
    if (j.contains("a")) {
        const auto stored = j.at("a").get<std::vector<std::string>>();
        if (stored.size() != fam.a.size()) throw std::invalid_argument("family file: a has the wrong length");
        for (std::size_t i = 0; i < stored.size(); ++i)
            if (BigInt(stored[i]) != fam.a[i])
                throw std::invalid_argument("family file: stored a_" + std::to_string(i + 1) +
                                            " differs from the rebuilt family");
    }
    return fam;
}

void to_json(nlohmann::json& j, const FamilyCheck& c)
{
    j = {{"positivity", c.positivity}, {"a1", c.a1}, {"a2", c.a2}, {"a3", c.a3}, {"all", c.all()}};
}

void to_json(nlohmann::json& j, const ProbeResult& p)
{
    j = {{"m", p.m},
         {"r_m", p.r_m},
         {"dx", p.dx},
         {"quotient", p.quotient},
         {"threshold", p.threshold},
         {"degenerate", p.degenerate},
         {"exceeds", p.exceeds}};
}

void write_samples_csv(std::ostream& os, const WeierstrassFamily& fam, double lo, double hi, int count)
{
    os << "x,f(x),err_bound\n";
    os.precision(17);
    for (int i = 0; i < count; ++i) {
        const double x = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
        const auto v = eval_weierstrass(fam, x);
        os << x << ',' << v.value << ',' << v.error_bound << '\n';
    }
}

}  // namespace kam
