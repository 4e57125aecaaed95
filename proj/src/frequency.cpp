#include "kam/frequency.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace kam {

namespace {

void check_ball(const Vector& xi0, double delta)
{
    if (xi0.size() < 1 || xi0.size() > kMaxDim) throw DimensionError("frequency map dimension out of range");
    if (!(delta > 0.0)) throw std::invalid_argument("ball radius must be positive");
}

// Visits every k with |k|_1 = m whose first nonzero entry is positive, in
// lexicographic order.
template <typename Visit>
void visit_shell(int n, int m, std::vector<int>& k, int pos, int remaining, bool leading, Visit& visit)
{
    if (pos == n) {
        if (remaining == 0) visit(k);
        return;
    }
    if (pos == n - 1) {
        if (remaining == 0) {
            if (leading) return;  // k = 0 is excluded
            k[pos] = 0;
            visit(k);
        } else {
            if (!leading) {
                k[pos] = -remaining;
                visit(k);
            }
            k[pos] = remaining;
            visit(k);
        }
        return;
    }
    const int lo = leading ? 0 : -remaining;
    for (int v = lo; v <= remaining; ++v) {
        k[pos] = v;
        visit_shell(n, m, k, pos + 1, remaining - std::abs(v), leading && v == 0, visit);
    }
}

Vector sample_ball(std::mt19937_64& rng, const Vector& center, double radius)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector d(center.size());
    for (;;) {
        for (int i = 0; i < d.size(); ++i) d[i] = u(rng);
        if (d.norm() <= 1.0) return center + radius * d;
    }
}

}  // namespace

FrequencyMap identity_map(const Vector& xi0, double delta)
{
    check_ball(xi0, delta);
    FrequencyMap m;
    m.n = static_cast<int>(xi0.size());
    m.eval = [](const Vector& xi) { return Vector(xi); };
    m.base_point = xi0;
    m.ball_radius = delta;
    m.descriptor = "identity";
    return m;
}

FrequencyMap quadratic_map(const Vector& xi0, double delta, double c)
{
    check_ball(xi0, delta);
    FrequencyMap m;
    m.n = static_cast<int>(xi0.size());
    m.eval = [c](const Vector& xi) { return Vector(xi + c * xi.cwiseProduct(xi)); };
    m.base_point = xi0;
    m.ball_radius = delta;
    m.descriptor = "quadratic(c=" + nlohmann::json(c).dump() + ")";
    return m;
}

FrequencyMap scaled_map(const Vector& xi0, double delta, double a)
{
    check_ball(xi0, delta);
    FrequencyMap m;
    m.n = static_cast<int>(xi0.size());
    m.eval = [a](const Vector& xi) { return Vector(a * xi); };
    m.base_point = xi0;
    m.ball_radius = delta;
    m.descriptor = "scaled(a=" + nlohmann::json(a).dump() + ")";
    return m;
}

double small_divisor(const std::vector<int>& k, const Vector& omega)
{
    if (static_cast<int>(k.size()) != omega.size()) throw DimensionError("k and omega differ in length");
    bool zero = true;
    double dot = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (k[i] != 0) zero = false;
        dot += k[i] * omega[static_cast<int>(i)];
    }
    if (zero) throw std::invalid_argument("small_divisor: k must be nonzero");
    return std::abs(dot);
}

double scaled_divisor(const std::vector<int>& k, const Vector& omega, double tau)
{
    int norm = 0;
    for (int v : k) norm += std::abs(v);
    return small_divisor(k, omega) * std::pow(static_cast<double>(norm), tau);
}

DiophantineCert check_diophantine(const Vector& omega, double gamma, double tau, int k_max)
{
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    if (k_max < 1) throw std::invalid_argument("k_max must be at least 1");
    const int n = static_cast<int>(omega.size());
    if (n < 1) throw DimensionError("omega must be non-empty");

    DiophantineCert cert;
    cert.gamma = gamma;
    cert.tau = tau;
    cert.k_max = k_max;
    cert.min_scaled = std::numeric_limits<double>::infinity();

    std::vector<int> k(n, 0);
    auto visit = [&](const std::vector<int>& kk) {
        const double v = scaled_divisor(kk, omega, tau);
        if (v < cert.min_scaled || (v == cert.min_scaled && kk < cert.witness_k)) {
            cert.min_scaled = v;
            cert.witness_k = kk;
        }
        if (v < gamma && cert.first_failing_k.empty()) cert.first_failing_k = kk;
    };
    for (int m = 1; m <= k_max; ++m) visit_shell(n, m, k, 0, m, true, visit);
    cert.valid = cert.min_scaled >= gamma;
    return cert;
}

WeakConvexityReport certify_weak_convexity(const FrequencyMap& map, int samples, std::uint64_t seed)
{
    if (samples < 1) throw std::invalid_argument("samples must be at least 1");
    WeakConvexityReport rep;
    rep.samples = samples;
    rep.seed = seed;
    rep.worst_ratio = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    int drawn = 0;
    while (drawn < samples) {
        const Vector xi = sample_ball(rng, map.base_point, map.ball_radius);
        const Vector zeta = sample_ball(rng, map.base_point, map.ball_radius);
        const double d = (xi - zeta).norm();
        if (!(d > 0.0) || d > 1.0) continue;
        ++drawn;
        const double ratio = (map(xi) - map(zeta)).norm() / map.lower_modulus(d);
        if (ratio < rep.worst_ratio) {
            rep.worst_ratio = ratio;
            rep.worst_xi = xi;
            rep.worst_zeta = zeta;
        }
    }
    rep.pass = rep.worst_ratio >= 1.0;
    return rep;
}

Vector named_frequency(const std::string& name, int n)
{
    if (n < 1 || n > kMaxDim) throw DimensionError("named frequency dimension out of range");
    Vector w(n);
    if (name == "golden") {
        if (n != 2) throw std::invalid_argument("golden frequency is two-dimensional");
        w << 1.0, 0.5 * (1.0 + std::sqrt(5.0));
        return w;
    }
    if (name == "spread") {
        static const int radicands[] = {1, 2, 3, 5, 6, 7, 10, 11};
        for (int i = 0; i < n; ++i) w[i] = std::sqrt(static_cast<double>(radicands[i]));
        return w;
    }
    throw std::invalid_argument("unknown named frequency '" + name + "'");
}

void to_json(nlohmann::json& j, const DiophantineCert& c)
{
    j = {{"gamma", c.gamma},
         {"tau", c.tau},
         {"k_max", c.k_max},
         {"min_scaled", c.min_scaled},
         {"witness_k", c.witness_k},
         {"valid", c.valid}};
    if (!c.valid) j["first_failing_k"] = c.first_failing_k;
}

void to_json(nlohmann::json& j, const WeakConvexityReport& r)
{
    auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    j = {{"samples", r.samples},
         {"seed", r.seed},
         {"worst_ratio", r.worst_ratio},
         {"worst_xi", vec(r.worst_xi)},
         {"worst_zeta", vec(r.worst_zeta)},
         {"pass", r.pass}};
}

}  // namespace kam
