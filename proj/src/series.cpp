#include "kam/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kam {

namespace {

void check_dim(int n)
{
    if (n < 1 || n > kMaxDim)
        throw DimensionError("series dimension must be in [1, " + std::to_string(kMaxDim) + "], got " +
                             std::to_string(n));
}

void check_same_dim(const Series& a, const Series& b)
{
    if (a.dim() != b.dim())
        throw DimensionError("series dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                             std::to_string(b.dim()));
}

double ipow(double base, int e)
{
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

}  // namespace

MultiIndex::MultiIndex(const std::vector<int>& k, const std::vector<int>& l)
{
    if (k.size() != l.size() || k.size() > static_cast<std::size_t>(kMaxDim))
        throw DimensionError("multi-index k and l must have equal length <= kMaxDim");
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (l[i] < 0) throw std::invalid_argument("action exponents must be non-negative");
        set_k(static_cast<int>(i), k[i]);
        set_l(static_cast<int>(i), l[i]);
    }
}

int MultiIndex::k_norm() const
{
    int s = 0;
    for (int i = 0; i < kMaxDim; ++i) s += std::abs(k(i));
    return s;
}

int MultiIndex::l_norm() const
{
    int s = 0;
    for (int i = 0; i < kMaxDim; ++i) s += l(i);
    return s;
}

bool MultiIndex::is_angle_free() const
{
    for (int i = 0; i < kMaxDim; ++i)
        if (k(i) != 0) return false;
    return true;
}

std::vector<int> MultiIndex::k_vector(int n) const
{
    std::vector<int> out(n);
    for (int i = 0; i < n; ++i) out[i] = k(i);
    return out;
}

std::vector<int> MultiIndex::l_vector(int n) const
{
    std::vector<int> out(n);
    for (int i = 0; i < n; ++i) out[i] = l(i);
    return out;
}

MultiIndex MultiIndex::conjugate() const
{
    MultiIndex c = *this;
    for (int i = 0; i < kMaxDim; ++i) c.set_k(i, -k(i));
    return c;
}

AnalyticDomain::AnalyticDomain(double s_, double r_) : s(s_), r(r_)
{
    if (!(s > 0.0) || !(r >= 0.0))
        throw std::invalid_argument("analytic domain requires s > 0 and r >= 0");
}

Series::Series(int n, int k_max, int l_max, bool real) : n_(n), k_max_(k_max), l_max_(l_max), real_(real)
{
    check_dim(n);
    if (k_max < 0 || l_max < 0) throw std::invalid_argument("series cutoffs must be non-negative");
}

Series Series::constant(int n, double c, int k_max, int l_max)
{
    Series s(n, k_max, l_max);
    s.accumulate(MultiIndex{}, c);
    s.finalize();
    return s;
}

Series Series::linear(const Vector& a, int k_max, int l_max)
{
    const int n = static_cast<int>(a.size());
    Series s(n, k_max, std::max(l_max, 1));
    for (int i = 0; i < n; ++i) {
        MultiIndex idx;
        idx.set_l(i, 1);
        s.accumulate(idx, a[i]);
    }
    s.finalize();
    return s;
}

Series Series::cos_term(const std::vector<int>& k, const std::vector<int>& l, double amplitude, int k_max,
                        int l_max)
{
    const int n = static_cast<int>(k.size());
    Series s(n, k_max, l_max);
    const MultiIndex idx(k, l);
    if (idx.is_angle_free()) {
        s.accumulate(idx, amplitude);
    } else {
        s.accumulate(idx, 0.5 * amplitude);
        s.accumulate(idx.conjugate(), 0.5 * amplitude);
    }
    s.finalize();
    return s;
}

Series Series::sin_term(const std::vector<int>& k, const std::vector<int>& l, double amplitude, int k_max,
                        int l_max)
{
    const int n = static_cast<int>(k.size());
    Series s(n, k_max, l_max);
    const MultiIndex idx(k, l);
    if (!idx.is_angle_free()) {
        // sin t = (e^{it} - e^{-it}) / 2i
        s.accumulate(idx, Complex(0.0, -0.5 * amplitude));
        s.accumulate(idx.conjugate(), Complex(0.0, 0.5 * amplitude));
    }
    s.finalize();
    return s;
}

Complex Series::coeff(const MultiIndex& idx) const
{
    auto it = terms_.find(idx);
    return it == terms_.end() ? Complex{} : it->second;
}

void Series::accumulate(const MultiIndex& idx, Complex c)
{
    if (idx.k_norm() > k_max_ || idx.l_norm() > l_max_) return;
    if (c == Complex{}) return;
    terms_[idx] += c;
}

void Series::finalize()
{
    if (real_) {
        for (auto& [idx, c] : terms_) {
            if (idx.is_angle_free()) {
                c = Complex(c.real(), 0.0);
                continue;
            }
            const MultiIndex partner = idx.conjugate();
            if (partner < idx) continue;
            auto it = terms_.find(partner);
            const Complex other = it == terms_.end() ? Complex{} : it->second;
            const Complex sym = 0.5 * (c + std::conj(other));
            c = sym;
            if (it != terms_.end())
                it->second = std::conj(sym);
            else if (std::abs(sym) >= kZeroThreshold)
                terms_.emplace(partner, std::conj(sym));
        }
    }
    std::erase_if(terms_, [](const auto& kv) { return std::abs(kv.second) < kZeroThreshold; });
}

Series Series::with_cutoffs(int k_max, int l_max) const
{
    Series out(n_, k_max, l_max, real_);
    for (const auto& [idx, c] : terms_) out.accumulate(idx, c);
    out.finalize();
    return out;
}

Series Series::operator-() const
{
    Series out = *this;
    for (auto& [idx, c] : out.terms_) c = -c;
    return out;
}

Series& Series::operator+=(const Series& other)
{
    check_same_dim(*this, other);
    k_max_ = std::max(k_max_, other.k_max_);
    l_max_ = std::max(l_max_, other.l_max_);
    real_ = real_ && other.real_;
    for (const auto& [idx, c] : other.terms_) terms_[idx] += c;
    finalize();
    return *this;
}

Series& Series::operator-=(const Series& other)
{
    return *this += -other;
}

Series& Series::operator*=(double c)
{
    for (auto& [idx, v] : terms_) v *= c;
    finalize();
    return *this;
}

Series operator+(Series a, const Series& b) { return a += b; }
Series operator-(Series a, const Series& b) { return a -= b; }
Series operator*(double c, Series a) { return a *= c; }
Series operator*(Series a, double c) { return a *= c; }

Series scale(const Series& a, Complex c)
{
    Series out(a.dim(), a.k_max(), a.l_max(), a.is_real() && c.imag() == 0.0);
    for (const auto& [idx, v] : a.terms()) out.accumulate(idx, v * c);
    out.finalize();
    return out;
}

Series add(const Series& a, const Series& b)
{
    return a + b;
}

Series multiply(const Series& a, const Series& b, int k_max, int l_max)
{
    check_same_dim(a, b);
    const int n = a.dim();
    Series out(n, k_max, l_max, a.is_real() && b.is_real());
    for (const auto& [ia, ca] : a.terms()) {
        for (const auto& [ib, cb] : b.terms()) {
            MultiIndex idx;
            for (int i = 0; i < n; ++i) {
                idx.set_k(i, ia.k(i) + ib.k(i));
                idx.set_l(i, ia.l(i) + ib.l(i));
            }
            out.accumulate(idx, ca * cb);
        }
    }
    out.finalize();
    return out;
}

Series poisson_bracket(const Series& f, const Series& g, int k_max, int l_max)
{
    check_same_dim(f, g);
    const int n = f.dim();
    Series out(n, k_max, l_max, f.is_real() && g.is_real());
    const Complex I(0.0, 1.0);
    for (const auto& [ia, ca] : f.terms()) {
        for (const auto& [ib, cb] : g.terms()) {
            const Complex prod = I * ca * cb;
            for (int i = 0; i < n; ++i) {
                // d_{x_i} f d_{y_i} g - d_{y_i} f d_{x_i} g
                const int weight = ia.k(i) * ib.l(i) - ia.l(i) * ib.k(i);
                if (weight == 0) continue;
                MultiIndex idx;
                for (int j = 0; j < n; ++j) {
                    idx.set_k(j, ia.k(j) + ib.k(j));
                    idx.set_l(j, ia.l(j) + ib.l(j) - (j == i ? 1 : 0));
                }
                out.accumulate(idx, prod * static_cast<double>(weight));
            }
        }
    }
    out.finalize();
    return out;
}

Truncation truncate(const Series& p, int k_max, int l_max, const AnalyticDomain& dom)
{
    if (k_max < 0 || l_max < 0) throw std::invalid_argument("truncation cutoffs must be non-negative");
    Truncation t{Series(p.dim(), k_max, l_max, p.is_real()),
                 Series(p.dim(), p.k_max(), p.l_max(), p.is_real()), 0.0};
    for (const auto& [idx, c] : p.terms()) {
        if (idx.k_norm() <= k_max && idx.l_norm() <= l_max)
            t.kept.accumulate(idx, c);
        else
            t.discarded.accumulate(idx, c);
    }
    t.kept.finalize();
    t.discarded.finalize();
    t.discarded_norm = weighted_norm(t.discarded, dom);
    return t;
}

Series truncate(const Series& p, int k_max, int l_max)
{
    if (k_max < 0 || l_max < 0) throw std::invalid_argument("truncation cutoffs must be non-negative");
    return p.with_cutoffs(k_max, l_max);
}

Series average(const Series& p)
{
    Series out(p.dim(), p.k_max(), p.l_max(), p.is_real());
    for (const auto& [idx, c] : p.terms())
        if (idx.is_angle_free()) out.accumulate(idx, c);
    out.finalize();
    return out;
}

Series oscillating_part(const Series& p)
{
    Series out(p.dim(), p.k_max(), p.l_max(), p.is_real());
    for (const auto& [idx, c] : p.terms())
        if (!idx.is_angle_free()) out.accumulate(idx, c);
    out.finalize();
    return out;
}

double weighted_norm(const Series& p, const AnalyticDomain& dom)
{
    double total = 0.0;
    for (const auto& [idx, c] : p.terms()) {
        const double w = ipow(dom.s, idx.l_norm()) * std::exp(dom.r * idx.k_norm());
        const double term = std::abs(c) * w;
        if (!std::isfinite(term)) return std::numeric_limits<double>::infinity();
        total += term;
    }
    return std::isfinite(total) ? total : std::numeric_limits<double>::infinity();
}

double max_weighted_norm(const std::vector<Series>& ps, const AnalyticDomain& dom)
{
    double m = 0.0;
    for (const auto& p : ps) m = std::max(m, weighted_norm(p, dom));
    return m;
}

Complex evaluate(const Series& p, const Vector& y, const Vector& x)
{
    const int n = p.dim();
    if (y.size() != n || x.size() != n) throw DimensionError("evaluation point has wrong dimension");
    Complex total{};
    for (const auto& [idx, c] : p.terms()) {
        double mono = 1.0;
        double phase = 0.0;
        for (int i = 0; i < n; ++i) {
            mono *= ipow(y[i], idx.l(i));
            phase += idx.k(i) * x[i];
        }
        total += c * mono * std::polar(1.0, phase);
    }
    return total;
}

double evaluate_real(const Series& p, const Vector& y, const Vector& x)
{
    if (!p.is_real()) throw std::logic_error("evaluate_real on a series without the reality flag");
    return evaluate(p, y, x).real();
}

Series derivative_y(const Series& p, int i)
{
    Series out(p.dim(), p.k_max(), p.l_max(), p.is_real());
    for (const auto& [idx, c] : p.terms()) {
        if (idx.l(i) == 0) continue;
        MultiIndex d = idx;
        d.set_l(i, idx.l(i) - 1);
        out.accumulate(d, c * static_cast<double>(idx.l(i)));
    }
    out.finalize();
    return out;
}

Series derivative_x(const Series& p, int i)
{
    Series out(p.dim(), p.k_max(), p.l_max(), p.is_real());
    for (const auto& [idx, c] : p.terms()) {
        if (idx.k(i) == 0) continue;
        out.accumulate(idx, c * Complex(0.0, idx.k(i)));
    }
    out.finalize();
    return out;
}

std::vector<Series> gradient_y(const Series& p)
{
    std::vector<Series> g;
    for (int i = 0; i < p.dim(); ++i) g.push_back(derivative_y(p, i));
    return g;
}

std::vector<Series> gradient_x(const Series& p)
{
    std::vector<Series> g;
    for (int i = 0; i < p.dim(); ++i) g.push_back(derivative_x(p, i));
    return g;
}

Vector linear_average(const Series& p)
{
    Vector v = Vector::Zero(p.dim());
    for (int i = 0; i < p.dim(); ++i) {
        MultiIndex idx;
        idx.set_l(i, 1);
        v[i] = p.coeff(idx).real();
    }
    return v;
}

void to_json(nlohmann::json& j, const Series& p)
{
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [idx, c] : p.terms())
        terms.push_back({{"k", idx.k_vector(p.dim())}, {"l", idx.l_vector(p.dim())}, {"re", c.real()},
                         {"im", c.imag()}});
    j = {{"n", p.dim()}, {"K_max", p.k_max()}, {"L_max", p.l_max()}, {"real", p.is_real()}, {"terms", terms}};
}

void from_json(const nlohmann::json& j, Series& p)
{
    p = Series(j.at("n").get<int>(), j.at("K_max").get<int>(), j.at("L_max").get<int>(),
               j.at("real").get<bool>());
    for (const auto& t : j.at("terms")) {
        const auto k = t.at("k").get<std::vector<int>>();
        const auto l = t.at("l").get<std::vector<int>>();
        if (static_cast<int>(k.size()) != p.dim() || static_cast<int>(l.size()) != p.dim())
            throw DimensionError("serialized term has wrong dimension");
        p.accumulate(MultiIndex(k, l), Complex(t.at("re").get<double>(), t.at("im").get<double>()));
    }
    p.finalize();
}

}  // namespace kam
