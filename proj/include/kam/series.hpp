#ifndef KAM_SERIES_HPP
#define KAM_SERIES_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace kam {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;

/// Largest phase-space dimension a series can carry.
inline constexpr int kMaxDim = 8;

/// Coefficients with modulus below this are treated as exact zeros.
inline constexpr double kZeroThreshold = 1e-300;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Fourier mode k (any sign) and action exponent l (non-negative) of one term
/// p_kl y^l exp(i<k,x>). Ordering is lexicographic on (k, l).
struct MultiIndex {
    std::array<std::int16_t, 2 * kMaxDim> v{};

    MultiIndex() = default;
    MultiIndex(const std::vector<int>& k, const std::vector<int>& l);

    int k(int i) const { return v[i]; }
    int l(int i) const { return v[kMaxDim + i]; }
    void set_k(int i, int value) { v[i] = static_cast<std::int16_t>(value); }
    void set_l(int i, int value) { v[kMaxDim + i] = static_cast<std::int16_t>(value); }

    int k_norm() const;
    int l_norm() const;
    bool is_angle_free() const;

    std::vector<int> k_vector(int n) const;
    std::vector<int> l_vector(int n) const;
    MultiIndex conjugate() const;

    auto operator<=>(const MultiIndex&) const = default;
    bool operator==(const MultiIndex&) const = default;
};

/// Analytic domain D(s, r) = {|y| < s, |Im x| < r}.
struct AnalyticDomain {
    double s = 1.0;
    double r = 0.0;

    AnalyticDomain() = default;
    AnalyticDomain(double s_, double r_);
};

/// Truncated Fourier-Taylor series sum p_kl y^l exp(i<k,x>) in n actions and
/// n angles, with |k| <= k_max and |l| <= l_max. Values are immutable once
/// built; every operation returns a new series.
class Series {
public:
    using Storage = std::map<MultiIndex, Complex>;

    Series() = default;
    Series(int n, int k_max, int l_max, bool real = true);

    static Series constant(int n, double c, int k_max = 0, int l_max = 0);
    static Series linear(const Vector& a, int k_max = 0, int l_max = 1);
    /// amplitude * y^l * cos(<k,x>), stored as a conjugate pair.
    static Series cos_term(const std::vector<int>& k, const std::vector<int>& l, double amplitude,
                           int k_max, int l_max);
    /// amplitude * y^l * sin(<k,x>).
    static Series sin_term(const std::vector<int>& k, const std::vector<int>& l, double amplitude,
                           int k_max, int l_max);

    int dim() const { return n_; }
    int k_max() const { return k_max_; }
    int l_max() const { return l_max_; }
    bool is_real() const { return real_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }
    const Storage& terms() const { return terms_; }

    Complex coeff(const MultiIndex& idx) const;

    /// Adds c to the coefficient of idx; terms outside the cutoffs are dropped.
    void accumulate(const MultiIndex& idx, Complex c);
    /// Removes sub-threshold coefficients and restores exact conjugate symmetry
    /// when the series is flagged real.
    void finalize();

    Series with_cutoffs(int k_max, int l_max) const;
    void set_real(bool real) { real_ = real; }

    Series operator-() const;
    Series& operator+=(const Series& other);
    Series& operator-=(const Series& other);
    Series& operator*=(double c);

private:
    int n_ = 0;
    int k_max_ = 0;
    int l_max_ = 0;
    bool real_ = true;
    Storage terms_;
};

Series operator+(Series a, const Series& b);
Series operator-(Series a, const Series& b);
Series operator*(double c, Series a);
Series operator*(Series a, double c);
Series scale(const Series& a, Complex c);

Series add(const Series& a, const Series& b);
Series multiply(const Series& a, const Series& b, int k_max, int l_max);
/// {F,G} = <d_x F, d_y G> - <d_y F, d_x G>, truncated to the given cutoffs.
Series poisson_bracket(const Series& f, const Series& g, int k_max, int l_max);

struct Truncation {
    Series kept;
    Series discarded;
    double discarded_norm = 0.0;
};
Truncation truncate(const Series& p, int k_max, int l_max, const AnalyticDomain& dom);
Series truncate(const Series& p, int k_max, int l_max);

/// Angle average: keeps the k = 0 coefficients.
Series average(const Series& p);
/// Coefficients with k != 0.
Series oscillating_part(const Series& p);

/// sum |p_kl| s^|l| e^{r|k|}, an upper bound on sup |P| over D(s, r).
/// Returns +inf if any weighted term overflows.
double weighted_norm(const Series& p, const AnalyticDomain& dom);
/// Largest weighted norm over a family of series.
double max_weighted_norm(const std::vector<Series>& ps, const AnalyticDomain& dom);

Complex evaluate(const Series& p, const Vector& y, const Vector& x);
/// Real part of evaluate(); the series must be flagged real.
double evaluate_real(const Series& p, const Vector& y, const Vector& x);

std::vector<Series> gradient_y(const Series& p);
std::vector<Series> gradient_x(const Series& p);
Series derivative_y(const Series& p, int i);
Series derivative_x(const Series& p, int i);

/// Coefficients of the linear-in-y angle average, as a real vector.
Vector linear_average(const Series& p);

void to_json(nlohmann::json& j, const Series& p);
void from_json(const nlohmann::json& j, Series& p);

}  // namespace kam

#endif  // KAM_SERIES_HPP
