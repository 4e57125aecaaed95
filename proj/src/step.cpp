#include "kam/step.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "kam/flow.hpp"

namespace kam {

namespace {

constexpr int kHomologicalDegree = 4;
constexpr double kMinRcond = 1e-13;

std::string format_k(const std::vector<int>& k)
{
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
    os << ')';
    return os.str();
}

// exponents l with |l| <= d, in lexicographic order
std::vector<MultiIndex> monomials(int n, int d)
{
    std::vector<MultiIndex> out;
    MultiIndex cur;
    auto rec = [&](auto& self, int pos, int left) -> void {
        if (pos == n) {
            out.push_back(cur);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            cur.set_l(pos, v);
            self(self, pos + 1, left - v);
        }
        cur.set_l(pos, 0);
    };
    rec(rec, 0, d);
    return out;
}

bool canonical_mode(const MultiIndex& idx, int n)
{
    for (int i = 0; i < n; ++i)
        if (idx.k(i) != 0) return idx.k(i) > 0;
    return false;
}

MultiIndex mode_only(const MultiIndex& idx)
{
    MultiIndex m;
    for (int i = 0; i < kMaxDim; ++i) m.set_k(i, idx.k(i));
    return m;
}

MultiIndex with_mode(const MultiIndex& k, const MultiIndex& l)
{
    MultiIndex out = l;
    for (int i = 0; i < kMaxDim; ++i) out.set_k(i, k.k(i));
    return out;
}

MultiIndex exponent_only(const MultiIndex& idx)
{
    MultiIndex m;
    for (int i = 0; i < kMaxDim; ++i) m.set_l(i, idx.l(i));
    return m;
}

}  // namespace

Vector NormalForm::drift_total() const
{
    Vector sum = Vector::Zero(omega0.size());
    for (const auto& d : drift) sum += d;
    return sum;
}

Series NormalForm::as_series(int k_max, int l_max) const
{
    const int n = static_cast<int>(omega0.size());
    Series s = Series::constant(n, e, k_max, l_max);
    s += Series::linear(lin, k_max, l_max);
    s += hbar;
    return s;
}

Series solve_homological(const NormalForm& N, const Series& R, double gamma, double tau, int K)
{
    const int n = R.dim();
    if (N.omega0.size() != n) throw DimensionError("normal form and R differ in dimension");
    const auto monos = monomials(n, kHomologicalDegree);
    std::map<MultiIndex, int> pos;
    for (std::size_t i = 0; i < monos.size(); ++i) pos[monos[i]] = static_cast<int>(i);
    const int m = static_cast<int>(monos.size());
    const Complex I(0.0, 1.0);

    // gradient of hbar as (exponent of y^l, j, coefficient of y^l in d_{y_j} hbar)
    struct GradTerm {
        MultiIndex l;
        int j;
        Complex c;
    };
    std::vector<GradTerm> grad;
    for (const auto& [idx, c] : N.hbar.terms()) {
        if (!idx.is_angle_free()) throw std::invalid_argument("hbar must be angle-free");
        for (int j = 0; j < n; ++j) {
            if (idx.l(j) == 0) continue;
            MultiIndex l = exponent_only(idx);
            l.set_l(j, l.l(j) - 1);
            if (l.l_norm() > kHomologicalDegree) continue;
            grad.push_back({l, j, c * static_cast<double>(idx.l(j))});
        }
    }

    // group R by mode
    std::map<MultiIndex, Eigen::VectorXcd> rhs;
    for (const auto& [idx, c] : R.terms()) {
        if (idx.is_angle_free()) continue;
        if (idx.k_norm() > K) throw std::invalid_argument("R carries a mode beyond the truncation K");
        if (idx.l_norm() > kHomologicalDegree) throw std::invalid_argument("R carries a y-degree above 4");
        if (R.is_real() && !canonical_mode(idx, n)) continue;
        const MultiIndex k = mode_only(idx);
        auto [it, fresh] = rhs.try_emplace(k, Eigen::VectorXcd::Zero(m));
        it->second[pos.at(exponent_only(idx))] += c;
    }

    Series F(n, K, kHomologicalDegree, R.is_real());
    for (const auto& [k, p] : rhs) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += k.k(i) * N.omega0[i];
        const double bound = gamma * std::pow(static_cast<double>(k.k_norm()), -tau);
        if (std::abs(dot) < bound)
            throw KamError(Cause::SmallDivisor, "small divisor |<k,omega0>| = " + std::to_string(std::abs(dot)) +
                                                    " below gamma |k|^-tau at k = " + format_k(k.k_vector(n)));
        Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(m, m);
        for (int col = 0; col < m; ++col) {
            A(col, col) += I * dot;
            for (const auto& g : grad) {
                if (k.k(g.j) == 0) continue;
                MultiIndex out;
                for (int i = 0; i < n; ++i) out.set_l(i, monos[col].l(i) + g.l.l(i));
                if (out.l_norm() > kHomologicalDegree) continue;
                A(pos.at(out), col) += I * static_cast<double>(k.k(g.j)) * g.c;
            }
        }
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
        const double rcond = lu.rcond();
        if (!(rcond >= kMinRcond))
            throw KamError(Cause::SingularSystem, "homological system at k = " + format_k(k.k_vector(n)) +
                                                      " is singular, condition estimate " +
                                                      std::to_string(1.0 / rcond));
        Eigen::VectorXcd f = lu.solve(p);
        f += lu.solve(Eigen::VectorXcd(p - A * f));
        for (int i = 0; i < m; ++i) {
            if (f[i] == Complex{}) continue;
            const MultiIndex idx = with_mode(k, monos[i]);
            F.accumulate(idx, f[i]);
            if (R.is_real()) F.accumulate(idx.conjugate(), std::conj(f[i]));
        }
    }
    F.finalize();
    return F;
}

double homological_residual(const NormalForm& N, const Series& F, const Series& R, const AnalyticDomain& dom)
{
    const int K = std::max(F.k_max(), R.k_max());
    Series N0 = Series::linear(N.omega0, 0, kHomologicalDegree);
    N0 += N.hbar;
    Series res = poisson_bracket(N0, F, K, kHomologicalDegree);
    res += R;
    res -= average(R);
    return weighted_norm(res, dom);
}

LieResult lie_transform(const Series& H, const Series& F, int order, int K, int L, const AnalyticDomain& dom)
{
    if (order < 2) throw std::invalid_argument("Lie transform order must be at least 2");
    LieResult out;
    out.increment = Series(H.dim(), K, L, H.is_real() && F.is_real());
    Series term = H.with_cutoffs(K, L);
    for (int j = 1; j <= order; ++j) {
        if (term.empty() || F.empty()) break;
        term = poisson_bracket(term, F, K, L) * (1.0 / j);
        out.increment += term;
    }
    if (!term.empty() && !F.empty())
        out.tail = weighted_norm(poisson_bracket(term, F, K, L), dom) / (order + 1);
    out.value = H.with_cutoffs(K, L) + out.increment;
    return out;
}

Split split_after_transform(const Series& H_new)
{
    const int n = H_new.dim();
    Split s;
    s.p01 = Vector::Zero(n);
    s.hbar_inc = Series(n, 0, H_new.l_max(), H_new.is_real());
    s.P_plus = Series(n, H_new.k_max(), H_new.l_max(), H_new.is_real());
    for (const auto& [idx, c] : H_new.terms()) {
        if (!idx.is_angle_free()) {
            s.P_plus.accumulate(idx, c);
            continue;
        }
        const int deg = idx.l_norm();
        if (deg == 0) {
            s.e_inc += c.real();
        } else if (deg == 1) {
            for (int i = 0; i < n; ++i)
                if (idx.l(i) == 1) s.p01[i] += c.real();
        } else {
            s.hbar_inc.accumulate(idx, c);
        }
    }
    s.hbar_inc.finalize();
    s.P_plus.finalize();
    return s;
}

TranslationResult translate_parameter(const FrequencyMap& map, const std::function<Vector(const Vector&)>& drift,
                                      const Vector& xi_start, const TranslationOptions& opt)
{
    const Vector xi0 = map.base_point;
    const Vector target = map.omega0();
    const double delta = map.ball_radius;
    const int n = map.n;
    auto residual = [&](const Vector& xi) { return Vector(map(xi) + drift(xi) - target); };
    auto inside = [&](const Vector& xi) { return (xi - xi0).norm() < delta; };

    TranslationResult res;
    res.xi = xi_start;
    Vector G = residual(res.xi);
    double g = G.norm();

    if (map.smooth) {
        res.method = "quasi-newton";
        const double h = 1e-7 * delta;
        for (int it = 0; it < opt.max_iter && g > opt.tol; ++it) {
            Eigen::MatrixXd J(n, n);
            for (int j = 0; j < n; ++j) {
                Vector probe = res.xi;
                probe[j] += h;
                J.col(j) = (residual(probe) - G) / h;
            }
            const Vector step = J.partialPivLu().solve(-G);
            if (!step.allFinite()) break;
            bool accepted = false;
            double lambda = 1.0;
            for (int ls = 0; ls < 40; ++ls, lambda *= 0.5) {
                const Vector trial = res.xi + lambda * step;
                if (!inside(trial)) continue;
                const Vector Gt = residual(trial);
                if (Gt.norm() < g) {
                    res.xi = trial;
                    G = Gt;
                    g = Gt.norm();
                    accepted = true;
                    break;
                }
            }
            ++res.iterations;
            if (!accepted) break;
        }
    }

    if (g > opt.tol) {
        // derivative-free: compass search with shrinking radius
        res.method = map.smooth ? "quasi-newton+compass" : "compass";
        double radius = opt.start_radius > 0.0 ? opt.start_radius : std::max(g, opt.tol);
        const double floor = 1e-17 * (1.0 + res.xi.norm());
        int evals = 0;
        while (g > opt.tol && radius > floor && evals < 200000) {
            bool improved = false;
            for (int j = 0; j < n && !improved; ++j) {
                for (int sgn : {-1, 1}) {
                    Vector trial = res.xi;
                    trial[j] += sgn * radius;
                    if (!inside(trial)) continue;
                    const Vector Gt = residual(trial);
                    ++evals;
                    if (Gt.norm() < g) {
                        res.xi = trial;
                        G = Gt;
                        g = Gt.norm();
                        improved = true;
                        break;
                    }
                }
            }
            ++res.iterations;
            if (!improved) radius *= 0.5;
        }
    } else if (res.method.empty()) {
        res.method = "none";
    }

    res.residual = g;
    if (g > opt.tol) {
        std::ostringstream os;
        os << "parameter translation did not reach tolerance " << opt.tol << "; best residual " << g;
        throw KamError(Cause::TranslationFailure, os.str());
    }
    if ((res.xi - xi0).norm() > 0.9 * delta) {
        std::ostringstream os;
        os << "translated parameter within 10% of the ball boundary: |xi - xi0| = " << (res.xi - xi0).norm()
           << ", delta = " << delta;
        throw KamError(Cause::BoundaryApproach, os.str());
    }
    return res;
}

KamState initial_state(const Problem& problem, const Vector& xi, const StepPlan& first)
{
    const int n = problem.freq.n;
    KamState s;
    s.nu = 0;
    s.xi = xi;
    s.domain = first.domain;
    s.nf.omega0 = problem.freq.omega0();
    s.nf.lin = problem.freq(xi);
    s.nf.hbar = problem.hbar0.dim() == n ? problem.hbar0 : Series(n, 0, first.L_store);
    Series P = problem.perturbation(xi);
    if (P.dim() != n) throw DimensionError("perturbation dimension differs from the frequency map");
    P *= problem.epsilon;
    s.P = P.with_cutoffs(first.K_store, first.L_store);
    return s;
}

StepOutcome advance(const KamState& state, const StepPlan& plan)
{
    const int n = static_cast<int>(state.nf.omega0.size());
    StepOutcome out;
    out.next = state;
    out.next.nu = state.nu + 1;
    out.next.domain = plan.next_domain;
    out.F = Series(n, plan.K, plan.L);
    out.p01 = Vector::Zero(n);

    if (state.P.empty()) {
        out.next.nf.drift.push_back(out.p01);
        out.next.generators.push_back(out.F);
        return out;
    }

    const Truncation tr = truncate(state.P, plan.K, plan.L, plan.domain);
    const Series& R = tr.kept;
    out.F = solve_homological(state.nf, R, plan.gamma, plan.tau, plan.K);
    out.homological_residual = homological_residual(state.nf, out.F, R, plan.domain);

    const Series N = state.nf.as_series(plan.K_store, plan.L_store);
    const LieResult lie = lie_transform(N + state.P, out.F, plan.lie_order, plan.K_store, plan.L_store, plan.domain);
    out.transform_tail = lie.tail;
    const Split sp = split_after_transform(state.P.with_cutoffs(plan.K_store, plan.L_store) + lie.increment);

    out.p01 = sp.p01;
    out.next.nf.e += sp.e_inc;
    out.next.nf.lin += sp.p01;
    out.next.nf.drift.push_back(sp.p01);
    out.next.nf.hbar += sp.hbar_inc;
    out.next.P = sp.P_plus;
    out.next.generators.push_back(out.F);

    out.norms.P_before = weighted_norm(state.P, plan.domain);
    out.norms.R = weighted_norm(R, plan.domain);
    out.norms.P_minus_R = tr.discarded_norm;
    out.norms.F = weighted_norm(out.F, plan.domain);
    out.norms.P_after = weighted_norm(sp.P_plus, plan.next_domain);
    return out;
}

KamState replay(const Problem& problem, const std::vector<StepPlan>& plans, const Vector& xi, int steps)
{
    if (steps > static_cast<int>(plans.size())) throw std::invalid_argument("replay needs a plan per step");
    if (plans.empty()) throw std::invalid_argument("replay needs at least one plan");
    KamState s = initial_state(problem, xi, plans.front());
    for (int j = 0; j < steps; ++j) s = advance(s, plans[j]).next;
    return s;
}

void check_generator_size(const Series& F, const StepPlan& plan)
{
    double gx = 0.0, gy = 0.0;
    for (const auto& g : gradient_x(F)) gx = std::max(gx, weighted_norm(g, plan.domain));
    for (const auto& g : gradient_y(F)) gy = std::max(gy, weighted_norm(g, plan.domain));
    const double sx = plan.domain.s / 8.0;
    const double sy = (plan.domain.r - plan.next_domain.r) / 8.0;
    if (!(gx < sx) || !(gy <= sy)) {
        std::ostringstream os;
        os << "generator too large for the step domain: max|d_x F| = " << gx << " (limit " << sx
           << "), max|d_y F| = " << gy << " (limit " << sy << "); eps is too large for the schedule";
        throw KamError(Cause::NonContraction, os.str());
    }
}

std::pair<KamState, StepReport> kam_step(const Problem& problem, const std::vector<StepPlan>& history,
                                         const KamState& state, const StepPlan& plan,
                                         const TranslationOptions& topt)
{
    const int nu = state.nu;
    if (static_cast<int>(history.size()) != nu) throw std::invalid_argument("history must hold one plan per step");

    const StepOutcome pre = advance(state, plan);
    check_generator_size(pre.F, plan);

    std::vector<StepPlan> plans = history;
    plans.push_back(plan);
    auto drift = [&](const Vector& xi) { return replay(problem, plans, xi, nu + 1).nf.drift_total(); };
    const TranslationResult tr = translate_parameter(problem.freq, drift, state.xi, topt);

    const KamState base = nu == 0 ? initial_state(problem, tr.xi, plan) : replay(problem, history, tr.xi, nu);
    StepOutcome out = advance(base, plan);

    StepReport rep;
    rep.nu = nu;
    rep.xi = state.xi;
    rep.xi_next = tr.xi;
    rep.xi_increment = (tr.xi - state.xi).norm();
    rep.freq_residual = (out.next.nf.lin - out.next.nf.omega0).norm();
    rep.norms = out.norms;
    rep.homological_residual = out.homological_residual;
    rep.transform_tail = out.transform_tail;
    rep.contraction_ratio = out.norms.P_before > 0.0 ? out.norms.P_after / out.norms.P_before : 0.0;
    rep.e = out.next.nf.e;
    rep.p01 = out.p01;
    rep.hbar_norm = weighted_norm(out.next.nf.hbar, plan.next_domain);
    rep.translation_iterations = tr.iterations;
    rep.translation_method = tr.method;

    if (out.norms.P_before > 0.0 && !(out.norms.P_after < out.norms.P_before)) {
        std::ostringstream os;
        os << "perturbation failed to contract at step " << nu << ": " << out.norms.P_before << " -> "
           << out.norms.P_after;
        throw KamError(Cause::NonContraction, os.str());
    }

    if (plan.symplectic_points > 0 && !out.F.empty())
        rep.symplectic_defect =
            symplectic_defect(out.F, plan.symplectic_points, plan.seed + static_cast<std::uint64_t>(nu), plan.domain.s)
                .max_defect;

    return {out.next, rep};
}

void to_json(nlohmann::json& j, const StepReport& r)
{
    auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    j = {{"nu", r.nu},
         {"xi", vec(r.xi)},
         {"xi_next", vec(r.xi_next)},
         {"freq_residual", r.freq_residual},
         {"xi_increment", r.xi_increment},
         {"norms",
          {{"P_before", r.norms.P_before},
           {"R", r.norms.R},
           {"P_minus_R", r.norms.P_minus_R},
           {"F", r.norms.F},
           {"P_after", r.norms.P_after}}},
         {"homological_residual", r.homological_residual},
         {"transform_tail", r.transform_tail},
         {"symplectic_defect", r.symplectic_defect},
         {"contraction_ratio", r.contraction_ratio},
         {"e", r.e},
         {"p01", vec(r.p01)},
         {"hbar_norm", r.hbar_norm},
         {"translation_iterations", r.translation_iterations},
         {"translation_method", r.translation_method}};
}

}  // namespace kam
