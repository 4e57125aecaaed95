#include "kam/flow.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <boost/numeric/odeint.hpp>

#include "kam/errors.hpp"

namespace kam {

namespace odeint = boost::numeric::odeint;

HamiltonianField::HamiltonianField(const Series& H) : n_(H.dim())
{
    auto compile = [](const Series& s) {
        std::vector<Term> out;
        for (const auto& [idx, c] : s.terms()) {
            Term t;
            t.c = c;
            for (int i = 0; i < kMaxDim; ++i) {
                t.k[i] = idx.k(i);
                t.l[i] = idx.l(i);
            }
            out.push_back(t);
        }
        return out;
    };
    for (const auto& g : gradient_x(H)) dx_.push_back(compile(g));
    for (const auto& g : gradient_y(H)) dy_.push_back(compile(g));
}

double HamiltonianField::eval(const std::vector<Term>& terms, const PhaseState& z) const
{
    double sum = 0.0;
    for (const auto& t : terms) {
        double phase = 0.0;
        double mono = 1.0;
        for (int i = 0; i < n_; ++i) {
            phase += t.k[i] * z[n_ + i];
            for (int p = 0; p < t.l[i]; ++p) mono *= z[i];
        }
        sum += mono * (t.c.real() * std::cos(phase) - t.c.imag() * std::sin(phase));
    }
    return sum;
}

void HamiltonianField::operator()(const PhaseState& z, PhaseState& dz, double) const
{
    dz.resize(2 * n_);
    for (int i = 0; i < n_; ++i) {
        dz[i] = -eval(dx_[i], z);
        dz[n_ + i] = eval(dy_[i], z);
    }
}

PhaseState flow_map(const HamiltonianField& field, PhaseState z, double t, int steps)
{
    odeint::runge_kutta_fehlberg78<PhaseState> stepper;
    const double h = t / steps;
    double time = 0.0;
    for (int i = 0; i < steps; ++i) {
        stepper.do_step(std::cref(field), z, time, h);
        time += h;
    }
    return z;
}

PhaseState time_one_map(const Series& F, const PhaseState& z, int steps)
{
    return flow_map(HamiltonianField(F), z, 1.0, steps);
}

Eigen::MatrixXd flow_jacobian(const HamiltonianField& field, const PhaseState& z, double h, int steps)
{
    const int d = 2 * field.dim();
    Eigen::MatrixXd D(d, d);
    for (int j = 0; j < d; ++j) {
        PhaseState zp = z, zm = z;
        zp[j] += h;
        zm[j] -= h;
        const auto fp = flow_map(field, zp, 1.0, steps);
        const auto fm = flow_map(field, zm, 1.0, steps);
        for (int i = 0; i < d; ++i) D(i, j) = (fp[i] - fm[i]) / (2 * h);
    }
    return D;
}

SymplecticReport symplectic_defect(const Series& F, int points, std::uint64_t seed, double y_radius)
{
    const HamiltonianField field(F);
    const int n = field.dim();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
    J.bottomLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uy(-y_radius, y_radius);
    std::uniform_real_distribution<double> ux(0.0, 2 * std::numbers::pi);
    SymplecticReport rep;
    rep.points = points;
    for (int p = 0; p < points; ++p) {
        PhaseState z(2 * n);
        for (int i = 0; i < n; ++i) z[i] = uy(rng);
        for (int i = 0; i < n; ++i) z[n + i] = ux(rng);
        const Eigen::MatrixXd D = flow_jacobian(field, z);
        const Eigen::MatrixXd defect = D.transpose() * J * D - J;
        const double dn = Eigen::JacobiSVD<Eigen::MatrixXd>(D).singularValues()(0);
        const double en = Eigen::JacobiSVD<Eigen::MatrixXd>(defect).singularValues()(0);
        rep.max_defect = std::max(rep.max_defect, en / (dn * dn));
    }
    return rep;
}

TorusReport verify_torus(const Series& H, const Series& residual, const Vector& omega0, double T, double dt,
                         int samples, std::uint64_t seed)
{
    if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("verify_torus needs T > 0 and dt > 0");
    const int n = H.dim();
    if (omega0.size() != n) throw DimensionError("omega0 length differs from the Hamiltonian dimension");

    const HamiltonianField field(H);
    TorusReport rep;
    rep.samples = samples;
    rep.horizon = T;

    // budgets from the residual perturbation near y = 0
    const AnalyticDomain near(1e-3, 0.0);
    double gx = 0.0, gy = 0.0;
    for (const auto& g : gradient_x(residual)) gx = std::max(gx, weighted_norm(g, near));
    for (const auto& g : gradient_y(residual)) gy = std::max(gy, weighted_norm(g, near));
    rep.budget_y = T * gx + 1e-10;
    rep.budget_x = T * gy + 1e-8;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, 2 * std::numbers::pi);
    auto stepper = odeint::make_controlled(1e-12, 1e-12, odeint::runge_kutta_fehlberg78<PhaseState>());
    for (int s = 0; s < samples; ++s) {
        PhaseState z(2 * n, 0.0);
        for (int i = 0; i < n; ++i) z[n + i] = ux(rng);
        const PhaseState x0(z.begin() + n, z.end());
        auto observe = [&](const PhaseState& st, double t) {
            double ymax = 0.0, drift = 0.0;
            for (int i = 0; i < n; ++i) {
                ymax = std::max(ymax, std::abs(st[i]));
                drift = std::max(drift, std::abs(st[n + i] - x0[i] - omega0[i] * t));
            }
            rep.max_y = std::max(rep.max_y, ymax);
            rep.max_drift = std::max(rep.max_drift, drift);
        };
        try {
            odeint::integrate_const(stepper, std::cref(field), z, 0.0, T, dt, observe,
                                    odeint::max_step_checker(100000));
        } catch (const std::exception& e) {
            throw KamError(Cause::Integrator, std::string("torus integration failed: ") + e.what());
        }
    }
    rep.within_budget = rep.max_y <= rep.budget_y && rep.max_drift <= rep.budget_x;
    return rep;
}

void to_json(nlohmann::json& j, const SymplecticReport& r)
{
    j = {{"points", r.points}, {"max_defect", r.max_defect}};
}

void to_json(nlohmann::json& j, const TorusReport& r)
{
    j = {{"samples", r.samples},       {"horizon", r.horizon},   {"max_y", r.max_y},
         {"max_drift", r.max_drift},   {"budget_y", r.budget_y}, {"budget_x", r.budget_x},
         {"within_budget", r.within_budget}};
}

}  // namespace kam
