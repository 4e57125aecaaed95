#ifndef KAM_FLOW_HPP
#define KAM_FLOW_HPP

#include <cstdint>
#include <vector>

#include "kam/series.hpp"

namespace kam {

/// Phase point z = (y, x) as a flat 2n vector.
using PhaseState = std::vector<double>;

/// Hamiltonian vector field y' = -dH/dx, x' = dH/dy of a real series.
class HamiltonianField {
public:
    explicit HamiltonianField(const Series& H);

    int dim() const { return n_; }
    void operator()(const PhaseState& z, PhaseState& dz, double t) const;

private:
    struct Term {
        Complex c;
        std::array<int, kMaxDim> k{};
        std::array<int, kMaxDim> l{};
    };
    double eval(const std::vector<Term>& terms, const PhaseState& z) const;

    int n_ = 0;
    std::vector<std::vector<Term>> dx_;  // dH/dx_i
    std::vector<std::vector<Term>> dy_;  // dH/dy_i
};

/// Time-t flow by fixed-step order-8 Runge-Kutta; fixed steps keep the map
/// smooth in z, which finite-difference Jacobians rely on.
PhaseState flow_map(const HamiltonianField& field, PhaseState z, double t, int steps = 16);
PhaseState time_one_map(const Series& F, const PhaseState& z, int steps = 16);

/// Central-difference Jacobian of the time-1 map.
Eigen::MatrixXd flow_jacobian(const HamiltonianField& field, const PhaseState& z, double h = 1e-5,
                              int steps = 16);

struct SymplecticReport {
    int points = 0;
    double max_defect = 0.0;  // max ||DPhi^T J DPhi - J|| / ||DPhi||^2
};

/// Sampled symplecticity of the time-1 map of F at points |y_i| <= y_radius,
/// x uniform on the torus.
SymplecticReport symplectic_defect(const Series& F, int points, std::uint64_t seed, double y_radius);

struct TorusReport {
    int samples = 0;
    double horizon = 0.0;
    double max_y = 0.0;      // max_t |y(t)|
    double max_drift = 0.0;  // max_t |x(t) - x0 - omega0 t|, unwrapped
    double budget_y = 0.0;
    double budget_x = 0.0;
    bool within_budget = false;
};

/// Integrates H from (0, x0) for `samples` seeded x0 with an adaptive order-8
/// scheme at tolerance 1e-12, observing every dt. Budgets follow from the
/// residual perturbation: T ||d_x P|| for y and T ||d_y P|| for the drift.
TorusReport verify_torus(const Series& H, const Series& residual, const Vector& omega0, double T, double dt,
                         int samples = 8, std::uint64_t seed = 7);

void to_json(nlohmann::json& j, const SymplecticReport& r);
void to_json(nlohmann::json& j, const TorusReport& r);

}  // namespace kam

#endif  // KAM_FLOW_HPP
