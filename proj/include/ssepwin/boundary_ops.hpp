#pragma once

#include <vector>

#include "ssepwin/params.hpp"

namespace ssepwin {

// A (lambda, sigma) pair of rate sequences defining the macroscopic window
// flux at one edge: lambda drives injection, sigma removal.
struct DPair {
    std::vector<double> lambda;
    std::vector<double> sigma;

    DPair() = default;
    DPair(std::vector<double> l, std::vector<double> s);
    int window() const { return static_cast<int>(lambda.size()); }
};

// Net macroscopic boundary flux at density f in [0,1]:
//   sum_{x=1..K} lambda_x (1-f) f^(x-1) - sigma_x f (1-f)^(x-1).
// Degree-K polynomial, strictly decreasing for positive non-increasing
// sequences; boundary_flux(0) = lambda_1, boundary_flux(1) = -sigma_1.
// f outside [0,1] by more than 1e-9 is rejected; inside the slack it is
// clamped.
double boundary_flux(const DPair& p, double f);

// Symmetric factor in the flux difference identity
//   boundary_flux(y) - boundary_flux(z) = -(y - z) * flux_slope(y, z).
double flux_slope(const DPair& p, double y, double z);

// The unique root m* of the aggregate flux boundary_flux({injection,removal})
// on [0,1], located by bisection to interval width 1e-14. Requires
// injection[1] > 0 and removal[1] > 0 (otherwise throws: the sign change at
// the endpoints is lost and no unique root is guaranteed).
double mass_fixed_point(const AggregateRates& agg);

// Closed form of the K=2 mass flow dm/dt = a m^2 + b m + c.
struct MassFlowQuadratic {
    double a = 0.0, b = 0.0, c = 0.0;
    bool linear = false;        // |a| < 1e-14: flow degenerates to linear
    double disc = 0.0;          // b^2 - 4ac (quadratic case)
    double kappa_plus = 0.0;    // (-b + sqrt(disc)) / 2a
    double kappa_minus = 0.0;   // (-b - sqrt(disc)) / 2a; the t->inf limit
    double m_star = 0.0;        // limit mass, in [0,1]
};
MassFlowQuadratic mass_flow_quadratic(const AggregateRates& agg);

// Mass at time t started from m0, K=2 only.
double mass_closed_form(const AggregateRates& agg, double m0, double t);

// RK4 integration of dm/dt = boundary_flux({injection,removal}, m) for any K.
// The trajectory is clipped to [0,1]; clips are counted (none are expected
// when the aggregate sequences are non-increasing).
struct MassTrajectory {
    std::vector<double> t;
    std::vector<double> m;
    int clip_count = 0;
    double value_at(double time) const;  // linear interpolation
};
MassTrajectory mass_ode_rk4(const AggregateRates& agg, double m0, double t_end,
                            double dt);

// Stationary density profile rho*(u) = (1-u) rho0 + u rho1 whose boundary
// values solve rho1 - rho0 = -boundary_flux({alpha,gamma}, rho0)
//                          =  boundary_flux({beta,delta}, rho1).
struct StationaryProfile {
    double rho0 = 0.0;
    double rho1 = 0.0;
    double operator()(double u) const { return (1.0 - u) * rho0 + u * rho1; }
};

// Solves the coupled system above by nesting two bisections: the inner one
// computes the partner boundary value (the map is monotone because
// boundary_flux is), the outer one drives the difference equation to zero.
// Requires the non-increasing-rates and ordered-boundary assumptions
// (uniqueness is not guaranteed without them; throws if they fail).
StationaryProfile stationary_profile(const BoundaryParams& params);

}  // namespace ssepwin
