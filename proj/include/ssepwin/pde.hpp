#pragma once

#include <functional>
#include <vector>

#include "ssepwin/boundary_ops.hpp"
#include "ssepwin/grid.hpp"
#include "ssepwin/params.hpp"

namespace ssepwin::pde {

enum class BcKind { NonlinearRobin, Neumann };

BcKind bc_for_theta(double theta);

// Heat equation on [0,1] with either the nonlinear window-flux boundary
// conditions (theta = 1)
//   du rho(0) = -boundary_flux({alpha,gamma}, rho(0)),
//   du rho(1) = +boundary_flux({beta,delta}, rho(1)),
// or zero-flux Neumann conditions (theta > 1).
struct Problem {
    BoundaryParams params;
    GridFunction f0;  // initial profile, values in [0,1]
    BcKind bc = BcKind::Neumann;

    void require_consistent() const;  // bc matches theta, f0 in [0,1]
};

struct Solution {
    int m = 0;
    double dt = 0.0;
    double t_end = 0.0;
    BcKind bc = BcKind::Neumann;
    std::vector<GridFunction> frames;  // t = 0 first, final frame last
    int max_picard = 0;
    int dt_halvings = 0;

    const GridFunction& at_time(double t) const;  // nearest stored frame
};

// Crank-Nicolson in the bulk, second-order ghost-node boundary rows, with the
// two scalar boundary nonlinearities resolved by Picard iteration per step
// (boundary residual <= 1e-12, cap 50; on failure the step size is halved, up
// to 4 times). dt <= 0 selects min(1e-3, 0.5/m^2). Frames are stored every
// `store_every` steps plus the final one.
Solution solve(const Problem& problem, double t_end, int m, double dt = -1.0,
               int store_every = 1);

// Smooth space-time test function with the derivatives the weak form needs.
struct TestFunction {
    std::function<double(double, double)> value;  // (t, u)
    std::function<double(double, double)> du;
    std::function<double(double, double)> duu;
    std::function<double(double, double)> dt;
};

// The weak-formulation functional evaluated on a numerical solution by
// trapezoid quadrature in space and time; zero for an exact weak solution.
double weak_residual(const Problem& problem, const Solution& sol,
                     const TestFunction& G, double t);

// Heat kernel on [0,1] with reflecting (zero-flux) boundaries, evaluated by
// the method of images: P_t(u,v) = sum_{|k|<=image_count} phi_t(u-2k-v) +
// phi_t(u-2k+v) with phi the Gaussian kernel. image_count = 8 is ample for
// t <= 1 (images beyond |k|=8 contribute < 1e-60); large t needs more images
// (the Gaussian spread grows like sqrt(t)).
struct KernelConfig {
    int image_count = 8;
    double t_floor = 1e-12;  // evaluation below this time is refused
};

double kernel_eval(const KernelConfig& cfg, double t, double u, double v);

// Exact integral of the kernel over a short initial time span,
// int_0^eps P_tau(u,v) dtau, image by image via
// sqrt(eps/pi) e^(-d^2/4eps) - (d/2) erfc(d / 2 sqrt(eps)).
// This is what absorbs the tau^-1/2 endpoint of the Duhamel integral.
double kernel_time_integral(const KernelConfig& cfg, double eps, double u,
                            double v);

// Duhamel form of the Robin problem through the reflecting kernel:
//   rho_t(u) = int P_t(u,v) f0(v) dv
//            + int_0^t P_(t-s)(u,0) fluxL(rho_s(0)) + P_(t-s)(u,1) fluxR(rho_s(1)) ds.
// The Volterra equation is marched causally in time steps dt; the two implicit
// boundary values per step are fixed-point iterated to 1e-10 (cap 200, then
// abort). Cross-validates `solve` through an entirely different discretisation.
Solution mild_solve(const Problem& problem, double t_end, int m, double dt,
                    int store_every = 1,
                    const KernelConfig& cfg = KernelConfig{});

}  // namespace ssepwin::pde
