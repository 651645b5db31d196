// bath.hpp - Reservoir model: spectral density, memory kernels and the
// time-dependent master-equation coefficients of the bath-coupled mode.
//
// Natural units hbar = k_B = 1; frequencies and temperatures are in units
// of the bare oscillator frequency.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cvdyn::bath {

/// J(w) = coupling_factor * (2 gamma0 w M / pi) (w / Lambda)^(n-1) exp(-w^2 / Lambda^2)
struct SpectralDensity {
    double gamma0 = 0.1;
    double cutoff = 100.0;  // Lambda
    int exponent = 1;       // n; 1 is the Ohmic reservoir
    double mass = 1.0;
    double coupling_factor = 1.0;

    void validate() const;
};

struct ThermalSpec {
    double temperature = 10.0;  // 0 selects the coth -> 1 branch
    void validate() const;
};

/// Frequency-shift, dissipation and diffusion coefficients at time t.
struct BathCoefficients {
    double t = 0.0;
    double freq_shift = 0.0;  // Omega~_2^2(t)
    double gamma2 = 0.0;
    double D2 = 0.0;
    double f2 = 0.0;
};

double spectral_density(const SpectralDensity& sd, double omega);

/// 1 / (exp(w / T) - 1)
double mean_occupation(const ThermalSpec& th, double omega);

/// J(w) coth(w / 2T), finite at w = 0.
double noise_spectrum(const SpectralDensity& sd, const ThermalSpec& th, double omega);

/// nu(s) = int_0^inf J(w) coth(w/2T) cos(w s) dw
double noise_kernel(const SpectralDensity& sd, const ThermalSpec& th, double s);
/// eta(s) = int_0^inf J(w) sin(w s) dw
double dissipation_kernel(const SpectralDensity& sd, double s);
/// d nu / ds and d eta / ds, for Hermite interpolation of the kernels.
double noise_kernel_derivative(const SpectralDensity& sd, const ThermalSpec& th, double s);
double dissipation_kernel_derivative(const SpectralDensity& sd, double s);

/// Upper end of the frequency integrals; J is below 1e-15 of its peak there.
double frequency_limit(const SpectralDensity& sd);

/// (2/M) int_0^inf J(w)/w dw, the counterterm that cancels the cutoff-
/// dependent part of the frequency shift.
double frequency_counterterm(const SpectralDensity& sd);

/// Kernel memory time beyond which nu and eta are below the quadrature floor.
/// Infinite for T = 0 (algebraic tail).
double memory_time(const SpectralDensity& sd, const ThermalSpec& th);

/// Second-order coefficients by direct construction of a kernel cache up to t.
BathCoefficients coefficients_at(const SpectralDensity& sd, const ThermalSpec& th, double omega2, double t);

/// t -> infinity limit in closed form: gamma2 = pi J(W)/(2 M W),
/// D2 = (pi/2) J(W) coth(W/2T), principal-value integrals for the shift and f2.
/// Appends a warning when Lambda <= 10 Omega2.
BathCoefficients markov_coefficients(const SpectralDensity& sd, const ThermalSpec& th, double omega2,
                                     std::vector<std::string>* warnings = nullptr);

/// Cached coefficient table for one (J, T, Omega2) triple.
///
/// The kernels are tabulated (value and derivative) on a grid fine enough to
/// resolve 1/Lambda, 1/Omega2 and the thermal time 1/(2 pi T); the four time
/// integrals are accumulated cell by cell with Gauss-Legendre quadrature of
/// the Hermite-interpolated kernel. Immutable after construction, so a model
/// can be shared between threads.
class BathModel {
public:
    BathModel(SpectralDensity sd, ThermalSpec th, double omega2, double horizon);

    BathCoefficients at(double t) const;

    const SpectralDensity& spectral_density() const { return sd_; }
    const ThermalSpec& thermal() const { return th_; }
    double omega2() const { return omega2_; }
    double counterterm() const { return counterterm_; }
    /// Last tabulated time; coefficients are constant beyond it when saturated.
    double table_end() const { return nodes_.empty() ? 0.0 : nodes_.back(); }
    bool saturated() const { return saturated_; }
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        double nu, dnu, eta, deta;
    };
    // Running integrals of eta cos, eta sin, nu cos, nu sin.
    struct Integrals {
        double eta_cos = 0.0, eta_sin = 0.0, nu_cos = 0.0, nu_sin = 0.0;
    };

    std::size_t cell_of(double t) const;
    Integrals integrands(std::size_t k) const;
    BathCoefficients assemble(double t, const Integrals& in) const;

    SpectralDensity sd_;
    ThermalSpec th_;
    double omega2_;
    double counterterm_;
    bool saturated_ = false;
    double fine_step_ = 0.0;
    double fine_end_ = 0.0;
    double coarse_step_ = 0.0;
    std::size_t fine_cells_ = 0;
    std::vector<double> nodes_;
    std::vector<Node> kernel_;
    std::vector<Integrals> cumulative_;
};

}  // namespace cvdyn::bath
