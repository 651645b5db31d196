// oscillators.hpp - Two coupled oscillators, one of them (the symmetric
// combination) coupled to the reservoir.
//
// States live in the transformed basis (q~1, p~1, q~2, p~2): mode 1 is the
// free antisymmetric oscillator at Omega_F, mode 2 the damped symmetric one
// at Omega_2.

#pragma once

#include "cvdyn/bath.hpp"
#include "cvdyn/gaussian.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <vector>

namespace cvdyn::oscillators {

struct OscillatorPair {
    double mass = 1.0;
    double omega = 1.0;
    double coupling = 0.0;  // lambda

    void validate() const;
};

struct TransformedFrequencies {
    double omega_f = 0.0;  // sqrt(Omega^2 - lambda/M)
    double omega_2 = 0.0;  // sqrt(Omega^2 + lambda/M)
};

/// Throws kInstability when lambda >= M Omega^2.
TransformedFrequencies transformed_frequencies(const OscillatorPair& p);

/// (V11, V12, V22, V13, V14, V23, V24, V33, V34, V44).
class CovarianceVector10 {
public:
    enum Slot { k11, k12, k22, k13, k14, k23, k24, k33, k34, k44 };

    CovarianceVector10() { v_.fill(0.0); }
    explicit CovarianceVector10(const std::array<double, 10>& v) : v_(v) {}

    static CovarianceVector10 from_matrix(const gaussian::CovarianceMatrix& m);
    gaussian::CovarianceMatrix to_matrix() const;

    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }
    const std::array<double, 10>& values() const { return v_; }

private:
    std::array<double, 10> v_;
};

/// Drift of the ten second moments, dV/dt = A V + F, split into its blocks.
struct BlockDrift {
    Eigen::Matrix3d A1;  // (V11, V12, V22)
    Eigen::Matrix4d A2;  // (V13, V14, V23, V24)
    Eigen::Matrix3d A3;  // (V33, V34, V44)
    Eigen::Matrix<double, 10, 1> F;

    Eigen::Matrix<double, 10, 10> full() const;
};

/// `counterterm` is added to Omega_2^2 + freq_shift in the damped block.
BlockDrift assemble_drift(const OscillatorPair& p, const bath::BathCoefficients& c, double counterterm = 0.0);

enum class BathMode { kOff, kTimeDependent, kMarkov };

struct BathSetup {
    BathMode mode = BathMode::kTimeDependent;
    bath::SpectralDensity spectral;
    bath::ThermalSpec thermal;
    // Adds (2/M) int J/w to the frequency so the shift stays finite as the
    // cutoff grows. Off reproduces the bare second-order coefficients.
    bool renormalize = true;
};

enum class InitialState {
    kSqueezeOperator,  // exp(r (b1 b2 - b1^+ b2^+)) on the vacuum: V11(0) = e^{2r}/2
    kAnchoredV11,      // V11(0) = e^{-2r}/2
};

/// Two-mode squeezed vacuum of the bare oscillators in the transformed basis.
/// Position variances carry 1/(M Omega), momentum variances M Omega.
CovarianceVector10 initial_state(const OscillatorPair& p, double r, InitialState kind = InitialState::kSqueezeOperator);

struct Trajectory {
    OscillatorPair pair;
    TransformedFrequencies freqs;
    std::vector<double> t;
    std::vector<CovarianceVector10> states;

    /// M Omega_F^2 V11 + V22 / M at sample i.
    double constant_of_motion(std::size_t i) const;
};

/// Output times 0, dt_out, 2 dt_out, ..., with t_end appended if it is not on the grid.
std::vector<double> output_grid(double t_end, double dt_out);

/// Dormand-Prince 5(4) with rtol 1e-9, atol 1e-12, each block separately.
Trajectory integrate(const OscillatorPair& p, const BathSetup& bath, const CovarianceVector10& v0, double t_end,
                     double dt_out);

struct FreeBlock {
    double V11, V12, V22;
};

/// Exact solution of the free block.
FreeBlock closed_form_free(double V11_0, double V12_0, double V22_0, double omega_f, double mass, double t);

struct EntanglementPoint {
    double t;
    double nu_tilde_minus;
    double log_negativity;
    bool entangled;
};

/// PPT negativity between the bare oscillators at every snapshot.
std::vector<EntanglementPoint> entanglement_series(const Trajectory& traj);
gaussian::Negativity bare_negativity(const CovarianceVector10& v);

/// 1/2 ln(2 nbar(Omega_2, T) + 1); the squeezing above which the pair stays
/// entangled in the Markov long-time limit.
double threshold_r(double temperature, double omega2);

struct ThresholdSearch {
    double window_start = 40.0;
    double window_end = 50.0;
    double dt_out = 1e-3;
    double r_low = 0.0;
    double r_high = 4.0;
    double tolerance = 1e-3;
    InitialState initial = InitialState::kSqueezeOperator;
};

/// Bisection over r on "min over the late window of nu~- is below 1/2",
/// with constant Markov coefficients.
double numeric_threshold_r(const OscillatorPair& p, const BathSetup& bath, const ThresholdSearch& search = {});

struct DeathInterval {
    double death;
    double revival = std::numeric_limits<double>::infinity();

    bool open() const { return revival == std::numeric_limits<double>::infinity(); }
};

/// Intervals on which the state is separable. Crossing times are linearly
/// interpolated on 1/2 - nu~-.
std::vector<DeathInterval> sudden_death_report(const std::vector<EntanglementPoint>& series);

/// Columns t, V11..V44, nu_tilde_minus, log_negativity; %.17g floats.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const std::vector<EntanglementPoint>& series);

}  // namespace cvdyn::oscillators
