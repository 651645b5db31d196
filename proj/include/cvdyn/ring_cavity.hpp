// ring_cavity.hpp - Atomic ensemble in a driven ring cavity.
//
// Five bosonic modes in the order (a+, a-, C0, C2, C-2): the two
// counter-propagating cavity modes and three collective atomic modes.
// Driving along one direction couples the atoms to the cavity as a pair of
// linear mixers in a squeezed frame; cavity loss then pumps the coupled
// modes into that frame's vacuum.

#pragma once

#include "cvdyn/gaussian.hpp"

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cvdyn::ring_cavity {

using Complex = std::complex<double>;

enum Mode : std::size_t { kCavityPlus, kCavityMinus, kC0, kC2, kCMinus2, kModeCount };

struct EnsembleParams {
    std::size_t n_atoms = 10000;
    double g_u = 1.0;
    double g_s = 1.0;
    double delta_u = 100.0;
    double delta_s = 100.0;
    // With the other defaults these give |beta_u| = cosh(1/2), |beta_s| = sinh(1/2):
    // squeezing 1/2 and a squeezed-frame mixing rate equal to kappa.
    double omega_u = 2.0 * 1.1276259652063807;
    double omega_s = 2.0 * 0.5210953054937474;
    double phi_u = 0.0;
    double phi_s = 0.0;
    double kappa = 1.0;
    double gamma_u = 0.0;
    double gamma_s = 0.0;
    double delta_c = -100.0;  // cancels the collective Stark shift N/2 (g_u^2/D_u + g_s^2/D_s)

    void validate() const;
};

struct EffectiveCouplings {
    Complex beta_u;
    Complex beta_s;
};

/// beta = sqrt(N) Omega g e^{-i phi} / (2 Delta) for each branch.
EffectiveCouplings effective_couplings(const EnsembleParams& p);

/// Warnings for parameters outside the regime where the effective
/// description holds: large detunings, balanced Stark shifts, cavity
/// resonance.
std::vector<std::string> validity_check(const EnsembleParams& p);

struct SqueezeParameters {
    double xi0;
    double xi1;
};

/// xi0 = xi1 = 1/2 ln((|bu| + |bs|) / (|bu| - |bs|)); throws kUnstableRegime
/// unless |bs| / |bu| <= 1 - 1e-9.
SqueezeParameters squeeze_parameters(const EffectiveCouplings& ec);

/// sqrt(|bu|^2 - |bs|^2), the mixer rate in the squeezed frame.
double effective_mixing(const EffectiveCouplings& ec);

enum class Step { kClockwise, kAnticlockwise };
enum class Frame { kLab, kSqueezed };

struct ModeSystem {
    Step step = Step::kClockwise;
    Frame frame = Frame::kLab;
    gaussian::Matrix drift;      // 10 x 10
    gaussian::Matrix diffusion;  // 10 x 10, symmetric
    Eigen::VectorXd first_moments;
};

/// Quadrature drift and diffusion of the driven, damped cavity-atom system.
/// kLab builds the bosonic Hamiltonian directly; kSqueezed builds the
/// linear mixers of the squeezed frame from effective_mixing.
ModeSystem build_system(const EffectiveCouplings& ec, double kappa, Step step, Frame frame = Frame::kLab);

/// Lab quadratures x = T x~ in terms of squeezed-frame quadratures x~.
gaussian::Matrix frame_transform(const EffectiveCouplings& ec);

/// Frame change of a lab system: T^-1 A T and T^-1 D T^-T.
ModeSystem to_squeezed_frame(const ModeSystem& lab, const EffectiveCouplings& ec);
gaussian::CovarianceMatrix to_squeezed_frame(const gaussian::CovarianceMatrix& lab, const EffectiveCouplings& ec);

struct EigenvalueReport {
    std::vector<Complex> values;  // ascending real part
    double convergence_time;      // 2 / |Re| of the slowest decaying eigenvalue
};

/// Eigenvalues with |lambda| below `zero_tol` are treated as the frozen mode
/// and left out of the convergence estimate.
EigenvalueReport eigenvalue_report(const ModeSystem& ms, double zero_tol = 1e-9);

/// Target state S vac S^T: single-mode squeeze on C0, two-mode squeeze on
/// (C2, C-2), plus the phase rotation implied by unequal laser phases.
gaussian::CovarianceMatrix squeezed_target(const EffectiveCouplings& ec);

struct ProtocolOptions {
    double tau1 = 20.0;
    double tau2 = 20.0;
    double dt_out = 0.05;
    Step first = Step::kClockwise;
};

struct ProtocolTrajectory {
    std::vector<double> t;
    std::vector<gaussian::CovarianceMatrix> sigma;
    std::vector<Eigen::VectorXd> means;
    std::size_t step_boundary = 0;  // index of the sample at t = tau1
};

/// Start from the five-mode vacuum, drive along `first` for tau1 and along the
/// other direction for tau2. The Lyapunov equation is integrated with
/// Dormand-Prince 5(4), rtol 1e-9, atol 1e-12.
ProtocolTrajectory run_protocol(const EffectiveCouplings& ec, double kappa, const ProtocolOptions& opt);
ProtocolTrajectory run_protocol(const EnsembleParams& p, double tau1, double tau2, double dt_out);

struct AtomPositions {
    std::vector<double> x;
    double k = 1.0;

    /// Uniform positions over `wavelengths` cavity wavelengths.
    static AtomPositions uniform_random(std::size_t n, double k, double wavelengths, std::uint64_t seed);
    /// x_j = j pi / k, commensurate with 2k.
    static AtomPositions lattice(std::size_t n, double k);
};

/// (1/N) sum_j exp(i (m - m') k x_j), m, m' in {0, 2, -2}.
Complex collective_overlap(const AtomPositions& pos, int m, int m_prime);

/// Columns t, s_i_j for the 55 upper-triangle entries (row-major), purity,
/// distance (max-norm to `target`).
void write_protocol_csv(std::ostream& out, const ProtocolTrajectory& traj, const gaussian::CovarianceMatrix& target);

}  // namespace cvdyn::ring_cavity
