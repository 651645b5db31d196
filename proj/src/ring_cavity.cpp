#include "cvdyn/ring_cavity.hpp"

#include "cvdyn/errors.hpp"

#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace cvdyn::ring_cavity {

namespace {

constexpr Eigen::Index kDim = 2 * kModeCount;
constexpr std::size_t kTriangle = kDim * (kDim + 1) / 2;
constexpr double kRelTol = 1e-9;
constexpr double kAbsTol = 1e-12;

using gaussian::CovarianceMatrix;
using gaussian::Matrix;
using Mat10 = Eigen::Matrix<double, kDim, kDim>;
using Vec10 = Eigen::Matrix<double, kDim, 1>;
using State = std::array<double, kTriangle + kDim>;

// da_k/dt = sum_j M_kj a_j + N_kj a_j^+
struct Heisenberg {
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(kModeCount, kModeCount);
    Eigen::MatrixXcd N = Eigen::MatrixXcd::Zero(kModeCount, kModeCount);

    // H = (bu X + bs Y^+) a^+ + h.c.
    void couple(std::size_t a, std::size_t x, std::size_t y, Complex bu, Complex bs) {
        const Complex i(0.0, 1.0);
        M(a, x) += -i * bu;
        N(a, y) += -i * bs;
        M(x, a) += -i * std::conj(bu);
        N(y, a) += -i * bs;
    }

    Matrix quadrature_drift() const {
        Matrix a = Matrix::Zero(kDim, kDim);
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(kModeCount); ++k) {
            for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(kModeCount); ++j) {
                const Complex sum = M(k, j) + N(k, j);
                const Complex diff = M(k, j) - N(k, j);
                a(2 * k, 2 * j) = sum.real();
                a(2 * k, 2 * j + 1) = -diff.imag();
                a(2 * k + 1, 2 * j) = sum.imag();
                a(2 * k + 1, 2 * j + 1) = diff.real();
            }
        }
        return a;
    }
};

void require_kappa(double kappa) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw Error(ErrorKind::kDomain, "kappa must be finite and > 0");
}

// Phase that makes both couplings real in the rotated frame.
double frame_angle(const EffectiveCouplings& ec) {
    return 0.5 * (std::arg(ec.beta_s) - std::arg(ec.beta_u));
}

ModeSystem assemble(const Heisenberg& h, double kappa, Step step, Frame frame) {
    Heisenberg damped = h;
    damped.M(kCavityPlus, kCavityPlus) -= kappa / 2.0;
    damped.M(kCavityMinus, kCavityMinus) -= kappa / 2.0;
    ModeSystem ms;
    ms.step = step;
    ms.frame = frame;
    ms.drift = damped.quadrature_drift();
    ms.diffusion = Matrix::Zero(kDim, kDim);
    for (Eigen::Index i = 0; i < 4; ++i) ms.diffusion(i, i) = kappa / 2.0;
    ms.first_moments = Eigen::VectorXd::Zero(kDim);
    return ms;
}

std::size_t triangle_index(Eigen::Index i, Eigen::Index j) {
    // row-major upper triangle, i <= j
    return static_cast<std::size_t>(i * kDim - i * (i - 1) / 2 + (j - i));
}

Mat10 unpack(const State& s) {
    Mat10 m;
    for (Eigen::Index i = 0; i < kDim; ++i) {
        for (Eigen::Index j = i; j < kDim; ++j) m(i, j) = m(j, i) = s[triangle_index(i, j)];
    }
    return m;
}

void pack(const Mat10& m, const Vec10& mean, State& s) {
    for (Eigen::Index i = 0; i < kDim; ++i) {
        for (Eigen::Index j = i; j < kDim; ++j) s[triangle_index(i, j)] = m(i, j);
    }
    for (Eigen::Index i = 0; i < kDim; ++i) s[kTriangle + static_cast<std::size_t>(i)] = mean(i);
}

std::vector<double> segment_grid(double t0, double span, double dt) {
    const auto n = static_cast<std::size_t>(std::floor(span / dt * (1.0 + 1e-12)));
    std::vector<double> t;
    for (std::size_t k = 0; k <= n; ++k) t.push_back(t0 + static_cast<double>(k) * dt);
    if (t0 + span - t.back() > 1e-9 * dt) t.push_back(t0 + span);
    return t;
}

}  // namespace

void EnsembleParams::validate() const {
    if (n_atoms < 1) throw Error(ErrorKind::kDomain, "ensemble needs at least one atom");
    require_kappa(kappa);
    if (delta_u == 0.0 || delta_s == 0.0) throw Error(ErrorKind::kDomain, "detunings must be nonzero");
}

EffectiveCouplings effective_couplings(const EnsembleParams& p) {
    p.validate();
    const double root_n = std::sqrt(static_cast<double>(p.n_atoms));
    return {std::polar(root_n * p.omega_u * p.g_u / (2.0 * p.delta_u), -p.phi_u),
            std::polar(root_n * p.omega_s * p.g_s / (2.0 * p.delta_s), -p.phi_s)};
}

std::vector<std::string> validity_check(const EnsembleParams& p) {
    std::vector<std::string> out;
    auto adiabatic = [&](const char* branch, double delta, double g, double omega, double gamma) {
        const double scale = std::max({std::abs(g), std::abs(omega), std::abs(gamma)});
        if (std::abs(delta) < 10.0 * scale) {
            out.push_back(fmt::format("{} branch: |Delta| = {} is below 10 max(g, Omega, gamma) = {}; the excited "
                                      "level cannot be eliminated adiabatically",
                                      branch, std::abs(delta), 10.0 * scale));
        }
    };
    adiabatic("u", p.delta_u, p.g_u, p.omega_u, p.gamma_u);
    adiabatic("s", p.delta_s, p.g_s, p.omega_s, p.gamma_s);
    if (p.delta_u == 0.0 || p.delta_s == 0.0) {
        out.push_back("zero detuning: Stark shifts undefined");
        return out;
    }
    const double stark_u = p.g_u * p.g_u / p.delta_u;
    const double stark_s = p.g_s * p.g_s / p.delta_s;
    if (std::abs(stark_u - stark_s) > 1e-6 * std::max(std::abs(stark_u), std::abs(stark_s))) {
        out.push_back(fmt::format("Stark shifts differ: g_u^2/Delta_u = {} vs g_s^2/Delta_s = {}", stark_u, stark_s));
    }
    const double detuning = p.delta_c + 0.5 * static_cast<double>(p.n_atoms) * (stark_u + stark_s);
    if (std::abs(detuning) > 1e-6 * p.kappa) {
        out.push_back(fmt::format("cavity off resonance: delta_c + N/2 (g_u^2/Delta_u + g_s^2/Delta_s) = {}", detuning));
    }
    return out;
}

SqueezeParameters squeeze_parameters(const EffectiveCouplings& ec) {
    const double bu = std::abs(ec.beta_u);
    const double bs = std::abs(ec.beta_s);
    if (!(bs <= (1.0 - 1e-9) * bu)) {
        throw Error(ErrorKind::kUnstableRegime,
                    fmt::format("|beta_s| = {} is not below |beta_u| = {}: no squeezing transformation", bs, bu));
    }
    const double xi = std::atanh(bs / bu);
    return {xi, xi};
}

double effective_mixing(const EffectiveCouplings& ec) {
    squeeze_parameters(ec);
    const double bu = std::abs(ec.beta_u);
    const double bs = std::abs(ec.beta_s);
    return std::sqrt((bu - bs) * (bu + bs));
}

ModeSystem build_system(const EffectiveCouplings& ec, double kappa, Step step, Frame frame) {
    require_kappa(kappa);
    const bool cw = step == Step::kClockwise;
    // The driven direction decides which cavity mode talks to which atomic pair.
    const std::size_t a_zero = cw ? kCavityPlus : kCavityMinus;
    const std::size_t a_pair = cw ? kCavityMinus : kCavityPlus;
    const std::size_t x_pair = cw ? kC2 : kCMinus2;
    const std::size_t y_pair = cw ? kCMinus2 : kC2;

    Heisenberg h;
    if (frame == Frame::kLab) {
        h.couple(a_zero, kC0, kC0, ec.beta_u, ec.beta_s);
        h.couple(a_pair, x_pair, y_pair, ec.beta_u, ec.beta_s);
    } else {
        const Complex mix = std::polar(effective_mixing(ec), 0.5 * (std::arg(ec.beta_u) + std::arg(ec.beta_s)));
        h.couple(a_zero, kC0, kC0, mix, 0.0);
        h.couple(a_pair, x_pair, x_pair, mix, 0.0);
    }
    return assemble(h, kappa, step, frame);
}

Matrix frame_transform(const EffectiveCouplings& ec) {
    const SqueezeParameters sp = squeeze_parameters(ec);
    const Matrix s = gaussian::squeeze_symplectic({{{kC0, sp.xi0}}, {{kC2, kCMinus2, sp.xi1}}}, kModeCount);
    const double theta = frame_angle(ec);
    Matrix r = Matrix::Identity(kDim, kDim);
    for (std::size_t m : {kC0, kC2, kCMinus2}) r = r * gaussian::phase_rotation(kModeCount, m, theta);
    return r * s;
}

ModeSystem to_squeezed_frame(const ModeSystem& lab, const EffectiveCouplings& ec) {
    if (lab.frame != Frame::kLab) throw Error(ErrorKind::kDomain, "system is already in the squeezed frame");
    const Matrix t = frame_transform(ec);
    const Matrix t_inv = t.inverse();
    ModeSystem out = lab;
    out.frame = Frame::kSqueezed;
    out.drift = t_inv * lab.drift * t;
    out.diffusion = t_inv * lab.diffusion * t_inv.transpose();
    out.first_moments = t_inv * lab.first_moments;
    return out;
}

CovarianceMatrix to_squeezed_frame(const CovarianceMatrix& lab, const EffectiveCouplings& ec) {
    if (lab.dim() != kDim) throw Error(ErrorKind::kDimension, "ring-cavity state must be 10 x 10");
    return gaussian::apply_symplectic(frame_transform(ec).inverse(), lab);
}

EigenvalueReport eigenvalue_report(const ModeSystem& ms, double zero_tol) {
    Eigen::EigenSolver<Matrix> solver(ms.drift, false);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::kNumericalFailure, "drift eigen-solve failed");
    EigenvalueReport r;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) r.values.push_back(solver.eigenvalues()(i));
    std::sort(r.values.begin(), r.values.end(), [](Complex a, Complex b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    double slowest = -std::numeric_limits<double>::infinity();
    for (Complex z : r.values) {
        if (std::abs(z) > zero_tol) slowest = std::max(slowest, z.real());
    }
    r.convergence_time = slowest < 0.0 ? 2.0 / std::abs(slowest) : std::numeric_limits<double>::infinity();
    return r;
}

CovarianceMatrix squeezed_target(const EffectiveCouplings& ec) {
    return gaussian::apply_symplectic(frame_transform(ec), gaussian::vacuum_covariance(kModeCount));
}

ProtocolTrajectory run_protocol(const EffectiveCouplings& ec, double kappa, const ProtocolOptions& opt) {
    namespace odeint = boost::numeric::odeint;
    require_kappa(kappa);
    if (!(opt.tau1 > 0.0) || !(opt.tau2 > 0.0)) throw Error(ErrorKind::kDomain, "step durations must be > 0");
    if (!(opt.dt_out > 0.0)) throw Error(ErrorKind::kDomain, "dt_out must be > 0");
    squeeze_parameters(ec);

    const Step second = opt.first == Step::kClockwise ? Step::kAnticlockwise : Step::kClockwise;
    ProtocolTrajectory traj;
    State x{};
    pack(Mat10(0.5 * Mat10::Identity()), Vec10::Zero(), x);

    auto run_step = [&](Step step, double t0, double span, bool skip_first) {
        const ModeSystem ms = build_system(ec, kappa, step);
        const Mat10 a = ms.drift;
        const Mat10 d = ms.diffusion;
        auto rhs = [&](const State& s, State& ds, double) {
            const Mat10 sigma = unpack(s);
            const Vec10 mean = Eigen::Map<const Vec10>(s.data() + kTriangle);
            pack(a * sigma + sigma * a.transpose() + d, a * mean, ds);
        };
        const std::vector<double> grid = segment_grid(t0, span, opt.dt_out);
        bool first = true;
        auto observe = [&](const State& s, double t) {
            if (first && skip_first) {
                first = false;
                return;
            }
            first = false;
            traj.t.push_back(t);
            traj.sigma.emplace_back(Matrix(unpack(s)));
            traj.means.emplace_back(Eigen::Map<const Vec10>(s.data() + kTriangle));
        };
        auto stepper = odeint::make_controlled(kAbsTol, kRelTol, odeint::runge_kutta_dopri5<State>());
        try {
            odeint::integrate_times(stepper, rhs, x, grid.begin(), grid.end(), std::min(opt.dt_out, 0.01 / kappa),
                                    observe, odeint::max_step_checker(1000000));
        } catch (const odeint::odeint_error& e) {
            throw Error(ErrorKind::kStiffness, fmt::format("protocol integration gave up: {}", e.what()));
        }
    };

    run_step(opt.first, 0.0, opt.tau1, false);
    traj.step_boundary = traj.t.size() - 1;
    run_step(second, opt.tau1, opt.tau2, true);
    for (const auto& s : traj.sigma) {
        if (!s.matrix().allFinite()) throw Error(ErrorKind::kStiffness, "protocol produced a non-finite state");
    }
    return traj;
}

ProtocolTrajectory run_protocol(const EnsembleParams& p, double tau1, double tau2, double dt_out) {
    ProtocolOptions opt;
    opt.tau1 = tau1;
    opt.tau2 = tau2;
    opt.dt_out = dt_out;
    return run_protocol(effective_couplings(p), p.kappa, opt);
}

AtomPositions AtomPositions::uniform_random(std::size_t n, double k, double wavelengths, std::uint64_t seed) {
    if (!(k > 0.0)) throw Error(ErrorKind::kDomain, "wave number must be > 0");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, wavelengths * 2.0 * M_PI / k);
    AtomPositions pos;
    pos.k = k;
    pos.x.resize(n);
    for (double& xj : pos.x) xj = u(rng);
    return pos;
}

AtomPositions AtomPositions::lattice(std::size_t n, double k) {
    if (!(k > 0.0)) throw Error(ErrorKind::kDomain, "wave number must be > 0");
    AtomPositions pos;
    pos.k = k;
    pos.x.resize(n);
    for (std::size_t j = 0; j < n; ++j) pos.x[j] = static_cast<double>(j) * M_PI / k;
    return pos;
}

Complex collective_overlap(const AtomPositions& pos, int m, int m_prime) {
    auto allowed = [](int v) { return v == 0 || v == 2 || v == -2; };
    if (!allowed(m) || !allowed(m_prime)) throw Error(ErrorKind::kDomain, "collective modes are m = 0, 2, -2");
    if (pos.x.empty()) throw Error(ErrorKind::kDomain, "no atom positions");
    if (m == m_prime) return 1.0;
    const double q = static_cast<double>(m - m_prime) * pos.k;
    Complex sum = 0.0;
    for (double xj : pos.x) sum += std::polar(1.0, q * xj);
    return sum / static_cast<double>(pos.x.size());
}

void write_protocol_csv(std::ostream& out, const ProtocolTrajectory& traj, const CovarianceMatrix& target) {
    std::string line = "t";
    for (Eigen::Index i = 0; i < kDim; ++i) {
        for (Eigen::Index j = i; j < kDim; ++j) line += fmt::format(",s_{}_{}", i, j);
    }
    out << line << ",purity,distance\n";
    for (std::size_t n = 0; n < traj.t.size(); ++n) {
        const Matrix& s = traj.sigma[n].matrix();
        line = fmt::format("{:.17g}", traj.t[n]);
        for (Eigen::Index i = 0; i < kDim; ++i) {
            for (Eigen::Index j = i; j < kDim; ++j) line += fmt::format(",{:.17g}", s(i, j));
        }
        line += fmt::format(",{:.17g},{:.17g}\n", gaussian::purity(traj.sigma[n]),
                            gaussian::max_abs_difference(s, target.matrix()));
        out << line;
    }
}

}  // namespace cvdyn::ring_cavity
