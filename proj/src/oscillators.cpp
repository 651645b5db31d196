#include "cvdyn/oscillators.hpp"

#include "cvdyn/errors.hpp"

#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>

namespace cvdyn::oscillators {

namespace {

constexpr double kRelTol = 1e-9;
constexpr double kAbsTol = 1e-12;
constexpr double kConsistencyTol = 1e-6;
constexpr std::size_t kMaxStepsPerSample = 1000000;

using gaussian::CovarianceMatrix;
using gaussian::Matrix;

// Coefficients seen by the damped block at time t.
class CoefficientSource {
public:
    CoefficientSource(const BathSetup& setup, double omega2, double horizon)
        : mode_(setup.mode) {
        if (mode_ == BathMode::kOff) return;
        if (setup.renormalize) counterterm_ = bath::frequency_counterterm(setup.spectral);
        if (mode_ == BathMode::kMarkov) {
            markov_ = bath::markov_coefficients(setup.spectral, setup.thermal, omega2);
        } else {
            model_.emplace(setup.spectral, setup.thermal, omega2, horizon);
        }
    }

    bath::BathCoefficients at(double t) const {
        switch (mode_) {
            case BathMode::kOff: return bath::BathCoefficients{t, 0.0, 0.0, 0.0, 0.0};
            case BathMode::kMarkov: return markov_;
            case BathMode::kTimeDependent: return model_->at(std::max(t, 0.0));
        }
        return {};
    }
    double counterterm() const { return counterterm_; }

private:
    BathMode mode_;
    double counterterm_ = 0.0;
    bath::BathCoefficients markov_;
    std::optional<bath::BathModel> model_;
};

template <std::size_t N, class Rhs>
std::vector<std::array<double, N>> integrate_block(Rhs rhs, std::array<double, N> x, const std::vector<double>& times) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, N>;
    std::vector<State> out;
    out.reserve(times.size());
    if (times.size() == 1) {
        out.push_back(x);
        return out;
    }
    auto stepper = odeint::make_controlled(kAbsTol, kRelTol, odeint::runge_kutta_dopri5<State>());
    const double dt0 = std::min(1e-3, times[1] - times[0]);
    try {
        odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), dt0,
                                [&](const State& s, double) { out.push_back(s); },
                                odeint::max_step_checker(kMaxStepsPerSample));
    } catch (const odeint::odeint_error& e) {
        throw Error(ErrorKind::kStiffness, fmt::format("integrator gave up: {}", e.what()));
    }
    for (const State& s : out) {
        for (double v : s) {
            if (!std::isfinite(v)) throw Error(ErrorKind::kStiffness, "integrator produced a non-finite state");
        }
    }
    return out;
}

}  // namespace

void OscillatorPair::validate() const {
    if (!(mass > 0.0)) throw Error(ErrorKind::kDomain, "oscillator mass must be > 0");
    if (!(omega > 0.0)) throw Error(ErrorKind::kDomain, "oscillator frequency must be > 0");
    if (!std::isfinite(coupling)) throw Error(ErrorKind::kDomain, "oscillator coupling must be finite");
    if (coupling >= mass * omega * omega) {
        throw Error(ErrorKind::kInstability,
                    fmt::format("coupling {} >= M Omega^2 = {}: the antisymmetric mode is unbound", coupling,
                                mass * omega * omega));
    }
}

TransformedFrequencies transformed_frequencies(const OscillatorPair& p) {
    p.validate();
    const double w2 = p.omega * p.omega;
    const double shift = p.coupling / p.mass;
    return {std::sqrt(w2 - shift), std::sqrt(w2 + shift)};
}

CovarianceVector10 CovarianceVector10::from_matrix(const CovarianceMatrix& m) {
    if (m.dim() != 4) throw Error(ErrorKind::kDimension, "CovarianceVector10 needs a 4x4 matrix");
    return CovarianceVector10({m(0, 0), m(0, 1), m(1, 1), m(0, 2), m(0, 3), m(1, 2), m(1, 3), m(2, 2), m(2, 3),
                               m(3, 3)});
}

CovarianceMatrix CovarianceVector10::to_matrix() const {
    Matrix m(4, 4);
    m << v_[k11], v_[k12], v_[k13], v_[k14],
         v_[k12], v_[k22], v_[k23], v_[k24],
         v_[k13], v_[k23], v_[k33], v_[k34],
         v_[k14], v_[k24], v_[k34], v_[k44];
    return CovarianceMatrix(m);
}

Eigen::Matrix<double, 10, 10> BlockDrift::full() const {
    Eigen::Matrix<double, 10, 10> a = Eigen::Matrix<double, 10, 10>::Zero();
    a.block<3, 3>(0, 0) = A1;
    a.block<4, 4>(3, 3) = A2;
    a.block<3, 3>(7, 7) = A3;
    return a;
}

BlockDrift assemble_drift(const OscillatorPair& p, const bath::BathCoefficients& c, double counterterm) {
    const TransformedFrequencies f = transformed_frequencies(p);
    const double m = p.mass;
    const double wf2 = f.omega_f * f.omega_f;
    const double w2 = f.omega_2 * f.omega_2 + c.freq_shift + counterterm;
    const double g = c.gamma2;

    BlockDrift d;
    d.A1 << 0.0, 2.0 / m, 0.0,
            -m * wf2, 0.0, 1.0 / m,
            0.0, -2.0 * m * wf2, 0.0;
    d.A2 << 0.0, 1.0 / m, 1.0 / m, 0.0,
            -m * w2, -2.0 * g, 0.0, 1.0 / m,
            -m * wf2, 0.0, 0.0, 1.0 / m,
            0.0, -m * wf2, -m * w2, -2.0 * g;
    d.A3 << 0.0, 2.0 / m, 0.0,
            -m * w2, -2.0 * g, 1.0 / m,
            0.0, -2.0 * m * w2, -4.0 * g;
    d.F.setZero();
    d.F[CovarianceVector10::k34] = -c.f2;
    d.F[CovarianceVector10::k44] = 2.0 * c.D2;
    return d;
}

CovarianceVector10 initial_state(const OscillatorPair& p, double r, InitialState kind) {
    p.validate();
    if (!std::isfinite(r)) throw Error(ErrorKind::kDomain, "squeezing r must be finite");
    const double sign = kind == InitialState::kSqueezeOperator ? -1.0 : 1.0;
    CovarianceMatrix bare = gaussian::two_mode_squeezed_covariance(sign * r);
    const double s = std::sqrt(p.mass * p.omega);
    Matrix scale = Eigen::Vector4d(1.0 / s, s, 1.0 / s, s).asDiagonal();
    bare = gaussian::apply_symplectic(scale, bare);
    return CovarianceVector10::from_matrix(gaussian::plus_minus_transform(bare, gaussian::Direction::kForward));
}

double Trajectory::constant_of_motion(std::size_t i) const {
    const CovarianceVector10& v = states.at(i);
    return pair.mass * freqs.omega_f * freqs.omega_f * v[CovarianceVector10::k11] +
           v[CovarianceVector10::k22] / pair.mass;
}

std::vector<double> output_grid(double t_end, double dt_out) {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw Error(ErrorKind::kDomain, "t_end must be finite and > 0");
    if (!(dt_out > 0.0)) throw Error(ErrorKind::kDomain, "dt_out must be > 0");
    const auto n = static_cast<std::size_t>(std::floor(t_end / dt_out * (1.0 + 1e-12)));
    std::vector<double> t;
    t.reserve(n + 2);
    for (std::size_t k = 0; k <= n; ++k) t.push_back(static_cast<double>(k) * dt_out);
    if (t_end - t.back() > 1e-9 * dt_out) t.push_back(t_end);
    else t.back() = std::min(t.back(), t_end);
    return t;
}

namespace {

Trajectory integrate_on(const OscillatorPair& p, const BathSetup& setup, const CovarianceVector10& v0,
                        const std::vector<double>& times) {
    using V = CovarianceVector10;
    const TransformedFrequencies f = transformed_frequencies(p);
    gaussian::require_physical(v0.to_matrix());
    const CoefficientSource source(setup, f.omega_2, times.back());

    auto drift_at = [&](double t) { return assemble_drift(p, source.at(t), source.counterterm()); };
    const BlockDrift d0 = drift_at(0.0);
    const Eigen::Matrix3d a1 = d0.A1;

    using S3 = std::array<double, 3>;
    using S4 = std::array<double, 4>;
    auto free_rhs = [&](const S3& x, S3& dx, double) {
        Eigen::Map<const Eigen::Vector3d> xv(x.data());
        Eigen::Map<Eigen::Vector3d>(dx.data()) = a1 * xv;
    };
    auto cross_rhs = [&](const S4& x, S4& dx, double t) {
        const BlockDrift d = drift_at(t);
        Eigen::Map<const Eigen::Vector4d> xv(x.data());
        Eigen::Map<Eigen::Vector4d>(dx.data()) = d.A2 * xv;
    };
    auto damped_rhs = [&](const S3& x, S3& dx, double t) {
        const BlockDrift d = drift_at(t);
        Eigen::Map<const Eigen::Vector3d> xv(x.data());
        Eigen::Map<Eigen::Vector3d>(dx.data()) = d.A3 * xv + d.F.tail<3>();
    };

    const auto b1 = integrate_block(free_rhs, S3{v0[V::k11], v0[V::k12], v0[V::k22]}, times);
    const auto b2 = integrate_block(cross_rhs, S4{v0[V::k13], v0[V::k14], v0[V::k23], v0[V::k24]}, times);
    const auto b3 = integrate_block(damped_rhs, S3{v0[V::k33], v0[V::k34], v0[V::k44]}, times);

    Trajectory traj;
    traj.pair = p;
    traj.freqs = f;
    traj.t = times;
    traj.states.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        traj.states.emplace_back(std::array<double, 10>{b1[i][0], b1[i][1], b1[i][2], b2[i][0], b2[i][1], b2[i][2],
                                                        b2[i][3], b3[i][0], b3[i][1], b3[i][2]});
    }

    if (setup.mode == BathMode::kOff) {
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double nu = gaussian::symplectic_eigenvalues(traj.states[i].to_matrix()).front();
            if (nu < 0.5 - kConsistencyTol) {
                throw Error(ErrorKind::kConsistency,
                            fmt::format("closed-system evolution left the physical set at t = {} (nu = {})",
                                        times[i], nu));
            }
        }
    }
    return traj;
}

}  // namespace

Trajectory integrate(const OscillatorPair& p, const BathSetup& bath, const CovarianceVector10& v0, double t_end,
                     double dt_out) {
    return integrate_on(p, bath, v0, output_grid(t_end, dt_out));
}

FreeBlock closed_form_free(double V11_0, double V12_0, double V22_0, double omega_f, double mass, double t) {
    if (!(omega_f > 0.0)) throw Error(ErrorKind::kDomain, "closed form needs Omega_F > 0");
    const double k = mass * omega_f * omega_f;
    const double plus = k * V11_0 + V22_0 / mass;
    const double minus0 = k * V11_0 - V22_0 / mass;
    const double c = std::cos(2.0 * omega_f * t);
    const double s = std::sin(2.0 * omega_f * t);
    const double minus = minus0 * c + 2.0 * omega_f * V12_0 * s;
    const double v12 = V12_0 * c - minus0 / (2.0 * omega_f) * s;
    return {(plus + minus) / (2.0 * k), v12, mass * (plus - minus) / 2.0};
}

gaussian::Negativity bare_negativity(const CovarianceVector10& v) {
    return gaussian::ppt_negativity(gaussian::plus_minus_transform(v.to_matrix(), gaussian::Direction::kInverse));
}

std::vector<EntanglementPoint> entanglement_series(const Trajectory& traj) {
    std::vector<EntanglementPoint> out;
    out.reserve(traj.t.size());
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        const gaussian::Negativity n = bare_negativity(traj.states[i]);
        out.push_back({traj.t[i], n.nu_tilde_minus, n.log_negativity, n.entangled});
    }
    return out;
}

double threshold_r(double temperature, double omega2) {
    if (!(temperature >= 0.0)) throw Error(ErrorKind::kDomain, "temperature must be >= 0");
    if (!(omega2 > 0.0)) throw Error(ErrorKind::kDomain, "Omega2 must be > 0");
    const double nbar = bath::mean_occupation(bath::ThermalSpec{temperature}, omega2);
    return 0.5 * std::log(2.0 * nbar + 1.0);
}

double numeric_threshold_r(const OscillatorPair& p, const BathSetup& bath, const ThresholdSearch& search) {
    if (!(search.window_end > search.window_start && search.window_start >= 0.0)) {
        throw Error(ErrorKind::kDomain, "threshold window must satisfy 0 <= start < end");
    }
    BathSetup markov = bath;
    markov.mode = BathMode::kMarkov;
    const std::vector<double> times = output_grid(search.window_end, search.dt_out);
    const auto first = static_cast<std::size_t>(
        std::lower_bound(times.begin(), times.end(), search.window_start) - times.begin());

    auto late_entangled = [&](double r) {
        const Trajectory traj = integrate_on(p, markov, initial_state(p, r, search.initial), times);
        double nu_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = first; i < times.size(); ++i) {
            nu_min = std::min(nu_min, bare_negativity(traj.states[i]).nu_tilde_minus);
        }
        return nu_min < 0.5;
    };

    double lo = search.r_low;
    double hi = search.r_high;
    if (late_entangled(lo) || !late_entangled(hi)) {
        throw Error(ErrorKind::kNumericalFailure,
                    fmt::format("late-time entanglement threshold not bracketed by r in [{}, {}]", lo, hi));
    }
    while (hi - lo > search.tolerance) {
        const double mid = 0.5 * (lo + hi);
        (late_entangled(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<DeathInterval> sudden_death_report(const std::vector<EntanglementPoint>& series) {
    std::vector<DeathInterval> out;
    if (series.empty()) return out;
    auto crossing = [&](std::size_t i) {
        const EntanglementPoint& a = series[i - 1];
        const EntanglementPoint& b = series[i];
        const double ga = 0.5 - a.nu_tilde_minus;
        const double gb = 0.5 - b.nu_tilde_minus;
        if (ga == gb) return b.t;
        const double u = std::clamp(ga / (ga - gb), 0.0, 1.0);
        return a.t + u * (b.t - a.t);
    };
    if (!series.front().entangled) out.push_back({series.front().t});
    for (std::size_t i = 1; i < series.size(); ++i) {
        const bool was = series[i - 1].entangled;
        const bool is = series[i].entangled;
        if (was && !is) out.push_back({crossing(i)});
        if (!was && is) out.back().revival = crossing(i);
    }
    return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const std::vector<EntanglementPoint>& series) {
    if (series.size() != traj.t.size()) throw Error(ErrorKind::kDimension, "series and trajectory lengths differ");
    out << "t,V11,V12,V22,V13,V14,V23,V24,V33,V34,V44,nu_tilde_minus,log_negativity\n";
    std::string line;
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        line = fmt::format("{:.17g}", traj.t[i]);
        for (double v : traj.states[i].values()) line += fmt::format(",{:.17g}", v);
        line += fmt::format(",{:.17g},{:.17g}\n", series[i].nu_tilde_minus, series[i].log_negativity);
        out << line;
    }
}

}  // namespace cvdyn::oscillators
