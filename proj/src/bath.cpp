#include "cvdyn/bath.hpp"

#include "cvdyn/errors.hpp"
#include "cvdyn/quadrature.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace cvdyn::bath {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRelTol = 1e-8;
constexpr double kAbsFloor = 1e-12;
// Thermal memory decays as exp(-2 pi T s); exp(-27.6) ~ 1e-12.
constexpr double kThermalDecades = 27.6;
constexpr double kCutoffMemory = 60.0;  // in units of 1/Lambda
constexpr double kSamplesPerScale = 20.0;

// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                            -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                            0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                              0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                              0.2223810344533745, 0.1012285362903763};

double prefactor(const SpectralDensity& sd) {
    return sd.coupling_factor * (2.0 * sd.gamma0 * sd.mass) / kPi;
}

// Magnitudes used to set the absolute quadrature floor. They scale linearly
// with gamma0, so the subdivision pattern does not depend on gamma0.
double noise_scale(const SpectralDensity& sd, const ThermalSpec& th) {
    return prefactor(sd) * sd.cutoff * (sd.cutoff + 2.0 * th.temperature);
}
double dissipation_scale(const SpectralDensity& sd) {
    return prefactor(sd) * sd.cutoff * sd.cutoff;
}

quadrature::Result kernel_quadrature(const std::function<double(double)>& f, const SpectralDensity& sd,
                                     double s, double scale) {
    const double w_max = frequency_limit(sd);
    quadrature::Options opts;
    opts.rel_tol = kRelTol;
    opts.abs_tol = kAbsFloor * scale;
    opts.initial_panels = 8 + static_cast<std::size_t>(std::ceil(w_max * std::abs(s) / kPi));
    return quadrature::integrate(f, 0.0, w_max, opts);
}

// x / tanh(x), finite at x = 0.
double x_coth_x(double x) {
    if (std::abs(x) < 1e-6) return 1.0 + x * x / 3.0;
    return x / std::tanh(x);
}

// PV int_0^W g(w) / (w^2 - W0^2) dw with the pole at W0 removed by symmetric
// subtraction around it.
double principal_value(const std::function<double(double)>& g, double pole, double w_max, double scale) {
    if (!(pole > 0.0 && pole < w_max)) {
        throw Error(ErrorKind::kDomain,
                    fmt::format("principal value: pole {} outside (0, {})", pole, w_max));
    }
    auto h = [&](double w) { return g(w) / (w + pole); };
    quadrature::Options opts;
    opts.rel_tol = kRelTol;
    opts.abs_tol = kAbsFloor * scale;
    opts.initial_panels = 8;

    const double half = std::min(pole, w_max - pole);
    double total = quadrature::integrate([&](double u) { return (h(pole + u) - h(pole - u)) / u; }, 0.0, half, opts)
                       .value;
    if (pole - half > 0.0) {
        total += quadrature::integrate([&](double w) { return h(w) / (w - pole); }, 0.0, pole - half, opts).value;
    }
    if (pole + half < w_max) {
        total += quadrature::integrate([&](double w) { return h(w) / (w - pole); }, pole + half, w_max, opts).value;
    }
    return total;
}

}  // namespace

void SpectralDensity::validate() const {
    if (!(gamma0 > 0.0)) throw Error(ErrorKind::kDomain, "spectral density: gamma0 must be > 0");
    if (!(cutoff > 0.0)) throw Error(ErrorKind::kDomain, "spectral density: cutoff must be > 0");
    if (exponent < 1) throw Error(ErrorKind::kDomain, "spectral density: exponent must be >= 1");
    if (!(mass > 0.0)) throw Error(ErrorKind::kDomain, "spectral density: mass must be > 0");
    if (!(coupling_factor > 0.0)) throw Error(ErrorKind::kDomain, "spectral density: coupling factor must be > 0");
}

void ThermalSpec::validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
        throw Error(ErrorKind::kDomain, "temperature must be finite and >= 0");
    }
}

double spectral_density(const SpectralDensity& sd, double omega) {
    if (!(omega >= 0.0)) throw Error(ErrorKind::kDomain, fmt::format("spectral density at negative frequency {}", omega));
    const double x = omega / sd.cutoff;
    return prefactor(sd) * omega * std::pow(x, sd.exponent - 1) * std::exp(-x * x);
}

double mean_occupation(const ThermalSpec& th, double omega) {
    if (!(omega > 0.0)) throw Error(ErrorKind::kDomain, "mean occupation needs omega > 0");
    if (th.temperature == 0.0) return 0.0;
    return 1.0 / std::expm1(omega / th.temperature);
}

double noise_spectrum(const SpectralDensity& sd, const ThermalSpec& th, double omega) {
    if (th.temperature == 0.0) return spectral_density(sd, omega);
    // J(w) coth(w/2T) = pref (w/L)^(n-1) e^{-(w/L)^2} * 2T * x coth x, x = w/2T
    const double x = omega / sd.cutoff;
    const double half = omega / (2.0 * th.temperature);
    return prefactor(sd) * std::pow(x, sd.exponent - 1) * std::exp(-x * x) * 2.0 * th.temperature * x_coth_x(half);
}

double frequency_limit(const SpectralDensity& sd) { return 6.0 * sd.cutoff; }

double noise_kernel(const SpectralDensity& sd, const ThermalSpec& th, double s) {
    if (!(s >= 0.0)) throw Error(ErrorKind::kDomain, "noise kernel needs s >= 0");
    auto f = [&](double w) { return noise_spectrum(sd, th, w) * std::cos(w * s); };
    return kernel_quadrature(f, sd, s, noise_scale(sd, th)).value;
}

double noise_kernel_derivative(const SpectralDensity& sd, const ThermalSpec& th, double s) {
    if (!(s >= 0.0)) throw Error(ErrorKind::kDomain, "noise kernel needs s >= 0");
    auto f = [&](double w) { return -noise_spectrum(sd, th, w) * w * std::sin(w * s); };
    return kernel_quadrature(f, sd, s, noise_scale(sd, th) * sd.cutoff).value;
}

double dissipation_kernel(const SpectralDensity& sd, double s) {
    if (!(s >= 0.0)) throw Error(ErrorKind::kDomain, "dissipation kernel needs s >= 0");
    if (s == 0.0) return 0.0;
    auto f = [&](double w) { return spectral_density(sd, w) * std::sin(w * s); };
    return kernel_quadrature(f, sd, s, dissipation_scale(sd)).value;
}

double dissipation_kernel_derivative(const SpectralDensity& sd, double s) {
    if (!(s >= 0.0)) throw Error(ErrorKind::kDomain, "dissipation kernel needs s >= 0");
    auto f = [&](double w) { return spectral_density(sd, w) * w * std::cos(w * s); };
    return kernel_quadrature(f, sd, s, dissipation_scale(sd) * sd.cutoff).value;
}

double frequency_counterterm(const SpectralDensity& sd) {
    // (2/M) pref int_0^inf (w/L)^(n-1) e^{-(w/L)^2} dw = (2/M) pref L Gamma(n/2) / 2
    return prefactor(sd) * sd.cutoff * std::tgamma(0.5 * sd.exponent) / sd.mass;
}

double memory_time(const SpectralDensity& sd, const ThermalSpec& th) {
    if (th.temperature == 0.0) return std::numeric_limits<double>::infinity();
    return std::max(kCutoffMemory / sd.cutoff, kThermalDecades / (2.0 * kPi * th.temperature));
}

BathCoefficients coefficients_at(const SpectralDensity& sd, const ThermalSpec& th, double omega2, double t) {
    if (!(t >= 0.0)) throw Error(ErrorKind::kDomain, "coefficients need t >= 0");
    return BathModel(sd, th, omega2, t).at(t);
}

BathCoefficients markov_coefficients(const SpectralDensity& sd, const ThermalSpec& th, double omega2,
                                     std::vector<std::string>* warnings) {
    sd.validate();
    th.validate();
    if (!(omega2 > 0.0)) throw Error(ErrorKind::kDomain, "Omega2 must be > 0");
    if (warnings && !(sd.cutoff > 10.0 * omega2)) {
        warnings->push_back(fmt::format("Markov limit used with cutoff {} <= 10 * Omega2 = {}", sd.cutoff,
                                        10.0 * omega2));
    }
    const double m = sd.mass;
    const double w_max = frequency_limit(sd);
    BathCoefficients c;
    c.t = std::numeric_limits<double>::infinity();
    c.gamma2 = kPi * spectral_density(sd, omega2) / (2.0 * m * omega2);
    c.D2 = 0.5 * kPi * noise_spectrum(sd, th, omega2);
    c.freq_shift = -(2.0 / m) * principal_value([&](double w) { return spectral_density(sd, w) * w; }, omega2,
                                                w_max, dissipation_scale(sd));
    c.f2 = (1.0 / m) * principal_value([&](double w) { return noise_spectrum(sd, th, w); }, omega2, w_max,
                                       noise_scale(sd, th) / (sd.cutoff * sd.cutoff));
    return c;
}

BathModel::BathModel(SpectralDensity sd, ThermalSpec th, double omega2, double horizon)
    : sd_(sd), th_(th), omega2_(omega2) {
    sd_.validate();
    th_.validate();
    if (!(omega2_ > 0.0)) throw Error(ErrorKind::kDomain, "Omega2 must be > 0");
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
        throw Error(ErrorKind::kDomain, "bath horizon must be finite and >= 0");
    }
    counterterm_ = frequency_counterterm(sd_);

    const double memory = memory_time(sd_, th_);
    saturated_ = memory <= horizon;
    const double end = std::min(memory, horizon);

    const double lambda = sd_.cutoff;
    fine_step_ = 1.0 / (kSamplesPerScale * std::max(lambda, omega2_));
    fine_end_ = std::min(end, kCutoffMemory / lambda);
    fine_cells_ = fine_end_ > 0.0 ? static_cast<std::size_t>(std::ceil(fine_end_ / fine_step_)) : 0;
    if (fine_cells_ > 0) fine_step_ = fine_end_ / static_cast<double>(fine_cells_);

    const double thermal_rate = 2.0 * kPi * th_.temperature;
    coarse_step_ = std::max(fine_step_, 1.0 / (kSamplesPerScale * std::max(omega2_, thermal_rate)));
    std::size_t coarse_cells = 0;
    if (end > fine_end_) {
        coarse_cells = static_cast<std::size_t>(std::ceil((end - fine_end_) / coarse_step_));
        coarse_step_ = (end - fine_end_) / static_cast<double>(coarse_cells);
    }

    nodes_.reserve(fine_cells_ + coarse_cells + 1);
    for (std::size_t k = 0; k <= fine_cells_; ++k) nodes_.push_back(fine_step_ * static_cast<double>(k));
    nodes_.back() = fine_end_;
    for (std::size_t k = 1; k <= coarse_cells; ++k) nodes_.push_back(fine_end_ + coarse_step_ * static_cast<double>(k));
    if (coarse_cells > 0) nodes_.back() = end;

    kernel_.reserve(nodes_.size());
    for (double s : nodes_) {
        kernel_.push_back({noise_kernel(sd_, th_, s), noise_kernel_derivative(sd_, th_, s),
                           dissipation_kernel(sd_, s), dissipation_kernel_derivative(sd_, s)});
    }

    cumulative_.assign(nodes_.size(), Integrals{});
    for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
        const double a = nodes_[k];
        const double b = nodes_[k + 1];
        const double h = b - a;
        const Node& n0 = kernel_[k];
        const Node& n1 = kernel_[k + 1];
        Integrals cell;
        for (std::size_t g = 0; g < kGlNodes.size(); ++g) {
            const double u = 0.5 * (kGlNodes[g] + 1.0);
            const double s = a + h * u;
            // Cubic Hermite basis on [0, 1].
            const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
            const double h10 = u * (1 - u) * (1 - u);
            const double h01 = u * u * (3 - 2 * u);
            const double h11 = u * u * (u - 1);
            const double nu = h00 * n0.nu + h10 * h * n0.dnu + h01 * n1.nu + h11 * h * n1.dnu;
            const double eta = h00 * n0.eta + h10 * h * n0.deta + h01 * n1.eta + h11 * h * n1.deta;
            const double w = 0.5 * h * kGlWeights[g];
            const double c = std::cos(omega2_ * s);
            const double sn = std::sin(omega2_ * s);
            cell.eta_cos += w * eta * c;
            cell.eta_sin += w * eta * sn;
            cell.nu_cos += w * nu * c;
            cell.nu_sin += w * nu * sn;
        }
        Integrals& next = cumulative_[k + 1];
        const Integrals& prev = cumulative_[k];
        next.eta_cos = prev.eta_cos + cell.eta_cos;
        next.eta_sin = prev.eta_sin + cell.eta_sin;
        next.nu_cos = prev.nu_cos + cell.nu_cos;
        next.nu_sin = prev.nu_sin + cell.nu_sin;
    }
}

std::size_t BathModel::cell_of(double t) const {
    const std::size_t last = nodes_.size() - 2;
    std::size_t k;
    if (t < fine_end_ || fine_cells_ == nodes_.size() - 1) {
        k = static_cast<std::size_t>(t / fine_step_);
    } else {
        k = fine_cells_ + static_cast<std::size_t>((t - fine_end_) / coarse_step_);
    }
    k = std::min(k, last);
    while (k > 0 && nodes_[k] > t) --k;
    while (k < last && nodes_[k + 1] < t) ++k;
    return k;
}

BathModel::Integrals BathModel::integrands(std::size_t k) const {
    const double s = nodes_[k];
    const double c = std::cos(omega2_ * s);
    const double sn = std::sin(omega2_ * s);
    const Node& n = kernel_[k];
    return {n.eta * c, n.eta * sn, n.nu * c, n.nu * sn};
}

BathCoefficients BathModel::assemble(double t, const Integrals& in) const {
    const double m = sd_.mass;
    BathCoefficients c;
    c.t = t;
    c.freq_shift = -(2.0 / m) * in.eta_cos;
    c.gamma2 = in.eta_sin / (m * omega2_);
    c.D2 = in.nu_cos;
    c.f2 = -in.nu_sin / (m * omega2_);
    return c;
}

BathCoefficients BathModel::at(double t) const {
    if (!(t >= 0.0)) throw Error(ErrorKind::kDomain, "bath coefficients need t >= 0");
    if (t == 0.0) return BathCoefficients{};
    const double end = table_end();
    if (t >= end) {
        if (!saturated_ && t > end * (1.0 + 1e-12)) {
            throw Error(ErrorKind::kDomain,
                        fmt::format("bath coefficients requested at t = {} beyond the table horizon {}", t, end));
        }
        return assemble(t, cumulative_.back());
    }

    const std::size_t k = cell_of(t);
    const double a = nodes_[k];
    const double h = nodes_[k + 1] - a;
    const double u = (t - a) / h;
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
    const double h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u);
    const double h11 = u * u * (u - 1);
    const Integrals& c0 = cumulative_[k];
    const Integrals& c1 = cumulative_[k + 1];
    const Integrals d0 = integrands(k);
    const Integrals d1 = integrands(k + 1);
    auto blend = [&](double v0, double dv0, double v1, double dv1) {
        return h00 * v0 + h10 * h * dv0 + h01 * v1 + h11 * h * dv1;
    };
    Integrals in;
    in.eta_cos = blend(c0.eta_cos, d0.eta_cos, c1.eta_cos, d1.eta_cos);
    in.eta_sin = blend(c0.eta_sin, d0.eta_sin, c1.eta_sin, d1.eta_sin);
    in.nu_cos = blend(c0.nu_cos, d0.nu_cos, c1.nu_cos, d1.nu_cos);
    in.nu_sin = blend(c0.nu_sin, d0.nu_sin, c1.nu_sin, d1.nu_sin);
    return assemble(t, in);
}

}  // namespace cvdyn::bath
