#include <doctest.h>

#include "cvdyn/errors.hpp"
#include "cvdyn/oscillators.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace cvdyn;
using namespace cvdyn::oscillators;
using V = CovarianceVector10;

namespace {

BathSetup bath_off() {
    BathSetup b;
    b.mode = BathMode::kOff;
    return b;
}

BathSetup markov() {
    BathSetup b;
    b.mode = BathMode::kMarkov;
    return b;
}

// Quadrature drift and diffusion of the same model written as a Lyapunov
// equation dS/dt = A S + S A^T + D: q' = p/M, p' = -M w^2 q - 2 gamma p on
// the damped mode only.
Eigen::Matrix<double, 10, 1> lyapunov_rate(const OscillatorPair& p, const bath::BathCoefficients& c, const V& v) {
    const auto f = transformed_frequencies(p);
    const double m = p.mass;
    const double w2 = f.omega_2 * f.omega_2 + c.freq_shift;
    Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
    a(0, 1) = 1.0 / m;
    a(1, 0) = -m * f.omega_f * f.omega_f;
    a(2, 3) = 1.0 / m;
    a(3, 2) = -m * w2;
    a(3, 3) = -2.0 * c.gamma2;
    Eigen::Matrix4d d = Eigen::Matrix4d::Zero();
    d(2, 3) = d(3, 2) = -c.f2;
    d(3, 3) = 2.0 * c.D2;
    const Eigen::Matrix4d s = v.to_matrix().matrix();
    const Eigen::Matrix4d r = a * s + s * a.transpose() + d;
    const V packed = V::from_matrix(gaussian::CovarianceMatrix(r));
    return Eigen::Map<const Eigen::Matrix<double, 10, 1>>(packed.values().data());
}

double free_error(const Trajectory& tr) {
    const V& x0 = tr.states.front();
    double err = 0.0;
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        const auto c = closed_form_free(x0[V::k11], x0[V::k12], x0[V::k22], tr.freqs.omega_f, tr.pair.mass, tr.t[i]);
        err = std::max({err, std::abs(c.V11 - tr.states[i][V::k11]), std::abs(c.V12 - tr.states[i][V::k12]),
                        std::abs(c.V22 - tr.states[i][V::k22])});
    }
    return err;
}

}  // namespace

TEST_CASE("transformed frequencies") {
    auto f = transformed_frequencies({1.0, 1.0, 0.0});
    CHECK(f.omega_f == 1.0);
    CHECK(f.omega_2 == 1.0);
    f = transformed_frequencies({1.0, 1.0, 0.8});
    CHECK(f.omega_f == doctest::Approx(std::sqrt(0.2)).epsilon(1e-14));
    CHECK(f.omega_2 == doctest::Approx(std::sqrt(1.8)).epsilon(1e-14));
    CHECK(f.omega_f == doctest::Approx(0.44721).epsilon(1e-5));
    CHECK(f.omega_2 == doctest::Approx(1.34164).epsilon(1e-5));
    CHECK(transformed_frequencies({1.0, 1.0, 1.0 - 1e-12}).omega_f < 1e-5);
    f = transformed_frequencies({2.0, 1.5, 1.0});
    CHECK(f.omega_f <= 1.5);
    CHECK(f.omega_2 >= 1.5);
    try {
        transformed_frequencies({1.0, 1.0, 1.0});
        FAIL("expected instability");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kInstability);
    }
}

TEST_CASE("CovarianceVector10 round trip") {
    const V v({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    const auto m = v.to_matrix();
    CHECK(m(0, 1) == 2);
    CHECK(m(1, 2) == 6);
    CHECK(m(3, 2) == 9);
    CHECK(V::from_matrix(m).values() == v.values());
}

TEST_CASE("block drift structure") {
    const OscillatorPair p{1.0, 1.0, 0.0};
    const auto d = assemble_drift(p, {});
    CHECK(d.A1 == d.A3);
    CHECK(d.F.isZero());

    const bath::BathCoefficients c{1.0, -0.3, 0.1, 2.0, 0.05};
    const auto e = assemble_drift({1.3, 0.9, 0.4}, c);
    const auto full = e.full();
    CHECK(full.block<3, 7>(0, 3).isZero());
    CHECK(full.block<4, 3>(3, 0).isZero());
    CHECK(full.block<4, 3>(3, 7).isZero());
    CHECK(full.block<3, 4>(7, 3).isZero());
    for (int i = 0; i < 8; ++i) CHECK(e.F[i] == 0.0);
    CHECK(e.F[8] == -0.05);
    CHECK(e.F[9] == 4.0);
}

TEST_CASE("free block conserves V+ and drives V- by V12") {
    const OscillatorPair p{1.7, 1.2, 0.9};
    const auto f = transformed_frequencies(p);
    const double k = p.mass * f.omega_f * f.omega_f;
    const auto d = assemble_drift(p, {});
    const Eigen::RowVector3d plus(k, 0.0, 1.0 / p.mass);
    const Eigen::RowVector3d minus(k, 0.0, -1.0 / p.mass);
    CHECK((plus * d.A1).norm() < 1e-14);
    const Eigen::RowVector3d rate = minus * d.A1;
    CHECK(rate(0) == doctest::Approx(0.0));
    CHECK(rate(1) == doctest::Approx(4.0 * f.omega_f * f.omega_f).epsilon(1e-14));
    CHECK(rate(2) == doctest::Approx(0.0));
}

TEST_CASE("ten-element drift equals the quadrature Lyapunov equation") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const OscillatorPair p{1.0 + 0.5 * u(rng), 1.0 + 0.3 * u(rng), 0.4 * u(rng)};
        const bath::BathCoefficients c{0.0, 0.5 * u(rng), 0.2 + 0.1 * u(rng), 3.0 + u(rng), 0.3 * u(rng)};
        std::array<double, 10> raw;
        for (double& x : raw) x = u(rng);
        const V v(raw);
        const auto d = assemble_drift(p, c);
        const Eigen::Map<const Eigen::Matrix<double, 10, 1>> x(v.values().data());
        const Eigen::Matrix<double, 10, 1> rate = d.full() * x + d.F;
        CHECK((rate - lyapunov_rate(p, c, v)).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("initial squeezed states") {
    const OscillatorPair p{1.0, 1.0, 0.0};
    const V a = initial_state(p, 1.0, InitialState::kAnchoredV11);
    CHECK(a[V::k11] == doctest::Approx(std::exp(-2.0) / 2).epsilon(1e-14));
    CHECK(a[V::k11] == doctest::Approx(0.067668).epsilon(1e-5));
    CHECK(a[V::k22] == doctest::Approx(std::exp(2.0) / 2).epsilon(1e-14));
    CHECK(a[V::k33] == doctest::Approx(std::exp(2.0) / 2).epsilon(1e-14));
    CHECK(a[V::k44] == doctest::Approx(std::exp(-2.0) / 2).epsilon(1e-14));
    const V s = initial_state(p, 1.0);
    CHECK(s[V::k11] == doctest::Approx(std::exp(2.0) / 2).epsilon(1e-14));
    CHECK(s[V::k44] == doctest::Approx(std::exp(2.0) / 2).epsilon(1e-14));
    for (std::size_t i : {V::k12, V::k13, V::k14, V::k23, V::k24, V::k34}) {
        CHECK(std::abs(a[i]) < 1e-15);
        CHECK(std::abs(s[i]) < 1e-15);
    }
    const OscillatorPair q{2.0, 1.5, 0.5};
    const V w = initial_state(q, 0.7);
    CHECK(w[V::k11] * 3.0 == doctest::Approx(std::exp(1.4) / 2).epsilon(1e-14));
    CHECK(w[V::k22] / 3.0 == doctest::Approx(std::exp(-1.4) / 2).epsilon(1e-14));
    CHECK(bare_negativity(w).log_negativity == doctest::Approx(1.4).epsilon(1e-12));
}

TEST_CASE("closed-form free solution") {
    const auto z = closed_form_free(0.7, 0.1, 0.4, 1.3, 1.1, 0.0);
    CHECK(z.V11 == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(z.V12 == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(z.V22 == doctest::Approx(0.4).epsilon(1e-15));
    const auto per = closed_form_free(0.7, 0.1, 0.4, 1.3, 1.1, M_PI / 1.3);
    CHECK(std::abs(per.V11 - 0.7) < 1e-12);
    CHECK(std::abs(per.V12 - 0.1) < 1e-12);
    CHECK(std::abs(per.V22 - 0.4) < 1e-12);
    // V-(0) = V11 - V22 = 1 with M = Omega_F = 1.
    const auto q = closed_form_free(1.0, 0.0, 0.0, 1.0, 1.0, M_PI / 4);
    CHECK(std::abs(q.V11 - q.V22) < 1e-15);
    CHECK(q.V12 == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK_THROWS_AS(closed_form_free(1.0, 0.0, 0.0, 0.0, 1.0, 1.0), Error);
}

TEST_CASE("integrated free block follows the closed form") {
    const OscillatorPair p{1.0, 1.0, 0.3};
    const auto tr = integrate(p, bath_off(), initial_state(p, 1.2), 10.0, 1e-3);
    CHECK(tr.t.size() == 10001);
    CHECK(free_error(tr) < 1e-8);

    const OscillatorPair q{1.4, 0.8, 0.2};
    const auto tq = integrate(q, markov(), initial_state(q, 0.6, InitialState::kAnchoredV11), 30.0, 0.01);
    CHECK(free_error(tq) < 1e-8);
}

TEST_CASE("bath-off vacuum keeps V+ constant") {
    const OscillatorPair p{1.0, 1.0, 0.0};
    const auto tr = integrate(p, bath_off(), initial_state(p, 0.0), 20.0, 0.05);
    const double c0 = tr.constant_of_motion(0);
    for (std::size_t i = 0; i < tr.t.size(); ++i) CHECK(std::abs(tr.constant_of_motion(i) / c0 - 1.0) < 1e-10);
    for (const auto& s : entanglement_series(tr)) {
        CHECK_FALSE(s.entangled);
        CHECK(s.log_negativity < 1e-12);
    }
}

TEST_CASE("V+ constant and blocks independent with the bath on") {
    const OscillatorPair p{1.0, 1.0, 0.0};
    const auto tr = integrate(p, BathSetup{}, initial_state(p, 1.0), 100.0, 0.05);
    const double c0 = tr.constant_of_motion(0);
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        CHECK(std::abs(tr.constant_of_motion(i) / c0 - 1.0) < 1e-6);
        for (std::size_t k : {V::k13, V::k14, V::k23, V::k24}) CHECK(std::abs(tr.states[i][k]) <= 1e-10);
    }
}

TEST_CASE("free-mode oscillation frequency is 2 Omega_F") {
    for (double lambda : {0.0, 0.5, 0.8}) {
        const OscillatorPair p{1.0, 1.0, lambda};
        const double wf = transformed_frequencies(p).omega_f;
        const double span = 12.0 * M_PI / wf;  // 12 periods of 2 Omega_F
        const auto tr = integrate(p, BathSetup{}, initial_state(p, 1.0), span, 1e-3);
        std::vector<double> zeros;
        for (std::size_t i = 1; i < tr.t.size(); ++i) {
            const double a = tr.states[i - 1][V::k12];
            const double b = tr.states[i][V::k12];
            if ((a < 0.0) != (b < 0.0) && a != 0.0) zeros.push_back(tr.t[i - 1] + (tr.t[i] - tr.t[i - 1]) * a / (a - b));
        }
        REQUIRE(zeros.size() >= 21);
        const double half_period = (zeros.back() - zeros.front()) / static_cast<double>(zeros.size() - 1);
        const double freq = M_PI / half_period;
        CHECK(std::abs(freq / (2.0 * wf) - 1.0) < 0.01);
    }
}

TEST_CASE("Markov fixed point of the damped mode") {
    for (double lambda : {0.0, 0.8}) {
        const OscillatorPair p{1.0, 1.0, lambda};
        const double w2 = transformed_frequencies(p).omega_2;
        const double target = (2.0 * bath::mean_occupation({10.0}, w2) + 1.0) / 2.0;
        const auto tr = integrate(p, markov(), initial_state(p, 1.0), 100.0, 1.0);
        const V& v = tr.states.back();
        CHECK(std::abs(v[V::k33] * p.mass * w2 / target - 1.0) < 0.03);
        CHECK(std::abs(v[V::k44] / (p.mass * w2) / target - 1.0) < 0.03);
    }
}

TEST_CASE("entanglement series") {
    const OscillatorPair p{1.0, 1.0, 0.0};
    const auto tr = integrate(p, bath_off(), initial_state(p, 1.0), 1.0, 0.5);
    const auto s = entanglement_series(tr);
    CHECK(s.front().log_negativity == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.front().nu_tilde_minus == doctest::Approx(std::exp(-2.0) / 2).epsilon(1e-12));

    const auto death = integrate(p, BathSetup{}, initial_state(p, 1.0), 50.0, 0.01);
    const auto report = sudden_death_report(entanglement_series(death));
    REQUIRE(!report.empty());
    CHECK(report.front().death < 50.0);
    CHECK(report.front().death > 0.0);

    const auto alive = integrate(p, BathSetup{}, initial_state(p, 2.0), 50.0, 0.01);
    for (const auto& e : entanglement_series(alive)) {
        if (e.t >= 20.0) CHECK(e.log_negativity > 0.0);
    }
}

TEST_CASE("coupled pair shows death and revival") {
    const OscillatorPair p{1.0, 1.0, 0.8};
    const auto tr = integrate(p, BathSetup{}, initial_state(p, 2.0), 50.0, 0.01);
    const auto report = sudden_death_report(entanglement_series(tr));
    REQUIRE(!report.empty());
    CHECK(!report.front().open());
    CHECK(report.front().revival <= 50.0);

    const auto weak = integrate(p, BathSetup{}, initial_state(p, 1.0), 50.0, 0.01);
    const auto dead = sudden_death_report(entanglement_series(weak));
    REQUIRE(!dead.empty());
    CHECK(dead.back().open());
}

TEST_CASE("analytic threshold") {
    CHECK(std::abs(threshold_r(10.0, 1.0) - 1.498) < 1e-3);
    CHECK(threshold_r(0.0, 1.0) == 0.0);
    CHECK(threshold_r(1e-3, 1.0) == 0.0);
    CHECK(threshold_r(1.0, 1.0) == doctest::Approx(0.5 * std::log(2.0 / (std::exp(1.0) - 1.0) + 1.0)).epsilon(1e-14));
}

TEST_CASE("numeric threshold agrees with the analytic one") {
    const OscillatorPair p{1.0, 1.0, 0.0};
    const double r = numeric_threshold_r(p, BathSetup{});
    CHECK(std::abs(r - threshold_r(10.0, 1.0)) < 0.05);
    ThresholdSearch s;
    s.r_high = 0.5;
    CHECK_THROWS_AS(numeric_threshold_r(p, BathSetup{}, s), Error);
}

TEST_CASE("sudden death report") {
    auto series = [](std::vector<double> nus) {
        std::vector<EntanglementPoint> out;
        for (std::size_t i = 0; i < nus.size(); ++i) {
            const double nu = nus[i];
            out.push_back({static_cast<double>(i), nu, std::max(0.0, -std::log(2.0 * nu)), nu < 0.5 - 1e-12});
        }
        return out;
    };
    CHECK(sudden_death_report(series({0.2, 0.3, 0.4})).empty());
    const auto all_dead = sudden_death_report(series({0.6, 0.7, 0.5}));
    REQUIRE(all_dead.size() == 1);
    CHECK(all_dead[0].death == 0.0);
    CHECK(all_dead[0].open());
    // nu crosses 1/2 at t = 1.5 and back at t = 3.5
    const auto r = sudden_death_report(series({0.3, 0.4, 0.6, 0.7, 0.3, 0.2}));
    REQUIRE(r.size() == 1);
    CHECK(r[0].death == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(r[0].revival == doctest::Approx(3.5).epsilon(1e-14));
    CHECK(sudden_death_report({}).empty());
}

TEST_CASE("product criterion at minima of V11") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ur(0.5, 3.0);
    std::uniform_real_distribution<double> ul(0.0, 0.9);
    int agree = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const OscillatorPair p{1.0, 1.0, ul(rng)};
        const double wf = transformed_frequencies(p).omega_f;
        // V12(0) = 0 and V-(0) > 0, so V11 is minimal at 2 Omega_F t = (2k+1) pi.
        const double k = std::ceil((40.0 * 2.0 * wf / M_PI - 1.0) / 2.0);
        const double t = (2.0 * k + 1.0) * M_PI / (2.0 * wf);
        const auto tr = integrate(p, markov(), initial_state(p, ur(rng)), t, t);
        const V& v = tr.states.back();
        const bool product = v[V::k11] * v[V::k44] < 0.25;
        agree += product == bare_negativity(v).entangled;
    }
    CHECK(agree == 100);
}

TEST_CASE("trajectory CSV") {
    const OscillatorPair p{1.0, 1.0, 0.0};
    const auto tr = integrate(p, bath_off(), initial_state(p, 0.5), 0.2, 0.1);
    std::ostringstream out;
    write_trajectory_csv(out, tr, entanglement_series(tr));
    const std::string text = out.str();
    CHECK(text.rfind("t,V11,V12,V22,V13,V14,V23,V24,V33,V34,V44,nu_tilde_minus,log_negativity\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    std::ostringstream again;
    write_trajectory_csv(again, tr, entanglement_series(tr));
    CHECK(again.str() == text);
}

TEST_CASE("output grid and argument checks") {
    CHECK(output_grid(1.0, 0.25).size() == 5);
    const auto g = output_grid(1.0, 0.3);
    CHECK(g.size() == 5);
    CHECK(g.back() == 1.0);
    CHECK_THROWS_AS(output_grid(0.0, 0.1), Error);
    CHECK_THROWS_AS(output_grid(1.0, 0.0), Error);
    const OscillatorPair p{1.0, 1.0, 0.0};
    V bad = initial_state(p, 0.0);
    bad[V::k11] = 0.1;
    CHECK_THROWS_AS(integrate(p, bath_off(), bad, 1.0, 0.1), Error);
}
