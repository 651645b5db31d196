#include "cvdyn/quadrature.hpp"

#include "cvdyn/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include <cmath>
#include <queue>
#include <vector>

namespace cvdyn::quadrature {

namespace {

struct Segment {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

Segment evaluate(const std::function<double(double)>& f, double a, double b) {
    using Rule = boost::math::quadrature::gauss_kronrod<double, 21>;
    double err = 0.0;
    const double v = Rule::integrate(f, a, b, 0, 0.0, &err);
    return {a, b, v, err};
}

}  // namespace

Result integrate(const std::function<double(double)>& f, double a, double b, const Options& opts) {
    if (!(std::isfinite(a) && std::isfinite(b))) {
        throw Error(ErrorKind::kDomain, "quadrature: limits must be finite");
    }
    if (a == b) return {};

    std::priority_queue<Segment> heap;
    double value = 0.0;
    double error = 0.0;
    const std::size_t panels = std::max<std::size_t>(1, opts.initial_panels);
    const double width = (b - a) / static_cast<double>(panels);
    for (std::size_t k = 0; k < panels; ++k) {
        const double lo = a + width * static_cast<double>(k);
        const double hi = (k + 1 == panels) ? b : a + width * static_cast<double>(k + 1);
        Segment s = evaluate(f, lo, hi);
        value += s.value;
        error += s.error;
        heap.push(s);
    }

    auto target = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(value)); };
    while (error > target()) {
        if (heap.size() >= opts.max_intervals) {
            throw Error(ErrorKind::kNumericalFailure,
                        fmt::format("quadrature on [{}, {}] did not converge: error {:.3g} > target {:.3g} "
                                    "after {} intervals",
                                    a, b, error, target(), heap.size()));
        }
        const Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const Segment left = evaluate(f, worst.a, mid);
        const Segment right = evaluate(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the rounding picked up by the running updates.
    Result out;
    out.intervals = heap.size();
    while (!heap.empty()) {
        out.value += heap.top().value;
        out.error += heap.top().error;
        heap.pop();
    }
    return out;
}

double trapezoid(const std::function<double(double)>& f, double a, double b, std::size_t n) {
    if (n == 0) throw Error(ErrorKind::kDomain, "trapezoid: need at least one cell");
    const double h = (b - a) / static_cast<double>(n);
    double sum = 0.5 * (f(a) + f(b));
    for (std::size_t k = 1; k < n; ++k) sum += f(a + h * static_cast<double>(k));
    return sum * h;
}

}  // namespace cvdyn::quadrature
