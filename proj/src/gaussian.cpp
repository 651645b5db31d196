#include "cvdyn/gaussian.hpp"

#include "cvdyn/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace cvdyn {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kDomain: return "domain error";
        case ErrorKind::kDimension: return "dimension mismatch";
        case ErrorKind::kNumericalFailure: return "numerical failure";
        case ErrorKind::kInvalidState: return "invalid state";
        case ErrorKind::kSpecConflict: return "squeeze spec conflict";
        case ErrorKind::kInstability: return "instability";
        case ErrorKind::kUnstableRegime: return "unstable regime";
        case ErrorKind::kStiffness: return "stiffness";
        case ErrorKind::kConsistency: return "consistency error";
        case ErrorKind::kConfigParse: return "config parse error";
        case ErrorKind::kConfigValidation: return "config validation error";
    }
    return "unknown error";
}

namespace gaussian {

namespace {

void require_even_square(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0 || m.rows() % 2 != 0) {
        throw Error(ErrorKind::kDimension,
                    fmt::format("covariance matrix must be 2N x 2N, got {} x {}", m.rows(), m.cols()));
    }
}

void require_two_modes(const CovarianceMatrix& v) {
    if (v.dim() != 4) {
        throw Error(ErrorKind::kDimension,
                    fmt::format("expected a 2-mode (4x4) covariance matrix, got {}x{}", v.dim(), v.dim()));
    }
}

}  // namespace

CovarianceMatrix::CovarianceMatrix(const Matrix& entries) {
    require_even_square(entries);
    entries_ = 0.5 * (entries + entries.transpose());
}

CovarianceMatrix CovarianceMatrix::mode_block(std::size_t mode) const {
    return reduced({mode});
}

CovarianceMatrix CovarianceMatrix::reduced(const std::vector<std::size_t>& modes) const {
    const auto n = static_cast<Eigen::Index>(modes.size());
    Matrix out(2 * n, 2 * n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            const auto ma = static_cast<Eigen::Index>(modes[a]);
            const auto mb = static_cast<Eigen::Index>(modes[b]);
            if (2 * ma >= dim() || 2 * mb >= dim()) {
                throw Error(ErrorKind::kDimension, "reduced: mode index out of range");
            }
            out.block<2, 2>(2 * a, 2 * b) = entries_.block<2, 2>(2 * ma, 2 * mb);
        }
    }
    return CovarianceMatrix(out);
}

Matrix symplectic_form(std::size_t n_modes) {
    const auto n = static_cast<Eigen::Index>(n_modes);
    Matrix omega = Matrix::Zero(2 * n, 2 * n);
    for (Eigen::Index k = 0; k < n; ++k) {
        omega(2 * k, 2 * k + 1) = 1.0;
        omega(2 * k + 1, 2 * k) = -1.0;
    }
    return omega;
}

CovarianceMatrix vacuum_covariance(std::size_t n_modes) {
    return thermal_covariance(n_modes, 0.0);
}

CovarianceMatrix thermal_covariance(std::size_t n_modes, double nbar) {
    if (n_modes == 0) throw Error(ErrorKind::kDomain, "mode count must be >= 1");
    if (!(nbar >= 0.0)) throw Error(ErrorKind::kDomain, "mean occupation must be >= 0");
    const auto n = static_cast<Eigen::Index>(n_modes);
    return CovarianceMatrix(Matrix::Identity(2 * n, 2 * n) * (nbar + 0.5));
}

CovarianceMatrix two_mode_squeezed_covariance(double r) {
    if (!std::isfinite(r)) throw Error(ErrorKind::kDomain, "squeezing parameter must be finite");
    const double c = 0.5 * std::cosh(2.0 * r);
    const double s = 0.5 * std::sinh(2.0 * r);
    Matrix v(4, 4);
    v << c, 0, s, 0,
         0, c, 0, -s,
         s, 0, c, 0,
         0, -s, 0, c;
    return CovarianceMatrix(v);
}

Matrix plus_minus_matrix() {
    const double h = 1.0 / std::sqrt(2.0);
    Matrix o(4, 4);
    o << h, 0, -h, 0,
         0, h, 0, -h,
         h, 0, h, 0,
         0, h, 0, h;
    return o;
}

CovarianceMatrix plus_minus_transform(const CovarianceMatrix& v, Direction direction) {
    require_two_modes(v);
    const Matrix o = plus_minus_matrix();
    if (direction == Direction::kForward) return CovarianceMatrix(o * v.matrix() * o.transpose());
    return CovarianceMatrix(o.transpose() * v.matrix() * o);
}

std::vector<double> symplectic_eigenvalues(const CovarianceMatrix& v) {
    require_even_square(v.matrix());
    const Matrix m = symplectic_form(v.modes()) * v.matrix();
    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::kNumericalFailure, "symplectic eigenvalues: eigen-solve did not converge");
    }
    std::vector<double> mags;
    mags.reserve(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) mags.push_back(std::abs(solver.eigenvalues()(i)));
    std::sort(mags.begin(), mags.end());

    const double largest = mags.back();
    std::vector<double> out;
    out.reserve(mags.size() / 2);
    for (std::size_t i = 0; i < mags.size(); i += 2) {
        const double a = mags[i];
        const double b = mags[i + 1];
        if (std::abs(a - b) > 1e-8 * std::max(a, b) + 1e-13 * largest) {
            throw Error(ErrorKind::kNumericalFailure,
                        fmt::format("symplectic eigenvalues: unpaired spectrum ({} vs {})", a, b));
        }
        out.push_back(0.5 * (a + b));
    }
    return out;
}

void require_physical(const CovarianceMatrix& v, double tol) {
    Eigen::LLT<Matrix> llt(v.matrix());
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::kInvalidState, "covariance matrix is not positive definite");
    }
    const double nu_min = symplectic_eigenvalues(v).front();
    if (nu_min < 0.5 - tol) {
        throw Error(ErrorKind::kInvalidState,
                    fmt::format("smallest symplectic eigenvalue {} violates the uncertainty bound 1/2", nu_min));
    }
}

CovarianceMatrix partial_transpose(const CovarianceMatrix& v, std::size_t mode) {
    if (mode >= v.modes()) throw Error(ErrorKind::kDimension, "partial_transpose: mode out of range");
    Matrix m = v.matrix();
    const auto p = static_cast<Eigen::Index>(2 * mode + 1);
    m.row(p) *= -1.0;
    m.col(p) *= -1.0;
    return CovarianceMatrix(m);
}

Negativity ppt_negativity(const CovarianceMatrix& v) {
    require_two_modes(v);
    require_physical(v);
    const double nu = symplectic_eigenvalues(partial_transpose(v, 1)).front();
    return Negativity{nu, std::max(0.0, -std::log(2.0 * nu)), nu < 0.5 - 1e-12};
}

Matrix squeeze_symplectic(const SqueezeSpec& spec, std::size_t n_modes) {
    if (n_modes == 0) throw Error(ErrorKind::kDomain, "mode count must be >= 1");
    const auto n = static_cast<Eigen::Index>(n_modes);
    Matrix s = Matrix::Identity(2 * n, 2 * n);
    std::set<std::size_t> used;
    auto claim = [&](std::size_t mode) {
        if (mode >= n_modes) {
            throw Error(ErrorKind::kSpecConflict, fmt::format("squeeze: mode {} out of range", mode));
        }
        if (!used.insert(mode).second) {
            throw Error(ErrorKind::kSpecConflict, fmt::format("squeeze: mode {} assigned twice", mode));
        }
    };

    for (const auto& sq : spec.single_mode) {
        claim(sq.mode);
        const auto q = static_cast<Eigen::Index>(2 * sq.mode);
        s(q, q) = std::exp(-sq.xi);
        s(q + 1, q + 1) = std::exp(sq.xi);
    }
    for (const auto& sq : spec.two_mode) {
        if (sq.first == sq.second) {
            throw Error(ErrorKind::kSpecConflict, "squeeze: two-mode pair must be distinct");
        }
        claim(sq.first);
        claim(sq.second);
        const double c = std::cosh(sq.xi);
        const double sh = std::sinh(sq.xi);
        const auto i = static_cast<Eigen::Index>(2 * sq.first);
        const auto j = static_cast<Eigen::Index>(2 * sq.second);
        s(i, i) = c;
        s(i + 1, i + 1) = c;
        s(j, j) = c;
        s(j + 1, j + 1) = c;
        s(i, j) = -sh;
        s(j, i) = -sh;
        s(i + 1, j + 1) = sh;
        s(j + 1, i + 1) = sh;
    }
    return s;
}

CovarianceMatrix apply_symplectic(const Matrix& s, const CovarianceMatrix& v) {
    if (s.rows() != v.dim() || s.cols() != v.dim()) {
        throw Error(ErrorKind::kDimension, "apply_symplectic: size mismatch");
    }
    return CovarianceMatrix(s * v.matrix() * s.transpose());
}

Matrix phase_rotation(std::size_t n_modes, std::size_t mode, double angle) {
    if (mode >= n_modes) throw Error(ErrorKind::kDimension, "phase_rotation: mode out of range");
    const auto n = static_cast<Eigen::Index>(n_modes);
    Matrix r = Matrix::Identity(2 * n, 2 * n);
    const auto q = static_cast<Eigen::Index>(2 * mode);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    r(q, q) = c;
    r(q, q + 1) = -s;
    r(q + 1, q) = s;
    r(q + 1, q + 1) = c;
    return r;
}

double purity(const CovarianceMatrix& v) {
    return 1.0 / std::sqrt((2.0 * v.matrix()).determinant());
}

double overlap(const CovarianceMatrix& a, const CovarianceMatrix& b) {
    if (a.dim() != b.dim()) throw Error(ErrorKind::kDimension, "overlap: size mismatch");
    return 1.0 / std::sqrt((a.matrix() + b.matrix()).determinant());
}

double max_abs_difference(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(ErrorKind::kDimension, "max_abs_difference: size mismatch");
    }
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace gaussian
}  // namespace cvdyn
