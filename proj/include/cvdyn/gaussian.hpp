// gaussian.hpp - Covariance-matrix algebra for Gaussian bosonic states
//
// Quadratures are ordered X = (q1, p1, q2, p2, ...) and natural units
// (hbar = 1) are used throughout, so the vacuum has variance 1/2.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

namespace cvdyn::gaussian {

using Matrix = Eigen::MatrixXd;

/// Symmetric 2N x 2N matrix of symmetrised quadrature second moments.
///
/// The constructor symmetrises its input as (V + V^T)/2, so the stored
/// entries satisfy V_ij == V_ji exactly.
class CovarianceMatrix {
public:
    CovarianceMatrix() = default;
    explicit CovarianceMatrix(const Matrix& entries);

    std::size_t modes() const { return static_cast<std::size_t>(entries_.rows() / 2); }
    Eigen::Index dim() const { return entries_.rows(); }
    const Matrix& matrix() const { return entries_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

    /// 2x2 block of a single mode.
    CovarianceMatrix mode_block(std::size_t mode) const;
    /// Reduced state of the listed modes, in the listed order.
    CovarianceMatrix reduced(const std::vector<std::size_t>& modes) const;

private:
    Matrix entries_;
};

/// Block-diagonal symplectic form with [[0, 1], [-1, 0]] per mode.
Matrix symplectic_form(std::size_t n_modes);

CovarianceMatrix vacuum_covariance(std::size_t n_modes);

/// Thermal state diag((2 nbar + 1)/2) on every mode.
CovarianceMatrix thermal_covariance(std::size_t n_modes, double nbar);

/// Two-mode squeezed vacuum in the bare basis with <q1 q2> = +sinh(2r)/2
/// and <p1 p2> = -sinh(2r)/2, so that the antisymmetric combination
/// (q1 - q2)/sqrt(2) is squeezed to e^{-2r}/2.
CovarianceMatrix two_mode_squeezed_covariance(double r);

enum class Direction { kForward, kInverse };

/// Orthogonal rotation to symmetric/antisymmetric coordinates:
/// q~1 = (q1 - q2)/sqrt(2), q~2 = (q1 + q2)/sqrt(2), same for p.
Matrix plus_minus_matrix();
CovarianceMatrix plus_minus_transform(const CovarianceMatrix& v, Direction direction);

/// Symplectic spectrum, ascending, one value per mode.
std::vector<double> symplectic_eigenvalues(const CovarianceMatrix& v);

/// Throws kInvalidState unless v is positive definite with every symplectic
/// eigenvalue >= 1/2 - tol.
void require_physical(const CovarianceMatrix& v, double tol = 1e-9);

/// Flip the sign of the momentum of `mode` (partial transposition).
CovarianceMatrix partial_transpose(const CovarianceMatrix& v, std::size_t mode);

struct Negativity {
    double nu_tilde_minus;
    double log_negativity;
    bool entangled;
};

/// PPT test between the two modes of a 2-mode state; the second mode is
/// transposed.
Negativity ppt_negativity(const CovarianceMatrix& v);

struct SingleModeSqueeze {
    std::size_t mode;
    double xi;
};

struct TwoModeSqueeze {
    std::size_t first;
    std::size_t second;
    double xi;
};

struct SqueezeSpec {
    std::vector<SingleModeSqueeze> single_mode;
    std::vector<TwoModeSqueeze> two_mode;
};

/// Symplectic matrix of the squeeze unitaries. A single-mode squeeze acts
/// as q -> e^{-xi} q, p -> e^{xi} p; a two-mode squeeze on (i, j) acts as
/// q_i -> q_i cosh xi - q_j sinh xi, p_i -> p_i cosh xi + p_j sinh xi
/// (and symmetrically for j). Each mode may appear in at most one entry.
Matrix squeeze_symplectic(const SqueezeSpec& spec, std::size_t n_modes);

/// S V S^T
CovarianceMatrix apply_symplectic(const Matrix& s, const CovarianceMatrix& v);

/// Phase-space rotation of a single mode by `angle` (a -> e^{i angle} a).
Matrix phase_rotation(std::size_t n_modes, std::size_t mode, double angle);

/// Purity 1/sqrt(det(2V)).
double purity(const CovarianceMatrix& v);

/// Overlap Tr(rho sigma) = 1/sqrt(det(V1 + V2)) for zero-mean states; equals
/// the fidelity when one of the two states is pure.
double overlap(const CovarianceMatrix& a, const CovarianceMatrix& b);

double max_abs_difference(const Matrix& a, const Matrix& b);

}  // namespace cvdyn::gaussian
