#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace emergent {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr cplx I_unit{0.0, 1.0};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericError {
public:
    using NumericError::NumericError;
};

class ConvergenceError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Raised when an energy-dependent quantity is evaluated too close to one of its poles.
class PoleProximityError : public NumericError {
public:
    using NumericError::NumericError;
};

namespace numerics {

struct Tolerances {
    static constexpr double eig = 1e-9;
    static constexpr double solve = 1e-11;
    static constexpr double root = 1e-8;
    static constexpr double pairing = 1e-6;
    static constexpr double defective = 1e-8;
};

struct EigenSystem {
    ComplexVector eigenvalues;
    ComplexMatrix right_vectors;
    ComplexMatrix left_vectors;
    std::vector<bool> near_defective;

    std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
    bool any_defective() const {
        return std::any_of(near_defective.begin(), near_defective.end(), [](bool b) { return b; });
    }
};

inline bool all_finite(const ComplexMatrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
    return true;
}

/// Largest singular value.
inline double norm2(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    if (m.rows() <= 16 && m.cols() <= 16) {
        Eigen::JacobiSVD<ComplexMatrix> svd(m);
        return svd.singularValues()(0);
    }
    Eigen::BDCSVD<ComplexMatrix> svd(m);
    return svd.singularValues()(0);
}

inline double sigma_min(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

inline bool complex_less(const cplx& a, const cplx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

inline std::vector<Eigen::Index> sorted_order(const ComplexVector& values) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return complex_less(values(a), values(b)); });
    return idx;
}

namespace detail {

inline void require_square(const ComplexMatrix& h, const char* what) {
    if (h.rows() != h.cols() || h.rows() < 1)
        throw std::invalid_argument(std::string(what) + ": matrix must be square and non-empty");
    if (!all_finite(h)) throw std::invalid_argument(std::string(what) + ": matrix has non-finite entries");
}

inline Eigen::ComplexEigenSolver<ComplexMatrix> solve_eigen(const ComplexMatrix& h, bool vectors) {
    Eigen::ComplexEigenSolver<ComplexMatrix> es(h, vectors);
    if (es.info() != Eigen::Success) throw ConvergenceError("eig: QR iteration did not converge");
    return es;
}

} // namespace detail

/// Eigenvalues only, sorted by real part then imaginary part.
inline ComplexVector eigvals(const ComplexMatrix& h) {
    detail::require_square(h, "eigvals");
    auto es = detail::solve_eigen(h, false);
    const ComplexVector& ev = es.eigenvalues();
    auto order = sorted_order(ev);
    ComplexVector out(ev.size());
    for (std::size_t i = 0; i < order.size(); ++i) out(static_cast<Eigen::Index>(i)) = ev(order[i]);
    return out;
}

/// Full non-symmetric eigendecomposition with biorthogonal left and right vectors.
/// Left vectors come from the decomposition of H^dagger and are matched to the
/// right eigenvalues by nearest eigenvalue. Quasi-degenerate clusters are
/// biorthogonalized as a block. Pairs with |l^dagger r| < 1e-8 (unit vectors)
/// are flagged near-defective and left unnormalized.
inline EigenSystem eig(const ComplexMatrix& h) {
    detail::require_square(h, "eig");
    const Eigen::Index n = h.rows();

    auto right = detail::solve_eigen(h, true);
    auto left = detail::solve_eigen(h.adjoint(), true);

    auto order = sorted_order(right.eigenvalues());
    EigenSystem sys;
    sys.eigenvalues.resize(n);
    sys.right_vectors.resize(n, n);
    sys.left_vectors.resize(n, n);
    sys.near_defective.assign(static_cast<std::size_t>(n), false);

    for (Eigen::Index i = 0; i < n; ++i) {
        auto src = order[static_cast<std::size_t>(i)];
        sys.eigenvalues(i) = right.eigenvalues()(src);
        sys.right_vectors.col(i) = right.eigenvectors().col(src).normalized();
    }

    ComplexVector mu = left.eigenvalues().conjugate();
    auto left_order = sorted_order(mu);
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (Eigen::Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index pick = -1;
        for (auto j : left_order) {
            if (used[static_cast<std::size_t>(j)]) continue;
            double d = std::abs(mu(j) - sys.eigenvalues(i));
            if (d < best) {
                best = d;
                pick = j;
            }
        }
        used[static_cast<std::size_t>(pick)] = true;
        sys.left_vectors.col(i) = left.eigenvectors().col(pick).normalized();
    }

    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    const double cluster_tol = 1e-8 * scale;

    std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), Eigen::Index{0});
    std::function<Eigen::Index(Eigen::Index)> root = [&](Eigen::Index x) {
        while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
        return x;
    };
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (sys.eigenvalues(j).real() - sys.eigenvalues(i).real() > cluster_tol) break;
            if (std::abs(sys.eigenvalues(j) - sys.eigenvalues(i)) < cluster_tol)
                parent[static_cast<std::size_t>(root(j))] = root(i);
        }

    std::vector<std::vector<Eigen::Index>> clusters(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) clusters[static_cast<std::size_t>(root(i))].push_back(i);

    for (const auto& members : clusters) {
        if (members.empty()) continue;
        const auto k = static_cast<Eigen::Index>(members.size());
        ComplexMatrix lc(n, k), rc(n, k);
        for (Eigen::Index c = 0; c < k; ++c) {
            lc.col(c) = sys.left_vectors.col(members[static_cast<std::size_t>(c)]);
            rc.col(c) = sys.right_vectors.col(members[static_cast<std::size_t>(c)]);
        }
        ComplexMatrix overlap = lc.adjoint() * rc;
        if (k == 1) {
            cplx o = overlap(0, 0);
            if (std::abs(o) < Tolerances::defective)
                sys.near_defective[static_cast<std::size_t>(members[0])] = true;
            else
                sys.left_vectors.col(members[0]) /= std::conj(o);
        } else if (sigma_min(overlap) < Tolerances::defective) {
            for (auto m : members) sys.near_defective[static_cast<std::size_t>(m)] = true;
        } else {
            // L <- L M^{-dagger} so that L^dagger R = I on the cluster.
            ComplexMatrix adjusted = lc * overlap.inverse().adjoint();
            for (Eigen::Index c = 0; c < k; ++c)
                sys.left_vectors.col(members[static_cast<std::size_t>(c)]) = adjusted.col(c);
        }
    }
    return sys;
}

/// Solve A X = B with LU, refusing numerically singular A.
inline ComplexMatrix solve_linear(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != a.cols() || a.rows() < 1) throw std::invalid_argument("solve_linear: A must be square");
    if (b.rows() != a.rows()) throw std::invalid_argument("solve_linear: row count of B must match A");
    Eigen::PartialPivLU<ComplexMatrix> lu(a);
    double rcond = lu.rcond();
    if (!(rcond >= 1e-14)) throw SingularMatrixError("solve_linear: matrix singular to working precision");
    ComplexMatrix x = lu.solve(b);
    x += lu.solve(b - a * x);
    return x;
}

/// Evaluate a polynomial given by ascending coefficients (Horner).
inline cplx poly_eval(const std::vector<cplx>& coeffs, cplx z) {
    cplx acc{0.0, 0.0};
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
    return acc;
}

/// Scale used for the root residual test: sum |c_i| |z|^i.
inline double poly_scale(const std::vector<cplx>& coeffs, cplx z) {
    double acc = 0.0, zn = 1.0, az = std::abs(z);
    for (const auto& c : coeffs) {
        acc += std::abs(c) * zn;
        zn *= az;
    }
    return acc;
}

inline std::vector<cplx> trim_polynomial(std::vector<cplx> coeffs) {
    double mx = 0.0;
    for (const auto& c : coeffs) mx = std::max(mx, std::abs(c));
    if (mx == 0.0) throw std::invalid_argument("poly_roots: zero polynomial");
    while (!coeffs.empty() && std::abs(coeffs.back()) < 1e-14 * mx) coeffs.pop_back();
    return coeffs;
}

/// All roots of the polynomial sum_i coeffs[i] z^i via the companion matrix,
/// followed by a few Newton steps. Sorted by real then imaginary part.
inline std::vector<cplx> poly_roots(const std::vector<cplx>& coeffs_in) {
    auto coeffs = trim_polynomial(coeffs_in);
    const auto degree = static_cast<Eigen::Index>(coeffs.size()) - 1;
    if (degree < 1) throw std::invalid_argument("poly_roots: polynomial of degree 0 has no roots");

    const cplx lead = coeffs.back();
    ComplexMatrix companion = ComplexMatrix::Zero(degree, degree);
    for (Eigen::Index i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < degree; ++i) companion(i, degree - 1) = -coeffs[static_cast<std::size_t>(i)] / lead;

    ComplexVector ev = eigvals(companion);

    std::vector<cplx> deriv;
    for (std::size_t i = 1; i < coeffs.size(); ++i) deriv.push_back(coeffs[i] * static_cast<double>(i));

    std::vector<cplx> roots;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        cplx z = ev(i);
        for (int step = 0; step < 3; ++step) {
            cplx p = poly_eval(coeffs, z);
            cplx dp = poly_eval(deriv, z);
            if (std::abs(dp) == 0.0) break;
            cplx trial = z - p / dp;
            if (std::abs(poly_eval(coeffs, trial)) < std::abs(p)) z = trial;
            else break;
        }
        roots.push_back(z);
    }
    std::sort(roots.begin(), roots.end(), complex_less);
    return roots;
}

/// Uniform (trapezoidal) quadrature of a periodic function on [-pi, pi):
/// returns (1/2pi) * integral of f over one period.
template <class F>
cplx contour_integral(F&& f, std::size_t n_k) {
    if (n_k < 16) throw std::invalid_argument("contour_integral: n_k must be at least 16");
    cplx acc{0.0, 0.0};
    const double step = 2.0 * std::numbers::pi / static_cast<double>(n_k);
    for (std::size_t j = 0; j < n_k; ++j) acc += f(-std::numbers::pi + step * static_cast<double>(j));
    return acc / static_cast<double>(n_k);
}

/// Determinant by cofactor expansion; exponential cost, used only as a small-matrix oracle.
inline cplx det_cofactor(const ComplexMatrix& m) {
    const Eigen::Index n = m.rows();
    if (n == 1) return m(0, 0);
    if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    cplx acc{0.0, 0.0};
    for (Eigen::Index j = 0; j < n; ++j) {
        ComplexMatrix minor(n - 1, n - 1);
        for (Eigen::Index r = 1; r < n; ++r)
            for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
                if (c == j) continue;
                minor(r - 1, cc++) = m(r, c);
            }
        acc += ((j % 2 == 0) ? 1.0 : -1.0) * m(0, j) * det_cofactor(minor);
    }
    return acc;
}

} // namespace numerics
} // namespace emergent
