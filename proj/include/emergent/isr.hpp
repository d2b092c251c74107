#pragma once

#include "numerics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <string>
#include <vector>

namespace emergent::isr {

inline constexpr double pole_guard = 1e-8;

class Partition {
public:
    Partition(std::vector<std::size_t> s_indices, std::size_t dim) : s_(std::move(s_indices)), dim_(dim) {
        if (s_.empty()) throw std::invalid_argument("Partition: S must be non-empty");
        for (std::size_t i = 0; i < s_.size(); ++i) {
            if (s_[i] >= dim_) throw std::invalid_argument("Partition: index out of range");
            if (i > 0 && s_[i] <= s_[i - 1]) throw std::invalid_argument("Partition: indices must be strictly increasing");
        }
        std::vector<bool> in_s(dim_, false);
        for (auto i : s_) in_s[i] = true;
        for (std::size_t i = 0; i < dim_; ++i)
            if (!in_s[i]) complement_.push_back(i);
    }

    const std::vector<std::size_t>& s() const { return s_; }
    const std::vector<std::size_t>& complement() const { return complement_; }
    std::size_t dim() const { return dim_; }

private:
    std::vector<std::size_t> s_;
    std::vector<std::size_t> complement_;
    std::size_t dim_;
};

inline ComplexMatrix submatrix(const ComplexMatrix& h, const std::vector<std::size_t>& rows,
                               const std::vector<std::size_t>& cols) {
    ComplexMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                h(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
    return out;
}

/// R_S(E) = H_SS - H_{S,Sbar} (H_{Sbar,Sbar} - E)^{-1} H_{Sbar,S}, evaluated per energy.
class ReducedOperator {
public:
    ReducedOperator(const ComplexMatrix& h, Partition part) : part_(std::move(part)) {
        const auto& s = part_.s();
        const auto& c = part_.complement();
        hss_ = submatrix(h, s, s);
        if (!c.empty()) {
            hsc_ = submatrix(h, s, c);
            hcs_ = submatrix(h, c, s);
            hcc_ = submatrix(h, c, c);
            poles_ = numerics::eigvals(hcc_);
        }
    }

    const Partition& partition() const { return part_; }
    std::size_t source_dim() const { return part_.dim(); }
    std::size_t reduced_dim() const { return part_.s().size(); }
    const ComplexVector& pole_set() const { return poles_; }

    double pole_distance(cplx e) const {
        double d = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < poles_.size(); ++i) d = std::min(d, std::abs(poles_(i) - e));
        return d;
    }

    ComplexMatrix operator()(cplx e) const { return evaluate(e); }

    ComplexMatrix evaluate(cplx e) const {
        if (hcc_.size() == 0) return hss_;
        if (pole_distance(e) <= pole_guard)
            throw PoleProximityError("isr: evaluation energy lies within pole_guard of spec(H_{Sbar,Sbar})");
        ComplexMatrix shifted = hcc_;
        shifted.diagonal().array() -= e;
        return hss_ - hsc_ * numerics::solve_linear(shifted, hcs_);
    }

private:
    Partition part_;
    ComplexMatrix hss_, hsc_, hcs_, hcc_;
    ComplexVector poles_;
};

inline ReducedOperator reduce(const ComplexMatrix& h, const Partition& s) {
    if (h.rows() != h.cols()) throw std::invalid_argument("reduce: H must be square");
    if (static_cast<std::size_t>(h.rows()) != s.dim()) throw std::invalid_argument("reduce: partition dimension mismatch");
    return ReducedOperator(h, s);
}

inline ReducedOperator reduce(const ComplexMatrix& h, std::vector<std::size_t> s_indices) {
    return reduce(h, Partition(std::move(s_indices), static_cast<std::size_t>(h.rows())));
}

/// Worst smallest singular value of R_S(lambda) - lambda over eigenvalues lambda of H
/// that keep a distance > 1e-6 from the poles, normalized by the spectral norm of H.
inline double spectrum_preservation_residual(const ComplexMatrix& h, const Partition& s) {
    auto op = reduce(h, s);
    ComplexVector ev = numerics::eigvals(h);
    const double scale = std::max(numerics::norm2(h), std::numeric_limits<double>::min());
    double worst = 0.0;
    const auto k = static_cast<Eigen::Index>(op.reduced_dim());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (op.pole_distance(ev(i)) <= 1e-6) continue;
        ComplexMatrix m = op.evaluate(ev(i)) - ev(i) * ComplexMatrix::Identity(k, k);
        worst = std::max(worst, numerics::sigma_min(m) / scale);
    }
    return worst;
}

/// Cospectrality of sites u and v: (H^k)_uu == (H^k)_vv for k < dim(H), each power
/// compared relative to ||H||^k.
inline bool is_latently_symmetric(const ComplexMatrix& h, std::size_t u, std::size_t v, double tol = 1e-10) {
    const auto n = static_cast<std::size_t>(h.rows());
    if (h.rows() != h.cols()) throw std::invalid_argument("is_latently_symmetric: H must be square");
    if (u >= n || v >= n) throw std::invalid_argument("is_latently_symmetric: site index out of range");
    if (u == v) throw std::invalid_argument("is_latently_symmetric: u and v must differ");
    const double nrm = numerics::norm2(h);
    if (nrm == 0.0) return true;
    const ComplexMatrix hn = h / nrm;
    ComplexMatrix p = ComplexMatrix::Identity(h.rows(), h.cols());
    const auto iu = static_cast<Eigen::Index>(u), iv = static_cast<Eigen::Index>(v);
    for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(p(iu, iu) - p(iv, iv)) > tol) return false;
        p = p * hn;
    }
    return true;
}

/// ||Q H - H^T Q|| / ||H||.
inline double check_q_symmetry(const ComplexMatrix& h, const ComplexMatrix& q) {
    if (q.rows() != q.cols() || q.rows() != h.rows() || h.rows() != h.cols())
        throw std::invalid_argument("check_q_symmetry: dimension mismatch");
    const double nrm = numerics::norm2(h);
    if (nrm == 0.0) return 0.0;
    return numerics::norm2(q * h - h.transpose() * q) / nrm;
}

/// ||R P - P R|| for the exchange of positions a and b of the reduced operator.
inline double swap_commutator(const ComplexMatrix& r, std::size_t a, std::size_t b) {
    ComplexMatrix p = ComplexMatrix::Identity(r.rows(), r.cols());
    const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
    p(ia, ia) = 0.0;
    p(ib, ib) = 0.0;
    p(ia, ib) = 1.0;
    p(ib, ia) = 1.0;
    return numerics::norm2(r * p - p * r);
}

/// Symmetric orthogonal Q with Q G = G Q and Q e_u = e_v for a real-symmetric G
/// whose sites u, v are cospectral. Built per eigenspace as the Householder
/// reflection exchanging the projections of e_u and e_v.
inline Eigen::MatrixXd latent_reflection(const Eigen::MatrixXd& g, std::size_t u, std::size_t v) {
    const auto n = g.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const Eigen::VectorXd& lam = es.eigenvalues();
    const Eigen::MatrixXd& vecs = es.eigenvectors();
    const double tol = 1e-8 * std::max(1.0, lam.cwiseAbs().maxCoeff());

    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index start = 0;
    while (start < n) {
        Eigen::Index stop = start + 1;
        while (stop < n && lam(stop) - lam(stop - 1) < tol) ++stop;
        const Eigen::Index k = stop - start;
        Eigen::MatrixXd basis = vecs.middleCols(start, k);
        Eigen::VectorXd x = basis.row(static_cast<Eigen::Index>(u)).transpose();
        Eigen::VectorXd y = basis.row(static_cast<Eigen::Index>(v)).transpose();
        Eigen::MatrixXd refl = Eigen::MatrixXd::Identity(k, k);
        Eigen::VectorXd d = x - y;
        if (d.norm() > 1e-10) {
            d.normalize();
            refl -= 2.0 * d * d.transpose();
        }
        q += basis * refl * basis.transpose();
        start = stop;
    }
    return q;
}

} // namespace emergent::isr
