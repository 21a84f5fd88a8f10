#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace magnetovar {

struct CgResult {
    int iterations = 0;
    double residual = 0.0;  // ||b - Ax|| / ||b||
    bool converged = false;
};

namespace detail {

inline double vdot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

// Preconditioned conjugate gradients for SPD (or SPD on an invariant
// subspace) operators. apply_a(x, y) writes y = A x; apply_m(r, z) writes
// z = M^{-1} r. x holds the initial guess and receives the solution.
template <class ApplyA, class ApplyM>
CgResult pcg(ApplyA&& apply_a, ApplyM&& apply_m, const std::vector<double>& b,
             std::vector<double>& x, double tol, int max_iter) {
    using detail::vdot;
    const std::size_t n = b.size();
    CgResult res;
    const double bnorm = std::sqrt(vdot(b, b));
    if (x.size() != n) x.assign(n, 0.0);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        res.converged = true;
        return res;
    }
    std::vector<double> r(n), z(n), p(n), ap(n);
    apply_a(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    res.residual = std::sqrt(vdot(r, r)) / bnorm;
    if (res.residual <= tol) {
        res.converged = true;
        return res;
    }
    apply_m(r, z);
    p = z;
    double rz = vdot(r, z);
    for (int it = 1; it <= max_iter; ++it) {
        apply_a(p, ap);
        const double pap = vdot(p, ap);
        if (!(pap > 0.0)) {
            res.iterations = it;
            break;
        }
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res.iterations = it;
        res.residual = std::sqrt(vdot(r, r)) / bnorm;
        if (res.residual <= tol) {
            res.converged = true;
            break;
        }
        apply_m(r, z);
        const double rz_new = vdot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    // report the true residual, not the recursively updated one
    apply_a(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    res.residual = std::sqrt(vdot(r, r)) / bnorm;
    res.converged = res.residual <= tol;
    return res;
}

// Symmetric positive definite band matrix, lower band stored row-wise:
// entry (i, j) with i - bw <= j <= i lives at data[i * (bw + 1) + (j - i + bw)].
class BandedSpd {
public:
    BandedSpd(std::size_t n, std::size_t bw) : n_(n), bw_(bw), a_(n * (bw + 1), 0.0) {}

    std::size_t size() const { return n_; }
    std::size_t bandwidth() const { return bw_; }

    double& at(std::size_t i, std::size_t j) {
        if (j > i || i - j > bw_) throw DomainError("band matrix entry out of band");
        return a_[i * (bw_ + 1) + (j + bw_ - i)];
    }

    // In-place Cholesky, A = L L^T.
    void factor() {
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j0 = i > bw_ ? i - bw_ : 0;
            for (std::size_t j = j0; j <= i; ++j) {
                double s = el(i, j);
                const std::size_t k0 = std::max(j0, j > bw_ ? j - bw_ : 0);
                for (std::size_t k = k0; k < j; ++k) s -= el(i, k) * el(j, k);
                if (j == i) {
                    if (!(s > 0.0)) throw Error("band matrix is not positive definite");
                    el(i, i) = std::sqrt(s);
                } else {
                    el(i, j) = s / el(j, j);
                }
            }
        }
        factored_ = true;
    }

    void solve(std::vector<double>& b) const {
        if (!factored_) throw Error("band matrix used before factorization");
        for (std::size_t i = 0; i < n_; ++i) {
            double s = b[i];
            const std::size_t k0 = i > bw_ ? i - bw_ : 0;
            for (std::size_t k = k0; k < i; ++k) s -= el(i, k) * b[k];
            b[i] = s / el(i, i);
        }
        for (std::size_t i = n_; i-- > 0;) {
            double s = b[i];
            const std::size_t k1 = std::min(n_ - 1, i + bw_);
            for (std::size_t k = i + 1; k <= k1; ++k) s -= el(k, i) * b[k];
            b[i] = s / el(i, i);
        }
    }

private:
    double& el(std::size_t i, std::size_t j) { return a_[i * (bw_ + 1) + (j + bw_ - i)]; }
    double el(std::size_t i, std::size_t j) const { return a_[i * (bw_ + 1) + (j + bw_ - i)]; }

    std::size_t n_, bw_;
    std::vector<double> a_;
    bool factored_ = false;
};

}  // namespace magnetovar
