#pragma once

#include <fftw3.h>

#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "field_grid.hpp"

namespace magnetovar {

namespace detail {

// The FFTW planner is not reentrant.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    double* p = nullptr;
    explicit FftwBuffer(std::size_t n) : p(fftw_alloc_real(n)) {
        if (!p) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(p); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
};

struct FftwPlan {
    fftw_plan p = nullptr;
    FftwPlan() = default;
    explicit FftwPlan(fftw_plan q) : p(q) {}
    ~FftwPlan() {
        if (p) {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(p);
        }
    }
    FftwPlan(const FftwPlan&) = delete;
    FftwPlan& operator=(const FftwPlan&) = delete;
};

}  // namespace detail

// Exact inverse of D^T D (see detail::neg_laplacian) for one stagger pattern.
// Center axes diagonalize with DST-I, Node axes with DCT-II/III. With every
// axis Node the operator is singular; the constant mode is dropped, which
// yields the mean-free pseudo-inverse.
class SpectralSolver {
public:
    SpectralSolver(const GridSpec& g, const Stagger& s) : grid_(g), stagger_(s) {
        std::size_t total = 1;
        std::array<int, 3> n{};
        fftw_r2r_kind fwd[3], bwd[3];
        scale_ = 1.0;
        for (int d = 0; d < 3; ++d) {
            const IndexRange r = active_range(g, s[d], d);
            n[d] = r.hi - r.lo + 1;
            total *= static_cast<std::size_t>(n[d]);
            eig_[d].resize(n[d]);
            const double L = g.dim(d) - 1;  // M+1 for DST-I, M for DCT-II
            for (int k = 0; k < n[d]; ++k) {
                const double mode = s[d] == Pos::Center ? k + 1 : k;
                eig_[d][k] = (2.0 - 2.0 * std::cos(std::numbers::pi * mode / L)) / (g.h * g.h);
            }
            if (s[d] == Pos::Center) {
                fwd[d] = bwd[d] = FFTW_RODFT00;
                scale_ *= 2.0 * (n[d] + 1);
            } else {
                fwd[d] = FFTW_REDFT10;
                bwd[d] = FFTW_REDFT01;
                scale_ *= 2.0 * n[d];
            }
        }
        n_ = n;
        buf_ = std::make_unique<detail::FftwBuffer>(total);
        std::lock_guard lock(detail::fftw_planner_mutex());
        forward_ = std::make_unique<detail::FftwPlan>(
            fftw_plan_r2r_3d(n[0], n[1], n[2], buf_->p, buf_->p, fwd[0], fwd[1], fwd[2], FFTW_ESTIMATE));
        backward_ = std::make_unique<detail::FftwPlan>(
            fftw_plan_r2r_3d(n[0], n[1], n[2], buf_->p, buf_->p, bwd[0], bwd[1], bwd[2], FFTW_ESTIMATE));
        if (!forward_->p || !backward_->p) throw Error("FFTW planning failed");
    }

    const GridSpec& grid() const { return grid_; }
    const Stagger& stagger() const { return stagger_; }

    // out = (D^T D)^{-1} rhs on the active set; inactive entries of out are zeroed.
    void solve(const std::vector<double>& rhs, std::vector<double>& out) const {
        double* b = buf_->p;
        std::size_t q = 0;
        for_active(grid_, stagger_, [&](int, int, int, std::size_t idx) { b[q++] = rhs[idx]; });
        fftw_execute(forward_->p);
        q = 0;
        for (int i = 0; i < n_[0]; ++i)
            for (int j = 0; j < n_[1]; ++j) {
                const double lij = eig_[0][i] + eig_[1][j];
                for (int k = 0; k < n_[2]; ++k, ++q) {
                    const double lam = lij + eig_[2][k];
                    b[q] = lam > 0.0 ? b[q] / (lam * scale_) : 0.0;
                }
            }
        fftw_execute(backward_->p);
        if (out.size() != grid_.size()) out.assign(grid_.size(), 0.0);
        std::fill(out.begin(), out.end(), 0.0);
        q = 0;
        for_active(grid_, stagger_, [&](int, int, int, std::size_t idx) { out[idx] = b[q++]; });
    }

private:
    GridSpec grid_;
    Stagger stagger_;
    std::array<int, 3> n_{};
    std::array<std::vector<double>, 3> eig_;
    double scale_ = 1.0;
    std::unique_ptr<detail::FftwBuffer> buf_;
    std::unique_ptr<detail::FftwPlan> forward_, backward_;
};

}  // namespace magnetovar
