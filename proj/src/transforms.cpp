#include "stsqm/transforms.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace stsqm {

namespace {

// FFTW plans are cached per (n, fft_sign).  Plan creation is not thread-safe,
// execution via fftw_execute_dft is.  FFTW_ESTIMATE keeps planning
// deterministic; FFTW_UNALIGNED lets the plan run on any buffer.
class FftBackend {
  public:
    static FftBackend& instance() {
        static FftBackend b;
        return b;
    }

    // kernel exp(fft_sign * 2*pi*i*j*m/n), unnormalized; fft_sign in {-1,+1}
    void dft(int n, int fft_sign, const cplx* in, cplx* out) {
        fftw_plan plan = nullptr;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto key = std::make_pair(n, fft_sign);
            auto it = plans_.find(key);
            if (it == plans_.end()) {
                std::vector<cplx> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
                plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(a.data()),
                                        reinterpret_cast<fftw_complex*>(b.data()),
                                        fft_sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
                plans_.emplace(key, plan);
            } else {
                plan = it->second;
            }
        }
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }

  private:
    FftBackend() = default;
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

void check_length(std::size_t got, int n, const char* who) {
    if (got != static_cast<std::size_t>(n))
        throw std::domain_error(std::string(who) + ": sample count " + std::to_string(got) +
                                " does not match grid size " + std::to_string(n));
}

} // namespace

bool conjugate_compatible(const UniformGrid1D& grid, const UniformGrid1D& conj, double hbar,
                          double rel) {
    if (grid.n != conj.n) return false;
    const double product = grid.spacing * conj.spacing * grid.n;
    const double target = 2.0 * std::numbers::pi * hbar;
    return std::abs(product - target) <= rel * target;
}

std::vector<cplx> forward_transform(std::span<const cplx> samples, const UniformGrid1D& grid,
                                    int sign, double hbar) {
    return forward_transform(samples, grid, conjugate_grid(grid, hbar), sign, hbar);
}

std::vector<cplx> forward_transform(std::span<const cplx> samples, const UniformGrid1D& grid,
                                    const UniformGrid1D& conj, int sign, double hbar) {
    if (sign != +1 && sign != -1) throw std::domain_error("forward_transform: sign must be +1 or -1");
    check_length(samples.size(), grid.n, "forward_transform");
    if (!conjugate_compatible(grid, conj, hbar))
        throw std::domain_error("forward_transform: conjugate grid is not transform-compatible");
    const int n = grid.n;
    const double klo = conj.lo, dk = conj.spacing;

    // F_j = (dx/sqrt(2*pi*hbar)) e^{-i s j dk lo/hbar} * DFT_s[ f_m e^{-i s klo x_m/hbar} ]_j
    std::vector<cplx> pre(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m)
        pre[static_cast<std::size_t>(m)] =
            samples[static_cast<std::size_t>(m)] * std::polar(1.0, -sign * klo * grid.point(m) / hbar);

    std::vector<cplx> out(static_cast<std::size_t>(n));
    FftBackend::instance().dft(n, -sign, pre.data(), out.data());

    const double scale = grid.spacing / std::sqrt(2.0 * std::numbers::pi * hbar);
    for (int j = 0; j < n; ++j)
        out[static_cast<std::size_t>(j)] *= scale * std::polar(1.0, -sign * j * dk * grid.lo / hbar);
    return out;
}

std::vector<cplx> inverse_transform(std::span<const cplx> conjugate_samples, const UniformGrid1D& grid,
                                    int sign, double hbar) {
    return inverse_transform(conjugate_samples, grid, conjugate_grid(grid, hbar), sign, hbar);
}

std::vector<cplx> inverse_transform(std::span<const cplx> conjugate_samples, const UniformGrid1D& grid,
                                    const UniformGrid1D& conj, int sign, double hbar) {
    if (sign != +1 && sign != -1) throw std::domain_error("inverse_transform: sign must be +1 or -1");
    check_length(conjugate_samples.size(), grid.n, "inverse_transform");
    if (!conjugate_compatible(grid, conj, hbar))
        throw std::domain_error("inverse_transform: conjugate grid is not transform-compatible");
    const int n = grid.n;
    const double klo = conj.lo, dk = conj.spacing;

    // f_m = (dk/sqrt(2*pi*hbar)) e^{+i s klo x_m/hbar} * DFT_{-s}[ F_j e^{+i s j dk lo/hbar} ]_m
    std::vector<cplx> pre(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        pre[static_cast<std::size_t>(j)] =
            conjugate_samples[static_cast<std::size_t>(j)] * std::polar(1.0, sign * j * dk * grid.lo / hbar);

    std::vector<cplx> out(static_cast<std::size_t>(n));
    FftBackend::instance().dft(n, sign, pre.data(), out.data());

    const double scale = dk / std::sqrt(2.0 * std::numbers::pi * hbar);
    for (int m = 0; m < n; ++m)
        out[static_cast<std::size_t>(m)] *= scale * std::polar(1.0, sign * klo * grid.point(m) / hbar);
    return out;
}

std::vector<cplx> apply_spectral_multiplier(std::span<const cplx> samples, const UniformGrid1D& grid,
                                            int sign, double hbar,
                                            const std::vector<cplx>& mode_multipliers) {
    return apply_spectral_multiplier(samples, grid, conjugate_grid(grid, hbar), sign, hbar,
                                     mode_multipliers);
}

std::vector<cplx> apply_spectral_multiplier(std::span<const cplx> samples, const UniformGrid1D& grid,
                                            const UniformGrid1D& conj, int sign, double hbar,
                                            const std::vector<cplx>& mode_multipliers) {
    check_length(mode_multipliers.size(), grid.n, "apply_spectral_multiplier");
    std::vector<cplx> modes = forward_transform(samples, grid, conj, sign, hbar);
    for (int j = 0; j < grid.n; ++j)
        modes[static_cast<std::size_t>(j)] *= mode_multipliers[static_cast<std::size_t>(j)];
    return inverse_transform(modes, grid, conj, sign, hbar);
}

std::vector<cplx> half_derivative_apply(std::span<const cplx> samples, const UniformGrid1D& grid,
                                        double hbar) {
    const UniformGrid1D conj = conjugate_grid(grid, hbar);
    std::vector<cplx> mult(static_cast<std::size_t>(grid.n));
    for (int j = 0; j < grid.n; ++j)
        mult[static_cast<std::size_t>(j)] = std::sqrt(cplx(conj.point(j), 0.0));
    return apply_spectral_multiplier(samples, grid, kEnergyPair, hbar, mult);
}

} // namespace stsqm
