#include "carleman/tridiagonal.hpp"

#include "carleman/errors.hpp"

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <string>

namespace carleman {

void Tridiagonal::multiply(std::span<const cplx> x, std::span<cplx> y) const {
    const std::size_t n = diag.size();
    if (x.size() != n || y.size() != n) throw InvalidInput("tridiagonal multiply: size mismatch");
    if (n == 0) return;
    if (n == 1) {
        y[0] = diag[0] * x[0];
        return;
    }
    y[0] = diag[0] * x[0] + upper[0] * x[1];
    for (std::size_t i = 1; i + 1 < n; ++i) y[i] = lower[i - 1] * x[i - 1] + diag[i] * x[i] + upper[i] * x[i + 1];
    y[n - 1] = lower[n - 2] * x[n - 2] + diag[n - 1] * x[n - 1];
}

std::vector<cplx> Tridiagonal::multiply(std::span<const cplx> x) const {
    std::vector<cplx> y(x.size());
    multiply(x, y);
    return y;
}

bool Tridiagonal::is_symmetric() const {
    for (std::size_t i = 0; i < lower.size(); ++i)
        if (lower[i] != upper[i]) return false;
    return true;
}

TridiagonalLU::TridiagonalLU(const Tridiagonal& a)
    : dl_(a.lower), d_(a.diag), du_(a.upper), du2_(a.diag.size() > 2 ? a.diag.size() - 2 : 0), ipiv_(a.diag.size()) {
    const auto n = static_cast<lapack_int>(d_.size());
    if (n == 0) throw InvalidInput("empty tridiagonal system");
    if (dl_.size() + 1 != d_.size() || du_.size() + 1 != d_.size())
        throw InvalidInput("tridiagonal bands have inconsistent lengths");
    du2_.resize(std::max<std::size_t>(d_.size(), 2));
    const lapack_int info = LAPACKE_zgttrf_work(n, dl_.data(), d_.data(), du_.data(), du2_.data(), ipiv_.data());
    if (info > 0)
        throw SingularSystem("tridiagonal factorisation hit a zero pivot at row " + std::to_string(info) +
                             " (use eps > 0)");
    if (info < 0) throw Error("zgttrf rejected argument " + std::to_string(-info));
}

void TridiagonalLU::solve_in_place(std::span<cplx> b, bool adjoint) const {
    const auto n = static_cast<lapack_int>(d_.size());
    if (static_cast<lapack_int>(b.size()) != n) throw InvalidInput("tridiagonal solve: size mismatch");
    const lapack_int info = LAPACKE_zgttrs_work(LAPACK_COL_MAJOR, adjoint ? 'C' : 'N', n, 1, dl_.data(), d_.data(),
                                                du_.data(), du2_.data(), ipiv_.data(), b.data(), n);
    if (info != 0) throw Error("zgttrs failed with info " + std::to_string(info));
}

}  // namespace carleman
