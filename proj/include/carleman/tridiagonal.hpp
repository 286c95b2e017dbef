#pragma once

#include <complex>
#include <span>
#include <vector>

namespace carleman {

using cplx = std::complex<double>;

/// General complex tridiagonal matrix: lower[i] = A(i+1,i), upper[i] = A(i,i+1).
struct Tridiagonal {
    std::vector<cplx> lower;
    std::vector<cplx> diag;
    std::vector<cplx> upper;

    std::size_t size() const noexcept { return diag.size(); }
    /// y = A x
    void multiply(std::span<const cplx> x, std::span<cplx> y) const;
    std::vector<cplx> multiply(std::span<const cplx> x) const;
    bool is_symmetric() const;
};

/// LU factorisation with partial pivoting (LAPACK zgttrf / zgttrs).
class TridiagonalLU {
public:
    /// Throws SingularSystem when a pivot vanishes.
    explicit TridiagonalLU(const Tridiagonal& a);

    /// In-place solve of A x = b (or A^H x = b when `adjoint`).
    void solve_in_place(std::span<cplx> b, bool adjoint = false) const;
    std::size_t size() const noexcept { return d_.size(); }

private:
    std::vector<cplx> dl_, d_, du_, du2_;
    std::vector<int> ipiv_;
};

}  // namespace carleman
