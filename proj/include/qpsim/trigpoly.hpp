#pragma once

#include <array>
#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "qpsim/cocycle.hpp"

namespace qps {

/// 2x2 real matrix function on (2T)^d = [0, 4 pi)^d sampled on a uniform grid of 2^m points per
/// dimension. Fourier modes live on the half-integer lattice: value(theta) = sum_j c_j exp(i <j, theta> / 2).
class TrigPolyMatrix {
public:
    using cd = std::complex<double>;
    using Fn = std::function<Mat2(std::span<const double>)>;

    struct Coeffs {
        std::array<std::vector<cd>, 4> entry;  // row-major entries, FFT index order
    };

    TrigPolyMatrix() = default;
    TrigPolyMatrix(int dim, int grid_exp);  // zero function

    static TrigPolyMatrix constant(int dim, int grid_exp, const Mat2& m);
    static TrigPolyMatrix from_function(int dim, int grid_exp, const Fn& f);
    static TrigPolyMatrix from_coefficients(int dim, int grid_exp, const Coeffs& c);

    int dim() const { return dim_; }
    int grid_exp() const { return grid_exp_; }
    int points_per_dim() const { return 1 << grid_exp_; }
    std::size_t size() const { return values_.size(); }

    std::vector<double> grid_point(std::size_t idx) const;
    /// Twice the Fourier mode of a coefficient slot, i.e. the integer vector j with mode j / 2.
    IVec doubled_mode(std::size_t idx) const;

    const Mat2& operator[](std::size_t idx) const { return values_[idx]; }
    Mat2& operator[](std::size_t idx) { return values_[idx]; }

    Coeffs coefficients() const;
    /// Trigonometric interpolation at an arbitrary point.
    Mat2 eval(std::span<const double> theta) const;
    /// Same as eval for many points, transforming once.
    std::vector<Mat2> eval_many(std::span<const std::vector<double>> thetas) const;
    /// theta -> value(theta + omega), exact on the represented modes.
    TrigPolyMatrix shifted(const std::vector<double>& omega) const;
    /// Keeps modes with |j / 2|_1 <= N.
    TrigPolyMatrix truncated(double N) const;

    Mat2 mean() const;
    double sup_norm() const;
    double max_det_defect() const;
    TrigPolyMatrix inverse() const;
    /// Pointwise division by sqrt(det); throws IllConditioned when det <= 0 somewhere.
    TrigPolyMatrix unimodular() const;

    TrigPolyMatrix& operator+=(const TrigPolyMatrix& o);
    TrigPolyMatrix& operator-=(const TrigPolyMatrix& o);
    friend TrigPolyMatrix operator+(TrigPolyMatrix a, const TrigPolyMatrix& b) { return a += b; }
    friend TrigPolyMatrix operator-(TrigPolyMatrix a, const TrigPolyMatrix& b) { return a -= b; }
    friend TrigPolyMatrix operator*(const TrigPolyMatrix& a, const TrigPolyMatrix& b);
    friend TrigPolyMatrix operator*(const Mat2& a, const TrigPolyMatrix& b);
    friend TrigPolyMatrix operator*(const TrigPolyMatrix& a, const Mat2& b);

private:
    void check_compatible(const TrigPolyMatrix& o) const;

    int dim_ = 1;
    int grid_exp_ = 8;
    std::vector<Mat2> values_;
};

}  // namespace qps
