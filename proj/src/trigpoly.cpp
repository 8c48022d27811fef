#include "qpsim/trigpoly.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/FFT>

#include "qpsim/error.hpp"

namespace qps {

namespace {

using cd = std::complex<double>;

// In-place multidimensional DFT on a row-major G^d array.
void fft_nd(std::vector<cd>& data, int dim, int G, bool inverse) {
    Eigen::FFT<double> fft;
    std::vector<cd> line(static_cast<std::size_t>(G)), out(static_cast<std::size_t>(G));
    const std::size_t total = data.size();
    std::size_t stride = 1;
    for (int axis = dim - 1; axis >= 0; --axis) {
        const std::size_t block = stride * static_cast<std::size_t>(G);
        for (std::size_t base = 0; base < total; base += block) {
            for (std::size_t off = 0; off < stride; ++off) {
                for (int i = 0; i < G; ++i) line[static_cast<std::size_t>(i)] = data[base + off + i * stride];
                if (inverse)
                    fft.inv(out, line);
                else
                    fft.fwd(out, line);
                for (int i = 0; i < G; ++i) data[base + off + i * stride] = out[static_cast<std::size_t>(i)];
            }
        }
        stride = block;
    }
}

int signed_index(int i, int G) { return i < G / 2 ? i : i - G; }

}  // namespace

TrigPolyMatrix::TrigPolyMatrix(int dim, int grid_exp) : dim_(dim), grid_exp_(grid_exp) {
    if (dim < 1 || dim > 2) throw Error(ErrorCode::InvalidArgument, "trigonometric matrices support d = 1 or 2", "dim");
    if (grid_exp < 3 || grid_exp > 12) throw Error(ErrorCode::InvalidArgument, "grid exponent must lie in [3, 12]", "grid_exp");
    std::size_t n = 1;
    for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(1) << grid_exp;
    values_.assign(n, Mat2::Zero());
}

TrigPolyMatrix TrigPolyMatrix::constant(int dim, int grid_exp, const Mat2& m) {
    TrigPolyMatrix t(dim, grid_exp);
    for (auto& v : t.values_) v = m;
    return t;
}

TrigPolyMatrix TrigPolyMatrix::from_function(int dim, int grid_exp, const Fn& f) {
    TrigPolyMatrix t(dim, grid_exp);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto th = t.grid_point(i);
        t.values_[i] = f(th);
    }
    return t;
}

std::vector<double> TrigPolyMatrix::grid_point(std::size_t idx) const {
    const int G = points_per_dim();
    std::vector<double> th(static_cast<std::size_t>(dim_));
    for (int c = dim_ - 1; c >= 0; --c) {
        th[static_cast<std::size_t>(c)] = 2.0 * kTwoPi * static_cast<double>(idx % G) / G;
        idx /= static_cast<std::size_t>(G);
    }
    return th;
}

IVec TrigPolyMatrix::doubled_mode(std::size_t idx) const {
    const int G = points_per_dim();
    IVec j(static_cast<std::size_t>(dim_));
    for (int c = dim_ - 1; c >= 0; --c) {
        j[static_cast<std::size_t>(c)] = signed_index(static_cast<int>(idx % G), G);
        idx /= static_cast<std::size_t>(G);
    }
    return j;
}

TrigPolyMatrix::Coeffs TrigPolyMatrix::coefficients() const {
    Coeffs c;
    const double scale = 1.0 / static_cast<double>(size());
    for (int e = 0; e < 4; ++e) {
        auto& buf = c.entry[static_cast<std::size_t>(e)];
        buf.resize(size());
        for (std::size_t i = 0; i < size(); ++i) buf[i] = values_[i](e / 2, e % 2);
        fft_nd(buf, dim_, points_per_dim(), false);
        for (auto& x : buf) x *= scale;
    }
    return c;
}

TrigPolyMatrix TrigPolyMatrix::from_coefficients(int dim, int grid_exp, const Coeffs& c) {
    TrigPolyMatrix t(dim, grid_exp);
    const double scale = static_cast<double>(t.size());
    for (int e = 0; e < 4; ++e) {
        std::vector<cd> buf = c.entry[static_cast<std::size_t>(e)];
        if (buf.size() != t.size()) throw Error(ErrorCode::DimensionMismatch, "coefficient table size mismatch", "coeffs");
        fft_nd(buf, dim, t.points_per_dim(), true);  // inverse carries 1 / size
        for (std::size_t i = 0; i < t.size(); ++i) t.values_[i](e / 2, e % 2) = buf[i].real() * scale;
    }
    return t;
}

Mat2 TrigPolyMatrix::eval(std::span<const double> theta) const {
    const std::vector<double> one(theta.begin(), theta.end());
    return eval_many(std::span<const std::vector<double>>(&one, 1)).front();
}

std::vector<Mat2> TrigPolyMatrix::eval_many(std::span<const std::vector<double>> thetas) const {
    const Coeffs c = coefficients();
    // Only slots that carry weight take part in the sums.
    double cmax = 0.0;
    for (const auto& e : c.entry)
        for (const auto& x : e) cmax = std::max(cmax, std::abs(x));
    std::vector<std::size_t> active;
    std::vector<IVec> modes;
    for (std::size_t i = 0; i < size(); ++i) {
        double m = 0.0;
        for (const auto& e : c.entry) m = std::max(m, std::abs(e[i]));
        if (m > 1e-17 * cmax) {
            active.push_back(i);
            modes.push_back(doubled_mode(i));
        }
    }
    std::vector<Mat2> out;
    out.reserve(thetas.size());
    for (const auto& theta : thetas) {
        if (static_cast<int>(theta.size()) != dim_)
            throw Error(ErrorCode::DimensionMismatch, "phase dimension mismatch", "theta");
        Mat2 v = Mat2::Zero();
        for (std::size_t a = 0; a < active.size(); ++a) {
            double arg = 0.0;
            for (int d = 0; d < dim_; ++d)
                arg += 0.5 * modes[a][static_cast<std::size_t>(d)] * theta[static_cast<std::size_t>(d)];
            const cd ph(std::cos(arg), std::sin(arg));
            for (int e = 0; e < 4; ++e) v(e / 2, e % 2) += (c.entry[static_cast<std::size_t>(e)][active[a]] * ph).real();
        }
        out.push_back(v);
    }
    return out;
}

TrigPolyMatrix TrigPolyMatrix::shifted(const std::vector<double>& omega) const {
    if (static_cast<int>(omega.size()) != dim_)
        throw Error(ErrorCode::DimensionMismatch, "frequency dimension mismatch", "omega");
    Coeffs c = coefficients();
    for (std::size_t i = 0; i < size(); ++i) {
        const IVec j = doubled_mode(i);
        double arg = 0.0;
        for (int d = 0; d < dim_; ++d) arg += 0.5 * j[static_cast<std::size_t>(d)] * omega[static_cast<std::size_t>(d)];
        const cd ph(std::cos(arg), std::sin(arg));
        for (auto& e : c.entry) e[i] *= ph;
    }
    return from_coefficients(dim_, grid_exp_, c);
}

TrigPolyMatrix TrigPolyMatrix::truncated(double N) const {
    Coeffs c = coefficients();
    for (std::size_t i = 0; i < size(); ++i)
        if (0.5 * norm1(doubled_mode(i)) > N)
            for (auto& e : c.entry) e[i] = 0.0;
    return from_coefficients(dim_, grid_exp_, c);
}

Mat2 TrigPolyMatrix::mean() const {
    Mat2 s = Mat2::Zero();
    for (const auto& v : values_) s += v;
    return s / static_cast<double>(size());
}

double TrigPolyMatrix::sup_norm() const {
    double s = 0.0;
    for (const auto& v : values_) s = std::max(s, norm2(v));
    return s;
}

double TrigPolyMatrix::max_det_defect() const {
    double s = 0.0;
    for (const auto& v : values_) s = std::max(s, std::abs(v.determinant() - 1.0));
    return s;
}

TrigPolyMatrix TrigPolyMatrix::inverse() const {
    TrigPolyMatrix t = *this;
    for (auto& v : t.values_) {
        const double det = v.determinant();
        if (det == 0.0) throw Error(ErrorCode::IllConditioned, "singular matrix on the grid", "Z");
        v = v.inverse().eval();
    }
    return t;
}

TrigPolyMatrix TrigPolyMatrix::unimodular() const {
    TrigPolyMatrix t = *this;
    for (auto& v : t.values_) {
        const double det = v.determinant();
        if (!(det > 0.0)) throw Error(ErrorCode::IllConditioned, "conjugation loses orientation on the grid", "Z");
        v /= std::sqrt(det);
    }
    return t;
}

void TrigPolyMatrix::check_compatible(const TrigPolyMatrix& o) const {
    if (o.dim_ != dim_ || o.grid_exp_ != grid_exp_)
        throw Error(ErrorCode::DimensionMismatch, "trigonometric matrices on different grids", "grid");
}

TrigPolyMatrix& TrigPolyMatrix::operator+=(const TrigPolyMatrix& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < size(); ++i) values_[i] += o.values_[i];
    return *this;
}

TrigPolyMatrix& TrigPolyMatrix::operator-=(const TrigPolyMatrix& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < size(); ++i) values_[i] -= o.values_[i];
    return *this;
}

TrigPolyMatrix operator*(const TrigPolyMatrix& a, const TrigPolyMatrix& b) {
    a.check_compatible(b);
    TrigPolyMatrix t = a;
    for (std::size_t i = 0; i < t.size(); ++i) t.values_[i] = a.values_[i] * b.values_[i];
    return t;
}

TrigPolyMatrix operator*(const Mat2& a, const TrigPolyMatrix& b) {
    TrigPolyMatrix t = b;
    for (auto& v : t.values_) v = (a * v).eval();
    return t;
}

TrigPolyMatrix operator*(const TrigPolyMatrix& a, const Mat2& b) {
    TrigPolyMatrix t = a;
    for (auto& v : t.values_) v = (v * b).eval();
    return t;
}

}  // namespace qps
