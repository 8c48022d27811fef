#include "qpsim/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qpsim/error.hpp"
#include "qpsim/parallel.hpp"

namespace qps {

namespace {

void require_niter(long niter) {
    if (niter < 1000) throw Error(ErrorCode::InvalidArgument, "niter must be >= 1000", "niter");
}

// Continuous angle change of (x, y) under the shear (x, y) -> (x, y - a x), split in halves
// until each piece moves by less than pi/2.
double shear_increment(double x, double y, double a, int depth = 0) {
    if (x == 0.0) return 0.0;
    const double y2 = y - a * x;
    const double d = std::atan(y2 / x) - std::atan(y / x);
    if (std::abs(d) < 0.5 * kPi || depth > 30) return d;
    const double half = 0.5 * a;
    return shear_increment(x, y, half, depth + 1) + shear_increment(x, y - half * x, half, depth + 1);
}

}  // namespace

Mat2 transfer_matrix(double E, const PotentialSpec& pot, std::span<const double> theta) {
    Mat2 m;
    m << eval_potential(pot, theta) - E, -1.0, 1.0, 0.0;
    return m;
}

RotationResult rotation_number_hull(double E, std::span<const double> hull) {
    const long niter = static_cast<long>(hull.size());
    require_niter(niter);
    const long half = niter / 2;
    double x = 1.0, y = 0.0, lift = 0.0, lift_half = 0.0;
    bool reseeded = false;
    for (long j = 0; j < niter; ++j) {
        const double a = hull[static_cast<std::size_t>(j)] - E;
        lift += shear_increment(x, y, a) + 0.5 * kPi;
        const double y2 = y - a * x;
        // quarter turn (x, y2) -> (-y2, x)
        double nx = -y2, ny = x;
        const double r = std::hypot(nx, ny);
        if (!(r > 0.0) || !std::isfinite(r)) {
            nx = 1.0;
            ny = 0.0;
            reseeded = true;
        } else {
            nx /= r;
            ny /= r;
        }
        x = nx;
        y = ny;
        if (j + 1 == half) lift_half = lift;
    }
    const double rho = lift / static_cast<double>(niter);
    const double rho_half = lift_half / static_cast<double>(half);
    return {std::clamp(rho, 0.0, kPi), std::abs(rho - rho_half), reseeded};
}

RotationResult rotation_number(double E, const PotentialSpec& pot, const Frequency& freq, const Phase& theta,
                               long niter) {
    require_niter(niter);
    const auto hull = hull_sequence(pot, freq, theta, 0, niter - 1);
    return rotation_number_hull(E, hull);
}

LyapunovResult lyapunov_exponent_hull(double E, std::span<const double> hull) {
    const long niter = static_cast<long>(hull.size());
    require_niter(niter);
    const long half = niter / 2;
    // Generic start vector, renormalized every step.
    double x = 0.8, y = 0.6, logsum = 0.0, log_half = 0.0;
    for (long j = 0; j < niter; ++j) {
        const double a = hull[static_cast<std::size_t>(j)] - E;
        const double nx = a * x - y, ny = x;
        const double r = std::hypot(nx, ny);
        logsum += std::log(r);
        x = nx / r;
        y = ny / r;
        if (j + 1 == half) log_half = logsum;
    }
    const double raw = logsum / static_cast<double>(niter);
    const double raw_half = log_half / static_cast<double>(half);
    return {std::max(raw, 0.0), raw, std::abs(raw - raw_half)};
}

LyapunovResult lyapunov_exponent(double E, const PotentialSpec& pot, const Frequency& freq, const Phase& theta,
                                 long niter) {
    require_niter(niter);
    const auto hull = hull_sequence(pot, freq, theta, 0, niter - 1);
    return lyapunov_exponent_hull(E, hull);
}

LyapunovResult lyapunov_exponent_averaged(double E, const PotentialSpec& pot, const Frequency& freq, long niter,
                                          int nphases) {
    if (nphases < 1) throw Error(ErrorCode::InvalidArgument, "nphases must be >= 1", "nphases");
    LyapunovResult acc;
    for (const Phase& th : theta_samples(pot.dim, nphases)) {
        const auto r = lyapunov_exponent(E, pot, freq, th, niter);
        acc.raw += r.raw;
        acc.error += r.error;
    }
    acc.raw /= nphases;
    acc.error /= nphases;
    acc.value = std::max(acc.raw, 0.0);
    return acc;
}

double norm2(const Mat2& m) {
    // Largest singular value from the Frobenius norm and the determinant.
    const double f2 = m.squaredNorm();
    const double det = m.determinant();
    const double disc = std::max(0.0, f2 * f2 - 4.0 * det * det);
    return std::sqrt(0.5 * (f2 + std::sqrt(disc)));
}

double boundedness_sup(double E, const PotentialSpec& pot, const Frequency& freq, std::span<const Phase> thetas,
                       long nmax) {
    if (nmax < 1) throw Error(ErrorCode::InvalidArgument, "nmax must be >= 1", "nmax");
    if (thetas.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one phase", "thetas");
    double best = 0.0;
    for (const Phase& th : thetas) {
        const auto hull = hull_sequence(pot, freq, th, 0, nmax - 1);
        Mat2 prod = Mat2::Identity();
        for (long j = 0; j < nmax; ++j) {
            Mat2 a;
            a << hull[static_cast<std::size_t>(j)] - E, -1.0, 1.0, 0.0;
            prod = a * prod;
            const double nrm = norm2(prod);
            if (!std::isfinite(nrm)) return std::numeric_limits<double>::infinity();
            best = std::max(best, nrm);
        }
    }
    return best;
}

std::vector<CocycleRow> cocycle_scan(std::span<const double> energies, const PotentialSpec& pot,
                                     const Frequency& freq, const Phase& theta, const ScanOptions& opts) {
    require_niter(opts.niter);
    const auto hull = hull_sequence(pot, freq, theta, 0, opts.niter - 1);
    std::vector<CocycleRow> rows(energies.size());
    const Phase th[1] = {theta};
    parallel_for(energies.size(), opts.threads, [&](std::size_t i) {
        CocycleRow r;
        r.E = energies[i];
        const auto rr = rotation_number_hull(r.E, hull);
        r.rho = rr.rho;
        r.rho_err = rr.error;
        if (opts.lyapunov) {
            const auto ly = lyapunov_exponent_hull(r.E, hull);
            r.lyap = ly.value;
            r.lyap_err = ly.error;
        }
        if (opts.sup_nmax > 0) r.sup_norm = boundedness_sup(r.E, pot, freq, th, opts.sup_nmax);
        rows[i] = r;
    });
    return rows;
}

double monotonicity_excess(std::span<const CocycleRow> rows) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < rows.size(); ++i)
        worst = std::max(worst, (rows[i].rho - rows[i + 1].rho) - std::max(rows[i].rho_err, rows[i + 1].rho_err));
    return rows.size() < 2 ? 0.0 : worst;
}

double holder_half_constant(std::span<const CocycleRow> rows) {
    double c = 0.0;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const auto& a = rows[i];
        const auto& b = rows[i + 1];
        const bool inside = a.rho > 0.0 && a.rho < kPi && b.rho > 0.0 && b.rho < kPi;
        const double dE = std::abs(b.E - a.E);
        if (inside && dE > 0.0) c = std::max(c, std::abs(b.rho - a.rho) / std::sqrt(dE));
    }
    return c;
}

}  // namespace qps
