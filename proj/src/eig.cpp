#include "sepcount/eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sepcount {

namespace {
constexpr int kMaxSweeps = 100;
constexpr double kOffDiagTol = 1e-12;
}  // namespace

EigResult sym_eig(const Tensor& input) {
    if (input.rank() != 2 || input.dim(0) != input.dim(1)) {
        throw ShapeError("sym_eig: expects a square matrix, got " + shape_string(input.shape()));
    }
    input.require_finite("sym_eig input");
    const std::size_t n = input.dim(0);

    double norm = 0.0, asym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            norm += input.at(i, j) * input.at(i, j);
            const double d = input.at(i, j) - input.at(j, i);
            asym = std::max(asym, std::abs(d));
        }
    }
    norm = std::sqrt(norm);
    if (asym > 1e-9 * std::max(1.0, norm)) {
        throw NumericError("sym_eig: matrix asymmetric beyond tolerance");
    }

    // Work on the symmetrized copy.
    Tensor a({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            a.at(i, j) = 0.5 * (input.at(i, j) + input.at(j, i));
        }
    }
    Tensor v({n, n});
    for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) s += a.at(i, j) * a.at(i, j);
        }
        return std::sqrt(2.0 * s);
    };

    const double tol = kOffDiagTol * std::max(norm, 1e-300);
    bool converged = off_norm() <= tol;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) <= tol / static_cast<double>(n * n)) continue;
                const double app = a.at(p, p), aqq = a.at(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a.at(i, p), aiq = a.at(i, q);
                    a.at(i, p) = c * aip - s * aiq;
                    a.at(i, q) = s * aip + c * aiq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const double apj = a.at(p, j), aqj = a.at(q, j);
                    a.at(p, j) = c * apj - s * aqj;
                    a.at(q, j) = s * apj + c * aqj;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v.at(i, p), viq = v.at(i, q);
                    v.at(i, p) = c * vip - s * viq;
                    v.at(i, q) = s * vip + c * viq;
                }
            }
        }
        converged = off_norm() <= tol;
    }
    if (!converged) {
        throw NumericError("sym_eig: Jacobi iteration failed to converge within " +
                           std::to_string(kMaxSweeps) + " sweeps");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a.at(i, i) > a.at(j, j); });

    EigResult result;
    result.values.resize(n);
    result.vectors = Tensor({n, n});
    for (std::size_t k = 0; k < n; ++k) {
        result.values[k] = a.at(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) result.vectors.at(i, k) = v.at(i, order[k]);
    }
    return result;
}

}  // namespace sepcount
