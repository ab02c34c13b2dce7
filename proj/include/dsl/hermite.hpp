#pragma once

#include <cmath>
#include <vector>

namespace dsl {

/// Normalized harmonic-oscillator eigenfunctions psi_0..psi_nmax at x for
/// inverse length alpha = sqrt(m omega / hbar), via the stable three-term
/// recurrence. Also returns first derivatives.
struct HermiteFunctions {
    std::vector<double> value;
    std::vector<double> derivative;
};

inline HermiteFunctions hermite_functions(int n_max, double alpha, double x) {
    HermiteFunctions h;
    h.value.assign(static_cast<std::size_t>(n_max) + 2, 0.0);
    h.derivative.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    const double xi = alpha * x;
    h.value[0] = std::sqrt(alpha) * std::pow(M_PI, -0.25) * std::exp(-0.5 * xi * xi);
    if (n_max + 1 >= 1) h.value[1] = std::sqrt(2.0) * xi * h.value[0];
    for (int n = 1; n < n_max + 1; ++n) {
        const double nn = n;
        h.value[n + 1] = std::sqrt(2.0 / (nn + 1.0)) * xi * h.value[n] - std::sqrt(nn / (nn + 1.0)) * h.value[n - 1];
    }
    for (int n = 0; n <= n_max; ++n) {
        const double nn = n;
        const double lower = n > 0 ? std::sqrt(nn / 2.0) * h.value[n - 1] : 0.0;
        h.derivative[n] = alpha * (lower - std::sqrt((nn + 1.0) / 2.0) * h.value[n + 1]);
    }
    return h;
}

}  // namespace dsl
