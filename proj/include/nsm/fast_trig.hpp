#pragma once

#include <Eigen/Core>

#include <cmath>

namespace nsm {

// Vectorizable double-precision sin/cos.
//
// libstdc++/Eigen evaluate double trig element-by-element through libm, which
// dominates the cost of sine-MLP forward passes. This kernel does Cody-Waite
// quadrant reduction plus the fdlibm minimax polynomials in straight-line
// arithmetic, so the compiler can vectorize the loop. Accuracy is ~1 ulp for
// |x| up to ~2^20 (all phases this project produces are far below that);
// larger magnitudes fall back to libm.
namespace fast_trig {

inline constexpr double kTwoOverPi = 6.36619772367581382433e-01;
inline constexpr double kPio2H = 1.57079632673412561417e+00;  // high 33 bits of pi/2
inline constexpr double kPio2M = 6.07710050630396597660e-11;  // next 33 bits
inline constexpr double kPio2L = 2.02226624879595063154e-21;  // tail

inline constexpr double kS1 = -1.66666666666666324348e-01;
inline constexpr double kS2 = 8.33333333332248946124e-03;
inline constexpr double kS3 = -1.98412698298579493134e-04;
inline constexpr double kS4 = 2.75573137070700676789e-06;
inline constexpr double kS5 = -2.50507602534068634195e-08;
inline constexpr double kS6 = 1.58969099521155010221e-10;

inline constexpr double kC1 = 4.16666666666666019037e-02;
inline constexpr double kC2 = -1.38888888888741095749e-03;
inline constexpr double kC3 = 2.48015872894767294178e-05;
inline constexpr double kC4 = -2.75573143513906633035e-07;
inline constexpr double kC5 = 2.08757232129817482790e-09;
inline constexpr double kC6 = -1.13596475577881948265e-11;

inline constexpr double kMaxFastArg = 1048576.0;  // 2^20

// Branchless kernel; quadrant dispatch is arithmetic so the loop vectorizes.
inline void sincos_kernel(const double* x, double* s, double* c, Eigen::Index n,
                          double scale) {
    for (Eigen::Index i = 0; i < n; ++i) {
        const double xi = scale * x[i];
        const double k = std::nearbyint(xi * kTwoOverPi);
        const double r = ((xi - k * kPio2H) - k * kPio2M) - k * kPio2L;
        const double r2 = r * r;

        const double sp =
            r + r * r2 *
                    (kS1 + r2 * (kS2 + r2 * (kS3 + r2 * (kS4 + r2 * (kS5 + r2 * kS6)))));
        const double cp =
            1.0 - 0.5 * r2 +
            r2 * r2 * (kC1 + r2 * (kC2 + r2 * (kC3 + r2 * (kC4 + r2 * (kC5 + r2 * kC6)))));

        const double q = k - 4.0 * std::floor(k * 0.25);  // quadrant in {0,1,2,3}
        const double b0 = q - 2.0 * std::floor(q * 0.5);  // odd quadrant -> swap
        const double b1 = std::floor(q * 0.5);            // quadrant >= 2 -> negate sin
        const double sign_s = 1.0 - 2.0 * b1;
        const double sign_c = 1.0 - 2.0 * (b0 + b1 - 2.0 * b0 * b1);
        s[i] = sign_s * ((1.0 - b0) * sp + b0 * cp);
        c[i] = sign_c * ((1.0 - b0) * cp + b0 * sp);
    }
}

}  // namespace fast_trig

// s = sin(scale * z), c = cos(scale * z), elementwise.
inline void sincos_scaled(const Eigen::MatrixXd& z, double scale, Eigen::MatrixXd& s,
                          Eigen::MatrixXd& c) {
    s.resize(z.rows(), z.cols());
    c.resize(z.rows(), z.cols());
    const Eigen::Index n = z.size();
    const double limit = fast_trig::kMaxFastArg / std::max(1.0, std::abs(scale));
    if (n == 0) return;
    if (z.cwiseAbs().maxCoeff() < limit) {
        fast_trig::sincos_kernel(z.data(), s.data(), c.data(), n, scale);
    } else {
        for (Eigen::Index i = 0; i < n; ++i) {
            s.data()[i] = std::sin(scale * z.data()[i]);
            c.data()[i] = std::cos(scale * z.data()[i]);
        }
    }
}

inline void sin_scaled(const Eigen::MatrixXd& z, double scale, Eigen::MatrixXd& s) {
    thread_local Eigen::MatrixXd cos_scratch;
    sincos_scaled(z, scale, s, cos_scratch);
}

}  // namespace nsm
