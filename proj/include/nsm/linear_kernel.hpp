#pragma once

#include <Eigen/Core>

#include <algorithm>

namespace nsm {

// Z = W A (+ b per column when given). Each output element is a fixed-order
// chain of fused updates over the inner dimension, so per-column results are
// identical no matter how the columns of A are batched. Vectorization runs
// across output rows, which keeps chains independent.
inline void fixed_order_product(const Eigen::Ref<const Eigen::MatrixXd>& w,
                                const Eigen::VectorXd* b,
                                const Eigen::Ref<const Eigen::MatrixXd>& a,
                                Eigen::MatrixXd& z) {
    const Eigen::Index rows = w.rows();
    const Eigen::Index inner = w.cols();
    const Eigen::Index n = a.cols();
    z.resize(rows, n);
    if (b != nullptr)
        z.colwise() = *b;
    else
        z.setZero();

    constexpr Eigen::Index kColBlock = 8;
    for (Eigen::Index j0 = 0; j0 < n; j0 += kColBlock) {
        const Eigen::Index jn = std::min(kColBlock, n - j0);
        for (Eigen::Index k = 0; k < inner; ++k) {
            const auto wk = w.col(k);
            for (Eigen::Index j = 0; j < jn; ++j)
                z.col(j0 + j).noalias() += a(k, j0 + j) * wk;
        }
    }
}

}  // namespace nsm
