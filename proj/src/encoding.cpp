#include "nsm/encoding.hpp"

#include <cmath>

#include "nsm/error.hpp"
#include "nsm/fast_trig.hpp"
#include "nsm/linear_kernel.hpp"

namespace nsm {

EncodingType encoding_type_from_string(const std::string& name) {
    if (name == "fourier") return EncodingType::Fourier;
    if (name == "positional") return EncodingType::Positional;
    if (name == "none") return EncodingType::None;
    throw InputError("unknown encoding type '" + name + "'");
}

std::string to_string(EncodingType type) {
    switch (type) {
        case EncodingType::Fourier: return "fourier";
        case EncodingType::Positional: return "positional";
        case EncodingType::None: return "none";
    }
    return "?";
}

InputEncoding InputEncoding::fourier(int m, double sigma, uint64_t seed) {
    if (m < 1) throw InputError("fourier encoding: m must be >= 1");
    InputEncoding enc;
    enc.type_ = EncodingType::Fourier;
    enc.m_ = m;
    enc.dim_ = 2 * m;
    enc.sigma_ = sigma;
    enc.freq_.resize(m, 3);
    Rng rng = Rng::derive(seed, 0x464f5552u);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < 3; ++c)
            enc.freq_(r, c) = static_cast<double>(static_cast<float>(rng.normal(0.0, sigma)));
    enc.amp_ = Eigen::VectorXd::Ones(m);
    return enc;
}

InputEncoding InputEncoding::fourier_from(const Eigen::MatrixXd& frequencies,
                                          const Eigen::VectorXd& amplitudes, double sigma) {
    if (frequencies.cols() != 3 || frequencies.rows() != amplitudes.size())
        throw InputError("fourier encoding: frequency matrix must be m x 3 with m amplitudes");
    InputEncoding enc;
    enc.type_ = EncodingType::Fourier;
    enc.m_ = static_cast<int>(frequencies.rows());
    enc.dim_ = 2 * enc.m_;
    enc.sigma_ = sigma;
    enc.freq_ = frequencies;
    enc.amp_ = amplitudes;
    return enc;
}

InputEncoding InputEncoding::positional(int levels) {
    if (levels < 1) throw InputError("positional encoding: levels must be >= 1");
    InputEncoding enc;
    enc.type_ = EncodingType::Positional;
    enc.m_ = levels;
    enc.dim_ = 6 * levels;
    return enc;
}

InputEncoding InputEncoding::none() {
    InputEncoding enc;
    enc.type_ = EncodingType::None;
    enc.dim_ = 3;
    return enc;
}

Eigen::MatrixXd InputEncoding::encode(const Points& p) const {
    const Eigen::Index n = p.cols();
    switch (type_) {
        case EncodingType::None:
            return p;
        case EncodingType::Fourier: {
            Eigen::MatrixXd phase;
            fixed_order_product(freq_, nullptr, p, phase);  // m x n
            phase *= 2.0 * M_PI;
            Eigen::MatrixXd s, c;
            sincos_scaled(phase, 1.0, s, c);
            Eigen::MatrixXd out(dim_, n);
            out.topRows(m_) = (c.array().colwise() * amp_.array()).matrix();
            out.bottomRows(m_) = (s.array().colwise() * amp_.array()).matrix();
            return out;
        }
        case EncodingType::Positional: {
            Eigen::MatrixXd out(dim_, n);
            Eigen::MatrixXd s, c;
            for (int l = 0; l < m_; ++l) {
                const double f = M_PI * std::pow(2.0, l);
                sincos_scaled(p, f, s, c);
                out.middleRows(6 * l, 3) = s;
                out.middleRows(6 * l + 3, 3) = c;
            }
            return out;
        }
    }
    throw InputError("encode: unreachable");
}

void InputEncoding::encode_with_jacobian(const Points& p, Eigen::MatrixXd& features,
                                         std::array<Eigen::MatrixXd, 3>& tangent) const {
    const Eigen::Index n = p.cols();
    features = encode(p);
    switch (type_) {
        case EncodingType::None:
            for (int j = 0; j < 3; ++j) {
                tangent[j] = Eigen::MatrixXd::Zero(3, n);
                tangent[j].row(j).setOnes();
            }
            return;
        case EncodingType::Fourier: {
            // d cos(2 pi b.p)/dp_j = -2 pi b_j sin(.); d sin(.)/dp_j = 2 pi b_j cos(.)
            const auto cos_block = features.topRows(m_).array();    // a*cos
            const auto sin_block = features.bottomRows(m_).array(); // a*sin
            for (int j = 0; j < 3; ++j) {
                tangent[j].resize(dim_, n);
                const Eigen::ArrayXd scale = 2.0 * M_PI * freq_.col(j).array();
                tangent[j].topRows(m_) = (-(sin_block.colwise() * scale)).matrix();
                tangent[j].bottomRows(m_) = (cos_block.colwise() * scale).matrix();
            }
            return;
        }
        case EncodingType::Positional: {
            for (int j = 0; j < 3; ++j) tangent[j] = Eigen::MatrixXd::Zero(dim_, n);
            for (int l = 0; l < m_; ++l) {
                const double f = M_PI * std::pow(2.0, l);
                for (int j = 0; j < 3; ++j) {
                    tangent[j].row(6 * l + j) = f * features.row(6 * l + 3 + j);       // f*cos
                    tangent[j].row(6 * l + 3 + j) = -f * features.row(6 * l + j);      // -f*sin
                }
            }
            return;
        }
    }
    throw InputError("encode_with_jacobian: unreachable");
}

}  // namespace nsm
