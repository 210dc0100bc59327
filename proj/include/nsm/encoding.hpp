#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>

#include "nsm/geometry.hpp"
#include "nsm/rng.hpp"

namespace nsm {

enum class EncodingType : uint32_t { Fourier = 0, Positional = 1, None = 2 };

EncodingType encoding_type_from_string(const std::string& name);
std::string to_string(EncodingType type);

// Input feature map for the coordinate MLPs, with its exact Jacobian.
//
// Fourier: gamma(p) = [a .* cos(2 pi B p); a .* sin(2 pi B p)], rows of B
// drawn i.i.d. from an isotropic Gaussian with std sigma. Positional: the
// per-axis sin/cos ladder with `levels` octaves. None: identity.
class InputEncoding {
public:
    InputEncoding() = default;

    static InputEncoding fourier(int m, double sigma, uint64_t seed);
    static InputEncoding positional(int levels);
    static InputEncoding none();

    // Rebuilds from serialized frequency/amplitude content.
    static InputEncoding fourier_from(const Eigen::MatrixXd& frequencies,
                                      const Eigen::VectorXd& amplitudes, double sigma);

    EncodingType type() const { return type_; }
    int dim() const { return dim_; }
    int feature_count() const { return m_; }  // m for fourier, levels for positional
    double sigma() const { return sigma_; }
    const Eigen::MatrixXd& frequencies() const { return freq_; }
    const Eigen::VectorXd& amplitudes() const { return amp_; }

    Eigen::MatrixXd encode(const Points& p) const;
    // tangent[j] = d gamma / d p_j evaluated at every column of p.
    void encode_with_jacobian(const Points& p, Eigen::MatrixXd& features,
                              std::array<Eigen::MatrixXd, 3>& tangent) const;

private:
    EncodingType type_ = EncodingType::None;
    int m_ = 0;
    int dim_ = 3;
    double sigma_ = 0.0;
    Eigen::MatrixXd freq_;  // m x 3
    Eigen::VectorXd amp_;   // m
};

}  // namespace nsm
