#include "nsm/scene_field.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "nsm/error.hpp"

namespace nsm {

namespace {

constexpr char kMagic[8] = {'N', 'S', 'M', 'F', 'L', 'D', '0', '1'};
constexpr uint32_t kVersion = 1;
constexpr Eigen::Index kEvalChunk = 8192;
constexpr Eigen::Index kGradChunk = 1024;
constexpr double kGradNormFloor = 1e-12;

void softmax_columns(Eigen::MatrixXd& logits) {
    for (Eigen::Index i = 0; i < logits.cols(); ++i) {
        Eigen::VectorXd col = logits.col(i);
        col.array() -= col.maxCoeff();
        col = col.array().exp();
        logits.col(i) = col / col.sum();
    }
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw InputError(std::string("checkpoint: truncated ") + what);
    return v;
}

}  // namespace

void FieldConfig::validate() const {
    if (hidden_width < 1 || hidden_layers < 0)
        throw InputError("FieldConfig: bad hidden layout");
    if (num_classes < 1) throw InputError("FieldConfig: num_classes must be >= 1");
    if (encoding == EncodingType::Fourier && fourier_m < 1)
        throw InputError("FieldConfig: fourier_m must be >= 1");
    if (encoding == EncodingType::Positional && positional_levels < 1)
        throw InputError("FieldConfig: positional_levels must be >= 1");
    if (!(omega0 > 0.0)) throw InputError("FieldConfig: omega0 must be positive");
}

SceneField::SceneField(const FieldConfig& config) : config_(config) {
    config_.validate();
    switch (config_.encoding) {
        case EncodingType::Fourier:
            encoding_ = InputEncoding::fourier(config_.fourier_m, config_.sigma_enc, config_.seed);
            break;
        case EncodingType::Positional:
            encoding_ = InputEncoding::positional(config_.positional_levels);
            break;
        case EncodingType::None:
            encoding_ = InputEncoding::none();
            break;
    }

    std::vector<int> geo_widths;
    geo_widths.push_back(encoding_.dim());
    for (int i = 0; i < config_.hidden_layers; ++i) geo_widths.push_back(config_.hidden_width);
    geo_widths.push_back(1);
    std::vector<int> sem_widths = geo_widths;
    sem_widths.back() = config_.num_classes;

    geometry_ = Mlp(geo_widths, Activation::Sine, config_.omega0);
    semantic_ = Mlp(sem_widths, Activation::Sine, config_.omega0);

    const bool raw_coords = config_.encoding == EncodingType::None;
    Rng geo_rng = Rng::derive(config_.seed, 0x47454f4du);
    Rng sem_rng = Rng::derive(config_.seed, 0x53454d41u);
    geometry_.init_params(geo_rng, raw_coords);
    semantic_.init_params(sem_rng, raw_coords);
}

Eigen::VectorXd SceneField::eval(const Points& p) const {
    Eigen::VectorXd out(p.cols());
    for (Eigen::Index start = 0; start < p.cols(); start += kEvalChunk) {
        const Eigen::Index n = std::min(kEvalChunk, p.cols() - start);
        const Eigen::MatrixXd features = encoding_.encode(p.middleCols(start, n));
        out.segment(start, n) = geometry_.forward(features).row(0).transpose();
    }
    return out;
}

void SceneField::eval_with_grad(const Points& p, Eigen::VectorXd& value, Points& grad) const {
    value.resize(p.cols());
    grad.resize(3, p.cols());
    Mlp::Workspace ws;
    for (Eigen::Index start = 0; start < p.cols(); start += kGradChunk) {
        const Eigen::Index n = std::min(kGradChunk, p.cols() - start);
        Eigen::MatrixXd features;
        std::array<Eigen::MatrixXd, 3> tangent;
        encoding_.encode_with_jacobian(p.middleCols(start, n), features, tangent);
        geometry_.forward_tangent_ws(features, tangent, ws);
        value.segment(start, n) = ws.out.row(0).transpose();
        for (int j = 0; j < 3; ++j) grad.row(j).segment(start, n) = ws.out_tangent[j].row(0);
    }
}

Eigen::MatrixXd SceneField::eval_semantic(const Points& p) const {
    Eigen::MatrixXd out(config_.num_classes, p.cols());
    for (Eigen::Index start = 0; start < p.cols(); start += kEvalChunk) {
        const Eigen::Index n = std::min(kEvalChunk, p.cols() - start);
        const Eigen::MatrixXd features = encoding_.encode(p.middleCols(start, n));
        Eigen::MatrixXd logits = semantic_.forward(features);
        softmax_columns(logits);
        out.middleCols(start, n) = logits;
    }
    return out;
}

Eigen::VectorXd SceneField::get_params() const {
    Eigen::VectorXd out(param_count());
    out.head(geometry_.param_count()) = geometry_.params();
    out.tail(semantic_.param_count()) = semantic_.params();
    return out;
}

void SceneField::set_params(const Eigen::VectorXd& p) {
    if (p.size() != param_count()) throw InputError("SceneField::set_params: size mismatch");
    geometry_.set_params(p.head(geometry_.param_count()));
    semantic_.set_params(p.tail(semantic_.param_count()));
}

LossBreakdown SceneField::loss_gradients(const TrainBatch& batch, const LossWeights& weights,
                                         Eigen::VectorXd& grad) const {
    weights.validate();
    batch.validate(config_.num_classes);
    if (grad.size() != param_count())
        throw InputError("SceneField::loss_gradients: grad vector size mismatch");

    const Eigen::Index n_on = batch.on_count();
    const Eigen::Index n_off = batch.off_count();
    const double inv_tot = 1.0 / static_cast<double>(n_on + n_off);
    const double inv_on = 1.0 / static_cast<double>(n_on);
    const double inv_off = n_off > 0 ? 1.0 / static_cast<double>(n_off) : 0.0;

    auto g_geo = grad.head(geometry_.param_count());
    auto g_sem = grad.tail(semantic_.param_count());
    Eigen::VectorXd geo_buf = Eigen::VectorXd::Zero(geometry_.param_count());
    Eigen::VectorXd sem_buf = Eigen::VectorXd::Zero(semantic_.param_count());

    const bool want_geo =
        weights.w_eikonal > 0 || weights.w_surface > 0 || weights.w_normal > 0 ||
        weights.w_off > 0 || weights.w_off_direct > 0;
    const bool want_sem = weights.w_seg > 0;

    double eik_sum = 0, surf_sum = 0, normal_sum = 0, off_sum = 0, dir_sum = 0, seg_sum = 0;

    Mlp::Workspace geo_ws;
    Mlp::Workspace sem_ws;

    // On-surface chunks: value/normal/eikonal terms plus segmentation.
    for (Eigen::Index start = 0; start < n_on; start += kGradChunk) {
        const Eigen::Index n = std::min(kGradChunk, n_on - start);
        Eigen::MatrixXd features;
        std::array<Eigen::MatrixXd, 3> tangent;
        encoding_.encode_with_jacobian(batch.on_points.middleCols(start, n), features, tangent);

        if (want_geo) {
            geometry_.forward_tangent_ws(features, tangent, geo_ws);
            Eigen::MatrixXd coeff_f = Eigen::MatrixXd::Zero(1, n);
            std::array<Eigen::MatrixXd, 3> coeff_g;
            for (int j = 0; j < 3; ++j) coeff_g[j] = Eigen::MatrixXd::Zero(1, n);

            for (Eigen::Index i = 0; i < n; ++i) {
                const double s = geo_ws.out(0, i);
                const Vec3 g(geo_ws.out_tangent[0](0, i), geo_ws.out_tangent[1](0, i),
                             geo_ws.out_tangent[2](0, i));
                const double gn = g.norm();
                const Vec3 nrm = batch.on_normals.col(start + i);

                eik_sum += std::abs(gn - 1.0);
                surf_sum += std::abs(s);
                normal_sum += normal_alignment_term(g, nrm);

                if (weights.w_surface > 0 && s != 0.0)
                    coeff_f(0, i) += weights.w_surface * inv_on * (s > 0 ? 1.0 : -1.0);
                if (gn > kGradNormFloor) {
                    if (weights.w_eikonal > 0) {
                        const double sgn = gn > 1.0 ? 1.0 : (gn < 1.0 ? -1.0 : 0.0);
                        const Vec3 d = weights.w_eikonal * inv_tot * sgn * g / gn;
                        for (int j = 0; j < 3; ++j) coeff_g[j](0, i) += d[j];
                    }
                    if (weights.w_normal > 0) {
                        const Vec3 d = weights.w_normal * inv_on *
                                       (-nrm / gn + g.dot(nrm) / (gn * gn * gn) * g);
                        for (int j = 0; j < 3; ++j) coeff_g[j](0, i) += d[j];
                    }
                }
            }
            geometry_.backward_with_tangent(geo_ws, coeff_f, coeff_g, geo_buf);
        }

        if (want_sem) {
            semantic_.forward_ws(features, sem_ws);
            Eigen::MatrixXd probs = sem_ws.out;
            softmax_columns(probs);
            Eigen::MatrixXd out_bar = probs;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int y = batch.on_labels[start + i];
                seg_sum -= std::log(std::max(probs(y, i), 1e-300));
                out_bar(y, i) -= 1.0;
            }
            out_bar *= weights.w_seg * inv_on;
            semantic_.backward(sem_ws, out_bar, sem_buf);
        }
    }

    // Off-surface chunks: eikonal + psi penalty (+ optional direct target).
    for (Eigen::Index start = 0; want_geo && start < n_off; start += kGradChunk) {
        const Eigen::Index n = std::min(kGradChunk, n_off - start);
        Eigen::MatrixXd features;
        std::array<Eigen::MatrixXd, 3> tangent;
        encoding_.encode_with_jacobian(batch.off_points.middleCols(start, n), features, tangent);

        geometry_.forward_tangent_ws(features, tangent, geo_ws);
        Eigen::MatrixXd coeff_f = Eigen::MatrixXd::Zero(1, n);
        std::array<Eigen::MatrixXd, 3> coeff_g;
        for (int j = 0; j < 3; ++j) coeff_g[j] = Eigen::MatrixXd::Zero(1, n);

        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = geo_ws.out(0, i);
            const Vec3 g(geo_ws.out_tangent[0](0, i), geo_ws.out_tangent[1](0, i),
                         geo_ws.out_tangent[2](0, i));
            const double gn = g.norm();

            eik_sum += std::abs(gn - 1.0);
            const double psi = std::exp(-weights.alpha * std::abs(s));
            off_sum += psi;

            if (weights.w_eikonal > 0 && gn > kGradNormFloor) {
                const double sgn = gn > 1.0 ? 1.0 : (gn < 1.0 ? -1.0 : 0.0);
                const Vec3 d = weights.w_eikonal * inv_tot * sgn * g / gn;
                for (int j = 0; j < 3; ++j) coeff_g[j](0, i) += d[j];
            }
            if (weights.w_off > 0 && s != 0.0)
                coeff_f(0, i) += weights.w_off * inv_off * (-weights.alpha) * psi *
                                 (s > 0 ? 1.0 : -1.0);
            if (weights.w_off_direct > 0) {
                dir_sum += std::abs(s - weights.off_target);
                if (s != weights.off_target)
                    coeff_f(0, i) += weights.w_off_direct * inv_off *
                                     (s > weights.off_target ? 1.0 : -1.0);
            }
        }
        geometry_.backward_with_tangent(geo_ws, coeff_f, coeff_g, geo_buf);
    }

    g_geo += geo_buf;
    g_sem += sem_buf;

    LossBreakdown out;
    out.eikonal = weights.w_eikonal * eik_sum * inv_tot;
    out.surface = weights.w_surface * surf_sum * inv_on;
    out.normal = weights.w_normal * normal_sum * inv_on;
    out.off = weights.w_off * off_sum * inv_off;
    out.off_direct = weights.w_off_direct * dir_sum * inv_off;
    out.seg = weights.w_seg * seg_sum * inv_on;
    if (!out.finite())
        throw NumericError("loss_gradients: non-finite loss term (" + out.describe() + ")");
    return out;
}

void SceneField::save_checkpoint(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("save_checkpoint: cannot open " + path.string());

    os.write(kMagic, sizeof(kMagic));
    write_pod<uint32_t>(os, kVersion);
    write_pod<uint32_t>(os, static_cast<uint32_t>(config_.encoding));
    write_pod<uint32_t>(os, static_cast<uint32_t>(encoding_.feature_count()));
    write_pod<float>(os, static_cast<float>(config_.sigma_enc));
    write_pod<float>(os, static_cast<float>(config_.omega0));
    write_pod<uint32_t>(os, static_cast<uint32_t>(config_.num_classes));

    const auto& widths = geometry_.widths();
    write_pod<uint32_t>(os, static_cast<uint32_t>(widths.size()));
    for (int w : widths) write_pod<uint32_t>(os, static_cast<uint32_t>(w));

    Eigen::Index blob_count = geometry_.param_count() + semantic_.param_count();
    if (config_.encoding == EncodingType::Fourier)
        blob_count += encoding_.frequencies().size() + encoding_.amplitudes().size();
    write_pod<uint32_t>(os, static_cast<uint32_t>(blob_count));

    auto write_block = [&os](const double* data, Eigen::Index count) {
        for (Eigen::Index i = 0; i < count; ++i) write_pod<float>(os, static_cast<float>(data[i]));
    };
    if (config_.encoding == EncodingType::Fourier) {
        write_block(encoding_.frequencies().data(), encoding_.frequencies().size());
        write_block(encoding_.amplitudes().data(), encoding_.amplitudes().size());
    }
    write_block(geometry_.params().data(), geometry_.param_count());
    write_block(semantic_.params().data(), semantic_.param_count());
    if (!os) throw IoError("save_checkpoint: write failed for " + path.string());
}

SceneField SceneField::load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("load_checkpoint: cannot open " + path.string());

    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw InputError("load_checkpoint: bad magic in " + path.string());
    const auto version = read_pod<uint32_t>(is, "version");
    if (version != kVersion)
        throw InputError("load_checkpoint: unsupported version " + std::to_string(version));

    FieldConfig cfg;
    const auto enc_type = read_pod<uint32_t>(is, "encoding type");
    if (enc_type > 2) throw InputError("load_checkpoint: bad encoding type");
    cfg.encoding = static_cast<EncodingType>(enc_type);
    const auto m = read_pod<uint32_t>(is, "feature count");
    cfg.sigma_enc = read_pod<float>(is, "sigma");
    cfg.omega0 = read_pod<float>(is, "omega0");
    cfg.num_classes = static_cast<int>(read_pod<uint32_t>(is, "class count"));

    const auto n_widths = read_pod<uint32_t>(is, "width count");
    if (n_widths < 2 || n_widths > 64) throw InputError("load_checkpoint: bad width count");
    std::vector<int> widths(n_widths);
    for (auto& w : widths) {
        w = static_cast<int>(read_pod<uint32_t>(is, "width"));
        if (w < 1) throw InputError("load_checkpoint: bad width");
    }
    cfg.hidden_layers = static_cast<int>(n_widths) - 2;
    cfg.hidden_width = cfg.hidden_layers > 0 ? widths[1] : 1;
    cfg.fourier_m = cfg.encoding == EncodingType::Fourier ? static_cast<int>(m) : 128;
    cfg.positional_levels = cfg.encoding == EncodingType::Positional ? static_cast<int>(m) : 10;

    const auto blob_count = read_pod<uint32_t>(is, "blob size");
    std::vector<float> blob(blob_count);
    is.read(reinterpret_cast<char*>(blob.data()),
            static_cast<std::streamsize>(blob_count * sizeof(float)));
    if (!is) throw InputError("load_checkpoint: truncated parameter blob in " + path.string());

    SceneField field;
    field.config_ = cfg;

    size_t cursor = 0;
    auto take = [&blob, &cursor, &path](Eigen::Index count) {
        if (cursor + static_cast<size_t>(count) > blob.size())
            throw InputError("load_checkpoint: parameter blob too small in " + path.string());
        Eigen::VectorXd out(count);
        for (Eigen::Index i = 0; i < count; ++i) out[i] = blob[cursor + static_cast<size_t>(i)];
        cursor += static_cast<size_t>(count);
        return out;
    };

    switch (cfg.encoding) {
        case EncodingType::Fourier: {
            const Eigen::Index fm = m;
            Eigen::VectorXd freq_flat = take(fm * 3);
            Eigen::VectorXd amps = take(fm);
            Eigen::MatrixXd freq = Eigen::Map<Eigen::MatrixXd>(freq_flat.data(), fm, 3);
            field.encoding_ = InputEncoding::fourier_from(freq, amps, cfg.sigma_enc);
            break;
        }
        case EncodingType::Positional:
            field.encoding_ = InputEncoding::positional(static_cast<int>(m));
            break;
        case EncodingType::None:
            field.encoding_ = InputEncoding::none();
            break;
    }
    if (widths.front() != field.encoding_.dim())
        throw InputError("load_checkpoint: width/encoding mismatch");
    if (widths.back() != 1)
        throw InputError("load_checkpoint: geometry head must have one output");

    std::vector<int> sem_widths = widths;
    sem_widths.back() = cfg.num_classes;
    field.geometry_ = Mlp(widths, Activation::Sine, cfg.omega0);
    field.semantic_ = Mlp(sem_widths, Activation::Sine, cfg.omega0);
    field.geometry_.set_params(take(field.geometry_.param_count()));
    field.semantic_.set_params(take(field.semantic_.param_count()));
    if (cursor != blob.size())
        throw InputError("load_checkpoint: trailing parameter data in " + path.string());
    return field;
}

}  // namespace nsm
