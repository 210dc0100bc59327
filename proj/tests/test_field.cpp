#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nsm/losses.hpp"
#include "nsm/rng.hpp"
#include "nsm/scene_field.hpp"

using namespace nsm;

namespace {

FieldConfig tiny_config(uint64_t seed) {
    FieldConfig cfg;
    cfg.fourier_m = 2;
    cfg.sigma_enc = 1.5;
    cfg.hidden_width = 4;
    cfg.hidden_layers = 2;
    cfg.num_classes = 3;
    cfg.seed = seed;
    return cfg;
}

FieldConfig small_config(uint64_t seed) {
    FieldConfig cfg;
    cfg.fourier_m = 16;
    cfg.sigma_enc = 2.0;
    cfg.hidden_width = 32;
    cfg.hidden_layers = 3;
    cfg.num_classes = 3;
    cfg.seed = seed;
    return cfg;
}

Points random_points(Rng& rng, int n, double lo = -1.0, double hi = 1.0) {
    Points p(3, n);
    for (int i = 0; i < n; ++i)
        p.col(i) = Vec3(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi));
    return p;
}

TrainBatch random_batch(Rng& rng, int n_on, int n_off, int num_classes) {
    TrainBatch batch;
    batch.on_points = random_points(rng, n_on);
    batch.on_normals.resize(3, n_on);
    batch.on_labels.resize(n_on);
    for (int i = 0; i < n_on; ++i) {
        Vec3 v(rng.normal(), rng.normal(), rng.normal());
        batch.on_normals.col(i) = v.normalized();
        batch.on_labels[i] = static_cast<int>(rng.uniform_index(num_classes));
    }
    batch.off_points = random_points(rng, n_off);
    return batch;
}

}  // namespace

TEST_CASE("fourier encoding hand values") {
    Eigen::MatrixXd freq(1, 3);
    freq << 1.0, 0.0, 0.0;
    InputEncoding enc = InputEncoding::fourier_from(freq, Eigen::VectorXd::Ones(1), 1.0);

    Points origin = Points::Zero(3, 1);
    Eigen::MatrixXd at0 = enc.encode(origin);
    CHECK(at0(0, 0) == doctest::Approx(1.0));  // cos block
    CHECK(at0(1, 0) == doctest::Approx(0.0));  // sin block

    Points quarter(3, 1);
    quarter.col(0) = Vec3(0.25, 0, 0);  // 2*pi*b.p = pi/2
    Eigen::MatrixXd atq = enc.encode(quarter);
    CHECK(atq(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(atq(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("fourier encoding parity: cos even, sin odd") {
    InputEncoding enc = InputEncoding::fourier(8, 3.0, 42);
    Rng rng(1);
    for (int t = 0; t < 20; ++t) {
        Points p = random_points(rng, 1);
        Points q = -p;
        Eigen::MatrixXd gp = enc.encode(p);
        Eigen::MatrixXd gq = enc.encode(q);
        const int m = enc.feature_count();
        CHECK((gp.topRows(m) - gq.topRows(m)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((gp.bottomRows(m) + gq.bottomRows(m)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("encoding jacobians match finite differences") {
    Rng rng(2);
    const double h = 1e-6;
    for (const auto& enc :
         {InputEncoding::fourier(6, 2.5, 9), InputEncoding::positional(4), InputEncoding::none()}) {
        Points p = random_points(rng, 5);
        Eigen::MatrixXd feat;
        std::array<Eigen::MatrixXd, 3> tan;
        enc.encode_with_jacobian(p, feat, tan);
        for (int j = 0; j < 3; ++j) {
            Points pp = p;
            Points pm = p;
            pp.row(j).array() += h;
            pm.row(j).array() -= h;
            Eigen::MatrixXd fd = (enc.encode(pp) - enc.encode(pm)) / (2 * h);
            CHECK((fd - tan[j]).cwiseAbs().maxCoeff() < 1e-5);
        }
    }
}

TEST_CASE("constant geometry head: zero weights give the output bias") {
    FieldConfig cfg = tiny_config(5);
    SceneField field(cfg);
    Eigen::VectorXd p = field.get_params();
    // zero the last geometry layer, set its bias
    Mlp& geo = field.geometry();
    Eigen::VectorXd gp = geo.params();
    gp.setZero();
    Eigen::VectorXd all = field.get_params();
    all.head(geo.param_count()) = gp;
    field.set_params(all);
    field.geometry().bias(field.geometry().layer_count() - 1)[0] = 0.625;

    Rng rng(3);
    Points pts = random_points(rng, 20);
    Eigen::VectorXd s = field.eval(pts);
    CHECK((s.array() - 0.625).abs().maxCoeff() == 0.0);

    Eigen::VectorXd v;
    Points g;
    field.eval_with_grad(pts, v, g);
    CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("batched evaluation equals pointwise evaluation") {
    SceneField field(small_config(77));
    Rng rng(4);
    Points pts = random_points(rng, 33);
    Eigen::VectorXd batched = field.eval(pts);
    for (int i = 0; i < 33; ++i) {
        Eigen::VectorXd one = field.eval(pts.col(i));
        CHECK(one[0] == batched[i]);
    }
}

TEST_CASE("analytic input gradients match central finite differences") {
    // 500 point/field combinations across encodings
    Rng rng(6);
    int checked = 0;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        FieldConfig cfg = small_config(seed + 10);
        cfg.encoding = seed % 3 == 0   ? EncodingType::Fourier
                       : seed % 3 == 1 ? EncodingType::Positional
                                       : EncodingType::None;
        SceneField field(cfg);
        Points pts = random_points(rng, 100, -0.9, 0.9);
        Eigen::VectorXd s;
        Points grad;
        field.eval_with_grad(pts, s, grad);

        // the oracle's truncation error grows with the squared signal
        // frequency; the positional ladder tops out at 2^9 pi, so it needs a
        // finer step than the h=1e-4 that suits the smooth encodings
        const double h = cfg.encoding == EncodingType::Positional ? 1e-5 : 1e-4;
        for (int i = 0; i < pts.cols(); ++i) {
            Vec3 fd;
            for (int j = 0; j < 3; ++j) {
                Points pp = pts.col(i);
                Points pm = pts.col(i);
                pp(j, 0) += h;
                pm(j, 0) -= h;
                fd[j] = (field.eval(pp)[0] - field.eval(pm)[0]) / (2 * h);
            }
            const double rel =
                (Vec3(grad.col(i)) - fd).norm() / std::max(1e-9, fd.norm());
            CHECK(rel < 1e-3);
            ++checked;
        }
    }
    CHECK(checked == 500);
}

TEST_CASE("gradient of a linear head over the encoding matches the hand expansion") {
    FieldConfig cfg;
    cfg.fourier_m = 3;
    cfg.sigma_enc = 1.0;
    cfg.hidden_layers = 0;  // geometry head is a single linear layer on gamma
    cfg.num_classes = 2;
    cfg.seed = 99;
    SceneField field(cfg);

    Rng rng(12);
    Mlp& geo = field.geometry();
    auto w = geo.weight(0);
    for (Eigen::Index i = 0; i < w.size(); ++i)
        w.data()[i] = Mlp::round_f32(rng.uniform(-1, 1));

    const Eigen::MatrixXd B = field.input_encoding().frequencies();
    const int m = 3;
    Points p = random_points(rng, 1, -0.5, 0.5);

    Vec3 expected = Vec3::Zero();
    for (int j = 0; j < m; ++j) {
        const double phase = 2.0 * M_PI * B.row(j).dot(p.col(0));
        const Vec3 b = B.row(j).transpose();
        expected += w(0, j) * (-2.0 * M_PI * std::sin(phase)) * b;      // cos feature
        expected += w(0, m + j) * (2.0 * M_PI * std::cos(phase)) * b;   // sin feature
    }

    Eigen::VectorXd s;
    Points g;
    field.eval_with_grad(p, s, g);
    CHECK((Vec3(g.col(0)) - expected).norm() < 1e-10);
}

TEST_CASE("semantic head probabilities") {
    FieldConfig cfg = tiny_config(8);
    cfg.num_classes = 4;
    SceneField field(cfg);

    SUBCASE("outputs form a simplex") {
        Rng rng(9);
        Points pts = random_points(rng, 50);
        Eigen::MatrixXd probs = field.eval_semantic(pts);
        for (int i = 0; i < 50; ++i) {
            CHECK(probs.col(i).minCoeff() >= 0.0);
            CHECK(std::abs(probs.col(i).sum() - 1.0) < 1e-6);
        }
    }
    SUBCASE("zero-weight head gives the uniform distribution") {
        Eigen::VectorXd all = field.get_params();
        all.tail(field.semantic().param_count()).setZero();
        field.set_params(all);
        Rng rng(10);
        Points pts = random_points(rng, 5);
        Eigen::MatrixXd probs = field.eval_semantic(pts);
        CHECK((probs.array() - 0.25).abs().maxCoeff() < 1e-12);
    }
    SUBCASE("argmax is stable under a constant logit shift") {
        Rng rng(11);
        Points pts = random_points(rng, 20);
        Eigen::MatrixXd before = field.eval_semantic(pts);
        Mlp& sem = field.semantic();
        auto b = sem.bias(sem.layer_count() - 1);
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] += 3.25;
        Eigen::MatrixXd after = field.eval_semantic(pts);
        for (int i = 0; i < 20; ++i) {
            int arg_before, arg_after;
            before.col(i).maxCoeff(&arg_before);
            after.col(i).maxCoeff(&arg_after);
            CHECK(arg_before == arg_after);
        }
    }
}

TEST_CASE("full-objective parameter gradients match finite differences") {
    FieldConfig cfg = tiny_config(13);
    SceneField field(cfg);
    Rng rng(14);
    TrainBatch batch = random_batch(rng, 12, 10, cfg.num_classes);

    LossWeights weights;
    weights.w_eikonal = 2.0;
    weights.w_surface = 5.0;
    weights.w_normal = 1.5;
    weights.w_off = 3.0;
    weights.w_seg = 2.5;
    weights.w_off_direct = 0.5;
    weights.alpha = 20.0;

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(field.param_count());
    LossBreakdown bd = field.loss_gradients(batch, weights, grad);

    // value path agrees with the gradient path's breakdown
    LossBreakdown value = total_loss(field, &field, batch, weights);
    CHECK(bd.total() == doctest::Approx(value.total()).epsilon(1e-9));

    const Eigen::VectorXd base = field.get_params();
    const double h = 2e-6;
    int bad = 0;
    for (Eigen::Index i = 0; i < base.size(); ++i) {
        Eigen::VectorXd up = base, dn = base;
        up[i] += h;
        dn[i] -= h;
        SceneField f_up = field;
        f_up.set_params(up);
        SceneField f_dn = field;
        f_dn.set_params(dn);
        // the realized f32 step, not the nominal one
        const double denom = f_up.get_params()[i] - f_dn.get_params()[i];
        REQUIRE(denom > 0.0);
        const double fd =
            (total_loss(f_up, &f_up, batch, weights).total() -
             total_loss(f_dn, &f_dn, batch, weights).total()) /
            denom;
        const double scale = std::max({std::abs(grad[i]), std::abs(fd), 1e-4});
        if (std::abs(grad[i] - fd) / scale >= 1e-2) ++bad;
    }
    CHECK(bad == 0);
}

TEST_CASE("zero weights give exactly zero gradients") {
    FieldConfig cfg = tiny_config(15);
    SceneField field(cfg);
    Rng rng(16);
    TrainBatch batch = random_batch(rng, 8, 8, cfg.num_classes);
    LossWeights weights;
    weights.w_eikonal = weights.w_surface = weights.w_normal = 0.0;
    weights.w_off = weights.w_seg = weights.w_off_direct = 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(field.param_count());
    LossBreakdown bd = field.loss_gradients(batch, weights, grad);
    CHECK(bd.total() == 0.0);
    CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("doubling one weight exactly doubles its gradient contribution") {
    FieldConfig cfg = tiny_config(17);
    SceneField field(cfg);
    Rng rng(18);
    TrainBatch batch = random_batch(rng, 10, 10, cfg.num_classes);

    auto grad_for = [&](auto setter) {
        LossWeights w;
        w.w_eikonal = w.w_surface = w.w_normal = w.w_off = w.w_seg = w.w_off_direct = 0.0;
        setter(w);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(field.param_count());
        field.loss_gradients(batch, w, g);
        return g;
    };

    Eigen::VectorXd g1 = grad_for([](LossWeights& w) { w.w_eikonal = 1.0; });
    Eigen::VectorXd g2 = grad_for([](LossWeights& w) { w.w_eikonal = 2.0; });
    CHECK((g2 - 2.0 * g1).cwiseAbs().maxCoeff() < 1e-15);

    Eigen::VectorXd s1 = grad_for([](LossWeights& w) { w.w_seg = 1.0; });
    Eigen::VectorXd s2 = grad_for([](LossWeights& w) { w.w_seg = 2.0; });
    CHECK((s2 - 2.0 * s1).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("checkpoint round trip is bit exact") {
    FieldConfig cfg = small_config(21);
    SceneField field(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "nsm_field_ckpt";
    std::filesystem::create_directories(dir);
    const auto path = dir / "field.nsmf";
    field.save_checkpoint(path);
    SceneField loaded = SceneField::load_checkpoint(path);

    CHECK(loaded.get_params() == field.get_params());
    Rng rng(22);
    Points pts = random_points(rng, 1000);
    Eigen::VectorXd a = field.eval(pts);
    Eigen::VectorXd b = loaded.eval(pts);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    // deterministic size, independent of parameter values
    SceneField other(cfg);
    const auto path2 = dir / "field2.nsmf";
    other.save_checkpoint(path2);
    CHECK(std::filesystem::file_size(path) == std::filesystem::file_size(path2));

    // truncation is a format error
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
    in.close();
    const auto path3 = dir / "truncated.nsmf";
    std::ofstream out(path3, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    out.close();
    CHECK_THROWS_AS(SceneField::load_checkpoint(path3), InputError);

    // bad magic is a format error
    bytes[0] = 'X';
    const auto path4 = dir / "badmagic.nsmf";
    std::ofstream out4(path4, std::ios::binary);
    out4.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out4.close();
    CHECK_THROWS_AS(SceneField::load_checkpoint(path4), InputError);

    std::filesystem::remove_all(dir);
}
