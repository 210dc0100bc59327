#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "nsm/losses.hpp"
#include "nsm/rng.hpp"

using namespace nsm;

namespace {

// F(p) = k * z; gradient (0, 0, k) everywhere.
class ScaledPlane final : public ImplicitField {
public:
    explicit ScaledPlane(double k) : k_(k) {}
    Eigen::VectorXd eval(const Points& p) const override {
        return k_ * p.row(2).transpose();
    }
    void eval_with_grad(const Points& p, Eigen::VectorXd& v, Points& g) const override {
        v = eval(p);
        g = Points::Zero(3, p.cols());
        g.row(2).setConstant(k_);
    }

private:
    double k_;
};

TrainBatch plane_batch(int n_on, int n_off, Rng& rng) {
    TrainBatch batch;
    batch.on_points.resize(3, n_on);
    batch.on_normals.resize(3, n_on);
    batch.on_labels = Eigen::VectorXi::Zero(n_on);
    for (int i = 0; i < n_on; ++i) {
        batch.on_points.col(i) = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0);
        batch.on_normals.col(i) = Vec3(0, 0, 1);
    }
    batch.off_points.resize(3, n_off);
    for (int i = 0; i < n_off; ++i)
        batch.off_points.col(i) =
            Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.2, 1.0));
    return batch;
}

}  // namespace

TEST_CASE("sdf_loss vanishes on the exact plane field") {
    Rng rng(1);
    TrainBatch batch = plane_batch(50, 40, rng);
    LossWeights w;
    LossBreakdown bd = sdf_loss(ScaledPlane(1.0), batch, w);
    CHECK(bd.eikonal == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(bd.surface == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(bd.normal == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("eikonal term counts |grad|-1 per point") {
    Rng rng(2);
    TrainBatch batch = plane_batch(30, 30, rng);
    LossWeights w;
    w.w_eikonal = 1.0;
    w.w_surface = 0.0;
    w.w_normal = 0.0;
    LossBreakdown bd = sdf_loss(ScaledPlane(2.0), batch, w);
    CHECK(bd.eikonal == doctest::Approx(1.0).epsilon(1e-12));  // |2-1| at every point
}

TEST_CASE("flipped normals cost 2 per point") {
    Rng rng(3);
    TrainBatch batch = plane_batch(25, 0, rng);
    batch.on_normals.row(2).setConstant(-1.0);  // against grad F = +z
    LossWeights w;
    w.w_eikonal = 0.0;
    w.w_surface = 0.0;
    w.w_normal = 1.0;
    LossBreakdown bd = sdf_loss(ScaledPlane(1.0), batch, w);
    CHECK(bd.normal == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("off_surface_penalty hand values") {
    Points pts = Points::Zero(3, 4);
    CHECK(off_surface_penalty(ConstantField(0.0), pts, 100.0, 1.0) ==
          doctest::Approx(1.0));
    CHECK(off_surface_penalty(ConstantField(0.05), pts, 100.0, 1.0) ==
          doctest::Approx(std::exp(-5.0)).epsilon(1e-9));
    CHECK(off_surface_penalty(ConstantField(0.05), pts, 100.0, 1.0) ==
          doctest::Approx(0.006738).epsilon(1e-3));
    CHECK(off_surface_penalty(ConstantField(1e6), pts, 100.0, 1.0) ==
          doctest::Approx(0.0));
    CHECK_THROWS_AS(off_surface_penalty(ConstantField(0.0), pts, 0.5, 1.0), InputError);
}

TEST_CASE("semantic_loss closed forms") {
    const int C = 3;
    const int n = 17;
    Eigen::VectorXi labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i % C;

    SUBCASE("perfect one-hot predictions cost 0") {
        Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(C, n);
        for (int i = 0; i < n; ++i) probs(labels[i], i) = 1.0;
        CHECK(semantic_loss(probs, labels) == doctest::Approx(0.0));
    }
    SUBCASE("uniform predictions cost ln C") {
        Eigen::MatrixXd probs = Eigen::MatrixXd::Constant(C, n, 1.0 / C);
        CHECK(semantic_loss(probs, labels) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    }
    SUBCASE("pr(true)=0.5 costs ln 2") {
        Eigen::MatrixXd probs = Eigen::MatrixXd::Constant(C, n, 0.25);
        for (int i = 0; i < n; ++i) probs(labels[i], i) = 0.5;
        CHECK(semantic_loss(probs, labels) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("monotone in the true-class probability") {
        double prev = 1e9;
        for (double pr : {0.2, 0.4, 0.6, 0.8, 0.99}) {
            Eigen::MatrixXd probs = Eigen::MatrixXd::Constant(C, n, (1.0 - pr) / (C - 1));
            for (int i = 0; i < n; ++i) probs(labels[i], i) = pr;
            double loss = semantic_loss(probs, labels);
            CHECK(loss < prev);
            prev = loss;
        }
    }
}

TEST_CASE("total_loss is additive and its breakdown sums") {
    Rng rng(4);
    TrainBatch batch = plane_batch(20, 20, rng);
    LossWeights w;
    w.w_eikonal = 1.0;
    w.w_surface = 1.0;
    w.w_normal = 1.0;
    w.w_off = 1.0;
    w.w_seg = 0.0;  // no semantic field in this fixture
    LossBreakdown bd = total_loss(ScaledPlane(2.0), nullptr, batch, w);
    CHECK(bd.total() ==
          doctest::Approx(bd.eikonal + bd.surface + bd.normal + bd.off + bd.off_direct +
                          bd.seg)
              .epsilon(1e-12));

    SUBCASE("all weights zero gives zero") {
        LossWeights z;
        z.w_eikonal = z.w_surface = z.w_normal = z.w_off = z.w_seg = 0.0;
        CHECK(total_loss(ScaledPlane(2.0), nullptr, batch, z).total() == 0.0);
    }
    SUBCASE("scaling a weight scales its component") {
        LossWeights w2 = w;
        w2.w_eikonal = 3.0;
        LossBreakdown bd2 = total_loss(ScaledPlane(2.0), nullptr, batch, w2);
        CHECK(bd2.eikonal == doctest::Approx(3.0 * bd.eikonal).epsilon(1e-12));
        CHECK(bd2.off == doctest::Approx(bd.off).epsilon(1e-12));
    }
}

TEST_CASE("loss values are invariant under point permutation") {
    Rng rng(5);
    TrainBatch batch = plane_batch(40, 40, rng);
    LossWeights w;
    LossBreakdown a = total_loss(ScaledPlane(1.3), nullptr, batch, w);

    TrainBatch shuffled = batch;
    std::vector<int> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 39; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
    for (int i = 0; i < 40; ++i) {
        shuffled.on_points.col(i) = batch.on_points.col(perm[i]);
        shuffled.on_normals.col(i) = batch.on_normals.col(perm[i]);
        shuffled.on_labels[i] = batch.on_labels[perm[i]];
        shuffled.off_points.col(i) = batch.off_points.col(perm[i]);
    }
    LossBreakdown b = total_loss(ScaledPlane(1.3), nullptr, shuffled, w);
    CHECK(a.total() == doctest::Approx(b.total()).epsilon(1e-12));
}

TEST_CASE("instance_clamp_loss") {
    CHECK(instance_clamp_loss(0.37, 0.37, 0.1) == 0.0);
    CHECK(instance_clamp_loss(0.3, 0.5, 0.1) == 0.0);  // both clamp to +delta
    CHECK(instance_clamp_loss(-0.05, 0.02, 0.1) == doctest::Approx(0.07).epsilon(1e-12));
    CHECK_THROWS_AS(instance_clamp_loss(0.0, 0.0, 0.0), InputError);

    SUBCASE("symmetry and the 2 delta bound") {
        Rng rng(6);
        for (int i = 0; i < 200; ++i) {
            double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), d = rng.uniform(0.01, 0.5);
            CHECK(instance_clamp_loss(a, b, d) == instance_clamp_loss(b, a, d));
            CHECK(instance_clamp_loss(a, b, d) <= 2 * d + 1e-15);
            CHECK(instance_clamp_loss(a, b, d) >= 0.0);
        }
    }
}

TEST_CASE("batch validation catches malformed input") {
    Rng rng(7);
    TrainBatch batch = plane_batch(5, 5, rng);
    SUBCASE("non-unit normal") {
        batch.on_normals.col(2) *= 2.0;
        CHECK_THROWS_AS(batch.validate(3), InputError);
    }
    SUBCASE("label out of range") {
        batch.on_labels[1] = 7;
        CHECK_THROWS_AS(batch.validate(3), InputError);
    }
}
