#include <gtest/gtest.h>

#include <random>

#include "dancelift/metrics.hpp"
#include "dancelift/synth.hpp"
#include "oracles.hpp"

using namespace dancelift;

namespace {

PoseSeq3D random_seq(std::mt19937_64& rng, int frames) {
    std::uniform_real_distribution<double> u(-1000, 1000);
    PoseSeq3D s(frames);
    for (auto& p : s)
        for (auto& j : p.joints) j = {u(rng), u(rng), u(rng) + 4000};
    return s;
}

std::vector<std::vector<std::array<double, 3>>> raw(const PoseSeq3D& s) {
    std::vector<std::vector<std::array<double, 3>>> out;
    for (const auto& p : s) {
        out.emplace_back();
        for (const auto& j : p.joints) out.back().push_back({j.x(), j.y(), j.z()});
    }
    return out;
}

SynthClip clip() {
    MotionConfig cfg;
    cfg.seed = 21;
    return gen_motion(cfg);
}

} // namespace

TEST(Mpjpe, IdenticalIsZero) {
    const SynthClip c = clip();
    EXPECT_EQ(mpjpe(c.poses3d, c.poses3d), 0.0);
}

TEST(Mpjpe, ThreeFourFive) {
    const SynthClip c = clip();
    PoseSeq3D shifted = c.poses3d;
    for (auto& p : shifted)
        for (auto& j : p.joints) j += Eigen::Vector3d(3, 0, 4);
    EXPECT_NEAR(mpjpe(shifted, c.poses3d), 5.0, 1e-12);
}

TEST(Mpjpe, MatchesNaiveLoop) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 20; ++i) {
        const PoseSeq3D a = random_seq(rng, 17), b = random_seq(rng, 17);
        EXPECT_NEAR(mpjpe(a, b), oracle::naive_mpjpe(raw(a), raw(b)), 1e-12);
    }
}

TEST(Mpjpe, LengthMismatchRejected) {
    std::mt19937_64 rng(1);
    EXPECT_THROW(mpjpe(random_seq(rng, 3), random_seq(rng, 4)), Error);
}

TEST(ScaledMpjpe, InvariantToUniformScaling) {
    std::mt19937_64 rng(2);
    const SynthClip c = clip();
    PoseSeq3D noisy = c.poses3d;
    std::normal_distribution<double> n(0, 30);
    for (auto& p : noisy)
        for (auto& j : p.joints) j += Eigen::Vector3d(n(rng), n(rng), n(rng));
    const double base = scaled_mpjpe(noisy, c.poses3d);
    PoseSeq3D a = noisy, b = c.poses3d;
    for (auto& p : a)
        for (auto& j : p.joints) j *= 3.7;
    for (auto& p : b)
        for (auto& j : p.joints) j *= 3.7;
    EXPECT_NEAR(scaled_mpjpe(a, b), base, 1e-12);
    EXPECT_GT(base, 0.0);
}

TEST(ScaledMpjpe, IgnoresRootOffsetAndPerSequenceScale) {
    const SynthClip c = clip();
    PoseSeq3D a = c.poses3d;
    for (auto& p : a)
        for (auto& j : p.joints) j = 0.5 * j + Eigen::Vector3d(100, -40, 900);
    EXPECT_NEAR(scaled_mpjpe(a, c.poses3d), 0.0, 1e-12);
}

TEST(SkeletonHeight, NearModelHeight) {
    const SynthClip c = clip();
    const double h = skeleton_height(c.poses3d);
    EXPECT_GT(h, 0.6 * c.height);
    EXPECT_LT(h, 1.1 * c.height);
}

TEST(Reprojection, ConsistentTripleIsZero) {
    const SynthClip c = clip();
    EXPECT_LE(reprojection_rmse(c.poses3d, c.poses2d_clean, c.camera), 1e-9);
}

TEST(Reprojection, UniformOnePixelOffset) {
    const SynthClip c = clip();
    PoseSeq2D p = c.poses2d_clean;
    for (auto& f : p)
        for (auto& j : f.joints) j += Eigen::Vector2d(0.6, 0.8);
    EXPECT_NEAR(reprojection_rmse(c.poses3d, p, c.camera), 1.0, 1e-9);
}

TEST(Reprojection, MaskedJointsExcluded) {
    const SynthClip c = clip();
    PoseSeq2D p = c.poses2d_clean;
    for (auto& f : p) {
        f.joints[Nose] += Eigen::Vector2d(50, 50);
        f.confidence[Nose] = 0.0;
    }
    EXPECT_LE(reprojection_rmse(c.poses3d, p, c.camera), 1e-9);
    for (auto& f : p) f.confidence[Nose] = 1.0;
    const double full = reprojection_rmse(c.poses3d, p, c.camera);
    EXPECT_NEAR(full, std::sqrt(5000.0 / kNumJoints), 1e-6);
}

TEST(Reprojection, AllInvisibleIsUndefined) {
    const SynthClip c = clip();
    PoseSeq2D p = c.poses2d_clean;
    for (auto& f : p) f.confidence.fill(0.0);
    try {
        reprojection_rmse(c.poses3d, p, c.camera);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UndefinedMetric);
    }
}

TEST(Fscore, PerfectIsOne) {
    const LabelGrid g = {{1, 0, 1}, {0, 1, 0}};
    EXPECT_EQ(fscore(g, g), 1.0);
}

TEST(Fscore, TwoThirds) {
    const LabelGrid pred = {{1, 0}}, gt = {{1, 1}};
    EXPECT_NEAR(fscore(pred, gt), 2.0 / 3.0, 1e-15);
}

TEST(Fscore, EmptyPositivesIsZero) {
    const LabelGrid z = {{0, 0}};
    EXPECT_EQ(fscore(z, z), 0.0);
}

TEST(Fscore, MatchesCountingOracle) {
    std::mt19937_64 rng(5);
    std::bernoulli_distribution b(0.3);
    for (int i = 0; i < 50; ++i) {
        LabelGrid p(40, std::vector<std::uint8_t>(11)), g = p;
        for (auto& r : p)
            for (auto& x : r) x = b(rng);
        for (auto& r : g)
            for (auto& x : r) x = b(rng);
        EXPECT_NEAR(fscore(p, g), oracle::counting_f1(p, g), 1e-12);
    }
}

TEST(Fscore, ShapeMismatchRejected) {
    EXPECT_THROW(fscore(LabelGrid{{1, 0}}, LabelGrid{{1, 0, 0}}), Error);
    EXPECT_THROW(fscore(LabelGrid{{1}}, LabelGrid{{1}, {0}}), Error);
}

TEST(Fscore, PerPartAndMacro) {
    const LabelSeq a = gen_genre_labels(2, 40, 3);
    const auto per = fscore_per_part(a, a);
    for (int e = 0; e < kNumParts; ++e) {
        bool any = false;
        for (int t = 0; t < 40; ++t)
            for (auto v : a.part_labels(t, e)) any = any || v;
        EXPECT_EQ(per[e], any ? 1.0 : 0.0);
    }
    EXPECT_LE(fscore_macro(a, a), 1.0);
}

TEST(Accuracy, Counts) {
    const std::vector<int> p = {1, 2, 3, 4}, g = {1, 2, 0, 4};
    EXPECT_DOUBLE_EQ(accuracy(p, g), 0.75);
    EXPECT_THROW(accuracy(std::span<const int>{}, std::span<const int>{}), Error);
}
