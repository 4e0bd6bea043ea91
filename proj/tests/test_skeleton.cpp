#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dancelift/skeleton.hpp"
#include "oracles.hpp"

using namespace dancelift;

namespace {

double rel_err(const Eigen::Vector3d& a, const std::array<double, 3>& b, double scale) {
    return (a - Eigen::Vector3d(b[0], b[1], b[2])).norm() / scale;
}

ThetaVec random_theta(const SkeletonModel& m, std::mt19937_64& rng) {
    return sample_theta(m, rng());
}

} // namespace

TEST(DhTransform, ZeroIsIdentity) {
    EXPECT_TRUE(dh_transform(0, 0, 0, 0).isApprox(Eigen::Matrix4d::Identity(), 1e-15));
}

TEST(DhTransform, PureZRotation) {
    const Eigen::Matrix4d m = dh_transform(std::numbers::pi / 2, 0, 0, 0);
    EXPECT_NEAR(m(0, 0), 0.0, 1e-15);
    EXPECT_NEAR(m(1, 0), 1.0, 1e-15);
    EXPECT_NEAR(m(2, 0), 0.0, 1e-15);
    EXPECT_NEAR(m(3, 0), 0.0, 1e-15);
    EXPECT_EQ(m.row(3), Eigen::RowVector4d(0, 0, 0, 1));
}

TEST(DhTransform, NeckRowTranslation) {
    // Row 2 of the table with theta_1 = 0, b0 = 0.25, h = 1800.
    const double deg = std::numbers::pi / 180;
    const Eigen::Matrix4d m = dh_transform(90 * deg, 0, 0.25 * 1800, -90 * deg);
    const Eigen::Vector3d t = m.topRightCorner<3, 1>();
    EXPECT_NEAR(t.norm(), 450.0, 1e-12);
    const Eigen::Vector3d x_axis = m.block<3, 1>(0, 0);
    EXPECT_NEAR(t.dot(x_axis), 450.0, 1e-12);
}

TEST(DhTransform, MatchesElementaryProduct) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 50; ++i) {
        const double th = u(rng), d = 100 * u(rng), a = 100 * u(rng), al = u(rng);
        const Eigen::Matrix4d m = dh_transform(th, d, a, al);
        const auto o = oracle::dh_elementary(th, d, a, al);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) EXPECT_NEAR(m(r, c), o[r][c], 1e-12);
    }
}

TEST(DhTransform, RejectsNonFinite) {
    EXPECT_THROW(dh_transform(std::nan(""), 0, 0, 0), Error);
    EXPECT_THROW(dh_transform(0, INFINITY, 0, 0), Error);
}

TEST(SkeletonModel, TableInvariants) {
    const auto m = SkeletonModel::dancer();
    for (const auto& r : m.rows) {
        const double a = r.alpha;
        EXPECT_TRUE(std::abs(a) < 1e-15 || std::abs(std::abs(a) - std::numbers::pi / 2) < 1e-15);
        ASSERT_TRUE(r.theta_offset_index.has_value());
        EXPECT_GE(*r.theta_offset_index, 0);
        EXPECT_LT(*r.theta_offset_index, kNumOffsets);
        if (!r.d_expr.empty()) EXPECT_LT(r.d_expr.bone, kNumBones);
        if (!r.a_expr.empty()) EXPECT_LT(r.a_expr.bone, kNumBones);
    }
    // Rows 0 and 1 share theta_0; every other offset drives exactly one row.
    std::array<int, kNumOffsets> uses{};
    for (const auto& r : m.rows) ++uses[*r.theta_offset_index];
    EXPECT_EQ(uses[0], 2);
    for (int k = 1; k < kNumOffsets; ++k) EXPECT_EQ(uses[k], 1) << k;
    EXPECT_TRUE(m.bones_valid(m.bone_ratios));
    const ThetaVec rest = m.rest_theta();
    for (int k = 0; k < kNumOffsets; ++k) EXPECT_TRUE(m.theta_bounds[k].contains(rest[k]));
    // untabulated offsets default to [-pi, pi]
    for (int k : {0, 4, 5, 6, 11, 12, 17, 18, 24, 25, 31, 32}) {
        EXPECT_EQ(m.theta_bounds[k].min, -std::numbers::pi);
        EXPECT_EQ(m.theta_bounds[k].max, std::numbers::pi);
    }
}

TEST(ForwardKinematics, RestPoseMatchesOracle) {
    const auto m = SkeletonModel::dancer();
    const ThetaVec zero = ThetaVec::Zero();
    const Pose3D p = forward_kinematics(m, zero);
    const auto o = oracle::fk(m, zero);
    for (int j = 0; j < kNumJoints; ++j) EXPECT_LE(rel_err(p.joints[j], o[j], m.height), 1e-9);
}

TEST(ForwardKinematics, RandomDrawsMatchOracle) {
    auto m = SkeletonModel::dancer();
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        m.bone_ratios = sample_bones(m, rng());
        m.root.azimuth = std::uniform_real_distribution<double>(-3, 3)(rng);
        const ThetaVec th = random_theta(m, rng);
        const Pose3D p = forward_kinematics(m, th);
        const auto o = oracle::fk(m, th);
        for (int j = 0; j < kNumJoints; ++j) ASSERT_LE(rel_err(p.joints[j], o[j], m.height), 1e-9);
    }
}

TEST(ForwardKinematics, LinearInHeight) {
    auto m = SkeletonModel::dancer(1800);
    auto m2 = SkeletonModel::dancer(3600);
    const ThetaVec zero = ThetaVec::Zero();
    const Pose3D a = forward_kinematics(m, zero);
    const Pose3D b = forward_kinematics(m2, zero);
    const Eigen::Vector3d root = m.root.position;
    for (int j = 0; j < kNumJoints; ++j)
        EXPECT_LE(((b.joints[j] - root) - 2.0 * (a.joints[j] - root)).norm(), 1e-9 * 3600);
}

TEST(ForwardKinematics, LeafPerturbationIsLocal) {
    const auto m = SkeletonModel::dancer();
    ThetaVec th = m.rest_theta();
    const Pose3D a = forward_kinematics(m, th);
    th[32] += 0.4;
    const Pose3D b = forward_kinematics(m, th);
    for (int j = 0; j < kNumJoints; ++j) {
        if (j == LBigToe)
            EXPECT_GT((a.joints[j] - b.joints[j]).norm(), 1.0);
        else
            EXPECT_EQ(a.joints[j], b.joints[j]) << kJointNames[j];
    }
}

TEST(ForwardKinematics, BoundsHandling) {
    const auto m = SkeletonModel::dancer();
    ThetaVec th = m.rest_theta();
    th[9] = 1e-10;  // upper bound 0, excursion within tolerance
    FkDiagnostics diag;
    EXPECT_NO_THROW(forward_kinematics(m, th, &diag));
    EXPECT_EQ(diag.clamped, 1);
    th[9] = 0.1;
    try {
        forward_kinematics(m, th);
        FAIL() << "expected bounds violation";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BoundsViolation);
        EXPECT_NE(std::string(e.what()).find("theta[9]"), std::string::npos);
    }
}

TEST(ForwardKinematics, BoneLengthsConstantAcrossTheta) {
    const auto m = SkeletonModel::dancer();
    std::mt19937_64 rng(5);
    const Pose3D ref = forward_kinematics(m, m.rest_theta());
    for (int i = 0; i < 200; ++i) {
        const Pose3D p = forward_kinematics(m, random_theta(m, rng));
        for (auto [a, b] : kRigidBones) {
            const double l0 = (ref.joints[a] - ref.joints[b]).norm();
            const double l1 = (p.joints[a] - p.joints[b]).norm();
            ASSERT_GT(l0, 1.0);
            ASSERT_LE(std::abs(l1 - l0) / l0, 1e-9) << kJointNames[a] << "-" << kJointNames[b];
        }
    }
}

TEST(ForwardKinematics, RigidUnderRootRotation) {
    auto m = SkeletonModel::dancer();
    std::mt19937_64 rng(9);
    const ThetaVec th = random_theta(m, rng);
    const Pose3D a = forward_kinematics(m, th);
    m.root.azimuth = 1.1;
    m.root.elevation = -0.3;
    m.root.roll = 0.7;
    const Pose3D b = forward_kinematics(m, th);
    for (int i = 0; i < kNumJoints; ++i)
        for (int j = i + 1; j < kNumJoints; ++j) {
            const double da = (a.joints[i] - a.joints[j]).norm();
            const double db = (b.joints[i] - b.joints[j]).norm();
            EXPECT_LE(std::abs(da - db), 1e-9 * m.height);
        }
}

TEST(ForwardKinematics, RestPoseStandsUpright) {
    const auto m = SkeletonModel::dancer();
    const Pose3D p = forward_kinematics(m, m.rest_theta());
    // camera y points down: head above pelvis above ankles
    EXPECT_LT(p.joints[Nose].y(), p.joints[MidHip].y());
    EXPECT_GT(p.joints[RAnkle].y(), p.joints[MidHip].y());
    EXPECT_GT(p.joints[LAnkle].y(), p.joints[MidHip].y());
}

TEST(PoseJacobian, MatchesFiniteDifferences) {
    auto m = SkeletonModel::dancer();
    m.root.azimuth = 0.4;
    std::mt19937_64 rng(21);
    ThetaVec th = m.rest_theta();
    const auto jac = pose_jacobian(m, th);
    const double h = 1e-6;
    auto flat = [](const Pose3D& p) {
        Eigen::VectorXd v(3 * kNumJoints);
        for (int j = 0; j < kNumJoints; ++j) v.segment<3>(3 * j) = p.joints[j];
        return v;
    };
    for (int k = 0; k < kNumOffsets; ++k) {
        ThetaVec tp = th, tm = th;
        tp[k] += h;
        tm[k] -= h;
        // stay inside bounds for one-sided offsets
        if (!m.theta_bounds[k].contains(tp[k]) || !m.theta_bounds[k].contains(tm[k])) continue;
        const Eigen::VectorXd fd = (flat(forward_kinematics(m, tp)) - flat(forward_kinematics(m, tm))) / (2 * h);
        EXPECT_LE((fd - jac.d_theta.col(k)).norm(), 1e-5 * std::max(1.0, fd.norm())) << k;
    }
    for (int i = 0; i < kNumBones; ++i) {
        auto mp = m, mm = m;
        mp.bone_ratios[i] += h;
        mm.bone_ratios[i] -= h;
        const Eigen::VectorXd fd = (flat(forward_kinematics(mp, th)) - flat(forward_kinematics(mm, th))) / (2 * h);
        EXPECT_LE((fd - jac.d_bones.col(i)).norm(), 1e-5 * std::max(1.0, fd.norm())) << i;
    }
    auto mp = m, mm = m;
    mp.root.azimuth += h;
    mm.root.azimuth -= h;
    const Eigen::VectorXd fd = (flat(forward_kinematics(mp, th)) - flat(forward_kinematics(mm, th))) / (2 * h);
    EXPECT_LE((fd - jac.d_azimuth).norm(), 1e-5 * std::max(1.0, fd.norm()));
}

TEST(Sampling, DeterministicAndInBounds) {
    const auto m = SkeletonModel::dancer();
    EXPECT_EQ(sample_theta(m, 42), sample_theta(m, 42));
    EXPECT_EQ(sample_bones(m, 42), sample_bones(m, 42));
    EXPECT_NE(sample_theta(m, 42), sample_theta(m, 43));
    double b0_sum = 0.0;
    for (std::uint64_t s = 0; s < 10000; ++s) {
        const ThetaVec t = sample_theta(m, s);
        for (int k = 0; k < kNumOffsets; ++k) ASSERT_TRUE(m.theta_bounds[k].contains(t[k]));
        const BoneVec b = sample_bones(m, s);
        ASSERT_TRUE(m.bones_valid(b));
        b0_sum += b[0];
    }
    EXPECT_NEAR(b0_sum / 10000, 0.25, 0.01);
}

TEST(SkeletonJson, ExportsTables) {
    const auto j = skeleton_to_json(SkeletonModel::dancer());
    EXPECT_EQ(j.at("rows").size(), 34u);
    EXPECT_EQ(j.at("theta_bounds").size(), 33u);
    EXPECT_EQ(j.at("bones").size(), 9u);
    EXPECT_EQ(j.at("joints").size(), 25u);
    EXPECT_DOUBLE_EQ(j.at("bones")[0].at("average").get<double>(), 0.25);
}
