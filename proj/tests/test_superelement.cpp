#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "flange_balance/superelement.hpp"
#include "test_support.hpp"

using namespace flange;

namespace {

StiffnessSystem small_system(const Eigen::MatrixXd& K, std::set<int> constrained = {}) {
    std::vector<DofEntry> entries;
    for (int i = 0; i < K.rows(); ++i)
        entries.push_back({NodeKind::ring_station, i, DofKind::axial_translation});
    StiffnessSystem sys;
    sys.K = K;
    sys.dof_map = DofMap(std::move(entries));
    sys.constrained_dofs = std::move(constrained);
    return sys;
}

/// Clamped-free chain of two 1000 N/m springs: node 0 clamped, node 1
/// interior, node 2 master.
StiffnessSystem spring_chain() {
    Eigen::MatrixXd K(3, 3);
    K << 1000, -1000, 0,
        -1000, 2000, -1000,
        0, -1000, 1000;
    return small_system(K, {0});
}

}  // namespace

TEST_CASE("condense: series springs reduce to the series stiffness") {
    const auto se = Superelement::condense(spring_chain(), {2});
    REQUIRE(se.K_reduced().rows() == 1);
    CHECK_THAT(se.K_reduced()(0, 0), Catch::Matchers::WithinRel(500.0, 1e-12));
    // Recovery: the interior node moves half as far as the master.
    REQUIRE(se.recovery_operator().rows() == 1);
    CHECK_THAT(se.recovery_operator()(0, 0), Catch::Matchers::WithinRel(0.5, 1e-12));
}

TEST_CASE("condense: 2x2 example") {
    Eigen::MatrixXd K(2, 2);
    K << 2, -1, -1, 2;
    const auto se = Superelement::condense(small_system(K), {0});
    CHECK_THAT(se.K_reduced()(0, 0), Catch::Matchers::WithinRel(1.5, 1e-12));
}

TEST_CASE("condense: all free DOFs as masters is the identity reduction") {
    std::mt19937 rng(42);
    const auto sys = fbtest::random_psd_system(rng, 12, 3);
    const auto se = Superelement::condense(sys, sys.free_dofs());
    const Eigen::MatrixXd Kc = sys.constrained_submatrix();
    CHECK((se.K_reduced() - Kc).norm() <= 1e-12 * Kc.norm());
    CHECK(se.slaves().empty());
}

TEST_CASE("solve_reduced: unit force on the chain tip") {
    const auto se = Superelement::condense(spring_chain(), {2});
    Eigen::VectorXd fm(1), fs(1);
    fm << 1.0;
    fs << 0.0;
    const auto sol = se.solve_reduced(fm, fs);
    CHECK_THAT(sol.u_masters(0), Catch::Matchers::WithinRel(0.002, 1e-12));
    CHECK_THAT(sol.u_interior(0), Catch::Matchers::WithinRel(0.001, 1e-12));
    const Eigen::VectorXd full = se.expand(sol);
    CHECK(full(0) == 0.0);  // clamped
}

TEST_CASE("solve_reduced: zero loads give zero displacements") {
    const auto se = Superelement::condense(spring_chain(), {2});
    const auto sol = se.solve_reduced(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
    CHECK(sol.u_masters.norm() == 0.0);
    CHECK(sol.u_interior.norm() == 0.0);
}

TEST_CASE("condensation is exact for statics: random systems vs full solve") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto sys = fbtest::random_psd_system(rng, 50, 5);
        const auto masters = fbtest::random_master_subset(rng, sys);
        const auto se = Superelement::condense(sys, masters);

        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd f_full = Eigen::VectorXd::Zero(sys.K.rows());
        for (int d : sys.free_dofs()) f_full(d) = normal(rng);

        // Full reference solve on the free block.
        const auto free = sys.free_dofs();
        Eigen::VectorXd f_free(free.size());
        for (std::size_t i = 0; i < free.size(); ++i) f_free(static_cast<Eigen::Index>(i)) = f_full(free[i]);
        const Eigen::VectorXd u_free = sys.constrained_submatrix().ldlt().solve(f_free);
        Eigen::VectorXd u_ref = Eigen::VectorXd::Zero(sys.K.rows());
        for (std::size_t i = 0; i < free.size(); ++i) u_ref(free[i]) = u_free(static_cast<Eigen::Index>(i));

        // Reduced solve.
        Eigen::VectorXd fm(masters.size());
        for (std::size_t i = 0; i < masters.size(); ++i) fm(static_cast<Eigen::Index>(i)) = f_full(masters[i]);
        Eigen::VectorXd fs(se.slaves().size());
        for (std::size_t i = 0; i < se.slaves().size(); ++i)
            fs(static_cast<Eigen::Index>(i)) = f_full(se.slaves()[i]);
        const Eigen::VectorXd u_se = se.expand(se.solve_reduced(fm, fs));

        CHECK((u_se - u_ref).norm() <= 1e-10 * (u_ref.norm() + 1.0));
    }
}

TEST_CASE("reduced matrix inherits symmetry and positive definiteness") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const auto sys = fbtest::random_psd_system(rng, 30, 4);
        const auto masters = fbtest::random_master_subset(rng, sys);
        const auto se = Superelement::condense(sys, masters);
        const auto& Kr = se.K_reduced();
        CHECK((Kr - Kr.transpose()).norm() <= 1e-12 * Kr.norm());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Kr, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("energy consistency of the reduced model") {
    std::mt19937 rng(5);
    const auto sys = fbtest::random_psd_system(rng, 25, 3);
    const auto masters = fbtest::random_master_subset(rng, sys);
    const auto se = Superelement::condense(sys, masters);
    Eigen::VectorXd fm = Eigen::VectorXd::Random(static_cast<Eigen::Index>(masters.size()));
    const Eigen::VectorXd fs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(se.slaves().size()));
    const auto sol = se.solve_reduced(fm, fs);
    // With interior loads zero, master-level energy equals full-model energy.
    const Eigen::VectorXd u = se.expand(sol);
    const double e_red = sol.u_masters.dot(se.K_reduced() * sol.u_masters);
    const double e_full = u.dot(sys.K * u);
    CHECK_THAT(e_red, Catch::Matchers::WithinRel(e_full, 1e-10));
}

TEST_CASE("interior_load_map is the transpose of the recovery operator") {
    std::mt19937 rng(11);
    const auto sys = fbtest::random_psd_system(rng, 20, 2);
    const auto se = Superelement::condense(sys, fbtest::random_master_subset(rng, sys));
    CHECK((se.interior_load_map() - se.recovery_operator().transpose()).norm() == 0.0);
}

TEST_CASE("condense: argument validation") {
    const auto sys = spring_chain();
    CHECK_THROWS_AS(Superelement::condense(sys, {}), std::invalid_argument);
    CHECK_THROWS_AS(Superelement::condense(sys, {2, 2}), std::invalid_argument);
    CHECK_THROWS_AS(Superelement::condense(sys, {0}), std::invalid_argument);  // constrained
    CHECK_THROWS_AS(Superelement::condense(sys, {7}), std::invalid_argument);  // out of range
    CHECK_THROWS_AS(Superelement::condense(sys, {-1}), std::invalid_argument);
}

TEST_CASE("condense: singular interior block is reported with a near-null vector") {
    // Node 2 is disconnected, so the interior block {1, 2} has a zero mode.
    Eigen::MatrixXd K(3, 3);
    K << 1000, -1000, 0,
        -1000, 1000, 0,
        0, 0, 0;
    const auto sys = small_system(K);  // no constraints
    CHECK_THROWS_WITH(Superelement::condense(sys, {0}),
                      Catch::Matchers::ContainsSubstring("singular interior"));
}

TEST_CASE("solve_reduced: dimension mismatches are rejected") {
    const auto se = Superelement::condense(spring_chain(), {2});
    CHECK_THROWS_AS(se.solve_reduced(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(se.solve_reduced(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(3)),
                    std::invalid_argument);
}
