#include "mqnmr/coherence.hpp"
#include "mqnmr/errors.hpp"
#include "mqnmr/oracle.hpp"

#include <gtest/gtest.h>

namespace mqnmr {
namespace {

double max_diff(const CoherenceSpectrum& a, const CoherenceSpectrum& b) {
    EXPECT_EQ(a.max_order, b.max_order);
    double worst = 0.0;
    for (int k = -a.max_order; k <= a.max_order; ++k) {
        worst = std::max(worst, std::abs(a.at(k) - b.at(k)));
    }
    return worst;
}

TEST(Oracle, FullOperatorsAreHermitian) {
    const SpinSystem sys(5);
    for (auto kind : {oracle::Kind::hmq, oracle::Kind::hdz, oracle::Kind::heff, oracle::Kind::iz}) {
        const auto op = oracle::build_full(sys, kind, 0.4);
        EXPECT_EQ(op.matrix.rows(), 32);
        EXPECT_TRUE(is_hermitian(op.matrix));
    }
}

TEST(Oracle, RejectsLargeSystems) {
    EXPECT_THROW(oracle::build_full(SpinSystem(oracle::kMaxSpins + 1), oracle::Kind::iz), ConfigError);
}

class OracleEquivalence : public ::testing::TestWithParam<int> {};

TEST_P(OracleEquivalence, StandardExperiment) {
    const SpinSystem sys(GetParam(), 1.0);
    const StandardExperiment exp(sys, {0.0, 1});
    for (double tau : {0.0, 0.3, 1.0, 2.5, 31.0}) {
        for (double t : {0.0, 0.05, 0.2, 1.0, 4.0}) {
            EXPECT_LE(max_diff(exp.spectrum(tau, t), oracle::intensities_standard(sys, tau, t)), 1e-10)
                << "tau=" << tau << " t=" << t;
        }
    }
}

TEST_P(OracleEquivalence, PerturbedExperiment) {
    const SpinSystem sys(GetParam(), 1.0);
    for (Mixing mixing : {Mixing::ideal_mq, Mixing::matched_heff}) {
        for (double p : {0.0, 0.001, 0.05, 0.4, 1.0}) {
            const PerturbedExperiment exp(sys, p, mixing, {0.0, 1});
            for (double tau : {0.0, 0.25, 1.0, 3.0, 10.0}) {
                EXPECT_LE(max_diff(exp.spectrum(tau), oracle::intensities_perturbed(sys, p, tau, mixing)),
                          1e-10)
                    << "p=" << p << " tau=" << tau << " mixing=" << to_string(mixing);
            }
        }
    }
}

INSTANTIATE_TEST_SUITE_P(SmallSystems, OracleEquivalence, ::testing::Values(2, 3, 4, 5, 6));

TEST(Oracle, NonUnitCoupling) {
    const SpinSystem sys(5, 2.5);
    const StandardExperiment exp(sys, {0.0, 1});
    EXPECT_LE(max_diff(exp.spectrum(0.7, 0.3), oracle::intensities_standard(sys, 0.7, 0.3)), 1e-10);
    const PerturbedExperiment pert(sys, 0.2, Mixing::ideal_mq, {0.0, 1});
    EXPECT_LE(max_diff(pert.spectrum(0.7), oracle::intensities_perturbed(sys, 0.2, 0.7)), 1e-10);
}

}  // namespace
}  // namespace mqnmr
