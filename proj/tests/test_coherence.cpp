#include "mqnmr/coherence.hpp"
#include "mqnmr/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace mqnmr {
namespace {

void expect_structure(const CoherenceSpectrum& s, double sum_tol) {
    for (int k = 1; k <= s.max_order; ++k) {
        EXPECT_NEAR(s.at(k), s.at(-k), 1e-10) << "k=" << k;
        if (k % 2 == 1) {
            EXPECT_EQ(s.at(k), 0.0) << "k=" << k;
            EXPECT_EQ(s.at(-k), 0.0) << "k=" << k;
        }
    }
    if (sum_tol > 0) {
        EXPECT_NEAR(s.sum(), 1.0, sum_tol);
    }
}

TEST(CoherenceComponent, DiagonalOrderZero) {
    const auto rho = initial_density(SpinSystem(6));
    const auto c0 = coherence_component(rho, 0);
    for (std::size_t s = 0; s < rho.size(); ++s) {
        EXPECT_EQ((c0.blocks[s] - rho.blocks[s]).norm(), 0.0);
    }
}

TEST(CoherenceComponent, OddOrdersEmptyAndSumReconstructs) {
    const SpinSystem sys(9);
    const StandardExperiment exp(sys, {0.0, 1});
    const auto rho = exp.density(1.3);
    auto total = coherence_component(rho, 0);
    for (int k = -sys.n_spins; k <= sys.n_spins; ++k) {
        const auto c = coherence_component(rho, k);
        if (k % 2 != 0) {
            for (const auto& b : c.blocks) {
                EXPECT_EQ(b.norm(), 0.0);
            }
        }
        if (k != 0) {
            for (std::size_t s = 0; s < rho.size(); ++s) {
                total.blocks[s] += c.blocks[s];
            }
        }
    }
    for (std::size_t s = 0; s < rho.size(); ++s) {
        EXPECT_EQ((total.blocks[s] - rho.blocks[s]).norm(), 0.0);
    }
}

TEST(CoherenceComponent, RotationPhase) {
    const SpinSystem sys(7);
    const StandardExperiment exp(sys, {0.0, 1});
    const auto rho = exp.density(0.9);
    const double phi = 0.7;
    for (int k = -4; k <= 4; k += 2) {
        const auto c = coherence_component(rho, k);
        for (std::size_t s = 0; s < c.size(); ++s) {
            const auto& m = c.sectors[s].m_values;
            Eigen::VectorXcd phase(m.size());
            for (std::size_t i = 0; i < m.size(); ++i) {
                phase(static_cast<Eigen::Index>(i)) = std::exp(Complex(0, -phi * m[i].value()));
            }
            const Eigen::MatrixXcd rotated = phase.asDiagonal() * c.blocks[s] * phase.conjugate().asDiagonal();
            EXPECT_LT((rotated - std::exp(Complex(0, -k * phi)) * c.blocks[s]).norm(), 1e-12);
        }
    }
}

TEST(ExperimentA, NoCoherenceBeforePreparation) {
    const auto s = intensities_experiment_A(SpinSystem(15), 0.0, 0.4);
    EXPECT_NEAR(s.at(0), 1.0, 1e-14);
    for (int k = 1; k <= 15; ++k) {
        EXPECT_NEAR(s.at(k), 0.0, 1e-14);
    }
}

TEST(ExperimentA, SumRuleAndStructure) {
    for (int n : {1, 2, 13, 21, 50}) {
        const StandardExperiment exp{SpinSystem(n)};
        for (double tau : {0.5, 1.0, 5.0, 31.0}) {
            const auto at0 = exp.spectrum(tau, 0.0);
            expect_structure(at0, 1e-10);
            for (int k = -n; k <= n; ++k) {
                EXPECT_GE(at0.at(k), -1e-12);
            }
            for (double t : {0.01, 0.3}) {
                const auto s = exp.spectrum(tau, t);
                expect_structure(s, 0.0);
                EXPECT_NEAR(s.at(0), at0.at(0), 1e-10);
            }
        }
    }
}

TEST(ExperimentA, SeriesMatchesPointEvaluation) {
    const StandardExperiment exp{SpinSystem(17)};
    const std::vector<double> ts{0.0, 0.02, 0.1};
    const auto series = exp.evolution_series(2.0, ts);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const auto s = exp.spectrum(2.0, ts[i]);
        for (int k = -17; k <= 17; ++k) {
            EXPECT_NEAR(series.at(i, k), s.at(k), 1e-13);
        }
    }
}

TEST(ExperimentA, SectorCutoffBound) {
    const SpinSystem sys(101);
    const auto exact = intensities_experiment_A(sys, 2.0, 0.01, {0.0, 1});
    const auto cut = intensities_experiment_A(sys, 2.0, 0.01, {1e-6, 1});
    double moved = 0.0;
    for (int k = -101; k <= 101; ++k) {
        moved += std::abs(exact.at(k) - cut.at(k));
    }
    EXPECT_LE(moved, 1e-6);
    EXPECT_GT(moved, 0.0);
}

TEST(ExperimentA, WorkerCountDoesNotChangeBits) {
    const SpinSystem sys(41);
    const std::vector<double> ts{0.0, 0.01, 0.05};
    AveragingWindow w;
    w.steps = 300;
    const auto one = averaged_intensities(sys, ts, w, {1e-15, 1}).series;
    const auto four = averaged_intensities(sys, ts, w, {1e-15, 4}).series;
    EXPECT_EQ(one.values, four.values);
}

TEST(Averaging, WindowConstants) {
    const AveragingWindow w;
    EXPECT_DOUBLE_EQ(w.tau0, 31.0);
    EXPECT_NEAR(w.length(), 4.0 * std::numbers::pi / std::sqrt(3.0), 1e-15);
    EXPECT_NO_THROW(w.validate());
    AveragingWindow coarse;
    coarse.steps = 150;
    EXPECT_THROW(coarse.validate(), ConfigError);
}

TEST(Averaging, InvariantsAndConvergence) {
    const SpinSystem sys(21);
    const std::vector<double> ts{0.0, 0.05, 0.1, 0.2};
    const auto avg = averaged_intensities(sys, ts, AveragingWindow{}, {0.0, 1});
    const auto& s = avg.series;
    double sum0 = 0.0;
    for (int k = -21; k <= 21; ++k) {
        EXPECT_GE(s.at(0, k), -1e-10);
        sum0 += s.at(0, k);
    }
    EXPECT_NEAR(sum0, 1.0, 1e-8);
    for (std::size_t i = 1; i < ts.size(); ++i) {
        EXPECT_NEAR(s.at(i, 0), s.at(0, 0), 1e-8);
    }
    AveragingWindow fine;
    fine.steps = 4000;
    const auto doubled = averaged_intensities(sys, {0.0}, fine, {0.0, 1}).series;
    for (int k = -21; k <= 21; ++k) {
        EXPECT_LT(std::abs(doubled.at(0, k) - s.at(0, k)), 1e-6) << "k=" << k;
    }
}

TEST(Averaging, EqualsMeanOfPointSpectra) {
    const SpinSystem sys(9);
    AveragingWindow w;
    w.steps = 200;
    const auto avg = averaged_intensities(sys, {0.07}, w, {0.0, 1}).series;
    const StandardExperiment exp(sys, {0.0, 1});
    std::vector<double> mean(19, 0.0);
    for (int i = 0; i <= w.steps; ++i) {
        const double weight = (i == 0 || i == w.steps) ? 0.5 : 1.0;
        const auto s = exp.spectrum(w.tau0 + i * w.step(), 0.07);
        for (int k = -9; k <= 9; ++k) {
            mean[static_cast<std::size_t>(k + 9)] += weight * s.at(k) / w.steps;
        }
    }
    for (int k = -9; k <= 9; ++k) {
        EXPECT_NEAR(avg.at(0, k), mean[static_cast<std::size_t>(k + 9)], 1e-12);
    }
}

TEST(ExperimentB, ZeroPerturbationMatchesExperimentA) {
    const SpinSystem sys(25);
    for (double tau : {0.2, 1.7}) {
        const auto a = intensities_experiment_A(sys, tau, 0.0);
        for (Mixing mixing : {Mixing::ideal_mq, Mixing::matched_heff}) {
            const auto b = intensities_experiment_B(sys, 0.0, tau, mixing);
            for (int k = -25; k <= 25; ++k) {
                EXPECT_NEAR(a.at(k), b.at(k), 1e-12);
            }
        }
    }
}

TEST(ExperimentB, MatchedMixingIsAPerfectEcho) {
    const SpinSystem sys(30);
    for (double p : {0.01, 0.3, 1.0}) {
        const PerturbedExperiment exp(sys, p, Mixing::matched_heff);
        for (double tau : {0.1, 2.0, 15.0}) {
            const auto s = exp.spectrum(tau);
            expect_structure(s, 1e-10);
            for (int k = -30; k <= 30; ++k) {
                EXPECT_GE(s.at(k), -1e-12);
            }
        }
    }
}

TEST(ExperimentB, IdealMixingStructureAndDeficit) {
    const SpinSystem sys(30);
    const PerturbedExperiment exp(sys, 0.01);
    for (double tau : {0.1, 0.5, 2.0}) {
        const auto s = exp.spectrum(tau);
        expect_structure(s, 0.0);
        EXPECT_LT(s.sum(), 1.0);
    }
}

TEST(ExperimentB, SeriesIndependentOfWorkers) {
    const SpinSystem sys(31);
    std::vector<double> taus;
    for (int i = 0; i < 37; ++i) {
        taus.push_back(0.1 * i);
    }
    const auto one = PerturbedExperiment(sys, 0.01, Mixing::ideal_mq, {1e-15, 1}).series(taus);
    const auto three = PerturbedExperiment(sys, 0.01, Mixing::ideal_mq, {1e-15, 3}).series(taus);
    EXPECT_EQ(one.values, three.values);
    const auto s = PerturbedExperiment(sys, 0.01).spectrum(taus[20]);
    for (int k = -31; k <= 31; ++k) {
        EXPECT_NEAR(one.at(20, k), s.at(k), 1e-14);
    }
}

TEST(ExperimentB, RejectsInvalidP) {
    EXPECT_THROW(PerturbedExperiment(SpinSystem(4), 1.5), ConfigError);
}

TEST(Mixing, ParseRoundTrip) {
    for (Mixing m : {Mixing::ideal_mq, Mixing::matched_heff}) {
        EXPECT_EQ(parse_mixing(to_string(m)), m);
    }
    EXPECT_THROW(parse_mixing("echo"), ConfigError);
}

TEST(FourierAreas, ConservationAtElevenSpins) {
    const auto areas = fourier_area_check(SpinSystem(11), 1.0, 1.0, 4096);
    EXPECT_NEAR(areas.analytic_sum, 0.5, 1e-12);
    EXPECT_NEAR(areas.numeric_sum / areas.analytic_sum, 1.0, 1e-3);
    for (std::size_t i = 0; i < areas.orders.size(); ++i) {
        EXPECT_NEAR(areas.numeric[i], areas.analytic[i], 1e-3 * 0.5);
    }
    for (double tau : {0.5, 2.0}) {
        EXPECT_NEAR(fourier_area_check(SpinSystem(11), tau, 1.0, 64).analytic_sum, areas.analytic_sum,
                    1e-10);
    }
    EXPECT_THROW(fourier_area_check(SpinSystem(11), 1.0, 0.0, 64), ConfigError);
    EXPECT_THROW(fourier_area_check(SpinSystem(11), 1.0, 1.0, 1), ConfigError);
}

}  // namespace
}  // namespace mqnmr
