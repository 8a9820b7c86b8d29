#include "levenberg_marquardt.hpp"
#include "mqnmr/analysis.hpp"
#include "mqnmr/errors.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace mqnmr {
namespace {

DecayCurve sampled(double start, double stop, double step, double (*f)(double)) {
    DecayCurve c;
    for (double x = start; x <= stop + 1e-12; x += step) {
        c.abscissa.push_back(x);
        c.values.push_back(f(x));
    }
    return c;
}

DecayCurve from_values(const std::vector<double>& y) {
    DecayCurve c;
    for (std::size_t i = 0; i < y.size(); ++i) {
        c.abscissa.push_back(static_cast<double>(i));
    }
    c.values = y;
    return c;
}

TEST(DecayTimeE, Exponential) {
    const auto c = sampled(0.0, 0.3, 0.001, [](double t) { return 0.04 * std::exp(-t / 0.05); });
    const auto d = decay_time_e(c);
    ASSERT_EQ(d.status, DecayStatus::ok);
    EXPECT_NEAR(d.value, 0.05, 0.001);
}

TEST(DecayTimeE, ZeroOrderNeverDecays) {
    const auto c = sampled(0.0, 0.2, 0.001, [](double) { return 0.3; });
    EXPECT_EQ(decay_time_e(c).status, DecayStatus::not_reached);
}

TEST(DecayTimeE, ZeroOrderOfComputedSpectrum) {
    const SpinSystem sys(21);
    AveragingWindow w;
    w.steps = 400;
    const auto avg = averaged_intensities(sys, {0.0, 0.05, 0.1, 0.2, 0.4}, w);
    EXPECT_EQ(decay_time_e(make_curve(avg.series, 0, 21, 0.0, ExperimentKind::standard)).status,
              DecayStatus::not_reached);
    EXPECT_EQ(decay_time_e(make_curve(avg.series, 2, 21, 0.0, ExperimentKind::standard)).status,
              DecayStatus::ok);
}

TEST(DecayTimeE, RejectsBadInput) {
    auto c = sampled(0.0, 0.1, 0.01, [](double) { return 0.0; });
    EXPECT_THROW(decay_time_e(c), ConfigError);
    DecayCurve bad;
    bad.abscissa = {0.0, 0.2, 0.1};
    bad.values = {1.0, 0.5, 0.2};
    EXPECT_THROW(bad.validate(), ConfigError);
    bad.abscissa = {0.0, 0.1};
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Envelopes, DampedSine) {
    const auto c = sampled(0.0, 10.0, 0.001, [](double t) { return (1.0 - t / 10.0) * std::sin(5.0 * t); });
    const auto env = envelopes(c);
    ASSERT_TRUE(env.has_value());
    ASSERT_GE(env->upper.x.size(), 3u);
    for (std::size_t i = 1; i + 1 < env->upper.x.size(); ++i) {
        const double expected = 1.0 - env->upper.x[i] / 10.0;
        EXPECT_NEAR(env->upper.y[i], expected, 0.02 * expected);
    }
}

TEST(Envelopes, ConstantHasNone) {
    EXPECT_FALSE(envelopes(sampled(0.0, 1.0, 0.01, [](double) { return 0.2; })).has_value());
    EXPECT_EQ(decay_time_perturbed(sampled(0.0, 1.0, 0.01, [](double) { return 0.2; })).status,
              DecayStatus::not_reached);
}

TEST(Envelopes, ClampedOutsideKnots) {
    Envelope e{{1.0, 2.0}, {3.0, 5.0}};
    EXPECT_EQ(e(0.0), 3.0);
    EXPECT_EQ(e(1.5), 4.0);
    EXPECT_EQ(e(9.0), 5.0);
    EXPECT_TRUE(e.covers(2.0));
    EXPECT_FALSE(e.covers(2.5));
}

TEST(Envelopes, SandwichComputedIntensity) {
    const SpinSystem sys(21);
    std::vector<double> taus;
    for (int i = 0; i <= 3000; ++i) {
        taus.push_back(0.01 * i);
    }
    const auto series = PerturbedExperiment(sys, 0.01).series(taus);
    const auto curve = make_curve(series, 2, 21, 0.01, ExperimentKind::perturbed);
    const auto env = envelopes(curve);
    ASSERT_TRUE(env.has_value());
    // Between consecutive knots the linear interpolant can sit below (above)
    // the samples by at most the knot-to-knot change.
    auto slack = [](const Envelope& e) {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < e.y.size(); ++i) {
            s = std::max(s, std::abs(e.y[i + 1] - e.y[i]));
        }
        return s;
    };
    const double up = slack(env->upper);
    const double lo = slack(env->lower);
    int checked = 0;
    for (std::size_t i = 0; i < curve.values.size(); ++i) {
        const double x = curve.abscissa[i];
        if (env->upper.covers(x) && env->lower.covers(x)) {
            EXPECT_LE(curve.values[i], env->upper(x) + up);
            EXPECT_GE(curve.values[i], env->lower(x) - lo);
            ++checked;
        }
    }
    EXPECT_GT(checked, 2000);
    for (std::size_t i = 0; i < env->upper.x.size(); ++i) {
        EXPECT_GE(env->upper.y[i], env->lower(env->upper.x[i]));
    }
}

TEST(DecayTimePerturbed, LinearDriftWithRipple) {
    const auto c = sampled(0.0, 10.0, 0.001, [](double t) { return 1.0 - t / 5.0 + 0.2 * std::sin(20.0 * t); });
    const auto d = decay_time_perturbed(c);
    ASSERT_EQ(d.status, DecayStatus::ok);
    // Envelope zeros near 4 and 6; the few ripple crossings between them
    // average to 5 up to a fraction of the ripple period (pi / 10).
    EXPECT_GT(d.value, 4.0);
    EXPECT_LE(d.value, 6.0);
    EXPECT_NEAR(d.value, 5.0, 0.2);
}

TEST(DecayTimePerturbed, EnvelopeNeverReachesZero) {
    const auto c = sampled(0.0, 10.0, 0.001, [](double t) { return 2.0 + std::exp(-t) * std::sin(5.0 * t); });
    EXPECT_EQ(decay_time_perturbed(c).status, DecayStatus::not_reached);
}

TEST(DecayTimePerturbed, NoRawZeroBetweenEnvelopeZeros) {
    // Raw sign change at 4.86; envelope zeros at 5.33 (lower) and 6.90 (upper).
    const auto c = from_values({0.0, 1.0, 0.5, 0.8, 0.3, -0.05, -0.1, -0.02, -0.5, -0.4, -1.0, -0.9});
    const auto d = decay_time_perturbed(c);
    EXPECT_EQ(d.status, DecayStatus::no_crossings);
    EXPECT_EQ(to_string(d.status), "no_crossings");
}

std::vector<FitPoint> coth_data(double a1, double a2, double a3) {
    std::vector<FitPoint> pts;
    for (int k = 2; k <= 40; k += 2) {
        pts.push_back({static_cast<double>(k), a1 / std::tanh(a2 * k + a3)});
    }
    return pts;
}

TEST(Fits, CothRecovery) {
    const auto fit = fit_coth(coth_data(0.01, 0.2, -0.05));
    ASSERT_TRUE(fit.converged);
    EXPECT_NEAR(fit.parameters[0], 0.01, 1e-6 * 0.01);
    EXPECT_NEAR(fit.parameters[1], 0.2, 1e-6 * 0.2);
    EXPECT_NEAR(fit.parameters[2], -0.05, 1e-6 * 0.05);
    EXPECT_GE(fit.residual, 0.0);
    EXPECT_NEAR(fit.evaluate(7.0), 0.01 / std::tanh(0.2 * 7 - 0.05), 1e-9);
}

TEST(Fits, TanhRecovery) {
    std::vector<FitPoint> pts;
    for (int k = 2; k <= 90; k += 2) {
        pts.push_back({static_cast<double>(k), 42.0073 + 19.7734 * std::tanh(1.5240 - 0.0565 * k)});
    }
    const auto fit = fit_tanh(pts);
    ASSERT_TRUE(fit.converged);
    const double expected[] = {42.0073, 19.7734, 0.0565, 1.5240};
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(fit.parameters[static_cast<std::size_t>(i)], expected[i], 1e-6 * std::abs(expected[i]));
    }
}

TEST(Fits, HistoryIsMonotone) {
    auto pts = coth_data(0.0085, 0.24, -0.13);
    std::mt19937 rng(11);
    std::normal_distribution<double> noise(0.0, 2e-4);
    for (auto& p : pts) {
        p.value += noise(rng);
    }
    for (const auto& fit : {fit_coth(pts)}) {
        ASSERT_FALSE(fit.cost_history.empty());
        for (std::size_t i = 1; i < fit.cost_history.size(); ++i) {
            EXPECT_LE(fit.cost_history[i], fit.cost_history[i - 1]);
        }
        EXPECT_NEAR(fit.cost_history.back(), fit.residual, 1e-15);
    }
}

TEST(Fits, OrderOfPointsIrrelevant) {
    auto pts = coth_data(0.0078, 0.1966, -0.0758);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        pts[i].value *= 1.0 + 0.03 * std::sin(3.0 * i);
    }
    const auto a = fit_coth(pts);
    std::mt19937 rng(5);
    std::shuffle(pts.begin(), pts.end(), rng);
    const auto b = fit_coth(pts);
    EXPECT_EQ(a.parameters, b.parameters);
    EXPECT_EQ(a.residual, b.residual);
}

TEST(Fits, RejectsTooFewPoints) {
    const std::vector<FitPoint> pts{{2, 1.0}, {4, 0.5}, {6, 0.3}};
    EXPECT_THROW(fit_coth(pts), ConfigError);
    EXPECT_THROW(fit_tanh(pts), ConfigError);
}

TEST(LevenbergMarquardt, RosenbrockHistoryNonIncreasing) {
    const detail::ResidualFn fn = [](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd* j) {
        r.resize(2);
        r << 10.0 * (q(1) - q(0) * q(0)), 1.0 - q(0);
        if (j) {
            j->resize(2, 2);
            *j << -20.0 * q(0), 10.0, -1.0, 0.0;
        }
        return true;
    };
    Eigen::VectorXd start(2);
    start << -1.2, 1.0;
    const auto out = detail::levenberg_marquardt(fn, start);
    EXPECT_TRUE(out.converged);
    EXPECT_NEAR(out.params(0), 1.0, 1e-8);
    EXPECT_NEAR(out.params(1), 1.0, 1e-8);
    for (std::size_t i = 1; i < out.history.size(); ++i) {
        EXPECT_LE(out.history[i], out.history[i - 1]);
    }
}

TEST(Clusters, CountsByThreshold) {
    CoherenceSpectrum s;
    s.max_order = 3;
    s.intensities = {0.001, 0.0, 0.2, 0.5, 0.2, 0.0, 0.001};
    const auto c = cluster_size(s, 0.005);
    EXPECT_EQ(c.all, 3);
    EXPECT_EQ(c.nonneg, 2);
    const auto everything = cluster_size(s, 1e-9);
    EXPECT_EQ(everything.all, 5);
}

TEST(Clusters, BeforePreparationOnlyZeroOrder) {
    const auto s = intensities_experiment_B(SpinSystem(51), 0.001, 0.0);
    const auto c = cluster_size(s, 0.005);
    EXPECT_EQ(c.all, 1);
    EXPECT_EQ(c.nonneg, 1);
}

TEST(Clusters, TracesStayInRange) {
    const int n = 41;
    const SpinSystem sys(n);
    std::vector<double> taus;
    for (int i = 0; i <= 400; ++i) {
        taus.push_back(0.01 * i);
    }
    const auto series = PerturbedExperiment(sys, 0.001).series(taus);
    const auto trace = cluster_trace_perturbed(series, 0.005);
    ASSERT_EQ(trace.counts.size(), taus.size());
    EXPECT_EQ(trace.counts.front().all, 1);
    int peak = 0;
    for (const auto& c : trace.counts) {
        EXPECT_GE(c.all, 0);
        EXPECT_LE(c.all, 2 * n + 1);
        EXPECT_LE(c.nonneg, c.all);
        peak = std::max(peak, c.all);
    }
    EXPECT_GT(peak, 5);

    const auto avg = averaged_intensities(sys, {0.0, 0.02, 0.1}, AveragingWindow{31.0, 2.0, 400});
    const auto standard = cluster_trace_standard(avg.series, 0.005);
    EXPECT_GE(standard.counts.front().all, standard.counts.back().all);
}

TEST(Perturbation, SmallTauClosedForm) {
    const auto c = perturbation_second_order(SpinSystem(21), 0.05);
    EXPECT_GT(c.numeric, 0.0);
    EXPECT_GT(c.closed_form, 0.0);
    EXPECT_NEAR(c.numeric / c.closed_form, 1.0, 0.02);
}

TEST(Perturbation, DeficitScalesWithPSquared) {
    const SpinSystem sys(51);
    const double d1 = intensity_deficit(sys, 1e-3, 0.25) / 1e-6;
    const double d2 = intensity_deficit(sys, 2e-3, 0.25) / 4e-6;
    EXPECT_GT(d1, 0.0);
    EXPECT_NEAR(d2 / d1, 1.0, 0.05);
    EXPECT_NEAR(intensity_deficit(sys, 0.0, 0.25), 0.0, 1e-13);
}

}  // namespace
}  // namespace mqnmr
