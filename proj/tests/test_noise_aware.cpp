#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "weaklabel/errors.hpp"
#include "weaklabel/noise_aware.hpp"

using namespace weaklabel;

namespace {

FeatureSet random_features(std::size_t n, std::size_t d, std::mt19937_64& gen) {
    return FeatureSet(n, d, oracle::random_vector(n * d, -2.0, 2.0, gen));
}

ProbLabels random_probs(std::size_t n, std::mt19937_64& gen) { return {oracle::random_vector(n, 0.0, 1.0, gen)}; }

DiscModel random_model(std::size_t d, std::mt19937_64& gen) {
    return {oracle::random_vector(d, -1.5, 1.5, gen), oracle::random_vector(1, -1.0, 1.0, gen)[0]};
}

std::vector<double> flat(const DiscModel& model) {
    auto v = model.weights;
    v.push_back(model.bias);
    return v;
}

DiscModel unflat(const std::vector<double>& v) { return {std::vector<double>(v.begin(), v.end() - 1), v.back()}; }

double logistic(double s, int y) { return std::log1p(std::exp(-y * s)); }

}  // namespace

TEST_CASE("loss examples") {
    const FeatureSet f(3, 2, {1.0, 2.0, -1.0, 0.5, 0.0, 0.0});
    CHECK(noise_aware_loss(DiscModel::zeros(2), f, ProbLabels{{0.5, 0.5, 0.5}}) == doctest::Approx(3.0 * std::log(2.0)));

    // all-positive probs give the plain logistic loss
    const DiscModel model{{0.3, -0.7}, 0.2};
    double plain = 0.0;
    for (std::size_t i = 0; i < 3; ++i) plain += logistic(model.score(f.row(i)), 1);
    CHECK(noise_aware_loss(model, f, ProbLabels{{1.0, 1.0, 1.0}}) == doctest::Approx(plain).epsilon(1e-12));

    CHECK_THROWS_AS(noise_aware_loss(model, f, ProbLabels{{0.5}}), DimensionError);
    CHECK_THROWS_AS(noise_aware_loss(DiscModel::zeros(3), f, ProbLabels{{0.5, 0.5, 0.5}}), DimensionError);
    CHECK_THROWS_AS(FeatureSet(2, 2, {1.0, 2.0, 3.0}), DimensionError);
    CHECK_THROWS_AS(FeatureSet(1, 1, {NAN}), DomainError);
}

TEST_CASE("loss gradient matches finite differences") {
    std::mt19937_64 gen(31);
    for (int point = 0; point < 20; ++point) {
        const std::size_t n = 5 + gen() % 40, d = 1 + gen() % 5;
        const auto f = random_features(n, d, gen);
        const auto probs = random_probs(n, gen);
        const auto model = random_model(d, gen);
        LossGradient g;
        noise_aware_loss(model, f, probs, &g);
        auto analytic = g.weights;
        analytic.push_back(g.bias);
        const auto numeric = oracle::finite_difference(
            [&](const std::vector<double>& v) { return noise_aware_loss(unflat(v), f, probs); }, flat(model));
        CHECK(oracle::relative_error(analytic, numeric) < 1e-5);

        // the expected gradient is the prob-weighted mix of the two hard-label gradients
        LossGradient gp, gn;
        std::vector<double> mix(d + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = f.subset(std::vector<std::size_t>{i});
            noise_aware_loss(model, row, ProbLabels{{1.0}}, &gp);
            noise_aware_loss(model, row, ProbLabels{{0.0}}, &gn);
            const double p = probs.probs[i];
            for (std::size_t a = 0; a < d; ++a) mix[a] += p * gp.weights[a] + (1.0 - p) * gn.weights[a];
            mix[d] += p * gp.bias + (1.0 - p) * gn.bias;
        }
        CHECK(oracle::relative_error(analytic, mix) < 1e-12);
    }
}

TEST_CASE("loss is convex") {
    std::mt19937_64 gen(32);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 10, d = 3;
        const auto f = random_features(n, d, gen);
        const auto probs = random_probs(n, gen);
        const auto a = flat(random_model(d, gen)), b = flat(random_model(d, gen));
        const double s = u(gen);
        std::vector<double> mid(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) mid[k] = s * a[k] + (1.0 - s) * b[k];
        CHECK(noise_aware_loss(unflat(mid), f, probs) <=
              s * noise_aware_loss(unflat(a), f, probs) + (1.0 - s) * noise_aware_loss(unflat(b), f, probs) + 1e-10);
    }
}

TEST_CASE("hard labels reproduce logistic regression") {
    std::mt19937_64 gen(33);
    for (int t = 0; t < 3; ++t) {
        const std::size_t n = 200, d = 3;
        const auto f = random_features(n, d, gen);
        std::vector<double> truth = oracle::random_vector(d, -1.0, 1.0, gen);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        ProbLabels hard;
        std::vector<std::vector<double>> x;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t a = 0; a < d; ++a) s += truth[a] * f.row(i)[a];
            hard.probs.push_back(u(gen) < 1.0 / (1.0 + std::exp(-s)) ? 1.0 : 0.0);
            x.emplace_back(f.row(i).begin(), f.row(i).end());
        }
        FitConfig config;
        config.l2_reg = 1e-3;
        config.epochs = 20000;
        config.tolerance = 1e-10;
        const auto model = train(f, hard, config);
        const auto reference = oracle::newton_logistic(x, hard.probs, config.l2_reg);
        CHECK(oracle::relative_error(flat(model), reference) < 1e-6);
        for (std::size_t k = 0; k <= d; ++k) CHECK(std::abs(flat(model)[k] - reference[k]) < 1e-6);
    }
}

TEST_CASE("training behaviour") {
    std::mt19937_64 gen(34);
    const std::size_t n = 400, d = 2;
    // feature 0 kept at least 0.25 away from the boundary
    auto values = oracle::random_vector(n * d, -2.0, 2.0, gen);
    for (std::size_t i = 0; i < n; ++i) values[i * d] += values[i * d] > 0 ? 0.25 : -0.25;
    const FeatureSet f(n, d, values);

    FitConfig config;
    config.epochs = 2000;
    const auto flat_model = train(f, ProbLabels{std::vector<double>(n, 0.5)}, config);
    for (double w : flat_model.weights) CHECK(std::abs(w) < 1e-3);
    CHECK(std::abs(flat_model.bias) < 1e-3);

    // separable by the sign of feature 0, with sharp probs
    ProbLabels sharp;
    for (std::size_t i = 0; i < n; ++i) sharp.probs.push_back(f.row(i)[0] > 0 ? 0.95 : 0.05);
    const auto model = train(f, sharp, config);
    const auto scores = predict(model, f);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += (scores[i] > 0.5) == (f.row(i)[0] > 0);
    CHECK(static_cast<double>(correct) / n >= 0.95);

    // hard labels on the same separable set threshold back to the labels
    ProbLabels hard;
    for (std::size_t i = 0; i < n; ++i) hard.probs.push_back(f.row(i)[0] > 0 ? 1.0 : 0.0);
    const auto fitted = predict(train(f, hard, config), f);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) agree += (fitted[i] > 0.5) == (hard.probs[i] == 1.0);
    CHECK(agree == n);

    // determinism
    const auto again = train(f, sharp, config);
    CHECK(again.weights == model.weights);
    CHECK(again.bias == model.bias);

    CHECK_THROWS_AS(train(FeatureSet(0, 2, {}), ProbLabels{}, config), EmptyMatrixError);
}

TEST_CASE("predict") {
    const FeatureSet f(2, 2, {1.0, -3.0, 0.0, 2.0});
    for (double p : predict(DiscModel::zeros(2), f)) CHECK(p == 0.5);
    const DiscModel model{{0.7, -0.2}, 0.1};
    const auto base = predict(model, f);
    const auto shifted = predict(model, FeatureSet(2, 2, {1.5, -3.0, 0.5, 2.0}));
    CHECK(shifted[0] > base[0]);
    CHECK(shifted[1] > base[1]);
    CHECK_THROWS_AS(predict(DiscModel::zeros(3), f), DimensionError);
}

TEST_CASE("feature and model files round trip") {
    std::mt19937_64 gen(35);
    const auto f = random_features(7, 3, gen);
    std::ostringstream out;
    write_features(out, f);
    std::istringstream in(out.str());
    CHECK(read_features(in).values() == f.values());

    const auto model = random_model(3, gen);
    std::ostringstream mout;
    write_disc_model(mout, model);
    std::istringstream min(mout.str());
    const auto back = read_disc_model(min);
    CHECK(back.weights == model.weights);
    CHECK(back.bias == model.bias);

    std::istringstream ragged("1,2\n3\n");
    CHECK_THROWS_AS(read_features(ragged), ParseError);
    std::istringstream missing("d=2\nweights=1,2\n");
    CHECK_THROWS_AS(read_disc_model(missing), ParseError);
}
