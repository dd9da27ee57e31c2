#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "weaklabel/errors.hpp"
#include "weaklabel/generative_model.hpp"
#include "weaklabel/numeric.hpp"
#include "weaklabel/synthetic.hpp"

using namespace weaklabel;

namespace {

GenerativeParams random_params(std::size_t m, const CorrelationSet& c, std::mt19937_64& gen, double scale = 1.0) {
    auto p = GenerativeParams::zeros(m, c);
    p.lab = oracle::random_vector(m, -scale, scale, gen);
    p.acc = oracle::random_vector(m, -scale, scale, gen);
    p.corr = oracle::random_vector(c.size(), -scale, scale, gen);
    return p;
}

CorrelationSet random_pairs(std::size_t m, std::size_t count, std::mt19937_64& gen) {
    auto all = CorrelationSet::all_pairs(m).pairs();
    std::shuffle(all.begin(), all.end(), gen);
    all.resize(std::min(count, all.size()));
    return CorrelationSet(all, m);
}

}  // namespace

TEST_CASE("factor indicators") {
    const std::vector<Label> a{1, 0};
    CHECK(factor_values(a, 1, {}) == std::vector<double>{1, 0, 1, 0});

    const std::vector<Label> b{1, 1};
    const CorrelationSet c({{0, 1}}, 2);
    CHECK(factor_values(b, -1, c) == std::vector<double>{1, 1, 0, 0, 1});

    // The correlation indicator fires when both sources abstain.
    const std::vector<Label> none{0, 0, 0};
    const CorrelationSet c3({{0, 2}}, 3);
    for (const Label y : {Label{1}, Label{-1}})
        CHECK(factor_values(none, y, c3) == std::vector<double>{0, 0, 0, 0, 0, 0, 1});
}

TEST_CASE("correlation set validation") {
    CHECK_THROWS_AS(CorrelationSet({{1, 1}}, 3), DomainError);
    CHECK_THROWS_AS(CorrelationSet({{0, 3}}, 3), DomainError);
    CHECK_THROWS_AS(CorrelationSet({{0, 1}, {1, 0}}, 3), DuplicateError);
    const CorrelationSet c({{2, 0}, {0, 1}}, 3);
    CHECK(c.pairs() == std::vector<CorrelationSet::Pair>{{0, 1}, {0, 2}});
    CHECK(c.contains(2, 0));
    CHECK_FALSE(c.contains(1, 2));
    CHECK(CorrelationSet::all_pairs(5).size() == 10);
}

TEST_CASE("weight and accuracy conversion") {
    CHECK(weight_to_accuracy(0.0) == doctest::Approx(0.5));
    CHECK(weight_to_accuracy(1.0) == doctest::Approx(0.8808).epsilon(1e-4));
    CHECK(accuracy_to_weight(0.75) == doctest::Approx(0.5 * std::log(3.0)));
    for (double a = 0.05; a < 1.0; a += 0.05) CHECK(std::abs(weight_to_accuracy(accuracy_to_weight(a)) - a) < 1e-12);
}

TEST_CASE("model accuracy under enumeration is sigmoid(2w)") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 5; ++trial) {
        const auto p = random_params(3, {}, gen, 1.5);
        for (std::size_t j = 0; j < 3; ++j)
            for (const int y : {1, -1})
                CHECK(oracle::model_accuracy(p, j, y) == doctest::Approx(weight_to_accuracy(p.acc[j])).epsilon(1e-12));
    }
}

TEST_CASE("closed-form posterior") {
    auto p = GenerativeParams::zeros(1);
    p.acc = {1.0};
    CHECK(posterior_independent(LabelMatrix::from_dense({{1}}, 1), p).probs[0] ==
          doctest::Approx(0.8808).epsilon(1e-4));

    auto q = GenerativeParams::zeros(2);
    q.acc = {1.5, 0.5};
    const auto two = posterior_independent(LabelMatrix::from_dense({{1, -1}, {0, 0}}, 2), q).probs;
    CHECK(two[0] == doctest::Approx(sigmoid(2.0)));
    CHECK(two[1] == 0.5);

    CHECK_THROWS_AS(posterior_independent(LabelMatrix::from_dense({{1, 1}}, 2),
                                          GenerativeParams::zeros(2, CorrelationSet({{0, 1}}, 2))),
                    PreconditionError);
}

TEST_CASE("posterior properties") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto matrix = oracle::random_matrix(30, 5, 0.5, gen);
        const auto p = random_params(5, {}, gen, 2.0);
        const auto probs = posterior_independent(matrix, p).probs;
        const auto flipped = posterior_independent(matrix.negated(), p).probs;
        for (std::size_t i = 0; i < matrix.rows(); ++i) {
            CHECK(probs[i] >= 0.0);
            CHECK(probs[i] <= 1.0);
            CHECK(flipped[i] == doctest::Approx(1.0 - probs[i]).epsilon(1e-12));
            CHECK(probs[i] == doctest::Approx(oracle::posterior(oracle::dense(matrix, i), p)).epsilon(1e-12));
            if (matrix.row(i).empty()) CHECK(probs[i] == 0.5);
        }
    }
    // strictly increasing in the accuracy weight of a lone positive vote
    const auto row = LabelMatrix::from_dense({{1}}, 1);
    auto p = GenerativeParams::zeros(1);
    double last = 0.0;
    for (double w = -3.0; w <= 3.0; w += 0.25) {
        p.acc = {w};
        const double now = posterior_independent(row, p).probs[0];
        CHECK(now > last);
        last = now;
    }
}

TEST_CASE("gibbs posterior") {
    std::mt19937_64 gen(9);
    const auto matrix = oracle::random_matrix(20, 4, 0.6, gen);
    const auto p = random_params(4, {}, gen);
    GibbsOptions options;
    options.seed = 17;
    const auto exact = posterior_independent(matrix, p).probs;
    const auto sampled = posterior_gibbs(matrix, p, options).probs;
    for (std::size_t i = 0; i < matrix.rows(); ++i) CHECK(std::abs(exact[i] - sampled[i]) < 0.02);

    const auto zero = posterior_gibbs(matrix, GenerativeParams::zeros(4), options).probs;
    for (double x : zero) CHECK(std::abs(x - 0.5) < 0.05);

    // deterministic given the seed
    CHECK(posterior_gibbs(matrix, p, options).probs == sampled);

    // correlated tiny instances against enumeration over y
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t m = 2 + gen() % 2;
        const auto c = random_pairs(m, 1 + gen() % 2, gen);
        const auto cp = random_params(m, c, gen);
        const auto tiny = oracle::random_matrix(1 + gen() % 5, m, 0.6, gen);
        options.seed = gen();
        const auto probs = posterior_gibbs(tiny, cp, options).probs;
        for (std::size_t i = 0; i < tiny.rows(); ++i)
            CHECK(std::abs(probs[i] - oracle::posterior(oracle::dense(tiny, i), cp)) < 0.02);
    }
}

TEST_CASE("exact log-likelihood") {
    // One all-abstain row with m = 1 and zero weights: 2 of the 6 equally
    // weighted configurations have lambda = 0.
    const auto abstain = LabelMatrix::from_dense({{0}}, 1);
    CHECK(exact_marginal_loglik(abstain, GenerativeParams::zeros(1)) == doctest::Approx(-std::log(3.0)));

    std::mt19937_64 gen(21);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 1 + gen() % 4;
        const auto matrix = oracle::random_matrix(1 + gen() % 8, m, 0.5, gen);
        const auto p = random_params(m, {}, gen, 2.0);
        const double closed = exact_marginal_loglik(matrix, p);
        CHECK(std::abs(closed - oracle::loglik(matrix, p)) < 1e-10);
        for (std::size_t i = 0; i < matrix.rows(); ++i) {
            const auto one = LabelMatrix::from_dense({std::vector<int>(oracle::dense(matrix, i))}, m);
            CHECK(exact_marginal_loglik(one, p) <= 0.0);
        }
        // correlated path enumerates
        const auto c = random_pairs(m, 2, gen);
        if (!c.empty()) {
            const auto cp = random_params(m, c, gen);
            CHECK(std::abs(exact_marginal_loglik(matrix, cp) - oracle::loglik(matrix, cp)) < 1e-10);
        }
    }
    const auto wide = LabelMatrix::from_dense({std::vector<int>(9, 1)}, 9);
    CHECK_THROWS_AS(exact_marginal_loglik(wide, GenerativeParams::zeros(9, CorrelationSet({{0, 1}}, 9))),
                    InfeasibleError);
    CHECK_NOTHROW(exact_marginal_loglik(wide, GenerativeParams::zeros(9)));
}

TEST_CASE("exact gradient matches finite differences") {
    std::mt19937_64 gen(33);
    for (int point = 0; point < 20; ++point) {
        const std::size_t m = 1 + gen() % 6;
        const auto matrix = oracle::random_matrix(40, m, 0.4, gen);
        auto p = random_params(m, {}, gen, 1.5);
        const auto analytic = exact_marginal_loglik_gradient(matrix, p);
        const auto numeric = oracle::finite_difference(
            [&](const std::vector<double>& x) {
                auto q = p;
                q.assign_flat(x);
                return exact_marginal_loglik(matrix, q);
            },
            p.flatten());
        CHECK(oracle::relative_error(analytic, numeric) < 1e-5);
    }
}

TEST_CASE("exact fit recovers planted accuracies") {
    auto config = footnote7_config(10, 10000, 4);
    std::fill(config.accuracies.begin(), config.accuracies.end(), 0.75);
    const auto data = generate(config);
    FitConfig fit;
    const auto params = fit_independent_exact(data.matrix, fit);
    // per-source standard error is near 0.035 in this sparse regime
    double mean = 0.0;
    for (double w : params.acc) {
        CHECK(std::abs(weight_to_accuracy(w) - 0.75) < 0.1);
        mean += weight_to_accuracy(w) / 10.0;
    }
    CHECK(std::abs(mean - 0.75) < 0.03);

    // sharded gradient agrees with the serial fit
    fit.threads = 4;
    const auto sharded = fit_independent_exact(data.matrix, fit);
    for (std::size_t k = 0; k < params.acc.size(); ++k) CHECK(std::abs(sharded.acc[k] - params.acc[k]) < 1e-8);
}

TEST_CASE("exact fit on the correlated-block pathology") {
    const auto data = generate(example4_config(10000, 1));
    const auto params = fit_independent_exact(data.matrix, FitConfig{});
    for (std::size_t j = 0; j < 5; ++j) CHECK(weight_to_accuracy(params.acc[j]) > 0.95);
    for (std::size_t j = 5; j < 10; ++j) CHECK(weight_to_accuracy(params.acc[j]) < 0.60);
}

TEST_CASE("exact fit edge cases") {
    // A lone source that always votes +1 is separable: without l2 the
    // weights climb to the cap.
    const auto same = LabelMatrix::from_dense(std::vector<std::vector<int>>(50, {1}), 1);
    FitConfig fit;
    fit.epochs = 20000;
    fit.l2_reg = 0.0;
    fit.tolerance = 0.0;
    const auto capped = fit_independent_exact(same, fit);
    CHECK(capped.acc[0] == fit.weight_cap);
    CHECK(capped.lab[0] == fit.weight_cap);
    // the default l2 keeps them finite and inside the box
    const auto regularized = fit_independent_exact(same, FitConfig{});
    CHECK(regularized.acc[0] > 0.0);
    CHECK(regularized.acc[0] < fit.weight_cap);

    FitConfig broken;
    broken.init_acc_weight = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(fit_independent_exact(LabelMatrix::from_dense({{1, -1}}, 2), broken),
                         doctest::Contains("epoch 0"), DivergenceError);

    const auto data = generate(footnote7_config(5, 500, 2));
    CHECK(fit_independent_exact(data.matrix, FitConfig{}) == fit_independent_exact(data.matrix, FitConfig{}));
}

TEST_CASE("contrastive divergence") {
    const auto data = generate(footnote7_config(6, 2000, 8));
    FitConfig fit;
    fit.seed = 99;

    fit.epochs = 0;
    const auto untouched = fit_gibbs_sgd(data.matrix, {}, fit);
    for (double w : untouched.acc) CHECK(w == fit.init_acc_weight);

    fit.epochs = 20;
    const auto a = fit_gibbs_sgd(data.matrix, {}, fit);
    const auto b = fit_gibbs_sgd(data.matrix, {}, fit);
    CHECK(a == b);
    fit.seed = 100;
    CHECK_FALSE(fit_gibbs_sgd(data.matrix, {}, fit) == a);
}

TEST_CASE("contrastive divergence finds a planted correlation") {
    // Sources 0 and 1 are exact copies; 2 and 3 are independent.
    const auto data = generate(planted_pairs_config(6, 1, 5000, 0.5, 12));
    const CorrelationSet pairs({{0, 1}, {2, 3}}, 6);
    FitConfig fit;
    fit.seed = 4;
    const auto params = fit_gibbs_sgd(data.matrix, pairs, fit);
    const double planted = params.corr[*pairs.index_of(0, 1)];
    const double control = params.corr[*pairs.index_of(2, 3)];
    CHECK(planted > 0.0);
    CHECK(std::abs(control) < 0.5 * planted);
}

TEST_CASE("model file round trip") {
    std::mt19937_64 gen(77);
    ModelFile model;
    model.params = random_params(4, CorrelationSet({{0, 3}, {1, 2}}, 4), gen, 3.0);
    model.params.acc[1] = 0.1 + 0.2;  // not exactly representable in short decimal
    model.seed = 123456789012345ULL;
    model.epsilon = 0.06;
    std::ostringstream out;
    write_model(out, model);
    std::istringstream in("# comment\n" + out.str());
    const auto back = read_model(in);
    CHECK(back.params == model.params);
    CHECK(back.seed == model.seed);
    CHECK(back.strategy == "GM");
    CHECK(back.epsilon == model.epsilon);

    std::string text = out.str();
    text.replace(text.find("sigma(2w)"), 9, "sigma(w)");
    std::istringstream wrong(text);
    CHECK_THROWS_AS(read_model(wrong), DomainError);
}
