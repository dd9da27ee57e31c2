#include "weaklabel/advantage.hpp"

#include <cmath>
#include <string>

#include "weaklabel/errors.hpp"
#include "weaklabel/numeric.hpp"

namespace weaklabel {

void OptimizerConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw PreconditionError("gamma must lie in [0, 1]");
    if (!(delta > 0.0 && delta <= 0.5)) throw PreconditionError("delta must lie in (0, 0.5]");
    if (!(w_min > 0.0 && w_min <= w_bar && w_bar <= w_max))
        throw PreconditionError("weight range must satisfy 0 < w_min <= w_bar <= w_max");
}

double majority_vote(std::span<const Label> row) {
    double f = 0.0;
    for (const Label v : row) f += v;
    return f;
}

double majority_vote(std::span<const Entry> row) {
    double f = 0.0;
    for (const auto& e : row) f += e.label;
    return f;
}

double weighted_vote(std::span<const Label> row, std::span<const double> weights) {
    if (row.size() != weights.size())
        throw DimensionError("row has " + std::to_string(row.size()) + " sources but " +
                             std::to_string(weights.size()) + " weights were given");
    double f = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) f += weights[j] * row[j];
    return f;
}

double weighted_vote(std::span<const Entry> row, std::span<const double> weights) {
    double f = 0.0;
    for (const auto& e : row) f += weights[e.col] * e.label;
    return f;
}

double empirical_advantage(const LabelMatrix& matrix, const GoldLabels& gold, std::span<const double> weights) {
    check_aligned(matrix, gold);
    if (weights.size() != matrix.cols())
        throw DimensionError("got " + std::to_string(weights.size()) + " weights for " +
                             std::to_string(matrix.cols()) + " sources");
    const std::size_t n = matrix.rows();
    if (n == 0) throw EmptyMatrixError("advantage of an empty matrix");
    long long net = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = matrix.row(i);
        const double y = gold[i];
        const bool weighted_right = y * weighted_vote(row, weights) > 0.0;
        const bool majority_right = y * majority_vote(row) > 0.0;
        net += (weighted_right && !majority_right) - (!weighted_right && majority_right);
    }
    return static_cast<double>(net) / static_cast<double>(n);
}

double advantage_bound(const LabelMatrix& matrix, const OptimizerConfig& config) {
    config.validate();
    const std::size_t n = matrix.rows();
    if (n == 0) throw EmptyMatrixError("advantage bound of an empty matrix");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = matrix.row(i);
        const auto counts = class_counts(row);
        const double f1 = majority_vote(row);
        for (const int y : {1, -1}) {
            if (y * f1 > 0.0) continue;
            const double c_y = static_cast<double>(y > 0 ? counts.positive : counts.negative);
            const double c_other = static_cast<double>(y > 0 ? counts.negative : counts.positive);
            if (!(c_y * config.w_max > c_other * config.w_min)) continue;
            total += sigmoid(2.0 * config.w_bar * f1 * y);
        }
    }
    return total / static_cast<double>(n);
}

double low_density_bound(double d_bar, double alpha_bar) {
    if (d_bar < 0.0) throw PreconditionError("label density must be nonnegative");
    return d_bar * d_bar * alpha_bar * (1.0 - alpha_bar);
}

double high_density_bound(double d_bar, double propensity, double alpha_bar) {
    if (!(alpha_bar > 0.5)) throw PreconditionError("high-density bound requires mean accuracy > 0.5");
    if (!(propensity > 0.0 && propensity <= 1.0)) throw PreconditionError("propensity must lie in (0, 1]");
    const double gap = alpha_bar - 0.5;
    return std::exp(-2.0 * propensity * gap * gap * d_bar);
}

bool prefers_majority_vote(double bound, double gamma) { return bound < gamma; }

StrategyDecision optimize_strategy(const LabelMatrix& matrix, const OptimizerConfig& config,
                                   const FitConfig& fit_config, const SweepOptions& sweep_options) {
    StrategyDecision decision;
    decision.bound = advantage_bound(matrix, config);
    if (prefers_majority_vote(decision.bound, config.gamma)) {
        decision.strategy = MajorityVote{};
        return decision;
    }
    auto result = sweep(matrix, config.delta, fit_config, sweep_options);
    const auto& chosen = result.chosen();
    decision.strategy = GenerativeModelStrategy{result.chosen_epsilon, chosen.selected};
    decision.sweep = std::move(result);
    return decision;
}

ModelingStrategy choose_strategy(const LabelMatrix& matrix, const OptimizerConfig& config, const FitConfig& fit_config,
                                 const SweepOptions& sweep_options) {
    return optimize_strategy(matrix, config, fit_config, sweep_options).strategy;
}

ClassificationMetrics classification_metrics(std::span<const double> scores, std::span<const Label> gold) {
    if (scores.size() != gold.size())
        throw DimensionError("got " + std::to_string(scores.size()) + " scores for " + std::to_string(gold.size()) +
                             " gold labels");
    std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] > 0.0;
        const bool actual = gold[i] > 0;
        tp += predicted && actual;
        fp += predicted && !actual;
        fn += !predicted && actual;
        correct += predicted == actual;
    }
    ClassificationMetrics m;
    m.count = scores.size();
    if (m.count) m.accuracy = static_cast<double>(correct) / static_cast<double>(m.count);
    m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

}  // namespace weaklabel
