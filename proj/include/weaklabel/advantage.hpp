#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "weaklabel/generative_model.hpp"
#include "weaklabel/label_matrix.hpp"
#include "weaklabel/structure_learning.hpp"

namespace weaklabel {

struct OptimizerConfig {
    double gamma = 0.01;  // advantage tolerance, as a fraction
    double delta = 0.02;  // structure search resolution
    double w_min = 0.5;
    double w_bar = 1.0;
    double w_max = 1.5;

    void validate() const;
};

struct MajorityVote {
    friend bool operator==(const MajorityVote&, const MajorityVote&) = default;
};

struct GenerativeModelStrategy {
    double epsilon = 0.0;
    CorrelationSet correlations;

    friend bool operator==(const GenerativeModelStrategy&, const GenerativeModelStrategy&) = default;
};

using ModelingStrategy = std::variant<MajorityVote, GenerativeModelStrategy>;

inline bool is_majority_vote(const ModelingStrategy& s) { return std::holds_alternative<MajorityVote>(s); }

struct AdvantageReport {
    double empirical_advantage = 0.0;            // A_w
    std::optional<double> optimal_advantage;     // A*, synthetic truth only
    double bound = 0.0;                          // A~*
    std::optional<double> low_density_bound;     // synthetic truth only
    std::optional<double> high_density_bound;    // synthetic truth only
};

// f_1 = sum_j lambda_j; 0 is a tie.
double majority_vote(std::span<const Label> row);
double majority_vote(std::span<const Entry> row);

// f_w = sum_j w_j lambda_j.
double weighted_vote(std::span<const Label> row, std::span<const double> weights);
double weighted_vote(std::span<const Entry> row, std::span<const double> weights);

// Net fraction of rows where the weighted vote is right and majority vote is
// not (score <= 0 counts as wrong), minus the reverse.
double empirical_advantage(const LabelMatrix& matrix, const GoldLabels& gold, std::span<const double> weights);

// Optimizer bound A~*(Lambda) with Phi(row, y) = 1{c_y w_max > c_-y w_min}.
double advantage_bound(const LabelMatrix& matrix, const OptimizerConfig& config);

// d^2 * alpha * (1 - alpha).
double low_density_bound(double d_bar, double alpha_bar);

// exp(-2 p_l (alpha - 1/2)^2 d). Requires alpha_bar > 0.5 and p_l in (0, 1].
double high_density_bound(double d_bar, double propensity, double alpha_bar);

// MajorityVote iff bound < gamma.
bool prefers_majority_vote(double bound, double gamma);

ModelingStrategy choose_strategy(const LabelMatrix& matrix, const OptimizerConfig& config, const FitConfig& fit_config,
                                 const SweepOptions& sweep_options = {});

// Full optimizer output: the bound, the decision and (for GM) the sweep.
struct StrategyDecision {
    double bound = 0.0;
    ModelingStrategy strategy;
    std::optional<SweepResult> sweep;
};

StrategyDecision optimize_strategy(const LabelMatrix& matrix, const OptimizerConfig& config,
                                   const FitConfig& fit_config, const SweepOptions& sweep_options = {});

// Classification metrics of scores against gold. A score <= 0 is predicted
// negative, so abstentions and ties count as negatives.
struct ClassificationMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t count = 0;
};

ClassificationMetrics classification_metrics(std::span<const double> scores, std::span<const Label> gold);

}  // namespace weaklabel
