#include "weaklabel/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "parallel.hpp"
#include "weaklabel/advantage.hpp"
#include "weaklabel/errors.hpp"
#include "weaklabel/io_util.hpp"
#include "weaklabel/numeric.hpp"
#include "weaklabel/rng.hpp"

namespace weaklabel {

void SynthConfig::validate() const {
    if (accuracies.size() != m)
        throw DimensionError("synthetic config has " + std::to_string(accuracies.size()) + " accuracies for " +
                             std::to_string(m) + " sources");
    if (!(propensity > 0.0 && propensity <= 1.0)) throw PreconditionError("propensity must lie in (0, 1]");
    if (!(class_balance >= 0.0 && class_balance <= 1.0)) throw PreconditionError("class balance must lie in [0, 1]");
    for (double a : accuracies)
        if (!(a >= 0.0 && a <= 1.0)) throw PreconditionError("accuracies must lie in [0, 1]");
    std::vector<bool> seen(m, false);
    for (const auto& group : duplicate_groups) {
        for (const auto j : group) {
            if (j >= m) throw DomainError("duplicate group references source " + std::to_string(j));
            if (seen[j]) throw DuplicateError("source " + std::to_string(j) + " is in two duplicate groups");
            seen[j] = true;
        }
    }
}

double propensity_weight(double propensity, double acc_weight, double cap) {
    if (propensity >= 1.0) return cap;
    if (propensity <= 0.0) return -cap;
    const double logit = std::log(propensity / (1.0 - propensity));
    return std::clamp(logit - log1p_exp(2.0 * acc_weight), -cap, cap);
}

SynthData generate(const SynthConfig& config) {
    config.validate();
    const std::size_t n = config.n, m = config.m;

    // leader[j] = source whose draw j copies (itself when independent).
    std::vector<std::size_t> leader(m);
    for (std::size_t j = 0; j < m; ++j) leader[j] = j;
    for (const auto& group : config.duplicate_groups)
        for (const auto j : group) leader[j] = group.front();

    Rng rng(config.seed);
    std::vector<Label> gold(n);
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(static_cast<double>(n * m) * config.propensity * 1.1) + 16);
    std::vector<Label> row(m);
    for (std::size_t i = 0; i < n; ++i) {
        const Label y = rng.bernoulli(config.class_balance) ? 1 : -1;
        gold[i] = y;
        for (std::size_t j = 0; j < m; ++j) {
            if (leader[j] != j) continue;
            if (!rng.bernoulli(config.propensity)) {
                row[j] = 0;
                continue;
            }
            row[j] = rng.bernoulli(config.accuracies[j]) ? y : static_cast<Label>(-y);
        }
        for (std::size_t j = 0; j < m; ++j) {
            const Label v = row[leader[j]];
            if (v != 0) entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), v});
        }
    }

    SynthData data;
    data.matrix = LabelMatrix(n, m, std::move(entries));
    data.gold = GoldLabels(std::move(gold));
    const double cap = FitConfig{}.weight_cap;
    data.true_params = GenerativeParams::zeros(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double acc = std::clamp(accuracy_to_weight(config.accuracies[j]), -cap, cap);
        data.true_params.acc[j] = acc;
        data.true_params.lab[j] = propensity_weight(config.propensity, acc, cap);
    }
    return data;
}

namespace {

std::vector<double> uniform_accuracies(std::size_t m, double low, double high, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> acc(m);
    for (auto& a : acc) a = low + (high - low) * rng.uniform();
    return acc;
}

}  // namespace

SynthConfig footnote7_config(std::size_t m, std::size_t n, std::uint64_t seed) {
    SynthConfig c;
    c.n = n;
    c.m = m;
    c.propensity = 0.1;
    c.accuracies = uniform_accuracies(m, 0.6, 0.9, derive_seed(seed, 7));
    c.seed = seed;
    return c;
}

SynthConfig example4_config(std::size_t n, std::uint64_t seed) {
    SynthConfig c;
    c.n = n;
    c.m = 10;
    c.propensity = 1.0;
    c.accuracies.assign(10, 0.99);
    std::fill(c.accuracies.begin(), c.accuracies.begin() + 5, 0.5);
    c.duplicate_groups = {{0, 1, 2, 3, 4}};
    c.seed = seed;
    return c;
}

SynthConfig planted_pairs_config(std::size_t m, std::size_t planted_pairs, std::size_t n, double propensity,
                                 std::uint64_t seed) {
    if (2 * planted_pairs > m) throw PreconditionError("too many planted pairs for " + std::to_string(m) + " sources");
    SynthConfig c;
    c.n = n;
    c.m = m;
    c.propensity = propensity;
    c.accuracies = uniform_accuracies(m, 0.6, 0.9, derive_seed(seed, 11));
    for (std::size_t p = 0; p < planted_pairs; ++p) c.duplicate_groups.push_back({2 * p, 2 * p + 1});
    c.seed = seed;
    return c;
}

void write_truth(std::ostream& out, const SynthConfig& config, const GenerativeParams& true_params) {
    out << "convention=" << kWeightConvention << '\n';
    out << "n=" << config.n << '\n';
    out << "m=" << config.m << '\n';
    out << "propensity=" << io::format_double(config.propensity) << '\n';
    out << "class_balance=" << io::format_double(config.class_balance) << '\n';
    out << "seed=" << config.seed << '\n';
    out << "accuracies=" << io::join_doubles(config.accuracies) << '\n';
    out << "duplicate_groups=";
    for (std::size_t g = 0; g < config.duplicate_groups.size(); ++g) {
        if (g) out << ';';
        const auto& group = config.duplicate_groups[g];
        for (std::size_t k = 0; k < group.size(); ++k) out << (k ? "-" : "") << group[k];
    }
    out << '\n';
    out << "lab=" << io::join_doubles(true_params.lab) << '\n';
    out << "acc=" << io::join_doubles(true_params.acc) << '\n';
}

std::vector<std::size_t> default_fig3_m_values() {
    std::vector<std::size_t> values;
    for (std::size_t m = 1; m <= 100; m += 3) values.push_back(m);
    return values;
}

namespace {

MonteCarlo summarize(const std::vector<double>& xs) {
    MonteCarlo mc;
    if (xs.empty()) return mc;
    double sum = 0.0;
    for (double x : xs) sum += x;
    mc.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - mc.mean) * (x - mc.mean);
        const double variance = ss / static_cast<double>(xs.size() - 1);
        mc.standard_error = std::sqrt(variance / static_cast<double>(xs.size()));
    }
    return mc;
}

}  // namespace

std::vector<Fig3Row> fig3_grid(const Fig3Config& config) {
    const OptimizerConfig optimizer;
    std::vector<Fig3Row> rows;
    for (const std::size_t m : config.m_values) {
        const std::size_t t = config.trials;
        std::vector<double> optimal(t), learned(t), bound(t), low(t), high(t);
        detail::for_each_shard(t, config.threads, [&](unsigned, std::size_t begin, std::size_t end) {
            for (std::size_t trial = begin; trial < end; ++trial) {
                const std::uint64_t seed = derive_seed(config.seed, m, trial);
                SynthConfig synth;
                synth.n = config.n;
                synth.m = m;
                synth.propensity = config.propensity;
                synth.accuracies = uniform_accuracies(m, config.accuracy_low, config.accuracy_high, mix64(seed));
                synth.seed = seed;
                const auto data = generate(synth);

                optimal[trial] = empirical_advantage(data.matrix, data.gold, data.true_params.acc);
                if (config.fit_learned) {
                    FitConfig fit = config.fit;
                    fit.threads = 1;
                    const auto params = fit_independent_exact(data.matrix, fit);
                    learned[trial] = empirical_advantage(data.matrix, data.gold, params.acc);
                }
                bound[trial] = advantage_bound(data.matrix, optimizer);

                double alpha = 0.0;
                for (double a : synth.accuracies) alpha += a;
                alpha /= static_cast<double>(m);
                const double density = static_cast<double>(m) * config.propensity;
                low[trial] = low_density_bound(density, alpha);
                high[trial] = high_density_bound(density, config.propensity, alpha);
            }
        });
        Fig3Row row;
        row.m = m;
        row.expected_density = static_cast<double>(m) * config.propensity;
        row.optimal_advantage = summarize(optimal);
        if (config.fit_learned) row.learned_advantage = summarize(learned);
        row.bound = summarize(bound);
        row.low_density_bound = summarize(low);
        row.high_density_bound = summarize(high);
        rows.push_back(row);
    }
    return rows;
}

CoverageScenario generate_coverage_scenario(const CoverageScenarioConfig& config) {
    if (config.d < 2) throw PreconditionError("coverage scenario needs at least 2 features");
    const std::size_t n = config.n, m = config.m, d = config.d;
    const auto accuracies = uniform_accuracies(m, config.accuracy_low, config.accuracy_high, derive_seed(config.seed, 5));

    Rng rng(config.seed);
    std::vector<Label> gold(n);
    std::vector<double> values(n * d);
    std::vector<Entry> entries;
    CoverageScenario out;
    for (std::size_t i = 0; i < n; ++i) {
        const Label y = rng.bernoulli(0.5) ? 1 : -1;
        gold[i] = y;
        double* x = values.data() + i * d;
        x[0] = y * config.separation + rng.normal();
        for (std::size_t k = 1; k < d; ++k) x[k] = rng.normal();
        const bool covered = x[1] <= config.coverage_threshold;
        if (!covered) out.uncovered.push_back(i);
        for (std::size_t j = 0; j < m; ++j) {
            // Draws are consumed whether or not the row is covered.
            const bool votes = rng.bernoulli(config.propensity);
            const bool correct = rng.bernoulli(accuracies[j]);
            if (covered && votes)
                entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                   correct ? y : static_cast<Label>(-y)});
        }
    }
    out.matrix = LabelMatrix(n, m, std::move(entries));
    out.gold = GoldLabels(std::move(gold));
    out.features = FeatureSet(n, d, std::move(values));
    return out;
}

}  // namespace weaklabel
