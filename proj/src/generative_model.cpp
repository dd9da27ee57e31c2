#include "weaklabel/generative_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <string>

#include "parallel.hpp"
#include "weaklabel/errors.hpp"
#include "weaklabel/io_util.hpp"
#include "weaklabel/numeric.hpp"
#include "weaklabel/rng.hpp"

namespace weaklabel {

// ---------------------------------------------------------------------------
// CorrelationSet

CorrelationSet::CorrelationSet(std::vector<Pair> pairs, std::size_t m) {
    for (auto& [j, k] : pairs) {
        if (j == k) throw DomainError("correlation pair (" + std::to_string(j) + ", " + std::to_string(k) +
                                      ") pairs a source with itself");
        if (j >= m || k >= m)
            throw DomainError("correlation pair (" + std::to_string(j) + ", " + std::to_string(k) +
                              ") references a source >= " + std::to_string(m));
        if (j > k) std::swap(j, k);
    }
    std::sort(pairs.begin(), pairs.end());
    const auto dup = std::adjacent_find(pairs.begin(), pairs.end());
    if (dup != pairs.end())
        throw DuplicateError("correlation pair (" + std::to_string(dup->first) + ", " +
                             std::to_string(dup->second) + ") listed twice");
    pairs_ = std::move(pairs);
}

CorrelationSet CorrelationSet::all_pairs(std::size_t m) {
    std::vector<Pair> pairs;
    for (std::uint32_t j = 0; j < m; ++j)
        for (std::uint32_t k = j + 1; k < m; ++k) pairs.emplace_back(j, k);
    return CorrelationSet(std::move(pairs), m);
}

std::optional<std::size_t> CorrelationSet::index_of(std::size_t j, std::size_t k) const {
    if (j > k) std::swap(j, k);
    const Pair key{static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(k)};
    const auto it = std::lower_bound(pairs_.begin(), pairs_.end(), key);
    if (it == pairs_.end() || *it != key) return std::nullopt;
    return static_cast<std::size_t>(it - pairs_.begin());
}

// ---------------------------------------------------------------------------
// GenerativeParams

GenerativeParams GenerativeParams::zeros(std::size_t m, CorrelationSet correlations) {
    GenerativeParams p;
    p.lab.assign(m, 0.0);
    p.acc.assign(m, 0.0);
    p.corr.assign(correlations.size(), 0.0);
    p.correlations = std::move(correlations);
    return p;
}

GenerativeParams GenerativeParams::initial(std::size_t m, CorrelationSet correlations, double init_acc_weight) {
    auto p = zeros(m, std::move(correlations));
    std::fill(p.acc.begin(), p.acc.end(), init_acc_weight);
    return p;
}

std::vector<double> GenerativeParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(size());
    flat.insert(flat.end(), lab.begin(), lab.end());
    flat.insert(flat.end(), acc.begin(), acc.end());
    flat.insert(flat.end(), corr.begin(), corr.end());
    return flat;
}

void GenerativeParams::assign_flat(std::span<const double> flat) {
    if (flat.size() != size())
        throw DimensionError("flat parameter vector has " + std::to_string(flat.size()) + " entries, expected " +
                             std::to_string(size()));
    auto it = flat.begin();
    std::copy_n(it, lab.size(), lab.begin());
    it += static_cast<std::ptrdiff_t>(lab.size());
    std::copy_n(it, acc.size(), acc.begin());
    it += static_cast<std::ptrdiff_t>(acc.size());
    std::copy_n(it, corr.size(), corr.begin());
}

void FitConfig::validate() const {
    if (epochs < 0) throw PreconditionError("epochs must be >= 0");
    if (!(step_size > 0.0)) throw PreconditionError("step size must be positive");
    if (gibbs_steps < 1) throw PreconditionError("gibbs steps must be >= 1");
    if (batch_size < 1) throw PreconditionError("batch size must be >= 1");
    if (!(l2_reg >= 0.0)) throw PreconditionError("l2 regularization must be nonnegative");
    if (!(weight_cap > 0.0)) throw PreconditionError("weight cap must be positive");
}

double weight_to_accuracy(double w) { return sigmoid(2.0 * w); }

double accuracy_to_weight(double accuracy) { return 0.5 * std::log(accuracy / (1.0 - accuracy)); }

std::vector<double> factor_values(std::span<const Label> row, Label y, const CorrelationSet& correlations) {
    const std::size_t m = row.size();
    std::vector<double> phi(2 * m + correlations.size(), 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        phi[j] = row[j] != 0;
        phi[m + j] = row[j] == y;
    }
    for (std::size_t p = 0; p < correlations.size(); ++p) {
        const auto [j, k] = correlations.pairs()[p];
        phi[2 * m + p] = row[j] == row[k];
    }
    return phi;
}

namespace {

void require_independent(const GenerativeParams& params, const char* what) {
    if (!params.correlations.empty())
        throw PreconditionError(std::string(what) + " requires an empty correlation set");
}

void require_width(const LabelMatrix& matrix, const GenerativeParams& params) {
    if (matrix.cols() != params.num_sources())
        throw DimensionError("matrix has " + std::to_string(matrix.cols()) + " sources but the model has " +
                             std::to_string(params.num_sources()));
}

// Accuracy weights at config.init_acc_weight, correlation weights at 0 and each
// propensity weight matched to the source's observed vote rate.
GenerativeParams starting_params(const LabelMatrix& matrix, CorrelationSet correlations, const FitConfig& config) {
    const std::size_t m = matrix.cols();
    auto params = GenerativeParams::initial(m, std::move(correlations), config.init_acc_weight);
    if (matrix.rows() == 0) return params;
    std::vector<std::size_t> votes(m, 0);
    for (const auto& e : matrix.entries()) ++votes[e.col];
    const double dn = static_cast<double>(matrix.rows());
    for (std::size_t j = 0; j < m; ++j) {
        const double rate = static_cast<double>(votes[j]) / dn;
        const double cap = config.weight_cap;
        // Vote rate -> lab weight under the independent model.
        double lab = rate >= 1.0 ? cap : rate <= 0.0 ? -cap
                   : std::log(rate / (1.0 - rate)) - log1p_exp(2.0 * config.init_acc_weight);
        params.lab[j] = std::clamp(lab, -cap, cap);
    }
    return params;
}

// f_w(Lambda_i) = sum_j acc_j * lambda_ij.
double weighted_vote(std::span<const Entry> row, const std::vector<double>& acc) {
    double f = 0.0;
    for (const auto& e : row) f += acc[e.col] * e.label;
    return f;
}

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Energy of a dense configuration under the full model.
double energy(std::span<const Label> row, Label y, const GenerativeParams& params) {
    double e = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] != 0) e += params.lab[j];
        if (row[j] == y) e += 2.0 * params.acc[j];
    }
    const auto& pairs = params.correlations.pairs();
    for (std::size_t p = 0; p < pairs.size(); ++p)
        if (row[pairs[p].first] == row[pairs[p].second]) e += params.corr[p];
    return e;
}

// log of the per-row normalizer: sum over all (lambda, y) of exp(energy).
double enumerated_log_partition(const GenerativeParams& params) {
    const std::size_t m = params.num_sources();
    std::vector<Label> row(m, -1);
    double log_z = -INFINITY;
    while (true) {
        log_z = log_sum_exp(log_z, log_sum_exp(energy(row, 1, params), energy(row, -1, params)));
        std::size_t j = 0;
        while (j < m && row[j] == 1) row[j++] = -1;
        if (j == m) break;
        ++row[j];
    }
    return log_z;
}

// log z_j = log sum_{lambda} exp(lab_j 1{lambda != 0} + 2 acc_j 1{lambda = y}); independent of y.
double log_source_partition(double lab, double acc) { return log1p_exp(lab + log1p_exp(2.0 * acc)); }

}  // namespace

ProbLabels posterior_independent(const LabelMatrix& matrix, const GenerativeParams& params) {
    require_independent(params, "posterior_independent");
    require_width(matrix, params);
    ProbLabels out;
    out.probs.resize(matrix.rows());
    for (std::size_t i = 0; i < matrix.rows(); ++i)
        out.probs[i] = sigmoid(2.0 * weighted_vote(matrix.row(i), params.acc));
    return out;
}

ProbLabels posterior_gibbs(const LabelMatrix& matrix, const GenerativeParams& params, const GibbsOptions& options) {
    require_width(matrix, params);
    if (options.samples < 1) throw PreconditionError("posterior_gibbs needs at least one sample");
    // Lambda is observed and every correlation factor involves only Lambda, so
    // the full conditional of y_i given everything else is
    // sigmoid(2 f_w(Lambda_i)). A sweep resamples each y_i from it.
    const std::size_t n = matrix.rows();
    std::vector<double> conditional(n);
    for (std::size_t i = 0; i < n; ++i) conditional[i] = sigmoid(2.0 * weighted_vote(matrix.row(i), params.acc));

    Rng rng(options.seed);
    std::vector<std::size_t> positives(n, 0);
    std::vector<Label> state(n, 1);
    for (std::size_t sweep = 0; sweep < options.burn_in + options.samples; ++sweep) {
        for (std::size_t i = 0; i < n; ++i) state[i] = rng.bernoulli(conditional[i]) ? 1 : -1;
        if (sweep >= options.burn_in)
            for (std::size_t i = 0; i < n; ++i) positives[i] += state[i] == 1;
    }
    ProbLabels out;
    out.probs.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.probs[i] = static_cast<double>(positives[i]) / static_cast<double>(options.samples);
    return out;
}

double exact_marginal_loglik(const LabelMatrix& matrix, const GenerativeParams& params, unsigned threads) {
    require_width(matrix, params);
    const std::size_t n = matrix.rows();
    const std::size_t m = matrix.cols();

    if (!params.correlations.empty()) {
        if (m > kMaxEnumeratedSources)
            throw InfeasibleError("exact likelihood with correlations enumerates 3^m configurations; m = " +
                                  std::to_string(m) + " exceeds " + std::to_string(kMaxEnumeratedSources));
        const double log_z = enumerated_log_partition(params);
        double total = 0.0;
        std::vector<Label> row(m);
        for (std::size_t i = 0; i < n; ++i) {
            matrix.fill_dense_row(i, row);
            total += log_sum_exp(energy(row, 1, params), energy(row, -1, params)) - log_z;
        }
        return total;
    }

    double log_z = std::log(2.0);
    for (std::size_t j = 0; j < m; ++j) log_z += log_source_partition(params.lab[j], params.acc[j]);

    const unsigned shards = std::max(1u, threads);
    std::vector<double> partial(shards, 0.0);
    detail::for_each_shard(n, shards, [&](unsigned s, std::size_t begin, std::size_t end) {
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            double lab = 0.0, pos = 0.0, neg = 0.0;
            for (const auto& e : matrix.row(i)) {
                lab += params.lab[e.col];
                (e.label > 0 ? pos : neg) += 2.0 * params.acc[e.col];
            }
            sum += lab + log_sum_exp(pos, neg);
        }
        partial[s] = sum;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total - static_cast<double>(n) * log_z;
}

std::vector<double> exact_marginal_loglik_gradient(const LabelMatrix& matrix, const GenerativeParams& params,
                                                   unsigned threads) {
    require_independent(params, "exact_marginal_loglik_gradient");
    require_width(matrix, params);
    const std::size_t n = matrix.rows();
    const std::size_t m = matrix.cols();

    // Per column: number of votes and sum of posterior agreement P(y = lambda_ij).
    const unsigned shards = std::max(1u, threads);
    std::vector<std::vector<double>> votes(shards, std::vector<double>(m, 0.0));
    std::vector<std::vector<double>> agree(shards, std::vector<double>(m, 0.0));
    detail::for_each_shard(n, shards, [&](unsigned s, std::size_t begin, std::size_t end) {
        auto& v = votes[s];
        auto& a = agree[s];
        for (std::size_t i = begin; i < end; ++i) {
            const auto row = matrix.row(i);
            const double f = weighted_vote(row, params.acc);
            for (const auto& e : row) {
                v[e.col] += 1.0;
                a[e.col] += sigmoid(2.0 * f * e.label);
            }
        }
    });

    const double dn = static_cast<double>(n);
    std::vector<double> grad(2 * m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        double count = 0.0, agreement = 0.0;
        for (unsigned s = 0; s < shards; ++s) {
            count += votes[s][j];
            agreement += agree[s][j];
        }
        const double vote_prob = sigmoid(params.lab[j] + log1p_exp(2.0 * params.acc[j]));
        grad[j] = count - dn * vote_prob;
        grad[m + j] = 2.0 * agreement - 2.0 * dn * vote_prob * sigmoid(2.0 * params.acc[j]);
    }
    return grad;
}

GenerativeParams fit_independent_exact(const LabelMatrix& matrix, const FitConfig& config) {
    config.validate();
    const std::size_t n = matrix.rows();
    const std::size_t m = matrix.cols();
    if (n == 0) throw EmptyMatrixError("cannot fit a model to a matrix with no rows");

    auto params = starting_params(matrix, {}, config);
    const double dn = static_cast<double>(n);
    const double cap = config.weight_cap;

    auto objective = [&](const GenerativeParams& p) {
        const auto w = p.flatten();
        const double penalty = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
        return exact_marginal_loglik(matrix, p, config.threads) / dn - config.l2_reg * penalty;
    };
    auto gradient = [&](const GenerativeParams& p) {
        auto g = exact_marginal_loglik_gradient(matrix, p, config.threads);
        const auto w = p.flatten();
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = g[k] / dn - 2.0 * config.l2_reg * w[k];
        return g;
    };

    double value = objective(params);
    if (!std::isfinite(value)) throw DivergenceError("non-finite objective at epoch 0 (initial weights)");
    double step = config.step_size;
    auto w = params.flatten();
    GenerativeParams trial = params;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto g = gradient(params);
        if (!all_finite(g)) throw DivergenceError("non-finite gradient at epoch " + std::to_string(epoch));

        double worst = 0.0;  // projected gradient norm
        for (std::size_t k = 0; k < g.size(); ++k) {
            const bool pinned = (w[k] >= cap && g[k] > 0.0) || (w[k] <= -cap && g[k] < 0.0);
            if (!pinned) worst = std::max(worst, std::abs(g[k]));
        }
        if (worst < config.tolerance) break;

        // Armijo backtracking on the box-projected step.
        bool accepted = false;
        std::vector<double> candidate(w.size());
        while (step > 1e-14) {
            double ascent = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) {
                candidate[k] = std::clamp(w[k] + step * g[k], -cap, cap);
                ascent += g[k] * (candidate[k] - w[k]);
            }
            trial.assign_flat(candidate);
            const double next = objective(trial);
            if (!std::isfinite(next)) throw DivergenceError("non-finite objective at epoch " + std::to_string(epoch));
            if (next >= value + 1e-4 * ascent) {
                value = next;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        w = candidate;
        params = trial;
        step = std::min(step * 2.0, 1e3);
    }
    return params;
}

namespace {

// Source-to-pair adjacency for the correlation factors.
struct Neighbor {
    std::uint32_t source;
    std::uint32_t pair;
};

std::vector<std::vector<Neighbor>> adjacency(const CorrelationSet& correlations, std::size_t m) {
    std::vector<std::vector<Neighbor>> adj(m);
    const auto& pairs = correlations.pairs();
    for (std::uint32_t p = 0; p < pairs.size(); ++p) {
        adj[pairs[p].first].push_back({pairs[p].second, p});
        adj[pairs[p].second].push_back({pairs[p].first, p});
    }
    return adj;
}

void accumulate_factors(std::span<const Label> row, Label y, const CorrelationSet& correlations, double sign,
                        std::vector<double>& into) {
    const std::size_t m = row.size();
    for (std::size_t j = 0; j < m; ++j) {
        if (row[j] != 0) into[j] += sign;
        if (row[j] == y) into[m + j] += sign;
    }
    const auto& pairs = correlations.pairs();
    for (std::size_t p = 0; p < pairs.size(); ++p)
        if (row[pairs[p].first] == row[pairs[p].second]) into[2 * m + p] += sign;
}

Label sample_class(std::span<const Label> row, const std::vector<double>& acc, Rng& rng) {
    double f = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) f += acc[j] * row[j];
    return rng.bernoulli(sigmoid(2.0 * f)) ? 1 : -1;
}

// One Gibbs sweep over (y, lambda_0, ..., lambda_{m-1}).
void gibbs_sweep(std::vector<Label>& row, Label& y, const GenerativeParams& params,
                 const std::vector<std::vector<Neighbor>>& adj, Rng& rng) {
    y = sample_class(row, params.acc, rng);
    for (std::size_t j = 0; j < row.size(); ++j) {
        // Energies for lambda_j = -1, 0, +1.
        std::array<double, 3> e{0.0, 0.0, 0.0};
        e[0] = params.lab[j] + (y == -1 ? 2.0 * params.acc[j] : 0.0);
        e[2] = params.lab[j] + (y == 1 ? 2.0 * params.acc[j] : 0.0);
        for (const auto& nb : adj[j]) e[row[nb.source] + 1] += params.corr[nb.pair];
        const double hi = std::max({e[0], e[1], e[2]});
        const double p0 = std::exp(e[0] - hi), p1 = std::exp(e[1] - hi), p2 = std::exp(e[2] - hi);
        const double u = rng.uniform() * (p0 + p1 + p2);
        row[j] = u < p0 ? Label{-1} : (u < p0 + p1 ? Label{0} : Label{1});
    }
}

}  // namespace

GenerativeParams fit_gibbs_sgd(const LabelMatrix& matrix, const CorrelationSet& correlations,
                               const FitConfig& config) {
    config.validate();
    const std::size_t n = matrix.rows();
    const std::size_t m = matrix.cols();
    for (const auto& [j, k] : correlations.pairs())
        if (k >= m) throw DimensionError("correlation pair references source " + std::to_string(k) + " >= " +
                                         std::to_string(m));

    auto params = starting_params(matrix, correlations, config);
    if (config.epochs == 0 || n == 0) return params;

    const auto adj = adjacency(correlations, m);
    const double cap = config.weight_cap;
    Rng rng(config.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<double> grad(params.size());
    std::vector<Label> observed(m), sample(m);
    auto w = params.flatten();

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double step = config.decay ? config.step_size / std::sqrt(epoch + 1.0) : config.step_size;
        rng.shuffle(order.begin(), order.end());
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t b = start; b < stop; ++b) {
                matrix.fill_dense_row(order[b], observed);
                const Label y = sample_class(observed, params.acc, rng);
                accumulate_factors(observed, y, correlations, +1.0, grad);

                sample = observed;
                Label sample_y = y;
                for (int s = 0; s < config.gibbs_steps; ++s) gibbs_sweep(sample, sample_y, params, adj, rng);
                accumulate_factors(sample, sample_y, correlations, -1.0, grad);
            }
            const double scale = 1.0 / static_cast<double>(stop - start);
            for (std::size_t k = 0; k < w.size(); ++k) {
                // The accuracy factor enters the energy with coefficient 2.
                const double factor_scale = (k >= m && k < 2 * m) ? 2.0 : 1.0;
                const double g = factor_scale * grad[k] * scale - 2.0 * config.l2_reg * w[k];
                w[k] = std::clamp(w[k] + step * g, -cap, cap);
            }
            if (!all_finite(w)) throw DivergenceError("non-finite weights at epoch " + std::to_string(epoch));
            params.assign_flat(w);
        }
    }
    return params;
}

// ---------------------------------------------------------------------------
// Model file

namespace {

std::string format_pairs(const CorrelationSet& correlations) {
    std::string out;
    for (const auto& [j, k] : correlations.pairs()) {
        if (!out.empty()) out.push_back(';');
        out += std::to_string(j) + "-" + std::to_string(k);
    }
    return out;
}

}  // namespace

void write_model(std::ostream& out, const ModelFile& model) {
    const auto& p = model.params;
    out << "convention=" << kWeightConvention << '\n';
    out << "m=" << p.num_sources() << '\n';
    out << "seed=" << model.seed << '\n';
    out << "strategy=" << model.strategy << '\n';
    out << "epsilon=" << (model.epsilon ? io::format_double(*model.epsilon) : std::string("none")) << '\n';
    out << "correlations=" << format_pairs(p.correlations) << '\n';
    out << "lab=" << io::join_doubles(p.lab) << '\n';
    out << "acc=" << io::join_doubles(p.acc) << '\n';
    out << "corr=" << io::join_doubles(p.corr) << '\n';
}

ModelFile read_model(std::istream& in) {
    std::map<std::string, std::pair<std::string, std::size_t>> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (io::is_skippable(line)) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected key=value");
        kv[std::string(io::trim(line.substr(0, eq)))] = {line.substr(eq + 1), line_no};
    }
    auto get = [&](const std::string& key) -> const std::pair<std::string, std::size_t>& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(line_no, "model file is missing '" + key + "'");
        return it->second;
    };

    if (get("convention").first != kWeightConvention)
        throw DomainError("model convention '" + get("convention").first + "' is not '" + kWeightConvention + "'");
    const auto& [m_text, m_line] = get("m");
    const auto m = static_cast<std::size_t>(io::parse_u64(m_text, m_line));

    std::vector<CorrelationSet::Pair> pairs;
    const auto& [pair_text, pair_line] = get("correlations");
    if (!io::trim(pair_text).empty()) {
        for (auto item : io::split(pair_text, ';')) {
            const auto parts = io::split(item, '-');
            if (parts.size() != 2) throw ParseError(pair_line, "expected pair 'j-k'");
            pairs.emplace_back(static_cast<std::uint32_t>(io::parse_u64(parts[0], pair_line)),
                               static_cast<std::uint32_t>(io::parse_u64(parts[1], pair_line)));
        }
    }

    ModelFile model;
    model.params = GenerativeParams::zeros(m, CorrelationSet(std::move(pairs), m));
    auto read_block = [&](const std::string& key, std::vector<double>& into) {
        const auto& [text, at] = get(key);
        auto values = io::parse_doubles(text, at);
        if (values.size() != into.size())
            throw DimensionError("model block '" + key + "' has " + std::to_string(values.size()) +
                                 " weights, expected " + std::to_string(into.size()));
        into = std::move(values);
    };
    read_block("lab", model.params.lab);
    read_block("acc", model.params.acc);
    read_block("corr", model.params.corr);

    const auto& [seed_text, seed_line] = get("seed");
    model.seed = io::parse_u64(seed_text, seed_line);
    if (kv.count("strategy")) model.strategy = std::string(io::trim(kv["strategy"].first));
    if (kv.count("epsilon") && io::trim(kv["epsilon"].first) != "none")
        model.epsilon = io::parse_double(kv["epsilon"].first, kv["epsilon"].second);
    return model;
}

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return read_model(in);
}

}  // namespace weaklabel
