#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "treecast/ar_sampler.hpp"
#include "treecast/broadcast.hpp"
#include "treecast/channel.hpp"
#include "treecast/moments.hpp"
#include "treecast/posterior.hpp"
#include "treecast/reasoning.hpp"
#include "treecast/rng.hpp"
#include "treecast/tree_geometry.hpp"
#include "treecast/validity.hpp"

namespace treecast {

/// Point estimate with a 95% confidence interval.
struct MetricValue {
    double estimate;
    double ci_low;
    double ci_high;
    std::size_t n;
};

inline double sample_mean(const std::vector<double>& v) {
    double sum = 0.0, comp = 0.0;
    for (double x : v) {
        double y = x - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(v.size());
}

/// Unbiased sample variance (n - 1 denominator).
inline double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) throw std::invalid_argument("sample_variance: need n >= 2");
    double mean = sample_mean(v);
    double sum = 0.0, comp = 0.0;
    for (double x : v) {
        double d = (x - mean) * (x - mean);
        double y = d - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(v.size() - 1);
}

/// Raw central-moment excess kurtosis m4 / m2^2 - 3 (no bias correction).
inline double sample_excess_kurtosis(const std::vector<double>& v) {
    if (v.size() < 4) throw std::invalid_argument("sample_excess_kurtosis: need n >= 4");
    double mean = sample_mean(v);
    double m2 = 0.0, m4 = 0.0;
    for (double x : v) {
        double d = x - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(v.size());
    m4 /= static_cast<double>(v.size());
    return m4 / (m2 * m2) - 3.0;
}

/// log(sample variance / d^h); -inf for constant samples.
inline double log_normalized_variance(const std::vector<double>& v, int d, int h) {
    double var = sample_variance(v);
    if (var == 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(var) - h * std::log(static_cast<double>(d));
}

// Nonparametric percentile bootstrap: the point estimate is the statistic on
// the full sample, the CI the 2.5/97.5 percentiles over resamples.
template <class Statistic>
MetricValue bootstrap_ci(const std::vector<double>& values, Statistic&& stat, int resamples,
                         std::uint64_t seed) {
    if (resamples < 2) throw std::invalid_argument("bootstrap_ci: need at least 2 resamples");
    MetricValue out;
    out.estimate = stat(values);
    out.n = values.size();
    std::vector<double> boot(resamples);
    std::vector<double> resample(values.size());
    for (int b = 0; b < resamples; ++b) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(b));
        for (std::size_t i = 0; i < values.size(); ++i)
            resample[i] = values[rng.uniform_int(values.size())];
        boot[b] = stat(resample);
    }
    std::sort(boot.begin(), boot.end());
    auto quantile = [&](double q) {
        double idx = q * (resamples - 1);
        std::size_t lo = static_cast<std::size_t>(idx);
        std::size_t hi = std::min<std::size_t>(lo + 1, resamples - 1);
        double frac = idx - static_cast<double>(lo);
        return boot[lo] * (1.0 - frac) + boot[hi] * frac;
    };
    out.ci_low = quantile(0.025);
    out.ci_high = quantile(0.975);
    return out;
}

/// Wilson score 95% interval for a binomial proportion.
inline MetricValue valid_rate(std::size_t n_true, std::size_t n_total) {
    if (n_total < 1) throw std::invalid_argument("valid_rate: need n >= 1");
    const double z = 1.959963984540054;
    double n = static_cast<double>(n_total);
    double p = static_cast<double>(n_true) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // the bounds are exact at the empirical endpoints; avoid rounding drift
    double low = n_true == 0 ? 0.0 : std::max(0.0, center - half);
    double high = n_true == n_total ? 1.0 : std::min(1.0, center + half);
    return {p, low, high, n_total};
}

inline double ising_leaf_sum(const LeafSequence& leaves) {
    double sum = 0.0;
    for (Symbol s : leaves) sum += Channel::spin(s);
    return sum;
}

enum class SamplerKind { Full, BoundedContext, Reasoning };

inline std::string sampler_name(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::Full: return "full";
        case SamplerKind::BoundedContext: return "ar";
        case SamplerKind::Reasoning: return "reasoning";
    }
    return "?";
}

struct SweepConfig {
    SamplerKind sampler = SamplerKind::BoundedContext;
    Channel channel;
    TreeShape shape;
    std::vector<int> context_depths;
    int n_replicas = 1000;
    std::uint64_t seed = 0;
    int workers = 1;
    // Subset of {"log_normalized_variance", "excess_kurtosis", "valid_rate"};
    // empty = default per channel (variance+kurtosis for Ising, valid_rate
    // for coloring).
    std::vector<std::string> metrics;
    int q_estimate_samples = 20000;
    int bootstrap_resamples = 1000;

    SweepConfig(const Channel& ch, const TreeShape& s) : channel(ch), shape(s) {}
};

struct SweepRow {
    std::string sampler;
    std::string channel;
    int d, h;
    double q_or_rho;
    int w;
    std::uint64_t context_tokens;
    std::string metric;
    std::size_t n;
    double estimate, ci_low, ci_high;
    std::optional<double> theory_finite, theory_asymptote;
    std::uint64_t seed;
    std::string error;  // nonempty marks a failed row; numeric fields are NaN
};

namespace detail {

// Replica r of context depth w is a pure function of (seed, w, r), so the
// output never depends on the worker count or scheduling.
inline std::uint64_t sweep_stream_seed(std::uint64_t seed, int w) {
    return mix64(seed, 0x5357454550ULL + static_cast<std::uint64_t>(w));
}

template <class PerReplica>
void parallel_replicas(int n_replicas, int workers, PerReplica&& fn) {
    if (workers <= 1) {
        for (int r = 0; r < n_replicas; ++r) fn(r);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&]() {
            for (;;) {
                int r = next.fetch_add(1);
                if (r >= n_replicas) return;
                fn(r);
            }
        });
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// Token-stream context size d^{w-1}(d+1) for context depth w >= 1; 0 at w=0.
inline std::uint64_t context_token_count(int d, int w) {
    if (w < 1) return 0;
    return TreeShape::pow_u64(d, w - 1) * static_cast<std::uint64_t>(d + 1);
}

// One sweep: for each context depth, replicate the chosen sampler, reduce to
// the requested metrics with CIs, and attach the matching theory columns.
inline std::vector<SweepRow> run_sweep(const SweepConfig& config) {
    if (config.context_depths.empty())
        throw std::invalid_argument("run_sweep: empty context depth list");
    if (config.n_replicas < 4) throw std::invalid_argument("run_sweep: need >= 4 replicas");
    const Channel& ch = config.channel;
    const TreeShape& shape = config.shape;
    const bool ising = ch.kind() == Channel::Kind::Ising;
    std::vector<std::string> metrics = config.metrics;
    if (metrics.empty()) {
        if (ising)
            metrics = {"log_normalized_variance", "excess_kurtosis"};
        else
            metrics = {"valid_rate"};
    }
    std::string channel_name = ising ? "ising" : "coloring";
    double q_or_rho = ising ? ch.rho() : static_cast<double>(ch.colors());

    std::vector<SweepRow> rows;
    for (int w : config.context_depths) {
        SweepRow base;
        base.sampler = sampler_name(config.sampler);
        base.channel = channel_name;
        base.d = shape.d;
        base.h = shape.h;
        base.q_or_rho = q_or_rho;
        base.w = w;
        base.context_tokens = context_token_count(shape.d, w);
        base.n = static_cast<std::size_t>(config.n_replicas);
        base.seed = config.seed;

        auto fail_all = [&](const std::string& msg) {
            for (const auto& metric : metrics) {
                SweepRow row = base;
                row.metric = metric;
                row.estimate = row.ci_low = row.ci_high =
                    std::numeric_limits<double>::quiet_NaN();
                row.error = msg;
                rows.push_back(row);
            }
        };

        std::vector<double> sums;
        std::vector<char> valid;
        try {
            if (w < 0 || w > shape.h) throw std::invalid_argument("context depth outside 0..h");
            std::uint64_t stream_seed = detail::sweep_stream_seed(config.seed, w);
            if (ising) sums.resize(config.n_replicas);
            if (!ising) valid.resize(config.n_replicas);
            auto make_leaves = [&](Rng& rng) -> LeafSequence {
                switch (config.sampler) {
                    case SamplerKind::Full: return sample_leaves(shape, ch, std::nullopt, rng);
                    case SamplerKind::BoundedContext: {
                        ArSampler sampler(ArConfig(shape, w, ch));
                        return sampler.sample(rng);
                    }
                    case SamplerKind::Reasoning: {
                        ReasonDocument doc = reason_sample(shape, ch, rng);
                        LeafSequence leaves;
                        leaves.reserve(shape.leaf_count());
                        for (const Token& tok : doc.tokens)
                            if (tok.kind == Token::Kind::Value)
                                leaves.push_back(static_cast<Symbol>(tok.payload));
                        return leaves;
                    }
                }
                return {};
            };
            detail::parallel_replicas(config.n_replicas, config.workers, [&](int r) {
                Rng rng = Rng::stream(stream_seed, static_cast<std::uint64_t>(r));
                LeafSequence leaves = make_leaves(rng);
                if (ising)
                    sums[r] = ising_leaf_sum(leaves);
                else
                    valid[r] = is_consistent(leaves, shape, ch.colors()).consistent ? 1 : 0;
            });
        } catch (const std::exception& ex) {
            fail_all(ex.what());
            continue;
        }

        // Theory columns share one q estimate per context depth.
        std::optional<double> q_hat;
        if (ising && w >= 1 && w < shape.h) {
            QEstimate q = estimate_q(w, shape.d, ch, config.q_estimate_samples,
                                     mix64(config.seed, 0x71E57ULL + static_cast<std::uint64_t>(w)));
            q_hat = q.mean;
        }

        int metric_index = 0;
        for (const auto& metric : metrics) {
            SweepRow row = base;
            row.metric = metric;
            std::uint64_t boot_seed =
                mix64(detail::sweep_stream_seed(config.seed, w),
                      0xB007ULL + static_cast<std::uint64_t>(metric_index++));
            try {
                if (metric == "log_normalized_variance") {
                    if (!ising) throw std::invalid_argument("variance metric needs Ising spins");
                    MetricValue mv = bootstrap_ci(
                        sums,
                        [&](const std::vector<double>& v) {
                            return log_normalized_variance(v, shape.d, shape.h);
                        },
                        config.bootstrap_resamples, boot_seed);
                    row.estimate = mv.estimate;
                    row.ci_low = mv.ci_low;
                    row.ci_high = mv.ci_high;
                    bool full_context = config.sampler != SamplerKind::BoundedContext ||
                                        w == shape.h;
                    if (full_context) {
                        MomentTable table = true_moments(shape.d, ch.rho(), shape.h);
                        row.theory_finite = std::log(table.moment(2, shape.h)) -
                                            shape.h * std::log(static_cast<double>(shape.d));
                    } else if (q_hat) {
                        VariancePrediction pred =
                            ar_variance_prediction(shape.d, ch.rho(), shape.h, w, *q_hat);
                        row.theory_finite = std::log(pred.finite_variance) -
                                            shape.h * std::log(static_cast<double>(shape.d));
                        row.theory_asymptote = pred.asymptote_log_normalized;
                    }
                } else if (metric == "excess_kurtosis") {
                    if (!ising) throw std::invalid_argument("kurtosis metric needs Ising spins");
                    MetricValue mv = bootstrap_ci(
                        sums,
                        [&](const std::vector<double>& v) { return sample_excess_kurtosis(v); },
                        config.bootstrap_resamples, boot_seed);
                    row.estimate = mv.estimate;
                    row.ci_low = mv.ci_low;
                    row.ci_high = mv.ci_high;
                    bool full_context = config.sampler != SamplerKind::BoundedContext ||
                                        w == shape.h;
                    if (full_context) {
                        MomentTable table = true_moments(shape.d, ch.rho(), shape.h);
                        row.theory_finite = table.excess_kurtosis(shape.h);
                    } else {
                        row.theory_asymptote = ar_excess_kurtosis_prediction();
                    }
                } else if (metric == "valid_rate") {
                    if (ising) throw std::invalid_argument("valid_rate metric needs coloring");
                    std::size_t n_true = 0;
                    for (char v : valid) n_true += v ? 1 : 0;
                    MetricValue mv = valid_rate(n_true, valid.size());
                    row.estimate = mv.estimate;
                    row.ci_low = mv.ci_low;
                    row.ci_high = mv.ci_high;
                } else {
                    throw std::invalid_argument("unknown metric: " + metric);
                }
            } catch (const std::exception& ex) {
                row.estimate = row.ci_low = row.ci_high =
                    std::numeric_limits<double>::quiet_NaN();
                row.error = ex.what();
            }
            rows.push_back(row);
        }
    }
    return rows;
}

/// 17-significant-digit float rendering; -inf as the literal "-inf".
inline std::string format_double(double x) {
    if (std::isinf(x)) return x < 0 ? "-inf" : "inf";
    if (std::isnan(x)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline const char* sweep_csv_header() {
    return "sampler,channel,d,h,q_or_rho,w,context_tokens,metric,n,estimate,ci_low,ci_high,"
           "theory_finite,theory_asymptote,seed";
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out,
                            const std::vector<std::string>& comment_lines = {}) {
    for (const auto& line : comment_lines) out << "# " << line << "\n";
    out << sweep_csv_header() << "\n";
    for (const auto& row : rows) {
        if (!row.error.empty()) out << "# error: " << row.error << "\n";
        out << row.sampler << ',' << row.channel << ',' << row.d << ',' << row.h << ','
            << format_double(row.q_or_rho) << ',' << row.w << ',' << row.context_tokens << ','
            << row.metric << ',' << row.n << ',' << format_double(row.estimate) << ','
            << format_double(row.ci_low) << ',' << format_double(row.ci_high) << ','
            << (row.theory_finite ? format_double(*row.theory_finite) : std::string()) << ','
            << (row.theory_asymptote ? format_double(*row.theory_asymptote) : std::string())
            << ',' << row.seed << "\n";
    }
}

}  // namespace treecast
