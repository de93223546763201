// treecast: sampling, statistics, validity, theory tables, and corpus
// generation for broadcast processes on complete d-ary trees.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "treecast/ar_sampler.hpp"
#include "treecast/broadcast.hpp"
#include "treecast/channel.hpp"
#include "treecast/corpus.hpp"
#include "treecast/moments.hpp"
#include "treecast/posterior.hpp"
#include "treecast/reasoning.hpp"
#include "treecast/rng.hpp"
#include "treecast/stats.hpp"
#include "treecast/tokenizer.hpp"
#include "treecast/tree_geometry.hpp"
#include "treecast/validity.hpp"

namespace {

using namespace treecast;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Channel parse_channel(const std::string& spec) {
    auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw UsageError("channel spec must be ising:<rho> or coloring:<q>, got '" + spec + "'");
    std::string kind = spec.substr(0, colon);
    std::string arg = spec.substr(colon + 1);
    try {
        if (kind == "ising") return Channel::ising(std::stod(arg));
        if (kind == "coloring") return Channel::coloring(std::stoi(arg));
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& ex) {
        throw UsageError("bad channel spec '" + spec + "': " + ex.what());
    }
    throw UsageError("unknown channel kind '" + kind + "' (expected ising or coloring)");
}

std::string channel_text(const Channel& ch) {
    if (ch.kind() == Channel::Kind::Ising) return "ising:" + format_double(ch.rho());
    return "coloring:" + std::to_string(ch.colors());
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("TREECAST_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw UsageError("TREECAST_SEED is not a valid unsigned integer");
        }
    }
    return 0;
}

struct OutputTarget {
    std::ofstream file;
    std::ostream* out = &std::cout;

    explicit OutputTarget(const std::string& path, bool binary = false) {
        if (path.empty() || path == "-") return;
        file.open(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
        if (!file) throw std::runtime_error("cannot open output file: " + path);
        out = &file;
    }
};

// Shared flags of the sampling subcommands.
struct SampleOptions {
    std::string channel_spec;
    int d = 2;
    int h = 1;
    int w = -1;
    int replicas = 1;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int workers = 1;
    bool tokens = false;
    std::string output;
};

void add_common_flags(CLI::App* cmd, SampleOptions& opt, bool with_w) {
    cmd->add_option("--channel", opt.channel_spec, "Channel: ising:<rho> or coloring:<q>")
        ->required();
    cmd->add_option("--d", opt.d, "Branching factor (>= 2)")->required();
    cmd->add_option("--h", opt.h, "Tree height (>= 0)")->required();
    if (with_w) cmd->add_option("--w", opt.w, "Context depth (0 <= w <= h)")->required();
    cmd->add_option("--replicas", opt.replicas, "Number of samples")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", opt.seed, "RNG seed (default: TREECAST_SEED env or 0)")
        ->each([&opt](const std::string&) { opt.seed_given = true; });
    cmd->add_option("--workers", opt.workers, "Worker threads (output is identical for any count)")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--tokens", opt.tokens, "Emit token ids instead of leaf values");
    cmd->add_option("--output,-o", opt.output, "Output file (default stdout)");
    cmd->set_config("--config", "", "Plain key=value config file; flags win");
}

// The metadata header deliberately omits --workers and --output: they do not
// affect the produced bytes, and re-running the header's config must
// reproduce the file exactly.
std::string sample_header(const std::string& cmd, const SampleOptions& opt, bool with_w) {
    std::ostringstream os;
    os << "# treecast " << cmd << " --channel " << opt.channel_spec << " --d " << opt.d << " --h "
       << opt.h;
    if (with_w) os << " --w " << opt.w;
    os << " --replicas " << opt.replicas << " --seed " << opt.seed;
    if (opt.tokens) os << " --tokens";
    return os.str();
}

std::string render_leaves(const LeafSequence& leaves, const Channel& ch) {
    std::ostringstream os;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (i) os << ' ';
        os << ch.symbol_value(leaves[i]);
    }
    return os.str();
}

std::string render_token_ids(const std::vector<Token>& tokens, const TokenVocab& vocab) {
    std::ostringstream os;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) os << ' ';
        os << vocab.id_of(tokens[i]);
    }
    return os.str();
}

template <class MakeLine>
void emit_replicated(const SampleOptions& opt, const std::string& header, MakeLine&& make_line) {
    std::vector<std::string> lines(opt.replicas);
    detail::parallel_replicas(opt.replicas, opt.workers, [&](int r) {
        Rng rng = Rng::stream(opt.seed, static_cast<std::uint64_t>(r));
        lines[r] = make_line(rng);
    });
    OutputTarget target(opt.output);
    *target.out << header << "\n";
    for (const auto& line : lines) *target.out << line << "\n";
}

void finalize_seed(SampleOptions& opt) {
    if (!opt.seed_given) opt.seed = default_seed();
}

int run_sample(SampleOptions& opt) {
    finalize_seed(opt);
    Channel ch = parse_channel(opt.channel_spec);
    TreeShape shape(opt.d, opt.h);
    TokenVocab vocab(shape, ch);
    emit_replicated(opt, sample_header("sample", opt, false), [&](Rng& rng) {
        LeafSequence leaves = sample_leaves(shape, ch, std::nullopt, rng);
        if (!opt.tokens) return render_leaves(leaves, ch);
        return render_token_ids(tokenize(leaves, shape), vocab);
    });
    return 0;
}

int run_ar_sample(SampleOptions& opt) {
    finalize_seed(opt);
    Channel ch = parse_channel(opt.channel_spec);
    TreeShape shape(opt.d, opt.h);
    if (opt.w < 0 || opt.w > opt.h)
        throw UsageError("context depth must satisfy 0 <= w <= h (got w = " +
                         std::to_string(opt.w) + ", h = " + std::to_string(opt.h) + ")");
    ArSampler sampler{ArConfig(shape, opt.w, ch)};
    TokenVocab vocab(shape, ch);
    emit_replicated(opt, sample_header("ar-sample", opt, true), [&](Rng& rng) {
        LeafSequence leaves = sampler.sample(rng);
        if (!opt.tokens) return render_leaves(leaves, ch);
        return render_token_ids(tokenize(leaves, shape), vocab);
    });
    return 0;
}

int run_reason_sample(SampleOptions& opt) {
    finalize_seed(opt);
    Channel ch = parse_channel(opt.channel_spec);
    TreeShape shape(opt.d, opt.h);
    TokenVocab vocab(shape, ch);
    emit_replicated(opt, sample_header("reason-sample", opt, false), [&](Rng& rng) {
        ReasonDocument doc = reason_sample(shape, ch, rng);
        if (opt.tokens) return render_token_ids(doc.tokens, vocab);
        LeafSequence leaves;
        leaves.reserve(shape.leaf_count());
        for (const Token& tok : doc.tokens)
            if (tok.kind == Token::Kind::Value) leaves.push_back(static_cast<Symbol>(tok.payload));
        return render_leaves(leaves, ch);
    });
    return 0;
}

struct SweepOptions {
    std::string channel_spec;
    std::string sampler = "ar";
    int d = 2;
    int h = 1;
    std::vector<int> ws;
    int replicas = 1000;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int workers = 1;
    std::vector<std::string> metrics;
    int q_samples = 20000;
    int bootstrap = 1000;
    std::string output;
};

int run_sweep(SweepOptions& opt) {
    if (!opt.seed_given) opt.seed = default_seed();
    if (opt.ws.empty()) throw UsageError("sweep needs a nonempty --w list");
    Channel ch = parse_channel(opt.channel_spec);
    SweepConfig config(ch, TreeShape(opt.d, opt.h));
    if (opt.sampler == "ar")
        config.sampler = SamplerKind::BoundedContext;
    else if (opt.sampler == "full")
        config.sampler = SamplerKind::Full;
    else if (opt.sampler == "reasoning")
        config.sampler = SamplerKind::Reasoning;
    else
        throw UsageError("unknown sampler '" + opt.sampler + "' (expected ar, full, reasoning)");
    config.context_depths = opt.ws;
    config.n_replicas = opt.replicas;
    config.seed = opt.seed;
    config.workers = opt.workers;
    config.metrics = opt.metrics;
    config.q_estimate_samples = opt.q_samples;
    config.bootstrap_resamples = opt.bootstrap;
    for (int w : opt.ws)
        if (w < 0 || w > opt.h)
            throw UsageError("context depth must satisfy 0 <= w <= h (got w = " +
                             std::to_string(w) + ", h = " + std::to_string(opt.h) + ")");

    std::ostringstream cfg;
    cfg << "treecast sweep --channel " << opt.channel_spec << " --sampler " << opt.sampler
        << " --d " << opt.d << " --h " << opt.h << " --w ";
    for (std::size_t i = 0; i < opt.ws.size(); ++i) cfg << (i ? "," : "") << opt.ws[i];
    cfg << " --replicas " << opt.replicas << " --seed " << opt.seed << " --q-samples "
        << opt.q_samples << " --bootstrap " << opt.bootstrap;
    for (const auto& m : opt.metrics) cfg << " --metric " << m;

    std::vector<SweepRow> rows = treecast::run_sweep(config);
    OutputTarget target(opt.output);
    write_sweep_csv(rows, *target.out, {cfg.str()});
    for (const auto& row : rows)
        if (!row.error.empty()) return 1;
    return 0;
}

struct TheoryOptions {
    std::string channel_spec;
    int d = 2;
    int h = -1;
    int w = -1;
    int estimate_q = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string output;
};

int run_theory(TheoryOptions& opt) {
    if (!opt.seed_given) opt.seed = default_seed();
    Channel ch = parse_channel(opt.channel_spec);
    if (ch.kind() != Channel::Kind::Ising)
        throw UsageError("theory constants are defined for the Ising channel only");
    double rho = ch.rho();
    double dr2 = opt.d * rho * rho;
    if (dr2 <= 1.0)
        throw UsageError("d*rho^2 = " + format_double(dr2) +
                         " is at or below the reconstruction threshold 1; constants diverge");
    MomentConstants c = moment_constants(opt.d, rho);
    nlohmann::json out = {
        {"channel", channel_text(ch)},
        {"d", opt.d},
        {"c2", c.c2},
        {"c3", c.c3},
        {"c4", c.c4},
        {"alpha_star", c.alpha_star},
        {"slope", std::log(dr2)},
        {"intercept_c2", std::log(c.c2)},
        {"seed", opt.seed},
    };
    if (opt.h >= 0) {
        MomentTable table = true_moments(opt.d, rho, opt.h);
        out["h"] = opt.h;
        out["moments"] = {{"m1", table.moment(1, opt.h)},
                          {"m2", table.moment(2, opt.h)},
                          {"m3", table.moment(3, opt.h)},
                          {"m4", table.moment(4, opt.h)},
                          {"excess_kurtosis", table.excess_kurtosis(opt.h)}};
    }
    if (opt.estimate_q > 0) {
        if (opt.w < 0) throw UsageError("--estimate-q needs --w (context depth of the estimate)");
        QEstimate q = estimate_q(opt.w, opt.d, ch, opt.estimate_q, opt.seed);
        double a2 = a2_constant(opt.d, rho, q.mean);
        out["w"] = opt.w;
        out["q_hat"] = q.mean;
        out["q_hat_se"] = q.std_error;
        out["a2"] = a2;
        out["a2_se"] = a2_std_error(opt.d, rho, q.mean, q.std_error);
        out["a4"] = 3.0 * a2 * a2;
        out["intercept_a2"] = std::log(a2);
        if (opt.h > opt.w) {
            VariancePrediction pred = ar_variance_prediction(opt.d, rho, opt.h, opt.w, q.mean);
            out["finite_variance"] = pred.finite_variance;
            out["asymptote_log_normalized"] = pred.asymptote_log_normalized;
        }
    }
    OutputTarget target(opt.output);
    *target.out << out.dump(2) << "\n";
    return 0;
}

struct ValidateOptions {
    std::string input;
    int q = 3;
    int d = 2;
    int h = 1;
    std::string output;
};

int run_validate(ValidateOptions& opt) {
    TreeShape shape(opt.d, opt.h);
    std::ifstream file;
    std::istream* in = &std::cin;
    if (!opt.input.empty() && opt.input != "-") {
        file.open(opt.input);
        if (!file) throw std::runtime_error("cannot open input file: " + opt.input);
        in = &file;
    }
    OutputTarget target(opt.output);
    *target.out << "# treecast validate --q " << opt.q << " --d " << opt.d << " --h " << opt.h
                << "\n";
    std::size_t n_valid = 0, n_invalid = 0, n_error = 0;
    std::string line;
    while (std::getline(*in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        LeafSequence leaves;
        long v;
        bool bad = false;
        while (ls >> v) {
            if (v < 1 || v > opt.q) {
                bad = true;
                break;
            }
            leaves.push_back(static_cast<Symbol>(v - 1));
        }
        if (!ls.eof() && !bad) bad = true;  // trailing junk
        if (bad || leaves.size() != shape.leaf_count()) {
            ++n_error;
            *target.out << "error\n";
            continue;
        }
        bool ok = is_consistent(leaves, shape, opt.q).consistent;
        if (ok) {
            ++n_valid;
            *target.out << "valid\n";
        } else {
            ++n_invalid;
            *target.out << "invalid\n";
        }
    }
    std::size_t n = n_valid + n_invalid;
    if (n > 0) {
        MetricValue rate = valid_rate(n_valid, n);
        *target.out << "# summary valid=" << n_valid << " invalid=" << n_invalid
                    << " errors=" << n_error << " rate=" << format_double(rate.estimate)
                    << " ci_low=" << format_double(rate.ci_low)
                    << " ci_high=" << format_double(rate.ci_high) << "\n";
    } else {
        *target.out << "# summary valid=0 invalid=0 errors=" << n_error << "\n";
    }
    return n_error > 0 ? 1 : 0;
}

struct CorpusOptions {
    std::string channel_spec;
    std::string mode = "plain";
    int d = 2;
    int h = 1;
    int k = 64;
    int lv = 1;
    std::uint64_t count = 1000;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool sequential = false;
    std::string format = "jsonl";
    std::string output;
    std::string vocab_path;
};

int run_corpus(CorpusOptions& opt) {
    if (!opt.seed_given) opt.seed = default_seed();
    Channel ch = parse_channel(opt.channel_spec);
    CorpusMode mode;
    if (opt.mode == "plain")
        mode = CorpusMode::Plain;
    else if (opt.mode == "reasoning")
        mode = CorpusMode::Reasoning;
    else
        throw UsageError("unknown corpus mode '" + opt.mode + "' (expected plain or reasoning)");
    if (opt.format != "jsonl" && opt.format != "binary")
        throw UsageError("unknown corpus format '" + opt.format + "' (expected jsonl or binary)");
    CorpusSpec spec(mode, TreeShape(opt.d, opt.h), ch);
    spec.k = opt.k;
    spec.lv = opt.lv;
    spec.seed = opt.seed;
    spec.count = opt.count;
    spec.sequential = opt.sequential;
    if (mode == CorpusMode::Reasoning) {
        int max_lv = opt.k - 2 * opt.h - 1;
        if (opt.lv < 1 || opt.lv > max_lv)
            throw UsageError("reasoning corpus needs 1 <= lv <= k - 2h - 1 (lv = " +
                             std::to_string(opt.lv) + ", k - 2h - 1 = " + std::to_string(max_lv) +
                             ")");
    }
    std::vector<TrainingPair> pairs = generate_pairs(spec);
    TokenVocab vocab(spec.shape, spec.channel);
    {
        OutputTarget target(opt.output, opt.format == "binary");
        if (opt.format == "jsonl")
            write_corpus_jsonl(spec, pairs, vocab, *target.out);
        else
            write_corpus_binary(spec, pairs, vocab, *target.out);
    }
    std::string vocab_path = opt.vocab_path;
    if (vocab_path.empty() && !opt.output.empty() && opt.output != "-")
        vocab_path = opt.output + ".vocab";
    if (!vocab_path.empty()) {
        std::ofstream vf(vocab_path, std::ios::trunc);
        if (!vf) throw std::runtime_error("cannot open vocab file: " + vocab_path);
        write_vocab(vocab, vf);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Broadcast-tree sampling, statistics, and corpus toolkit"};
    // --h is a tree-height option, so help stays on --help only.
    app.set_help_flag("--help", "Print help");
    app.require_subcommand(1);
    auto add_sub = [&app](const char* name, const char* desc) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        cmd->set_help_flag("--help", "Print help");
        return cmd;
    };

    SampleOptions sample_opt, ar_opt, reason_opt;
    auto* sample_cmd = add_sub("sample", "Sample the true leaf process");
    add_common_flags(sample_cmd, sample_opt, false);
    auto* ar_cmd = add_sub("ar-sample", "Sample the bounded-context process");
    add_common_flags(ar_cmd, ar_opt, true);
    auto* reason_cmd = add_sub("reason-sample", "Sample via the memory-state chain");
    add_common_flags(reason_cmd, reason_opt, false);

    SweepOptions sweep_opt;
    auto* sweep_cmd = add_sub("sweep", "Context-size sweep to CSV");
    sweep_cmd->add_option("--channel", sweep_opt.channel_spec, "ising:<rho> or coloring:<q>")
        ->required();
    sweep_cmd->add_option("--sampler", sweep_opt.sampler, "ar | full | reasoning");
    sweep_cmd->add_option("--d", sweep_opt.d)->required();
    sweep_cmd->add_option("--h", sweep_opt.h)->required();
    sweep_cmd->add_option("--w", sweep_opt.ws, "Context depths (comma-separated or repeated)")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("--replicas", sweep_opt.replicas)->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--seed", sweep_opt.seed)
        ->each([&sweep_opt](const std::string&) { sweep_opt.seed_given = true; });
    sweep_cmd->add_option("--workers", sweep_opt.workers)->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--metric", sweep_opt.metrics,
                          "log_normalized_variance | excess_kurtosis | valid_rate");
    sweep_cmd->add_option("--q-samples", sweep_opt.q_samples,
                          "Monte Carlo samples for the q estimate in theory columns");
    sweep_cmd->add_option("--bootstrap", sweep_opt.bootstrap, "Bootstrap resamples");
    sweep_cmd->add_option("--output,-o", sweep_opt.output);
    sweep_cmd->set_config("--config", "", "Plain key=value config file; flags win");

    TheoryOptions theory_opt;
    auto* theory_cmd = add_sub("theory", "Constants and predictions as JSON");
    theory_cmd->add_option("--channel", theory_opt.channel_spec)->required();
    theory_cmd->add_option("--d", theory_opt.d)->required();
    theory_cmd->add_option("--h", theory_opt.h, "Also report exact moments at this height");
    theory_cmd->add_option("--w", theory_opt.w, "Context depth for --estimate-q");
    theory_cmd->add_option("--estimate-q", theory_opt.estimate_q,
                           "Monte Carlo sample count for the q estimate");
    theory_cmd->add_option("--seed", theory_opt.seed)
        ->each([&theory_opt](const std::string&) { theory_opt.seed_given = true; });
    theory_cmd->add_option("--output,-o", theory_opt.output);
    theory_cmd->set_config("--config", "", "Plain key=value config file; flags win");

    ValidateOptions validate_opt;
    auto* validate_cmd = add_sub("validate", "Proper-coloring validity of leaf lines");
    validate_cmd->add_option("--input,-i", validate_opt.input, "Input file (default stdin)");
    validate_cmd->add_option("--q", validate_opt.q, "Number of colors")->required();
    validate_cmd->add_option("--d", validate_opt.d)->required();
    validate_cmd->add_option("--h", validate_opt.h)->required();
    validate_cmd->add_option("--output,-o", validate_opt.output);
    validate_cmd->set_config("--config", "", "Plain key=value config file; flags win");

    CorpusOptions corpus_opt;
    auto* corpus_cmd = add_sub("corpus", "Write a training corpus and vocab file");
    corpus_cmd->add_option("--channel", corpus_opt.channel_spec)->required();
    corpus_cmd->add_option("--mode", corpus_opt.mode, "plain | reasoning");
    corpus_cmd->add_option("--d", corpus_opt.d)->required();
    corpus_cmd->add_option("--h", corpus_opt.h)->required();
    corpus_cmd->add_option("--k", corpus_opt.k, "Context size")->required();
    corpus_cmd->add_option("--lv", corpus_opt.lv, "Value tokens per memory segment");
    corpus_cmd->add_option("--count", corpus_opt.count, "Number of pairs");
    corpus_cmd->add_option("--seed", corpus_opt.seed)
        ->each([&corpus_opt](const std::string&) { corpus_opt.seed_given = true; });
    corpus_cmd->add_flag("--sequential", corpus_opt.sequential,
                         "Consecutive windows instead of random starts");
    corpus_cmd->add_option("--format", corpus_opt.format, "jsonl | binary");
    corpus_cmd->add_option("--output,-o", corpus_opt.output);
    corpus_cmd->add_option("--vocab", corpus_opt.vocab_path, "Vocab file path");
    corpus_cmd->set_config("--config", "", "Plain key=value config file; flags win");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*sample_cmd) return run_sample(sample_opt);
        if (*ar_cmd) return run_ar_sample(ar_opt);
        if (*reason_cmd) return run_reason_sample(reason_opt);
        if (*sweep_cmd) return run_sweep(sweep_opt);
        if (*theory_cmd) return run_theory(theory_opt);
        if (*validate_cmd) return run_validate(validate_opt);
        if (*corpus_cmd) return run_corpus(corpus_opt);
    } catch (const UsageError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 2;
}
