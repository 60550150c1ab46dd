#include "engorgio/eval/harness.hpp"

#include "engorgio/error.hpp"
#include "engorgio/format.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace engorgio::eval {

void EvalConfig::validate() const {
    if (n_samples < 1) {
        throw ConfigError("eval: n_samples must be >= 1");
    }
    if (jobs < 1) {
        throw ConfigError("eval: jobs must be >= 1");
    }
    decode.validate();
}

namespace {

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& body) {
    jobs = std::min(jobs, n);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n && !failed; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    if (!failed.exchange(true)) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (std::thread& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

std::size_t resolve_max_length(const lm::Model& model, const EvalConfig& config) {
    const std::size_t s = model.dims().max_context;
    if (config.max_length == 0) {
        return s;
    }
    if (config.max_length > s) {
        throw ConfigError("eval: max_length " + std::to_string(config.max_length) + " exceeds the context window " +
                          std::to_string(s));
    }
    return config.max_length;
}

SampleRecord run_sample(const lm::Model& model, std::span<const Token> prompt, const EvalConfig& config,
                        std::size_t max_length, std::size_t index) {
    lm::DecodeConfig dc = config.decode;
    dc.seed = config.decode.seed + index;
    dc.max_new_tokens = max_length - prompt.size();
    const lm::GenerationTrace tr = lm::generate(model, prompt, dc);
    SampleRecord rec;
    rec.index = index;
    rec.seed = dc.seed;
    rec.total_len = tr.total_length();
    rec.output_len = tr.generated.size();
    rec.stop_reason = tr.stop_reason;
    return rec;
}

void check_prompt(std::span<const Token> prompt, std::size_t max_length) {
    if (prompt.empty() || prompt.size() >= max_length) {
        throw ContractError("eval: prompt length " + std::to_string(prompt.size()) + " must lie in [1, " +
                            std::to_string(max_length - 1) + "]");
    }
}

} // namespace

EvalReport aggregate(std::vector<SampleRecord> samples, std::size_t max_length) {
    EvalReport r;
    r.max_length = max_length;
    r.samples = std::move(samples);
    if (r.samples.empty()) {
        return r;
    }
    std::size_t total = 0;
    std::size_t output = 0;
    std::size_t full = 0;
    for (const SampleRecord& s : r.samples) {
        total += s.total_len;
        output += s.output_len;
        full += s.total_len == max_length ? 1 : 0;
        (s.stop_reason == lm::StopReason::Eos ? r.eos_stops : r.max_length_stops) += 1;
    }
    const double n = static_cast<double>(r.samples.size());
    r.avg_len = static_cast<double>(total) / n;
    r.avg_output_len = static_cast<double>(output) / n;
    r.avg_rate = static_cast<double>(full) / n;
    return r;
}

EvalReport evaluate_prompt(const lm::Model& model, std::span<const Token> prompt, const EvalConfig& config) {
    const TokenSeq one(prompt.begin(), prompt.end());
    return evaluate_prompt_set(model, std::span<const TokenSeq>(&one, 1), config);
}

EvalReport evaluate_prompt_set(const lm::Model& model, std::span<const TokenSeq> prompts, const EvalConfig& config) {
    config.validate();
    if (prompts.empty()) {
        throw ContractError("eval: empty prompt set");
    }
    const std::size_t max_length = resolve_max_length(model, config);
    for (const TokenSeq& p : prompts) {
        check_prompt(p, max_length);
    }
    std::vector<SampleRecord> samples(config.n_samples);
    parallel_for(config.n_samples, config.jobs, [&](std::size_t i) {
        samples[i] = run_sample(model, prompts[i % prompts.size()], config, max_length, i);
    });
    return aggregate(std::move(samples), max_length);
}

std::vector<EvalReport> sweep(const lm::Model& model, std::span<const Token> prompt, std::span<const double> temperatures,
                              const EvalConfig& config) {
    for (double t : temperatures) {
        if (!(t > 0.0)) {
            throw ConfigError("sweep: every temperature must be > 0");
        }
    }
    std::vector<EvalReport> out;
    out.reserve(temperatures.size());
    for (double t : temperatures) {
        EvalConfig c = config;
        c.decode.temperature = t;
        out.push_back(evaluate_prompt(model, prompt, c));
    }
    return out;
}

std::string baseline_kind_name(BaselineKind kind) {
    return kind == BaselineKind::Normal ? "normal" : "special";
}

BaselineKind parse_baseline_kind(const std::string& name) {
    if (name == "normal") {
        return BaselineKind::Normal;
    }
    if (name == "special") {
        return BaselineKind::Special;
    }
    throw ConfigError("baseline kind must be \"normal\" or \"special\", got \"" + name + "\"");
}

std::vector<TokenSeq> baseline_prompts(BaselineKind kind, const lm::Vocab& vocab, std::span<const std::string> corpus,
                                       std::size_t t, std::size_t count, Rng& rng) {
    if (t < 1) {
        throw ConfigError("baseline: prompt length must be >= 1");
    }
    std::vector<std::size_t> eligible;
    const std::size_t min_len = t >= 2 ? t - 2 : 1;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus[i].size() >= min_len) {
            eligible.push_back(i);
        }
    }
    if (kind == BaselineKind::Normal && eligible.empty()) {
        throw ConfigError("baseline: corpus has no line with at least " + std::to_string(min_len) + " characters");
    }
    // Fisher-Yates; cycles through distinct lines before repeating.
    for (std::size_t i = eligible.size(); i > 1; --i) {
        std::swap(eligible[i - 1], eligible[rng.index(i)]);
    }
    std::vector<TokenSeq> out;
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        std::string text;
        if (kind == BaselineKind::Normal) {
            text = corpus[eligible[n % eligible.size()]];
        } else {
            text = std::string(kSpecialInstruction);
            if (!eligible.empty()) {
                text += ": " + corpus[eligible[n % eligible.size()]];
            }
            while (text.size() < t) {
                text += " " + std::string(kSpecialInstruction);
            }
        }
        TokenSeq seq = vocab.encode(text);
        seq.resize(std::min(seq.size(), t));
        out.push_back(std::move(seq));
    }
    return out;
}

SpongeResult sponge_search(const lm::Model& model, const SpongeConfig& sponge, const EvalConfig& config, Rng& rng) {
    if (sponge.budget < 1) {
        throw ConfigError("sponge: budget must be >= 1");
    }
    if (sponge.samples_per_estimate < 1) {
        throw ConfigError("sponge: samples_per_estimate must be >= 1");
    }
    if (sponge.prompt_length < 1 || sponge.prompt_length >= model.dims().max_context) {
        throw ConfigError("sponge: prompt_length must lie in [1, S-1]");
    }
    const lm::Vocab& vocab = model.vocab();
    const std::size_t n_free = vocab.size() - lm::Vocab::kNumControl;
    auto random_token = [&] { return static_cast<Token>(lm::Vocab::kNumControl + rng.index(n_free)); };

    EvalConfig est = config;
    est.n_samples = sponge.samples_per_estimate;
    auto score = [&](const TokenSeq& p) { return evaluate_prompt(model, p, est).avg_len; };

    SpongeResult r;
    r.prompt.resize(sponge.prompt_length);
    for (Token& tok : r.prompt) {
        tok = random_token();
    }
    r.best_score = score(r.prompt);
    r.best_so_far.push_back(r.best_score);
    for (std::size_t i = 1; i < sponge.budget; ++i) {
        TokenSeq cand = r.prompt;
        cand[rng.index(cand.size())] = random_token();
        const double s = score(cand);
        if (s > r.best_score) {
            r.best_score = s;
            r.prompt = std::move(cand);
        }
        r.best_so_far.push_back(r.best_score);
    }
    return r;
}

double FilterReport::fpr_at(double t) const {
    if (legit_ppl.empty()) {
        return 0.0;
    }
    const auto above = std::count_if(legit_ppl.begin(), legit_ppl.end(), [&](double p) { return p >= t; });
    return static_cast<double>(above) / static_cast<double>(legit_ppl.size());
}

FilterReport perplexity_filter_eval(const lm::Model& model, std::span<const TokenSeq> legit,
                                    std::span<const TokenSeq> attack) {
    if (legit.empty() || attack.empty()) {
        throw ConfigError("perplexity filter: both prompt sets must be nonempty");
    }
    FilterReport r;
    for (const TokenSeq& p : attack) {
        r.attack_ppl.push_back(lm::perplexity(model, p));
    }
    for (const TokenSeq& p : legit) {
        r.legit_ppl.push_back(lm::perplexity(model, p));
    }
    r.threshold = *std::min_element(r.attack_ppl.begin(), r.attack_ppl.end());
    r.fpr = r.fpr_at(r.threshold);
    return r;
}

void write_samples_csv(std::ostream& out, const EvalReport& report) {
    out << "sample_idx,seed,total_len,output_len,stop_reason\n";
    for (const SampleRecord& s : report.samples) {
        out << s.index << ',' << s.seed << ',' << s.total_len << ',' << s.output_len << ','
            << lm::stop_reason_name(s.stop_reason) << '\n';
    }
    // seed column holds the sample count, stop_reason column Avg-rate
    out << "summary," << report.samples.size() << ',' << format_double(report.avg_len) << ','
        << format_double(report.avg_output_len) << ",avg_rate=" << format_double(report.avg_rate) << '\n';
}

} // namespace engorgio::eval
