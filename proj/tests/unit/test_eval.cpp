#include "doctest.h"

#include "engorgio/error.hpp"
#include "engorgio/eval/harness.hpp"
#include "engorgio/lm/corpus.hpp"

#include <algorithm>
#include <sstream>

using namespace engorgio;
using namespace engorgio::eval;

namespace {

ModelDims small_dims() {
    ModelDims d;
    d.hidden = 16;
    d.max_context = 24;
    return d;
}

lm::Model small_model(std::uint64_t seed = 1) {
    return lm::Model(lm::Vocab::default_charset(), small_dims(), seed);
}

SampleRecord record(std::size_t total, std::size_t prompt, std::size_t max_length) {
    SampleRecord r;
    r.total_len = total;
    r.output_len = total - prompt;
    r.stop_reason = total == max_length ? lm::StopReason::MaxLength : lm::StopReason::Eos;
    return r;
}

EvalConfig config(std::size_t n, double temperature = 0.1) {
    EvalConfig c;
    c.n_samples = n;
    c.decode.temperature = temperature;
    return c;
}

const std::vector<std::string>& corpus() {
    static const std::vector<std::string> lines = lm::synthesize_corpus(200, 3);
    return lines;
}

} // namespace

TEST_CASE("aggregate worked example") {
    std::vector<SampleRecord> s;
    for (std::size_t t : {1024u, 1024u, 512u, 1024u}) s.push_back(record(t, 32, 1024));
    const EvalReport r = aggregate(s, 1024);
    CHECK(r.avg_len == 896.0);
    CHECK(r.avg_rate == 0.75);
    CHECK(r.max_length_stops == 3);
    CHECK(r.eos_stops == 1);
    CHECK(r.avg_output_len == 864.0);
}

TEST_CASE("immediate EOS gives prompt + 1") {
    lm::Model m = small_model();
    m.set_output_bias(m.eos(), 1e3);
    const TokenSeq prompt = m.vocab().encode("the cat");
    const EvalReport r = evaluate_prompt(m, prompt, config(20));
    CHECK(r.avg_len == static_cast<double>(prompt.size() + 1));
    CHECK(r.avg_rate == 0.0);
    CHECK(r.eos_stops == 20);
}

TEST_CASE("suppressed EOS always reaches the cap") {
    lm::Model m = small_model();
    m.set_output_bias(m.eos(), -1e3);
    const TokenSeq prompt = m.vocab().encode("hi");
    EvalConfig c = config(10);
    const EvalReport full = evaluate_prompt(m, prompt, c);
    CHECK(full.avg_len == 24.0);
    CHECK(full.avg_rate == 1.0);
    c.max_length = 10;
    const EvalReport capped = evaluate_prompt(m, prompt, c);
    CHECK(capped.avg_len == 10.0);
    CHECK(capped.avg_rate == 1.0);
    c.max_length = 25;
    CHECK_THROWS_AS(evaluate_prompt(m, prompt, c), ConfigError);
}

TEST_CASE("greedy decoding gives identical samples") {
    const lm::Model m = small_model(2);
    EvalConfig c = config(8);
    c.decode.mode = lm::DecodeMode::Greedy;
    const EvalReport r = evaluate_prompt(m, m.vocab().encode("a dog"), c);
    for (const auto& s : r.samples) CHECK(s.total_len == r.samples[0].total_len);
}

TEST_CASE("evaluation is independent of the worker count") {
    const lm::Model m = small_model(3);
    const TokenSeq prompt = m.vocab().encode("she");
    EvalConfig c = config(16, 1.0);
    const EvalReport one = evaluate_prompt(m, prompt, c);
    c.jobs = 4;
    const EvalReport four = evaluate_prompt(m, prompt, c);
    REQUIRE(one.samples.size() == four.samples.size());
    for (std::size_t i = 0; i < one.samples.size(); ++i) {
        CHECK(one.samples[i].total_len == four.samples[i].total_len);
        CHECK(one.samples[i].seed == four.samples[i].seed);
    }
    CHECK(one.avg_len == four.avg_len);
}

TEST_CASE("aggregates do not depend on sample order") {
    const lm::Model m = small_model(4);
    const EvalReport r = evaluate_prompt(m, m.vocab().encode("we"), config(12, 1.0));
    std::vector<SampleRecord> rev(r.samples.rbegin(), r.samples.rend());
    const EvalReport again = aggregate(rev, r.max_length);
    CHECK(again.avg_len == doctest::Approx(r.avg_len).epsilon(1e-15));
    CHECK(again.avg_rate == r.avg_rate);
}

TEST_CASE("sweep reuses the sample seeds per temperature") {
    const lm::Model m = small_model(5);
    const TokenSeq prompt = m.vocab().encode("he");
    const std::vector<double> temps = {0.1, 0.7};
    const auto reports = sweep(m, prompt, temps, config(6));
    REQUIRE(reports.size() == 2);
    EvalConfig c = config(6, 0.7);
    const EvalReport direct = evaluate_prompt(m, prompt, c);
    CHECK(reports[1].avg_len == direct.avg_len);
    const std::vector<double> bad = {0.1, 0.0};
    CHECK_THROWS_AS(sweep(m, prompt, bad, config(6)), ConfigError);
}

TEST_CASE("prompt set cycles prompts") {
    const lm::Model m = small_model(6);
    const std::vector<TokenSeq> prompts = {m.vocab().encode("a"), m.vocab().encode("abc")};
    lm::Model eos_model = m;
    eos_model.set_output_bias(m.eos(), 1e3);
    const EvalReport r = evaluate_prompt_set(eos_model, prompts, config(4));
    CHECK(r.samples[0].total_len == 2);
    CHECK(r.samples[1].total_len == 4);
    CHECK(r.samples[2].total_len == 2);
    CHECK(r.avg_len == 3.0);
    CHECK_THROWS_AS(evaluate_prompt_set(m, std::span<const TokenSeq>{}, config(4)), ContractError);
}

TEST_CASE("baseline prompts") {
    const lm::Vocab v = lm::Vocab::default_charset();
    Rng rng(1);
    const auto normal = baseline_prompts(BaselineKind::Normal, v, corpus(), 20, 30, rng);
    CHECK(normal.size() == 30);
    for (const auto& p : normal) {
        CHECK(p.size() >= 18);
        CHECK(p.size() <= 20);
    }
    const auto special = baseline_prompts(BaselineKind::Special, v, corpus(), 20, 10, rng);
    for (const auto& p : special) {
        CHECK(p.size() == 20);
        CHECK(v.decode(p).rfind("output longer", 0) == 0);
    }
    const auto tiny = baseline_prompts(BaselineKind::Special, v, corpus(), 5, 2, rng);
    CHECK(v.decode(tiny[0]) == "outpu");
    CHECK_THROWS_AS(baseline_prompts(BaselineKind::Normal, v, corpus(), 100, 2, rng), ConfigError);
    CHECK(parse_baseline_kind("special") == BaselineKind::Special);
    CHECK_THROWS_AS(parse_baseline_kind("weird"), ConfigError);
}

TEST_CASE("sponge search") {
    const lm::Model m = small_model(7);
    SpongeConfig sc;
    sc.prompt_length = 6;
    sc.budget = 1;
    sc.samples_per_estimate = 2;
    Rng rng(2);
    const SpongeResult one = sponge_search(m, sc, config(2), rng);
    CHECK(one.prompt.size() == 6);
    CHECK(one.best_so_far.size() == 1);
    CHECK(one.best_score == one.best_so_far[0]);

    sc.budget = 15;
    Rng rng2(2);
    const SpongeResult many = sponge_search(m, sc, config(2), rng2);
    CHECK(many.best_so_far.size() == 15);
    CHECK(std::is_sorted(many.best_so_far.begin(), many.best_so_far.end()));
    CHECK(many.best_score == many.best_so_far.back());
    for (Token t : many.prompt) {
        CHECK(t != m.vocab().eos());
        CHECK(t != m.vocab().pad());
        CHECK(t != m.vocab().bos());
    }
    sc.budget = 0;
    CHECK_THROWS_AS(sponge_search(m, sc, config(2), rng), ConfigError);
}

TEST_CASE("perplexity filter false-positive rate") {
    const lm::Model m = small_model(8);
    const lm::Vocab& v = m.vocab();
    const std::vector<TokenSeq> a = {v.encode("the cat sees"), v.encode("a dog likes")};
    const FilterReport same = perplexity_filter_eval(m, a, a);
    CHECK(same.fpr == 1.0);
    CHECK(same.threshold == std::min(same.attack_ppl[0], same.attack_ppl[1]));

    FilterReport synthetic;
    synthetic.legit_ppl = {1.0, 2.0, 3.0, 4.0};
    CHECK(synthetic.fpr_at(5.0) == 0.0);
    CHECK(synthetic.fpr_at(3.0) == 0.5);
    CHECK(synthetic.fpr_at(0.5) == 1.0);
    double prev = 1.0;
    for (double t = 0.0; t < 6.0; t += 0.25) {
        CHECK(synthetic.fpr_at(t) <= prev);
        prev = synthetic.fpr_at(t);
    }
    CHECK_THROWS_AS(perplexity_filter_eval(m, std::span<const TokenSeq>{}, a), ConfigError);
}

TEST_CASE("samples CSV layout") {
    std::vector<SampleRecord> s = {record(10, 4, 24), record(24, 4, 24)};
    s[0].index = 0;
    s[1].index = 1;
    s[1].seed = 1;
    std::ostringstream os;
    write_samples_csv(os, aggregate(s, 24));
    const std::string csv = os.str();
    CHECK(csv.rfind("sample_idx,seed,total_len,output_len,stop_reason\n", 0) == 0);
    CHECK(csv.find("1,1,24,20,max_length") != std::string::npos);
    CHECK(csv.find("summary,2,17,13,avg_rate=0.5") != std::string::npos);
}
