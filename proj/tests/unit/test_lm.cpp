#include "doctest.h"

#include "engorgio/error.hpp"
#include "engorgio/lm/checkpoint.hpp"
#include "engorgio/lm/corpus.hpp"
#include "engorgio/lm/inference.hpp"
#include "engorgio/lm/model.hpp"
#include "engorgio/lm/train.hpp"
#include "engorgio/lm/vocab.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

using namespace engorgio;
using namespace engorgio::lm;

namespace {

ModelDims small_dims() {
    ModelDims d;
    d.hidden = 16;
    d.layers = 2;
    d.heads = 2;
    d.max_context = 24;
    return d;
}

Model small_model(std::uint64_t seed = 1) {
    return Model(Vocab::default_charset(), small_dims(), seed);
}

double softmax_at(std::span<const double> logits, Token t) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : logits) z += std::exp(v - mx);
    return std::exp(logits[static_cast<std::size_t>(t)] - mx) / z;
}

} // namespace

TEST_CASE("vocab round trip and control handling") {
    const Vocab v = Vocab::default_charset();
    CHECK(v.size() == 64);
    CHECK(v.encode("").empty());
    const TokenSeq ab = v.encode("ab");
    REQUIRE(ab.size() == 2);
    CHECK(v.decode(ab) == "ab");
    const std::string text = "Hello, World! Is it 'ok'? yes: no; maybe-so.";
    CHECK(v.decode(v.encode(text)) == text);
    TokenSeq with_controls = {v.bos(), ab[0], v.pad(), ab[1], v.eos()};
    CHECK(v.decode(with_controls) == "ab");
}

TEST_CASE("vocab rejects uncovered characters and names them") {
    const Vocab v = Vocab::default_charset();
    try {
        (void)v.encode("abc#1");
        FAIL("expected TokenizeError");
    } catch (const TokenizeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find('#') != std::string::npos);
        CHECK(msg.find('1') != std::string::npos);
    }
}

TEST_CASE("forward shape and context overflow") {
    const Model m = small_model();
    const TokenSeq toks = m.vocab().encode("the cat");
    const ad::Tensor logits = forward(m, toks);
    CHECK(logits.rows() == toks.size());
    CHECK(logits.cols() == 64);
    const TokenSeq too_long(25, m.vocab().encode("a")[0]);
    CHECK_THROWS_AS(forward(m, too_long), ContextOverflowError);
    CHECK_THROWS_AS(forward(m, TokenSeq{}), ContractError);
}

TEST_CASE("prefix extension is bitwise causal") {
    const Model m = small_model(2);
    const TokenSeq toks = m.vocab().encode("A dog sees the moon again");
    const TokenSeq full(toks.begin(), toks.begin() + 20);
    const ad::Tensor all = forward(m, full);
    for (std::size_t n : {1u, 5u, 13u, 19u}) {
        const ad::Tensor part = forward(m, std::span<const Token>(full).first(n));
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < 64; ++c) {
                REQUIRE(part.at(r, c) == all.at(r, c));
            }
        }
    }
}

TEST_CASE("perturbing token j leaves earlier logits unchanged") {
    const Model m = small_model(3);
    TokenSeq a = m.vocab().encode("we like the sea a lot");
    TokenSeq b = a;
    const std::size_t j = 9;
    b[j] = m.vocab().encode("Z")[0];
    const ad::Tensor la = forward(m, a);
    const ad::Tensor lb = forward(m, b);
    for (std::size_t r = 0; r < j; ++r) {
        for (std::size_t c = 0; c < 64; ++c) {
            REQUIRE(la.at(r, c) == lb.at(r, c));
        }
    }
    bool changed = false;
    for (std::size_t c = 0; c < 64; ++c) {
        changed = changed || la.at(j, c) != lb.at(j, c);
    }
    CHECK(changed);
}

TEST_CASE("zero head gives uniform predictions") {
    Model m = small_model();
    m.zero_head();
    const ad::Tensor logits = forward(m, m.vocab().encode("abc"));
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 64; ++c) {
            CHECK(softmax_at(logits.row(r), static_cast<Token>(c)) == doctest::Approx(1.0 / 64).epsilon(1e-12));
        }
    }
}

TEST_CASE("incremental decoder matches forward bitwise") {
    const Model m = small_model(4);
    const TokenSeq toks = m.vocab().encode("My sister buys a cake.");
    const ad::Tensor ref = forward(m, toks);
    Decoder dec(m);
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const std::span<const double> row = dec.push(toks[i]);
        for (std::size_t c = 0; c < 64; ++c) {
            REQUIRE(row[c] == ref.at(i, c));
        }
    }
}

TEST_CASE("generate: degenerate budget, forced halt, determinism and length cap") {
    Model m = small_model(5);
    const TokenSeq prompt = m.vocab().encode("the");

    DecodeConfig zero;
    zero.max_new_tokens = 0;
    const GenerationTrace z = generate(m, prompt, zero);
    CHECK(z.generated.empty());
    CHECK(z.stop_reason == StopReason::MaxLength);

    DecodeConfig cfg;
    cfg.seed = 9;
    cfg.temperature = 0.7;
    const GenerationTrace a = generate(m, prompt, cfg);
    const GenerationTrace b = generate(m, prompt, cfg);
    CHECK(a.generated == b.generated);
    CHECK(a.total_length() <= m.dims().max_context);
    for (std::size_t i = 0; i + 1 < a.generated.size(); ++i) {
        CHECK(a.generated[i] != m.eos());
    }
    if (a.stop_reason == StopReason::Eos) {
        CHECK(a.generated.back() == m.eos());
    }

    DecodeConfig greedy;
    greedy.mode = DecodeMode::Greedy;
    CHECK(generate(m, prompt, greedy).generated == generate(m, prompt, greedy).generated);

    Model rigged = small_model(5);
    rigged.set_output_bias(rigged.eos(), 1e3);
    const GenerationTrace h = generate(rigged, prompt, cfg);
    REQUIRE(h.generated.size() == 1);
    CHECK(h.generated[0] == rigged.eos());
    CHECK(h.stop_reason == StopReason::Eos);
}

TEST_CASE("generate preconditions") {
    const Model m = small_model();
    DecodeConfig cfg;
    CHECK_THROWS_AS(generate(m, TokenSeq{}, cfg), ContractError);
    const TokenSeq full(24, m.vocab().encode("a")[0]);
    CHECK_THROWS_AS(generate(m, full, cfg), ContextOverflowError);
    cfg.temperature = 0.0;
    CHECK_THROWS_AS(generate(m, m.vocab().encode("a"), cfg), ConfigError);
}

TEST_CASE("argmax ties go to the lowest index") {
    const std::vector<double> logits = {0.0, 2.0, 1.0, 2.0};
    CHECK(argmax_token(logits) == 1);
}

TEST_CASE("perplexity of a uniform model is V and ignores PAD") {
    Model m = small_model();
    m.zero_head();
    const TokenSeq t = m.vocab().encode("hello there");
    CHECK(perplexity(m, t) == doctest::Approx(64.0).epsilon(1e-10));

    const Model trained = small_model(6);
    TokenSeq padded = t;
    padded.insert(padded.begin() + 3, m.vocab().pad());
    padded.push_back(m.vocab().pad());
    CHECK(perplexity(trained, padded) == perplexity(trained, t));
    CHECK_THROWS_AS(perplexity(trained, m.vocab().encode("a")), ContractError);
}

TEST_CASE("train rejects bad corpora") {
    Model m = small_model();
    TrainConfig cfg;
    cfg.steps = 1;
    CHECK_THROWS_AS(train(m, std::vector<TokenSeq>{}, cfg), ConfigError);
    CHECK_THROWS_AS(train(m, std::vector<TokenSeq>{m.vocab().encode("no eos")}, cfg), ConfigError);
    cfg.steps = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("memorization oracle") {
    Model m = small_model(7);
    const Vocab& v = m.vocab();
    const std::vector<std::string> lines = {"The cat sees the moon."};
    const std::vector<TokenSeq> corpus = encode_corpus(v, lines);
    TrainConfig cfg;
    cfg.steps = 300;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-2;
    cfg.warmup_steps = 10;
    cfg.seed = 1;
    const std::vector<double> curve = train(m, corpus, cfg);
    CHECK(curve.front() == doctest::Approx(std::log(64.0)).epsilon(0.05));
    CHECK(curve.back() < 0.1);
    CHECK(corpus_loss(m, corpus) < 0.1);
    CHECK(perplexity(m, corpus[0]) < 1.2);
    const TokenSeq sentence(corpus[0].begin(), corpus[0].end() - 1);
    const ad::Tensor logits = forward(m, sentence);
    CHECK(softmax_at(logits.row(logits.rows() - 1), v.eos()) > 1.0 / 64.0);
}

TEST_CASE("synthetic corpus is deterministic, bounded and EOS-terminated") {
    const std::vector<std::string> a = synthesize_corpus(300, 5);
    CHECK(a == synthesize_corpus(300, 5));
    CHECK(a != synthesize_corpus(300, 6));
    const Vocab v = Vocab::default_charset();
    for (const std::string& s : a) {
        CHECK(s.size() >= kMinSentenceChars);
        CHECK(s.size() <= kMaxSentenceChars);
    }
    const std::vector<TokenSeq> enc = encode_corpus(v, a);
    for (const TokenSeq& s : enc) {
        CHECK(s.back() == v.eos());
    }
    const CorpusSplit split = split_corpus(a, 0.2, 1);
    CHECK(split.heldout.size() == 60);
    CHECK(split.train.size() + split.heldout.size() == a.size());
    CHECK_THROWS_AS(split_corpus(a, 1.0, 1), ConfigError);
}

TEST_CASE("checkpoint round trip") {
    const Model m = small_model(8);
    const auto dir = std::filesystem::temp_directory_path() / "engorgio_ckpt_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "m.bin";
    save_model(m, path);
    CHECK(std::filesystem::exists(sidecar_path(path)));
    const Model back = load_model(path);
    CHECK(back.dims() == m.dims());
    CHECK(back.vocab() == m.vocab());
    REQUIRE(back.parameters().size() == m.parameters().size());
    for (std::size_t i = 0; i < m.parameters().size(); ++i) {
        CHECK(back.parameters()[i] == m.parameters()[i]);
    }
    {
        std::ofstream bad(dir / "bad.bin", std::ios::binary);
        bad << "NOTAMODEL";
    }
    CHECK_THROWS_AS(load_model(dir / "bad.bin"), IoError);
    CHECK_THROWS_AS(load_model(dir / "missing.bin"), IoError);
    std::filesystem::remove_all(dir);
}
