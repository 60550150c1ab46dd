// Acceptance checks against the default toy setup. One PASS/FAIL line per
// criterion; exit status is the number of failures.

#include "engorgio/attack/optimize.hpp"
#include "engorgio/cli/commands.hpp"
#include "engorgio/cli/config.hpp"
#include "engorgio/cost/flops.hpp"
#include "engorgio/cost/service.hpp"
#include "engorgio/eval/harness.hpp"
#include "engorgio/format.hpp"
#include "engorgio/lm/checkpoint.hpp"
#include "engorgio/lm/corpus.hpp"
#include "engorgio/lm/inference.hpp"
#include "engorgio/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace engorgio;

namespace {

constexpr int kSeeds = 10;

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o, double seconds) {
    std::printf("[%s] %2d %-28s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), seconds);
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

void run(int id, const std::string& name, const std::function<Outcome()>& check) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    report(id, name, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

std::string fmt(double v) { return format_double(std::round(v * 1e4) / 1e4); }

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "engorgio");
    std::ostringstream out, err;
    const int code = cli::run_command(args, out, err);
    if (code != 0) std::cerr << err.str();
    return code;
}

// Shared state: the default model, its held-out lines, and the ten default
// attack runs (reused by several criteria).
struct Lab {
    fs::path dir;
    cli::ExperimentConfig config;
    lm::Model model{lm::Vocab::default_charset(), ModelDims{}, 0};
    std::vector<std::string> heldout;
    eval::EvalConfig eval;

    struct AttackRun {
        attack::AttackResult result;
        double worst_row_error = 0.0;
        double worst_masked_mass = 0.0;
        eval::EvalReport report;
    };
    std::vector<AttackRun> runs;
    eval::EvalReport normal;
    std::vector<TokenSeq> normal_prompts;
};

Lab& lab() {
    static Lab l;
    return l;
}

void setup() {
    Lab& l = lab();
    l.dir = fs::temp_directory_path() / "engorgio_acceptance";
    fs::remove_all(l.dir);
    fs::create_directories(l.dir);
    l.config.output_dir = (l.dir / "default").string();
    const auto t0 = std::chrono::steady_clock::now();
    if (cli({"train", "-o", l.config.output_dir}) != 0) {
        throw std::runtime_error("default training run failed");
    }
    l.model = lm::load_model(l.config.model_path());
    l.heldout = lm::read_corpus(l.config.heldout_path());
    l.eval = l.config.eval_config();
    std::printf("trained default model in %.1fs\n",
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

attack::AttackConfig seeded_attack(int seed) {
    cli::ExperimentConfig c = lab().config;
    c.seed = static_cast<std::uint64_t>(seed);
    return c.attack_config();
}

void run_default_attacks() {
    Lab& l = lab();
    const std::vector<Token> mask = attack::default_mask(l.model.vocab());
    for (int s = 0; s < kSeeds; ++s) {
        Lab::AttackRun r;
        auto observer = [&](const attack::StepObservation& o) {
            const ad::Tensor& w = o.weights;
            for (std::size_t i = 0; i < w.rows(); ++i) {
                double sum = 0.0;
                for (std::size_t j = 0; j < w.cols(); ++j) sum += w.at(i, j);
                r.worst_row_error = std::max(r.worst_row_error, std::abs(sum - 1.0));
                for (Token m : mask) r.worst_masked_mass = std::max(r.worst_masked_mass, w.at(i, static_cast<std::size_t>(m)));
            }
        };
        r.result = attack::run_attack(l.model, seeded_attack(s), observer);
        r.report = eval::evaluate_prompt(l.model, r.result.input_tokens, l.eval);
        l.runs.push_back(std::move(r));
    }
}

Outcome gradient_correctness() {
    Rng rng(20240101);
    double worst = 0.0;
    std::string layout;
    for (int cfg = 0; cfg < 5; ++cfg) {
        ModelDims d;
        d.hidden = 16;
        d.layers = 2;
        d.heads = 2;
        d.max_context = 16;
        const lm::Model m(lm::Vocab::default_charset(), d, rng.next());
        const std::vector<std::pair<std::string, std::string>> hard = {{"", ""}, {"Q:", ""}, {"Q:", "A:"}, {"", "A"}};
        const auto& [prefix, infix] = hard[rng.index(hard.size())];
        const std::size_t t = 2 + rng.index(5);
        const std::size_t s = prefix.size() + infix.size() + t + 2 + rng.index(16 - prefix.size() - infix.size() - t - 1);
        const double lambda = std::vector<double>{0.0, 0.5, 1.0, 2.0}[rng.index(4)];
        const double tau = std::vector<double>{0.5, 1.0, 2.0}[rng.index(3)];
        const auto tmpl = attack::PromptTemplate::from_text(m.vocab(), prefix, infix, t, s);
        attack::ProxyDistribution p = attack::init_proxy(tmpl, d.vocab, attack::default_mask(m.vocab()), rng);
        ad::Tensor theta = p.theta;
        for (std::size_t r = 0; r < theta.rows(); ++r) {
            for (std::size_t c = 0; c < theta.cols(); ++c) {
                if (theta.at(r, c) > -1e8) theta.at(r, c) += rng.normal(0.0, 1.0);
            }
        }
        const ad::Tensor noise = attack::sample_gumbel(theta.rows(), theta.cols(), rng);
        const auto mode = attack::LossMode::EscSelfMentor;
        const ad::Tensor grad = attack::objective_gradient(m, tmpl, theta, noise, tau, mode, lambda).grad_theta;
        double scale = 0.0;
        for (double g : grad.data()) scale = std::max(scale, std::abs(g));
        double max_diff = 0.0;
        for (std::size_t r = 0; r < theta.rows(); ++r) {
            for (std::size_t c = 0; c < theta.cols(); ++c) {
                if (theta.at(r, c) < -1e8) continue;
                ad::Tensor up = theta, down = theta;
                up.at(r, c) += 1e-5;
                down.at(r, c) -= 1e-5;
                const double num = (attack::objective_gradient(m, tmpl, up, noise, tau, mode, lambda).combined -
                                    attack::objective_gradient(m, tmpl, down, noise, tau, mode, lambda).combined) /
                                   2e-5;
                max_diff = std::max(max_diff, std::abs(num - grad.at(r, c)));
            }
        }
        worst = std::max(worst, max_diff / scale);
        layout += (cfg ? "," : "") + std::to_string(t) + "/" + std::to_string(s);
    }
    return {worst < 1e-4, "max rel err " + format_double(worst) + " < 1e-4 over t/s " + layout};
}

Outcome normalization() {
    double row = 0.0, masked = 0.0;
    for (const auto& r : lab().runs) {
        row = std::max(row, r.worst_row_error);
        masked = std::max(masked, r.worst_masked_mass);
    }
    return {row <= 1e-9 && masked == 0.0,
            "max |row sum - 1| " + format_double(row) + " <= 1e-9, max masked mass " + format_double(masked) +
                " == 0 over " + std::to_string(lab().runs.size()) + " runs x 300 steps"};
}

Outcome eos_suppression() {
    const double bound = 2.0 / static_cast<double>(lab().model.dims().vocab);
    int ok = 0;
    std::string mus;
    for (const auto& r : lab().runs) {
        const auto& mu = r.result.trace.max_eos_probability;
        const bool pass = mu.back() < mu.front() && mu.back() < bound;
        ok += pass;
        mus += " " + fmt(mu.front()) + "->" + fmt(mu.back());
    }
    return {ok >= 9, std::to_string(ok) + "/10 runs with final mu < initial mu and < 2/V (need 9);" + mus};
}

Outcome effectiveness() {
    Lab& l = lab();
    const double normal = l.normal.avg_len;
    const double S = static_cast<double>(l.model.dims().max_context);
    int ok = 0;
    std::string lens;
    for (const auto& r : l.runs) {
        ok += r.report.avg_len >= 2.0 * normal && r.report.avg_rate >= 0.5;
        lens += " " + fmt(r.report.avg_len) + "/" + fmt(r.report.avg_rate);
    }
    const bool silent = normal < 0.5 * S;
    return {silent && ok >= 8, "normal Avg-len " + fmt(normal) + " (< " + fmt(0.5 * S) + ": " + (silent ? "yes" : "no") +
                                   "); " + std::to_string(ok) +
                                   "/10 runs with Avg-len >= 2x normal and Avg-rate >= 0.5 (need 8); len/rate" + lens};
}

Outcome baseline_ordering() {
    Lab& l = lab();
    eval::SpongeConfig sc = l.config.eval.sponge;
    sc.prompt_length = l.config.attack.prompt_length;
    int ok = 0;
    std::string rates;
    for (int s = 0; s < kSeeds; ++s) {
        Rng rng(derive_seed(static_cast<std::uint64_t>(s), "sponge"));
        const eval::SpongeResult sp = eval::sponge_search(l.model, sc, l.eval, rng);
        const eval::EvalReport sponge = eval::evaluate_prompt(l.model, sp.prompt, l.eval);
        const double e = l.runs[static_cast<std::size_t>(s)].report.avg_rate;
        ok += e > sponge.avg_rate && sponge.avg_rate > l.normal.avg_rate;
        rates += " " + fmt(e) + ">" + fmt(sponge.avg_rate);
    }
    return {ok >= 8, std::to_string(ok) + "/10 seeds with engorgio > sponge > normal (" + fmt(l.normal.avg_rate) +
                         ") Avg-rate (need 8);" + rates};
}

Outcome ablation() {
    Lab& l = lab();
    double full = 0.0, esc = 0.0;
    for (int s = 0; s < kSeeds; ++s) {
        attack::AttackConfig a = seeded_attack(s);
        a.loss = attack::LossMode::EscOnly;
        const attack::AttackResult r = attack::run_attack(l.model, a);
        esc += eval::evaluate_prompt(l.model, r.input_tokens, l.eval).avg_len / kSeeds;
        full += l.runs[static_cast<std::size_t>(s)].report.avg_len / kSeeds;
    }
    return {full >= 0.98 * esc, "mean Avg-len ESC+SM " + fmt(full) + " >= 0.98 x ESC-only " + fmt(esc)};
}

Outcome temperature_trend() {
    Lab& l = lab();
    eval::EvalConfig cold = l.eval, warm = l.eval;
    cold.decode.temperature = 0.1;
    warm.decode.temperature = 0.7;
    // the fixed prompt is the default-seed attack; the other seeds are reported for context
    double a = 0.0, b = 0.0;
    int holds = 0;
    for (std::size_t i = 0; i < l.runs.size(); ++i) {
        const TokenSeq& prompt = l.runs[i].result.input_tokens;
        const double ci = eval::evaluate_prompt(l.model, prompt, cold).avg_rate;
        const double wi = eval::evaluate_prompt(l.model, prompt, warm).avg_rate;
        holds += ci >= wi;
        if (i == 0) {
            a = ci;
            b = wi;
        }
    }
    return {a >= b, "Avg-rate T=0.1 " + fmt(a) + " >= T=0.7 " + fmt(b) + " (trend holds for " + std::to_string(holds) +
                        "/10 seeded prompts)"};
}

Outcome queuing() {
    auto model = [](std::int64_t k) {
        cost::ServiceModel s;
        s.capacity = 2;
        s.batch_seconds = 1.0;
        s.requests = 10;
        s.attackers = k;
        s.normal_tokens = 100;
        s.attack_avg_len = 1032;
        return s;
    };
    bool ok = true;
    Rng rng(7);
    std::string detail;
    for (std::int64_t k = 0; k <= 10; ++k) {
        for (std::int64_t c : {1, 2, 4, 7}) {
            cost::ServiceModel s = model(k);
            s.capacity = c;
            const std::int64_t tokens = (10 - k) * 100 + k * 1000;
            const double hand_total = static_cast<double>((tokens + c - 1) / c);
            const cost::ServiceResult r = cost::simulate_service(s);
            const cost::EventResult ev = cost::discrete_event_check(s, rng);
            ok = ok && r.l_total == hand_total && r.l_req == hand_total / 10.0 && ev.l_total == r.l_total &&
                 ev.l_req == r.l_req;
        }
    }
    const cost::ServiceResult w = cost::simulate_service(model(1));
    const cost::EventResult ev = cost::discrete_event_check(model(1), rng);
    ok = ok && w.l_req == 95.0 && ev.l_req == 95.0;
    detail = "worked example L_req " + format_double(w.l_req) + " s (discrete-event " + format_double(ev.l_req) +
             "); 44 grid points exact";
    return {ok, detail};
}

Outcome super_linearity() {
    const ModelDims d;
    const std::size_t p = 32;
    bool ok = true;
    std::size_t tested = 0;
    for (std::size_t m = 1; 2 * m <= d.max_context - p; ++m) {
        ok = ok && cost::generation_flops(d, p, 2 * m).output > 2 * cost::generation_flops(d, p, m).output;
        ++tested;
    }
    std::vector<double> x, y;
    for (std::size_t m = 0; m <= d.max_context - p; m += 8) {
        x.push_back(static_cast<double>(m));
        y.push_back(static_cast<double>(cost::generation_flops(d, p, m).total()));
    }
    const double r2 = cost::linear_fit_r2(x, y);
    return {ok && r2 > 0.99, "output FLOPs(2m) > 2 FLOPs(m) for all " + std::to_string(tested) +
                                 " m: " + (ok ? "yes" : "no") + "; curve R^2 " + format_double(r2) + " > 0.99"};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::string bytes{std::istreambuf_iterator<char>(in), {}};
        const std::string root = dir.string();
        for (std::size_t pos = bytes.find(root); pos != std::string::npos; pos = bytes.find(root, pos)) {
            bytes.replace(pos, root.size(), "<out>");
        }
        files[fs::relative(e.path(), dir).string()] = bytes;
    }
    return files;
}

Outcome determinism() {
    const fs::path base = lab().dir / "rerun";
    auto pipeline = [&](const std::string& name) {
        const fs::path out = base / name;
        fs::create_directories(out);
        const fs::path cfg = base / (name + ".json");
        std::ofstream(cfg) << R"({"seed": 3, "output_dir": ")" << out.string() << R"(",
            "train": {"steps": 60, "corpus_lines": 300},
            "attack": {"steps": 20},
            "eval": {"n_samples": 20, "n_prompts": 20, "jobs": 2, "temperatures": [0.1, 0.7],
                     "sponge": {"budget": 10, "samples_per_estimate": 2}}})";
        const std::string c = cfg.string();
        int rc = 0;
        rc |= cli({"train", "-c", c});
        rc |= cli({"attack", "-c", c});
        rc |= cli({"eval", "-c", c});
        rc |= cli({"eval", "-c", c, "--baseline", "normal"});
        rc |= cli({"eval", "-c", c, "--baseline", "special"});
        rc |= cli({"eval", "-c", c, "--baseline", "sponge"});
        rc |= cli({"sweep", "-c", c});
        rc |= cli({"simulate", "-c", c});
        rc |= cli({"report", "-c", c, (out / "eval_engorgio.json").string(), (out / "eval_normal.json").string()});
        return std::make_pair(rc, snapshot(out));
    };
    const auto [rc1, a] = pipeline("a");
    const auto [rc2, b] = pipeline("b");
    std::size_t same = 0;
    std::string differ;
    for (const auto& [name, bytes] : a) {
        const auto it = b.find(name);
        if (it != b.end() && it->second == bytes) {
            ++same;
        } else {
            differ += " " + name;
        }
    }
    const bool ok = rc1 == 0 && rc2 == 0 && a.size() == b.size() && same == a.size() && !a.empty();
    return {ok, std::to_string(same) + "/" + std::to_string(a.size()) + " artifacts byte-identical across reruns" +
                    (differ.empty() ? "" : "; differ:" + differ)};
}

Outcome filter_tradeoff() {
    Lab& l = lab();
    std::vector<TokenSeq> attack_prompts, legit;
    for (const auto& r : l.runs) attack_prompts.push_back(r.result.prompt);
    for (std::size_t i = 0; i < l.heldout.size() && legit.size() < 200; ++i) {
        legit.push_back(l.model.vocab().encode(l.heldout[i]));
    }
    const eval::FilterReport f = eval::perplexity_filter_eval(l.model, legit, attack_prompts);
    const double max_legit = *std::max_element(f.legit_ppl.begin(), f.legit_ppl.end());
    return {legit.size() == 200 && f.fpr > 0.0,
            "threshold " + fmt(f.threshold) + " catches 10/10 attack prompts; FPR " + fmt(f.fpr) + " on " +
                std::to_string(legit.size()) + " legit prompts (max legit ppl " + fmt(max_legit) + ")"};
}

} // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IOLBF, 0);
    setup();
    Lab& l = lab();
    {
        Rng rng(derive_seed(l.config.seed, "baseline"));
        l.normal_prompts = eval::baseline_prompts(eval::BaselineKind::Normal, l.model.vocab(), l.heldout,
                                                  l.config.attack.prompt_length, l.config.eval.n_prompts, rng);
        l.normal = eval::evaluate_prompt_set(l.model, l.normal_prompts, l.eval);
    }
    const auto t0 = std::chrono::steady_clock::now();
    run_default_attacks();
    std::printf("ran %d default attacks with evaluation in %.1fs\n", kSeeds,
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

    run(1, "gradient correctness", gradient_correctness);
    run(2, "normalization invariants", normalization);
    run(3, "EOS suppression", eos_suppression);
    run(4, "attack effectiveness", effectiveness);
    run(5, "baseline ordering", baseline_ordering);
    run(6, "loss ablation", ablation);
    run(7, "temperature trend", temperature_trend);
    run(8, "queuing model exactness", queuing);
    run(9, "cost super-linearity", super_linearity);
    run(10, "determinism", determinism);
    run(11, "perplexity filter tradeoff", filter_tradeoff);
    std::printf("%d/11 criteria passed\n", 11 - failures);
    return failures;
}
