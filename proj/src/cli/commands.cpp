#include "engorgio/cli/commands.hpp"

#include "engorgio/attack/optimize.hpp"
#include "engorgio/cli/config.hpp"
#include "engorgio/cost/flops.hpp"
#include "engorgio/cost/service.hpp"
#include "engorgio/error.hpp"
#include "engorgio/format.hpp"
#include "engorgio/eval/harness.hpp"
#include "engorgio/lm/checkpoint.hpp"
#include "engorgio/lm/corpus.hpp"
#include "engorgio/lm/inference.hpp"
#include "engorgio/lm/train.hpp"
#include "engorgio/rng.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace engorgio::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Overrides {
    std::string config;
    std::uint64_t seed = 0;
    std::string out_dir, model, corpus, heldout, bundle;
    std::size_t jobs = 1;
    // train
    std::size_t train_steps = 0, lines = 0;
    // attack
    std::size_t attack_steps = 0, prompt_length = 0;
    double lr = 0, tau = 0, lambda = 0;
    std::string loss, prefix, infix;
    // eval / sweep
    std::string source;
    std::size_t samples = 0, budget = 0;
    double temperature = 0;
    bool greedy = false;
    std::string deploy_prefix, deploy_infix, tag;
    std::vector<double> temperatures;
    // simulate
    std::int64_t capacity = 0, requests = 0, attackers = 0, normal_tokens = 0, avg_len = 0;
    double batch_seconds = 0;
    // report
    std::vector<std::string> inputs;
};

bool given(const CLI::App* app, const char* name) {
    const CLI::Option* opt = app->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("-c,--config", o.config, "JSON config file");
    app->add_option("--seed", o.seed, "top-level seed");
    app->add_option("-o,--out", o.out_dir, "output directory (env ENGORGIO_OUT_DIR)");
    app->add_option("--model", o.model, "model checkpoint path");
    app->add_option("--jobs", o.jobs, "sampling threads")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const CLI::App* app, const Overrides& o) {
    ExperimentConfig c = o.config.empty() ? config_from_json(json::object()) : load_config(o.config);
    if (const char* env = std::getenv("ENGORGIO_OUT_DIR"); env != nullptr && *env != '\0') {
        c.output_dir = env;
    }
    if (given(app, "--seed")) c.seed = o.seed;
    if (given(app, "--out")) c.output_dir = o.out_dir;
    if (given(app, "--model")) c.model = o.model;
    if (given(app, "--jobs")) c.eval.jobs = o.jobs;
    if (given(app, "--corpus")) c.corpus = o.corpus;
    if (given(app, "--heldout")) c.heldout = o.heldout;
    if (given(app, "--bundle")) c.bundle = o.bundle;
    if (given(app, "--lines")) c.train.corpus_lines = o.lines;
    if (app->get_name() == "train" && given(app, "--steps")) c.train.config.steps = o.train_steps;
    if (app->get_name() == "attack" && given(app, "--steps")) c.attack.steps = o.attack_steps;
    if (given(app, "--prompt-length")) c.attack.prompt_length = o.prompt_length;
    if (given(app, "--lr")) c.attack.learning_rate = o.lr;
    if (given(app, "--tau")) c.attack.tau = o.tau;
    if (given(app, "--lambda")) c.attack.lambda = o.lambda;
    if (given(app, "--loss")) c.attack.loss = attack::parse_loss_mode(o.loss);
    if (given(app, "--prefix")) c.attack.prefix_text = o.prefix;
    if (given(app, "--infix")) c.attack.infix_text = o.infix;
    if (given(app, "--source")) c.eval.source = o.source;
    if (given(app, "--baseline")) c.eval.source = o.source;
    if (given(app, "--samples")) c.eval.n_samples = o.samples;
    if (given(app, "--budget")) c.eval.sponge.budget = o.budget;
    if (given(app, "--temperature")) c.eval.temperature = o.temperature;
    if (given(app, "--greedy")) c.eval.mode = "greedy";
    if (given(app, "--deploy-prefix")) c.eval.deploy_prefix = o.deploy_prefix;
    if (given(app, "--deploy-infix")) c.eval.deploy_infix = o.deploy_infix;
    if (given(app, "--tag")) c.eval.tag = o.tag;
    if (given(app, "--temperatures")) c.eval.temperatures = o.temperatures;
    if (given(app, "--capacity")) c.service.model.capacity = o.capacity;
    if (given(app, "--requests")) c.service.model.requests = o.requests;
    if (given(app, "--attackers")) c.service.model.attackers = o.attackers;
    if (given(app, "--normal-tokens")) c.service.model.normal_tokens = o.normal_tokens;
    if (given(app, "--avg-len")) c.service.model.attack_avg_len = o.avg_len;
    if (given(app, "--batch-seconds")) c.service.model.batch_seconds = o.batch_seconds;
    if (given(app, "inputs")) c.report_inputs = o.inputs;
    // Re-run validation over the merged values.
    return config_from_json(config_to_json(c));
}

void require_file(const fs::path& p, const std::string& field) {
    if (!fs::is_regular_file(p)) {
        throw IoError(field + ": file not found: " + p.string());
    }
}

void prepare_out(const ExperimentConfig& c) {
    std::error_code ec;
    fs::create_directories(c.out_path(), ec);
    if (ec || !fs::is_directory(c.out_path())) {
        throw IoError("output_dir: cannot create " + c.output_dir);
    }
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) {
        throw IoError("cannot write " + p.string());
    }
    f << text;
    if (!f) {
        throw IoError("cannot write " + p.string());
    }
}

void write_json(const fs::path& p, const json& j) {
    write_text(p, j.dump(2) + "\n");
}

json read_json(const fs::path& p, const std::string& field) {
    require_file(p, field);
    std::ifstream in(p);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(field + ": " + p.string() + " is not valid JSON: " + e.what());
    }
}

template <typename T>
T bundle_field(const json& j, const char* key, const fs::path& p) {
    if (!j.contains(key)) {
        throw ConfigError("bundle " + p.string() + ": missing field '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bundle " + p.string() + ": field '" + key + "' has the wrong type");
    }
}

json report_json(const eval::EvalReport& r) {
    json stops = {{"eos", r.eos_stops}, {"max_length", r.max_length_stops}};
    return {{"n_samples", r.samples.size()}, {"max_length", r.max_length}, {"avg_len", r.avg_len},
            {"avg_output_len", r.avg_output_len}, {"avg_rate", r.avg_rate}, {"stop_reasons", stops}};
}

std::vector<std::string> decode_all(const lm::Vocab& vocab, const std::vector<TokenSeq>& prompts) {
    std::vector<std::string> out;
    for (const TokenSeq& p : prompts) {
        out.push_back(vocab.decode(p));
    }
    return out;
}

// ---------------------------------------------------------------- train

int cmd_train(const ExperimentConfig& c, std::ostream& out) {
    prepare_out(c);
    const lm::Vocab vocab = lm::Vocab::default_charset();
    std::vector<std::string> lines;
    if (!c.corpus.empty()) {
        require_file(c.corpus, "corpus");
        lines = lm::read_corpus(c.corpus);
    } else {
        lines = lm::synthesize_corpus(c.train.corpus_lines, derive_seed(c.seed, "corpus"), c.train.style);
        lm::write_corpus(c.out_path() / "corpus.txt", lines);
    }
    const lm::CorpusSplit split = lm::split_corpus(lines, c.train.heldout_fraction, derive_seed(c.seed, "split"));
    lm::write_corpus(c.out_path() / "heldout.txt", split.heldout);
    const std::vector<TokenSeq> train_set = lm::encode_corpus(vocab, split.train);

    lm::Model model(vocab, c.train.dims, derive_seed(c.seed, "model"));
    const std::vector<double> curve = lm::train(model, train_set, c.train_config());
    lm::save_model(model, c.model_path());

    std::ostringstream csv;
    csv << "step,loss\n";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        csv << i << ',' << format_double(curve[i]) << '\n';
    }
    write_text(c.out_path() / "train_loss.csv", csv.str());

    json summary = {{"kind", "train"},           {"config", config_to_json(c)},
                    {"model", c.model_path().string()},
                    {"train_lines", split.train.size()}, {"heldout_lines", split.heldout.size()},
                    {"final_loss", curve.back()}};
    if (!split.heldout.empty()) {
        summary["heldout_loss"] = lm::corpus_loss(model, lm::encode_corpus(vocab, split.heldout));
    }
    write_json(c.out_path() / "train.json", summary);
    out << "trained " << curve.size() << " steps, final loss " << curve.back() << " -> " << c.model_path().string()
        << '\n';
    return 0;
}

// ---------------------------------------------------------------- attack

int cmd_attack(const ExperimentConfig& c, std::ostream& out) {
    require_file(c.model_path(), "model");
    prepare_out(c);
    const lm::Model model = lm::load_model(c.model_path());
    const attack::AttackConfig cfg = c.attack_config();
    const attack::AttackResult res = attack::run_attack(model, cfg);
    const lm::Vocab& vocab = model.vocab();

    lm::TensorContainer theta;
    theta.kind = lm::ContainerKind::Proxy;
    theta.dims = model.dims();
    theta.tensors.push_back(res.proxy.theta);
    const fs::path theta_path = c.bundle_path().string() + ".theta.bin";
    lm::write_container(theta_path, theta);

    std::ostringstream csv;
    csv << "step,esc,self_mentor,combined,max_eos_probability\n";
    for (std::size_t i = 0; i < res.trace.esc.size(); ++i) {
        csv << i << ',' << format_double(res.trace.esc[i]) << ',' << format_double(res.trace.self_mentor[i]) << ','
            << format_double(res.trace.combined[i]) << ',' << format_double(res.trace.max_eos_probability[i]) << '\n';
    }
    write_text(c.out_path() / "attack_trace.csv", csv.str());

    json bundle = {
        {"kind", "attack"},
        {"config", config_to_json(c)},
        {"model", c.model_path().string()},
        {"loss", attack::loss_mode_name(cfg.loss)},
        {"prompt_text", vocab.decode(res.prompt)},
        {"prompt_tokens", res.prompt},
        {"prefix_text", cfg.prefix_text},
        {"infix_text", cfg.infix_text},
        {"input_tokens", res.input_tokens},
        {"prompt_perplexity", res.prompt.size() >= 2 ? json(lm::perplexity(model, res.prompt)) : json(nullptr)},
        {"theta", theta_path.string()},
        {"trace",
         {{"esc", res.trace.esc},
          {"self_mentor", res.trace.self_mentor},
          {"combined", res.trace.combined},
          {"max_eos_probability", res.trace.max_eos_probability}}},
    };
    write_json(c.bundle_path(), bundle);
    out << "prompt: " << vocab.decode(res.prompt) << '\n';
    if (!res.trace.max_eos_probability.empty()) {
        out << "max EOS probability " << res.trace.max_eos_probability.front() << " -> "
            << res.trace.max_eos_probability.back() << '\n';
    }
    out << "bundle -> " << c.bundle_path().string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- prompt sources

struct PromptSource {
    std::string method;
    std::vector<TokenSeq> prompts;
    json extra = json::object();
};

PromptSource resolve_prompts(const ExperimentConfig& c, const lm::Model& model) {
    const lm::Vocab& vocab = model.vocab();
    PromptSource src;
    src.method = c.eval.source;
    if (c.eval.source == "bundle") {
        const fs::path p = c.bundle_path();
        const json b = read_json(p, "bundle");
        const auto prompt = bundle_field<TokenSeq>(b, "prompt_tokens", p);
        const std::string prefix = c.eval.deploy_prefix ? *c.eval.deploy_prefix : bundle_field<std::string>(b, "prefix_text", p);
        const std::string infix = c.eval.deploy_infix ? *c.eval.deploy_infix : bundle_field<std::string>(b, "infix_text", p);
        TokenSeq input = vocab.encode(prefix);
        input.insert(input.end(), prompt.begin(), prompt.end());
        const TokenSeq inf = vocab.encode(infix);
        input.insert(input.end(), inf.begin(), inf.end());
        src.method = "engorgio";
        src.prompts.push_back(std::move(input));
        src.extra = {{"bundle", p.string()}, {"deploy_prefix", prefix}, {"deploy_infix", infix}};
        return src;
    }
    if (c.eval.source == "sponge") {
        Rng rng(derive_seed(c.seed, "sponge"));
        eval::SpongeConfig sp = c.eval.sponge;
        sp.prompt_length = c.attack.prompt_length;
        const eval::SpongeResult r = eval::sponge_search(model, sp, c.eval_config(), rng);
        src.prompts.push_back(r.prompt);
        src.extra = {{"sponge_best_score", r.best_score}, {"sponge_budget", sp.budget}};
        return src;
    }
    require_file(c.heldout_path(), "heldout");
    const std::vector<std::string> lines = lm::read_corpus(c.heldout_path());
    Rng rng(derive_seed(c.seed, "baseline"));
    src.prompts = eval::baseline_prompts(eval::parse_baseline_kind(c.eval.source), vocab, lines,
                                         c.attack.prompt_length, c.eval.n_prompts, rng);
    return src;
}

std::string stem(const ExperimentConfig& c, const std::string& base, const std::string& method) {
    std::string s = base + "_" + method;
    if (!c.eval.tag.empty()) {
        s += "_" + c.eval.tag;
    }
    return s;
}

// ---------------------------------------------------------------- eval

int cmd_eval(const ExperimentConfig& c, std::ostream& out) {
    require_file(c.model_path(), "model");
    prepare_out(c);
    const lm::Model model = lm::load_model(c.model_path());
    const PromptSource src = resolve_prompts(c, model);
    const eval::EvalConfig ecfg = c.eval_config();
    const eval::EvalReport rep = eval::evaluate_prompt_set(model, src.prompts, ecfg);

    const std::string name = stem(c, "eval", src.method);
    std::ostringstream csv;
    eval::write_samples_csv(csv, rep);
    write_text(c.out_path() / (name + ".csv"), csv.str());

    json j = report_json(rep);
    j["kind"] = "eval";
    j["config"] = config_to_json(c);
    j["method"] = src.method;
    j["model"] = c.model_path().string();
    j["temperature"] = ecfg.decode.temperature;
    j["prompts"] = decode_all(model.vocab(), src.prompts);
    j["source"] = src.extra;
    write_json(c.out_path() / (name + ".json"), j);
    out << src.method << ": Avg-len " << rep.avg_len << ", Avg-rate " << rep.avg_rate << " over "
        << rep.samples.size() << " samples -> " << (c.out_path() / (name + ".json")).string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- sweep

int cmd_sweep(const ExperimentConfig& c, std::ostream& out) {
    require_file(c.model_path(), "model");
    prepare_out(c);
    const lm::Model model = lm::load_model(c.model_path());
    const PromptSource src = resolve_prompts(c, model);
    const std::string name = stem(c, "sweep", src.method);

    json rows = json::array();
    std::ostringstream csv;
    csv << "temperature,avg_len,avg_output_len,avg_rate\n";
    for (double t : c.eval.temperatures) {
        eval::EvalConfig ecfg = c.eval_config();
        ecfg.decode.temperature = t;
        const eval::EvalReport rep = eval::evaluate_prompt_set(model, src.prompts, ecfg);
        std::ostringstream per;
        eval::write_samples_csv(per, rep);
        write_text(c.out_path() / (name + "_t" + format_double(t) + ".csv"), per.str());
        csv << format_double(t) << ',' << format_double(rep.avg_len) << ',' << format_double(rep.avg_output_len) << ','
            << format_double(rep.avg_rate) << '\n';
        json r = report_json(rep);
        r["temperature"] = t;
        rows.push_back(r);
        out << "T=" << t << ": Avg-len " << rep.avg_len << ", Avg-rate " << rep.avg_rate << '\n';
    }
    write_text(c.out_path() / (name + ".csv"), csv.str());
    write_json(c.out_path() / (name + ".json"), {{"kind", "sweep"},
                                                 {"config", config_to_json(c)},
                                                 {"method", src.method},
                                                 {"model", c.model_path().string()},
                                                 {"prompts", decode_all(model.vocab(), src.prompts)},
                                                 {"reports", rows}});
    return 0;
}

// ---------------------------------------------------------------- simulate

json service_json(const cost::ServiceResult& r) {
    return {{"total_tokens", r.total_tokens},
            {"batches", r.batches},
            {"l_total", r.l_total},
            {"l_req", r.l_req},
            {"throughput", r.throughput ? json(*r.throughput) : json(nullptr)}};
}

json event_json(const cost::EventResult& r) {
    return {{"l_total", r.l_total}, {"l_req", r.l_req}, {"mean_completion", r.mean_completion}};
}

int cmd_simulate(const ExperimentConfig& c, std::ostream& out) {
    prepare_out(c);
    const cost::ServiceModel& svc = c.service.model;
    const cost::ServiceResult closed = cost::simulate_service(svc);
    Rng rng_pooled(derive_seed(c.seed, "service"));
    const cost::EventResult pooled = cost::discrete_event_check(svc, rng_pooled, cost::SlotPolicy::Pooled);
    Rng rng_strict(derive_seed(c.seed, "service"));
    const cost::EventResult strict = cost::discrete_event_check(svc, rng_strict, cost::SlotPolicy::OneTokenPerRequest);

    const std::vector<cost::ServiceRow> grid =
        cost::service_grid(svc, c.service.grid_attackers, c.service.grid_capacities);
    std::ostringstream grid_csv;
    cost::write_service_csv(grid_csv, grid);
    write_text(c.out_path() / "service_grid.csv", grid_csv.str());

    const ModelDims& dims = c.train.dims;
    const std::size_t t = c.attack.prompt_length;
    if (t < 1 || t >= dims.max_context) {
        throw ConfigError("config: field 'attack.prompt_length' must lie in [1, train.dims.max_context - 1]");
    }
    std::vector<std::size_t> lens = c.service.flops_out_lens;
    if (lens.empty()) {
        for (std::size_t m = 0; m + t <= dims.max_context; m += 8) {
            lens.push_back(m);
        }
        if (lens.back() != dims.max_context - t) {
            lens.push_back(dims.max_context - t);
        }
    }
    const std::vector<cost::FlopsPoint> kv = cost::flops_curve(dims, t, lens, cost::CacheMode::KvCache);
    const std::vector<cost::FlopsPoint> nocache = cost::flops_curve(dims, t, lens, cost::CacheMode::NoCache);
    std::ostringstream flops_csv;
    cost::write_flops_csv(flops_csv, kv);
    write_text(c.out_path() / "flops.csv", flops_csv.str());
    std::ostringstream nocache_csv;
    cost::write_flops_csv(nocache_csv, nocache);
    write_text(c.out_path() / "flops_nocache.csv", nocache_csv.str());

    json grid_rows = json::array();
    for (const cost::ServiceRow& r : grid) {
        json row = service_json(r.result);
        row["k"] = r.attackers;
        row["r"] = r.requests;
        row["C"] = r.capacity;
        grid_rows.push_back(row);
    }
    write_json(c.out_path() / "simulate.json", {{"kind", "simulate"},
                                                {"config", config_to_json(c)},
                                                {"closed_form", service_json(closed)},
                                                {"discrete_event_pooled", event_json(pooled)},
                                                {"discrete_event_one_token_per_request", event_json(strict)},
                                                {"grid", grid_rows}});
    out << "L_total " << closed.l_total << " s, L_req " << closed.l_req << " s, throughput ";
    if (closed.throughput) {
        out << *closed.throughput << " req/min";
    } else {
        out << "unbounded";
    }
    out << "; discrete-event L_total " << pooled.l_total << " s\n";
    return 0;
}

// ---------------------------------------------------------------- report

int cmd_report(const ExperimentConfig& c, std::ostream& out) {
    if (c.report_inputs.empty()) {
        throw ConfigError("report: no inputs (pass eval JSON files or set 'report_inputs')");
    }
    prepare_out(c);
    // method -> model -> cell, in first-seen order
    std::vector<std::string> methods, models;
    std::map<std::pair<std::string, std::string>, json> cells;
    json rows = json::array();
    for (const std::string& in : c.report_inputs) {
        const fs::path p(in);
        const json j = read_json(p, "report input");
        const auto method = bundle_field<std::string>(j, "method", p);
        const auto model = bundle_field<std::string>(j, "model", p);
        const auto avg_len = bundle_field<double>(j, "avg_len", p);
        const auto avg_rate = bundle_field<double>(j, "avg_rate", p);
        std::string label = method;
        const json& cfg = j.contains("config") ? j.at("config") : json::object();
        if (cfg.contains("eval") && cfg.at("eval").contains("tag") && !cfg.at("eval").at("tag").get<std::string>().empty()) {
            label += ":" + cfg.at("eval").at("tag").get<std::string>();
        }
        if (std::find(methods.begin(), methods.end(), label) == methods.end()) methods.push_back(label);
        if (std::find(models.begin(), models.end(), model) == models.end()) models.push_back(model);
        cells[{label, model}] = {{"avg_len", avg_len}, {"avg_rate", avg_rate}};
        rows.push_back({{"method", label}, {"model", model}, {"avg_len", avg_len}, {"avg_rate", avg_rate},
                        {"source", in}});
    }
    json table = json::object();
    std::ostringstream csv;
    csv << "method,model,avg_len,avg_rate\n";
    out << "| method |";
    for (const std::string& m : models) out << ' ' << m << " Avg-len | " << m << " Avg-rate |";
    out << '\n' << "|---|";
    for (std::size_t i = 0; i < models.size(); ++i) out << "---|---|";
    out << '\n';
    for (const std::string& method : methods) {
        out << "| " << method << " |";
        for (const std::string& model : models) {
            const auto it = cells.find({method, model});
            if (it == cells.end()) {
                out << " - | - |";
                continue;
            }
            table[method][model] = it->second;
            const double len = it->second.at("avg_len").get<double>();
            const double rate = it->second.at("avg_rate").get<double>();
            csv << method << ',' << model << ',' << format_double(len) << ',' << format_double(rate) << '\n';
            out << ' ' << len << " | " << rate << " |";
        }
        out << '\n';
    }
    write_text(c.out_path() / "report.csv", csv.str());
    write_json(c.out_path() / "report.json",
               {{"kind", "report"}, {"config", config_to_json(c)}, {"rows", rows}, {"table", table}});
    return 0;
}

} // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Engorgio inference-cost attack lab"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");
    Overrides o;

    CLI::App* train = app.add_subcommand("train", "train the toy model on a corpus");
    add_common(train, o);
    train->add_option("--corpus", o.corpus, "corpus file (one document per line); synthesized when absent");
    train->add_option("--steps", o.train_steps, "training steps");
    train->add_option("--lines", o.lines, "synthesized corpus size");

    CLI::App* att = app.add_subcommand("attack", "optimize an Engorgio prompt against a model");
    add_common(att, o);
    att->add_option("--bundle", o.bundle, "attack bundle output path");
    att->add_option("--steps", o.attack_steps, "optimization steps (0 keeps the random init)");
    att->add_option("--prompt-length", o.prompt_length, "prompt length t");
    att->add_option("--lr", o.lr, "Adam learning rate");
    att->add_option("--tau", o.tau, "Gumbel-softmax temperature");
    att->add_option("--lambda", o.lambda, "self-mentor coefficient");
    att->add_option("--loss", o.loss, "esc | esc+self-mentor");
    att->add_option("--prefix", o.prefix, "semantic prefix text");
    att->add_option("--infix", o.infix, "infix text after the prompt");

    auto add_eval_opts = [&](CLI::App* sub) {
        add_common(sub, o);
        sub->add_option("--bundle", o.bundle, "attack bundle to evaluate");
        sub->add_option("--heldout", o.heldout, "held-out corpus for baselines");
        sub->add_option("--source", o.source, "bundle | normal | special | sponge");
        sub->add_option("--baseline", o.source, "normal | special | sponge");
        sub->add_option("--samples", o.samples, "samples per evaluation");
        sub->add_option("--budget", o.budget, "sponge search candidate budget");
        sub->add_option("--prompt-length", o.prompt_length, "baseline prompt length");
        sub->add_flag("--greedy", o.greedy, "greedy decoding");
        sub->add_option("--deploy-prefix", o.deploy_prefix, "prefix used at deployment");
        sub->add_option("--deploy-infix", o.deploy_infix, "infix used at deployment");
        sub->add_option("--tag", o.tag, "suffix for artifact names");
    };
    CLI::App* ev = app.add_subcommand("eval", "measure Avg-len / Avg-rate for a prompt source");
    add_eval_opts(ev);
    ev->add_option("--temperature", o.temperature, "sampling temperature");

    CLI::App* sw = app.add_subcommand("sweep", "evaluate a prompt source over a temperature grid");
    add_eval_opts(sw);
    sw->add_option("--temperatures", o.temperatures, "temperature grid");

    CLI::App* sim = app.add_subcommand("simulate", "closed-form and discrete-event serving cost");
    add_common(sim, o);
    sim->add_option("--capacity", o.capacity, "C");
    sim->add_option("--batch-seconds", o.batch_seconds, "T_b");
    sim->add_option("--requests", o.requests, "r");
    sim->add_option("--attackers", o.attackers, "k");
    sim->add_option("--normal-tokens", o.normal_tokens, "c_n");
    sim->add_option("--avg-len", o.avg_len, "z");

    CLI::App* rep = app.add_subcommand("report", "collect eval reports into a method x model table");
    add_common(rep, o);
    rep->add_option("inputs", o.inputs, "eval JSON files");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        for (CLI::App* sub : app.get_subcommands()) {
            const ExperimentConfig c = resolve(sub, o);
            const std::string& name = sub->get_name();
            if (name == "train") return cmd_train(c, out);
            if (name == "attack") return cmd_attack(c, out);
            if (name == "eval") return cmd_eval(c, out);
            if (name == "sweep") return cmd_sweep(c, out);
            if (name == "simulate") return cmd_simulate(c, out);
            if (name == "report") return cmd_report(c, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace engorgio::cli
