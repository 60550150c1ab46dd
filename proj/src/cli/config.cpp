#include "engorgio/cli/config.hpp"

#include "engorgio/error.hpp"
#include "engorgio/rng.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace engorgio::cli {

using nlohmann::json;

namespace {

std::string join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

class Section {
public:
    Section(const json& j, std::string path, std::initializer_list<const char*> keys) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError("config: field '" + (path_.empty() ? std::string("<root>") : path_) +
                              "' must be an object");
        }
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!allowed.count(it.key())) {
                throw ConfigError("config: unknown field '" + join(path_, it.key()) + "'");
            }
        }
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    const json& at(const char* key) const { return j_.at(key); }
    std::string field(const char* key) const { return join(path_, key); }

    template <typename T>
    void uint(const char* key, T& dst) const {
        if (!has(key)) {
            return;
        }
        const json& v = at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
            throw ConfigError("config: field '" + field(key) + "' must be a non-negative integer");
        }
        dst = static_cast<T>(v.get<std::uint64_t>());
    }

    void int64(const char* key, std::int64_t& dst) const {
        if (!has(key)) {
            return;
        }
        if (!at(key).is_number_integer()) {
            throw ConfigError("config: field '" + field(key) + "' must be an integer");
        }
        dst = at(key).get<std::int64_t>();
    }

    void real(const char* key, double& dst) const {
        if (!has(key)) {
            return;
        }
        if (!at(key).is_number()) {
            throw ConfigError("config: field '" + field(key) + "' must be a number");
        }
        dst = at(key).get<double>();
    }

    void boolean(const char* key, bool& dst) const {
        if (!has(key)) {
            return;
        }
        if (!at(key).is_boolean()) {
            throw ConfigError("config: field '" + field(key) + "' must be true or false");
        }
        dst = at(key).get<bool>();
    }

    void string(const char* key, std::string& dst) const {
        if (!has(key)) {
            return;
        }
        if (!at(key).is_string()) {
            throw ConfigError("config: field '" + field(key) + "' must be a string");
        }
        dst = at(key).get<std::string>();
    }

    void opt_string(const char* key, std::optional<std::string>& dst) const {
        if (!has(key)) {
            return;
        }
        std::string s;
        string(key, s);
        dst = s;
    }

    template <typename T, typename Read>
    void list(const char* key, std::vector<T>& dst, Read read) const {
        if (!has(key)) {
            return;
        }
        const json& v = at(key);
        if (!v.is_array()) {
            throw ConfigError("config: field '" + field(key) + "' must be an array");
        }
        dst.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            dst.push_back(read(v[i], field(key) + "[" + std::to_string(i) + "]"));
        }
    }

private:
    const json& j_;
    std::string path_;
};

double read_real(const json& v, const std::string& f) {
    if (!v.is_number()) {
        throw ConfigError("config: field '" + f + "' must be a number");
    }
    return v.get<double>();
}

std::int64_t read_int(const json& v, const std::string& f) {
    if (!v.is_number_integer()) {
        throw ConfigError("config: field '" + f + "' must be an integer");
    }
    return v.get<std::int64_t>();
}

std::size_t read_size(const json& v, const std::string& f) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw ConfigError("config: field '" + f + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

std::string read_string(const json& v, const std::string& f) {
    if (!v.is_string()) {
        throw ConfigError("config: field '" + f + "' must be a string");
    }
    return v.get<std::string>();
}

void read_dims(const json& j, ModelDims& d) {
    const Section s(j, "train.dims", {"vocab", "hidden", "layers", "heads", "max_context", "mlp_ratio"});
    s.uint("vocab", d.vocab);
    s.uint("hidden", d.hidden);
    s.uint("layers", d.layers);
    s.uint("heads", d.heads);
    s.uint("max_context", d.max_context);
    s.uint("mlp_ratio", d.mlp_ratio);
}

void read_train(const json& j, TrainSection& t) {
    const Section s(j, "train",
                    {"dims", "steps", "batch_size", "learning_rate", "warmup_steps", "min_lr_ratio", "grad_clip",
                     "position_offset_augment", "pack_sequences", "corpus_lines", "heldout_fraction", "corpus_style"});
    if (s.has("dims")) {
        read_dims(s.at("dims"), t.dims);
    }
    s.uint("steps", t.config.steps);
    s.uint("batch_size", t.config.batch_size);
    s.real("learning_rate", t.config.learning_rate);
    s.uint("warmup_steps", t.config.warmup_steps);
    s.real("min_lr_ratio", t.config.min_lr_ratio);
    s.real("grad_clip", t.config.grad_clip);
    s.boolean("position_offset_augment", t.config.position_offset_augment);
    s.boolean("pack_sequences", t.config.pack_sequences);
    s.uint("corpus_lines", t.corpus_lines);
    s.real("heldout_fraction", t.heldout_fraction);
    if (s.has("corpus_style")) {
        const Section cs(s.at("corpus_style"), "train.corpus_style",
                         {"invented_name_rate", "conjunction_rate", "punctuated_rate", "chant_rate", "chant_max_chars"});
        cs.real("invented_name_rate", t.style.invented_name_rate);
        cs.real("conjunction_rate", t.style.conjunction_rate);
        cs.real("punctuated_rate", t.style.punctuated_rate);
        cs.real("chant_rate", t.style.chant_rate);
        cs.uint("chant_max_chars", t.style.chant_max_chars);
    }
}

void read_attack(const json& j, attack::AttackConfig& a) {
    const Section s(j, "attack",
                    {"steps", "learning_rate", "tau", "lambda", "prompt_length", "context_length", "loss", "prefix",
                     "infix", "init_sigma"});
    s.uint("steps", a.steps);
    s.real("learning_rate", a.learning_rate);
    s.real("tau", a.tau);
    s.real("lambda", a.lambda);
    s.uint("prompt_length", a.prompt_length);
    s.uint("context_length", a.context_length);
    if (s.has("loss")) {
        std::string loss;
        s.string("loss", loss);
        a.loss = attack::parse_loss_mode(loss);
    }
    s.string("prefix", a.prefix_text);
    s.string("infix", a.infix_text);
    s.real("init_sigma", a.init_sigma);
}

void read_eval(const json& j, EvalSection& e) {
    const Section s(j, "eval",
                    {"source", "n_samples", "mode", "temperature", "max_length", "jobs", "n_prompts", "sponge",
                     "deploy_prefix", "deploy_infix", "temperatures", "tag"});
    s.string("source", e.source);
    s.uint("n_samples", e.n_samples);
    s.string("mode", e.mode);
    s.real("temperature", e.temperature);
    s.uint("max_length", e.max_length);
    s.uint("jobs", e.jobs);
    s.uint("n_prompts", e.n_prompts);
    if (s.has("sponge")) {
        const Section sp(s.at("sponge"), "eval.sponge", {"budget", "samples_per_estimate"});
        sp.uint("budget", e.sponge.budget);
        sp.uint("samples_per_estimate", e.sponge.samples_per_estimate);
    }
    s.opt_string("deploy_prefix", e.deploy_prefix);
    s.opt_string("deploy_infix", e.deploy_infix);
    s.list("temperatures", e.temperatures, read_real);
    s.string("tag", e.tag);
}

void read_service(const json& j, ServiceSection& sv) {
    const Section s(j, "service",
                    {"capacity", "batch_seconds", "requests", "attackers", "normal_tokens", "attack_avg_len",
                     "grid_attackers", "grid_capacities", "flops_out_lens"});
    s.int64("capacity", sv.model.capacity);
    s.real("batch_seconds", sv.model.batch_seconds);
    s.int64("requests", sv.model.requests);
    s.int64("attackers", sv.model.attackers);
    s.int64("normal_tokens", sv.model.normal_tokens);
    s.int64("attack_avg_len", sv.model.attack_avg_len);
    s.list("grid_attackers", sv.grid_attackers, read_int);
    s.list("grid_capacities", sv.grid_capacities, read_int);
    s.list("flops_out_lens", sv.flops_out_lens, read_size);
}

void validate_eval(const EvalSection& e) {
    if (e.source != "bundle" && e.source != "normal" && e.source != "special" && e.source != "sponge") {
        throw ConfigError("config: field 'eval.source' must be one of bundle, normal, special, sponge; got \"" +
                          e.source + "\"");
    }
    if (e.mode != "sample" && e.mode != "greedy") {
        throw ConfigError("config: field 'eval.mode' must be \"sample\" or \"greedy\"");
    }
    if (e.n_samples < 1) {
        throw ConfigError("config: field 'eval.n_samples' must be >= 1");
    }
    if (!(e.temperature > 0.0)) {
        throw ConfigError("config: field 'eval.temperature' must be > 0");
    }
    if (e.jobs < 1) {
        throw ConfigError("config: field 'eval.jobs' must be >= 1");
    }
    if (e.n_prompts < 1) {
        throw ConfigError("config: field 'eval.n_prompts' must be >= 1");
    }
    if (e.temperatures.empty()) {
        throw ConfigError("config: field 'eval.temperatures' must be nonempty");
    }
    for (double t : e.temperatures) {
        if (!(t > 0.0)) {
            throw ConfigError("config: field 'eval.temperatures' entries must be > 0");
        }
    }
    for (char c : e.tag) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
            throw ConfigError("config: field 'eval.tag' may only contain letters, digits, '-' and '_'");
        }
    }
}

} // namespace

std::filesystem::path ExperimentConfig::model_path() const {
    return model.empty() ? out_path() / "model.bin" : std::filesystem::path(model);
}

std::filesystem::path ExperimentConfig::heldout_path() const {
    return heldout.empty() ? out_path() / "heldout.txt" : std::filesystem::path(heldout);
}

std::filesystem::path ExperimentConfig::bundle_path() const {
    return bundle.empty() ? out_path() / "attack.json" : std::filesystem::path(bundle);
}

attack::AttackConfig ExperimentConfig::attack_config() const {
    attack::AttackConfig a = attack;
    a.seed = derive_seed(seed, "attack");
    return a;
}

lm::TrainConfig ExperimentConfig::train_config() const {
    lm::TrainConfig t = train.config;
    t.seed = derive_seed(seed, "train");
    return t;
}

eval::EvalConfig ExperimentConfig::eval_config() const {
    eval::EvalConfig e;
    e.n_samples = eval.n_samples;
    e.decode.mode = eval.mode == "greedy" ? lm::DecodeMode::Greedy : lm::DecodeMode::Sample;
    e.decode.temperature = eval.temperature;
    e.decode.seed = derive_seed(seed, "eval");
    e.max_length = eval.max_length;
    e.jobs = eval.jobs;
    return e;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    const Section s(j, "", {"seed", "output_dir", "model", "corpus", "heldout", "bundle", "train", "attack", "eval",
                            "service", "report_inputs"});
    s.uint("seed", c.seed);
    s.string("output_dir", c.output_dir);
    s.string("model", c.model);
    s.string("corpus", c.corpus);
    s.string("heldout", c.heldout);
    s.string("bundle", c.bundle);
    if (s.has("train")) {
        read_train(s.at("train"), c.train);
    }
    if (s.has("attack")) {
        read_attack(s.at("attack"), c.attack);
    }
    if (s.has("eval")) {
        read_eval(s.at("eval"), c.eval);
    }
    if (s.has("service")) {
        read_service(s.at("service"), c.service);
    }
    s.list("report_inputs", c.report_inputs, read_string);
    if (c.output_dir.empty()) {
        throw ConfigError("config: field 'output_dir' must be nonempty");
    }
    c.train.dims.validate();
    c.train.config.validate();
    if (!(c.train.heldout_fraction >= 0.0 && c.train.heldout_fraction < 1.0)) {
        throw ConfigError("config: field 'train.heldout_fraction' must lie in [0, 1)");
    }
    c.attack.validate();
    validate_eval(c.eval);
    c.service.model.validate();
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["model"] = c.model;
    j["corpus"] = c.corpus;
    j["heldout"] = c.heldout;
    j["bundle"] = c.bundle;
    const ModelDims& d = c.train.dims;
    j["train"] = {
        {"dims",
         {{"vocab", d.vocab},
          {"hidden", d.hidden},
          {"layers", d.layers},
          {"heads", d.heads},
          {"max_context", d.max_context},
          {"mlp_ratio", d.mlp_ratio}}},
        {"steps", c.train.config.steps},
        {"batch_size", c.train.config.batch_size},
        {"learning_rate", c.train.config.learning_rate},
        {"warmup_steps", c.train.config.warmup_steps},
        {"min_lr_ratio", c.train.config.min_lr_ratio},
        {"grad_clip", c.train.config.grad_clip},
        {"position_offset_augment", c.train.config.position_offset_augment},
        {"pack_sequences", c.train.config.pack_sequences},
        {"corpus_lines", c.train.corpus_lines},
        {"heldout_fraction", c.train.heldout_fraction},
        {"corpus_style",
         {{"invented_name_rate", c.train.style.invented_name_rate},
          {"conjunction_rate", c.train.style.conjunction_rate},
          {"punctuated_rate", c.train.style.punctuated_rate},
          {"chant_rate", c.train.style.chant_rate},
          {"chant_max_chars", c.train.style.chant_max_chars}}},
    };
    j["attack"] = {
        {"steps", c.attack.steps},
        {"learning_rate", c.attack.learning_rate},
        {"tau", c.attack.tau},
        {"lambda", c.attack.lambda},
        {"prompt_length", c.attack.prompt_length},
        {"context_length", c.attack.context_length},
        {"loss", attack::loss_mode_name(c.attack.loss)},
        {"prefix", c.attack.prefix_text},
        {"infix", c.attack.infix_text},
        {"init_sigma", c.attack.init_sigma},
    };
    j["eval"] = {
        {"source", c.eval.source},
        {"n_samples", c.eval.n_samples},
        {"mode", c.eval.mode},
        {"temperature", c.eval.temperature},
        {"max_length", c.eval.max_length},
        {"jobs", c.eval.jobs},
        {"n_prompts", c.eval.n_prompts},
        {"sponge", {{"budget", c.eval.sponge.budget}, {"samples_per_estimate", c.eval.sponge.samples_per_estimate}}},
        {"deploy_prefix", c.eval.deploy_prefix ? json(*c.eval.deploy_prefix) : json(nullptr)},
        {"deploy_infix", c.eval.deploy_infix ? json(*c.eval.deploy_infix) : json(nullptr)},
        {"temperatures", c.eval.temperatures},
        {"tag", c.eval.tag},
    };
    const cost::ServiceModel& m = c.service.model;
    j["service"] = {
        {"capacity", m.capacity},
        {"batch_seconds", m.batch_seconds},
        {"requests", m.requests},
        {"attackers", m.attackers},
        {"normal_tokens", m.normal_tokens},
        {"attack_avg_len", m.attack_avg_len},
        {"grid_attackers", c.service.grid_attackers},
        {"grid_capacities", c.service.grid_capacities},
        {"flops_out_lens", c.service.flops_out_lens},
    };
    j["report_inputs"] = c.report_inputs;
    return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("config: cannot open " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

} // namespace engorgio::cli
