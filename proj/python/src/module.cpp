#include "engorgio/attack/optimize.hpp"
#include "engorgio/cli/commands.hpp"
#include "engorgio/cost/flops.hpp"
#include "engorgio/cost/service.hpp"
#include "engorgio/error.hpp"
#include "engorgio/eval/harness.hpp"
#include "engorgio/lm/checkpoint.hpp"
#include "engorgio/lm/corpus.hpp"
#include "engorgio/lm/inference.hpp"
#include "engorgio/lm/train.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace engorgio;

namespace {

py::dict report_dict(const eval::EvalReport& r) {
    py::list samples;
    for (const auto& s : r.samples) {
        py::dict d;
        d["index"] = s.index;
        d["seed"] = s.seed;
        d["total_len"] = s.total_len;
        d["output_len"] = s.output_len;
        d["stop_reason"] = std::string(lm::stop_reason_name(s.stop_reason));
        samples.append(d);
    }
    py::dict d;
    d["max_length"] = r.max_length;
    d["avg_len"] = r.avg_len;
    d["avg_output_len"] = r.avg_output_len;
    d["avg_rate"] = r.avg_rate;
    d["eos_stops"] = r.eos_stops;
    d["max_length_stops"] = r.max_length_stops;
    d["samples"] = samples;
    return d;
}

eval::EvalConfig eval_config(std::size_t n_samples, double temperature, bool greedy, std::uint64_t seed,
                             std::size_t max_length, std::size_t jobs) {
    eval::EvalConfig c;
    c.n_samples = n_samples;
    c.decode.mode = greedy ? lm::DecodeMode::Greedy : lm::DecodeMode::Sample;
    c.decode.temperature = temperature;
    c.decode.seed = seed;
    c.max_length = max_length;
    c.jobs = jobs;
    return c;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Inference-cost attack lab on a toy decoder";

    auto& base = py::register_exception<Error>(m, "EngorgioError");
    py::register_exception<ConfigError>(m, "ConfigError", base);
    py::register_exception<ContractError>(m, "ContractError", base);
    py::register_exception<NumericError>(m, "NumericError", base);

    py::class_<ModelDims>(m, "ModelDims")
        .def(py::init<>())
        .def_readwrite("vocab", &ModelDims::vocab)
        .def_readwrite("hidden", &ModelDims::hidden)
        .def_readwrite("layers", &ModelDims::layers)
        .def_readwrite("heads", &ModelDims::heads)
        .def_readwrite("max_context", &ModelDims::max_context)
        .def_readwrite("mlp_ratio", &ModelDims::mlp_ratio)
        .def("validate", &ModelDims::validate);

    py::class_<lm::Vocab>(m, "Vocab")
        .def_static("default_charset", &lm::Vocab::default_charset)
        .def("__len__", &lm::Vocab::size)
        .def("encode", &lm::Vocab::encode)
        .def("decode", [](const lm::Vocab& v, const TokenSeq& t) { return v.decode(t); })
        .def_property_readonly("pad", &lm::Vocab::pad)
        .def_property_readonly("bos", &lm::Vocab::bos)
        .def_property_readonly("eos", &lm::Vocab::eos);

    py::class_<lm::Model>(m, "Model")
        .def(py::init([](const ModelDims& dims, std::uint64_t seed) {
                 return lm::Model(lm::Vocab::default_charset(), dims, seed);
             }),
             py::arg("dims") = ModelDims{}, py::arg("seed") = 0)
        .def_property_readonly("vocab", &lm::Model::vocab)
        .def_property_readonly("dims", &lm::Model::dims)
        .def("save", [](const lm::Model& model, const std::filesystem::path& p) { lm::save_model(model, p); })
        .def_static("load", &lm::load_model)
        .def("logits",
             [](const lm::Model& model, const TokenSeq& tokens) {
                 const ad::Tensor t = lm::forward(model, tokens);
                 std::vector<std::vector<double>> rows(t.rows());
                 for (std::size_t r = 0; r < t.rows(); ++r) {
                     rows[r].assign(t.data().begin() + static_cast<std::ptrdiff_t>(r * t.cols()),
                                    t.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * t.cols()));
                 }
                 return rows;
             })
        .def("perplexity", [](const lm::Model& model, const TokenSeq& t) { return lm::perplexity(model, t); })
        .def(
            "generate",
            [](const lm::Model& model, const TokenSeq& prompt, double temperature, bool greedy, std::uint64_t seed) {
                lm::DecodeConfig c;
                c.mode = greedy ? lm::DecodeMode::Greedy : lm::DecodeMode::Sample;
                c.temperature = temperature;
                c.seed = seed;
                const lm::GenerationTrace tr = lm::generate(model, prompt, c);
                py::dict d;
                d["generated"] = tr.generated;
                d["stop_reason"] = std::string(lm::stop_reason_name(tr.stop_reason));
                d["total_length"] = tr.total_length();
                return d;
            },
            py::arg("prompt"), py::arg("temperature") = 0.1, py::arg("greedy") = false, py::arg("seed") = 0);

    m.def("synthesize_corpus",
          [](std::size_t lines, std::uint64_t seed) { return lm::synthesize_corpus(lines, seed); },
          py::arg("lines"), py::arg("seed") = 0);

    py::class_<lm::TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("steps", &lm::TrainConfig::steps)
        .def_readwrite("batch_size", &lm::TrainConfig::batch_size)
        .def_readwrite("learning_rate", &lm::TrainConfig::learning_rate)
        .def_readwrite("warmup_steps", &lm::TrainConfig::warmup_steps)
        .def_readwrite("min_lr_ratio", &lm::TrainConfig::min_lr_ratio)
        .def_readwrite("grad_clip", &lm::TrainConfig::grad_clip)
        .def_readwrite("position_offset_augment", &lm::TrainConfig::position_offset_augment)
        .def_readwrite("pack_sequences", &lm::TrainConfig::pack_sequences)
        .def_readwrite("seed", &lm::TrainConfig::seed);

    m.def(
        "train",
        [](lm::Model& model, const std::vector<std::string>& lines, const lm::TrainConfig& config) {
            const auto corpus = lm::encode_corpus(model.vocab(), lines);
            py::gil_scoped_release release;
            return lm::train(model, corpus, config);
        },
        py::arg("model"), py::arg("lines"), py::arg("config") = lm::TrainConfig{});

    py::class_<attack::AttackConfig>(m, "AttackConfig")
        .def(py::init<>())
        .def_readwrite("steps", &attack::AttackConfig::steps)
        .def_readwrite("learning_rate", &attack::AttackConfig::learning_rate)
        .def_readwrite("tau", &attack::AttackConfig::tau)
        .def_readwrite("lambda_", &attack::AttackConfig::lambda)
        .def_readwrite("prompt_length", &attack::AttackConfig::prompt_length)
        .def_readwrite("context_length", &attack::AttackConfig::context_length)
        .def_readwrite("seed", &attack::AttackConfig::seed)
        .def_readwrite("prefix_text", &attack::AttackConfig::prefix_text)
        .def_readwrite("infix_text", &attack::AttackConfig::infix_text)
        .def_property(
            "loss", [](const attack::AttackConfig& c) { return attack::loss_mode_name(c.loss); },
            [](attack::AttackConfig& c, const std::string& s) { c.loss = attack::parse_loss_mode(s); });

    m.def(
        "run_attack",
        [](const lm::Model& model, const attack::AttackConfig& config) {
            attack::AttackResult r;
            {
                py::gil_scoped_release release;
                r = attack::run_attack(model, config);
            }
            py::dict d;
            d["prompt_tokens"] = r.prompt;
            d["input_tokens"] = r.input_tokens;
            d["prompt_text"] = model.vocab().decode(r.prompt);
            d["esc"] = r.trace.esc;
            d["self_mentor"] = r.trace.self_mentor;
            d["combined"] = r.trace.combined;
            d["max_eos_probability"] = r.trace.max_eos_probability;
            return d;
        },
        py::arg("model"), py::arg("config") = attack::AttackConfig{});

    m.def(
        "evaluate_prompt",
        [](const lm::Model& model, const TokenSeq& prompt, std::size_t n_samples, double temperature, bool greedy,
           std::uint64_t seed, std::size_t max_length, std::size_t jobs) {
            const auto c = eval_config(n_samples, temperature, greedy, seed, max_length, jobs);
            eval::EvalReport r;
            {
                py::gil_scoped_release release;
                r = eval::evaluate_prompt(model, prompt, c);
            }
            return report_dict(r);
        },
        py::arg("model"), py::arg("prompt"), py::arg("n_samples") = 100, py::arg("temperature") = 0.1,
        py::arg("greedy") = false, py::arg("seed") = 0, py::arg("max_length") = 0, py::arg("jobs") = 1);

    m.def(
        "perplexity_filter",
        [](const lm::Model& model, const std::vector<TokenSeq>& legit, const std::vector<TokenSeq>& attack) {
            const eval::FilterReport r = eval::perplexity_filter_eval(model, legit, attack);
            py::dict d;
            d["threshold"] = r.threshold;
            d["fpr"] = r.fpr;
            d["attack_ppl"] = r.attack_ppl;
            d["legit_ppl"] = r.legit_ppl;
            return d;
        });

    m.def(
        "generation_flops",
        [](const ModelDims& dims, std::size_t prompt_len, std::size_t out_len, bool kv_cache) {
            const auto g = cost::generation_flops(dims, prompt_len, out_len,
                                                  kv_cache ? cost::CacheMode::KvCache : cost::CacheMode::NoCache);
            py::dict d;
            d["prompt"] = g.prompt;
            d["output"] = g.output;
            d["total"] = g.total();
            return d;
        },
        py::arg("dims"), py::arg("prompt_len"), py::arg("out_len"), py::arg("kv_cache") = true);

    m.def(
        "simulate_service",
        [](std::int64_t capacity, double batch_seconds, std::int64_t requests, std::int64_t attackers,
           std::int64_t normal_tokens, std::int64_t attack_avg_len) {
            cost::ServiceModel s{capacity, batch_seconds, requests, attackers, normal_tokens, attack_avg_len};
            const cost::ServiceResult r = cost::simulate_service(s);
            py::dict d;
            d["total_tokens"] = r.total_tokens;
            d["batches"] = r.batches;
            d["l_total"] = r.l_total;
            d["l_req"] = r.l_req;
            d["throughput"] = r.throughput ? py::cast(*r.throughput) : py::none();
            return d;
        },
        py::arg("capacity") = 2, py::arg("batch_seconds") = 1.0, py::arg("requests") = 10, py::arg("attackers") = 0,
        py::arg("normal_tokens") = 100, py::arg("attack_avg_len") = 1032);

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "engorgio");
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = cli::run_command(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
