#include "engorgio/lm/checkpoint.hpp"

#include "engorgio/error.hpp"

#include "json.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace engorgio::lm {

namespace {

constexpr std::array<char, 8> kMagic = {'E', 'N', 'G', 'O', 'R', 'G', 'I', 'O'};

template <typename T>
void put_le(std::ostream& out, T value) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
    }
}

void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

template <typename T>
T get_le(std::istream& in, const std::filesystem::path& path) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof()) {
            throw IoError("truncated checkpoint " + path.string());
        }
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return static_cast<T>(v);
}

nlohmann::json dims_json(const ModelDims& d) {
    return {{"vocab", d.vocab},   {"hidden", d.hidden},           {"layers", d.layers},
            {"heads", d.heads},   {"max_context", d.max_context}, {"mlp_ratio", d.mlp_ratio}};
}

} // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    std::filesystem::path p = path;
    p += ".json";
    return p;
}

void write_container(const std::filesystem::path& path, const TensorContainer& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write checkpoint " + path.string());
    }
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, kContainerVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.kind));
    for (std::size_t v : {c.dims.vocab, c.dims.hidden, c.dims.layers, c.dims.heads, c.dims.max_context,
                          c.dims.mlp_ratio}) {
        put_le<std::uint64_t>(out, v);
    }
    put_le<std::uint64_t>(out, c.tensors.size());
    for (const ad::Tensor& t : c.tensors) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t e : t.shape()) {
            put_le<std::uint64_t>(out, e);
        }
        for (double v : t.data()) {
            put_f64(out, v);
        }
    }
    if (!out) {
        throw IoError("failed writing checkpoint " + path.string());
    }
}

TensorContainer read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint " + path.string());
    }
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) {
        throw IoError("not an engorgio checkpoint (bad magic): " + path.string());
    }
    const auto version = get_le<std::uint32_t>(in, path);
    if (version != kContainerVersion) {
        throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
    }
    TensorContainer c;
    const auto kind = get_le<std::uint32_t>(in, path);
    if (kind != 1 && kind != 2) {
        throw IoError("unknown checkpoint kind " + std::to_string(kind));
    }
    c.kind = static_cast<ContainerKind>(kind);
    c.dims.vocab = get_le<std::uint64_t>(in, path);
    c.dims.hidden = get_le<std::uint64_t>(in, path);
    c.dims.layers = get_le<std::uint64_t>(in, path);
    c.dims.heads = get_le<std::uint64_t>(in, path);
    c.dims.max_context = get_le<std::uint64_t>(in, path);
    c.dims.mlp_ratio = get_le<std::uint64_t>(in, path);
    const auto count = get_le<std::uint64_t>(in, path);
    if (count > (1u << 20)) {
        throw IoError("implausible tensor count in " + path.string());
    }
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto rank = get_le<std::uint32_t>(in, path);
        if (rank > 2) {
            throw IoError("tensor rank " + std::to_string(rank) + " unsupported in " + path.string());
        }
        ad::Shape shape(rank);
        for (auto& e : shape) {
            e = get_le<std::uint64_t>(in, path);
        }
        std::vector<double> data(ad::shape_size(shape));
        for (double& v : data) {
            v = std::bit_cast<double>(get_le<std::uint64_t>(in, path));
        }
        c.tensors.emplace_back(std::move(shape), std::move(data));
    }
    return c;
}

void save_model(const Model& model, const std::filesystem::path& path) {
    TensorContainer c{ContainerKind::Model, model.dims(),
                      std::vector<ad::Tensor>(model.parameters().begin(), model.parameters().end())};
    write_container(path, c);

    nlohmann::json params = nlohmann::json::array();
    const auto names = model.parameter_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        params.push_back({{"name", names[i]}, {"shape", model.parameters()[i].shape()}});
    }
    const nlohmann::json sidecar = {
        {"format", "engorgio-checkpoint"},
        {"version", kContainerVersion},
        {"kind", "model"},
        {"dims", dims_json(model.dims())},
        {"vocab", {{"controls", {"<pad>", "<bos>", "<eos>"}}, {"chars", model.vocab().chars()}}},
        {"parameters", params},
    };
    std::ofstream out(sidecar_path(path), std::ios::binary);
    if (!out) {
        throw IoError("cannot write checkpoint sidecar " + sidecar_path(path).string());
    }
    out << sidecar.dump(2) << '\n';
}

Model load_model(const std::filesystem::path& path) {
    TensorContainer c = read_container(path);
    if (c.kind != ContainerKind::Model) {
        throw IoError("checkpoint " + path.string() + " does not hold a model");
    }
    std::ifstream in(sidecar_path(path));
    if (!in) {
        throw IoError("missing checkpoint sidecar " + sidecar_path(path).string());
    }
    nlohmann::json sidecar;
    try {
        sidecar = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint sidecar: " + std::string(e.what()));
    }
    if (!sidecar.contains("vocab") || !sidecar["vocab"].contains("chars") || !sidecar["vocab"]["chars"].is_string()) {
        throw IoError("checkpoint sidecar: missing field 'vocab.chars'");
    }
    if (sidecar.value("dims", nlohmann::json()) != dims_json(c.dims)) {
        throw IoError("checkpoint sidecar: field 'dims' disagrees with the binary header");
    }
    return Model(Vocab(sidecar["vocab"]["chars"].get<std::string>()), c.dims, std::move(c.tensors));
}

} // namespace engorgio::lm
