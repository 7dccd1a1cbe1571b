#include "aed/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "aed/errors.hpp"

namespace aed::io {

namespace {

constexpr char kMagic[4] = {'A', 'E', 'D', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::filesystem::path& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("checkpoint truncated: " + path.string());
    return v;
}

void pack_layer(NamedTensors& t, const std::string& prefix, const ConvLayer& layer,
                bool with_state) {
    t.add(prefix + ".k", layer.kernels);
    t.add(prefix + ".b", layer.bias);
    if (!with_state) return;
    t.add(prefix + ".k.m", layer.kernels_state.first_moment);
    t.add(prefix + ".k.v", layer.kernels_state.second_moment);
    Tensor step({1});
    step.data[0] = static_cast<double>(layer.kernels_state.step_count);
    t.add(prefix + ".k.t", step);
    t.add(prefix + ".b.m", layer.bias_state.first_moment);
    t.add(prefix + ".b.v", layer.bias_state.second_moment);
    step.data[0] = static_cast<double>(layer.bias_state.step_count);
    t.add(prefix + ".b.t", step);
}

ConvLayer unpack_layer(const NamedTensors& t, const std::string& prefix,
                       bool with_state) {
    ConvLayer layer;
    layer.kernels = t.get(prefix + ".k");
    layer.bias = t.get(prefix + ".b");
    layer.kernels_state = ops::make_adam_state(layer.kernels.shape);
    layer.bias_state = ops::make_adam_state(layer.bias.shape);
    if (with_state) {
        layer.kernels_state.first_moment = t.get(prefix + ".k.m");
        layer.kernels_state.second_moment = t.get(prefix + ".k.v");
        layer.kernels_state.step_count =
            static_cast<std::int64_t>(t.get(prefix + ".k.t").data[0]);
        layer.bias_state.first_moment = t.get(prefix + ".b.m");
        layer.bias_state.second_moment = t.get(prefix + ".b.v");
        layer.bias_state.step_count =
            static_cast<std::int64_t>(t.get(prefix + ".b.t").data[0]);
    }
    return layer;
}

Tensor meta_tensor(std::initializer_list<double> values) {
    Tensor t({static_cast<int>(values.size())});
    std::size_t i = 0;
    for (double v : values) t.data[i++] = v;
    return t;
}

}  // namespace

const Tensor& NamedTensors::get(const std::string& name) const {
    for (const auto& [n, t] : items)
        if (n == name) return t;
    throw DataError("checkpoint is missing tensor '" + name + "'");
}

bool NamedTensors::has(const std::string& name) const {
    for (const auto& [n, t] : items)
        if (n == name) return true;
    return false;
}

void save_checkpoint(const NamedTensors& tensors, std::uint64_t config_hash,
                     const std::filesystem::path& path) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot open checkpoint for writing: " + tmp.string());
        out.write(kMagic, 4);
        write_pod(out, kVersion);
        write_pod(out, config_hash);
        write_pod(out, static_cast<std::uint32_t>(tensors.items.size()));
        for (const auto& [name, t] : tensors.items) {
            write_pod(out, static_cast<std::uint32_t>(name.size()));
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            write_pod(out, static_cast<std::uint32_t>(t.shape.size()));
            for (int d : t.shape) write_pod(out, static_cast<std::int32_t>(d));
            out.write(reinterpret_cast<const char*>(t.data.data()),
                      static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        }
        if (!out) throw DataError("checkpoint write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

NamedTensors load_checkpoint(const std::filesystem::path& path,
                             std::uint64_t* config_hash_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("bad checkpoint magic in " + path.string());
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version) +
                        " in " + path.string());
    const auto hash = read_pod<std::uint64_t>(in, path);
    if (config_hash_out) *config_hash_out = hash;

    NamedTensors tensors;
    const auto count = read_pod<std::uint32_t>(in, path);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw DataError("checkpoint truncated: " + path.string());
        const auto ndim = read_pod<std::uint32_t>(in, path);
        std::vector<int> shape;
        for (std::uint32_t d = 0; d < ndim; ++d)
            shape.push_back(read_pod<std::int32_t>(in, path));
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!in) throw DataError("checkpoint truncated: " + path.string());
        tensors.add(std::move(name), std::move(t));
    }
    return tensors;
}

NamedTensors pack_cae(const CaeParams& params) {
    NamedTensors t;
    t.add("meta", meta_tensor({static_cast<double>(static_cast<int>(params.kind)),
                               static_cast<double>(params.input_size),
                               static_cast<double>(params.encoder_widths[0]),
                               static_cast<double>(params.encoder_widths[1]),
                               static_cast<double>(params.encoder_widths[2]),
                               params.seg_decoder ? 1.0 : 0.0}));
    for (int l = 0; l < 3; ++l) {
        pack_layer(t, "enc" + std::to_string(l), params.encoder[l], true);
        pack_layer(t, "main" + std::to_string(l), params.main_decoder[l], true);
        pack_layer(t, "adv" + std::to_string(l), params.adv_decoder[l], true);
        if (params.seg_decoder)
            pack_layer(t, "seg" + std::to_string(l), (*params.seg_decoder)[l], true);
    }
    return t;
}

CaeParams unpack_cae(const NamedTensors& t) {
    const Tensor& meta = t.get("meta");
    if (meta.size() != 6) throw DataError("unexpected CAE checkpoint meta");
    CaeParams p;
    p.kind = static_cast<StreamKind>(static_cast<int>(meta.data[0]));
    p.input_size = static_cast<int>(meta.data[1]);
    p.encoder_widths = {static_cast<int>(meta.data[2]), static_cast<int>(meta.data[3]),
                        static_cast<int>(meta.data[4])};
    const bool has_seg = meta.data[5] != 0.0;
    for (int l = 0; l < 3; ++l) {
        p.encoder[l] = unpack_layer(t, "enc" + std::to_string(l), true);
        p.main_decoder[l] = unpack_layer(t, "main" + std::to_string(l), true);
        p.adv_decoder[l] = unpack_layer(t, "adv" + std::to_string(l), true);
    }
    if (has_seg) {
        std::array<ConvLayer, 3> seg;
        for (int l = 0; l < 3; ++l)
            seg[l] = unpack_layer(t, "seg" + std::to_string(l), true);
        p.seg_decoder = std::move(seg);
    }
    if (p.encoder[0].kernels.dim(2) != p.in_channels())
        throw DataError("unpack_cae: stream kind does not match stored kernel shapes");
    return p;
}

NamedTensors pack_frozen_cae(const FrozenCae& cae) {
    NamedTensors t;
    t.add("meta", meta_tensor({static_cast<double>(static_cast<int>(cae.kind)),
                               static_cast<double>(cae.input_size),
                               static_cast<double>(cae.encoder_widths[0]),
                               static_cast<double>(cae.encoder_widths[1]),
                               static_cast<double>(cae.encoder_widths[2]), 0.0}));
    for (int l = 0; l < 3; ++l) {
        pack_layer(t, "enc" + std::to_string(l), cae.encoder[l], false);
        pack_layer(t, "main" + std::to_string(l), cae.main_decoder[l], false);
    }
    return t;
}

FrozenCae unpack_frozen_cae(const NamedTensors& t) {
    const Tensor& meta = t.get("meta");
    if (meta.size() != 6) throw DataError("unexpected frozen CAE checkpoint meta");
    FrozenCae f;
    f.kind = static_cast<StreamKind>(static_cast<int>(meta.data[0]));
    f.input_size = static_cast<int>(meta.data[1]);
    f.encoder_widths = {static_cast<int>(meta.data[2]), static_cast<int>(meta.data[3]),
                        static_cast<int>(meta.data[4])};
    for (int l = 0; l < 3; ++l) {
        f.encoder[l] = unpack_layer(t, "enc" + std::to_string(l), false);
        f.main_decoder[l] = unpack_layer(t, "main" + std::to_string(l), false);
    }
    if (f.encoder[0].kernels.dim(2) != stream_channels(f.kind))
        throw DataError("unpack_frozen_cae: stream kind does not match stored kernel shapes");
    return f;
}

NamedTensors pack_clf(const ClfParams& params) {
    NamedTensors t;
    t.add("meta",
          meta_tensor({static_cast<double>(static_cast<int>(params.kind)),
                       static_cast<double>(params.input_size),
                       static_cast<double>(params.conv_widths[0]),
                       static_cast<double>(params.conv_widths[1]),
                       static_cast<double>(params.conv_widths[2]),
                       static_cast<double>(params.conv_widths[3]),
                       static_cast<double>(params.conv_widths[4]),
                       static_cast<double>(static_cast<int>(params.diff_mode))}));
    for (int l = 0; l < 5; ++l)
        pack_layer(t, "conv" + std::to_string(l), params.convs[l], true);
    t.add("fc.w", params.fc_weights);
    t.add("fc.b", params.fc_bias);
    t.add("fc.w.m", params.fc_weights_state.first_moment);
    t.add("fc.w.v", params.fc_weights_state.second_moment);
    Tensor step({1});
    step.data[0] = static_cast<double>(params.fc_weights_state.step_count);
    t.add("fc.w.t", step);
    t.add("fc.b.m", params.fc_bias_state.first_moment);
    t.add("fc.b.v", params.fc_bias_state.second_moment);
    step.data[0] = static_cast<double>(params.fc_bias_state.step_count);
    t.add("fc.b.t", step);
    return t;
}

ClfParams unpack_clf(const NamedTensors& t) {
    const Tensor& meta = t.get("meta");
    if (meta.size() != 8) throw DataError("unexpected classifier checkpoint meta");
    ClfParams p;
    p.kind = static_cast<StreamKind>(static_cast<int>(meta.data[0]));
    p.input_size = static_cast<int>(meta.data[1]);
    for (int l = 0; l < 5; ++l) p.conv_widths[l] = static_cast<int>(meta.data[2 + l]);
    p.diff_mode = static_cast<DiffMode>(static_cast<int>(meta.data[7]));
    for (int l = 0; l < 5; ++l)
        p.convs[l] = unpack_layer(t, "conv" + std::to_string(l), true);
    p.fc_weights = t.get("fc.w");
    p.fc_bias = t.get("fc.b");
    p.fc_weights_state = ops::make_adam_state(p.fc_weights.shape);
    p.fc_bias_state = ops::make_adam_state(p.fc_bias.shape);
    p.fc_weights_state.first_moment = t.get("fc.w.m");
    p.fc_weights_state.second_moment = t.get("fc.w.v");
    p.fc_weights_state.step_count = static_cast<std::int64_t>(t.get("fc.w.t").data[0]);
    p.fc_bias_state.first_moment = t.get("fc.b.m");
    p.fc_bias_state.second_moment = t.get("fc.b.v");
    p.fc_bias_state.step_count = static_cast<std::int64_t>(t.get("fc.b.t").data[0]);
    if (p.convs[0].kernels.dim(2) != p.in_channels())
        throw DataError("unpack_clf: stream kind does not match stored kernel shapes");
    return p;
}

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace aed::io
