// ----------------------------------------------------------------------------
// Copyright 2026 The PEGO Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ----------------------------------------------------------------------------

#include "pego/vit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "pego/errors.hpp"

namespace pego::vit {

namespace {

constexpr char kMagic[8] = {'P', 'E', 'G', 'O', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kFlagF32 = 1u;
constexpr std::uint64_t kMaxLength = std::uint64_t{1} << 34;

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint64_t u64() { return uint<std::uint64_t, 8>(); }
    std::uint32_t u32() { return uint<std::uint32_t, 4>(); }

    std::string raw(std::uint64_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const noexcept { return pos_ == bytes_.size(); }

private:
    template <typename T, int N>
    T uint() {
        need(N);
        T v = 0;
        for (int i = 0; i < N; ++i)
            v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += N;
        return v;
    }

    void need(std::uint64_t n) const {
        if (n > bytes_.size() - pos_) throw FormatError("checkpoint: truncated data");
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

const Matrix& Container::tensor(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return t.value;
    throw FormatError("checkpoint: missing tensor '" + name + "'");
}

bool Container::has_tensor(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return true;
    return false;
}

std::string encode_container(const Container& c, Precision precision) {
    std::string out(kMagic, sizeof kMagic);
    put_u32(out, kFormatVersion);
    put_u32(out, precision == Precision::f32 ? kFlagF32 : 0u);
    const std::string record = c.record.dump();
    put_u64(out, record.size());
    out += record;
    put_u64(out, c.tensors.size());
    for (const auto& t : c.tensors) {
        put_u64(out, t.name.size());
        out += t.name;
        put_u64(out, 2);
        put_u64(out, t.value.rows());
        put_u64(out, t.value.cols());
        for (double v : t.value.values()) {
            if (precision == Precision::f32) {
                put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
            } else {
                put_u64(out, std::bit_cast<std::uint64_t>(v));
            }
        }
    }
    return out;
}

Container decode_container(const std::string& bytes) {
    Reader in(bytes);
    if (in.raw(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
        throw FormatError("checkpoint: bad magic");
    }
    const std::uint32_t version = in.u32();
    if (version != kFormatVersion) {
        throw FormatError("checkpoint: unsupported format_version " + std::to_string(version));
    }
    const std::uint32_t flags = in.u32();
    if ((flags & ~kFlagF32) != 0) throw FormatError("checkpoint: unknown header flags");
    const bool f32 = (flags & kFlagF32) != 0;

    Container c;
    const std::uint64_t record_len = in.u64();
    if (record_len > kMaxLength) throw FormatError("checkpoint: record too large");
    try {
        c.record = nlohmann::json::parse(in.raw(record_len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: malformed header record: ") + e.what());
    }
    const std::uint64_t count = in.u64();
    if (count > kMaxLength) throw FormatError("checkpoint: tensor count too large");
    for (std::uint64_t t = 0; t < count; ++t) {
        NamedTensor nt;
        const std::uint64_t name_len = in.u64();
        if (name_len > 4096) throw FormatError("checkpoint: tensor name too long");
        nt.name = in.raw(name_len);
        const std::uint64_t ndim = in.u64();
        if (ndim != 2) {
            throw FormatError("checkpoint: tensor '" + nt.name + "' has ndim " +
                              std::to_string(ndim) + ", expected 2");
        }
        const std::uint64_t rows = in.u64();
        const std::uint64_t cols = in.u64();
        if (rows > kMaxLength || cols > kMaxLength || rows * cols > kMaxLength) {
            throw FormatError("checkpoint: tensor '" + nt.name + "' too large");
        }
        std::vector<double> data(rows * cols);
        for (double& v : data) {
            v = f32 ? static_cast<double>(std::bit_cast<float>(in.u32()))
                    : std::bit_cast<double>(in.u64());
        }
        nt.value = Matrix(rows, cols, std::move(data));
        c.tensors.push_back(std::move(nt));
    }
    if (!in.done()) throw FormatError("checkpoint: trailing bytes after last tensor");
    return c;
}

void write_container(const std::filesystem::path& path, const Container& c,
                     Precision precision) {
    const std::string bytes = encode_container(c, precision);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open '" + tmp.string() + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw FormatError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw FormatError("cannot move checkpoint into '" + path.string() + "': " + ec.message());
}

Container read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_container(ss.str());
}

nlohmann::json to_json(const VitConfig& cfg) {
    return {{"image_size", cfg.image_size}, {"patch_size", cfg.patch_size},
            {"channels", cfg.channels},     {"embed_dim", cfg.embed_dim},
            {"num_blocks", cfg.num_blocks}, {"num_heads", cfg.num_heads},
            {"mlp_ratio", cfg.mlp_ratio},   {"num_classes", cfg.num_classes}};
}

VitConfig vit_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("vit config must be an object");
    VitConfig cfg;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "image_size") cfg.image_size = value.get<std::size_t>();
            else if (key == "patch_size") cfg.patch_size = value.get<std::size_t>();
            else if (key == "channels") cfg.channels = value.get<std::size_t>();
            else if (key == "embed_dim") cfg.embed_dim = value.get<std::size_t>();
            else if (key == "num_blocks") cfg.num_blocks = value.get<std::size_t>();
            else if (key == "num_heads") cfg.num_heads = value.get<std::size_t>();
            else if (key == "mlp_ratio") cfg.mlp_ratio = value.get<double>();
            else if (key == "num_classes") cfg.num_classes = value.get<std::size_t>();
            else throw ConfigError("vit config: unknown key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("vit config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

Container model_to_container(const VitModel& model) {
    Container c;
    const auto [rank, n] = model.adapter_shape();
    c.record = {{"kind", "model"},
                {"vit", to_json(model.config)},
                {"adapters", {{"rank", rank}, {"group_n", n}}}};
    for_each_parameter(model, [&](const std::string& name, const Matrix& m) {
        c.tensors.push_back({name, m});
    });
    return c;
}

VitModel model_from_container(const Container& c) {
    if (c.record.value("kind", "") != "model") {
        throw FormatError("checkpoint: record kind is not 'model'");
    }
    VitModel model;
    try {
        numerics::Rng rng(0);
        model = init_vit(vit_config_from_json(c.record.at("vit")), rng);
        const auto& ad = c.record.at("adapters");
        const auto rank = ad.at("rank").get<std::size_t>();
        const auto n = ad.at("group_n").get<std::size_t>();
        if (n > 0) inject_adapters(model, rank, n, rng);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: bad header record: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint: bad model config: ") + e.what());
    }

    std::map<std::string, const Matrix*> by_name;
    for (const auto& t : c.tensors) {
        if (!by_name.emplace(t.name, &t.value).second) {
            throw FormatError("checkpoint: duplicate tensor '" + t.name + "'");
        }
    }
    std::size_t used = 0;
    for_each_parameter(model, [&](const std::string& name, Matrix& m) {
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw FormatError("checkpoint: missing tensor '" + name + "'");
        if (!it->second->same_shape(m)) {
            throw FormatError("checkpoint: tensor '" + name + "' has shape " +
                              it->second->shape_string() + ", expected " + m.shape_string());
        }
        m = *it->second;
        ++used;
    });
    if (used != by_name.size()) throw FormatError("checkpoint: unexpected extra tensors");
    return model;
}

void save_model(const std::filesystem::path& path, const VitModel& model, Precision precision) {
    write_container(path, model_to_container(model), precision);
}

VitModel load_model(const std::filesystem::path& path) {
    return model_from_container(read_container(path));
}

}  // namespace pego::vit
