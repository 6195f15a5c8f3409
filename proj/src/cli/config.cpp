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

#include "pego/cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pego/errors.hpp"
#include "pego/vit/checkpoint.hpp"

namespace pego::cli {

using nlohmann::json;
using numerics::Matrix;

namespace {

template <typename T>
T get_as(const json& j, const std::string& key) {
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!j.is_boolean()) throw ConfigError("");
        } else if constexpr (std::is_integral_v<T>) {
            if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
                throw ConfigError("");
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!j.is_number()) throw ConfigError("");
        }
        return j.get<T>();
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

void require_object(const json& j, const std::string& what) {
    if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
}

trainer::DatasetSpec dataset_from_json(const json& j, std::uint64_t& seed) {
    require_object(j, "dataset");
    trainer::DatasetSpec spec;
    for (const auto& [key, v] : j.items()) {
        if (key == "domains") spec.domains = get_as<std::size_t>(v, "dataset.domains");
        else if (key == "classes") spec.classes = get_as<std::size_t>(v, "dataset.classes");
        else if (key == "per_class") spec.per_class = get_as<std::size_t>(v, "dataset.per_class");
        else if (key == "image_size") spec.image_size = get_as<std::size_t>(v, "dataset.image_size");
        else if (key == "seed") seed = get_as<std::uint64_t>(v, "dataset.seed");
        else throw ConfigError("unknown config key 'dataset." + key + "'");
    }
    return spec;
}

trainer::PretrainConfig pretrain_from_json(const json& j) {
    require_object(j, "pretrain");
    trainer::PretrainConfig p;
    for (const auto& [key, v] : j.items()) {
        if (key == "samples") p.samples = get_as<std::size_t>(v, "pretrain.samples");
        else if (key == "iterations") p.iterations = get_as<std::size_t>(v, "pretrain.iterations");
        else if (key == "batch") p.batch = get_as<std::size_t>(v, "pretrain.batch");
        else if (key == "lr") p.lr = get_as<double>(v, "pretrain.lr");
        else if (key == "seed") p.seed = get_as<std::uint64_t>(v, "pretrain.seed");
        else throw ConfigError("unknown config key 'pretrain." + key + "'");
    }
    return p;
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
    require_object(j, "config");
    RunConfig cfg;
    auto& t = cfg.train;
    for (const auto& [key, v] : j.items()) {
        if (key == "alpha") t.alpha = get_as<double>(v, key);
        else if (key == "rank") t.rank = get_as<std::size_t>(v, key);
        else if (key == "group_n") t.group_n = get_as<std::size_t>(v, key);
        else if (key == "lr") t.lr = get_as<double>(v, key);
        else if (key == "iterations") t.iterations = get_as<std::size_t>(v, key);
        else if (key == "batch_per_domain") t.batch_per_domain = get_as<std::size_t>(v, key);
        else if (key == "val_fraction") t.val_fraction = get_as<double>(v, key);
        else if (key == "eval_every") t.eval_every = get_as<std::size_t>(v, key);
        else if (key == "use_preserve") t.use_preserve = get_as<bool>(v, key);
        else if (key == "use_diversify") t.use_diversify = get_as<bool>(v, key);
        else if (key == "vit") t.vit = vit::vit_config_from_json(v);
        else if (key == "dataset") cfg.dataset = dataset_from_json(v, cfg.dataset_seed);
        else if (key == "pretrain") cfg.pretrain = pretrain_from_json(v);
        else if (key == "seeds") {
            if (!v.is_array() || v.empty()) throw ConfigError("'seeds' must be a non-empty array");
            cfg.seeds.clear();
            for (const auto& s : v) cfg.seeds.push_back(get_as<std::uint64_t>(s, "seeds"));
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    t.validate();
    return cfg;
}

json to_json(const RunConfig& cfg) {
    const auto& t = cfg.train;
    json j;
    j["alpha"] = t.alpha;
    j["rank"] = t.rank;
    j["group_n"] = t.group_n;
    j["lr"] = t.lr;
    j["iterations"] = t.iterations;
    j["batch_per_domain"] = t.batch_per_domain;
    j["val_fraction"] = t.val_fraction;
    j["eval_every"] = t.eval_every;
    j["use_preserve"] = t.use_preserve;
    j["use_diversify"] = t.use_diversify;
    j["vit"] = vit::to_json(t.vit);
    j["dataset"] = {{"domains", cfg.dataset.domains},
                    {"classes", cfg.dataset.classes},
                    {"per_class", cfg.dataset.per_class},
                    {"image_size", cfg.dataset.image_size},
                    {"seed", cfg.dataset_seed}};
    j["pretrain"] = {{"samples", cfg.pretrain.samples},
                     {"iterations", cfg.pretrain.iterations},
                     {"batch", cfg.pretrain.batch},
                     {"lr", cfg.pretrain.lr},
                     {"seed", cfg.pretrain.seed}};
    j["seeds"] = cfg.seeds;
    return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const RunConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(to_json(cfg).dump())));
    return buf;
}

std::vector<std::string> default_deviation_warnings(const trainer::TrainConfig& cfg) {
    const trainer::TrainConfig ref;
    std::vector<std::string> out;
    if (cfg.alpha != ref.alpha) {
        std::ostringstream s;
        s << "alpha = " << cfg.alpha << " differs from the reference default " << ref.alpha;
        out.push_back(s.str());
    }
    if (cfg.rank != ref.rank) {
        out.push_back("rank = " + std::to_string(cfg.rank) + " differs from the reference default " +
                      std::to_string(ref.rank));
    }
    return out;
}

void save_dataset(const std::filesystem::path& path, const trainer::DomainDataset& dataset,
                  const json& meta) {
    dataset.validate();
    const std::size_t n = dataset.size();
    const std::size_t px = dataset.image_size * dataset.image_size;
    Matrix images(n, px), labels(n, 1), domains(n, 1), ids(n, 1);
    json table = json::array();
    std::size_t row = 0;
    for (std::size_t d = 0; d < dataset.domains.size(); ++d) {
        const auto& dom = dataset.domains[d];
        table.push_back({{"name", dom.name}, {"count", dom.samples.size()}});
        for (const auto& s : dom.samples) {
            if (s.image.size() != px) throw ShapeError("save_dataset: image size mismatch");
            std::copy(s.image.values().begin(), s.image.values().end(), images.row(row).begin());
            labels(row, 0) = static_cast<double>(s.label);
            domains(row, 0) = static_cast<double>(d);
            ids(row, 0) = static_cast<double>(s.id);
            ++row;
        }
    }
    vit::Container c;
    c.record = {{"kind", "dataset"},
                {"num_classes", dataset.num_classes},
                {"image_size", dataset.image_size},
                {"domains", table},
                {"meta", meta}};
    c.tensors = {{"images", std::move(images)},
                 {"labels", std::move(labels)},
                 {"domains", std::move(domains)},
                 {"ids", std::move(ids)}};
    vit::write_container(path, c);
}

namespace {

std::size_t as_index(double v, const char* what) {
    if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
        throw FormatError(std::string("dataset: invalid ") + what + " entry");
    }
    return static_cast<std::size_t>(v);
}

}  // namespace

trainer::DomainDataset load_dataset(const std::filesystem::path& path) {
    const vit::Container c = vit::read_container(path);
    trainer::DomainDataset ds;
    try {
        if (c.record.at("kind") != "dataset") throw FormatError("not a dataset file");
        ds.num_classes = c.record.at("num_classes").get<std::size_t>();
        ds.image_size = c.record.at("image_size").get<std::size_t>();
        for (const auto& d : c.record.at("domains")) {
            ds.domains.push_back({d.at("name").get<std::string>(), {}});
            ds.domains.back().samples.reserve(d.at("count").get<std::size_t>());
        }
    } catch (const json::exception& e) {
        throw FormatError("dataset '" + path.string() + "': bad record: " + e.what());
    }
    if (!c.has_tensor("images") || !c.has_tensor("labels") || !c.has_tensor("domains") ||
        !c.has_tensor("ids")) {
        throw FormatError("dataset '" + path.string() + "': missing tensors");
    }
    const Matrix& images = c.tensor("images");
    const Matrix& labels = c.tensor("labels");
    const Matrix& domains = c.tensor("domains");
    const Matrix& ids = c.tensor("ids");
    const std::size_t n = images.rows();
    const std::size_t s = ds.image_size;
    if (images.cols() != s * s || labels.rows() != n || domains.rows() != n || ids.rows() != n ||
        labels.cols() != 1 || domains.cols() != 1 || ids.cols() != 1) {
        throw FormatError("dataset '" + path.string() + "': inconsistent tensor shapes");
    }
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t d = as_index(domains(r, 0), "domain");
        if (d >= ds.domains.size()) throw FormatError("dataset: domain index out of range");
        Sample smp;
        smp.image = Matrix(s, s);
        std::copy(images.row(r).begin(), images.row(r).end(), smp.image.values().begin());
        smp.label = as_index(labels(r, 0), "label");
        smp.domain = d;
        smp.id = as_index(ids(r, 0), "id");
        ds.domains[d].samples.push_back(std::move(smp));
    }
    try {
        for (std::size_t d = 0; d < ds.domains.size(); ++d) {
            if (ds.domains[d].samples.size() != c.record.at("domains")[d].at("count").get<std::size_t>()) {
                throw FormatError("dataset: domain sample counts disagree with the record");
            }
        }
        ds.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("dataset '") + path.string() + "': " + e.what());
    }
    return ds;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open '" + tmp.string() + "' for writing");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw FormatError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw FormatError("cannot move file into '" + path.string() + "': " + ec.message());
}

}  // namespace pego::cli
