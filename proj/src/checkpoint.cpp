#include "agrlab/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "agrlab/errors.hpp"

namespace agrlab {

using nlohmann::json;

namespace {
constexpr int kFormatVersion = 1;
constexpr const char* kLabelConvention = "plural=1";
}  // namespace

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void save_checkpoint(const ModelParams& params, const ModelConfig& cfg, const std::string& path) {
    std::ostringstream out;
    out << "{\n";
    out << "  \"format_version\": " << kFormatVersion << ",\n";
    out << "  \"config\": {\"d\": " << cfg.d << ", \"vocab_size\": " << cfg.vocab_size
        << ", \"n_supertags\": " << cfg.n_supertags << ", \"heads\": [";
    bool first = true;
    for (Head h : cfg.heads) {
        if (!first) out << ", ";
        out << '"' << head_name(h) << '"';
        first = false;
    }
    out << "], \"label_convention\": \"" << kLabelConvention << "\"},\n";
    out << "  \"tensors\": {\n";

    bool first_tensor = true;
    for_each_tensor(
        cfg,
        [&](std::string_view name, const auto& t) {
            if (!first_tensor) out << ",\n";
            first_tensor = false;
            out << "    \"" << name << "\": {\"shape\": [";
            if constexpr (std::decay_t<decltype(t)>::ColsAtCompileTime == 1) {
                out << t.size();
            } else {
                out << t.rows() << ", " << t.cols();
            }
            out << "], \"data\": [";
            const auto* data = t.data();
            for (Eigen::Index i = 0; i < t.size(); ++i) {
                if (!std::isfinite(data[i])) {
                    throw NumericError("save_checkpoint: non-finite value in tensor '" +
                                       std::string(name) + "'");
                }
                if (i) out << ", ";
                out << format_g17(data[i]);
            }
            out << "]}";
        },
        params);
    out << "\n  }\n}\n";

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("save_checkpoint: cannot open '" + path + "' for writing");
    f << out.str();
    if (!f.good()) throw DataError("save_checkpoint: write to '" + path + "' failed");
}

namespace {

void load_tensor(const json& tensors, std::string_view name, Matrix& m) {
    const std::string key(name);
    if (!tensors.contains(key)) {
        throw CheckpointFormatError("checkpoint missing tensor '" + key + "'");
    }
    const json& rec = tensors.at(key);
    if (!rec.contains("shape") || !rec.contains("data") || !rec["shape"].is_array() ||
        !rec["data"].is_array()) {
        throw CheckpointFormatError("checkpoint tensor '" + key + "' malformed");
    }
    const json& shape = rec["shape"];
    if (shape.size() != 2) {
        throw ShapeError("checkpoint tensor '" + key + "': expected 2-d shape, got " +
                         std::to_string(shape.size()) + "-d");
    }
    const Eigen::Index rows = shape[0].get<Eigen::Index>();
    const Eigen::Index cols = shape[1].get<Eigen::Index>();
    if (rows != m.rows() || cols != m.cols()) {
        throw ShapeError("checkpoint tensor '" + key + "': shape " + shape_str(rows, cols) +
                         " does not match config shape " + shape_str(m.rows(), m.cols()));
    }
    const json& data = rec["data"];
    if (static_cast<Eigen::Index>(data.size()) != m.size()) {
        throw ShapeError("checkpoint tensor '" + key + "': data length " +
                         std::to_string(data.size()) + " vs shape " +
                         shape_str(m.rows(), m.cols()));
    }
    auto* out = m.data();
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        if (!data[i].is_number()) {
            throw CheckpointFormatError("checkpoint tensor '" + key + "': non-numeric entry");
        }
        out[i] = data[i].get<double>();
    }
}

void load_tensor(const json& tensors, std::string_view name, Vector& v) {
    const std::string key(name);
    if (!tensors.contains(key)) {
        throw CheckpointFormatError("checkpoint missing tensor '" + key + "'");
    }
    const json& rec = tensors.at(key);
    if (!rec.contains("shape") || !rec.contains("data") || !rec["shape"].is_array() ||
        !rec["data"].is_array()) {
        throw CheckpointFormatError("checkpoint tensor '" + key + "' malformed");
    }
    const json& shape = rec["shape"];
    if (shape.size() != 1) {
        throw ShapeError("checkpoint tensor '" + key + "': expected 1-d shape, got " +
                         std::to_string(shape.size()) + "-d");
    }
    const Eigen::Index n = shape[0].get<Eigen::Index>();
    if (n != v.size()) {
        throw ShapeError("checkpoint tensor '" + key + "': length " + std::to_string(n) +
                         " does not match config length " + std::to_string(v.size()));
    }
    const json& data = rec["data"];
    if (static_cast<Eigen::Index>(data.size()) != v.size()) {
        throw ShapeError("checkpoint tensor '" + key + "': data length " +
                         std::to_string(data.size()) + " vs shape length " +
                         std::to_string(v.size()));
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!data[i].is_number()) {
            throw CheckpointFormatError("checkpoint tensor '" + key + "': non-numeric entry");
        }
        v(i) = data[i].get<double>();
    }
}

}  // namespace

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("load_checkpoint: cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::parse_error& e) {
        throw CheckpointFormatError("load_checkpoint: malformed file '" + path + "': " + e.what());
    }
    if (!doc.is_object() || !doc.contains("format_version") || !doc.contains("config") ||
        !doc.contains("tensors")) {
        throw CheckpointFormatError("load_checkpoint: missing top-level fields in '" + path + "'");
    }
    if (!doc["format_version"].is_number_integer() ||
        doc["format_version"].get<int>() != kFormatVersion) {
        throw CheckpointVersionError("load_checkpoint: unsupported format_version in '" + path +
                                     "'");
    }

    const json& jc = doc["config"];
    Checkpoint ck;
    try {
        ck.config.d = jc.at("d").get<int>();
        ck.config.vocab_size = jc.at("vocab_size").get<int>();
        ck.config.n_supertags = jc.at("n_supertags").get<int>();
        for (const auto& h : jc.at("heads")) {
            ck.config.heads.insert(head_from_name(h.get<std::string>()));
        }
        if (jc.at("label_convention").get<std::string>() != kLabelConvention) {
            throw CheckpointFormatError("load_checkpoint: unexpected label_convention");
        }
    } catch (const json::exception& e) {
        throw CheckpointFormatError(std::string("load_checkpoint: bad config block: ") + e.what());
    } catch (const ConfigError& e) {
        throw CheckpointFormatError(std::string("load_checkpoint: bad config block: ") + e.what());
    }
    ck.config.validate();

    ck.params = ModelParams::zeros(ck.config);
    const json& tensors = doc["tensors"];
    for_each_tensor(
        ck.config, [&](std::string_view name, auto& t) { load_tensor(tensors, name, t); },
        ck.params);
    return ck;
}

}  // namespace agrlab
