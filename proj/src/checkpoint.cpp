#include "lesets/checkpoint.hpp"

#include "lesets/dataset.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace lesets {

namespace {

constexpr int kFormatVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c) {
    nlohmann::json j;
    j["conv_operator"] = to_string(c.conv_operator);
    j["n_conv_layers"] = c.n_conv_layers;
    j["n_fc_layers"] = c.n_fc_layers;
    j["hidden_dim"] = c.hidden_dim;
    j["use_att"] = c.use_att;
    j["seed"] = c.seed;
    return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.conv_operator = conv_op_from_string(j.at("conv_operator").get<std::string>());
    c.n_conv_layers = j.at("n_conv_layers").get<int>();
    c.n_fc_layers = j.at("n_fc_layers").get<int>();
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.use_att = j.at("use_att").get<bool>();
    c.seed = j.at("seed").get<uint64_t>();
    c.validate();
    return c;
}

} // namespace

void save_checkpoint(const std::string& path, const Model& model, const std::string& target,
                     const TargetScaler& scaler, const ElementTable& table) {
    nlohmann::json j;
    j["format_version"] = kFormatVersion;
    j["model_kind"] = model.kind();
    j["config"] = config_to_json(model.config());
    j["input_dim"] = model.input_dim();
    j["target"] = target;
    j["target_unit"] = target_unit(target);
    j["scaler"] = {{"mean", scaler.mean}, {"stdev", scaler.stdev}};
    j["element_table_hash"] = table.schema_hash();

    nlohmann::json params;
    for (const auto& [name, tensor] : model.named_parameters()) {
        nlohmann::json p;
        p["rows"] = tensor.rows();
        p["cols"] = tensor.cols();
        p["values"] = tensor.values();
        params[name] = p;
    }
    j["parameters"] = params;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out << j.dump(2) << '\n';
}

LoadedCheckpoint load_checkpoint(const std::string& path, const ElementTable& table) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("malformed checkpoint " + path + ": " + e.what());
    }

    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion)
        throw std::runtime_error("unsupported checkpoint format version " + std::to_string(version));
    const std::string hash = j.at("element_table_hash").get<std::string>();
    if (hash != table.schema_hash())
        throw std::runtime_error("element table does not match checkpoint (schema hash " + table.schema_hash() +
                                 " vs stored " + hash + ")");

    LoadedCheckpoint out;
    out.target = j.at("target").get<std::string>();
    out.target_unit = j.at("target_unit").get<std::string>();
    out.scaler.mean = j.at("scaler").at("mean").get<double>();
    out.scaler.stdev = j.at("scaler").at("stdev").get<double>();
    out.model = make_model(j.at("model_kind").get<std::string>(), config_from_json(j.at("config")),
                           j.at("input_dim").get<int>());

    const nlohmann::json& params = j.at("parameters");
    std::map<std::string, Tensor> named = out.model->named_parameters();
    for (const auto& [name, tensor] : named) {
        if (!params.contains(name)) throw std::runtime_error("checkpoint missing parameter " + name);
        const nlohmann::json& p = params.at(name);
        if (p.at("rows").get<int>() != tensor.rows() || p.at("cols").get<int>() != tensor.cols())
            throw std::runtime_error("checkpoint parameter " + name + " has shape " +
                                     std::to_string(p.at("rows").get<int>()) + "x" +
                                     std::to_string(p.at("cols").get<int>()) + ", model expects " +
                                     std::to_string(tensor.rows()) + "x" + std::to_string(tensor.cols()));
        std::vector<double> values = p.at("values").get<std::vector<double>>();
        if (values.size() != tensor.size()) throw std::runtime_error("checkpoint parameter " + name + " has wrong size");
        Tensor t = tensor;
        t.values() = std::move(values);
    }
    for (auto it = params.begin(); it != params.end(); ++it)
        if (named.find(it.key()) == named.end())
            throw std::runtime_error("checkpoint has unknown parameter " + it.key());
    return out;
}

} // namespace lesets
