#include "lesets/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace lesets {

std::string to_string(ConvOp op) { return op == ConvOp::GraphConv ? "GraphConv" : "CGConv"; }

ConvOp conv_op_from_string(const std::string& s) {
    std::string lower(s.size(), '\0');
    std::transform(s.begin(), s.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "graphconv") return ConvOp::GraphConv;
    if (lower == "cgconv") return ConvOp::CGConv;
    throw std::runtime_error("unknown convolution operator '" + s + "'");
}

void ModelConfig::validate() const {
    if (n_conv_layers < 1) throw std::runtime_error("n_conv_layers must be >= 1");
    if (n_fc_layers < 1) throw std::runtime_error("n_fc_layers must be >= 1");
    if (hidden_dim < 1) throw std::runtime_error("hidden_dim must be >= 1");
}

long Model::param_count() const {
    long n = 0;
    for (const auto& p : parameters()) n += static_cast<long>(p.size());
    return n;
}

// Uniform +-sqrt(1/fan_in) for weights and biases, drawn in declaration order.
static Tensor init_weight(Rng& rng, int in_dim, int out_dim) {
    const double bound = std::sqrt(1.0 / in_dim);
    Tensor w = Tensor::zeros(in_dim, out_dim, true);
    for (auto& x : w.values()) x = rng.uniform(-bound, bound);
    return w;
}

static Tensor init_bias(Rng& rng, int in_dim, int out_dim) {
    const double bound = std::sqrt(1.0 / in_dim);
    Tensor b = Tensor::zeros(1, out_dim, true);
    for (auto& x : b.values()) x = rng.uniform(-bound, bound);
    return b;
}

// ---------------------------------------------------------------- LESetsModel

LESetsModel::LESetsModel(const ModelConfig& config, int input_dim) : config_(config), input_dim_(input_dim) {
    config_.validate();
    Rng rng(config_.seed);
    const int h = config_.hidden_dim;

    if (config_.conv_operator == ConvOp::GraphConv) {
        conv_out_dim_ = h;
        for (int l = 0; l < config_.n_conv_layers; ++l) {
            const int in = l == 0 ? input_dim_ : h;
            GraphConvParams p;
            p.w1 = init_weight(rng, in, h);
            p.w2 = init_weight(rng, in, h);
            p.b = init_bias(rng, in, h);
            graph_conv_.push_back(std::move(p));
        }
    } else {
        conv_out_dim_ = input_dim_; // gated residual update keeps width
        const int zdim = 2 * input_dim_ + 1;
        for (int l = 0; l < config_.n_conv_layers; ++l) {
            CGConvParams p;
            p.wf = init_weight(rng, zdim, input_dim_);
            p.bf = init_bias(rng, zdim, input_dim_);
            p.ws = init_weight(rng, zdim, input_dim_);
            p.bs = init_bias(rng, zdim, input_dim_);
            cg_conv_.push_back(std::move(p));
        }
    }

    readout_w_ = init_weight(rng, conv_out_dim_, h);
    readout_b_ = init_bias(rng, conv_out_dim_, h);

    if (config_.use_att) {
        att_wq_ = init_weight(rng, h, h);
        att_wk_ = init_weight(rng, h, h);
        att_wv_ = init_weight(rng, h, h);
    }

    for (int l = 0; l < config_.n_fc_layers; ++l) {
        const int out = l == config_.n_fc_layers - 1 ? 1 : h;
        FcLayer fc;
        fc.w = init_weight(rng, h, out);
        fc.b = init_bias(rng, h, out);
        rho_.push_back(std::move(fc));
    }
}

Tensor LESetsModel::conv_layer(Tape& tape, int layer, const Tensor& nodes, const LEGraph& g) const {
    const Tensor adj = Tensor::from_matrix(g.weighted_adjacency());
    if (config_.conv_operator == ConvOp::GraphConv) {
        // v_m <- W1 v_m + b + W2 sum_n e_mn v_n, then tanh
        const auto& p = graph_conv_[layer];
        Tensor self = tape.affine(nodes, p.w1, p.b);
        Tensor neigh = tape.matmul(tape.matmul(adj, nodes), p.w2);
        return tape.tanh(tape.add(self, neigh));
    }

    // CGConv: v_m <- v_m + sum_n sigmoid(z W_f + b_f) * softplus(z W_s + b_s),
    // z = concat(v_m, v_n, e_mn); then tanh
    const auto& p = cg_conv_[layer];
    const int k = g.node_count();
    std::vector<Tensor> updated(k);
    std::vector<std::vector<Tensor>> messages(k);
    for (size_t e = 0; e < g.edges.size(); ++e) {
        const auto [m, n] = g.edges[e];
        const Tensor ew = Tensor::scalar(g.edge_weights[e]);
        for (const auto& [dst, src] : {std::pair{m, n}, std::pair{n, m}}) {
            Tensor z = tape.concat_cols({tape.slice_row(nodes, dst), tape.slice_row(nodes, src), ew});
            Tensor gate = tape.sigmoid(tape.affine(z, p.wf, p.bf));
            Tensor core = tape.softplus(tape.affine(z, p.ws, p.bs));
            messages[dst].push_back(tape.elementwise_mul(gate, core));
        }
    }
    for (int m = 0; m < k; ++m) {
        Tensor acc = tape.slice_row(nodes, m);
        for (const auto& msg : messages[m]) acc = tape.add(acc, msg);
        updated[m] = acc;
    }
    return tape.tanh(tape.concat_rows(updated));
}

Tensor LESetsModel::phi_forward(Tape& tape, const LEGraph& g) const {
    if (g.node_features.cols != input_dim_)
        throw std::runtime_error("graph feature width does not match model input_dim");
    Tensor nodes = Tensor::from_matrix(g.node_features);
    for (int l = 0; l < config_.n_conv_layers; ++l) nodes = conv_layer(tape, l, nodes, g);
    Tensor pooled = tape.mean_pool(nodes);
    return tape.tanh(tape.affine(pooled, readout_w_, readout_b_));
}

Tensor LESetsModel::aggregate_ws(Tape& tape, const std::vector<Tensor>& zs,
                                 const std::vector<double>& ws) const {
    if (zs.empty()) throw std::runtime_error("aggregate over empty set");
    return tape.weighted_sum(tape.concat_rows(zs), ws);
}

Tensor LESetsModel::aggregate_att(Tape& tape, const std::vector<Tensor>& zs, const std::vector<double>& ws,
                                  Tensor* pre_rows, Tensor* post_rows) const {
    if (zs.empty()) throw std::runtime_error("aggregate over empty set");
    Tensor m = tape.concat_rows(zs); // n x d
    Tensor q = tape.matmul(m, att_wq_);
    Tensor k = tape.matmul(m, att_wk_);
    Tensor v = tape.matmul(m, att_wv_);
    Tensor scores = tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / std::sqrt(config_.hidden_dim));
    Tensor adjusted = tape.matmul(tape.softmax_rows(scores), v);
    if (pre_rows) *pre_rows = m;
    if (post_rows) *post_rows = adjusted;
    return tape.weighted_sum(adjusted, ws);
}

Tensor LESetsModel::rho_forward(Tape& tape, const Tensor& aggregated) const {
    Tensor z = aggregated;
    for (int l = 0; l < config_.n_fc_layers; ++l) {
        z = tape.affine(z, rho_[l].w, rho_[l].b);
        if (l + 1 < config_.n_fc_layers) z = tape.tanh(z);
    }
    return z;
}

Tensor LESetsModel::forward(Tape& tape, const GraphSet& x) const {
    if (x.members.empty()) throw std::runtime_error("forward on empty graph set");
    std::vector<Tensor> zs;
    std::vector<double> ws;
    zs.reserve(x.members.size());
    for (const auto& m : x.members) {
        zs.push_back(phi_forward(tape, m.graph));
        ws.push_back(m.weight);
    }
    Tensor aggregated = config_.use_att ? aggregate_att(tape, zs, ws) : aggregate_ws(tape, zs, ws);
    return rho_forward(tape, aggregated);
}

std::vector<std::pair<std::string, std::optional<double>>> LESetsModel::importance_scores(
    const GraphSet& x) const {
    if (!config_.use_att) throw std::runtime_error("importance_scores requires an attention model");
    if (x.members.empty()) throw std::runtime_error("importance_scores on empty graph set");

    Tape tape(false);
    std::vector<Tensor> zs;
    std::vector<double> ws;
    for (const auto& m : x.members) {
        zs.push_back(phi_forward(tape, m.graph));
        ws.push_back(m.weight);
    }
    Tensor pre, post;
    aggregate_att(tape, zs, ws, &pre, &post);

    std::vector<std::pair<std::string, std::optional<double>>> out;
    for (size_t i = 0; i < x.members.size(); ++i) {
        double npre = 0, npost = 0;
        for (int j = 0; j < pre.cols(); ++j) {
            npre += pre.at(static_cast<int>(i), j) * pre.at(static_cast<int>(i), j);
            npost += post.at(static_cast<int>(i), j) * post.at(static_cast<int>(i), j);
        }
        npre = std::sqrt(npre);
        npost = std::sqrt(npost);
        std::optional<double> imp;
        if (npre > 0) imp = npost / npre;
        out.emplace_back(x.members[i].graph.center_symbol(), imp);
    }
    return out;
}

std::vector<Tensor> LESetsModel::parameters() const {
    std::vector<Tensor> out;
    for (const auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
}

std::map<std::string, Tensor> LESetsModel::named_parameters() const {
    std::map<std::string, Tensor> out;
    char buf[64];
    for (size_t l = 0; l < graph_conv_.size(); ++l) {
        snprintf(buf, sizeof(buf), "conv%zu.", l);
        out[std::string(buf) + "w1"] = graph_conv_[l].w1;
        out[std::string(buf) + "w2"] = graph_conv_[l].w2;
        out[std::string(buf) + "b"] = graph_conv_[l].b;
    }
    for (size_t l = 0; l < cg_conv_.size(); ++l) {
        snprintf(buf, sizeof(buf), "conv%zu.", l);
        out[std::string(buf) + "wf"] = cg_conv_[l].wf;
        out[std::string(buf) + "bf"] = cg_conv_[l].bf;
        out[std::string(buf) + "ws"] = cg_conv_[l].ws;
        out[std::string(buf) + "bs"] = cg_conv_[l].bs;
    }
    out["readout.w"] = readout_w_;
    out["readout.b"] = readout_b_;
    if (config_.use_att) {
        out["att.wq"] = att_wq_;
        out["att.wk"] = att_wk_;
        out["att.wv"] = att_wv_;
    }
    for (size_t l = 0; l < rho_.size(); ++l) {
        snprintf(buf, sizeof(buf), "rho%zu.", l);
        out[std::string(buf) + "w"] = rho_[l].w;
        out[std::string(buf) + "b"] = rho_[l].b;
    }
    return out;
}

// ---------------------------------------------------------------- DeepSetsModel

DeepSetsModel::DeepSetsModel(const ModelConfig& config, int input_dim)
    : config_(config), input_dim_(input_dim) {
    config_.validate();
    Rng rng(config_.seed);
    const int h = config_.hidden_dim;

    // encoder: input -> h -> h, both tanh
    phi_.push_back({init_weight(rng, input_dim_, h), init_bias(rng, input_dim_, h)});
    phi_.push_back({init_weight(rng, h, h), init_bias(rng, h, h)});

    for (int l = 0; l < config_.n_fc_layers; ++l) {
        const int out = l == config_.n_fc_layers - 1 ? 1 : h;
        rho_.push_back({init_weight(rng, h, out), init_bias(rng, h, out)});
    }
}

Tensor DeepSetsModel::forward(Tape& tape, const GraphSet& x) const {
    if (x.members.empty()) throw std::runtime_error("forward on empty graph set");
    std::vector<Tensor> encoded;
    std::vector<double> ws;
    for (const auto& m : x.members) {
        // element feature vector = the member graph's center-node row
        Tensor f = Tensor::zeros(1, input_dim_);
        for (int j = 0; j < input_dim_; ++j) f.at(0, j) = m.graph.node_features.at(m.graph.center_index, j);
        Tensor z = f;
        for (const auto& layer : phi_) z = tape.tanh(tape.affine(z, layer.w, layer.b));
        encoded.push_back(z);
        ws.push_back(m.weight);
    }
    Tensor aggregated = tape.weighted_sum(tape.concat_rows(encoded), ws);
    Tensor z = aggregated;
    for (size_t l = 0; l < rho_.size(); ++l) {
        z = tape.affine(z, rho_[l].w, rho_[l].b);
        if (l + 1 < rho_.size()) z = tape.tanh(z);
    }
    return z;
}

std::vector<Tensor> DeepSetsModel::parameters() const {
    std::vector<Tensor> out;
    for (const auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
}

std::map<std::string, Tensor> DeepSetsModel::named_parameters() const {
    std::map<std::string, Tensor> out;
    char buf[64];
    for (size_t l = 0; l < phi_.size(); ++l) {
        snprintf(buf, sizeof(buf), "phi%zu.", l);
        out[std::string(buf) + "w"] = phi_[l].w;
        out[std::string(buf) + "b"] = phi_[l].b;
    }
    for (size_t l = 0; l < rho_.size(); ++l) {
        snprintf(buf, sizeof(buf), "rho%zu.", l);
        out[std::string(buf) + "w"] = rho_[l].w;
        out[std::string(buf) + "b"] = rho_[l].b;
    }
    return out;
}

std::unique_ptr<Model> make_model(const std::string& kind, const ModelConfig& config, int input_dim) {
    if (kind == "lesets") return std::make_unique<LESetsModel>(config, input_dim);
    if (kind == "deepsets") return std::make_unique<DeepSetsModel>(config, input_dim);
    throw std::runtime_error("unknown model kind '" + kind + "'");
}

} // namespace lesets
