#pragma once

#include "lesets/graphs.hpp"
#include "lesets/tensor.hpp"

#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lesets {

enum class ConvOp { GraphConv, CGConv };

std::string to_string(ConvOp op);
ConvOp conv_op_from_string(const std::string& s);

struct ModelConfig {
    ConvOp conv_operator = ConvOp::GraphConv;
    int n_conv_layers = 2;
    int n_fc_layers = 3; // rho depth L
    int hidden_dim = 32;
    bool use_att = false;
    uint64_t seed = 0;

    void validate() const;
};

/// Common surface of the trainable regressors: a forward pass on one alloy
/// and the flat parameter list the optimizer owns.
class Model {
public:
    virtual ~Model() = default;

    virtual Tensor forward(Tape& tape, const GraphSet& x) const = 0;
    virtual std::vector<Tensor> parameters() const = 0;
    virtual std::string kind() const = 0;
    virtual const ModelConfig& config() const = 0;
    virtual int input_dim() const = 0;

    long param_count() const;

    /// Named parameter map for checkpointing; names are stable across runs.
    virtual std::map<std::string, Tensor> named_parameters() const = 0;
};

/// y = rho(aggregate{phi(x_i), w_i}) over the set of LE graphs.
class LESetsModel : public Model {
public:
    LESetsModel(const ModelConfig& config, int input_dim);

    Tensor forward(Tape& tape, const GraphSet& x) const override;
    std::vector<Tensor> parameters() const override;
    std::map<std::string, Tensor> named_parameters() const override;
    std::string kind() const override { return "lesets"; }

    /// GNN over one LE graph: conv stack, mean-pool readout, tanh FC.
    Tensor phi_forward(Tape& tape, const LEGraph& g) const;

    Tensor aggregate_ws(Tape& tape, const std::vector<Tensor>& zs, const std::vector<double>& ws) const;

    /// Set-wide single-head self-attention over stacked member representations,
    /// then weighted summation. Optionally exposes the pre/post attention rows.
    Tensor aggregate_att(Tape& tape, const std::vector<Tensor>& zs, const std::vector<double>& ws,
                         Tensor* pre_rows = nullptr, Tensor* post_rows = nullptr) const;

    Tensor rho_forward(Tape& tape, const Tensor& aggregated) const;

    /// Imp = |z'|_2 / |z|_2 per member, keyed by center element symbol.
    /// nullopt marks a zero-norm pre-attention representation.
    std::vector<std::pair<std::string, std::optional<double>>> importance_scores(const GraphSet& x) const;

    const ModelConfig& config() const override { return config_; }
    int input_dim() const override { return input_dim_; }

private:
    Tensor conv_layer(Tape& tape, int layer, const Tensor& nodes, const LEGraph& g) const;

    ModelConfig config_;
    int input_dim_;
    int conv_out_dim_; // hidden_dim for GraphConv, input_dim for CGConv (residual)

    struct GraphConvParams {
        Tensor w1, w2, b;
    };
    struct CGConvParams {
        Tensor wf, bf, ws, bs;
    };
    std::vector<GraphConvParams> graph_conv_;
    std::vector<CGConvParams> cg_conv_;
    Tensor readout_w_, readout_b_;
    Tensor att_wq_, att_wk_, att_wv_;
    struct FcLayer {
        Tensor w, b;
    };
    std::vector<FcLayer> rho_;
};

/// Baseline: per-element encoder, fraction-weighted sum, decoder MLP.
/// Consumes the center-node features of each member graph.
class DeepSetsModel : public Model {
public:
    DeepSetsModel(const ModelConfig& config, int input_dim);

    Tensor forward(Tape& tape, const GraphSet& x) const override;
    std::vector<Tensor> parameters() const override;
    std::map<std::string, Tensor> named_parameters() const override;
    std::string kind() const override { return "deepsets"; }

    const ModelConfig& config() const override { return config_; }
    int input_dim() const override { return input_dim_; }

private:
    ModelConfig config_;
    int input_dim_;
    struct FcLayer {
        Tensor w, b;
    };
    std::vector<FcLayer> phi_, rho_;
};

std::unique_ptr<Model> make_model(const std::string& kind, const ModelConfig& config, int input_dim);

} // namespace lesets
