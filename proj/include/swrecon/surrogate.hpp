#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace swrecon {

/// Per-parameter gradient buffers mirroring an MlpSurrogate's layers.
struct MlpGradients {
    std::vector<Eigen::MatrixXd> dw;
    std::vector<Eigen::VectorXd> db;

    void add_scaled(const MlpGradients& other, double scale);
    void scale(double s);
    double squared_norm() const;
};

/// Feed-forward surrogate x(t): scalar time in, d-dimensional state out.
/// SiLU on hidden layers, identity output. Optional input window
/// normalization (t -> 2(t-t0)/T - 1) and output affine de-normalization
/// (x = raw .* scale + offset); both default to identity.
class MlpSurrogate {
  public:
    /// hidden_layers >= 0; hidden_layers == 0 makes a pure affine map.
    MlpSurrogate(int hidden_layers, int width, int out_dim, std::uint64_t seed);

    void set_input_window(double t0, double T);
    void set_output_transform(Eigen::VectorXd scale, Eigen::VectorXd offset);

    int out_dim() const { return out_dim_; }
    int hidden_layers() const { return hidden_layers_; }
    int width() const { return width_; }
    std::size_t layer_count() const { return weights_.size(); }

    std::vector<Eigen::MatrixXd>& weights() { return weights_; }
    std::vector<Eigen::VectorXd>& biases() { return biases_; }
    const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
    const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

    Eigen::VectorXd forward(double t) const;
    /// Columns are states for the corresponding entries of t.
    Eigen::MatrixXd forward_batch(const Eigen::VectorXd& t) const;

    /// Value and exact dx/dt via dual-number propagation through the layers.
    std::pair<Eigen::VectorXd, Eigen::VectorXd> forward_dt(double t) const;
    void forward_dt_batch(const Eigen::VectorXd& t, Eigen::MatrixXd& x, Eigen::MatrixXd& dxdt) const;

    /// Parameter gradients of sum_b [ <dl_dx.col(b), x(t_b)> +
    /// <dl_ddx.col(b), dx/dt(t_b)> ]. Pass dl_ddx = nullptr when no loss
    /// term touches the derivative path.
    MlpGradients backward(const Eigen::VectorXd& t, const Eigen::MatrixXd& dl_dx,
                          const Eigen::MatrixXd* dl_ddx) const;

    MlpGradients zero_gradients() const;

    nlohmann::json to_json() const;
    static MlpSurrogate from_json(const nlohmann::json& j);

  private:
    int hidden_layers_, width_, out_dim_;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
    double t_center_ = 0.0, t_halfspan_ = 1.0;  // t_norm = (t - center)/halfspan
    Eigen::VectorXd out_scale_, out_offset_;
};

struct AdamWConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

/// Decoupled-weight-decay Adam state for one parameter matrix.
struct AdamWMatrixState {
    Eigen::MatrixXd m, v;
    long step = 0;
};

void adamw_update(Eigen::Ref<Eigen::MatrixXd> param, AdamWMatrixState& state,
                  const Eigen::MatrixXd& grad, const AdamWConfig& cfg);

/// Moment accumulators mirroring a surrogate's parameters.
struct AdamWState {
    std::vector<AdamWMatrixState> w_states;
    std::vector<AdamWMatrixState> b_states;

    static AdamWState like(const MlpSurrogate& net);
};

void adamw_step(MlpSurrogate& net, AdamWState& state, const MlpGradients& grads,
                const AdamWConfig& cfg);

double silu(double z);
double silu_d1(double z);
double silu_d2(double z);

}  // namespace swrecon
