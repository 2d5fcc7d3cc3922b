#include "swrecon/surrogate.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "swrecon/errors.hpp"
#include "swrecon/rng.hpp"

namespace swrecon {

double silu(double z) { return z / (1.0 + std::exp(-z)); }

double silu_d1(double z) {
    double s = 1.0 / (1.0 + std::exp(-z));
    return s * (1.0 + z * (1.0 - s));
}

double silu_d2(double z) {
    double s = 1.0 / (1.0 + std::exp(-z));
    double sp = s * (1.0 - s);
    return sp * (2.0 + z * (1.0 - 2.0 * s));
}

void MlpGradients::add_scaled(const MlpGradients& other, double scale) {
    for (std::size_t i = 0; i < dw.size(); ++i) {
        dw[i] += scale * other.dw[i];
        db[i] += scale * other.db[i];
    }
}

void MlpGradients::scale(double s) {
    for (std::size_t i = 0; i < dw.size(); ++i) {
        dw[i] *= s;
        db[i] *= s;
    }
}

double MlpGradients::squared_norm() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < dw.size(); ++i) acc += dw[i].squaredNorm() + db[i].squaredNorm();
    return acc;
}

MlpSurrogate::MlpSurrogate(int hidden_layers, int width, int out_dim, std::uint64_t seed)
    : hidden_layers_(hidden_layers), width_(width), out_dim_(out_dim) {
    if (hidden_layers < 0 || out_dim < 1 || (hidden_layers > 0 && width < 1))
        throw ConfigError("surrogate: invalid architecture");
    std::vector<int> dims;
    dims.push_back(1);
    for (int i = 0; i < hidden_layers; ++i) dims.push_back(width);
    dims.push_back(out_dim);

    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        int fan_in = dims[i], fan_out = dims[i + 1];
        double bound = std::sqrt(6.0 / (fan_in + fan_out));
        Rng rng = Rng::child(seed, 0x11a7e5, i);
        Eigen::MatrixXd w(fan_out, fan_in);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
        weights_.push_back(std::move(w));
        biases_.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    out_scale_ = Eigen::VectorXd::Ones(out_dim);
    out_offset_ = Eigen::VectorXd::Zero(out_dim);
}

void MlpSurrogate::set_input_window(double t0, double T) {
    if (!(T > 0.0)) throw ConfigError("surrogate: window length must be positive");
    t_center_ = t0 + T / 2.0;
    t_halfspan_ = T / 2.0;
}

void MlpSurrogate::set_output_transform(Eigen::VectorXd scale, Eigen::VectorXd offset) {
    if (scale.size() != out_dim_ || offset.size() != out_dim_)
        throw ConfigError("surrogate: output transform dimension mismatch");
    out_scale_ = std::move(scale);
    out_offset_ = std::move(offset);
}

Eigen::MatrixXd MlpSurrogate::forward_batch(const Eigen::VectorXd& t) const {
    Eigen::MatrixXd a = ((t.array() - t_center_) / t_halfspan_).matrix().transpose();  // 1 x B
    for (std::size_t i = 0; i + 1 < weights_.size(); ++i) {
        Eigen::MatrixXd z = (weights_[i] * a).colwise() + biases_[i];
        a = z.unaryExpr([](double v) { return silu(v); });
    }
    Eigen::MatrixXd y = (weights_.back() * a).colwise() + biases_.back();
    return (y.array().colwise() * out_scale_.array()).colwise() + out_offset_.array();
}

Eigen::VectorXd MlpSurrogate::forward(double t) const {
    Eigen::VectorXd tv(1);
    tv[0] = t;
    return forward_batch(tv).col(0);
}

void MlpSurrogate::forward_dt_batch(const Eigen::VectorXd& t, Eigen::MatrixXd& x,
                                    Eigen::MatrixXd& dxdt) const {
    Eigen::MatrixXd a = ((t.array() - t_center_) / t_halfspan_).matrix().transpose();
    Eigen::MatrixXd u = Eigen::MatrixXd::Constant(1, t.size(), 1.0 / t_halfspan_);
    for (std::size_t i = 0; i + 1 < weights_.size(); ++i) {
        Eigen::MatrixXd z = (weights_[i] * a).colwise() + biases_[i];
        Eigen::MatrixXd uz = weights_[i] * u;
        a = z.unaryExpr([](double v) { return silu(v); });
        u = z.unaryExpr([](double v) { return silu_d1(v); }).cwiseProduct(uz);
    }
    Eigen::MatrixXd y = (weights_.back() * a).colwise() + biases_.back();
    Eigen::MatrixXd uy = weights_.back() * u;
    x = (y.array().colwise() * out_scale_.array()).colwise() + out_offset_.array();
    dxdt = uy.array().colwise() * out_scale_.array();
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> MlpSurrogate::forward_dt(double t) const {
    Eigen::VectorXd tv(1);
    tv[0] = t;
    Eigen::MatrixXd x, u;
    forward_dt_batch(tv, x, u);
    return {x.col(0), u.col(0)};
}

MlpGradients MlpSurrogate::zero_gradients() const {
    MlpGradients g;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        g.dw.push_back(Eigen::MatrixXd::Zero(weights_[i].rows(), weights_[i].cols()));
        g.db.push_back(Eigen::VectorXd::Zero(biases_[i].size()));
    }
    return g;
}

MlpGradients MlpSurrogate::backward(const Eigen::VectorXd& t, const Eigen::MatrixXd& dl_dx,
                                    const Eigen::MatrixXd* dl_ddx) const {
    const Eigen::Index b = t.size();
    if (dl_dx.rows() != out_dim_ || dl_dx.cols() != b)
        throw ConfigError("surrogate backward: dl_dx shape mismatch");
    if (dl_ddx && (dl_ddx->rows() != out_dim_ || dl_ddx->cols() != b))
        throw ConfigError("surrogate backward: dl_ddx shape mismatch");
    const bool tangent = dl_ddx != nullptr;
    const std::size_t layers = weights_.size();

    // Forward, storing layer inputs, pre-activations, and tangent
    // pre-activations (uz) for the dual channel.
    std::vector<Eigen::MatrixXd> act_in(layers), pre(layers), tan_in, tan_pre;
    if (tangent) {
        tan_in.resize(layers);
        tan_pre.resize(layers);
    }
    Eigen::MatrixXd a = ((t.array() - t_center_) / t_halfspan_).matrix().transpose();
    Eigen::MatrixXd u;
    if (tangent) u = Eigen::MatrixXd::Constant(1, b, 1.0 / t_halfspan_);
    for (std::size_t i = 0; i < layers; ++i) {
        act_in[i] = a;
        pre[i] = (weights_[i] * a).colwise() + biases_[i];
        if (tangent) {
            tan_in[i] = u;
            tan_pre[i] = weights_[i] * u;
        }
        if (i + 1 < layers) {
            a = pre[i].unaryExpr([](double v) { return silu(v); });
            if (tangent)
                u = pre[i].unaryExpr([](double v) { return silu_d1(v); }).cwiseProduct(tan_pre[i]);
        }
    }

    MlpGradients g = zero_gradients();

    // Reverse pass. ga / gu are adjoints of the layer output value / tangent.
    Eigen::MatrixXd ga = dl_dx.array().colwise() * out_scale_.array();
    Eigen::MatrixXd gu;
    if (tangent) gu = dl_ddx->array().colwise() * out_scale_.array();

    for (std::size_t i = layers; i-- > 0;) {
        const bool is_output = (i + 1 == layers);
        Eigen::MatrixXd gz;
        if (is_output) {
            gz = ga;  // identity activation
            g.dw[i].noalias() += gz * act_in[i].transpose();
            if (tangent) g.dw[i].noalias() += gu * tan_in[i].transpose();
            g.db[i] += gz.rowwise().sum();
            ga = weights_[i].transpose() * gz;
            if (tangent) gu = weights_[i].transpose() * gu;
        } else {
            Eigen::MatrixXd s1 = pre[i].unaryExpr([](double v) { return silu_d1(v); });
            gz = ga.cwiseProduct(s1);
            Eigen::MatrixXd gu_s1;
            if (tangent) {
                Eigen::MatrixXd s2 = pre[i].unaryExpr([](double v) { return silu_d2(v); });
                gz += gu.cwiseProduct(s2).cwiseProduct(tan_pre[i]);
                gu_s1 = gu.cwiseProduct(s1);
            }
            g.dw[i].noalias() += gz * act_in[i].transpose();
            if (tangent) g.dw[i].noalias() += gu_s1 * tan_in[i].transpose();
            g.db[i] += gz.rowwise().sum();
            ga = weights_[i].transpose() * gz;
            if (tangent) gu = weights_[i].transpose() * gu_s1;
        }
    }
    return g;
}

nlohmann::json MlpSurrogate::to_json() const {
    nlohmann::json j;
    j["format"] = 1;
    j["hidden_layers"] = hidden_layers_;
    j["width"] = width_;
    j["out_dim"] = out_dim_;
    j["t_center"] = t_center_;
    j["t_halfspan"] = t_halfspan_;
    j["out_scale"] = std::vector<double>(out_scale_.data(), out_scale_.data() + out_scale_.size());
    j["out_offset"] = std::vector<double>(out_offset_.data(), out_offset_.data() + out_offset_.size());
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        nlohmann::json layer;
        nlohmann::json w = nlohmann::json::array();
        for (Eigen::Index r = 0; r < weights_[i].rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < weights_[i].cols(); ++c) row.push_back(weights_[i](r, c));
            w.push_back(row);
        }
        layer["w"] = w;
        layer["b"] = std::vector<double>(biases_[i].data(), biases_[i].data() + biases_[i].size());
        layers.push_back(layer);
    }
    j["layers"] = layers;
    return j;
}

MlpSurrogate MlpSurrogate::from_json(const nlohmann::json& j) {
    if (j.value("format", 0) != 1) throw ConfigError("surrogate checkpoint: unsupported format");
    MlpSurrogate net(j.at("hidden_layers").get<int>(), j.at("width").get<int>(),
                     j.at("out_dim").get<int>(), 0);
    net.t_center_ = j.at("t_center").get<double>();
    net.t_halfspan_ = j.at("t_halfspan").get<double>();
    auto sc = j.at("out_scale").get<std::vector<double>>();
    auto of = j.at("out_offset").get<std::vector<double>>();
    net.out_scale_ = Eigen::Map<Eigen::VectorXd>(sc.data(), static_cast<Eigen::Index>(sc.size()));
    net.out_offset_ = Eigen::Map<Eigen::VectorXd>(of.data(), static_cast<Eigen::Index>(of.size()));
    const auto& layers = j.at("layers");
    if (layers.size() != net.weights_.size()) throw ConfigError("surrogate checkpoint: layer count mismatch");
    for (std::size_t i = 0; i < net.weights_.size(); ++i) {
        const auto& w = layers[i].at("w");
        if (static_cast<Eigen::Index>(w.size()) != net.weights_[i].rows())
            throw ConfigError("surrogate checkpoint: weight shape mismatch");
        for (Eigen::Index r = 0; r < net.weights_[i].rows(); ++r)
            for (Eigen::Index c = 0; c < net.weights_[i].cols(); ++c)
                net.weights_[i](r, c) = w[r][c].get<double>();
        auto bvec = layers[i].at("b").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(bvec.size()) != net.biases_[i].size())
            throw ConfigError("surrogate checkpoint: bias shape mismatch");
        net.biases_[i] = Eigen::Map<Eigen::VectorXd>(bvec.data(), static_cast<Eigen::Index>(bvec.size()));
    }
    return net;
}

void adamw_update(Eigen::Ref<Eigen::MatrixXd> param, AdamWMatrixState& state,
                  const Eigen::MatrixXd& grad, const AdamWConfig& cfg) {
    if (state.m.size() == 0) {
        state.m = Eigen::MatrixXd::Zero(param.rows(), param.cols());
        state.v = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    }
    state.step += 1;
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    Eigen::MatrixXd mhat = state.m / bc1;
    Eigen::MatrixXd vhat = state.v / bc2;
    // decoupled weight decay
    param -= cfg.lr * (mhat.array() / (vhat.array().sqrt() + cfg.eps)).matrix();
    if (cfg.weight_decay != 0.0) param -= cfg.lr * cfg.weight_decay * param;
}

AdamWState AdamWState::like(const MlpSurrogate& net) {
    AdamWState st;
    st.w_states.resize(net.layer_count());
    st.b_states.resize(net.layer_count());
    return st;
}

void adamw_step(MlpSurrogate& net, AdamWState& state, const MlpGradients& grads,
                const AdamWConfig& cfg) {
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        adamw_update(net.weights()[i], state.w_states[i], grads.dw[i], cfg);
        Eigen::Map<Eigen::MatrixXd> bias(net.biases()[i].data(), net.biases()[i].size(), 1);
        adamw_update(bias, state.b_states[i], grads.db[i], cfg);
    }
}

}  // namespace swrecon
