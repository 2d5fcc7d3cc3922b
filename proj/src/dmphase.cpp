#include "swrecon/dmphase.hpp"

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "swrecon/errors.hpp"
#include "swrecon/rng.hpp"

namespace swrecon {

void DmConfig::validate() const {
    if (!(iters > 0 && iters_phase1 > 0 && iters_phase1 < iters))
        throw ConfigError("dm config: need 0 < iters_phase1 < iters");
    if (iters_update < 1) throw ConfigError("dm config: iters_update must be >= 1");
    if (batch < 2) throw ConfigError("dm config: batch must be >= 2");
    if (slices < 1) throw ConfigError("dm config: slices must be >= 1");
    if (lambda_init < 0 || lambda_reg < 0 || lambda_sparse < 0 || threshold < 0)
        throw ConfigError("dm config: weights must be non-negative");
    if (n_reg < 2) throw ConfigError("dm config: n_reg must be >= 2");
    if (!(lr > 0)) throw ConfigError("dm config: lr must be positive");
}

namespace {

Eigen::VectorXd grid_times(double t0, double T, int n) {
    Eigen::VectorXd ts(n);
    for (int k = 0; k < n; ++k) ts[k] = t0 + T * static_cast<double>(k) / (n - 1);
    return ts;
}

}  // namespace

DmLossResult dm_loss(const ObservationPiece& piece, const MlpSurrogate& net,
                     const CandidateLibrary& lib, const CoefficientMatrix& theta,
                     const DmConfig& cfg, std::uint64_t step_seed, bool include_reg) {
    if (net.out_dim() != piece.dim()) throw ConfigError("dm_loss: net/piece dimension mismatch");
    const Eigen::Index d = piece.dim();
    const int b = cfg.batch;

    DmLossResult res;
    res.grads = net.zero_gradients();

    // --- sliced distributional term on a fresh batch and fresh slices
    Rng rng = Rng::child(step_seed, 0xD17);
    Eigen::VectorXd t_batch(b);
    {
        Rng trng = Rng::child(step_seed, 0x7135);
        for (int i = 0; i < b; ++i) t_batch[i] = piece.dist.inv_cdf(trng.uniform01());
    }
    Eigen::MatrixXd x_obs(b, d);
    for (int i = 0; i < b; ++i)
        x_obs.row(i) = piece.points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(piece.size()))));

    Eigen::MatrixXd x_net_cols = net.forward_batch(t_batch);  // d x B
    ProjectionSet proj(static_cast<int>(d), cfg.slices, derive_seed(step_seed, 0x50F7));
    SlicedGrad sg = sliced_w2sq_grad(x_net_cols.transpose(), x_obs, proj, cfg.reduction);
    res.parts.swd = sg.value;
    {
        Eigen::MatrixXd upstream = sg.dx.transpose();  // d x B
        res.grads.add_scaled(net.backward(t_batch, upstream, nullptr), 1.0);
    }

    // --- initial-condition term: lambda_init * ||x(t0) - x_init||^2
    if (cfg.lambda_init > 0.0) {
        Eigen::VectorXd t0v(1);
        t0v[0] = piece.t0;
        Eigen::VectorXd x0 = net.forward_batch(t0v).col(0);
        Eigen::VectorXd diff = x0 - piece.x_init;
        res.parts.init = cfg.lambda_init * diff.squaredNorm();
        Eigen::MatrixXd upstream = (2.0 * cfg.lambda_init) * diff;
        res.grads.add_scaled(net.backward(t0v, upstream, nullptr), 1.0);
    }

    // --- dictionary residual on the uniform grid (un-squared 2-norm)
    if (include_reg && cfg.lambda_reg > 0.0) {
        Eigen::VectorXd taus = grid_times(piece.t0, piece.T_piece, cfg.n_reg);
        Eigen::MatrixXd xg, ug;
        net.forward_dt_batch(taus, xg, ug);  // d x N each
        Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(d, cfg.n_reg);
        Eigen::MatrixXd gu = Eigen::MatrixXd::Zero(d, cfg.n_reg);
        const double w = cfg.lambda_reg / cfg.n_reg;
        double acc = 0.0;
        for (int k = 0; k < cfg.n_reg; ++k) {
            Eigen::VectorXd xk = xg.col(k);
            Eigen::VectorXd resid = eval_rhs(lib, theta, xk) - ug.col(k);
            double nrm = resid.norm();
            acc += nrm;
            if (nrm > 0.0) {
                Eigen::VectorXd unit = resid / nrm;
                gx.col(k) = w * rhs_jacobian(lib, theta, xk).transpose() * unit;
                gu.col(k) = -w * unit;
            }
        }
        res.parts.reg = w * acc;  // == lambda_reg * mean residual norm
        res.grads.add_scaled(net.backward(taus, gx, &gu), 1.0);
    }

    if (!std::isfinite(res.parts.total()))
        throw NumericError("dm_loss: non-finite loss value");
    return res;
}

namespace {

Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double lambda) {
    const Eigen::Index s = a.cols();
    if (lambda > 0.0) {
        Eigen::MatrixXd normal = a.transpose() * a + lambda * Eigen::MatrixXd::Identity(s, s);
        return normal.ldlt().solve(a.transpose() * b);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < s)
        throw NumericError("stridge: rank-deficient least squares with lambda = 0");
    return qr.solve(b);
}

}  // namespace

Eigen::VectorXd stridge(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double lambda,
                        double eta) {
    if (a.rows() != b.size()) throw ConfigError("stridge: row count mismatch");
    if (a.rows() < 1 || a.cols() < 1) throw ConfigError("stridge: empty system");
    if (lambda < 0 || eta < 0) throw ConfigError("stridge: lambda and eta must be >= 0");
    const Eigen::Index s = a.cols();

    Eigen::VectorXd x = ridge_solve(a, b, lambda);
    std::vector<Eigen::Index> support;
    Eigen::Index prev_count = s;

    for (Eigen::Index pass = 0; pass < s + 1; ++pass) {
        support.clear();
        for (Eigen::Index j = 0; j < s; ++j)
            if (std::abs(x[j]) > eta) support.push_back(j);
        const auto count = static_cast<Eigen::Index>(support.size());
        if (count == prev_count || count == 0) break;
        prev_count = count;

        Eigen::MatrixXd sub(a.rows(), count);
        for (Eigen::Index c = 0; c < count; ++c) sub.col(c) = a.col(support[static_cast<std::size_t>(c)]);
        Eigen::VectorXd xs = ridge_solve(sub, b, lambda);
        x.setZero();
        for (Eigen::Index c = 0; c < count; ++c) x[support[static_cast<std::size_t>(c)]] = xs[c];
    }

    if (!support.empty()) {
        // final unregularized refit on the surviving support
        Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(support.size()));
        for (std::size_t c = 0; c < support.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(support[c]);
        Eigen::VectorXd xs = ridge_solve(sub, b, 0.0);
        x.setZero();
        for (std::size_t c = 0; c < support.size(); ++c) x[support[c]] = xs[static_cast<Eigen::Index>(c)];
    } else {
        x.setZero();
    }
    return x;
}

void stack_regression_system(const std::vector<ObservationPiece>& pieces,
                             const std::vector<MlpSurrogate>& nets, const CandidateLibrary& lib,
                             int n_grid, Eigen::MatrixXd& phi_out, Eigen::MatrixXd& dx_out) {
    const Eigen::Index rows = static_cast<Eigen::Index>(pieces.size()) * n_grid;
    phi_out.resize(rows, lib.size());
    dx_out.resize(rows, lib.dim());
    Eigen::Index r = 0;
    for (std::size_t l = 0; l < pieces.size(); ++l) {
        Eigen::VectorXd taus = grid_times(pieces[l].t0, pieces[l].T_piece, n_grid);
        Eigen::MatrixXd xg, ug;
        nets[l].forward_dt_batch(taus, xg, ug);
        for (int k = 0; k < n_grid; ++k, ++r) {
            phi_out.row(r) = eval_features(lib, xg.col(k)).transpose();
            dx_out.row(r) = ug.col(k).transpose();
        }
    }
}

DmRunResult run_dm(const std::vector<ObservationPiece>& pieces, const CandidateLibrary& lib,
                   const DmConfig& cfg) {
    cfg.validate();
    if (pieces.empty()) throw ConfigError("run_dm: no pieces");
    for (const auto& p : pieces)
        if (p.dim() != lib.dim()) throw ConfigError("run_dm: piece dimension does not match library");

    DmRunResult out;
    out.theta = CoefficientMatrix::zero(lib.size(), lib.dim());

    // Per-piece surrogates, normalized to the piece window and point cloud.
    for (std::size_t l = 0; l < pieces.size(); ++l) {
        MlpSurrogate net(cfg.hidden_layers, cfg.width, static_cast<int>(lib.dim()),
                         derive_seed(cfg.seed, 0x9e70, l));
        net.set_input_window(pieces[l].t0, pieces[l].T_piece);
        Eigen::VectorXd mean = pieces[l].points.colwise().mean();
        Eigen::VectorXd var =
            (pieces[l].points.rowwise() - mean.transpose()).array().square().colwise().mean();
        Eigen::VectorXd scale = var.array().sqrt().max(1e-9);
        net.set_output_transform(scale, mean);
        out.nets.push_back(std::move(net));
    }

    AdamWConfig opt;
    opt.lr = cfg.lr;
    opt.weight_decay = cfg.weight_decay;
    std::vector<AdamWState> states;
    for (const auto& net : out.nets) states.push_back(AdamWState::like(net));

    for (int it = 1; it <= cfg.iters; ++it) {
        const bool include_reg = it > cfg.iters_phase1;
        DmHistoryRow row;
        row.iter = it;
        for (std::size_t l = 0; l < pieces.size(); ++l) {
            std::uint64_t step_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(it), l);
            DmLossResult r;
            try {
                r = dm_loss(pieces[l], out.nets[l], lib, out.theta, cfg, step_seed, include_reg);
            } catch (const NumericError& e) {
                throw NumericError("run_dm: " + std::string(e.what()) + " at iter " +
                                   std::to_string(it) + " piece " + std::to_string(l));
            }
            adamw_step(out.nets[l], states[l], r.grads, opt);
            row.swd += r.parts.swd;
            row.init += r.parts.init;
            row.reg += r.parts.reg;
        }
        if (it >= cfg.iters_phase1 && (it - cfg.iters_phase1) % cfg.iters_update == 0) {
            Eigen::MatrixXd phi, dx;
            stack_regression_system(pieces, out.nets, lib, cfg.n_reg, phi, dx);
            for (Eigen::Index k = 0; k < lib.dim(); ++k)
                out.theta.theta.col(k) = stridge(phi, dx.col(k), cfg.lambda_sparse, cfg.threshold);
            row.theta_updated = true;
        }
        out.history.push_back(row);
    }
    return out;
}

nlohmann::json DmConfig::to_json() const {
    return {{"iters", iters},
            {"iters_phase1", iters_phase1},
            {"iters_update", iters_update},
            {"batch", batch},
            {"slices", slices},
            {"lambda_init", lambda_init},
            {"lambda_reg", lambda_reg},
            {"lambda_sparse", lambda_sparse},
            {"threshold", threshold},
            {"n_reg", n_reg},
            {"lr", lr},
            {"weight_decay", weight_decay},
            {"hidden_layers", hidden_layers},
            {"width", width},
            {"seed", seed},
            {"rooted_slices", reduction == SliceReduction::Rooted}};
}

DmConfig DmConfig::from_json(const nlohmann::json& j) {
    DmConfig c;
    c.iters = j.value("iters", c.iters);
    c.iters_phase1 = j.value("iters_phase1", c.iters_phase1);
    c.iters_update = j.value("iters_update", c.iters_update);
    c.batch = j.value("batch", c.batch);
    c.slices = j.value("slices", c.slices);
    c.lambda_init = j.value("lambda_init", c.lambda_init);
    c.lambda_reg = j.value("lambda_reg", c.lambda_reg);
    c.lambda_sparse = j.value("lambda_sparse", c.lambda_sparse);
    c.threshold = j.value("threshold", c.threshold);
    c.n_reg = j.value("n_reg", c.n_reg);
    c.lr = j.value("lr", c.lr);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
    c.width = j.value("width", c.width);
    c.seed = j.value("seed", c.seed);
    c.reduction = j.value("rooted_slices", false) ? SliceReduction::Rooted : SliceReduction::Squared;
    c.validate();
    return c;
}

}  // namespace swrecon
