#include "swrecon/odesolve.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "swrecon/errors.hpp"

namespace swrecon {

SolveGrid SolveGrid::at_times(std::vector<double> times, int substeps, double max_step) {
    SolveGrid g;
    g.times = std::move(times);
    g.substeps_per_interval = substeps;
    g.max_step = max_step;
    g.validate();
    return g;
}

SolveGrid SolveGrid::uniform(double t0, double T, int n_intervals) {
    if (n_intervals < 1 || !(T > 0.0)) throw ConfigError("uniform grid requires n >= 1, T > 0");
    SolveGrid g;
    g.times.resize(static_cast<std::size_t>(n_intervals) + 1);
    for (int i = 0; i <= n_intervals; ++i)
        g.times[static_cast<std::size_t>(i)] = t0 + T * static_cast<double>(i) / n_intervals;
    g.times.back() = t0 + T;  // avoid roundoff drift at the endpoint
    return g;
}

void SolveGrid::validate() const {
    if (times.empty()) throw ConfigError("solve grid is empty");
    if (substeps_per_interval < 1) throw ConfigError("substeps_per_interval must be >= 1");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i])) throw ConfigError("solve grid contains non-finite instant");
        if (i > 0 && !(times[i] > times[i - 1]))
            throw ConfigError("solve grid instants must be strictly increasing");
    }
}

int SolveGrid::substeps_for(std::size_t interval) const {
    int m = substeps_per_interval;
    if (max_step > 0.0) {
        double dt = times[interval + 1] - times[interval];
        int needed = static_cast<int>(std::ceil(dt / max_step - 1e-12));
        if (needed > m) m = needed;
    }
    return m;
}

namespace {

struct RhsEval {
    const CandidateLibrary& lib;
    const CoefficientMatrix& theta;
    Eigen::VectorXd phi;  // scratch

    explicit RhsEval(const CandidateLibrary& l, const CoefficientMatrix& th)
        : lib(l), theta(th), phi(l.size()) {}

    // returns false on non-finite intermediate
    bool operator()(const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        if (!eval_features_into(lib, x, phi)) return false;
        out.noalias() = theta.theta.transpose() * phi;
        return out.allFinite();
    }
};

}  // namespace

SolveResult rk4_solve(const CandidateLibrary& lib, const CoefficientMatrix& theta,
                      const Eigen::VectorXd& x0, const SolveGrid& grid, SolveTape* tape,
                      double blowup_bound) {
    grid.validate();
    if (x0.size() != lib.dim()) throw ConfigError("rk4_solve: x0 dimension mismatch");
    if (!x0.allFinite()) throw ConfigError("rk4_solve: x0 must be finite");
    if (theta.rows() != lib.size() || theta.cols() != lib.dim())
        throw ConfigError("rk4_solve: coefficient shape does not match library");

    const Eigen::Index d = lib.dim();
    SolveResult res;
    res.states.reserve(grid.times.size());
    res.states.push_back(x0);
    res.sup_norm = x0.norm();

    if (tape) {
        tape->dim = static_cast<int>(d);
        tape->steps.clear();
        tape->substeps_per_interval.clear();
    }

    RhsEval f(lib, theta);
    Eigen::VectorXd x = x0, k1(d), k2(d), k3(d), k4(d), a(d);

    for (std::size_t i = 0; i + 1 < grid.times.size(); ++i) {
        const int m = grid.substeps_for(i);
        const double dt = (grid.times[i + 1] - grid.times[i]) / m;
        if (tape) tape->substeps_per_interval.push_back(m);
        double t = grid.times[i];
        for (int s = 0; s < m; ++s) {
            SolveTape::Step rec;
            bool ok = f(x, k1);
            if (tape && ok) rec.a1 = x;
            a = x + (dt / 2) * k1;
            ok = ok && f(a, k2);
            if (tape && ok) rec.a2 = a;
            a = x + (dt / 2) * k2;
            ok = ok && f(a, k3);
            if (tape && ok) rec.a3 = a;
            a = x + dt * k3;
            ok = ok && f(a, k4);
            if (tape && ok) rec.a4 = a;
            if (ok) {
                x += (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
                ok = x.allFinite();
            }
            t += dt;
            double nrm = ok ? x.norm() : std::numeric_limits<double>::infinity();
            if (!ok || nrm > blowup_bound)
                throw BlowUpError("rk4_solve: trajectory norm escaped the divergence bound near t=" +
                                      std::to_string(t),
                                  t);
            if (nrm > res.sup_norm) res.sup_norm = nrm;
            if (tape) {
                rec.h = dt;
                tape->steps.push_back(std::move(rec));
            }
        }
        res.states.push_back(x);
    }
    return res;
}

Eigen::MatrixXd backprop_tape(const CandidateLibrary& lib, const CoefficientMatrix& theta,
                              const SolveTape& tape,
                              const std::vector<Eigen::VectorXd>& loss_grads) {
    const Eigen::Index d = lib.dim();
    const Eigen::Index s = lib.size();
    if (loss_grads.size() != tape.substeps_per_interval.size() + 1)
        throw ConfigError("backprop_tape: loss_grads misaligned with tape states");
    for (const auto& g : loss_grads)
        if (g.size() != d) throw ConfigError("backprop_tape: gradient dimension mismatch");

    Eigen::MatrixXd dtheta = Eigen::MatrixXd::Zero(s, d);
    Eigen::VectorXd lam = loss_grads.back();

    Eigen::VectorXd phi(s), tv(s), gk1(d), gk2(d), gk3(d), gk4(d), ga(d);
    Eigen::MatrixXd grads(s, d);

    // J(a)^T v = G(a)^T (theta v) with J = theta^T G; accumulate
    // dtheta += phi(a) v^T for the direct dependence of f on theta.
    auto stage_reverse = [&](const Eigen::VectorXd& astate, const Eigen::VectorXd& gk,
                             Eigen::VectorXd& ga_out) {
        eval_features_into(lib, astate, phi);
        dtheta.noalias() += phi * gk.transpose();
        eval_feature_grads(lib, astate, grads);
        tv.noalias() = theta.theta * gk;
        ga_out.noalias() = grads.transpose() * tv;
    };

    std::size_t step_idx = tape.steps.size();
    for (std::size_t i = tape.substeps_per_interval.size(); i-- > 0;) {
        for (int sstep = 0; sstep < tape.substeps_per_interval[i]; ++sstep) {
            const auto& rec = tape.steps[--step_idx];
            const double h = rec.h;
            gk1 = (h / 6) * lam;
            gk2 = (h / 3) * lam;
            gk3 = (h / 3) * lam;
            gk4 = (h / 6) * lam;
            Eigen::VectorXd gxn = lam;

            stage_reverse(rec.a4, gk4, ga);
            gxn += ga;
            gk3 += h * ga;
            stage_reverse(rec.a3, gk3, ga);
            gxn += ga;
            gk2 += (h / 2) * ga;
            stage_reverse(rec.a2, gk2, ga);
            gxn += ga;
            gk1 += (h / 2) * ga;
            stage_reverse(rec.a1, gk1, ga);
            gxn += ga;

            lam = std::move(gxn);
        }
        lam += loss_grads[i];
    }
    return dtheta;
}

SolveResult dense_solve(const CandidateLibrary& lib, const CoefficientMatrix& theta,
                        const Eigen::VectorXd& x0, double t0, double T, int n_intervals,
                        double blowup_bound) {
    return rk4_solve(lib, theta, x0, SolveGrid::uniform(t0, T, n_intervals), nullptr, blowup_bound);
}

void write_trajectory_csv(const std::string& path, const std::vector<double>& times,
                          const std::vector<Eigen::VectorXd>& states) {
    if (times.size() != states.size()) throw ConfigError("trajectory csv: times/states mismatch");
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "t";
    const Eigen::Index d = states.empty() ? 0 : states.front().size();
    for (Eigen::Index k = 0; k < d; ++k) out << ",x" << (k + 1);
    out << "\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < times.size(); ++i) {
        out << times[i];
        for (Eigen::Index k = 0; k < d; ++k) out << "," << states[i][k];
        out << "\n";
    }
}

}  // namespace swrecon
