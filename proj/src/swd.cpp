#include "swrecon/swd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "swrecon/errors.hpp"
#include "swrecon/rng.hpp"

namespace swrecon {

ProjectionSet::ProjectionSet(int dim, int count, std::uint64_t seed) {
    if (dim < 1 || count < 1) throw ConfigError("projection set requires dim >= 1, count >= 1");
    dirs_.resize(dim, count);
    Rng rng(seed);
    for (int j = 0; j < count; ++j) {
        double nrm = 0.0;
        do {
            for (int k = 0; k < dim; ++k) dirs_(k, j) = rng.normal();
            nrm = dirs_.col(j).norm();
        } while (nrm < 1e-12);
        dirs_.col(j) /= nrm;
    }
}

double w2sq_1d(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw ConfigError("w2sq_1d: sample sizes differ");
    if (a.size() == 0) throw ConfigError("w2sq_1d: empty samples");
    std::vector<double> as(a.data(), a.data() + a.size());
    std::vector<double> bs(b.data(), b.data() + b.size());
    std::sort(as.begin(), as.end());
    std::sort(bs.begin(), bs.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < as.size(); ++i) {
        double diff = as[i] - bs[i];
        acc += diff * diff;
    }
    return acc / static_cast<double>(as.size());
}

namespace {

// indices of v sorted ascending by (value, index)
void stable_order(const Eigen::VectorXd& v, std::vector<int>& idx) {
    idx.resize(static_cast<std::size_t>(v.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) { return v[i] < v[j]; });
}

void check_pair(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const ProjectionSet& proj) {
    if (x.rows() != y.rows()) throw ConfigError("sliced_w2sq: sample sizes differ");
    if (x.cols() != y.cols() || x.cols() != proj.dim())
        throw ConfigError("sliced_w2sq: point dimensions differ");
    if (x.rows() == 0) throw ConfigError("sliced_w2sq: empty samples");
}

}  // namespace

double sliced_w2sq(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const ProjectionSet& proj,
                   SliceReduction reduction) {
    check_pair(x, y, proj);
    const Eigen::MatrixXd px = x * proj.directions();  // n x M
    const Eigen::MatrixXd py = y * proj.directions();
    double acc = 0.0;
    for (int j = 0; j < proj.count(); ++j) {
        double w = w2sq_1d(px.col(j), py.col(j));
        acc += (reduction == SliceReduction::Squared) ? w : std::sqrt(w);
    }
    return acc / proj.count();
}

SlicedGrad sliced_w2sq_grad(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                            const ProjectionSet& proj, SliceReduction reduction) {
    check_pair(x, y, proj);
    const Eigen::Index n = x.rows();
    const int m = proj.count();
    const Eigen::MatrixXd px = x * proj.directions();
    const Eigen::MatrixXd py = y * proj.directions();

    SlicedGrad out;
    out.dx = Eigen::MatrixXd::Zero(n, x.cols());
    std::vector<int> ox, oy;
    Eigen::VectorXd slice_grad(n);

    for (int j = 0; j < m; ++j) {
        stable_order(px.col(j), ox);
        stable_order(py.col(j), oy);
        double w = 0.0;
        slice_grad.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            double diff = px(ox[static_cast<std::size_t>(i)], j) - py(oy[static_cast<std::size_t>(i)], j);
            w += diff * diff;
            slice_grad[ox[static_cast<std::size_t>(i)]] = 2.0 * diff / static_cast<double>(n);
        }
        w /= static_cast<double>(n);
        double scale;  // d(reduced)/d(w2sq per slice), including the 1/M average
        if (reduction == SliceReduction::Squared) {
            out.value += w / m;
            scale = 1.0 / m;
        } else {
            double r = std::sqrt(w);
            out.value += r / m;
            scale = (r > 0.0) ? 0.5 / (r * m) : 0.0;  // subgradient 0 at zero
        }
        out.dx.noalias() += (scale * slice_grad) * proj.directions().col(j).transpose();
    }
    return out;
}

}  // namespace swrecon
