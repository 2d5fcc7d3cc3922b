#include "swrecon/dictionary.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "swrecon/errors.hpp"

namespace swrecon {

namespace {

std::string monomial_name(const std::vector<int>& exps) {
    std::ostringstream os;
    bool first = true;
    for (std::size_t k = 0; k < exps.size(); ++k) {
        if (exps[k] == 0) continue;
        if (!first) os << "*";
        os << "x" << (k + 1);
        if (exps[k] > 1) os << "^" << exps[k];
        first = false;
    }
    if (first) return "1";
    return os.str();
}

// Exponent tuples of total degree `degree`, lexicographically descending
// (leading coordinate takes the largest share first).
void enumerate_degree(int degree, int dim, std::vector<int>& current,
                      std::vector<std::vector<int>>& out) {
    int pos = static_cast<int>(current.size());
    if (pos == dim - 1) {
        current.push_back(degree);
        out.push_back(current);
        current.pop_back();
        return;
    }
    for (int e = degree; e >= 0; --e) {
        current.push_back(e);
        enumerate_degree(degree - e, dim, current, out);
        current.pop_back();
    }
}

double int_pow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

}  // namespace

nlohmann::json LibrarySpec::to_json() const {
    return {{"poly_order", poly_order}, {"exp", include_exp}, {"sin", include_sin},
            {"cos", include_cos},       {"dim", dim}};
}

LibrarySpec LibrarySpec::from_json(const nlohmann::json& j) {
    LibrarySpec s;
    s.poly_order = j.at("poly_order").get<int>();
    s.include_exp = j.value("exp", false);
    s.include_sin = j.value("sin", false);
    s.include_cos = j.value("cos", false);
    s.dim = j.at("dim").get<int>();
    if (s.dim < 1 || s.poly_order < 0) throw ConfigError("library spec: dim>=1, poly_order>=0 required");
    return s;
}

double Feature::value(const Eigen::VectorXd& x) const {
    switch (kind) {
        case Kind::Monomial: {
            double v = 1.0;
            for (std::size_t k = 0; k < exponents.size(); ++k) v *= int_pow(x[static_cast<Eigen::Index>(k)], exponents[k]);
            return v;
        }
        case Kind::Exp: return std::exp(x[coord]);
        case Kind::Sin: return std::sin(x[coord]);
        case Kind::Cos: return std::cos(x[coord]);
    }
    return 0.0;
}

void Feature::gradient(const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> out) const {
    out.setZero();
    switch (kind) {
        case Kind::Monomial: {
            for (std::size_t j = 0; j < exponents.size(); ++j) {
                int ej = exponents[j];
                if (ej == 0) continue;
                double g = static_cast<double>(ej) * int_pow(x[static_cast<Eigen::Index>(j)], ej - 1);
                for (std::size_t k = 0; k < exponents.size(); ++k) {
                    if (k == j) continue;
                    g *= int_pow(x[static_cast<Eigen::Index>(k)], exponents[k]);
                }
                out[static_cast<Eigen::Index>(j)] = g;
            }
            return;
        }
        case Kind::Exp: out[coord] = std::exp(x[coord]); return;
        case Kind::Sin: out[coord] = std::cos(x[coord]); return;
        case Kind::Cos: out[coord] = -std::sin(x[coord]); return;
    }
}

CandidateLibrary::CandidateLibrary(int dim, std::vector<Feature> features,
                                   std::vector<std::string> names)
    : dim_(dim), features_(std::move(features)), names_(std::move(names)) {
    if (features_.empty()) throw ConfigError("library must contain at least one candidate");
    if (features_.size() != names_.size()) throw ConfigError("library names/features length mismatch");
}

int CandidateLibrary::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    return -1;
}

std::int64_t polynomial_block_size(int poly_order, int dim) {
    // C(poly_order + dim, dim)
    std::int64_t r = 1;
    for (int i = 1; i <= dim; ++i) r = r * (poly_order + i) / i;
    return r;
}

CandidateLibrary build_library(const LibrarySpec& spec) {
    if (spec.dim < 1 || spec.poly_order < 0) throw ConfigError("build_library: invalid spec");
    std::vector<Feature> feats;
    std::vector<std::string> names;

    std::vector<std::vector<int>> tuples;
    std::vector<int> cur;
    for (int g = 0; g <= spec.poly_order; ++g) enumerate_degree(g, spec.dim, cur, tuples);
    for (auto& e : tuples) {
        Feature f;
        f.kind = Feature::Kind::Monomial;
        f.exponents = e;
        names.push_back(monomial_name(e));
        feats.push_back(std::move(f));
    }
    auto add_block = [&](Feature::Kind kind, const char* prefix) {
        for (int k = 0; k < spec.dim; ++k) {
            Feature f;
            f.kind = kind;
            f.coord = k;
            feats.push_back(f);
            names.push_back(std::string(prefix) + "(x" + std::to_string(k + 1) + ")");
        }
    };
    if (spec.include_exp) add_block(Feature::Kind::Exp, "exp");
    if (spec.include_sin) add_block(Feature::Kind::Sin, "sin");
    if (spec.include_cos) add_block(Feature::Kind::Cos, "cos");

    return CandidateLibrary(spec.dim, std::move(feats), std::move(names));
}

std::vector<std::pair<int, int>> CoefficientMatrix::support() const {
    std::vector<std::pair<int, int>> s;
    for (Eigen::Index j = 0; j < theta.rows(); ++j)
        for (Eigen::Index k = 0; k < theta.cols(); ++k)
            if (theta(j, k) != 0.0) s.emplace_back(static_cast<int>(j), static_cast<int>(k));
    return s;
}

nlohmann::json CoefficientMatrix::to_json(const CandidateLibrary* lib) const {
    nlohmann::json j;
    j["rows"] = theta.rows();
    j["cols"] = theta.cols();
    nlohmann::json data = nlohmann::json::array();
    for (Eigen::Index r = 0; r < theta.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < theta.cols(); ++c) row.push_back(theta(r, c));
        data.push_back(row);
    }
    j["data"] = data;
    if (lib) j["features"] = lib->names();
    return j;
}

CoefficientMatrix CoefficientMatrix::from_json(const nlohmann::json& j) {
    Eigen::Index rows = j.at("rows").get<Eigen::Index>();
    Eigen::Index cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows) throw ConfigError("theta json: row count mismatch");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(data[r].size()) != cols) throw ConfigError("theta json: col count mismatch");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[r][c].get<double>();
    }
    return CoefficientMatrix(std::move(m));
}

bool eval_features_into(const CandidateLibrary& lib, const Eigen::VectorXd& x,
                        Eigen::Ref<Eigen::VectorXd> out) {
    const auto& feats = lib.features();
    bool ok = true;
    for (std::size_t j = 0; j < feats.size(); ++j) {
        double v = feats[j].value(x);
        out[static_cast<Eigen::Index>(j)] = v;
        ok = ok && std::isfinite(v);
    }
    return ok;
}

Eigen::VectorXd eval_features(const CandidateLibrary& lib, const Eigen::VectorXd& x) {
    if (x.size() != lib.dim()) throw ConfigError("eval_features: point dimension mismatch");
    Eigen::VectorXd out(lib.size());
    if (!eval_features_into(lib, x, out)) {
        for (int j = 0; j < lib.size(); ++j)
            if (!std::isfinite(out[j]))
                throw NumericError("eval_features: non-finite value in candidate '" + lib.names()[j] + "'");
    }
    return out;
}

void eval_feature_grads(const CandidateLibrary& lib, const Eigen::VectorXd& x,
                        Eigen::Ref<Eigen::MatrixXd> out) {
    const auto& feats = lib.features();
    Eigen::VectorXd g(lib.dim());
    for (std::size_t j = 0; j < feats.size(); ++j) {
        feats[j].gradient(x, g);
        out.row(static_cast<Eigen::Index>(j)) = g.transpose();
    }
}

Eigen::VectorXd eval_rhs(const CandidateLibrary& lib, const CoefficientMatrix& theta,
                         const Eigen::VectorXd& x) {
    if (theta.rows() != lib.size() || theta.cols() != lib.dim())
        throw ConfigError("eval_rhs: coefficient shape does not match library");
    return theta.theta.transpose() * eval_features(lib, x);
}

Eigen::MatrixXd rhs_jacobian(const CandidateLibrary& lib, const CoefficientMatrix& theta,
                             const Eigen::VectorXd& x) {
    if (theta.rows() != lib.size() || theta.cols() != lib.dim())
        throw ConfigError("rhs_jacobian: coefficient shape does not match library");
    Eigen::MatrixXd grads(lib.size(), lib.dim());
    eval_feature_grads(lib, x, grads);
    return theta.theta.transpose() * grads;
}

CoefficientMatrix embed_coefficients(const CoefficientMatrix& src, const CandidateLibrary& src_lib,
                                     const CandidateLibrary& dst_lib) {
    if (src.rows() != src_lib.size()) throw ConfigError("embed_coefficients: source shape mismatch");
    CoefficientMatrix out = CoefficientMatrix::zero(dst_lib.size(), static_cast<int>(src.cols()));
    for (Eigen::Index j = 0; j < src.rows(); ++j) {
        if (src.theta.row(j).isZero()) continue;
        int idx = dst_lib.index_of(src_lib.names()[static_cast<std::size_t>(j)]);
        if (idx < 0)
            throw ConfigError("embed_coefficients: feature '" + src_lib.names()[static_cast<std::size_t>(j)] +
                              "' missing from target library");
        out.theta.row(idx) = src.theta.row(j);
    }
    return out;
}

}  // namespace swrecon
