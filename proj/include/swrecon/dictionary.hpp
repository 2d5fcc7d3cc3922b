#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace swrecon {

/// Declarative description of a candidate-function library.
struct LibrarySpec {
    int poly_order = 0;       // complete polynomials up to this total degree
    bool include_exp = false;  // exp(x_k) per coordinate
    bool include_sin = false;  // sin(x_k) per coordinate
    bool include_cos = false;  // cos(x_k) per coordinate
    int dim = 1;

    nlohmann::json to_json() const;
    static LibrarySpec from_json(const nlohmann::json& j);
};

/// One scalar candidate g_j : R^d -> R.
struct Feature {
    enum class Kind { Monomial, Exp, Sin, Cos };
    Kind kind = Kind::Monomial;
    std::vector<int> exponents;  // Monomial only, length d
    int coord = 0;               // Exp/Sin/Cos only

    double value(const Eigen::VectorXd& x) const;
    void gradient(const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> out) const;
};

/// Ordered dictionary of s scalar candidates. Ordering is deterministic:
/// polynomial block in graded-lexicographic exponent order, then exp, sin,
/// cos blocks. Immutable after construction.
class CandidateLibrary {
  public:
    CandidateLibrary(int dim, std::vector<Feature> features, std::vector<std::string> names);

    int dim() const { return dim_; }
    int size() const { return static_cast<int>(features_.size()); }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<Feature>& features() const { return features_; }
    int index_of(const std::string& name) const;  // -1 if absent

  private:
    int dim_;
    std::vector<Feature> features_;
    std::vector<std::string> names_;
};

/// s x d weight matrix; column k carries the coefficients of dx_k/dt.
struct CoefficientMatrix {
    Eigen::MatrixXd theta;  // s x d

    CoefficientMatrix() = default;
    CoefficientMatrix(Eigen::MatrixXd m) : theta(std::move(m)) {}
    static CoefficientMatrix zero(int s, int d) { return {Eigen::MatrixXd::Zero(s, d)}; }

    Eigen::Index rows() const { return theta.rows(); }
    Eigen::Index cols() const { return theta.cols(); }

    /// Nonzero entries, derived on demand so it can never go stale.
    std::vector<std::pair<int, int>> support() const;

    nlohmann::json to_json(const CandidateLibrary* lib = nullptr) const;
    static CoefficientMatrix from_json(const nlohmann::json& j);
};

CandidateLibrary build_library(const LibrarySpec& spec);

/// Number of monomials of total degree <= p in d variables: C(p+d, d).
std::int64_t polynomial_block_size(int poly_order, int dim);

/// Evaluate all candidates at x, in library order. Throws NumericError if
/// any feature overflows to a non-finite value.
Eigen::VectorXd eval_features(const CandidateLibrary& lib, const Eigen::VectorXd& x);

/// Allocation-free variant used by the solver hot loop. Returns false
/// instead of throwing when a value is non-finite.
bool eval_features_into(const CandidateLibrary& lib, const Eigen::VectorXd& x,
                        Eigen::Ref<Eigen::VectorXd> out);

/// Gradients of all candidates: out(j,k) = d g_j / d x_k  (s x d).
void eval_feature_grads(const CandidateLibrary& lib, const Eigen::VectorXd& x,
                        Eigen::Ref<Eigen::MatrixXd> out);

/// f(x) = theta^T g(x).
Eigen::VectorXd eval_rhs(const CandidateLibrary& lib, const CoefficientMatrix& theta,
                         const Eigen::VectorXd& x);

/// Jacobian of f: entry (i,k) = sum_j theta(j,i) * d g_j / d x_k  (d x d).
Eigen::MatrixXd rhs_jacobian(const CandidateLibrary& lib, const CoefficientMatrix& theta,
                             const Eigen::VectorXd& x);

/// Re-express coefficients over another library by matching feature names.
/// Throws ConfigError if a nonzero row's feature is missing from dst.
CoefficientMatrix embed_coefficients(const CoefficientMatrix& src, const CandidateLibrary& src_lib,
                                     const CandidateLibrary& dst_lib);

}  // namespace swrecon
