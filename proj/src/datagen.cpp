#include "swrecon/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "swrecon/errors.hpp"
#include "swrecon/odesolve.hpp"

namespace swrecon {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

void set_coeff(CoefficientMatrix& th, const CandidateLibrary& lib, const std::string& feature,
               int dim, double value) {
    int j = lib.index_of(feature);
    if (j < 0) throw ConfigError("benchmark truth uses unknown feature '" + feature + "'");
    th.theta(j, dim) = value;
}

}  // namespace

std::vector<std::string> benchmark_names() {
    return {"linear2d", "cubic2d", "linear3d", "lorenz", "lv4d", "duffing", "pendulum"};
}

BenchmarkSpec make_benchmark(const std::string& raw_name) {
    const std::string name = lower(raw_name);
    BenchmarkSpec b;
    b.name = name;

    if (name == "linear2d") {
        b.truth_library = {1, false, false, false, 2};
        auto lib = build_library(b.truth_library);
        b.theta = CoefficientMatrix::zero(lib.size(), 2);
        set_coeff(b.theta, lib, "x1", 0, -0.1);
        set_coeff(b.theta, lib, "x2", 0, 2.0);
        set_coeff(b.theta, lib, "x1", 1, -2.0);
        set_coeff(b.theta, lib, "x2", 1, -0.1);
        b.x0 = Eigen::Vector2d(2.0, 0.0);
        b.T = 10.0;
    } else if (name == "cubic2d") {
        b.truth_library = {3, false, false, false, 2};
        auto lib = build_library(b.truth_library);
        b.theta = CoefficientMatrix::zero(lib.size(), 2);
        set_coeff(b.theta, lib, "x1^3", 0, -0.1);
        set_coeff(b.theta, lib, "x2^3", 0, 2.0);
        set_coeff(b.theta, lib, "x1^3", 1, -2.0);
        set_coeff(b.theta, lib, "x2^3", 1, -0.1);
        b.x0 = Eigen::Vector2d(2.0, 0.0);
        b.T = 10.0;
    } else if (name == "linear3d") {
        b.truth_library = {1, false, false, false, 3};
        auto lib = build_library(b.truth_library);
        b.theta = CoefficientMatrix::zero(lib.size(), 3);
        set_coeff(b.theta, lib, "x1", 0, -0.1);
        set_coeff(b.theta, lib, "x2", 0, 2.0);
        set_coeff(b.theta, lib, "x1", 1, -2.0);
        set_coeff(b.theta, lib, "x2", 1, -0.1);
        set_coeff(b.theta, lib, "x3", 2, -0.3);
        b.x0 = Eigen::Vector3d(2.0, 0.0, -1.0);
        b.T = 10.0;
    } else if (name == "lorenz") {
        // sigma, rho, beta = 10, 28, 8/3
        b.truth_library = {2, false, false, false, 3};
        auto lib = build_library(b.truth_library);
        b.theta = CoefficientMatrix::zero(lib.size(), 3);
        set_coeff(b.theta, lib, "x1", 0, -10.0);
        set_coeff(b.theta, lib, "x2", 0, 10.0);
        set_coeff(b.theta, lib, "x1", 1, 28.0);
        set_coeff(b.theta, lib, "x2", 1, -1.0);
        set_coeff(b.theta, lib, "x1*x3", 1, -1.0);
        set_coeff(b.theta, lib, "x1*x2", 2, 1.0);
        set_coeff(b.theta, lib, "x3", 2, -8.0 / 3.0);
        b.x0 = Eigen::Vector3d(10.0, -10.0, 20.0);
        b.T = 3.0;
    } else if (name == "lv4d") {
        // two uncoupled Lotka-Volterra pairs, [a1,a2,b1,b2] = [1,1,3,5]
        b.truth_library = {2, false, false, false, 4};
        auto lib = build_library(b.truth_library);
        b.theta = CoefficientMatrix::zero(lib.size(), 4);
        set_coeff(b.theta, lib, "x1", 0, 1.0);
        set_coeff(b.theta, lib, "x1*x2", 0, -3.0);
        set_coeff(b.theta, lib, "x1*x2", 1, 3.0);
        set_coeff(b.theta, lib, "x2", 1, -2.0);
        set_coeff(b.theta, lib, "x3", 2, 1.0);
        set_coeff(b.theta, lib, "x3*x4", 2, -5.0);
        set_coeff(b.theta, lib, "x3*x4", 3, 5.0);
        set_coeff(b.theta, lib, "x4", 3, -2.0);
        b.x0 = Eigen::Vector4d(1.0, 2.0, 2.0, 0.5);
        b.T = 11.0;
    } else if (name == "duffing") {
        // [alpha, gamma, rho, beta] = [1, 0.1, 0.2, 1]
        b.truth_library = {3, false, false, false, 2};
        auto lib = build_library(b.truth_library);
        b.theta = CoefficientMatrix::zero(lib.size(), 2);
        set_coeff(b.theta, lib, "x2", 0, 1.0);
        set_coeff(b.theta, lib, "x1", 1, -0.1);
        set_coeff(b.theta, lib, "x2", 1, -0.2);
        set_coeff(b.theta, lib, "x1^3", 1, -1.0);
        b.x0 = Eigen::Vector2d(0.0, 2.0);
        b.T = 11.0;
    } else if (name == "pendulum") {
        // [alpha, beta] = [1, 1]
        b.truth_library = {1, false, true, false, 2};
        auto lib = build_library(b.truth_library);
        b.theta = CoefficientMatrix::zero(lib.size(), 2);
        set_coeff(b.theta, lib, "x2", 0, 1.0);
        set_coeff(b.theta, lib, "sin(x1)", 1, 1.0);
        b.x0 = Eigen::Vector2d(1.0, 0.1);
        b.T = 8.0;
    } else {
        throw ConfigError("unknown benchmark '" + raw_name + "'");
    }
    return b;
}

double rms_row_norm(const Eigen::MatrixXd& points) {
    if (points.rows() == 0) return 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) acc += points.row(i).norm();
    return acc / static_cast<double>(points.rows());
}

/// Solve through arbitrary (possibly duplicated) instants; returns states
/// aligned with the input order. t0 is prepended to anchor the solve.
static Eigen::MatrixXd solve_at_instants(const CandidateLibrary& lib, const CoefficientMatrix& theta,
                                         const Eigen::VectorXd& x0, double t0,
                                         const std::vector<double>& instants, double max_step) {
    std::vector<double> uniq = instants;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::vector<double> grid_times;
    grid_times.reserve(uniq.size() + 1);
    grid_times.push_back(t0);
    for (double t : uniq)
        if (t > t0) grid_times.push_back(t);
    auto grid = SolveGrid::at_times(std::move(grid_times), 1, max_step);
    auto res = rk4_solve(lib, theta, x0, grid);

    Eigen::MatrixXd out(static_cast<Eigen::Index>(instants.size()), x0.size());
    for (std::size_t i = 0; i < instants.size(); ++i) {
        auto it = std::lower_bound(grid.times.begin(), grid.times.end(), instants[i]);
        std::size_t pos = (it != grid.times.end() && *it == instants[i])
                              ? static_cast<std::size_t>(it - grid.times.begin())
                              : 0;  // instants <= t0 map to the anchor state
        out.row(static_cast<Eigen::Index>(i)) = res.states[pos].transpose();
    }
    return out;
}

ObservationPiece synthesize(const BenchmarkSpec& spec, std::size_t n, const TimeDistribution& dist,
                            double noise_ratio, std::uint64_t seed) {
    if (n < 2) throw ConfigError("synthesize: need n >= 2");
    if (noise_ratio < 0.0) throw ConfigError("synthesize: noise_ratio must be >= 0");

    auto lib = build_library(spec.truth_library);
    Rng time_rng = Rng::child(seed, 0xA11CE);
    std::vector<double> times = dist.sample(n, time_rng);

    const double span = dist.high() - dist.low();
    Eigen::MatrixXd pts =
        solve_at_instants(lib, spec.theta, spec.x0, dist.low(), times, span / 2000.0);

    if (noise_ratio > 0.0) {
        const double sigma = noise_ratio * rms_row_norm(pts);
        Rng noise_rng = Rng::child(seed, 0xB0B);
        for (Eigen::Index i = 0; i < pts.rows(); ++i)
            for (Eigen::Index k = 0; k < pts.cols(); ++k) pts(i, k) += sigma * noise_rng.normal();
    }

    ObservationPiece piece;
    piece.points = std::move(pts);
    piece.x_init = spec.x0;
    piece.t0 = dist.low();
    piece.T_piece = span;
    piece.dist = dist;
    piece.true_times = std::move(times);
    return piece;
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
    throw ConfigError(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<double> parse_row(const std::string& line, const std::string& path, std::size_t lineno) {
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t comma = line.find(',', pos);
        std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        char* end = nullptr;
        double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || (end && *end != '\0')) parse_fail(path, lineno, "bad number '" + cell + "'");
        row.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return row;
}

}  // namespace

std::string times_sidecar_path(const std::string& dataset_path) {
    const std::string suffix = ".csv";
    if (dataset_path.size() > suffix.size() &&
        dataset_path.compare(dataset_path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return dataset_path.substr(0, dataset_path.size() - suffix.size()) + ".times.csv";
    return dataset_path + ".times.csv";
}

void write_dataset(const ObservationPiece& piece, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    nlohmann::json meta;
    meta["format"] = 1;
    meta["x_init"] = std::vector<double>(piece.x_init.data(), piece.x_init.data() + piece.x_init.size());
    meta["t0"] = piece.t0;
    meta["T"] = piece.T_piece;
    meta["dist"] = piece.dist.to_json();
    out << "# " << meta.dump() << "\n";
    const Eigen::Index d = piece.points.cols();
    for (Eigen::Index k = 0; k < d; ++k) out << (k ? ",x" : "x") << (k + 1);
    out << "\n";
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < piece.points.rows(); ++i) {
        for (Eigen::Index k = 0; k < d; ++k) {
            if (k) out << ",";
            out << piece.points(i, k);
        }
        out << "\n";
    }
    if (piece.true_times) {
        std::ofstream side(times_sidecar_path(path));
        if (!side) throw ConfigError("cannot open times sidecar for '" + path + "'");
        side << "t\n" << std::setprecision(17);
        for (double t : *piece.true_times) side << t << "\n";
    }
}

ObservationPiece read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(in, line)) parse_fail(path, 1, "empty file");
    ++lineno;
    if (line.rfind("# ", 0) != 0) parse_fail(path, lineno, "missing '# {json}' metadata line");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(line.substr(2));
    } catch (const std::exception& e) {
        parse_fail(path, lineno, std::string("metadata: ") + e.what());
    }

    ObservationPiece piece;
    auto xi = meta.at("x_init").get<std::vector<double>>();
    piece.x_init = Eigen::Map<Eigen::VectorXd>(xi.data(), static_cast<Eigen::Index>(xi.size()));
    piece.t0 = meta.at("t0").get<double>();
    piece.T_piece = meta.at("T").get<double>();
    piece.dist = TimeDistribution::from_json(meta.at("dist"));

    if (!std::getline(in, line)) parse_fail(path, lineno + 1, "missing column header");
    ++lineno;
    std::size_t d = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (static_cast<Eigen::Index>(d) != piece.x_init.size())
        parse_fail(path, lineno, "header dimension does not match x_init length");

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto row = parse_row(line, path, lineno);
        if (row.size() != d) parse_fail(path, lineno, "expected " + std::to_string(d) + " columns");
        rows.push_back(std::move(row));
    }
    piece.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < d; ++k)
            piece.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];

    const std::string side_path = times_sidecar_path(path);
    std::ifstream side(side_path);
    if (side) {
        std::vector<double> times;
        std::size_t sline = 0;
        std::getline(side, line);  // header
        ++sline;
        while (std::getline(side, line)) {
            ++sline;
            if (line.empty()) continue;
            auto row = parse_row(line, side_path, sline);
            if (row.size() != 1) parse_fail(side_path, sline, "expected a single time column");
            times.push_back(row[0]);
        }
        if (times.size() != static_cast<std::size_t>(piece.points.rows()))
            parse_fail(side_path, sline, "label count does not match point count");
        piece.true_times = std::move(times);
    }
    return piece;
}

}  // namespace swrecon
