// Command-line front end: generate, segment, fit-dm, fit-pi, reconstruct,
// evaluate, landscape, pipeline, plot-data.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "swrecon/errors.hpp"
#include "swrecon/pipeline.hpp"

namespace fs = std::filesystem;
using namespace swrecon;

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void save_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

TimeDistribution dist_from_flag(const std::string& flag, double T) {
    if (flag == "uniform") return TimeDistribution::uniform(0.0, T);
    if (flag == "truncnormal")
        return TimeDistribution::truncated_normal(T / 2.0, T / 3.0, 0.0, T);
    throw ConfigError("unknown --dist '" + flag + "' (uniform|truncnormal)");
}

std::pair<int, int> parse_index_pair(const std::string& s) {
    auto comma = s.find(',');
    if (comma == std::string::npos) throw ConfigError("expected 'row,col' but got '" + s + "'");
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
}

std::pair<double, double> parse_range(const std::string& s) {
    auto comma = s.find(',');
    if (comma == std::string::npos) throw ConfigError("expected 'lo,hi' but got '" + s + "'");
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sliced-Wasserstein reconstruction of unlabeled dynamics"};
    app.require_subcommand(1);
    bool force = false;
    app.add_flag("--force", force, "overwrite existing outputs");

    // generate
    auto* gen = app.add_subcommand("generate", "synthesize a benchmark observation set");
    std::string g_system = "linear2d", g_dist = "uniform", g_out = "data";
    std::size_t g_n = 5000;
    double g_noise = 0.0;
    std::uint64_t g_seed = 0;
    gen->add_option("--system", g_system, "benchmark name")->required();
    gen->add_option("--n", g_n, "sample count");
    gen->add_option("--noise", g_noise, "noise ratio (rms-scaled)");
    gen->add_option("--dist", g_dist, "uniform|truncnormal");
    gen->add_option("--seed", g_seed, "rng seed");
    gen->add_option("--out", g_out, "output directory")->required();

    // segment
    auto* seg = app.add_subcommand("segment", "split a dataset into ordered pieces");
    std::string s_in, s_out = "pieces";
    int s_clusters = 10;
    double s_radius = 0.0;
    std::uint64_t s_seed = 0;
    seg->add_option("--in", s_in, "dataset csv")->required();
    seg->add_option("--clusters", s_clusters, "piece count");
    seg->add_option("--radius", s_radius, "anchoring radius (0 = auto)");
    seg->add_option("--seed", s_seed, "rng seed (subsampling only)");
    seg->add_option("--out", s_out, "output directory")->required();

    // fit-dm
    auto* fdm = app.add_subcommand("fit-dm", "distribution-matching phase");
    std::string d_pieces, d_lib, d_cfg, d_out = "run";
    fdm->add_option("--pieces", d_pieces, "pieces directory")->required();
    fdm->add_option("--library", d_lib, "library spec json")->required();
    fdm->add_option("--config", d_cfg, "dm config json");
    fdm->add_option("--out", d_out, "output directory")->required();

    // fit-pi
    auto* fpi = app.add_subcommand("fit-pi", "parameter-identification phase");
    std::string p_pieces, p_lib, p_theta0, p_cfg, p_out = "run";
    fpi->add_option("--pieces", p_pieces, "pieces directory")->required();
    fpi->add_option("--library", p_lib, "library spec json")->required();
    fpi->add_option("--theta0", p_theta0, "initial coefficients json")->required();
    fpi->add_option("--config", p_cfg, "pi config json");
    fpi->add_option("--out", p_out, "output directory")->required();

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "recover per-sample time labels");
    std::string r_pieces, r_theta, r_out = "labels.csv", r_lib;
    int r_grid = 2000;
    rec->add_option("--pieces", r_pieces, "pieces directory")->required();
    rec->add_option("--library", r_lib, "library spec json")->required();
    rec->add_option("--theta", r_theta, "coefficients json")->required();
    rec->add_option("--grid", r_grid, "projection grid size");
    rec->add_option("--out", r_out, "labels csv")->required();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "compare labels against hidden truth");
    std::string e_labels, e_truth, e_report = "report.json";
    ev->add_option("--labels", e_labels, "labels csv")->required();
    ev->add_option("--truth", e_truth, "truth times csv")->required();
    ev->add_option("--report", e_report, "report json")->required();

    // landscape
    auto* land = app.add_subcommand("landscape", "2-coefficient loss scan");
    std::string l_system = "cubic2d", l_i = "9,0", l_j = "6,1", l_range = "-3,3", l_out;
    std::string l_range_j;
    int l_res = 31, l_clusters = 1;
    std::size_t l_n = 2000;
    double l_T = 0.0;
    std::uint64_t l_seed = 0;
    int l_batch = 512, l_slices = 50;
    land->add_option("--system", l_system, "benchmark name")->required();
    land->add_option("--i", l_i, "first coefficient 'row,col'");
    land->add_option("--j", l_j, "second coefficient 'row,col'");
    land->add_option("--range", l_range, "scan range 'lo,hi'");
    land->add_option("--range-j", l_range_j, "second range (defaults to --range)");
    land->add_option("--res", l_res, "grid resolution");
    land->add_option("--T", l_T, "window length override (0 = benchmark T)");
    land->add_option("--n", l_n, "observation count");
    land->add_option("--batch", l_batch, "loss batch size");
    land->add_option("--slices", l_slices, "projection count");
    land->add_option("--seed", l_seed, "rng seed");
    land->add_option("--out", l_out, "landscape csv")->required();

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "run every stage from a config file");
    std::string pl_cfg;
    std::string pl_out_override;
    pipe->add_option("--config", pl_cfg, "run config json")->required();
    pipe->add_option("--out", pl_out_override, "override the config's out_dir");

    // plot-data
    auto* plots = app.add_subcommand("plot-data", "emit plot CSVs and SVGs from a run");
    std::string v_run, v_out;
    plots->add_option("--run", v_run, "run directory")->required();
    plots->add_option("--out", v_out, "plots directory (default <run>/plots)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : kExitConfigError;
    }

    try {
        if (*gen) {
            auto bench = make_benchmark(g_system);
            ensure_output_dir(g_out, force);
            auto piece = synthesize(bench, g_n, dist_from_flag(g_dist, bench.T), g_noise, g_seed);
            write_dataset(piece, (fs::path(g_out) / "data.csv").string());
            std::cout << "wrote " << (fs::path(g_out) / "data.csv").string() << " (" << g_n
                      << " points, d=" << bench.dim() << ")\n";
        } else if (*seg) {
            auto piece = read_dataset(s_in);
            SegmentationOptions opt;
            opt.clusters = s_clusters;
            opt.radius = s_radius;
            opt.seed = s_seed;
            auto result = segment_trajectory(piece, opt);
            write_pieces(s_out, result, force);
            std::cout << "wrote " << result.pieces.size() << " pieces to " << s_out
                      << " (r=" << result.radius << ")\n";
        } else if (*fdm) {
            auto ps = read_pieces(d_pieces);
            auto lib = build_library(LibrarySpec::from_json(load_json(d_lib)));
            DmConfig cfg = d_cfg.empty() ? DmConfig{} : DmConfig::from_json(load_json(d_cfg));
            ensure_output_dir(d_out, force);
            auto result = run_dm(ps.pieces, lib, cfg);
            save_json((fs::path(d_out) / "theta_dm.json").string(), result.theta.to_json(&lib));
            for (std::size_t l = 0; l < result.nets.size(); ++l) {
                char name[32];
                std::snprintf(name, sizeof name, "net_%02zu.json", l);
                save_json((fs::path(d_out) / name).string(), result.nets[l].to_json());
            }
            write_dm_history((fs::path(d_out) / "history.csv").string(), result.history);
            std::cout << "theta nonzeros: " << result.theta.support().size() << "\n";
        } else if (*fpi) {
            auto ps = read_pieces(p_pieces);
            auto lib = build_library(LibrarySpec::from_json(load_json(p_lib)));
            auto theta0 = CoefficientMatrix::from_json(load_json(p_theta0));
            PiConfig cfg = p_cfg.empty() ? PiConfig{} : PiConfig::from_json(load_json(p_cfg));
            ensure_output_dir(p_out, force);
            auto result = run_pi(ps.pieces, lib, theta0, cfg);
            save_json((fs::path(p_out) / "theta.json").string(), result.theta.to_json(&lib));
            write_pi_history((fs::path(p_out) / "history.csv").string(), result.history);
            std::cout << "theta nonzeros: " << result.theta.support().size()
                      << ", blow-ups: " << result.total_blowups << "\n";
        } else if (*rec) {
            auto ps = read_pieces(r_pieces);
            auto lib = build_library(LibrarySpec::from_json(load_json(r_lib)));
            auto theta = CoefficientMatrix::from_json(load_json(r_theta));
            ensure_output_path(r_out, force);
            std::vector<std::vector<double>> labels;
            for (const auto& piece : ps.pieces)
                labels.push_back(reconstruct_times(piece, lib, theta, r_grid));
            write_labels(r_out, labels, ps.assignments);
            std::cout << "wrote " << r_out << "\n";
        } else if (*ev) {
            auto t_hat = read_labels(e_labels);
            std::ifstream truth_in(e_truth);
            if (!truth_in) throw ConfigError("cannot open '" + e_truth + "'");
            std::string line;
            std::getline(truth_in, line);  // header
            std::vector<double> t_true;
            while (std::getline(truth_in, line))
                if (!line.empty()) t_true.push_back(std::strtod(line.c_str(), nullptr));
            double err = e_time(t_hat, t_true);
            nlohmann::json rep;
            rep["e_time"] = err;
            rep["n"] = t_hat.size();
            ensure_output_path(e_report, force);
            save_json(e_report, rep);
            std::cout << "e_time = " << err << "\n";
        } else if (*land) {
            auto bench = make_benchmark(l_system);
            double T = l_T > 0.0 ? l_T : bench.T;
            auto lib = build_library(bench.truth_library);
            ObservationPiece piece =
                synthesize(bench, l_n, TimeDistribution::uniform(0.0, T), 0.0, l_seed);
            PiConfig cfg;
            cfg.batch = l_batch;
            cfg.slices = l_slices;
            cfg.seed = l_seed;
            auto range_i = parse_range(l_range);
            auto range_j = l_range_j.empty() ? range_i : parse_range(l_range_j);
            ensure_output_path(l_out, force);
            auto scan = loss_landscape({piece}, lib, bench.theta, parse_index_pair(l_i),
                                       parse_index_pair(l_j), range_i, range_j, l_res, cfg);
            write_landscape_csv(l_out, scan);
            std::cout << "wrote " << l_out << " (" << l_res << "x" << l_res << " cells, "
                      << scan.blowup.sum() << " blow-ups)\n";
        } else if (*pipe) {
            RunConfig cfg = RunConfig::load(pl_cfg);
            if (!pl_out_override.empty()) cfg.out_dir = pl_out_override;
            auto rep = run_pipeline(cfg, force);
            std::cout << "report: " << (fs::path(cfg.out_dir) / "report.json").string() << "\n"
                      << "  rmae_solution = " << rep.rmae << "\n"
                      << "  e_para        = " << rep.e_para << "\n"
                      << "  e_time        = " << rep.e_time << "\n";
        } else if (*plots) {
            std::string out = v_out.empty() ? (fs::path(v_run) / "plots").string() : v_out;
            emit_plots(v_run, out, force);
            std::cout << "wrote plots to " << out << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const SegmentationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSegmentationError;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericError;
    }
    return kExitOk;
}
