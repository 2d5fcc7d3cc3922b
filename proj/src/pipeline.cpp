#include "swrecon/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "swrecon/errors.hpp"
#include "swrecon/odesolve.hpp"
#include "swrecon/rng.hpp"

namespace fs = std::filesystem;

namespace swrecon {

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("config: unknown key '" + it.key() + "' in " + context);
    }
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void save_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError("stage " + std::string(name) + ": " + e.what());
    } catch (const BlowUpError& e) {
        throw BlowUpError("stage " + std::string(name) + ": " + e.what(), e.time);
    } catch (const NumericError& e) {
        throw NumericError("stage " + std::string(name) + ": " + e.what());
    } catch (const SegmentationError& e) {
        throw SegmentationError("stage " + std::string(name) + ": " + e.what());
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t comma = line.find(',', pos);
        cells.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return cells;
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    if (!system.empty()) j["system"] = system;
    if (!dataset.empty()) j["dataset"] = dataset;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["n"] = n;
    j["noise"] = noise;
    if (dist) j["dist"] = dist->to_json();
    j["library"] = library.to_json();
    j["segmentation"] = {{"clusters", segmentation.clusters},
                         {"radius", segmentation.radius},
                         {"linkage_cap", segmentation.linkage_cap}};
    j["dm"] = dm.to_json();
    j["pi"] = pi.to_json();
    j["eval_grid"] = eval_grid;
    return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    check_keys(j,
               {"system", "dataset", "seed", "out_dir", "n", "noise", "dist", "library",
                "segmentation", "dm", "pi", "eval_grid"},
               "top level");
    RunConfig c;
    c.system = j.value("system", "");
    c.dataset = j.value("dataset", "");
    if (c.system.empty() == c.dataset.empty())
        throw ConfigError("config: exactly one of 'system' or 'dataset' is required");
    c.seed = j.value("seed", 0ULL);
    c.out_dir = j.value("out_dir", "run");
    c.n = j.value("n", std::size_t{5000});
    c.noise = j.value("noise", 0.0);
    if (c.noise < 0) throw ConfigError("config: noise must be >= 0");

    if (j.contains("dist")) {
        const auto& dj = j.at("dist");
        if (dj.is_string()) {
            const std::string kind = dj.get<std::string>();
            if (!c.system.empty()) {
                auto bench = make_benchmark(c.system);
                if (kind == "uniform") {
                    c.dist = TimeDistribution::uniform(0.0, bench.T);
                } else if (kind == "truncnormal") {
                    c.dist = TimeDistribution::truncated_normal(bench.T / 2.0, bench.T / 3.0, 0.0,
                                                                bench.T);
                } else {
                    throw ConfigError("config: unknown dist preset '" + kind + "'");
                }
            } else {
                throw ConfigError("config: dist presets need a benchmark system");
            }
        } else {
            if (dj.is_object())
                check_keys(dj, {"kind", "a", "b", "mean", "sd", "low", "high"}, "dist");
            c.dist = TimeDistribution::from_json(dj);
        }
    }

    if (!j.contains("library")) throw ConfigError("config: 'library' is required");
    check_keys(j.at("library"), {"poly_order", "exp", "sin", "cos", "dim"}, "library");
    c.library = LibrarySpec::from_json(j.at("library"));

    if (j.contains("segmentation")) {
        const auto& sj = j.at("segmentation");
        check_keys(sj, {"clusters", "radius", "linkage_cap"}, "segmentation");
        c.segmentation.clusters = sj.value("clusters", c.segmentation.clusters);
        c.segmentation.radius = sj.value("radius", c.segmentation.radius);
        c.segmentation.linkage_cap = sj.value("linkage_cap", c.segmentation.linkage_cap);
    }
    if (j.contains("dm")) {
        check_keys(j.at("dm"),
                   {"iters", "iters_phase1", "iters_update", "batch", "slices", "lambda_init",
                    "lambda_reg", "lambda_sparse", "threshold", "n_reg", "lr", "weight_decay",
                    "hidden_layers", "width", "seed", "rooted_slices"},
                   "dm");
        c.dm = DmConfig::from_json(j.at("dm"));
    }
    if (j.contains("pi")) {
        check_keys(j.at("pi"),
                   {"iters", "iters_1", "batch", "slices", "threshold", "lr", "weight_decay",
                    "substep_divisor", "blowup_bound", "seed", "rooted_slices"},
                   "pi");
        c.pi = PiConfig::from_json(j.at("pi"));
    }
    c.eval_grid = j.value("eval_grid", 2000);
    if (c.eval_grid < 2) throw ConfigError("config: eval_grid must be >= 2");

    // All stage randomness hangs off the one global seed.
    c.segmentation.seed = derive_seed(c.seed, 0x5e6);
    c.dm.seed = derive_seed(c.seed, 0xd1);
    c.pi.seed = derive_seed(c.seed, 0x71);
    return c;
}

RunConfig RunConfig::load(const std::string& path) { return from_json(load_json_file(path)); }

std::string RunConfig::hash() const {
    const std::string dump = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void ensure_output_path(const std::string& path, bool force) {
    if (fs::exists(path) && !force)
        throw ConfigError("output '" + path + "' exists; pass --force to overwrite");
}

void ensure_output_dir(const std::string& dir, bool force) {
    if (fs::exists(dir) && !fs::is_directory(dir))
        throw ConfigError("output '" + dir + "' exists and is not a directory");
    if (fs::exists(dir) && !fs::is_empty(dir) && !force)
        throw ConfigError("output directory '" + dir + "' is not empty; pass --force to overwrite");
    fs::create_directories(dir);
}

void write_pieces(const std::string& dir, const SegmentationResult& seg, bool force) {
    ensure_output_dir(dir, force);
    nlohmann::json manifest;
    manifest["format"] = 1;
    manifest["radius"] = seg.radius;
    manifest["assignments"] = seg.assignments;
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t l = 0; l < seg.pieces.size(); ++l) {
        char name[32];
        std::snprintf(name, sizeof name, "piece_%02zu.csv", l);
        write_dataset(seg.pieces[l], (fs::path(dir) / name).string());
        files.push_back(name);
    }
    manifest["pieces"] = files;
    save_json_file((fs::path(dir) / "manifest.json").string(), manifest);
}

PieceSet read_pieces(const std::string& dir) {
    nlohmann::json manifest = load_json_file((fs::path(dir) / "manifest.json").string());
    PieceSet ps;
    ps.radius = manifest.value("radius", 0.0);
    if (manifest.contains("assignments"))
        ps.assignments = manifest.at("assignments").get<std::vector<int>>();
    for (const auto& name : manifest.at("pieces"))
        ps.pieces.push_back(read_dataset((fs::path(dir) / name.get<std::string>()).string()));
    return ps;
}

void write_dm_history(const std::string& path, const std::vector<DmHistoryRow>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "iter,swd,init,reg,total,theta_updated\n" << std::setprecision(17);
    for (const auto& r : rows)
        out << r.iter << "," << r.swd << "," << r.init << "," << r.reg << ","
            << (r.swd + r.init + r.reg) << "," << (r.theta_updated ? 1 : 0) << "\n";
}

void write_pi_history(const std::string& path, const std::vector<PiHistoryRow>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "iter,loss,blowups,nonzeros\n" << std::setprecision(17);
    for (const auto& r : rows)
        out << r.iter << "," << r.loss << "," << r.blowups << "," << r.nonzeros << "\n";
}

void write_labels(const std::string& path, const std::vector<std::vector<double>>& per_piece,
                  const std::vector<int>& assignments) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "index,t\n" << std::setprecision(17);
    if (assignments.empty()) {
        std::size_t idx = 0;
        for (const auto& piece : per_piece)
            for (double t : piece) out << idx++ << "," << t << "\n";
        return;
    }
    // Pieces hold rows in original order; walk assignments to invert.
    std::vector<std::size_t> cursor(per_piece.size(), 0);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        int p = assignments[i];
        if (p < 0 || static_cast<std::size_t>(p) >= per_piece.size())
            throw ConfigError("labels: assignment out of range");
        out << i << "," << per_piece[static_cast<std::size_t>(p)][cursor[static_cast<std::size_t>(p)]++] << "\n";
    }
}

std::vector<double> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 2) throw ConfigError(path + ": expected index,t rows");
        out.push_back(std::strtod(cells[1].c_str(), nullptr));
    }
    return out;
}

ReconstructionReport run_pipeline(const RunConfig& cfg, bool force) {
    ensure_output_dir(cfg.out_dir, force);
    const fs::path out(cfg.out_dir);
    save_json_file((out / "config.json").string(), cfg.to_json());

    // -- generate / ingest
    ObservationPiece data = stage("generate", [&] {
        if (!cfg.system.empty()) {
            auto bench = make_benchmark(cfg.system);
            TimeDistribution dist = cfg.dist ? *cfg.dist : bench.default_dist();
            ObservationPiece piece = synthesize(bench, cfg.n, dist, cfg.noise, cfg.seed);
            write_dataset(piece, (out / "data.csv").string());
            return piece;
        }
        ObservationPiece piece = read_dataset(cfg.dataset);
        write_dataset(piece, (out / "data.csv").string());
        return piece;
    });

    // -- segment
    SegmentationResult seg = stage("segment", [&] {
        auto s = segment_trajectory(data, cfg.segmentation);
        write_pieces((out / "pieces").string(), s, true);
        return s;
    });

    auto lib = build_library(cfg.library);

    // -- fit-dm
    DmRunResult dm = stage("fit-dm", [&] {
        auto r = run_dm(seg.pieces, lib, cfg.dm);
        fs::create_directories(out / "dm");
        save_json_file((out / "dm" / "theta_dm.json").string(), r.theta.to_json(&lib));
        for (std::size_t l = 0; l < r.nets.size(); ++l) {
            char name[32];
            std::snprintf(name, sizeof name, "net_%02zu.json", l);
            save_json_file((out / "dm" / name).string(), r.nets[l].to_json());
        }
        write_dm_history((out / "dm" / "history.csv").string(), r.history);
        return r;
    });

    // -- fit-pi
    PiRunResult pi = stage("fit-pi", [&] {
        auto r = run_pi(seg.pieces, lib, dm.theta, cfg.pi);
        fs::create_directories(out / "pi");
        save_json_file((out / "pi" / "theta.json").string(), r.theta.to_json(&lib));
        write_pi_history((out / "pi" / "history.csv").string(), r.history);
        return r;
    });

    // -- reconstruct
    std::vector<std::vector<double>> labels = stage("reconstruct", [&] {
        std::vector<std::vector<double>> all;
        for (const auto& piece : seg.pieces)
            all.push_back(reconstruct_times(piece, lib, pi.theta, cfg.eval_grid));
        write_labels((out / "labels.csv").string(), all, seg.assignments);
        return all;
    });

    // -- evaluate
    return stage("evaluate", [&] {
        ReconstructionReport rep;
        rep.labels = labels;
        rep.config_hash = cfg.hash();
        rep.seed = cfg.seed;
        rep.dm_theta_nonzeros = static_cast<int>((dm.theta.theta.array() != 0.0).count());
        rep.pi_theta_nonzeros = static_cast<int>((pi.theta.theta.array() != 0.0).count());

        bool have_truth_times = true;
        for (const auto& piece : seg.pieces)
            if (!piece.true_times) have_truth_times = false;
        if (have_truth_times) {
            std::vector<double> t_hat, t_true;
            for (std::size_t l = 0; l < seg.pieces.size(); ++l) {
                t_hat.insert(t_hat.end(), labels[l].begin(), labels[l].end());
                t_true.insert(t_true.end(), seg.pieces[l].true_times->begin(),
                              seg.pieces[l].true_times->end());
            }
            rep.e_time = e_time(t_hat, t_true);
            rep.abs_time_errors.resize(t_hat.size());
            for (std::size_t i = 0; i < t_hat.size(); ++i)
                rep.abs_time_errors[i] = std::abs(t_hat[i] - t_true[i]);
        }

        if (!cfg.system.empty()) {
            auto bench = make_benchmark(cfg.system);
            auto truth_lib = build_library(bench.truth_library);
            CoefficientMatrix truth = embed_coefficients(bench.theta, truth_lib, lib);
            rep.e_para = swrecon::e_para(pi.theta, truth);

            TimeDistribution dist = cfg.dist ? *cfg.dist : bench.default_dist();
            SolveGrid eval = SolveGrid::uniform(dist.low(), dist.high() - dist.low(),
                                                cfg.eval_grid - 1);
            Eigen::MatrixXd est = assemble_trajectory(seg.pieces, lib, pi.theta, eval.times);
            SolveResult truth_sol = rk4_solve(truth_lib, bench.theta, bench.x0,
                                              SolveGrid{eval.times, 10, 0.0});
            Eigen::MatrixXd truth_mat(static_cast<Eigen::Index>(eval.times.size()), lib.dim());
            for (std::size_t i = 0; i < eval.times.size(); ++i)
                truth_mat.row(static_cast<Eigen::Index>(i)) = truth_sol.states[i].transpose();
            rep.rmae = rmae_solution(est, truth_mat);
        }

        save_json_file((out / "report.json").string(), rep.to_json());
        return rep;
    });
}

// ---------------------------------------------------------------------------
// plot emission

namespace {

struct Series {
    std::string name;
    std::vector<double> x, y;
};

void write_line_svg(const std::string& path, const std::vector<Series>& series,
                    const std::string& title) {
    const int w = 720, h = 420, ml = 60, mr = 20, mt = 30, mb = 40;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (ymax == ymin) ymax = ymin + 1;
    if (xmax == xmin) xmax = xmin + 1;
    auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto sy = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << w / 2 << "' y='18' text-anchor='middle' font-size='14'>" << title
        << "</text>\n";
    out << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
        << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
        << "' stroke='black'/>\n";
    out << std::setprecision(6);
    out << "<text x='" << ml << "' y='" << h - 8 << "' font-size='11'>" << xmin << "</text>\n";
    out << "<text x='" << w - mr << "' y='" << h - 8 << "' text-anchor='end' font-size='11'>" << xmax
        << "</text>\n";
    out << "<text x='4' y='" << h - mb << "' font-size='11'>" << ymin << "</text>\n";
    out << "<text x='4' y='" << mt + 10 << "' font-size='11'>" << ymax << "</text>\n";
    int ci = 0;
    for (const auto& s : series) {
        out << "<polyline fill='none' stroke='" << colors[ci % 6] << "' stroke-width='1.2' points='";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            out << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
        }
        out << "'/>\n";
        out << "<text x='" << w - mr - 4 << "' y='" << mt + 14 * (ci + 1)
            << "' text-anchor='end' font-size='11' fill='" << colors[ci % 6] << "'>" << s.name
            << "</text>\n";
        ++ci;
    }
    out << "</svg>\n";
}

void write_heatmap_svg(const std::string& path, const Eigen::MatrixXd& values,
                       const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& mask,
                       const std::string& title) {
    const int cell = std::max(2, static_cast<int>(560 / std::max<Eigen::Index>(values.rows(), 1)));
    const int w = 80 + cell * static_cast<int>(values.cols());
    const int h = 60 + cell * static_cast<int>(values.rows());
    double lo = 1e300, hi = -1e300;
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            if (std::isfinite(values(i, j))) {
                lo = std::min(lo, values(i, j));
                hi = std::max(hi, values(i, j));
            }
    if (lo > hi) {
        lo = 0;
        hi = 1;
    }
    if (hi == lo) hi = lo + 1;

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << w / 2 << "' y='18' text-anchor='middle' font-size='14'>" << title
        << "</text>\n";
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            int x = 40 + static_cast<int>(j) * cell;
            int y = 30 + static_cast<int>(values.rows() - 1 - i) * cell;
            std::string fill;
            if (mask(i, j)) {
                fill = "#222222";  // blow-up cells
            } else {
                double f = (values(i, j) - lo) / (hi - lo);
                int r = static_cast<int>(255 * f), bl = static_cast<int>(255 * (1 - f));
                char buf[16];
                std::snprintf(buf, sizeof buf, "#%02x40%02x", r, bl);
                fill = buf;
            }
            out << "<rect x='" << x << "' y='" << y << "' width='" << cell << "' height='" << cell
                << "' fill='" << fill << "'/>\n";
        }
    }
    out << "</svg>\n";
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path,
                                                  std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) return {};
    for (auto& cell : split_csv_line(line)) header.push_back(cell);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        std::vector<double> row;
        row.reserve(cells.size());
        for (auto& c : cells) row.push_back(std::strtod(c.c_str(), nullptr));
        rows.push_back(std::move(row));
    }
    return rows;
}

void copy_csv(const std::string& src, const std::string& dst) {
    std::ifstream in(src);
    if (!in) throw ConfigError("cannot open '" + src + "'");
    std::ofstream out(dst);
    out << in.rdbuf();
}

}  // namespace

void emit_plots(const std::string& run_dir, const std::string& plots_dir, bool force) {
    const fs::path run(run_dir);
    if (!fs::exists(run / "config.json"))
        throw ConfigError("emit_plots: '" + run_dir + "' has no config.json (not a run directory)");
    ensure_output_dir(plots_dir, force);
    const fs::path out(plots_dir);

    // loss histories
    for (const char* which : {"dm", "pi"}) {
        fs::path hist = run / which / "history.csv";
        fs::path csv = out / (std::string(which) + "_loss.csv");
        if (fs::exists(hist)) {
            copy_csv(hist.string(), csv.string());
            std::vector<std::string> header;
            auto rows = read_numeric_csv(hist.string(), header);
            std::vector<Series> series;
            for (std::size_t c = 1; c < header.size(); ++c) {
                if (header[c] == "theta_updated" || header[c] == "nonzeros" || header[c] == "blowups")
                    continue;
                Series s;
                s.name = header[c];
                for (const auto& r : rows) {
                    s.x.push_back(r[0]);
                    s.y.push_back(r[c]);
                }
                series.push_back(std::move(s));
            }
            write_line_svg((out / (std::string(which) + "_loss.svg")).string(), series,
                           std::string(which) + " loss history");
        } else {
            std::ofstream empty(csv.string());
            empty << (std::string(which) == "dm" ? "iter,swd,init,reg,total,theta_updated\n"
                                                 : "iter,loss,blowups,nonzeros\n");
        }
    }

    // trajectory overlay on the evaluation grid
    nlohmann::json cfg_json = load_json_file((run / "config.json").string());
    RunConfig cfg = RunConfig::from_json(cfg_json);
    if (fs::exists(run / "pieces" / "manifest.json") && fs::exists(run / "pi" / "theta.json")) {
        PieceSet ps = read_pieces((run / "pieces").string());
        auto lib = build_library(cfg.library);
        CoefficientMatrix theta =
            CoefficientMatrix::from_json(load_json_file((run / "pi" / "theta.json").string()));
        double lo = ps.pieces.front().t0;
        double hi = ps.pieces.back().t0 + ps.pieces.back().T_piece;
        SolveGrid eval = SolveGrid::uniform(lo, hi - lo, cfg.eval_grid - 1);
        Eigen::MatrixXd est = assemble_trajectory(ps.pieces, lib, theta, eval.times);

        bool have_truth = !cfg.system.empty();
        Eigen::MatrixXd truth_mat;
        if (have_truth) {
            auto bench = make_benchmark(cfg.system);
            auto tlib = build_library(bench.truth_library);
            SolveResult ts = rk4_solve(tlib, bench.theta, bench.x0, SolveGrid{eval.times, 10, 0.0});
            truth_mat.resize(est.rows(), est.cols());
            for (std::size_t i = 0; i < eval.times.size(); ++i)
                truth_mat.row(static_cast<Eigen::Index>(i)) = ts.states[i].transpose();
        }

        std::ofstream ocsv((out / "overlay.csv").string());
        ocsv << "t";
        for (Eigen::Index k = 0; k < est.cols(); ++k) ocsv << ",est_x" << (k + 1);
        if (have_truth)
            for (Eigen::Index k = 0; k < est.cols(); ++k) ocsv << ",true_x" << (k + 1);
        ocsv << "\n" << std::setprecision(17);
        for (std::size_t i = 0; i < eval.times.size(); ++i) {
            ocsv << eval.times[i];
            for (Eigen::Index k = 0; k < est.cols(); ++k) ocsv << "," << est(static_cast<Eigen::Index>(i), k);
            if (have_truth)
                for (Eigen::Index k = 0; k < est.cols(); ++k)
                    ocsv << "," << truth_mat(static_cast<Eigen::Index>(i), k);
            ocsv << "\n";
        }

        std::vector<Series> series;
        for (Eigen::Index k = 0; k < est.cols(); ++k) {
            Series s;
            s.name = "est_x" + std::to_string(k + 1);
            for (std::size_t i = 0; i < eval.times.size(); ++i) {
                s.x.push_back(eval.times[i]);
                s.y.push_back(est(static_cast<Eigen::Index>(i), k));
            }
            series.push_back(std::move(s));
        }
        write_line_svg((out / "overlay.svg").string(), series, "identified trajectory");
    }

    // per-point label errors against hidden truth
    if (fs::exists(run / "labels.csv") && fs::exists(run / "data.times.csv")) {
        auto t_hat = read_labels((run / "labels.csv").string());
        std::vector<std::string> header;
        auto rows = read_numeric_csv((run / "data.times.csv").string(), header);
        if (rows.size() == t_hat.size()) {
            std::ofstream lcsv((out / "label_errors.csv").string());
            lcsv << "index,t_true,t_hat,abs_error\n" << std::setprecision(17);
            Series s;
            s.name = "abs_error";
            for (std::size_t i = 0; i < t_hat.size(); ++i) {
                double err = std::abs(t_hat[i] - rows[i][0]);
                lcsv << i << "," << rows[i][0] << "," << t_hat[i] << "," << err << "\n";
                s.x.push_back(rows[i][0]);
                s.y.push_back(err);
            }
            write_line_svg((out / "label_errors.svg").string(), {s}, "label reconstruction error");
        }
    }

    // landscape heatmap, when a scan lives in the run directory
    if (fs::exists(run / "landscape.csv")) {
        copy_csv((run / "landscape.csv").string(), (out / "landscape.csv").string());
        std::vector<std::string> header;
        auto rows = read_numeric_csv((run / "landscape.csv").string(), header);
        if (!rows.empty()) {
            int res = 0;
            for (const auto& r : rows) res = std::max(res, static_cast<int>(r[0]) + 1);
            Eigen::MatrixXd vals(res, res);
            Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> mask(res, res);
            for (const auto& r : rows) {
                int i = static_cast<int>(r[0]), j = static_cast<int>(r[1]);
                double loss = r[4];
                mask(i, j) = static_cast<int>(r[5]);
                vals(i, j) = mask(i, j) ? std::numeric_limits<double>::quiet_NaN()
                                        : std::log10(std::max(loss, 1e-300));
            }
            write_heatmap_svg((out / "landscape.svg").string(), vals, mask,
                              "loss landscape (log10)");
        }
    }
}

}  // namespace swrecon
