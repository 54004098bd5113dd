// Command-line front end: dataset generation, training, evaluation,
// property checking, micro-benchmarks and SVG plotting.
//
// Exit codes: 0 ok, 1 property failure, 2 usage, 3 I/O, 4 divergence.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clifford/checks.hpp"
#include "clifford/clifford.hpp"

namespace {

using namespace clifford;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitDivergence = 4;

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Every artifact-producing command drops one of these next to its outputs.
void write_manifest(const std::string& path, const std::string& command, const json& config,
                    std::uint64_t seed, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
    json manifest;
    manifest["command"] = command;
    manifest["config"] = config;
    manifest["seed"] = seed;
    manifest["timestamp"] = iso_timestamp();
    json in = json::array();
    for (const auto& f : inputs)
        in.push_back({{"path", f}, {"fnv1a64", hex64(fnv1a_file(f))}});
    manifest["inputs"] = in;
    json out_list = json::array();
    for (const auto& f : outputs)
        out_list.push_back({{"path", f}, {"fnv1a64", hex64(fnv1a_file(f))}});
    manifest["outputs"] = out_list;
    std::ofstream out(path);
    if (!out) throw ClfError(ClfError::Kind::io, "manifest: cannot write " + path);
    out << manifest.dump(2) << "\n";
}

int resolve_threads(int cli_threads) {
    if (cli_threads > 0) return cli_threads;
    if (const char* env = std::getenv("CLIFFORD_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

// --- gen -------------------------------------------------------------------

struct GenArgs {
    std::string pde = "advection2d";
    std::int64_t grid = 32;
    std::int64_t traj = 10;
    std::int64_t steps = 10;
    double dt = 0.5;
    std::uint64_t seed = 0;
    std::string out;
    std::string law = "constant";
    std::string dtype = "f32";
    int sources = 6;
};

int run_gen(const GenArgs& args) {
    TrajectorySet set;
    if (args.pde == "advection2d") {
        const VelocityLaw law =
            args.law == "solid-rotation" ? VelocityLaw::solid_rotation : VelocityLaw::constant;
        set = gen_advection2d(args.grid, args.traj, law, args.dt, args.seed, args.steps, 1.0,
                              args.dtype);
    } else if (args.pde == "maxwell3d") {
        MaxwellSourceSpec sources;
        sources.count = args.sources;
        try {
            set = gen_maxwell3d(args.grid, args.traj, sources, args.dt, args.seed, args.steps, 4,
                                args.dtype);
        } catch (const std::invalid_argument& e) {
            std::cerr << "gen: " << e.what() << "\n";
            return kExitUsage;
        }
    } else {
        std::cerr << "gen: unknown --pde '" << args.pde << "'\n";
        return kExitUsage;
    }
    write_clf(args.out, set);
    write_manifest(args.out + ".manifest.json", "gen",
                   json{{"pde", args.pde},
                        {"grid", args.grid},
                        {"traj", args.traj},
                        {"steps", args.steps},
                        {"dt", args.dt},
                        {"law", args.law},
                        {"sources", args.sources},
                        {"dtype", args.dtype}},
                   args.seed, {}, {args.out});
    std::cout << "wrote " << args.out << " shape [";
    for (std::size_t i = 0; i < set.data.shape().size(); ++i)
        std::cout << (i ? "," : "") << set.data.shape()[i];
    std::cout << "]\n";
    return kExitOk;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
    std::string data;
    std::string out_dir = "run";
    std::string config_path;
    std::string resume;
    std::string family = "cfno";
    std::int64_t blocks = -1, channels = -1, history = -1, modes = -1;
    std::int64_t epochs = 30, batch = 4;
    double lr = 2e-3;
    std::uint64_t seed = 0;
    int threads = 0;
    double stop_at_reduction = 0.0;
};

SurrogateConfig config_for_dataset(const TrajectorySet& set, const TrainArgs& args) {
    SurrogateConfig cfg;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw ClfError(ClfError::Kind::io, "train: cannot read config " + args.config_path);
        json j;
        in >> j;
        cfg = SurrogateConfig::from_json(j);
    } else {
        cfg = set.spatial_shape().size() == 3 ? SurrogateConfig::desk3d(args.family)
                                              : SurrogateConfig::desk2d(args.family);
    }
    // Inline flags override the config file.
    cfg.family = args.family;
    if (args.blocks > 0) cfg.blocks = args.blocks;
    if (args.channels > 0) cfg.channels = args.channels;
    if (args.history > 0) cfg.history = args.history;
    if (args.modes > 0) cfg.modes.assign(set.spatial_shape().size(), args.modes);
    cfg.grid = set.spatial_shape();
    cfg.signature = set.signature;
    cfg.field_blades.clear();
    for (const auto& slot : set.packing.slots) cfg.field_blades.push_back(slot.blade);
    std::sort(cfg.field_blades.begin(), cfg.field_blades.end());
    cfg.validate();
    return cfg;
}

int run_train(const TrainArgs& args) {
    const TrajectorySet data = read_clf(args.data);
    const SurrogateConfig cfg = config_for_dataset(data, args);

    std::filesystem::create_directories(args.out_dir);
    TrainConfig tc;
    tc.epochs = args.epochs;
    tc.lr = args.lr;
    tc.batch = args.batch;
    tc.seed = args.seed;
    tc.threads = resolve_threads(args.threads);
    tc.stop_at_reduction = args.stop_at_reduction;

    Model model;
    std::int64_t existing_rows = 0;
    if (!args.resume.empty()) {
        model = load_checkpoint(args.resume);
        std::ifstream curve(args.out_dir + "/losses.csv");
        std::string line;
        while (std::getline(curve, line))
            if (!line.empty() && line.find("step") == std::string::npos) ++existing_rows;
        tc.start_epoch = existing_rows;
    } else {
        model = Model::create(cfg, args.seed);
    }

    const TrainResult result = train_model(std::move(model), data, tc);

    const std::string ckpt = args.out_dir + "/checkpoint";
    save_checkpoint(ckpt, result.model);
    {
        std::ofstream curve(args.out_dir + "/losses.csv",
                            args.resume.empty() ? std::ios::trunc : std::ios::app);
        if (args.resume.empty()) curve << "step,train_smse,valid_smse\n";
        for (const auto& row : result.curve)
            curve << row.step << "," << row.train_smse << "," << row.valid_smse << "\n";
    }
    write_manifest(args.out_dir + "/manifest.json", "train", result.model.config.to_json(), args.seed,
                   {args.data}, {ckpt + ".json", ckpt + ".bin", args.out_dir + "/losses.csv"});

    const Metrics metrics = evaluate_model(result.model, data, 5);
    std::cout << "initial one-step smse " << result.initial_train_smse << "\n";
    std::cout << "final one-step smse   " << result.final_train_smse << "\n";
    std::cout << "rollout(5) smse       " << metrics.smse_rollout << "\n";
    if (result.diverged) {
        std::cerr << "train: loss diverged, kept last good checkpoint\n";
        return kExitDivergence;
    }
    return kExitOk;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string ckpt;
    std::string data;
    std::string metrics = "onestep,scalar,vector,rollout";
};

int run_eval(const EvalArgs& args) {
    const Model model = load_checkpoint(args.ckpt);
    const TrajectorySet data = read_clf(args.data);
    if (model.config.signature != data.signature ||
        model.config.grid != data.spatial_shape()) {
        std::cerr << "eval: checkpoint/dataset signature or grid mismatch\n";
        return kExitUsage;
    }
    std::vector<int> mapped;
    for (const auto& slot : data.packing.slots) mapped.push_back(slot.blade);
    std::sort(mapped.begin(), mapped.end());
    if (mapped != model.config.field_blades) {
        std::cerr << "eval: checkpoint/dataset packing mismatch\n";
        return kExitUsage;
    }
    const Metrics metrics = evaluate_model(model, data, 5);
    json out;
    std::stringstream names(args.metrics);
    std::string name;
    while (std::getline(names, name, ',')) {
        if (name == "onestep") out["onestep"] = metrics.smse_onestep;
        else if (name == "scalar") out["scalar"] = metrics.smse_scalar;
        else if (name == "vector") out["vector"] = metrics.smse_vector;
        else if (name == "rollout") out["rollout"] = metrics.smse_rollout;
        else {
            std::cerr << "eval: unknown metric '" << name << "'\n";
            return kExitUsage;
        }
    }
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

// --- check -----------------------------------------------------------------

int run_check(const std::string& suite, std::uint64_t seed, const std::string& csv_path) {
    if (suite != "algebra" && suite != "transforms" && suite != "layers" && suite != "grad" &&
        suite != "all") {
        std::cerr << "check: unknown suite '" << suite << "'\n";
        return kExitUsage;
    }
    const auto results = run_suites(suite, seed);
    bool all_pass = true;
    std::printf("%-10s  %-42s  %-12s  %-10s  %s\n", "suite", "property", "max_error", "tolerance",
                "status");
    for (const auto& r : results) {
        std::printf("%-10s  %-42s  %-12.3e  %-10.1e  %s\n", r.suite.c_str(), r.name.c_str(),
                    r.max_error, r.tolerance, r.pass ? "pass" : "FAIL");
        all_pass &= r.pass;
    }
    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        csv << "suite,property,max_error,tolerance,pass\n";
        for (const auto& r : results)
            csv << r.suite << "," << r.name << "," << r.max_error << "," << r.tolerance << ","
                << (r.pass ? 1 : 0) << "\n";
        csv.close();
        write_manifest(csv_path + ".manifest.json", "check", json{{"suite", suite}}, seed, {},
                       {csv_path});
    }
    return all_pass ? kExitOk : kExitPropertyFailure;
}

// --- bench -----------------------------------------------------------------

int run_bench(const std::string& op, const std::vector<std::int64_t>& sizes, int reps,
              const std::string& csv_path, std::uint64_t seed) {
    auto timed = [&](const std::function<void()>& fn) {
        std::vector<double> times;
        for (int r = 0; r < reps; ++r) {
            const auto start = std::chrono::steady_clock::now();
            fn();
            times.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        }
        std::sort(times.begin(), times.end());
        const auto at = [&](double q) {
            return times[std::min(times.size() - 1,
                                  static_cast<std::size_t>(q * static_cast<double>(times.size())))];
        };
        return std::array<double, 3>{at(0.5), at(0.1), at(0.9)};
    };

    std::ostringstream csv;
    csv << "op,size,reps,median_s,p10_s,p90_s\n";
    Rng rng(seed);
    for (std::int64_t size : sizes) {
        std::array<double, 3> stats{};
        if (op == "gp2d") {
            Multivector2 a{1, 2, 3, 4}, b{0.5, -1, 2, 0.25};
            volatile double sink = 0.0;
            stats = timed([&] {
                for (std::int64_t i = 0; i < size; ++i) {
                    const Multivector2 c = geometric_product_2d(a, b, kCl20);
                    sink = sink + c.s;
                }
            });
        } else if (op == "gp3d") {
            Multivector3 a{1, 2, 3, 4, 5, 6, 7, 8}, b{0.5, -1, 2, 0.25, 1, -2, 0.75, 3};
            volatile double sink = 0.0;
            stats = timed([&] {
                for (std::int64_t i = 0; i < size; ++i) {
                    const Multivector3 c = geometric_product_3d(a, b);
                    sink = sink + c.s;
                }
            });
        } else if (op == "conv2d") {
            MultivectorField f(kCl20, 4, {size, size});
            for (auto& v : f.data.vec()) v = rng.uniform(-1, 1);
            const CliffordKernel k = init_clifford(kCl20, 4, 4, {3, 3}, InitMode::standard, seed);
            stats = timed([&] { (void)clifford_conv2d(f, k); });
        } else if (op == "spectral2d") {
            MultivectorField f(kCl20, 4, {size, size});
            for (auto& v : f.data.vec()) v = rng.uniform(-1, 1);
            const SpectralWeights w = init_spectral(kCl20, 4, 4, {std::min<std::int64_t>(8, size / 2),
                                                                  std::min<std::int64_t>(8, size / 2)},
                                                    InitMode::standard, seed);
            stats = timed([&] { (void)clifford_spectral_conv2d(f, w); });
        } else {
            std::cerr << "bench: unknown op '" << op << "'\n";
            return kExitUsage;
        }
        csv << op << "," << size << "," << reps << "," << stats[0] << "," << stats[1] << ","
            << stats[2] << "\n";
    }
    if (csv_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(csv_path);
        out << csv.str();
        out.close();
        write_manifest(csv_path + ".manifest.json", "bench", json{{"op", op}, {"reps", reps}}, seed,
                       {}, {csv_path});
    }
    return kExitOk;
}

// --- plot ------------------------------------------------------------------

int run_plot(const std::string& in_csv, const std::string& out_svg, const std::string& kind) {
    std::ifstream in(in_csv);
    if (!in) {
        std::cerr << "plot: cannot read " << in_csv << "\n";
        return kExitIo;
    }
    std::string header;
    std::getline(in, header);
    std::vector<std::string> columns;
    {
        std::stringstream ss(header);
        std::string c;
        while (std::getline(ss, c, ',')) columns.push_back(c);
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (...) {
                row.push_back(0.0);
            }
        }
        rows.push_back(row);
    }
    if (rows.empty() || columns.size() < 2) {
        std::cerr << "plot: need a header and at least one data row with two columns\n";
        return kExitUsage;
    }

    const int width = 640, height = 400, margin = 48;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& row : rows) {
        xmin = std::min(xmin, row[0]);
        xmax = std::max(xmax, row[0]);
        for (std::size_t c = 1; c < row.size(); ++c) {
            ymin = std::min(ymin, row[c]);
            ymax = std::max(ymax, row[c]);
        }
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    auto px = [&](double x) {
        return margin + (x - xmin) / (xmax - xmin) * (width - 2 * margin);
    };
    auto py = [&](double y) {
        return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin);
    };
    const char* palette[] = {"#2a9d8f", "#e9c46a", "#f4a261", "#264653", "#e76f51"};

    std::ofstream svg(out_svg);
    if (!svg) {
        std::cerr << "plot: cannot write " << out_svg << "\n";
        return kExitIo;
    }
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
        << "\" y2=\"" << height - margin << "\" stroke=\"#888\"/>\n";
    svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
        << height - margin << "\" stroke=\"#888\"/>\n";
    if (kind == "bars") {
        const double bw = (width - 2.0 * margin) / (static_cast<double>(rows.size()) * 1.5);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double x = margin + (static_cast<double>(i) + 0.25) * 1.5 * bw;
            svg << "<rect x=\"" << x << "\" y=\"" << py(rows[i][1]) << "\" width=\"" << bw
                << "\" height=\"" << (height - margin - py(rows[i][1])) << "\" fill=\"" << palette[0]
                << "\"/>\n";
        }
    } else {
        for (std::size_t c = 1; c < columns.size(); ++c) {
            svg << "<polyline fill=\"none\" stroke=\"" << palette[(c - 1) % 5]
                << "\" stroke-width=\"2\" points=\"";
            for (const auto& row : rows)
                if (c < row.size()) svg << px(row[0]) << "," << py(row[c]) << " ";
            svg << "\"/>\n";
            svg << "<text x=\"" << width - margin + 4 << "\" y=\""
                << margin + 16 * static_cast<int>(c) << "\" font-size=\"11\" fill=\""
                << palette[(c - 1) % 5] << "\">" << columns[c] << "</text>\n";
        }
    }
    svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 12 << "\" font-size=\"12\" fill=\"#444\">"
        << columns[0] << "</text>\n</svg>\n";
    svg.close();
    write_manifest(out_svg + ".manifest.json", "plot", json{{"in", in_csv}, {"kind", kind}}, 0,
                   {in_csv}, {out_svg});
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clifford multivector fields, neural layers and toy PDE surrogates"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* cmd_gen = app.add_subcommand("gen", "Generate a toy PDE trajectory dataset (CLF1)");
    cmd_gen->add_option("--pde", gen.pde, "advection2d|maxwell3d");
    cmd_gen->add_option("--grid", gen.grid);
    cmd_gen->add_option("--traj", gen.traj);
    cmd_gen->add_option("--steps", gen.steps);
    cmd_gen->add_option("--dt", gen.dt);
    cmd_gen->add_option("--seed", gen.seed);
    cmd_gen->add_option("--out", gen.out)->required();
    cmd_gen->add_option("--law", gen.law, "constant|solid-rotation");
    cmd_gen->add_option("--sources", gen.sources);
    cmd_gen->add_option("--dtype", gen.dtype, "f32|f64");

    TrainArgs train;
    auto* cmd_train = app.add_subcommand("train", "Train a surrogate on a CLF1 dataset");
    cmd_train->add_option("--data", train.data)->required();
    cmd_train->add_option("--out", train.out_dir);
    cmd_train->add_option("--config", train.config_path);
    cmd_train->add_option("--resume", train.resume);
    cmd_train->add_option("--family", train.family, "resnet|cresnet|cresnet_rot|fno|cfno");
    cmd_train->add_option("--blocks", train.blocks);
    cmd_train->add_option("--channels", train.channels);
    cmd_train->add_option("--history", train.history);
    cmd_train->add_option("--modes", train.modes);
    cmd_train->add_option("--epochs", train.epochs);
    cmd_train->add_option("--batch", train.batch);
    cmd_train->add_option("--lr", train.lr);
    cmd_train->add_option("--seed", train.seed);
    cmd_train->add_option("--threads", train.threads);
    cmd_train->add_option("--stop-at-reduction", train.stop_at_reduction,
                          "early stop once train SMSE falls below initial/x");

    EvalArgs eval;
    auto* cmd_eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    cmd_eval->add_option("--ckpt", eval.ckpt)->required();
    cmd_eval->add_option("--data", eval.data)->required();
    cmd_eval->add_option("--metrics", eval.metrics);

    std::string check_suite = "all", check_csv;
    std::uint64_t check_seed = 0;
    auto* cmd_check = app.add_subcommand("check", "Run the theorem-backed property suites");
    cmd_check->add_option("--suite", check_suite, "algebra|transforms|layers|grad|all");
    cmd_check->add_option("--seed", check_seed);
    cmd_check->add_option("--out", check_csv, "CSV report path");

    std::string bench_op = "gp2d", bench_csv;
    std::vector<std::int64_t> bench_sizes{100000};
    int bench_reps = 10;
    std::uint64_t bench_seed = 0;
    auto* cmd_bench = app.add_subcommand("bench", "Micro-benchmarks (CSV timings)");
    cmd_bench->add_option("--op", bench_op, "gp2d|gp3d|conv2d|spectral2d");
    cmd_bench->add_option("--size", bench_sizes);
    cmd_bench->add_option("--reps", bench_reps);
    cmd_bench->add_option("--seed", bench_seed);
    cmd_bench->add_option("--out", bench_csv);

    std::string plot_in, plot_out, plot_kind = "lines";
    auto* cmd_plot = app.add_subcommand("plot", "Render a CSV as an SVG chart");
    cmd_plot->add_option("--in", plot_in)->required();
    cmd_plot->add_option("--out", plot_out)->required();
    cmd_plot->add_option("--kind", plot_kind, "lines|bars");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (cmd_gen->parsed()) return run_gen(gen);
        if (cmd_train->parsed()) return run_train(train);
        if (cmd_eval->parsed()) return run_eval(eval);
        if (cmd_check->parsed()) return run_check(check_suite, check_seed, check_csv);
        if (cmd_bench->parsed()) return run_bench(bench_op, bench_sizes, bench_reps, bench_csv, bench_seed);
        if (cmd_plot->parsed()) return run_plot(plot_in, plot_out, plot_kind);
    } catch (const ClfError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind == ClfError::Kind::io ? kExitIo : kExitUsage;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}
