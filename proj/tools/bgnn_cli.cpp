/**
 * @file bgnn_cli.cpp
 * @brief Command-line front end: train, eval, generalize, trajectory, and
 *        instance import/export with seeded reproducibility. Outputs are
 *        CSV/report files plus a manifest describing the resolved run.
 */

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bgnn/baselines.hpp"
#include "bgnn/checkpoint.hpp"
#include "bgnn/training.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

using bgnn::ConfigError;

// ---- flat key=value configuration ------------------------------------------

using Config = std::map<std::string, std::string>;

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "mode",
        "seed",
        "scenario.layout",
        "scenario.max_antennas",
        "scenario.max_users",
        "scenario.min_antennas",
        "scenario.min_users",
        "scenario.snr_db",
        "scenario.cell_radius_m",
        "scenario.antenna_circle_radius_m",
        "scenario.ref_distance_m",
        "scenario.pathloss_exponent",
        "model.msg_dim",
        "model.hidden",
        "train.epochs",
        "train.batches_per_epoch",
        "train.batch_size",
        "train.lr",
        "train.iterations",
        "train.validation_size",
        "train.snr_policy",
        "train.snr_db_min",
        "train.snr_db_max",
        "train.threads",
        "eval.samples",
        "eval.baselines",
        "eval.n_list",
        "eval.k_list",
        "eval.snr_db_list",
        "eval.naive_epochs",
    };
    return keys;
}

Config default_config() {
    return {
        {"mode", "sum"},
        {"seed", "1"},
        {"scenario.layout", "colocated"},
        {"scenario.max_antennas", "4"},
        {"scenario.max_users", "4"},
        {"scenario.min_antennas", "2"},
        {"scenario.min_users", "2"},
        {"scenario.snr_db", "10"},
        {"scenario.cell_radius_m", "100"},
        {"scenario.antenna_circle_radius_m", "30"},
        {"scenario.ref_distance_m", "30"},
        {"scenario.pathloss_exponent", "3"},
        {"model.msg_dim", "5"},
        {"model.hidden", "0"},
        {"train.epochs", "30"},
        {"train.batches_per_epoch", "20"},
        {"train.batch_size", "64"},
        {"train.lr", "0.0005"},
        {"train.iterations", "6"},
        {"train.validation_size", "256"},
        {"train.snr_policy", "fixed"},
        {"train.snr_db_min", "10"},
        {"train.snr_db_max", "10"},
        {"train.threads", "0"},
        {"eval.samples", "500"},
        {"eval.baselines", "wmmse"},
        {"eval.n_list", "4"},
        {"eval.k_list", "2,3,4"},
        {"eval.snr_db_list", "10"},
        {"eval.naive_epochs", "10"},
    };
}

void apply_profile(Config& cfg, const std::string& profile) {
    if (profile == "desk") return; // desk-scale defaults above
    if (profile == "paper") {
        cfg["scenario.max_antennas"] = "8";
        cfg["scenario.max_users"] = "8";
        cfg["train.epochs"] = "100";
        cfg["train.batches_per_epoch"] = "50";
        cfg["train.batch_size"] = "1000";
        cfg["train.iterations"] = "10";
        cfg["train.lr"] = "0.0005";
        cfg["model.msg_dim"] = "5";
        return;
    }
    throw ConfigError("unknown profile '" + profile + "'");
}

void check_key(const std::string& key) {
    if (known_keys().count(key) == 0) throw ConfigError("unknown config key '" + key + "'");
}

void load_config_file(Config& cfg, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::string line;
    std::vector<std::string> unknown;
    while (std::getline(f, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        if (known_keys().count(key) == 0) {
            unknown.push_back(key);
            continue;
        }
        cfg[key] = value;
    }
    if (!unknown.empty()) {
        std::string msg = "unknown config keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }
}

void apply_overrides(Config& cfg, const std::vector<std::string>& sets) {
    for (const std::string& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("override must be key=value: " + kv);
        const std::string key = kv.substr(0, eq);
        check_key(key);
        cfg[key] = kv.substr(eq + 1);
    }
}

int to_int(const Config& cfg, const std::string& key) {
    try {
        return std::stoi(cfg.at(key));
    } catch (const std::exception&) {
        throw ConfigError("key " + key + " is not an integer: " + cfg.at(key));
    }
}

double to_double(const Config& cfg, const std::string& key) {
    try {
        return std::stod(cfg.at(key));
    } catch (const std::exception&) {
        throw ConfigError("key " + key + " is not a number: " + cfg.at(key));
    }
}

std::uint64_t to_u64(const Config& cfg, const std::string& key) {
    try {
        return std::stoull(cfg.at(key));
    } catch (const std::exception&) {
        throw ConfigError("key " + key + " is not an unsigned integer: " + cfg.at(key));
    }
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoi(item));
    }
    if (out.empty()) throw ConfigError("empty list: " + s);
    return out;
}

std::vector<std::string> parse_str_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

bgnn::beam::Utility parse_mode(const std::string& s) {
    if (s == "sum") return bgnn::beam::Utility::Sum;
    if (s == "min") return bgnn::beam::Utility::Min;
    throw ConfigError("mode must be 'sum' or 'min', got '" + s + "'");
}

bgnn::channel::ScenarioConfig scenario_from(const Config& cfg) {
    bgnn::channel::ScenarioConfig sc;
    sc.max_antennas = to_int(cfg, "scenario.max_antennas");
    sc.max_users = to_int(cfg, "scenario.max_users");
    sc.min_antennas = to_int(cfg, "scenario.min_antennas");
    sc.min_users = to_int(cfg, "scenario.min_users");
    sc.power = std::pow(10.0, to_double(cfg, "scenario.snr_db") / 10.0);
    const std::string layout = cfg.at("scenario.layout");
    if (layout == "colocated") sc.layout = bgnn::channel::Layout::Colocated;
    else if (layout == "cellfree") sc.layout = bgnn::channel::Layout::CellFree;
    else throw ConfigError("scenario.layout must be 'colocated' or 'cellfree'");
    sc.cell_radius_m = to_double(cfg, "scenario.cell_radius_m");
    sc.antenna_circle_radius_m = to_double(cfg, "scenario.antenna_circle_radius_m");
    sc.ref_distance_m = to_double(cfg, "scenario.ref_distance_m");
    sc.pathloss_exponent = to_double(cfg, "scenario.pathloss_exponent");
    return sc;
}

bgnn::training::TrainConfig train_config_from(const Config& cfg) {
    bgnn::training::TrainConfig tc;
    tc.epochs = to_int(cfg, "train.epochs");
    tc.batches_per_epoch = to_int(cfg, "train.batches_per_epoch");
    tc.batch_size = to_int(cfg, "train.batch_size");
    tc.learning_rate = to_double(cfg, "train.lr");
    tc.iterations = to_int(cfg, "train.iterations");
    tc.mode = parse_mode(cfg.at("mode"));
    tc.msg_dim = to_int(cfg, "model.msg_dim");
    tc.hidden = to_int(cfg, "model.hidden");
    tc.validation_size = to_int(cfg, "train.validation_size");
    tc.seed = to_u64(cfg, "seed");
    tc.threads = to_int(cfg, "train.threads");
    tc.scenario = scenario_from(cfg);
    const std::string policy = cfg.at("train.snr_policy");
    if (policy == "fixed") {
        tc.snr_policy = bgnn::training::SnrPolicy::Fixed;
    } else if (policy == "range") {
        tc.snr_policy = bgnn::training::SnrPolicy::PerSampleDb;
        tc.snr_db_min = to_double(cfg, "train.snr_db_min");
        tc.snr_db_max = to_double(cfg, "train.snr_db_max");
    } else {
        throw ConfigError("train.snr_policy must be 'fixed' or 'range'");
    }
    return tc;
}

// ---- manifest and CSV helpers -------------------------------------------------

std::string timestamp_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_manifest(const std::string& path, const std::string& command, const Config& cfg,
                    const std::vector<std::pair<std::string, std::string>>& outputs,
                    const std::string& start, const std::string& end) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write manifest " + path);
    f << "bgnn-manifest v1\n";
    f << "command = " << command << "\n";
    f << "version = " << kVersion << "\n";
    f << "start = " << start << "\n";
    f << "end = " << end << "\n";
    for (const auto& [k, v] : outputs) f << "output." << k << " = " << v << "\n";
    for (const auto& [k, v] : cfg) f << "config." << k << " = " << v << "\n";
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// evaluation sample streams (disjoint from training namespaces by the high bit)
constexpr std::uint64_t kEvalStreamBase = 1ULL << 62;

bgnn::channel::BipartiteChannel eval_instance(const bgnn::channel::ScenarioConfig& sc, int n,
                                              int k, std::uint64_t seed, std::uint64_t index) {
    bgnn::Rng rng = bgnn::Rng::stream(seed, kEvalStreamBase + 2 * index);
    return bgnn::channel::sample_fixed(sc, n, k, rng);
}

bgnn::ad::Tensor eval_messages(int n, int k, int msg_dim, std::uint64_t seed,
                               std::uint64_t index) {
    bgnn::Rng rng = bgnn::Rng::stream(seed, kEvalStreamBase + 2 * index + 1);
    return bgnn::model::sample_init_messages(n, k, msg_dim, rng);
}

// ---- commands -----------------------------------------------------------------

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string profile = "desk";
    std::string mode;
    std::string layout;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
};

Config resolve_config(const CommonArgs& args) {
    Config cfg = default_config();
    apply_profile(cfg, args.profile);
    if (!args.config_path.empty()) load_config_file(cfg, args.config_path);
    apply_overrides(cfg, args.sets);
    if (!args.mode.empty()) cfg["mode"] = args.mode;
    if (!args.layout.empty()) cfg["scenario.layout"] = args.layout;
    if (args.seed_given) cfg["seed"] = std::to_string(args.seed);
    parse_mode(cfg.at("mode"));
    return cfg;
}

int cmd_train(const CommonArgs& args, bool dry_run) {
    const std::string start = timestamp_now();
    Config cfg = resolve_config(args);
    bgnn::training::TrainConfig tc = train_config_from(cfg);
    const std::string ckpt = args.out_dir + "/checkpoint.bin";
    const std::string report = args.out_dir + "/report.txt";
    const std::string manifest = args.out_dir + "/manifest.txt";
    tc.checkpoint_path = ckpt;
    tc.dump_dir = args.out_dir;
    tc.validate();

    if (dry_run) {
        write_manifest(manifest, "train (dry run)", cfg, {}, start, timestamp_now());
        std::printf("dry run: manifest written to %s\n", manifest.c_str());
        return 0;
    }

    const bgnn::training::TrainResult result = bgnn::training::train(tc);
    if (result.report.epochs.empty()) {
        bgnn::model::save_checkpoint(ckpt, result.best); // zero-epoch run keeps the init
    }
    std::ofstream rf(report);
    rf << bgnn::training::format_report(result.report, true);
    rf.close();
    write_manifest(manifest, "train", cfg,
                   {{"checkpoint", ckpt}, {"report", report}}, start, timestamp_now());
    if (!result.report.epochs.empty())
        std::printf("trained %zu epochs; best validation utility %.6f\n",
                    result.report.epochs.size(),
                    std::max_element(result.report.epochs.begin(), result.report.epochs.end(),
                                     [](const auto& a, const auto& b) {
                                         return a.val_utility < b.val_utility;
                                     })
                        ->val_utility);
    std::printf("outputs: %s %s %s\n", ckpt.c_str(), report.c_str(), manifest.c_str());
    return 0;
}

struct CellStats {
    double bgnn = 0.0;
    std::map<std::string, double> baseline; // name -> mean utility ("nan" -> infeasible)
    std::map<std::string, bool> feasible;
    double time_med_s = -1.0;
};

double utility_of(const bgnn::linalg::CMatrix& v, const bgnn::channel::BipartiteChannel& inst,
                  bgnn::beam::Utility mode) {
    return bgnn::beam::utility(bgnn::beam::rates(inst.H, v, inst.noise_var), mode);
}

int cmd_eval(const CommonArgs& args, const std::string& ckpt_path,
             const std::vector<std::string>& baseline_names, int samples_override, bool timing) {
    const std::string start = timestamp_now();
    Config cfg = resolve_config(args);
    const bgnn::model::BgnnParams params = bgnn::model::load_checkpoint(ckpt_path);
    if (!args.mode.empty() && parse_mode(args.mode) != params.mode)
        throw ConfigError("requested mode does not match the checkpoint's utility mode");
    cfg["mode"] = params.mode == bgnn::beam::Utility::Sum ? "sum" : "min";

    const bgnn::channel::ScenarioConfig sc = scenario_from(cfg);
    const std::uint64_t seed = to_u64(cfg, "seed");
    const int samples = samples_override > 0 ? samples_override : to_int(cfg, "eval.samples");
    std::vector<std::string> baselines =
        baseline_names.empty() ? parse_str_list(cfg.at("eval.baselines")) : baseline_names;
    for (const auto& b : baselines)
        if (b != "wmmse" && b != "zf" && b != "mrt" && b != "optimal" && b != "naive")
            throw ConfigError("unknown baseline '" + b + "'");

    const std::vector<int> n_list = parse_int_list(cfg.at("eval.n_list"));
    const std::vector<int> k_list = parse_int_list(cfg.at("eval.k_list"));
    const std::vector<int> p_list = parse_int_list(cfg.at("eval.snr_db_list"));

    const std::string csv_path = args.out_dir + "/eval.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw ConfigError("cannot write " + csv_path);
    csv << "# bgnn-eval-csv v1; utilities in bits/s/Hz; time_med_s in seconds\n";
    csv << "N,K,P_dB,samples,bgnn";
    for (const auto& b : baselines) csv << "," << b;
    csv << ",time_med_s\n";

    std::uint64_t cell_index = 0;
    for (int pdb : p_list)
        for (int n : n_list)
            for (int k : k_list) {
                bgnn::channel::ScenarioConfig cell_sc = sc;
                cell_sc.power = std::pow(10.0, pdb / 10.0);

                // one naive net per cell when requested, trained at this size
                std::unique_ptr<bgnn::baselines::NaiveDnn> naive;
                if (std::find(baselines.begin(), baselines.end(), "naive") != baselines.end()) {
                    bgnn::Rng nrng = bgnn::Rng::stream(seed, 900000 + cell_index);
                    naive = std::make_unique<bgnn::baselines::NaiveDnn>(
                        bgnn::baselines::make_naive_dnn(n, k, params.mode, params.param_count(), nrng));
                    bgnn::baselines::NaiveTrainConfig ntc;
                    ntc.epochs = to_int(cfg, "eval.naive_epochs");
                    ntc.seed = seed + cell_index;
                    ntc.scenario = cell_sc;
                    bgnn::baselines::naive_train(*naive, ntc);
                }

                CellStats stats;
                std::vector<double> times;
                for (int s = 0; s < samples; ++s) {
                    const std::uint64_t idx = cell_index * 1000003ULL + static_cast<std::uint64_t>(s);
                    const auto inst = eval_instance(cell_sc, n, k, seed, idx);
                    const auto b0 = eval_messages(n, k, params.msg_dim, seed, idx);

                    if (timing && s < 100) {
                        const auto t0 = std::chrono::steady_clock::now();
                        bgnn::model::infer(inst, params, b0);
                        times.push_back(std::chrono::duration<double>(
                                            std::chrono::steady_clock::now() - t0)
                                            .count());
                    }
                    stats.bgnn += bgnn::model::infer(inst, params, b0).utility;

                    for (const auto& b : baselines) {
                        try {
                            bgnn::linalg::CMatrix v;
                            if (b == "wmmse") v = bgnn::baselines::wmmse(inst.H, inst.power, inst.noise_var).V;
                            else if (b == "zf") v = bgnn::baselines::zf_waterfill(inst.H, inst.power, inst.noise_var).V;
                            else if (b == "mrt") v = bgnn::baselines::mrt_power(inst.H, inst.power, inst.noise_var, params.mode).V;
                            else if (b == "optimal") v = bgnn::baselines::optimal_minrate(inst.H, inst.power, inst.noise_var).V;
                            else v = bgnn::baselines::naive_eval(*naive, inst).V;
                            stats.baseline[b] += utility_of(v, inst, params.mode);
                            stats.feasible.emplace(b, true);
                        } catch (const bgnn::InfeasibleError&) {
                            stats.feasible[b] = false;
                        }
                    }
                }

                csv << n << "," << k << "," << pdb << "," << samples << ","
                    << fmt(stats.bgnn / samples);
                for (const auto& b : baselines) {
                    const bool ok = stats.feasible.count(b) != 0 && stats.feasible.at(b);
                    csv << "," << (ok ? fmt(stats.baseline[b] / samples) : "na");
                }
                if (timing && !times.empty()) {
                    std::sort(times.begin(), times.end());
                    csv << "," << fmt(times[times.size() / 2]);
                } else {
                    csv << ",na";
                }
                csv << "\n";
                ++cell_index;
            }
    csv.close();
    write_manifest(args.out_dir + "/manifest.txt", "eval", cfg, {{"csv", csv_path}}, start,
                   timestamp_now());
    std::printf("eval written to %s\n", csv_path.c_str());
    return 0;
}

int cmd_generalize(const CommonArgs& args, const std::string& ckpt_path, int max_n, int max_k,
                   int size_step, int samples_override) {
    const std::string start = timestamp_now();
    Config cfg = resolve_config(args);
    const bgnn::model::BgnnParams params = bgnn::model::load_checkpoint(ckpt_path);
    cfg["mode"] = params.mode == bgnn::beam::Utility::Sum ? "sum" : "min";
    const bgnn::channel::ScenarioConfig sc = scenario_from(cfg);
    const std::uint64_t seed = to_u64(cfg, "seed");
    const int samples = samples_override > 0 ? samples_override : to_int(cfg, "eval.samples");

    const std::string csv_path = args.out_dir + "/generalize.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw ConfigError("cannot write " + csv_path);
    csv << "# bgnn-generalize-csv v1; utilities in bits/s/Hz; ratio = bgnn / reference\n";
    csv << "N,K,samples,bgnn,reference,ratio\n";

    std::uint64_t cell = 0;
    for (int n = size_step; n <= max_n; n += size_step)
        for (int k = size_step; k <= max_k; k += size_step) {
            double ours = 0.0, ref = 0.0;
            for (int s = 0; s < samples; ++s) {
                const std::uint64_t idx = cell * 1000003ULL + static_cast<std::uint64_t>(s);
                const auto inst = eval_instance(sc, n, k, seed, idx);
                const auto b0 = eval_messages(n, k, params.msg_dim, seed, idx);
                ours += bgnn::model::infer(inst, params, b0).utility;
                if (params.mode == bgnn::beam::Utility::Sum)
                    ref += bgnn::baselines::wmmse(inst.H, inst.power, inst.noise_var).utility;
                else
                    ref += bgnn::baselines::optimal_minrate(inst.H, inst.power, inst.noise_var).utility;
            }
            csv << n << "," << k << "," << samples << "," << fmt(ours / samples) << ","
                << fmt(ref / samples) << "," << fmt(ours / ref) << "\n";
            ++cell;
        }
    csv.close();
    write_manifest(args.out_dir + "/manifest.txt", "generalize", cfg, {{"csv", csv_path}}, start,
                   timestamp_now());
    std::printf("generalization sweep written to %s\n", csv_path.c_str());
    return 0;
}

int cmd_trajectory(const CommonArgs& args, const std::string& ckpt_path, int n, int k,
                   int samples_override, const std::string& instance_path) {
    const std::string start = timestamp_now();
    Config cfg = resolve_config(args);
    const bgnn::model::BgnnParams params = bgnn::model::load_checkpoint(ckpt_path);
    cfg["mode"] = params.mode == bgnn::beam::Utility::Sum ? "sum" : "min";
    const bgnn::channel::ScenarioConfig sc = scenario_from(cfg);
    const std::uint64_t seed = to_u64(cfg, "seed");

    std::vector<double> means(static_cast<std::size_t>(params.iterations), 0.0);
    int count = 0;
    bgnn::model::ForwardOptions opts;
    opts.want_solutions = true;
    if (!instance_path.empty()) {
        const auto inst = bgnn::channel::load_instance(instance_path);
        const auto b0 = eval_messages(inst.N, inst.K, params.msg_dim, seed, 0);
        const auto res = bgnn::model::bmp_forward(inst, params, b0, opts);
        for (int t = 0; t < params.iterations; ++t)
            means[static_cast<std::size_t>(t)] = res.solutions[static_cast<std::size_t>(t)].utility;
        count = 1;
    } else {
        const int samples = samples_override > 0 ? samples_override : to_int(cfg, "eval.samples");
        for (int s = 0; s < samples; ++s) {
            const auto inst = eval_instance(sc, n, k, seed, static_cast<std::uint64_t>(s));
            const auto b0 = eval_messages(n, k, params.msg_dim, seed, static_cast<std::uint64_t>(s));
            const auto res = bgnn::model::bmp_forward(inst, params, b0, opts);
            for (int t = 0; t < params.iterations; ++t)
                means[static_cast<std::size_t>(t)] += res.solutions[static_cast<std::size_t>(t)].utility;
            ++count;
        }
        for (double& m : means) m /= count;
    }

    const std::string csv_path = args.out_dir + "/trajectory.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw ConfigError("cannot write " + csv_path);
    csv << "# bgnn-trajectory-csv v1; utility in bits/s/Hz\n";
    csv << "step,mean_utility,samples\n";
    for (int t = 0; t < params.iterations; ++t)
        csv << (t + 1) << "," << fmt(means[static_cast<std::size_t>(t)]) << "," << count << "\n";
    csv.close();
    write_manifest(args.out_dir + "/manifest.txt", "trajectory", cfg, {{"csv", csv_path}}, start,
                   timestamp_now());
    std::printf("trajectory written to %s\n", csv_path.c_str());
    return 0;
}

int cmd_export_instance(const CommonArgs& args, int n, int k, const std::string& out_path) {
    Config cfg = resolve_config(args);
    const bgnn::channel::ScenarioConfig sc = scenario_from(cfg);
    bgnn::Rng rng(to_u64(cfg, "seed"));
    const auto inst = bgnn::channel::sample_fixed(sc, n, k, rng);
    bgnn::channel::save_instance(out_path, inst);
    std::printf("instance (N=%d, K=%d) written to %s\n", inst.N, inst.K, out_path.c_str());
    return 0;
}

int cmd_import_instance(const std::string& in_path) {
    const auto inst = bgnn::channel::load_instance(in_path);
    double fro = 0.0;
    for (const auto& x : inst.H.values()) fro += std::norm(x);
    std::printf("instance ok: N=%d K=%d P=%.6g noise=%.6g ||H||_F=%.6g\n", inst.N, inst.K,
                inst.power, inst.noise_var, std::sqrt(fro));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bipartite graph neural network beamforming optimizer"};
    app.require_subcommand(1);

    CommonArgs common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "key=value config file");
        sub->add_option("--set", common.sets, "override a config key (key=value, repeatable)");
        sub->add_option("--profile", common.profile, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
        sub->add_option("--mode", common.mode, "utility: sum or min")->check(CLI::IsMember({"sum", "min"}));
        sub->add_option("--layout", common.layout, "colocated or cellfree")->check(CLI::IsMember({"colocated", "cellfree"}));
        sub->add_option("--out", common.out_dir, "output directory");
        sub->add_option("--seed", common.seed, "master seed")->each([&](const std::string&) { common.seed_given = true; });
    };

    bool dry_run = false;
    CLI::App* train = app.add_subcommand("train", "train a model (Algorithm-style loop)");
    add_common(train);
    train->add_flag("--dry-run", dry_run, "resolve the config and write the manifest only");

    std::string ckpt;
    std::vector<std::string> baselines;
    int samples = 0;
    bool timing = false;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint against baselines on a grid");
    add_common(eval);
    eval->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    eval->add_option("--baselines", baselines, "subset of wmmse,zf,mrt,optimal,naive");
    eval->add_option("--samples", samples, "instances per grid cell");
    eval->add_flag("--timing", timing, "add median single-instance wall time (non-deterministic)");

    int max_n = 8, max_k = 8, size_step = 2;
    CLI::App* gen = app.add_subcommand("generalize", "utility ratio vs reference on sizes beyond training");
    add_common(gen);
    gen->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    gen->add_option("--max-n", max_n, "largest antenna count");
    gen->add_option("--max-k", max_k, "largest user count");
    gen->add_option("--step", size_step, "size step");
    gen->add_option("--samples", samples, "instances per cell");

    int traj_n = 4, traj_k = 4;
    std::string instance_path;
    CLI::App* traj = app.add_subcommand("trajectory", "per-iteration utility of the message passing");
    add_common(traj);
    traj->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    traj->add_option("--n", traj_n, "antennas");
    traj->add_option("--k", traj_k, "users");
    traj->add_option("--samples", samples, "instances to average");
    traj->add_option("--instance", instance_path, "single instance file instead of sampling");

    int exp_n = 4, exp_k = 4;
    std::string exp_out = "instance.txt";
    CLI::App* exp = app.add_subcommand("export-instance", "sample one instance to a text fixture");
    add_common(exp);
    exp->add_option("--n", exp_n, "antennas");
    exp->add_option("--k", exp_k, "users");
    exp->add_option("--file", exp_out, "output file");

    std::string imp_in;
    CLI::App* imp = app.add_subcommand("import-instance", "validate and summarize an instance file");
    imp->add_option("--file", imp_in, "input file")->required();

    try {
        app.parse(argc, argv);
        if (!common.out_dir.empty() && common.out_dir != ".")
            std::filesystem::create_directories(common.out_dir);
        if (train->parsed()) return cmd_train(common, dry_run);
        if (eval->parsed()) return cmd_eval(common, ckpt, baselines, samples, timing);
        if (gen->parsed()) return cmd_generalize(common, ckpt, max_n, max_k, size_step, samples);
        if (traj->parsed()) return cmd_trajectory(common, ckpt, traj_n, traj_k, samples, instance_path);
        if (exp->parsed()) return cmd_export_instance(common, exp_n, exp_k, exp_out);
        if (imp->parsed()) return cmd_import_instance(imp_in);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const bgnn::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const bgnn::ContractError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const bgnn::ShapeError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const bgnn::Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 3;
    }
}
