// repalign: cross-subject representation alignment and representative-sample
// selection on synthetic multi-subject benchmarks.
//
// Subcommands: simulate, train-reference, align, select, metrics,
// coverage-test, extremes. Exit codes: 0 success, 1 runtime/data error,
// 2 usage error.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "repalign/repalign.hpp"

namespace fs = std::filesystem;
using namespace repalign;

namespace {

// Flag values that are syntactically valid but outside their domain.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

bool g_quiet = false;
std::string g_config_path;  // consumed by expand_config before parsing

void say(const std::string& msg) {
    if (!g_quiet) std::cout << msg << '\n';
}

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

json dir_digests(const std::string& dir) {
    json out = json::object();
    std::vector<std::string> paths;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    for (const std::string& p : paths)
        out[fs::relative(p, dir).string()] = file_digest_hex(p);
    return out;
}

json experiment_report(const std::string& command, json config, json metrics, json inputs,
                       json outputs, double duration) {
    return json{{"command", command},       {"config", std::move(config)},
                {"metrics", std::move(metrics)}, {"input_digests", std::move(inputs)},
                {"output_digests", std::move(outputs)}, {"duration_seconds", duration}};
}

Benchmark load_bench_checked(const std::string& dir) {
    if (!fs::is_directory(dir)) throw io_error("data directory not found: " + dir);
    return load_benchmark(dir);
}

const SubjectDataset& find_subject(const Benchmark& bench, const std::string& id) {
    for (const SubjectDataset& s : bench.subjects)
        if (s.subject_id == id) return s;
    throw value_error("subject '" + id + "' not found in benchmark");
}

Matrix subject_targets(const Benchmark& bench, const SubjectDataset& subj) {
    std::vector<std::size_t> rows(subj.item_ids.begin(), subj.item_ids.end());
    return take_rows(bench.targets, rows);
}

Matrix common_block(const SubjectDataset& s) {
    return take_rows(s.embeddings, s.rows_with(Split::common));
}

// End-to-end linear map of the adapter; for two-layer adapters the composed
// product stands in for the single weight matrix.
Matrix adapter_weight_matrix(const AdapterModel& a) {
    if (a.kind == AdapterKind::two_layer_linear) return matmul(*a.w2, a.w1);
    return a.w1;
}

struct ReferenceBundle {
    AdapterModel adapter;
    MapperModel mapper;
    std::string subject_id;
};

ReferenceBundle load_reference(const std::string& ref_dir) {
    const std::string apath = ref_dir + "/adapter.json";
    const std::string mpath = ref_dir + "/mapper.json";
    if (!fs::exists(apath) || !fs::exists(mpath))
        throw io_error("reference model not found under " + ref_dir);
    const json aj = read_json_file(apath);
    ReferenceBundle b{adapter_from_json(aj), load_mapper(mpath),
                      aj.value("subject", std::string("1"))};
    return b;
}

double test_output_mse(const Benchmark& bench, const SubjectDataset& subj,
                       const AdapterModel& adapter, const MapperModel& mapper) {
    const auto rows = subj.rows_with(Split::test);
    const Matrix x = take_rows(subj.embeddings, rows);
    std::vector<std::size_t> global(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) global[i] = subj.item_ids[rows[i]];
    const Matrix t = take_rows(bench.targets, global);
    return mse_loss(mapper_forward(mapper, adapter_forward(adapter, x)), t);
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string preset = "standard";
    std::string out;
    SynthConfig cfg;
};

int cmd_simulate(const SimulateArgs& a, const std::string& command) {
    Timer timer;
    if (a.preset != "standard" && a.preset != "custom")
        throw UsageError("unknown preset '" + a.preset + "' (expected standard|custom)");
    a.cfg.validate();
    const Benchmark bench = generate_benchmark(a.cfg);
    save_benchmark(bench, a.out);
    const json report =
        experiment_report(command, synth_config_to_json(a.cfg), json::object(), json::object(),
                          dir_digests(a.out), timer.seconds());
    write_json_file(report, a.out + "/report.json");
    say("wrote benchmark with " + std::to_string(bench.total_items()) + " items to " + a.out);
    return 0;
}

// ---------------------------------------------------------------------------
// train-reference

struct TrainRefArgs {
    std::string data;
    std::string out;
    std::string subject = "1";
    std::string kind = "linear_gelu";
    std::size_t common_dim = 32;
    std::size_t adapter_hidden = 32;
    std::size_t mapper_hidden = 64;
    std::string residual = "auto";
    std::size_t epochs = 500;
    double lr = 0.01;
    std::uint64_t seed = 1;
};

ModelSpec model_spec_from(const std::string& kind, std::size_t common_dim,
                          std::size_t adapter_hidden, std::size_t mapper_hidden,
                          const std::string& residual) {
    ModelSpec spec;
    spec.kind = adapter_kind_from_string(kind);
    spec.common_dim = common_dim;
    spec.adapter_hidden = adapter_hidden;
    spec.mapper_hidden = mapper_hidden;
    if (residual == "auto")
        spec.residual = -1;
    else if (residual == "on")
        spec.residual = 1;
    else if (residual == "off")
        spec.residual = 0;
    else
        throw UsageError("--residual must be auto|on|off");
    return spec;
}

int cmd_train_reference(const TrainRefArgs& a, const std::string& command) {
    Timer timer;
    const ModelSpec spec = model_spec_from(a.kind, a.common_dim, a.adapter_hidden,
                                           a.mapper_hidden, a.residual);
    const Benchmark bench = load_bench_checked(a.data);
    const SubjectDataset& subj = find_subject(bench, a.subject);
    TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.learning_rate = a.lr;
    cfg.seed = a.seed;

    const ReferenceResult res = train_reference(subj, subject_targets(bench, subj), spec, cfg);

    fs::create_directories(a.out);
    save_adapter(res.adapter, a.out + "/adapter.json", subj.subject_id);
    save_mapper(res.mapper, a.out + "/mapper.json");
    save_trace_csv(res.trace, a.out + "/trace.csv");

    const double final_loss =
        res.trace.rows.empty() ? -1.0 : res.trace.rows.back().total_loss;
    const double test_mse = test_output_mse(bench, subj, res.adapter, res.mapper);
    json config{{"data", a.data},        {"subject", a.subject},
                {"kind", a.kind},        {"common_dim", a.common_dim},
                {"adapter_hidden", a.adapter_hidden},
                {"mapper_hidden", a.mapper_hidden},
                {"residual", a.residual},
                {"epochs", a.epochs},    {"lr", a.lr},
                {"seed", a.seed}};
    json metrics{{"final_train_loss", final_loss}, {"test_output_mse", test_mse}};
    json inputs{{"data", dir_digests(a.data)}};
    json outputs{{"adapter.json", file_digest_hex(a.out + "/adapter.json")},
                 {"mapper.json", file_digest_hex(a.out + "/mapper.json")},
                 {"trace.csv", file_digest_hex(a.out + "/trace.csv")}};
    write_json_file(experiment_report(command, config, metrics, inputs, outputs,
                                      timer.seconds()),
                    a.out + "/report.json");
    say("reference subject " + a.subject + ": final train loss " +
        format_double(final_loss) + ", test output MSE " + format_double(test_mse));
    return 0;
}

// ---------------------------------------------------------------------------
// align

struct AlignArgs {
    std::string data;
    std::string ref;
    std::string out;
    std::string subject;
    std::string mode = "aamax";
    std::string kind;  // empty = inherit from reference adapter
    std::size_t common_limit = 0;
    std::int64_t sample_seed = -1;
    std::string select_file;
    bool include_unique = false;
    std::size_t epochs = 160;
    double lr = 0.01;
    double lambda3 = 1.0;
    std::size_t stage1_epochs = 2000;
    double stage1_tol = 1e-6;
    std::uint64_t seed = 1;
};

int cmd_align(const AlignArgs& a, const std::string& command) {
    Timer timer;
    const Benchmark bench = load_bench_checked(a.data);
    const ReferenceBundle ref = load_reference(a.ref);
    const SubjectDataset& subj = find_subject(bench, a.subject);
    const SubjectDataset& ref_subj = find_subject(bench, ref.subject_id);

    const Matrix ref_common_outputs = adapter_forward(ref.adapter, common_block(ref_subj));

    ModelSpec spec;
    spec.kind = a.kind.empty() ? ref.adapter.kind : adapter_kind_from_string(a.kind);
    spec.common_dim = ref.mapper.in_dim();
    spec.adapter_hidden = spec.common_dim;

    TrainConfig cfg;
    cfg.mode = train_mode_from_string(a.mode);
    cfg.epochs = a.epochs;
    cfg.learning_rate = a.lr;
    cfg.lambda3 = a.lambda3;
    cfg.stage1_epochs = a.stage1_epochs;
    cfg.stage1_tolerance = a.stage1_tol;
    cfg.seed = a.seed;

    const std::size_t n_common = subj.rows_with(Split::common).size();
    std::optional<std::vector<std::size_t>> subset;
    std::string selection_digest;
    if (!a.select_file.empty()) {
        if (a.common_limit > 0)
            throw UsageError("--select and --common-limit are mutually exclusive");
        const SelectionResult sel = selection_from_json(read_json_file(a.select_file));
        for (std::size_t idx : sel.chosen)
            if (idx >= n_common)
                throw value_error("selection index " + std::to_string(idx) +
                                  " outside the common set of subject " + a.subject);
        subset = sel.chosen;
        selection_digest = file_digest_hex(a.select_file);
    } else if (a.common_limit > 0) {
        if (a.common_limit > n_common)
            throw UsageError("--common-limit exceeds the common set size " +
                             std::to_string(n_common));
        std::vector<std::size_t> idx;
        if (a.sample_seed >= 0) {
            Rng rng(static_cast<std::uint64_t>(a.sample_seed));
            idx = rng.sample_without_replacement(n_common, a.common_limit);
            std::sort(idx.begin(), idx.end());
        } else {
            idx.resize(a.common_limit);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
        }
        subset = std::move(idx);
    }

    const Matrix targets = subject_targets(bench, subj);
    const FinetuneResult res = finetune(subj, targets, ref_common_outputs, ref.mapper, spec,
                                        cfg, subset, a.include_unique);

    fs::create_directories(a.out);
    save_adapter(res.adapter, a.out + "/adapter.json", subj.subject_id);
    save_mapper(res.mapper, a.out + "/mapper.json");
    save_trace_csv(res.trace, a.out + "/trace.csv");

    const double test_mse = test_output_mse(bench, subj, res.adapter, res.mapper);
    const double adapter_common_mse =
        mse_loss(adapter_forward(res.adapter, common_block(subj)), ref_common_outputs);
    json config{{"data", a.data},
                {"ref", a.ref},
                {"subject", a.subject},
                {"mode", a.mode},
                {"kind", to_string(spec.kind)},
                {"common_limit", a.common_limit},
                {"sample_seed", a.sample_seed},
                {"select", a.select_file},
                {"include_unique", a.include_unique},
                {"epochs", a.epochs},
                {"lr", a.lr},
                {"lambda3", a.lambda3},
                {"stage1_epochs", a.stage1_epochs},
                {"stage1_tolerance", a.stage1_tol},
                {"seed", a.seed}};
    json metrics{{"test_output_mse", test_mse},
                 {"adapter_common_mse", adapter_common_mse},
                 {"epochs_run", res.trace.rows.size()}};
    if (!res.trace.rows.empty())
        metrics["final_train_loss"] = res.trace.rows.back().total_loss;
    json inputs{{"data", dir_digests(a.data)},
                {"ref_adapter", file_digest_hex(a.ref + "/adapter.json")},
                {"ref_mapper", file_digest_hex(a.ref + "/mapper.json")}};
    if (!selection_digest.empty()) inputs["selection"] = selection_digest;
    json outputs{{"adapter.json", file_digest_hex(a.out + "/adapter.json")},
                 {"mapper.json", file_digest_hex(a.out + "/mapper.json")},
                 {"trace.csv", file_digest_hex(a.out + "/trace.csv")}};
    write_json_file(experiment_report(command, config, metrics, inputs, outputs,
                                      timer.seconds()),
                    a.out + "/report.json");
    say("aligned subject " + a.subject + " (" + a.mode + "): test output MSE " +
        format_double(test_mse) + ", adapter common MSE " +
        format_double(adapter_common_mse));
    return 0;
}

// ---------------------------------------------------------------------------
// select

struct SelectArgs {
    std::string data;
    std::string ref;
    std::string out;
    std::size_t dims = 20;
    long long w = 50;
    std::size_t budget = 0;
};

struct UniverseBundle {
    BinnedUniverse universe;
    std::vector<std::uint64_t> common_ids;
    Matrix projections;

    UniverseBundle(BinnedUniverse u, std::vector<std::uint64_t> ids, Matrix proj)
        : universe(std::move(u)), common_ids(std::move(ids)), projections(std::move(proj)) {}
};

UniverseBundle build_universe(const Benchmark& bench, const ReferenceBundle& ref,
                              std::size_t dims, long long w) {
    const SubjectDataset& ref_subj = find_subject(bench, ref.subject_id);
    const Matrix z = adapter_forward(ref.adapter, common_block(ref_subj));
    const Matrix weight = adapter_weight_matrix(ref.adapter);
    const std::size_t max_d = std::min(weight.rows(), weight.cols());
    if (dims == 0 || dims > max_d)
        throw UsageError("--dims must lie in [1, " + std::to_string(max_d) +
                         "] for this adapter");
    const SvdResult dec = svd(weight);
    const Matrix proj = project_onto_principal(z, weight, dims);
    const std::vector<double> sv(dec.s.begin(), dec.s.begin() + static_cast<long>(dims));
    BinnedUniverse u = bin_universe(proj, compute_bins(sv, w));
    std::vector<std::uint64_t> ids;
    for (std::size_t r : ref_subj.rows_with(Split::common))
        ids.push_back(ref_subj.item_ids[r]);
    return UniverseBundle(std::move(u), std::move(ids), proj);
}

int cmd_select(const SelectArgs& a, const std::string& command) {
    const Benchmark bench = load_bench_checked(a.data);
    const ReferenceBundle ref = load_reference(a.ref);
    const UniverseBundle bundle = build_universe(bench, ref, a.dims, a.w);
    if (a.budget > 0 && a.budget > bundle.universe.items())
        throw UsageError("--budget exceeds the universe size");

    const SelectionResult res = greedy_select(
        bundle.universe,
        a.budget > 0 ? std::optional<std::size_t>(a.budget) : std::nullopt);

    json j = selection_to_json(res, bundle.universe, a.dims, a.w);
    json item_ids = json::array();
    for (std::size_t idx : res.chosen) item_ids.push_back(bundle.common_ids[idx]);
    j["item_ids"] = std::move(item_ids);
    j["config"] = json{{"data", a.data}, {"ref", a.ref}, {"dims", a.dims},
                       {"w", a.w},       {"budget", a.budget}};
    j["input_digests"] = json{{"data", dir_digests(a.data)},
                              {"ref_adapter", file_digest_hex(a.ref + "/adapter.json")}};
    j["command"] = command;
    write_json_file(j, a.out);
    say("selected " + std::to_string(res.chosen.size()) + " items, " +
        std::to_string(res.empty_total) + " empty bins (" +
        std::to_string(res.empty_uncoverable) + " uncoverable), termination " +
        to_string(res.termination));
    return 0;
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsArgs {
    std::string data;
    std::string out;
    std::string space = "raw";
    std::string items = "common";
    std::vector<std::string> adapters;
    std::size_t knn_k = 50;
    std::size_t eig_k = 5;
    bool center = false;
};

int cmd_metrics(const MetricsArgs& a, const std::string& command) {
    Timer timer;
    const Benchmark bench = load_bench_checked(a.data);
    if (a.items != "common" && a.items != "test")
        throw UsageError("--items must be common|test");

    std::vector<Matrix> blocks;
    std::vector<std::string> ids;
    if (a.space == "raw" || a.space == "procrustes") {
        for (const SubjectDataset& s : bench.subjects) {
            blocks.push_back(take_rows(
                s.embeddings,
                s.rows_with(a.items == "common" ? Split::common : Split::test)));
            ids.push_back(s.subject_id);
        }
        if (a.space == "procrustes") {
            if (a.items != "common")
                throw UsageError("--space procrustes needs the item-matched common split");
            for (std::size_t i = 1; i < blocks.size(); ++i)
                blocks[i] = matmul(blocks[i], procrustes(blocks[i], blocks[0]).rotation);
        }
    } else if (a.space == "adapter") {
        if (a.adapters.size() < 2)
            throw UsageError("--space adapter needs at least two --adapter files");
        if (a.items != "common")
            throw UsageError("--space adapter compares the item-matched common split");
        for (const std::string& path : a.adapters) {
            const json aj = read_json_file(path);
            if (!aj.contains("subject"))
                throw value_error(path + ": adapter file has no subject tag");
            const std::string sid = aj.at("subject").get<std::string>();
            const SubjectDataset& s = find_subject(bench, sid);
            blocks.push_back(adapter_forward(adapter_from_json(aj), common_block(s)));
            ids.push_back(sid);
        }
    } else {
        throw UsageError("--space must be raw|procrustes|adapter");
    }

    if (a.center)
        for (Matrix& b : blocks) b = center_columns(b).first;

    const std::size_t n_items = blocks.front().rows();
    if (a.knn_k < 1 || a.knn_k > n_items - 1)
        throw UsageError("--knn-k outside [1, items-1]");

    const AlignmentReport rep = compute_alignment_report(blocks, ids, a.knn_k, a.eig_k);
    json j = alignment_report_to_json(rep);
    j["config"] = json{{"data", a.data},   {"space", a.space},   {"items", a.items},
                       {"adapters", a.adapters}, {"knn_k", a.knn_k},
                       {"eig_k", a.eig_k}, {"center", a.center}};
    j["input_digests"] = json{{"data", dir_digests(a.data)}};
    j["command"] = command;
    j["duration_seconds"] = timer.seconds();
    write_json_file(j, a.out);

    double off = 0.0;
    int pairs = 0;
    for (std::size_t x = 0; x < ids.size(); ++x)
        for (std::size_t y = x + 1; y < ids.size(); ++y) {
            off += rep.cosine_matrix(x, y);
            ++pairs;
        }
    say("mean off-diagonal cosine: " + format_double(pairs ? off / pairs : 1.0));
    return 0;
}

// ---------------------------------------------------------------------------
// coverage-test

struct CoverageArgs {
    std::string data;
    std::string ref;
    std::string select_file;
    std::string out;
    std::size_t trials = 1000;
    std::size_t subset_size = 0;
    std::uint64_t seed = 99;
};

int cmd_coverage_test(const CoverageArgs& a, const std::string& command) {
    Timer timer;
    const Benchmark bench = load_bench_checked(a.data);
    const ReferenceBundle ref = load_reference(a.ref);
    const json sj = read_json_file(a.select_file);
    const SelectionResult sel = selection_from_json(sj);
    const std::size_t dims = sj.at("d").get<std::size_t>();
    const long long w = sj.at("w").get<long long>();

    const UniverseBundle bundle = build_universe(bench, ref, dims, w);
    if (sj.at("bin_counts").get<std::vector<long long>>() != bundle.universe.bin_counts ||
        sj.at("skipped_dims").get<std::vector<std::size_t>>() != bundle.universe.skipped_dims)
        throw value_error("selection file does not match the universe built from " + a.data +
                          " and " + a.ref);
    for (std::size_t idx : sel.chosen)
        if (idx >= bundle.universe.items())
            throw value_error("selection index out of range for this universe");

    const std::size_t subset_size = a.subset_size > 0 ? a.subset_size : sel.chosen.size();
    const CoverageTestResult res = coverage_permutation_test(bundle.universe, sel.chosen,
                                                             subset_size, a.trials, a.seed);

    json j{{"p_value", res.p_value},
           {"random_mean", res.random_mean},
           {"random_std", res.random_std},
           {"selected_empty", res.selected_empty},
           {"trials", a.trials},
           {"subset_size", subset_size},
           {"config", json{{"data", a.data}, {"ref", a.ref}, {"select", a.select_file},
                           {"trials", a.trials}, {"subset_size", a.subset_size},
                           {"seed", a.seed}}},
           {"input_digests", json{{"selection", file_digest_hex(a.select_file)}}},
           {"command", command},
           {"duration_seconds", timer.seconds()}};
    write_json_file(j, a.out);
    say("selected empty bins: " + std::to_string(res.selected_empty) + ", random " +
        format_double(res.random_mean) + " +- " + format_double(res.random_std) +
        ", p = " + format_double(res.p_value));
    return 0;
}

// ---------------------------------------------------------------------------
// extremes

struct ExtremesArgs {
    std::string data;
    std::string ref;
    std::string out;
    std::size_t dims = 20;
    std::size_t dim = 0;
    std::size_t count = 10;
};

int cmd_extremes(const ExtremesArgs& a, const std::string& command) {
    const Benchmark bench = load_bench_checked(a.data);
    const ReferenceBundle ref = load_reference(a.ref);
    if (a.dim >= a.dims)
        throw UsageError("--dim must be smaller than --dims (" + std::to_string(a.dims) + ")");
    const UniverseBundle bundle = build_universe(bench, ref, a.dims, 1);
    if (a.count == 0 || a.count > bundle.projections.rows())
        throw UsageError("--count outside [1, items]");

    const auto [top, bottom] = extreme_items(bundle.projections, a.dim, a.count);
    json top_ids = json::array(), bottom_ids = json::array();
    for (std::size_t i : top) top_ids.push_back(bundle.common_ids[i]);
    for (std::size_t i : bottom) bottom_ids.push_back(bundle.common_ids[i]);
    json j{{"dim", a.dim},
           {"count", a.count},
           {"top", std::move(top_ids)},
           {"bottom", std::move(bottom_ids)},
           {"config", json{{"data", a.data}, {"ref", a.ref}, {"dims", a.dims},
                           {"dim", a.dim}, {"count", a.count}}},
           {"command", command}};
    write_json_file(j, a.out);
    say("wrote extreme item lists for dimension " + std::to_string(a.dim));
    return 0;
}

// ---------------------------------------------------------------------------
// --config expansion: JSON keys become defaults for flags not given on the
// command line.

std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;
    const json cfg = read_json_file(config_path);
    if (!cfg.is_object()) throw UsageError("--config file must hold a JSON object");
    auto given = [&](const std::string& key) {
        const std::string flag = "--" + key;
        for (const std::string& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    for (const auto& [key, value] : cfg.items()) {
        if (key == "config" || given(key)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back("--" + key);
        } else {
            args.push_back("--" + key);
            args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
        }
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cross-subject representation alignment and coverage-based sample selection"};
    app.require_subcommand(1);
    const std::string command = join_args(argc, argv);

    std::function<int()> runner;

    // simulate
    auto sim = std::make_shared<SimulateArgs>();
    std::string sim_transform = "tall_linear";
    CLI::App* c_sim = app.add_subcommand("simulate", "generate a synthetic benchmark");
    c_sim->add_option("--preset", sim->preset, "standard|custom");
    c_sim->add_option("--out", sim->out, "output directory")->required();
    c_sim->add_option("--subjects", sim->cfg.n_subjects);
    c_sim->add_option("--common", sim->cfg.n_common);
    c_sim->add_option("--unique", sim->cfg.n_unique);
    c_sim->add_option("--test", sim->cfg.n_test);
    c_sim->add_option("--latent-dim", sim->cfg.latent_dim);
    c_sim->add_option("--subject-dim", sim->cfg.subject_dim);
    c_sim->add_option("--transform", sim_transform, "orthogonal|invertible_linear|tall_linear");
    c_sim->add_option("--noise", sim->cfg.noise_sigma);
    c_sim->add_option("--categories", sim->cfg.n_categories);
    c_sim->add_option("--seed", sim->cfg.seed);
    c_sim->add_flag("--quiet", g_quiet);
    c_sim->add_option("--config", g_config_path, "JSON config file (flag-overridable)");
    c_sim->callback([&runner, sim, &sim_transform, &command] {
        runner = [sim, &sim_transform, &command] {
            sim->cfg.transform = transform_from_string(sim_transform);
            return cmd_simulate(*sim, command);
        };
    });

    // train-reference
    auto tr = std::make_shared<TrainRefArgs>();
    CLI::App* c_tr = app.add_subcommand("train-reference", "pre-train the reference subject");
    c_tr->add_option("--data", tr->data)->required();
    c_tr->add_option("--out", tr->out)->required();
    c_tr->add_option("--subject", tr->subject);
    c_tr->add_option("--kind", tr->kind, "linear|linear_gelu|linear_relu|two_layer_linear");
    c_tr->add_option("--common-dim", tr->common_dim);
    c_tr->add_option("--adapter-hidden", tr->adapter_hidden);
    c_tr->add_option("--mapper-hidden", tr->mapper_hidden);
    c_tr->add_option("--residual", tr->residual, "auto|on|off");
    c_tr->add_option("--epochs", tr->epochs);
    c_tr->add_option("--lr", tr->lr);
    c_tr->add_option("--seed", tr->seed);
    c_tr->add_flag("--quiet", g_quiet);
    c_tr->add_option("--config", g_config_path, "JSON config file (flag-overridable)");
    c_tr->callback([&runner, tr, &command] {
        runner = [tr, &command] { return cmd_train_reference(*tr, command); };
    });

    // align
    auto al = std::make_shared<AlignArgs>();
    CLI::App* c_al = app.add_subcommand("align", "fine-tune a new subject against a reference");
    c_al->add_option("--data", al->data)->required();
    c_al->add_option("--ref", al->ref, "train-reference output directory")->required();
    c_al->add_option("--out", al->out)->required();
    c_al->add_option("--subject", al->subject)->required();
    c_al->add_option("--mode", al->mode, "baseline|aamax|step1|frozen-mapper");
    c_al->add_option("--kind", al->kind, "adapter kind (default: reference's)");
    c_al->add_option("--common-limit", al->common_limit, "train on the first N commons");
    c_al->add_option("--sample-seed", al->sample_seed,
                     "draw the N commons at random with this seed instead");
    c_al->add_option("--select", al->select_file, "SelectionResult JSON restricting commons");
    c_al->add_flag("--include-unique", al->include_unique);
    c_al->add_option("--epochs", al->epochs);
    c_al->add_option("--lr", al->lr);
    c_al->add_option("--lambda3", al->lambda3);
    c_al->add_option("--stage1-epochs", al->stage1_epochs);
    c_al->add_option("--stage1-tol", al->stage1_tol);
    c_al->add_option("--seed", al->seed);
    c_al->add_flag("--quiet", g_quiet);
    c_al->add_option("--config", g_config_path, "JSON config file (flag-overridable)");
    c_al->callback([&runner, al, &command] {
        runner = [al, &command] { return cmd_align(*al, command); };
    });

    // select
    auto se = std::make_shared<SelectArgs>();
    CLI::App* c_se = app.add_subcommand("select", "greedy representative-sample selection");
    c_se->add_option("--data", se->data)->required();
    c_se->add_option("--ref", se->ref)->required();
    c_se->add_option("--out", se->out, "selection JSON path")->required();
    c_se->add_option("--dims", se->dims);
    c_se->add_option("--w", se->w);
    c_se->add_option("--budget", se->budget, "0 = run to coverage");
    c_se->add_flag("--quiet", g_quiet);
    c_se->add_option("--config", g_config_path, "JSON config file (flag-overridable)");
    c_se->callback([&runner, se, &command] {
        runner = [se, &command] { return cmd_select(*se, command); };
    });

    // metrics
    auto me = std::make_shared<MetricsArgs>();
    CLI::App* c_me = app.add_subcommand("metrics", "cross-subject alignment diagnostics");
    c_me->add_option("--data", me->data)->required();
    c_me->add_option("--out", me->out)->required();
    c_me->add_option("--space", me->space, "raw|procrustes|adapter");
    c_me->add_option("--items", me->items, "common|test");
    c_me->add_option("--adapter", me->adapters, "adapter JSON (repeatable)");
    c_me->add_option("--knn-k", me->knn_k);
    c_me->add_option("--eig-k", me->eig_k);
    c_me->add_flag("--center", me->center);
    c_me->add_flag("--quiet", g_quiet);
    c_me->add_option("--config", g_config_path, "JSON config file (flag-overridable)");
    c_me->callback([&runner, me, &command] {
        runner = [me, &command] { return cmd_metrics(*me, command); };
    });

    // coverage-test
    auto co = std::make_shared<CoverageArgs>();
    CLI::App* c_co = app.add_subcommand("coverage-test",
                                        "permutation test of selection coverage");
    c_co->add_option("--data", co->data)->required();
    c_co->add_option("--ref", co->ref)->required();
    c_co->add_option("--select", co->select_file)->required();
    c_co->add_option("--out", co->out)->required();
    c_co->add_option("--trials", co->trials);
    c_co->add_option("--subset-size", co->subset_size, "0 = size of the selection");
    c_co->add_option("--seed", co->seed);
    c_co->add_flag("--quiet", g_quiet);
    c_co->add_option("--config", g_config_path, "JSON config file (flag-overridable)");
    c_co->callback([&runner, co, &command] {
        runner = [co, &command] { return cmd_coverage_test(*co, command); };
    });

    // extremes
    auto ex = std::make_shared<ExtremesArgs>();
    CLI::App* c_ex = app.add_subcommand("extremes", "items at the projection extremes");
    c_ex->add_option("--data", ex->data)->required();
    c_ex->add_option("--ref", ex->ref)->required();
    c_ex->add_option("--out", ex->out)->required();
    c_ex->add_option("--dims", ex->dims, "number of projection dimensions");
    c_ex->add_option("--dim", ex->dim, "dimension to sample")->required();
    c_ex->add_option("--count", ex->count)->required();
    c_ex->add_flag("--quiet", g_quiet);
    c_ex->add_option("--config", g_config_path, "JSON config file (flag-overridable)");
    c_ex->callback([&runner, ex, &command] {
        runner = [ex, &command] { return cmd_extremes(*ex, command); };
    });

    try {
        const std::vector<std::string> args = expand_config(argc, argv);
        std::vector<const char*> cargs;
        for (const std::string& a : args) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        return runner ? runner() : 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
