// SPDX-License-Identifier: Apache-2.0
//
// tca: command-line front end.
//
//   gen        write synthetic Q/K/V tensor files for one pattern family
//   calibrate  choose a sparsity configuration per head and write the table
//   run        prefill + decode session, emits a step trace and a run report
//   verify     check the per-query error bound on the engine's kept sets
//   bench      analytic cost table across sequence lengths
//
// Exit codes: 0 success, 2 invalid arguments, 3 contract violation, 4 IO error.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tca/calibration.hpp"
#include "tca/cost_model.hpp"
#include "tca/engine.hpp"
#include "tca/error.hpp"
#include "tca/head_config_table.hpp"
#include "tca/parallel.hpp"
#include "tca/report.hpp"
#include "tca/session.hpp"
#include "tca/tensor_file.hpp"
#include "tca/theory.hpp"
#include "tca/workload.hpp"

namespace {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kInvalidArgs = 2,
    kContractViolation = 3,
    kIoError = 4,
};

// ---------------------------------------------------------------- options

struct GenOptions {
    std::string family = "uniform";
    std::size_t length = 512;
    std::size_t dim = 64;
    std::uint64_t seed = 0;
    double intensity = 0.9;
    std::size_t layers = 1;
    std::size_t heads = 1;
    std::string out;
};

struct CalibrateOptions {
    std::vector<std::string> qkv;
    std::size_t block = 128;
    std::size_t window = 4096;
    double tau = 0.9;
    double sigma = 1.0;
    std::size_t candidates = 14;
    double alpha = 0.5;
    std::string index = "hhi";
    std::string out;
};

struct RunOptions {
    std::string qkv;
    std::string table;
    std::size_t decode_steps = 0;
    std::string trace;
    std::string report;
    std::string report_format = "json";
    bool no_oracle = false;
    bool timings = false;
};

struct VerifyOptions {
    std::string qkv;
    std::string table;
    std::size_t instances = 0;
    std::string out;
    std::string format = "json";
    std::string bound = "tight";
};

struct BenchOptions {
    std::vector<std::size_t> lengths;
    bool sweep = false;
    std::size_t dim = 64;
    std::size_t heads = 1;
    std::size_t window = 4096;
    std::size_t block = 128;
    double global_fraction = 0.0625;
    std::string format = "csv";
    std::string out;
};

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::optional<std::string> created_at;
};

// ---------------------------------------------------------------- helpers

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("tca");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("TCA_LOG_LEVEL");
    const std::string level = env ? env : "warn";
    static const std::map<std::string, spdlog::level::level_enum> levels = {
        {"error", spdlog::level::err},
        {"warn", spdlog::level::warn},
        {"info", spdlog::level::info},
        {"debug", spdlog::level::debug},
    };
    const auto it = levels.find(level);
    if (it == levels.end()) {
        throw tca::ParameterError("TCA_LOG_LEVEL must be one of error, warn, info, debug (got '" +
                                  level + "')");
    }
    spdlog::set_level(it->second);
}

std::string default_created_at() {
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        const auto secs = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
        std::tm tm{};
        gmtime_r(&secs, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }
    return "1970-01-01T00:00:00Z";
}

tca::HeadKey key_of(const tca::QkvStack& stack, std::size_t n) {
    return {n / stack.heads, n % stack.heads};
}

std::vector<tca::HeadInput> load_heads(const std::string& prefix) {
    auto stack = tca::read_qkv(prefix);
    std::vector<tca::HeadInput> heads;
    for (std::size_t n = 0; n < stack.items.size(); ++n) {
        heads.push_back({key_of(stack, n), std::move(stack.items[n])});
    }
    spdlog::info("loaded {} head(s) from '{}'", heads.size(), prefix);
    return heads;
}

void write_output(const std::string& path, const std::string& contents) {
    if (path.empty() || path == "-") {
        std::cout << contents;
    } else {
        tca::write_file_atomic(path, contents);
    }
}

// ---------------------------------------------------------------- commands

int cmd_gen(const GenOptions& o) {
    tca::QkvStack stack{o.layers, o.heads, {}};
    const auto family = tca::parse_pattern_family(o.family);
    for (std::size_t n = 0; n < o.layers * o.heads; ++n) {
        tca::PatternSpec spec{family, o.length, o.dim, tca::Seed{tca::mix_seed(o.seed, n)},
                              o.intensity};
        stack.items.push_back(tca::generate_pattern(spec));
    }
    tca::write_qkv(o.out, stack);
    for (const auto& p : tca::qkv_paths(o.out)) std::cout << p.string() << '\n';
    return kOk;
}

int cmd_calibrate(const CalibrateOptions& o, const GlobalOptions& g) {
    tca::CalibrationParams params;
    params.selection.block_size = o.block;
    params.selection.window = o.window;
    params.selection.alpha = o.alpha;
    params.selection.index = tca::parse_redundancy_index(o.index);
    params.tau = o.tau;
    params.validate();
    const auto candidates = tca::generate_candidates(o.block, o.candidates, o.sigma);

    std::map<tca::HeadKey, std::vector<tca::CalibrationSample>> samples;
    for (const auto& prefix : o.qkv) {
        for (auto& h : load_heads(prefix)) {
            samples[h.key].push_back({std::move(h.inputs), prefix});
        }
    }
    for (const auto& [key, list] : samples) {
        if (list.size() != o.qkv.size()) {
            throw tca::ShapeError("head " + tca::to_string(key) + " is missing from some --qkv inputs");
        }
    }

    tca::TableMetadata meta;
    meta.sigma = o.sigma;
    meta.candidates = o.candidates;
    meta.seed = g.seed;
    meta.created_at = g.created_at.value_or(default_created_at());
    const auto result = tca::calibrate_model(samples, candidates, params, meta, g.jobs);
    tca::write_table(o.out, result.table);

    std::size_t fallbacks = 0;
    for (const auto& [key, entry] : result.table.entries) {
        if (entry.fallback) {
            ++fallbacks;
            spdlog::warn("head {}: no candidate reached tau, using the densest", tca::to_string(key));
        }
        spdlog::info("head {}: candidate {} score {:.6f} kept {}", tca::to_string(key),
                     entry.candidate_index, entry.aggregated_score, entry.kept_count);
    }
    std::cout << "calibrated " << result.table.entries.size() << " head(s), " << fallbacks
              << " fallback(s) -> " << o.out << '\n';
    return kOk;
}

int cmd_run(const RunOptions& o, const GlobalOptions& g) {
    const auto table = tca::read_table(o.table);
    const auto heads = load_heads(o.qkv);
    const auto format = tca::parse_report_format(o.report_format);

    tca::SessionOptions so;
    so.decode_steps = o.decode_steps;
    so.seed = tca::Seed{g.seed};
    so.oracle = !o.no_oracle;
    so.jobs = g.jobs;
    const auto start = std::chrono::steady_clock::now();
    const auto trace = tca::run_session(heads, table, so);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

    const auto& front = heads.front().inputs;
    const std::size_t length = front.length();
    const std::size_t window_eff = std::min(table.metadata.window, length);
    std::vector<std::size_t> retained;
    for (const auto& h : trace.heads) retained.push_back(h.global_count + h.local_count - window_eff);

    tca::RunReport report;
    report.config = {
        {"qkv", o.qkv},
        {"table", o.table},
        {"heads", std::to_string(heads.size())},
        {"length", std::to_string(length)},
        {"head_dim", std::to_string(front.head_dim())},
        {"block_size", std::to_string(table.metadata.block_size)},
        {"window", std::to_string(table.metadata.window)},
        {"alpha", std::to_string(table.metadata.alpha)},
        {"index", std::string(tca::to_string(table.metadata.index))},
        {"decode_steps", std::to_string(o.decode_steps)},
        {"seed", std::to_string(g.seed)},
        {"oracle", so.oracle ? "on" : "off"},
    };
    report.heads = trace.heads;
    report.cost = tca::cost_model(length, front.head_dim(), heads.size(), retained,
                                  table.metadata.window, table.metadata.block_size);
    report.measured = trace.prefill_flops;
    report.decode_steps = o.decode_steps;
    report.final_cache_size = trace.records.back().cache_size;
    if (o.timings) report.session_seconds = elapsed.count();

    if (!o.trace.empty()) write_output(o.trace, tca::serialize_trace(trace));
    if (!o.report.empty()) tca::emit_report(report, format, o.report);
    if (o.report.empty() || o.report != "-") {
        std::printf("heads %zu  length %zu  flop_ratio %.6f  kv_ratio %.6f  final_cache %zu\n",
                    heads.size(), length, report.cost.flop_ratio(), report.cost.kv_ratio(),
                    report.final_cache_size);
    }
    return kOk;
}

int cmd_verify(const VerifyOptions& o, const GlobalOptions& g) {
    const auto table = tca::read_table(o.table);
    const auto heads = load_heads(o.qkv);
    const auto params = table.selection_params();
    const bool csv = o.format == "csv";
    if (!csv && o.format != "json") throw tca::ParameterError("--format must be json or csv");
    if (o.bound != "tight" && o.bound != "loose" && o.bound != "sound") {
        throw tca::ParameterError("--bound must be tight, loose or sound");
    }

    std::vector<tca::BoundReport> reports(heads.size());
    tca::parallel_for(heads.size(), g.jobs, [&](std::size_t h) {
        const auto& inp = heads[h].inputs;
        const auto& entry = table.at(heads[h].key);
        const auto sel = tca::select_core_tokens(inp, entry.chosen, params);
        const std::size_t L = inp.length();
        std::vector<tca::QueryKeptSet> pairs;
        for (std::size_t i = 0; i < L; ++i) pairs.push_back({i, tca::prefill_visible_set(sel, i)});
        // Extra seeded kept sets: each visible key survives with a per-instance rate.
        tca::Rng rng(tca::Seed{tca::mix_seed(g.seed, h)});
        for (std::size_t n = 0; n < o.instances; ++n) {
            const std::size_t q = rng.below(L);
            const double rate = rng.uniform01();
            std::vector<std::size_t> kept;
            for (std::size_t j = 0; j < q; ++j) {
                if (rng.uniform01() < rate) kept.push_back(j);
            }
            kept.push_back(q);
            pairs.push_back({q, tca::TokenIndexSet::from_sorted(std::move(kept), L)});
        }
        reports[h] = tca::verify_bounds(inp, pairs, tca::Causal::on);
    });
    tca::BoundReport merged;
    for (const auto& r : reports) tca::merge_reports(merged, r);

    if (!o.out.empty()) {
        write_output(o.out, csv ? tca::bound_report_csv(merged) : tca::bound_report_json(merged));
    }
    const auto& s = merged.summary;
    std::printf("checked %zu  tight_violations %zu  identity_failures %zu  loose_violations %zu  "
                "sound_violations %zu  tv_failures %zu  max_gamma %.6g  max_violation %.3g\n",
                s.checked, s.tight_violations, s.identity_failures, s.loose_violations,
                s.sound_violations, s.tv_failures, s.max_gamma, s.max_violation);
    const bool holds = o.bound == "tight" ? s.all_hold()
                       : o.bound == "loose" ? s.loose_hold()
                                            : s.sound_hold();
    if (!holds) {
        spdlog::error("{} error bound violated", o.bound);
        return kContractViolation;
    }
    return kOk;
}

int cmd_bench(BenchOptions o) {
    if (o.sweep) {
        for (std::size_t L = 1024; L <= 131072; L *= 2) o.lengths.push_back(L);
    }
    if (o.lengths.empty()) throw tca::ParameterError("bench needs --length or --sweep");
    if (!(o.global_fraction >= 0.0 && o.global_fraction <= 1.0)) {
        throw tca::ParameterError("--global-fraction must lie in [0, 1]");
    }
    const bool json = o.format == "json";
    if (!json && o.format != "csv") throw tca::ParameterError("--format must be csv or json");

    std::string out = json ? "[\n" : "length,full_flops,sparse_flops,overhead_flops,flop_ratio,"
                                     "kv_bytes_full,kv_bytes_sparse,retained_fraction\n";
    char line[512];
    for (std::size_t n = 0; n < o.lengths.size(); ++n) {
        const std::size_t L = o.lengths[n];
        const std::size_t w_eff = std::min(o.window, L);
        const auto global =
            static_cast<std::size_t>(o.global_fraction * static_cast<double>(L - w_eff));
        const std::vector<std::size_t> retained(o.heads, global);
        const auto c = tca::cost_model(L, o.dim, o.heads, retained, o.window, o.block);
        const char* fmt = json
            ? "  {\"length\": %zu, \"full_flops\": %llu, \"sparse_flops\": %llu, "
              "\"overhead_flops\": %llu, \"flop_ratio\": %.17g, \"kv_bytes_full\": %llu, "
              "\"kv_bytes_sparse\": %llu, \"retained_fraction\": %.17g}%s\n"
            : "%zu,%llu,%llu,%llu,%.17g,%llu,%llu,%.17g%s\n";
        std::snprintf(line, sizeof line, fmt, L, static_cast<unsigned long long>(c.full_flops),
                      static_cast<unsigned long long>(c.sparse_flops),
                      static_cast<unsigned long long>(c.overhead_flops), c.flop_ratio(),
                      static_cast<unsigned long long>(c.kv_bytes_full),
                      static_cast<unsigned long long>(c.kv_bytes_sparse), c.retained_fraction,
                      json && n + 1 < o.lengths.size() ? "," : "");
        out += line;
    }
    if (json) out += "]\n";
    write_output(o.out, out);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training-free core-context sparse attention: calibration, sparse prefill/decode, "
                 "bound verification and cost accounting."};
    app.require_subcommand(1);
    app.footer(
        "Exit codes: 0 success, 2 invalid arguments, 3 contract violation, 4 IO error.\n"
        "Environment: TCA_LOG_LEVEL=error|warn|info|debug (default warn).");

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Seed for all randomness")->default_val(0);
    app.add_option("--jobs", g.jobs, "Worker threads (output does not depend on it)")
        ->default_val(1)
        ->check(CLI::PositiveNumber);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Write synthetic Q/K/V tensor files");
    gen_cmd->add_option("--family", gen.family,
                        "uniform|bipolar|terminal_bias|attention_sink|sparse_activation")
        ->default_val("uniform");
    gen_cmd->add_option("--length", gen.length, "Sequence length L (>= 4)")->default_val(512);
    gen_cmd->add_option("--dim", gen.dim, "Head dimension (>= 2)")->default_val(64);
    gen_cmd->add_option("--seed", gen.seed, "Generator seed")->default_val(0);
    gen_cmd->add_option("--intensity", gen.intensity, "Pattern strength in (0, 1]")->default_val(0.9);
    gen_cmd->add_option("--layers", gen.layers, "Layers to generate")->default_val(1)->check(CLI::PositiveNumber);
    gen_cmd->add_option("--heads", gen.heads, "Heads per layer")->default_val(1)->check(CLI::PositiveNumber);
    gen_cmd->add_option("--out", gen.out, "Output prefix; writes <out>.q.tcat, .k.tcat, .v.tcat")
        ->required();

    CalibrateOptions cal;
    auto* cal_cmd = app.add_subcommand("calibrate", "Choose a sparsity configuration per head");
    cal_cmd->add_option("--qkv", cal.qkv, "Q/K/V prefix; repeat for more samples")->required();
    cal_cmd->add_option("--block", cal.block, "Block size b")->default_val(128);
    cal_cmd->add_option("--window", cal.window, "Local window w")->default_val(4096);
    cal_cmd->add_option("--tau", cal.tau, "Aggregated score threshold")->default_val(0.9);
    cal_cmd->add_option("--sigma", cal.sigma, "Log-Gaussian width")->default_val(1.0);
    cal_cmd->add_option("--candidates", cal.candidates, "Number of candidates M")->default_val(14);
    cal_cmd->add_option("--alpha", cal.alpha, "Redundancy mix weight")->default_val(0.5);
    cal_cmd->add_option("--index", cal.index, "hhi|entropy")->default_val("hhi");
    cal_cmd->add_option("--out", cal.out, "Head configuration table (JSON)")->required();
    cal_cmd->add_option_function<std::string>(
        "--created-at", [&g](const std::string& s) { g.created_at = s; },
        "Timestamp recorded in the table (default: SOURCE_DATE_EPOCH or the epoch)");
    cal_cmd->add_option("--seed", g.seed, "Seed recorded in the table");

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Prefill + decode session with trace and report");
    run_cmd->add_option("--qkv", run.qkv, "Q/K/V prefix")->required();
    run_cmd->add_option("--table", run.table, "Head configuration table")->required();
    run_cmd->add_option("--decode-steps", run.decode_steps, "Decode steps per head")->default_val(0);
    run_cmd->add_option("--seed", g.seed, "Seed of the decode token stream");
    run_cmd->add_option("--trace", run.trace, "Step trace output (JSON lines; '-' for stdout)");
    run_cmd->add_option("--report", run.report, "Run report output");
    run_cmd->add_option("--report-format", run.report_format,
                        "text|csv|json; csv columns: section,layer,head,metric,value")
        ->default_val("json");
    run_cmd->add_flag("--no-oracle", run.no_oracle, "Skip the exact-attention comparison");
    run_cmd->add_flag("--timings", run.timings, "Include wall-clock time in the report");

    VerifyOptions ver;
    auto* ver_cmd = app.add_subcommand("verify", "Check the error bound on the engine's kept sets");
    ver_cmd->add_option("--qkv", ver.qkv, "Q/K/V prefix")->required();
    ver_cmd->add_option("--table", ver.table, "Head configuration table")->required();
    ver_cmd->add_option("--instances", ver.instances, "Extra random kept sets per head")
        ->default_val(0);
    ver_cmd->add_option("--seed", g.seed, "Seed of the random kept sets");
    ver_cmd->add_option("--out", ver.out, "Bound report output ('-' for stdout)");
    ver_cmd->add_option("--format", ver.format,
                        "json|csv; csv columns: query,gamma,l1_error,loose_bound,tight_bound,"
                        "term2,prob_l1,identity_residual,holds_loose,holds_tight,tv_residual,"
                        "linf_error,row_l1_bound,holds_sound")
        ->default_val("json");
    ver_cmd->add_option("--bound", ver.bound,
                        "tight: L1 error <= gamma(2-gamma)|V|inf and |s-s~|1 = gamma(2-gamma); "
                        "loose: L1 error <= 2 gamma |V|inf; "
                        "sound: max error <= 2 gamma |V|inf, L1 error <= 2 gamma max_j |V_j|1, "
                        "|s-s~|1 = 2 gamma")
        ->default_val("tight");

    BenchOptions bench;
    auto* bench_cmd = app.add_subcommand("bench", "Analytic cost table across lengths");
    bench_cmd->add_option("--length", bench.lengths, "Sequence length; repeatable");
    bench_cmd->add_flag("--sweep", bench.sweep, "Add lengths 1024, 2048, ..., 131072");
    bench_cmd->add_option("--dim", bench.dim, "Head dimension")->default_val(64);
    bench_cmd->add_option("--heads", bench.heads, "Heads")->default_val(1);
    bench_cmd->add_option("--window", bench.window, "Local window w")->default_val(4096);
    bench_cmd->add_option("--block", bench.block, "Block size b")->default_val(128);
    bench_cmd->add_option("--global-fraction", bench.global_fraction,
                          "Share of the pre-window context kept as global tokens")
        ->default_val(0.0625);
    bench_cmd->add_option("--format", bench.format,
                          "csv|json; csv columns: length,full_flops,sparse_flops,overhead_flops,"
                          "flop_ratio,kv_bytes_full,kv_bytes_sparse,retained_fraction")
        ->default_val("csv");
    bench_cmd->add_option("--out", bench.out, "Output file (default stdout)");

    for (auto* sub : {cal_cmd, run_cmd, ver_cmd}) {
        sub->add_option("--jobs", g.jobs, "Worker threads (output does not depend on it)")
            ->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalidArgs;
    }

    try {
        configure_logging();
        if (*gen_cmd) return cmd_gen(gen);
        if (*cal_cmd) return cmd_calibrate(cal, g);
        if (*run_cmd) return cmd_run(run, g);
        if (*ver_cmd) return cmd_verify(ver, g);
        if (*bench_cmd) return cmd_bench(bench);
    } catch (const tca::ContractViolation& e) {
        std::fprintf(stderr, "contract violation: %s\n", e.what());
        return kContractViolation;
    } catch (const tca::TensorFileError& e) {
        std::fprintf(stderr, "tensor file error (%s): %s\n",
                     std::string(tca::to_string(e.code())).c_str(), e.what());
        return kIoError;
    } catch (const tca::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kIoError;
    } catch (const tca::Error& e) {
        // ShapeError, ParameterError, ConfigError: the inputs do not fit together.
        std::fprintf(stderr, "invalid arguments: %s\n", e.what());
        return kInvalidArgs;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kInternal;
    }
    return kInvalidArgs;
}
