// mgrid command-line runner: scenario generation, rule-based simulation, PPO
// training/evaluation, and KPI comparison, with reproducible seeded artifacts.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mgrid/config.hpp"
#include "mgrid/kpi.hpp"
#include "mgrid/ppo.hpp"
#include "mgrid/rbc.hpp"
#include "mgrid/report.hpp"
#include "mgrid/trajectory.hpp"

namespace fs = std::filesystem;
using namespace mgrid;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path resolve_out(const std::string& out) {
    fs::path p(out);
    if (p.is_relative()) {
        if (const char* root = std::getenv("MGRID_OUT_ROOT")) p = fs::path(root) / p;
    }
    return p;
}

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_json_file(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::string format_csv_double(double v) { return detail::format_double(v); }

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) throw UsageError(std::string(what) + " not found: " + path);
}

void print_kpis(const KpiReport& r) {
    std::cout << "strategy: " << r.strategy << "\n";
    char line[128];
    auto row = [&](const char* label, double v) {
        std::snprintf(line, sizeof(line), "  %-28s %14.3f\n", label, v);
        std::cout << line;
    };
    row("System Reliability (%)", r.reliability_pct);
    row("Battery Cycles", r.battery_cycles);
    row("Self-Sufficiency Ratio (%)", r.self_sufficiency_pct);
    row("Renewable Utilization (%)", r.renewable_utilization_pct);
    row("Operational Cost", r.operational_cost);
}

struct CommonOpts {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
};

RunConfig load_config_with_overrides(const CommonOpts& opts) {
    RunConfig rc;
    if (!opts.config_path.empty()) {
        require_file(opts.config_path, "config file");
        rc = load_run_config(opts.config_path);
    }
    if (opts.seed) {
        rc.env.seed = *opts.seed;
        rc.training.seed = *opts.seed;
    }
    if (!opts.out.empty()) rc.output_dir = opts.out;
    return rc;
}

int cmd_gen_scenario(const SynthConfig& cfg, const std::string& out) {
    const Scenario sc = synth_scenario(cfg);
    const fs::path path = resolve_out(out);
    save_scenario(sc, path.string());
    const ScenarioStats st = scenario_stats(sc);
    nlohmann::json sidecar{{"scenario", synth_to_json(cfg)},
                           {"scenario_hash", detail::hash_hex(scenario_hash(sc))},
                           {"stats", stats_to_json(st)}};
    write_json_file(path.string() + ".stats.json", sidecar);
    std::cout << "wrote " << path.string() << " (" << sc.size() << " rows)\n";
    std::cout << "load total " << st.load_kw.total << " kWh, peak " << st.load_kw.max << " kW\n";
    return 0;
}

int cmd_simulate_rbc(const CommonOpts& opts) {
    RunConfig rc = load_config_with_overrides(opts);
    const EnvConfig env_cfg = rc.make_env_config();
    const fs::path dir = resolve_out(rc.output_dir);
    fs::create_directories(dir);

    const auto traj = make_trajectory(rbc_episode(env_cfg), env_cfg, "rbc");
    const auto kpi = compute_kpis(traj, env_cfg.fleet);

    save_trajectory(traj, (dir / "trajectory.csv").string());
    nlohmann::json kj = kpi_to_json(kpi);
    kj["scenario_stats"] = stats_to_json(scenario_stats(*env_cfg.scenario));
    write_json_file(dir / "kpi.json", kj);
    write_json_file(dir / "resolved_config.json", resolved_config_json(rc, env_cfg));

    print_kpis(kpi);
    std::cout << "artifacts in " << dir.string() << "\n";
    return 0;
}

int cmd_train_ppo(const CommonOpts& opts, long total_steps_override, int rollout_override, int workers_override,
                  const std::string& resume_path) {
    RunConfig rc = load_config_with_overrides(opts);
    if (total_steps_override > 0) rc.training.total_steps = total_steps_override;
    if (rollout_override > 0) rc.training.rollout_length = rollout_override;
    if (workers_override > 0) rc.training.workers = workers_override;
    const EnvConfig env_cfg = rc.make_env_config();
    const fs::path dir = resolve_out(rc.output_dir);
    fs::create_directories(dir);
    write_json_file(dir / "resolved_config.json", resolved_config_json(rc, env_cfg));

    const fs::path log_path = dir / "training_log.csv";
    const bool resuming = !resume_path.empty();
    std::ofstream log_out;
    if (resuming && fs::exists(log_path)) {
        log_out.open(log_path, std::ios::app | std::ios::binary);
    } else {
        log_out.open(log_path, std::ios::binary);
        log_out << "iter,steps,mean_episode_reward,episodes,policy_loss,value_loss,entropy,approx_kl,clip_frac\n";
    }
    if (!log_out) throw std::runtime_error("cannot open training log: " + log_path.string());

    const CheckpointSink sink = [&](const TrainState& state, bool final) {
        const auto j = checkpoint_to_json(state);
        write_json_file(dir / ("checkpoint-" + std::to_string(state.iter) + ".json"), j);
        if (final) write_json_file(dir / "checkpoint.json", j);
    };

    auto append_log = [&](const std::vector<TrainLogRow>& rows) {
        for (const auto& r : rows) {
            log_out << r.iter << ',' << r.steps << ',' << format_csv_double(r.mean_episode_reward) << ','
                    << r.episodes_completed << ',' << format_csv_double(r.loss.policy) << ','
                    << format_csv_double(r.loss.value) << ',' << format_csv_double(r.loss.entropy) << ','
                    << format_csv_double(r.loss.approx_kl) << ',' << format_csv_double(r.loss.clip_frac) << '\n';
        }
        log_out.flush();
    };

    try {
        if (resuming) {
            require_file(resume_path, "checkpoint");
            std::ifstream in(resume_path);
            nlohmann::json j;
            in >> j;
            TrainState state = checkpoint_from_json(j);
            if (total_steps_override > 0) state.cfg.total_steps = total_steps_override;
            if (workers_override > 0) state.cfg.workers = workers_override;
            if (state.steps_done >= state.cfg.total_steps)
                throw UsageError("checkpoint already has " + std::to_string(state.steps_done) +
                                 " steps; raise --total-steps to continue");
            const auto rows = train_loop(state, env_cfg, sink);
            append_log(rows);
            sink(state, true);
            std::cout << "resumed to " << state.steps_done << " steps (" << rows.size() << " updates)\n";
        } else {
            auto [state, rows] = train(env_cfg, rc.training, sink);
            append_log(rows);
            std::cout << "trained " << state.steps_done << " steps (" << rows.size() << " updates)\n";
            if (!rows.empty())
                std::cout << "first-iteration mean episode reward " << rows.front().mean_episode_reward
                          << ", last " << rows.back().mean_episode_reward << "\n";
        }
    } catch (const TrainingDivergence& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        std::cerr << "last periodic checkpoint (if any) is retained in " << dir.string() << "\n";
        return 1;
    }
    std::cout << "artifacts in " << dir.string() << "\n";
    return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& checkpoint_path) {
    require_file(checkpoint_path, "checkpoint");
    RunConfig rc = load_config_with_overrides(opts);
    const EnvConfig env_cfg = rc.make_env_config();
    const fs::path dir = resolve_out(rc.output_dir);
    fs::create_directories(dir);

    std::ifstream in(checkpoint_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("checkpoint parse error: " + std::string(e.what()));
    }
    const TrainState state = checkpoint_from_json(j);

    const auto traj = make_trajectory(evaluate(state.net, env_cfg), env_cfg, "ppo");
    const auto kpi = compute_kpis(traj, env_cfg.fleet);

    save_trajectory(traj, (dir / "trajectory.csv").string());
    nlohmann::json kj = kpi_to_json(kpi);
    kj["scenario_stats"] = stats_to_json(scenario_stats(*env_cfg.scenario));
    write_json_file(dir / "kpi.json", kj);
    write_json_file(dir / "resolved_config.json", resolved_config_json(rc, env_cfg));

    print_kpis(kpi);
    std::cout << "artifacts in " << dir.string() << "\n";
    return 0;
}

int cmd_compare(const std::string& rbc_path, const std::string& ppo_path, const std::string& out) {
    require_file(rbc_path, "rbc trajectory");
    require_file(ppo_path, "ppo trajectory");
    Trajectory rbc_traj, ppo_traj;
    try {
        rbc_traj = load_trajectory(rbc_path);
        ppo_traj = load_trajectory(ppo_path);
    } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
    }
    if (rbc_traj.meta.scenario_hash != ppo_traj.meta.scenario_hash)
        throw UsageError("scenario hash mismatch: " + detail::hash_hex(rbc_traj.meta.scenario_hash) + " vs " +
                         detail::hash_hex(ppo_traj.meta.scenario_hash));

    const auto rbc_kpi = compute_kpis(rbc_traj, rbc_traj.meta.battery_capacity_kwh);
    const auto ppo_kpi = compute_kpis(ppo_traj, ppo_traj.meta.battery_capacity_kwh);
    const auto cmp = comparison_report(rbc_kpi, ppo_kpi);

    const fs::path dir = resolve_out(out);
    fs::create_directories(dir);
    const std::string table = render_comparison_table(cmp);
    write_json_file(dir / "comparison.json", comparison_to_json(cmp));
    write_text(dir / "comparison.txt", table);
    write_text(dir / "comparison.svg", render_comparison_svg(cmp));

    std::cout << table;
    std::cout << "artifacts in " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mgrid: hybrid community microgrid dispatch lab (rule-based and PPO control)"};
    app.require_subcommand(1);

    // gen-scenario
    auto* gen = app.add_subcommand("gen-scenario", "Synthesize an hourly scenario CSV");
    SynthConfig synth;
    std::string gen_out = "scenario.csv";
    std::string tariff = "flat";
    gen->add_option("--days", synth.days, "number of days")->check(CLI::PositiveNumber);
    gen->add_option("--seed", synth.seed, "generator seed");
    gen->add_option("--peak-load", synth.peak_load_kw, "peak load in kW");
    gen->add_option("--clearness-mean", synth.solar_clearness_mean, "mean daily solar clearness");
    gen->add_option("--clearness-std", synth.solar_clearness_std, "clearness standard deviation");
    gen->add_option("--weibull-shape", synth.weibull_shape, "wind Weibull shape");
    gen->add_option("--weibull-scale", synth.weibull_scale, "wind Weibull scale (m/s)");
    gen->add_option("--tariff", tariff, "tariff structure")->check(CLI::IsMember({"flat", "tou"}));
    gen->add_option("--price-buy", synth.price_buy, "import price (currency/kWh)");
    gen->add_option("--price-sell", synth.price_sell, "export price (currency/kWh)");
    gen->add_option("--peak-price-buy", synth.peak_price_buy, "time-of-use peak import price");
    gen->add_option("--peak-start", synth.peak_start_hour, "peak band start hour");
    gen->add_option("--peak-end", synth.peak_end_hour, "peak band end hour");
    gen->add_option("--out", gen_out, "output CSV path");

    // shared options
    auto add_common = [](CLI::App* cmd, CommonOpts& opts) {
        cmd->add_option("--config", opts.config_path, "run configuration JSON");
        cmd->add_option("--out", opts.out, "output directory (overrides config)");
        cmd->add_option("--seed", opts.seed, "seed override for environment and training");
    };

    auto* sim = app.add_subcommand("simulate-rbc", "Run the rule-based controller over the scenario");
    CommonOpts sim_opts;
    add_common(sim, sim_opts);

    auto* trn = app.add_subcommand("train-ppo", "Train the PPO agent");
    CommonOpts trn_opts;
    long trn_steps = 0;
    int trn_rollout = 0, trn_workers = 0;
    std::string trn_resume;
    add_common(trn, trn_opts);
    trn->add_option("--total-steps", trn_steps, "total environment steps")->check(CLI::PositiveNumber);
    trn->add_option("--rollout", trn_rollout, "steps per policy update")->check(CLI::PositiveNumber);
    trn->add_option("--workers", trn_workers, "rollout worker threads")->check(CLI::PositiveNumber);
    trn->add_option("--resume", trn_resume, "checkpoint to continue from");

    auto* evl = app.add_subcommand("evaluate", "Greedy rollout of a trained policy");
    CommonOpts evl_opts;
    std::string evl_ckpt;
    add_common(evl, evl_opts);
    evl->add_option("--checkpoint", evl_ckpt, "trained policy checkpoint")->required();

    auto* cmp = app.add_subcommand("compare", "Compare RBC and PPO trajectories");
    std::string cmp_rbc, cmp_ppo, cmp_out = "comparison";
    cmp->add_option("--rbc", cmp_rbc, "RBC trajectory CSV")->required();
    cmp->add_option("--ppo", cmp_ppo, "PPO trajectory CSV")->required();
    cmp->add_option("--out", cmp_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            synth.tariff = tariff == "tou" ? TariffKind::TimeOfUse : TariffKind::Flat;
            synth.validate();
            return cmd_gen_scenario(synth, gen_out);
        }
        if (sim->parsed()) return cmd_simulate_rbc(sim_opts);
        if (trn->parsed()) return cmd_train_ppo(trn_opts, trn_steps, trn_rollout, trn_workers, trn_resume);
        if (evl->parsed()) return cmd_evaluate(evl_opts, evl_ckpt);
        if (cmp->parsed()) return cmd_compare(cmp_rbc, cmp_ppo, cmp_out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
