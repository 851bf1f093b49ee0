// Acceptance suite: one line per criterion, PASS or FAIL, nonzero exit if any
// criterion fails. Criteria 1-5, 7 are numeric gates on the library; 6 is the
// learning-efficacy experiment; 8 shells out to the CLI binary and compares
// artifact bytes across reruns.
//
// Usage: acceptance [--cli PATH] [--tmp DIR] [--only N[,N...]]

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "golden_rbc.hpp"
#include "mgrid/config.hpp"
#include "mgrid/kpi.hpp"
#include "mgrid/ppo.hpp"
#include "mgrid/rbc.hpp"
#include "mgrid/trajectory.hpp"

namespace fs = std::filesystem;
using namespace mgrid;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

std::string g_cli;
fs::path g_tmp;

// ---------------------------------------------------------------- criterion 1
bool criterion1_physics_invariants(std::string& detail) {
    Timer timer;
    SynthConfig scfg;
    scfg.days = 90;
    scfg.seed = 1001;
    auto sc = std::make_shared<Scenario>(synth_scenario(scfg));

    EnvConfig cfg;
    cfg.scenario = sc;
    cfg.horizon = sc->size();
    cfg.fleet.grid.outage_prob = 0.2;
    cfg.fleet.grid.import_max_kw = 80.0;
    cfg.fleet.grid.export_max_kw = 40.0;
    cfg.seed = 2;

    Rng rng(77);
    Environment env(cfg);
    env.reset();
    const auto& b = cfg.fleet.battery;
    long violations = 0;
    const long total = 1000000;
    for (long steps = 0; steps < total; ++steps) {
        if (env.done()) {
            cfg.seed += 1;
            env = Environment(cfg);
            env.reset();
        }
        MgAction a{rng.uniform(-150.0, 150.0), rng.uniform(-20.0, 120.0)};
        auto [s, rec] = env.step(a);
        const bool ok = std::fabs(rec.balance_residual_kw()) < 1e-9 && rec.soc_after >= b.soc_min &&
                        rec.soc_after <= b.soc_max && rec.p_grid_import_kw * rec.p_grid_export_kw == 0.0 &&
                        (rec.grid_up || (rec.p_grid_import_kw == 0.0 && rec.p_grid_export_kw == 0.0));
        if (!ok) ++violations;
    }
    std::ostringstream os;
    os << total << " random steps, " << violations << " violations, " << timer.seconds() << " s";
    detail = os.str();
    return violations == 0 && timer.seconds() < 60.0;
}

// ---------------------------------------------------------------- criterion 2
bool rel_close(double a, double b, double tol) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
    return std::fabs(a - b) <= tol * scale;
}

bool criterion2_equation_oracles(std::string& detail) {
    Rng rng(2002);
    int failures = 0;
    const double tol = 1e-12;

    for (int i = 0; i < 1000; ++i) {
        PvParams pv{rng.uniform(1.0, 500.0), rng.uniform(0.05, 1.0), rng.uniform(0.5, 1.5)};
        const double g = rng.uniform(0.0, 1.5);
        if (!rel_close(pv_power(pv, g), pv.rated_kw * (g / pv.stc_irradiance) * pv.derating, tol)) ++failures;
    }
    for (int i = 0; i < 1000; ++i) {
        WindParams w;
        w.air_density = rng.uniform(1.0, 1.4);
        w.swept_area = rng.uniform(10.0, 500.0);
        w.power_coeff = rng.uniform(0.05, 0.593);
        w.rated_kw = rng.uniform(50.0, 5000.0);
        w.cut_in_ms = rng.uniform(2.0, 4.0);
        w.cut_out_ms = rng.uniform(20.0, 30.0);
        const double v = rng.uniform(0.0, 35.0);
        double expected;
        if (v < w.cut_in_ms || v >= w.cut_out_ms) expected = 0.0;
        else expected = std::min(0.5 * w.air_density * w.swept_area * w.power_coeff * v * v * v / 1000.0, w.rated_kw);
        if (!rel_close(wind_power(w, v), expected, tol)) ++failures;
    }
    for (int i = 0; i < 1000; ++i) {
        DieselParams d;
        d.rated_kw = rng.uniform(10.0, 200.0);
        d.max_kw = d.rated_kw;
        d.slope_l_per_kwh = rng.uniform(0.1, 0.5);
        d.intercept_l_per_h_kw = rng.uniform(0.0, 0.2);
        d.fuel_price = rng.uniform(0.5, 3.0);
        const double p = rng.uniform(1e-6, d.max_kw);
        const double dt = rng.uniform(0.25, 2.0);
        const auto r = diesel_fuel_and_cost(d, p, dt);
        const double fuel = (d.slope_l_per_kwh * p + d.intercept_l_per_h_kw * d.rated_kw) * dt;
        if (!rel_close(r.fuel_l, fuel, tol) || !rel_close(r.cost, fuel * d.fuel_price, tol)) ++failures;
    }
    for (int i = 0; i < 1000; ++i) {
        ConverterParams c{rng.uniform(0.5, 1.0), rng.uniform(10.0, 500.0)};
        const double p = rng.uniform(0.0, 700.0);
        if (!rel_close(converter_limit(c, p), std::min(c.efficiency * p, c.rated_kw), tol)) ++failures;
    }
    for (int i = 0; i < 1000; ++i) {
        BatteryParams b;
        b.capacity_kwh = rng.uniform(10.0, 1000.0);
        b.dod = rng.uniform(0.1, 1.0);
        if (!rel_close(stored_energy(b), b.dod * b.capacity_kwh, tol)) ++failures;
    }
    detail = "5000 random draws across the five device equations, " + std::to_string(failures) + " failures";
    return failures == 0;
}

// ---------------------------------------------------------------- criterion 3
bool criterion3_outage_statistics(std::string& detail) {
    Rng rng(20250810);
    int down = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        if (!sample_outage_up(rng, 0.01)) ++down;
    const double freq = static_cast<double>(down) / n;
    std::ostringstream os;
    os << n << " draws at p=0.01, frequency " << freq;
    detail = os.str();
    return freq >= 0.008 && freq <= 0.012;
}

// ---------------------------------------------------------------- criterion 4
bool criterion4_rbc_golden(std::string& detail) {
    const auto traj = rbc_episode(mgrid::testing::golden_rbc_config());
    const auto& expected = mgrid::testing::golden_rbc_expected();
    if (traj.size() != expected.size()) {
        detail = "golden trace length mismatch";
        return false;
    }
    for (std::size_t t = 0; t < expected.size(); ++t) {
        if (!mgrid::testing::golden_rbc_step_matches(traj[t], expected[t])) {
            detail = "golden trace differs at step " + std::to_string(t);
            return false;
        }
    }

    long grid_up_steps = 0;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        SynthConfig scfg;
        scfg.days = 5;
        scfg.seed = seed;
        auto sc = std::make_shared<Scenario>(synth_scenario(scfg));
        EnvConfig cfg;
        cfg.scenario = sc;
        cfg.horizon = sc->size();
        cfg.seed = seed + 500;
        cfg.fleet.grid.outage_prob = 0.3;
        for (const auto& rec : rbc_episode(cfg)) {
            if (rec.grid_up) {
                ++grid_up_steps;
                if (rec.p_dg_kw != 0.0) {
                    detail = "generator ran while the grid was up (seed " + std::to_string(seed) + ")";
                    return false;
                }
            }
        }
    }
    detail = "5-step golden trace bit-exact; generator idle on all " + std::to_string(grid_up_steps) +
             " fuzzed grid-up steps";
    return true;
}

// ---------------------------------------------------------------- criterion 5
double loss_total(const PolicyNet& net, const RolloutBatch& batch, const std::vector<int>& idx,
                  const std::vector<double>& adv, const TrainConfig& cfg) {
    return ppo_loss(net, batch, idx, adv, cfg, nullptr).total;
}

bool criterion5_ppo_numerics(std::string& detail) {
    Timer timer;

    // clipped surrogate hand values
    if (!rel_close(clipped_objective(1.5, 1.0, 0.2), 1.2, 1e-12) ||
        !rel_close(clipped_objective(0.5, -1.0, 0.2), -0.8, 1e-12) ||
        clipped_objective(1.0, 1.0, 0.2) != 1.0) {
        detail = "clipped objective hand values differ";
        return false;
    }

    // GAE vs discounted-sum oracle at lambda = 1
    {
        Rng rng(55);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t n = 1 + rng.integer(60);
            std::vector<double> r(n), v(n);
            for (std::size_t i = 0; i < n; ++i) {
                r[i] = rng.uniform(-5.0, 5.0);
                v[i] = rng.uniform(-5.0, 5.0);
            }
            const double gamma = rng.uniform(0.5, 1.0);
            const double bootstrap = rng.uniform(-5.0, 5.0);
            const auto out = compute_gae(r, v, bootstrap, gamma, 1.0);
            // at lambda = 1 the sum telescopes to discounted reward-to-go minus V_t
            for (std::size_t t = 0; t < n; ++t) {
                double togo = 0.0, w = 1.0;
                for (std::size_t k = t; k < n; ++k) {
                    togo += w * r[k];
                    w *= gamma;
                }
                togo += w * bootstrap;
                if (std::fabs(out.advantages[t] - (togo - v[t])) > 1e-12 * std::max(1.0, std::fabs(togo))) {
                    detail = "GAE lambda=1 differs from the discounted-sum oracle";
                    return false;
                }
            }
        }
    }

    // analytic gradients vs central finite differences on width-4 networks
    double worst = 0.0;
    for (std::uint64_t seed : {31ULL, 32ULL, 33ULL}) {
        Rng rng(seed);
        PolicyNet net = PolicyNet::make(4, -0.3, rng);
        net.bat_max_kw = 50.0;
        net.dg_max_kw = 60.0;
        for (double& p : net.actor.params()) p += rng.normal(0.0, 0.3);
        for (double& p : net.critic.params()) p += rng.normal(0.0, 0.3);

        RolloutBatch batch;
        std::vector<double> adv;
        std::vector<int> idx;
        for (int i = 0; i < 8; ++i) {
            std::array<double, kObsDim> obs{};
            for (double& o : obs) o = rng.uniform(-1.5, 1.5);
            const auto mean = net.actor.forward(obs);
            std::array<double, kActionDim> u{};
            for (int d = 0; d < kActionDim; ++d) u[d] = mean[d] + std::exp(net.log_std[d]) * rng.normal();
            batch.obs.push_back(obs);
            batch.u.push_back(u);
            batch.log_prob_old.push_back(gaussian_log_prob(u, mean, net.log_std) + rng.uniform(-0.12, 0.12));
            adv.push_back(rng.uniform(0.3, 2.0) * (rng.bernoulli(0.5) ? 1.0 : -1.0));
            batch.advantages.push_back(adv.back());
            batch.returns.push_back(rng.uniform(-2.0, 2.0));
            idx.push_back(i);
        }
        TrainConfig cfg;
        cfg.entropy_coef = 0.01;

        GradBuffers grads(net);
        ppo_loss(net, batch, idx, adv, cfg, &grads);
        const double h = 1e-5;
        auto check_block = [&](std::vector<double>& params, const std::vector<double>& analytic) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                const double save = params[i];
                params[i] = save + h;
                const double up = loss_total(net, batch, idx, adv, cfg);
                params[i] = save - h;
                const double down = loss_total(net, batch, idx, adv, cfg);
                params[i] = save;
                const double numeric = (up - down) / (2.0 * h);
                const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-6});
                worst = std::max(worst, std::fabs(analytic[i] - numeric) / denom);
            }
        };
        check_block(net.actor.params(), grads.actor);
        check_block(net.critic.params(), grads.critic);
        for (int d = 0; d < kActionDim; ++d) {
            const double save = net.log_std[d];
            net.log_std[d] = save + h;
            const double up = loss_total(net, batch, idx, adv, cfg);
            net.log_std[d] = save - h;
            const double down = loss_total(net, batch, idx, adv, cfg);
            net.log_std[d] = save;
            const double numeric = (up - down) / (2.0 * h);
            const double denom = std::max({std::fabs(grads.log_std[d]), std::fabs(numeric), 1e-6});
            worst = std::max(worst, std::fabs(grads.log_std[d] - numeric) / denom);
        }
    }
    std::ostringstream os;
    os << "worst gradient relative error " << worst << ", " << timer.seconds() << " s";
    detail = os.str();
    return worst < 1e-4 && timer.seconds() < 60.0;
}

// ---------------------------------------------------------------- criterion 6
bool criterion6_learning_efficacy(std::string& detail) {
    Timer timer;
    SynthConfig scfg;  // the default 365-day synthetic scenario
    auto sc = std::make_shared<Scenario>(synth_scenario(scfg));

    int passes = 0;
    std::ostringstream os;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        EnvConfig env_cfg;
        env_cfg.scenario = sc;
        env_cfg.horizon = sc->size();
        env_cfg.seed = seed;

        const auto rbc_traj = make_trajectory(rbc_episode(env_cfg), env_cfg, "rbc");
        const auto rbc = compute_kpis(rbc_traj, env_cfg.fleet);

        TrainConfig tcfg;  // defaults: 300k steps
        tcfg.seed = seed;
        tcfg.workers = 2;

        auto [state, log] = train(env_cfg, tcfg);
        const auto ppo_traj = make_trajectory(evaluate(state.net, env_cfg), env_cfg, "ppo");
        const auto ppo = compute_kpis(ppo_traj, env_cfg.fleet);

        const bool cost_ok = ppo.operational_cost <= 0.95 * rbc.operational_cost;
        const bool rel_ok = ppo.reliability_pct >= rbc.reliability_pct;
        const bool util_ok = ppo.renewable_utilization_pct >= rbc.renewable_utilization_pct;
        const bool cyc_ok = ppo.battery_cycles < rbc.battery_cycles;
        const bool ok = cost_ok && rel_ok && util_ok && cyc_ok;
        if (ok) ++passes;
        os << "\n    seed " << seed << (ok ? "  pass" : "  FAIL") << ": cost "
           << (rbc.operational_cost - ppo.operational_cost) / rbc.operational_cost * 100.0 << "% lower"
           << (cost_ok ? "" : " [<5%]") << ", reliability " << rbc.reliability_pct << " -> " << ppo.reliability_pct
           << (rel_ok ? "" : " [worse]") << ", utilization " << rbc.renewable_utilization_pct << " -> "
           << ppo.renewable_utilization_pct << (util_ok ? "" : " [worse]") << ", cycles " << rbc.battery_cycles
           << " -> " << ppo.battery_cycles << (cyc_ok ? "" : " [not lower]");
    }
    os << "\n    " << passes << "/3 seeds pass, " << timer.seconds() << " s";
    detail = os.str();
    return passes >= 2;
}

// ---------------------------------------------------------------- criterion 7
bool criterion7_kpi_improvements(std::string& detail) {
    KpiReport rbc, ppo;
    rbc.scenario_hash = ppo.scenario_hash = 1;
    rbc.reliability_pct = 95.25;
    ppo.reliability_pct = 99.13;
    rbc.renewable_utilization_pct = 47.6;
    ppo.renewable_utilization_pct = 51.9;
    rbc.battery_cycles = 315.38;
    ppo.battery_cycles = 17.0;
    rbc.self_sufficiency_pct = 49.91;
    ppo.self_sufficiency_pct = 66.7;
    rbc.operational_cost = 1.0;
    ppo.operational_cost = 1.0;

    const auto cmp = comparison_report(rbc, ppo);
    const double stated[4] = {4.1, 9.1, 94.6, 33.7};
    const double got[4] = {cmp.improvement_pct[static_cast<int>(Kpi::Reliability)],
                           cmp.improvement_pct[static_cast<int>(Kpi::RenewableUtilization)],
                           cmp.improvement_pct[static_cast<int>(Kpi::BatteryCycles)],
                           cmp.improvement_pct[static_cast<int>(Kpi::SelfSufficiency)]};
    std::ostringstream os;
    bool ok = true;
    for (int i = 0; i < 4; ++i) {
        if (std::fabs(got[i] - stated[i]) > 0.1) ok = false;
        os << (i ? ", " : "") << got[i] << " vs " << stated[i];
    }
    detail = os.str() + " (percentage points)";
    return ok;
}

// ---------------------------------------------------------------- criterion 8
int run_cmd(const std::string& cmd) { return std::system(cmd.c_str()); }

bool same_bytes(const fs::path& a, const fs::path& b, std::string& which) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) {
        which = "missing " + (fa ? b.string() : a.string());
        return false;
    }
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    if (sa.str() != sb.str()) {
        which = a.string() + " differs";
        return false;
    }
    return true;
}

bool criterion8_determinism(std::string& detail) {
    if (g_cli.empty()) {
        detail = "no --cli given";
        return false;
    }
    Timer timer;
    const fs::path root = g_tmp / "determinism";
    fs::remove_all(root);
    fs::create_directories(root);

    const fs::path cfg_path = root / "cfg.json";
    {
        std::ofstream cfg(cfg_path);
        cfg << R"({
  "scenario": {"synth": {"days": 10, "seed": 5}},
  "environment": {"seed": 3},
  "training": {"total_steps": 4096, "rollout_length": 1024, "num_envs": 8, "window_steps": 96,
               "hidden_width": 16, "minibatch_size": 64, "seed": 3, "workers": 2},
  "output_dir": "unused"
})";
    }

    for (const char* side : {"A", "B"}) {
        const fs::path d = root / side;
        fs::create_directories(d);
        const std::string cd = "cd " + d.string() + " && " + g_cli + " ";
        const std::string cfg = " --config " + cfg_path.string();
        if (run_cmd(cd + "gen-scenario --days 20 --seed 9 --out scen.csv > /dev/null") != 0 ||
            run_cmd(cd + "simulate-rbc" + cfg + " --out rbc > /dev/null") != 0 ||
            run_cmd(cd + "train-ppo" + cfg + " --out train > /dev/null") != 0 ||
            run_cmd(cd + "evaluate --checkpoint train/checkpoint.json" + cfg + " --out eval > /dev/null") != 0 ||
            run_cmd(cd + "compare --rbc rbc/trajectory.csv --ppo eval/trajectory.csv --out cmp > /dev/null") != 0) {
            detail = std::string("a command failed on side ") + side;
            return false;
        }
    }

    const char* files[] = {"scen.csv",           "scen.csv.stats.json", "rbc/trajectory.csv",
                           "rbc/kpi.json",       "rbc/resolved_config.json", "train/checkpoint.json",
                           "train/training_log.csv", "eval/trajectory.csv", "eval/kpi.json",
                           "cmp/comparison.json", "cmp/comparison.txt",  "cmp/comparison.svg"};
    for (const char* f : files) {
        std::string which;
        if (!same_bytes(root / "A" / f, root / "B" / f, which)) {
            detail = which;
            return false;
        }
    }
    std::ostringstream os;
    os << sizeof(files) / sizeof(files[0]) << " artifacts byte-identical across reruns, " << timer.seconds() << " s";
    detail = os.str();
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    g_tmp = fs::temp_directory_path() / "mgrid-acceptance";
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--cli" && i + 1 < argc) g_cli = argv[++i];
        else if (arg == "--tmp" && i + 1 < argc) g_tmp = argv[++i];
        else if (arg == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
        } else {
            std::cerr << "usage: acceptance [--cli PATH] [--tmp DIR] [--only N[,N...]]\n";
            return 2;
        }
    }
    fs::create_directories(g_tmp);

    struct Criterion {
        int id;
        const char* name;
        bool (*fn)(std::string&);
    };
    const Criterion criteria[] = {
        {1, "physics invariants over randomized steps", criterion1_physics_invariants},
        {2, "device equations match direct evaluation", criterion2_equation_oracles},
        {3, "outage process frequency", criterion3_outage_statistics},
        {4, "rule-based golden trace and generator discipline", criterion4_rbc_golden},
        {5, "ppo numerics (gradients, gae oracle, clip values)", criterion5_ppo_numerics},
        {6, "learning efficacy vs rule-based control", criterion6_learning_efficacy},
        {7, "kpi improvement direction conventions", criterion7_kpi_improvements},
        {8, "artifact determinism across cli reruns", criterion8_determinism},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        std::string detail;
        bool ok = false;
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (!ok) ++failed;
        std::cout << "criterion " << c.id << " (" << c.name << "): " << (ok ? "PASS" : "FAIL") << " — " << detail
                  << "\n";
        std::cout.flush();
    }
    if (failed) std::cout << failed << " criterion(s) failed\n";
    return failed == 0 ? 0 : 1;
}
