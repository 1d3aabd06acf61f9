//! End-to-end acceptance criteria.
//!
//! Prints one PASS/FAIL line per criterion and exits nonzero if any fail.
//! `ACCEPTANCE_ONLY=name,name` restricts the run to the named criteria.
//!
//! Sweep criteria train for `SWEEP_STEPS` steps per run; the convergence
//! and initialization criteria use the full default episode length.

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use rand::Rng;

use risfd::files::{read_csv, RewardRow, REWARD_HEADER};
use risfd::scenario::{run_point, run_scenario, ExperimentSpec, Scenario, Scheme};
use risfd::summarize::convergence_step;
use risfd::Settings;
use risfd_core::agents::AgentConfig;
use risfd_core::channel::{sample_channel_set, ChannelParams, Geometry, Sizes};
use risfd_core::env::{decode_action, random_action, EnvConfig};
use risfd_core::neural::Mlp;
use risfd_core::rng::{indexed, stream, Stream};
use risfd_core::system::{dbm_to_watts, evaluate, oracle, HwiConfig, NoiseConfig, SystemParams};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const SWEEP_STEPS: usize = 5000;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sinr_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut where_ = String::new();
    for c in 0..5u64 {
        let mut r = indexed(2024, c);
        let sizes = Sizes {
            k: r.random_range(1..=2),
            l: r.random_range(1..=2),
            m: r.random_range(2..=8),
            nt: r.random_range(1..=4),
            nr: r.random_range(1..=4),
        };
        let g = Geometry::sample(&mut r, sizes.k, sizes.l);
        let ch = sample_channel_set(&mut r, &g, &ChannelParams::default(), &sizes).unwrap();
        let p_max = dbm_to_watts(r.random_range(10.0..40.0));
        let action = random_action(&mut r, &sizes, p_max);
        let params = SystemParams {
            hwi: HwiConfig {
                kappa_tx_bs: r.random_range(0.0..0.1),
                kappa_rx_bs: r.random_range(0.0..0.1),
                kappa_tx_user: (0..sizes.k).map(|_| r.random_range(0.0..0.1)).collect(),
                kappa_rx_user: (0..sizes.k).map(|_| r.random_range(0.0..0.1)).collect(),
                rho_si: r.random_range(0.0..1.0),
            },
            noise: NoiseConfig::default(),
            user_powers: (0..sizes.k).map(|_| r.random_range(0.01..0.2)).collect(),
            p_max,
        };
        let closed = evaluate(&ch, &action, &params).unwrap();
        let est = oracle::estimate(&mut stream(c, Stream::Channel), &ch, &action, &params, 1_000_000).unwrap();
        let mut check = |name: String, mc: f64, cf: f64| {
            let e = rel(mc, cf);
            if e > worst {
                worst = e;
                where_ = name;
            }
        };
        let (sb, ss, sd, su) = (est.sinr_b(), est.sinr_s(), est.sinr_e_down(), est.sinr_e_up());
        for k in 0..sizes.k {
            check(format!("config {c} user {k}"), sb[k], closed.sinr_b[k]);
            check(format!("config {c} bs {k}"), ss[k], closed.sinr_s[k]);
            for l in 0..sizes.l {
                check(format!("config {c} eve {l} down {k}"), sd[k][l], closed.sinr_e_down[k][l]);
                check(format!("config {c} eve {l} up {k}"), su[k][l], closed.sinr_e_up[k][l]);
            }
        }
    }
    outcome(worst <= 0.02, format!("max relative error {worst:.4} ({where_}), limit 0.02"))
}

/// Worst relative mismatch, denominators floored at 1e-6.
fn gradient_error(net: &Mlp, batch: usize, seed: u64) -> (f64, usize) {
    let mut r = indexed(seed, 1);
    let x: Vec<f64> = (0..batch * net.input_dim()).map(|_| r.random_range(-1.5..1.5)).collect();
    let c: Vec<f64> = (0..batch * net.output_dim()).map(|_| r.random_range(-1.0..1.0)).collect();
    let loss = |n: &Mlp, x: &[f64]| -> f64 {
        let out = n.forward_batch(x, batch).unwrap();
        out.output().iter().zip(&c).map(|(a, b)| a * b).sum()
    };
    let cache = net.forward_batch(&x, batch).unwrap();
    let g = net.backward(&cache, &c).unwrap();
    let h = 1e-5;
    let err = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
    let mut worst = 0.0f64;
    let mut probe = net.clone();
    for i in 0..net.param_count() {
        let p0 = probe.params()[i];
        probe.params_mut()[i] = p0 + h;
        let up = loss(&probe, &x);
        probe.params_mut()[i] = p0 - h;
        let down = loss(&probe, &x);
        probe.params_mut()[i] = p0;
        worst = worst.max(err(g.params[i], (up - down) / (2.0 * h)));
    }
    let mut xp = x.clone();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let up = loss(net, &xp);
        xp[i] = x[i] - h;
        let down = loss(net, &xp);
        xp[i] = x[i];
        worst = worst.max(err(g.input[i], (up - down) / (2.0 * h)));
    }
    (worst, net.param_count() + x.len())
}

fn gradients() -> Outcome {
    let env = EnvConfig::default();
    let (ds, da) = (env.state_dim(), env.action_dim());
    let cfg = AgentConfig::default();
    let actor = Mlp::init_uniform(&mut stream(5, Stream::NetworkInit), cfg.actor_architecture(ds, da));
    let critic = Mlp::init_uniform(&mut stream(6, Stream::NetworkInit), cfg.critic_architecture(ds, da));
    let (ea, na) = gradient_error(&actor, 2, 7);
    let (ec, nc) = gradient_error(&critic, 2, 8);
    outcome(
        ds == 92 && da == 32 && ea <= 1e-4 && ec <= 1e-4,
        format!("D_s={ds} D_a={da}; actor {na} entries max rel {ea:.2e}; critic {nc} entries max rel {ec:.2e}; limit 1e-4"),
    )
}

fn constraints() -> Outcome {
    let sizes = Sizes::default();
    let p_max = dbm_to_watts(20.0);
    let mut r = stream(9, Stream::Exploration);
    let (mut over, mut worst_mod) = (0usize, 0.0f64);
    for i in 0..10_000 {
        let span = if i % 2 == 0 { 1.0 } else { 5.0 };
        let flat: Vec<f64> = (0..32).map(|_| r.random_range(-span..=span)).collect();
        let a = decode_action(&flat, &sizes, p_max).unwrap();
        if a.w.frob_norm_sqr() > p_max {
            over += 1;
        }
        let th = a.theta_matrix();
        for m in 0..sizes.m {
            worst_mod = worst_mod.max((th[(m, m)].norm() - 1.0).abs());
        }
    }
    outcome(
        over == 0 && worst_mod <= 1e-9,
        format!("10000 actions: {over} over budget, max ||theta|-1| {worst_mod:.1e}"),
    )
}

fn read_rewards(path: &Path) -> HashMap<u64, Vec<f64>> {
    let rows: Vec<RewardRow> = read_csv(path, &REWARD_HEADER).unwrap();
    let mut out: HashMap<u64, Vec<f64>> = HashMap::new();
    for r in rows {
        out.entry(r.seed).or_default().push(r.instant_reward);
    }
    out
}

fn convergence() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::new(Scenario::Convergence, Settings::default(), dir.path());
    spec.seeds = SEEDS.to_vec();
    run_scenario(&spec).unwrap();
    let runs = read_rewards(&dir.path().join("convergence_ddpg_fd_rewards.csv"));
    let (mut gains, mut early) = (0, 0);
    let mut parts = Vec::new();
    for seed in SEEDS {
        let x = &runs[&seed];
        assert_eq!(x.len(), 20_000);
        let head = mean(&x[..500]);
        let tail = mean(&x[19_000..20_000]);
        let cross = convergence_step(x, 500);
        gains += (tail >= 1.5 * head) as usize;
        early += (cross < 12_000) as usize;
        parts.push(format!("s{seed}: x{:.2} @{cross}", tail / head));
    }
    outcome(
        gains >= 4 && early >= 3,
        format!("gain>=50% in {gains}/5 (need 4), 95% crossing <12000 in {early}/5 (need 3); {}", parts.join(", ")),
    )
}

/// Seed-mean best SSR per (overrides, scheme), computed once.
struct SweepCache {
    runs: HashMap<String, f64>,
}

impl SweepCache {
    fn mean_best(&mut self, overrides: &[&str], scheme: Scheme) -> f64 {
        let key = format!("{}|{}", overrides.join(","), scheme.name());
        if let Some(&v) = self.runs.get(&key) {
            return v;
        }
        let mut s = Settings::default();
        s.agent.steps = SWEEP_STEPS;
        s.apply_overrides(overrides).unwrap();
        let res = run_point(&s, scheme, &SEEDS, None).unwrap();
        let v = mean(&res.iter().map(|r| r.log.best_reward).collect::<Vec<_>>());
        self.runs.insert(key, v);
        v
    }
}

fn baseline_ordering(c: &mut SweepCache) -> Outcome {
    let ddpg = c.mean_best(&["power.p_max=20dBm"], Scheme::DdpgFd);
    let fixed = c.mean_best(&["power.p_max=20dBm"], Scheme::FixedPhaseFd);
    outcome(ddpg > fixed, format!("ddpg_fd {ddpg:.4} vs fixed_phase_fd {fixed:.4} at 20 dBm"))
}

fn power_monotonicity(c: &mut SweepCache) -> Outcome {
    let v: Vec<f64> = ["power.p_max=10dBm", "power.p_max=20dBm", "power.p_max=30dBm"]
        .iter()
        .map(|o| c.mean_best(&[o], Scheme::DdpgFd))
        .collect();
    outcome(
        v[0] <= v[1] && v[1] <= v[2],
        format!("ddpg_fd at 10/20/30 dBm: {:.4} / {:.4} / {:.4}", v[0], v[1], v[2]),
    )
}

fn hwi_degradation(c: &mut SweepCache) -> Outcome {
    let v: Vec<f64> = ["hwi.kappa=0.01", "hwi.kappa=0.05", "hwi.kappa=0.1"]
        .iter()
        .map(|k| c.mean_best(&["power.p_max=30dBm", k], Scheme::DdpgFd))
        .collect();
    let hd = c.mean_best(&["power.p_max=30dBm", "hwi.kappa=0.01"], Scheme::DdpgHd);
    outcome(
        v[0] >= v[1] && v[1] >= v[2] && v[0] > hd,
        format!(
            "ddpg_fd at kappa 0.01/0.05/0.1: {:.4} / {:.4} / {:.4}; ddpg_hd at 0.01: {hd:.4}",
            v[0], v[1], v[2]
        ),
    )
}

fn ris_size(c: &mut SweepCache) -> Outcome {
    let m8 = c.mean_best(&["power.p_max=10dBm", "hwi.kappa=0.01", "system.m=8"], Scheme::DdpgFd);
    let m16 = c.mean_best(&["power.p_max=10dBm", "hwi.kappa=0.01", "system.m=16"], Scheme::DdpgFd);
    outcome(m16 > m8, format!("M=16 {m16:.4} vs M=8 {m8:.4} at 10 dBm"))
}

fn init_robustness() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::new(Scenario::InitRobustness, Settings::default(), dir.path());
    spec.seeds = vec![0];
    spec.values = Some(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    let out = run_scenario(&spec).unwrap();
    let finals: Vec<f64> = out.results.iter().map(|r| *r.log.average.last().unwrap()).collect();
    let m = mean(&finals);
    let worst = finals.iter().map(|f| rel(*f, m)).fold(0.0, f64::max);
    let list: Vec<String> = finals.iter().map(|f| format!("{f:.4}")).collect();
    outcome(
        worst <= 0.15,
        format!("final averages [{}], mean {m:.4}, max deviation {:.1}% (limit 15%)", list.join(", "), 100.0 * worst),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let mut s = Settings::default();
    s.apply_overrides(&["agent.steps=300", "agent.batch=32"]).unwrap();
    let scenarios = [
        (Scenario::Convergence, vec![Scheme::DdpgFd]),
        (Scenario::SsrVsPmax, vec![Scheme::DdpgFd, Scheme::Td3Fd, Scheme::FixedPhaseFd, Scheme::DdpgHd, Scheme::Random]),
        (Scenario::InitRobustness, vec![Scheme::DdpgFd]),
    ];
    let run = |threads: usize| {
        let dir = tempfile::tempdir().unwrap();
        for (sc, schemes) in &scenarios {
            let mut spec = ExperimentSpec::new(*sc, s.clone(), dir.path());
            spec.seeds = vec![0, 1];
            spec.schemes = schemes.clone();
            spec.threads = Some(threads);
            run_scenario(&spec).unwrap();
        }
        dir_bytes(dir.path())
    };
    let (a, b) = (run(1), run(3));
    let same = a == b;
    outcome(same && !a.is_empty(), format!("{} files compared across reruns (1 vs 3 threads), identical: {same}", a.len()))
}

fn main() {
    let only: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').map(|s| s.trim().to_owned()).collect());
    let wanted = |name: &str| only.as_ref().is_none_or(|o| o.iter().any(|n| n == name));
    let mut cache = SweepCache { runs: HashMap::new() };
    type Criterion<'a> = (&'static str, Box<dyn FnMut() -> Outcome + 'a>);
    let mut failed = 0;
    let mut ran = 0;
    {
        let cache = std::cell::RefCell::new(&mut cache);
        let criteria: Vec<Criterion> = vec![
            ("sinr_oracle", Box::new(sinr_oracle)),
            ("gradient_check", Box::new(gradients)),
            ("constraint_satisfaction", Box::new(constraints)),
            ("convergence", Box::new(convergence)),
            ("baseline_ordering", Box::new(|| baseline_ordering(&mut cache.borrow_mut()))),
            ("power_monotonicity", Box::new(|| power_monotonicity(&mut cache.borrow_mut()))),
            ("hwi_degradation", Box::new(|| hwi_degradation(&mut cache.borrow_mut()))),
            ("ris_size_benefit", Box::new(|| ris_size(&mut cache.borrow_mut()))),
            ("init_robustness", Box::new(init_robustness)),
            ("determinism", Box::new(determinism)),
        ];
        for (name, mut f) in criteria {
            if !wanted(name) {
                continue;
            }
            ran += 1;
            let t = Instant::now();
            let o = f();
            let verdict = if o.passed { "PASS" } else { "FAIL" };
            println!("{verdict} {name}: {} [{:.0}s]", o.detail, t.elapsed().as_secs_f64());
            failed += (!o.passed) as usize;
        }
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
