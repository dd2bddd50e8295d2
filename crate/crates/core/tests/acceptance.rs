//! Acceptance run on the default configuration: one line per criterion.

use std::fs;
use std::time::{Duration, Instant};

use infocomm::equilibrium::{delta_sweep, non_increasing, verify_epsilon_equilibrium, SweepTable};
use infocomm::expcli::{cmd_sweep, ExperimentConfig, ValidatedConfig};
use infocomm::propcheck::{check_all, CheckConfig, PropertyVerdict};

const RUNTIME_BUDGET: Duration = Duration::from_secs(60);
const RIEMANN_MARGIN: f64 = 0.25;
const ARGMAX_TOL: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-9;
const CONCAVITY_TOL: f64 = 1e-9;
const MIXED_TOL: f64 = 1e-12;
const BRUTE_FORCE_POINTS: usize = 100_000;
const SUPPORT_RATIO_EXPECTED: f64 = 0.9;

struct Outcome {
    failures: usize,
}

impl Outcome {
    fn report(&mut self, n: usize, pass: bool, what: &str, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{} criterion {n:>2}: {what} | {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn verdict<'a>(vs: &'a [PropertyVerdict], id: &str) -> &'a PropertyVerdict {
    vs.iter().find(|v| v.id == id).expect("verdict present")
}

fn summary(vs: &[PropertyVerdict], ids: &[&str]) -> (bool, String) {
    let pass = ids.iter().all(|id| verdict(vs, id).pass);
    let detail = ids
        .iter()
        .map(|id| format!("{id}:{}", verdict(vs, id).n_witnesses))
        .collect::<Vec<_>>()
        .join(" ");
    (pass, format!("witnesses {detail}"))
}

fn default_config() -> ValidatedConfig {
    ExperimentConfig::default().validate().expect("default config is valid")
}

fn sweep_single_threaded(cfg: &ValidatedConfig) -> (SweepTable, Duration) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let spec = infocomm::equilibrium::SweepSpec {
        space: cfg.space,
        kernels: cfg.kernels,
        economy: cfg.economy,
        k_d: cfg.config.sweep.start_k_d,
        k_s: cfg.config.sweep.start_k_s,
        anchor_d: cfg.config.grids.anchor_d,
        anchor_s: cfg.config.grids.anchor_s,
        cell_half_length: cfg.config.community.half_length,
        cell_anchor: cfg.config.community.anchor,
        levels: cfg.config.sweep.levels,
        epsilon: cfg.config.check.epsilon,
    };
    let t0 = Instant::now();
    let table = pool.install(|| delta_sweep(&spec)).expect("sweep builds");
    (table, t0.elapsed())
}

fn main() {
    let mut out = Outcome { failures: 0 };
    let cfg = default_config();
    let s = cfg.build().expect("default structure builds");
    let (table, elapsed) = sweep_single_threaded(&cfg);

    // 1. measured deviation gap decays across the sweep
    let gaps: Vec<f64> = table.rows.iter().map(|r| r.max_gap).collect();
    let k_d: Vec<usize> = table.rows.iter().map(|r| r.k_d).collect();
    let pass = k_d == [200, 400, 800]
        && non_increasing(&gaps)
        && gaps[2] < gaps[0]
        && elapsed < RUNTIME_BUDGET;
    out.report(
        1,
        pass,
        "epsilon-equilibrium gap non-increasing over K_d=200..800",
        format!(
            "G={:?} raw={:?} sweep time {:.2}s single-threaded",
            gaps,
            table.rows.iter().map(|r| r.max_raw_gap).collect::<Vec<_>>(),
            elapsed.as_secs_f64()
        ),
    );

    // 2. Riemann bound and margin at every level
    let pass = table
        .rows
        .iter()
        .all(|r| r.stats.riemann_gap <= r.stats.riemann_bound && r.stats.riemann_gap < RIEMANN_MARGIN * r.stats.riemann_bound);
    out.report(
        2,
        pass,
        "Riemann gap within bound and below 0.25 x bound",
        table
            .rows
            .iter()
            .map(|r| format!("K_d={} sup={:.3e} bound={:.3e}", r.k_d, r.stats.riemann_gap, r.stats.riemann_bound))
            .collect::<Vec<_>>()
            .join("; "),
    );

    let checks = CheckConfig {
        symmetry_tol: SYMMETRY_TOL,
        concavity_tol: CONCAVITY_TOL,
        argmax_tol: ARGMAX_TOL,
        brute_force_points: BRUTE_FORCE_POINTS,
        riemann_margin: RIEMANN_MARGIN,
        mixed_tol: MIXED_TOL,
        ..cfg.check_config()
    };
    let vs = check_all(&s, &checks);

    // 3. demand shape
    let (pass, detail) = summary(&vs, &["P4a", "P4b", "P4c"]);
    out.report(
        3,
        pass,
        "demand symmetric, concave on the cell, monotone outside the band",
        format!(
            "{detail}; max asymmetry {:.3e}, max second difference {:.3e}",
            verdict(&vs, "P4a").metric.unwrap(),
            verdict(&vs, "P4c").metric.unwrap()
        ),
    );

    // 4. argmax against brute force, monotone and inward best responses
    let (pass, detail) = summary(&vs, &["P2a", "P2b", "P2c", "P2d"]);
    out.report(
        4,
        pass && s.producer_grid.len() == 200,
        "best response matches brute force and moves inward monotonically",
        format!("{detail}; max brute-force distance {:.3e}", verdict(&vs, "P2a").metric.unwrap()),
    );

    // 5. displacement decreasing then increasing
    let (pass, detail) = summary(&vs, &["P3"]);
    out.report(5, pass, "displacement strictly decreasing then increasing", detail);

    // 6. supply support strictly inside the cell, disjoint across cells
    let ratio = verdict(&vs, "P5").metric.unwrap();
    let min_dist = verdict(&vs, "P5_disjoint").metric.unwrap();
    let (pass, detail) = summary(&vs, &["P5", "P5_disjoint"]);
    out.report(
        6,
        pass && min_dist > 0.0,
        "supply support inside the cell and disjoint across communities",
        format!(
            "{detail}; max L*/L_C {ratio:.4} (expected < {SUPPORT_RATIO_EXPECTED}: {}), min cross distance {min_dist:.4e}",
            ratio < SUPPORT_RATIO_EXPECTED
        ),
    );

    // 7. utility ordering and positivity
    let report = verify_epsilon_equilibrium(&s, cfg.config.check.epsilon);
    let (pass, detail) = summary(&vs, &["P6a", "P6b", "P7a", "P7b"]);
    let positive = report.positivity.checked && report.positivity.all_positive;
    out.report(
        7,
        pass && positive,
        "utilities ordered by distance to the centre and positive",
        format!(
            "{detail}; min U_d {:.4} min U_s {:.4}",
            report.positivity.min_consumer_utility, report.positivity.min_producer_utility
        ),
    );

    // 8. single-community allocations are optimal
    let (pass, detail) = summary(&vs, &["LL1", "LL2"]);
    out.report(
        8,
        pass,
        "random mixed allocations never beat the corner by more than 1e-12",
        format!(
            "{detail}; largest excess consumer {:.3e} producer {:.3e}",
            verdict(&vs, "LL1").metric.unwrap(),
            verdict(&vs, "LL2").metric.unwrap()
        ),
    );

    // 9. continuous-limit convergence
    let pass = table.xstar_non_increasing && table.consumer_value_non_increasing && table.producer_value_non_increasing;
    out.report(
        9,
        pass,
        "best responses and utilities approach the continuous model",
        table
            .rows
            .iter()
            .map(|r| {
                format!(
                    "K_d={} x*={:.3e} Ud={:.3e} Us={:.3e}",
                    r.k_d, r.stats.xstar_gap, r.stats.consumer_value_gap, r.stats.producer_value_gap
                )
            })
            .collect::<Vec<_>>()
            .join("; "),
    );

    // 10. byte-identical sweep outputs
    let tmp = tempfile::TempDir::new().unwrap();
    let config_path = tmp.path().join("config.toml");
    fs::write(&config_path, "").unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let code_a = cmd_sweep(&config_path, None, Some(&a)).expect("sweep a");
    let code_b = cmd_sweep(&config_path, None, Some(&b)).expect("sweep b");
    let run = cfg.config.run_dir(None);
    let name = run.file_name().unwrap();
    let bytes_a = fs::read(a.join(name).join("sweep.csv")).unwrap();
    let bytes_b = fs::read(b.join(name).join("sweep.csv")).unwrap();
    out.report(
        10,
        bytes_a == bytes_b && code_a == code_b,
        "repeated sweeps are byte-identical",
        format!("{} bytes, exit codes {code_a}/{code_b}", bytes_a.len()),
    );

    println!("{} of 10 criteria passed", 10 - out.failures);
    if out.failures > 0 {
        std::process::exit(1);
    }
}
