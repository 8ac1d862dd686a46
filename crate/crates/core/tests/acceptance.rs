//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hom_tomo::bench::{self, SourceKind, SweepConfig};
use hom_tomo::boson::{self, InternalSpace, PhotonState};
use hom_tomo::circuit;
use hom_tomo::cli;
use hom_tomo::hom::{self, SourceModel};
use hom_tomo::qstate::{
    state_from_angles, BlochAngles, DensityMatrix, PauliAxis, PureState,
    StokesVector, Transform,
};
use hom_tomo::rng;
use hom_tomo::tomo::{self, Backend, DetectorConfig};
use hom_tomo::C64;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_unitary(i: usize, r: &mut impl Rng) -> Transform {
    match i % 5 {
        0 => Transform::Identity,
        1 => Transform::Pauli(PauliAxis::Axis1),
        2 => Transform::Pauli(PauliAxis::Axis2),
        3 => Transform::Pauli(PauliAxis::Axis3),
        _ => Transform::Euler {
            alpha: r.random_range(0.0..TAU),
            beta: r.random_range(0.0..PI),
            gamma: r.random_range(0.0..TAU),
        },
    }
}

fn photon(psi: &PureState) -> PhotonState {
    let a = psi.amplitudes();
    PhotonState::polarization(a[0], a[1]).unwrap()
}

fn three_way_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let mut r = rng::stream(101, &[i as u64]);
        let angles = BlochAngles::new(r.random_range(0.0..PI), r.random_range(0.0..TAU));
        let u = random_unitary(i, &mut r);
        let psi = state_from_angles(angles.theta, angles.phi);
        let upsi = psi.apply(&u.matrix()).unwrap();
        let analytic = (1.0 - psi.inner(&upsi).unwrap().norm_sqr()) / 2.0;
        let circ = circuit::build_swap_test_single(angles, u).exact_coincidence().unwrap();
        let m = InternalSpace::Polarization.lift(&u.matrix());
        let bos = boson::hom_coincidence(&photon(&psi), &photon(&psi), &m).unwrap();
        worst = worst.max((analytic - circ).abs()).max((analytic - bos).abs());
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-10 && t < Duration::from_secs(5),
        format!("max deviation {worst:.2e} over 200 pairs (tol 1e-10), {:.2} s (limit 5 s)", t.as_secs_f64()),
    )
}

fn sigma1_closed_form() -> Outcome {
    let z = InternalSpace::PolarizationTimeBin.lift(&PauliAxis::Axis1.matrix());
    let p = |a2: f64| {
        let psi = PhotonState::time_bin_entangled(C64::from(a2.sqrt()), C64::from((1.0 - a2).sqrt())).unwrap();
        boson::hom_coincidence(&psi, &psi, &z).unwrap()
    };
    let mut worst: f64 = 0.0;
    for k in 0..=10 {
        let a2 = k as f64 / 10.0;
        let b2 = 1.0 - a2;
        let closed = 4.0 * a2 * b2 / (2.0 * a2 * a2 + 2.0 * b2 * b2 + 4.0 * a2 * b2);
        worst = worst.max((p(a2) - closed).abs());
    }
    let half = p(0.5);
    outcome(
        worst <= 1e-12 && (half - 0.5).abs() <= 1e-12,
        format!("max deviation {worst:.2e} (tol 1e-12); P at |α|²=0.5 is {half:.17}"),
    )
}

fn mixed_state_law() -> Outcome {
    let grid: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut worst: f64 = 0.0;
    let mut quarter: f64 = 0.0;
    for &lambda in &grid {
        for &sj in &grid {
            for axis in PauliAxis::ALL {
                let j = axis.index();
                let mut d = [0.0; 3];
                d[j] = sj;
                d[(j + 1) % 3] = (1.0 - sj * sj).sqrt();
                let angles = BlochAngles::from_stokes(&StokesVector::from_array(d));
                let run = |u: Transform| {
                    circuit::build_swap_test_external(lambda, angles, u)
                        .unwrap()
                        .exact_coincidence()
                        .unwrap()
                };
                let mix = lambda * (1.0 - lambda);
                let dop = 2.0 * lambda - 1.0;
                let p_i = run(Transform::Identity);
                let p_j = run(Transform::Pauli(axis));
                worst = worst
                    .max((p_i - mix).abs())
                    .max((p_j - ((1.0 - sj * sj * dop * dop) / 2.0 - mix)).abs());
                if lambda == 0.5 {
                    for a in PauliAxis::ALL {
                        quarter = quarter.max((run(Transform::Pauli(a)) - 0.25).abs());
                    }
                    quarter = quarter.max((p_i - 0.25).abs());
                }
            }
        }
    }
    outcome(
        worst <= 1e-10 && quarter <= 1e-10,
        format!("max deviation {worst:.2e} over 5x5 grid x 3 axes (tol 1e-10); λ=½ max |P-¼| {quarter:.2e}"),
    )
}

fn determinant_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let mut r = rng::stream(404, &[i]);
        let angles = BlochAngles::new(r.random_range(0.0..PI), r.random_range(0.0..TAU));
        let lambda = r.random_range(0.0..=1.0);
        let phi = state_from_angles(angles.theta, angles.phi);
        let perp = phi.orthogonal().unwrap();
        let rho = DensityMatrix::mixture(&[(lambda, &phi), (1.0 - lambda, &perp)]).unwrap();
        let p = circuit::build_swap_test_external(lambda, angles, Transform::Identity)
            .unwrap()
            .exact_coincidence()
            .unwrap();
        worst = worst.max((p - rho.determinant()).abs());
    }
    outcome(worst <= 1e-12, format!("max |P(I) - det ρ| {worst:.2e} over 100 sources (tol 1e-12)"))
}

fn sign_recovery() -> Outcome {
    let start = Instant::now();
    let settings = [(0.9, 0.7), (0.99, 0.01), (0.51, 0.49)];
    let (mut correct, mut invariant) = (0, 0);
    let n = 500;
    for i in 0..n {
        let mut r = rng::stream(505, &[i]);
        let s = loop {
            let s = bench::sample_bloch_uniform(&mut r).stokes();
            if s.to_array().iter().all(|x| x.abs() >= 0.05) {
                break s;
            }
        };
        let src = SourceModel::pure(s).unwrap();
        let recs: Vec<_> = settings
            .iter()
            .map(|&(eta_h, eta_v)| {
                let det = DetectorConfig { eta_h, eta_v, ..DetectorConfig::default() };
                tomo::full_tomography(Backend::Circuit, &src, 0, &det, i).unwrap()
            })
            .collect();
        let ok = recs[0]
            .s
            .to_array()
            .iter()
            .zip(s.to_array())
            .all(|(a, b)| a.signum() == b.signum() && (a - b).abs() < 1e-8);
        correct += usize::from(ok);
        invariant += usize::from(recs.iter().all(|r| r.s == recs[0].s));
    }
    let t = start.elapsed();
    outcome(
        correct == n as usize && invariant == n as usize && t < Duration::from_secs(30),
        format!(
            "{correct}/{n} signed vectors correct, {invariant}/{n} identical across 3 PDL settings, {:.2} s (limit 30 s)",
            t.as_secs_f64()
        ),
    )
}

fn noise_figure() -> Outcome {
    let a = hom::rca(0.1, 1.0, 1e-5, 10.0).unwrap();
    let b = hom::rca(0.1, 0.1, 1e-5, 10.0).unwrap();
    let ok = ((a - 1e6) / 1e6).abs() <= 1e-12 && ((b - 1e4) / 1e4).abs() <= 1e-12;
    outcome(ok, format!("rca(0.1, 1, 1e-5, 10) = {a:e}, rca(0.1, 0.1, 1e-5, 10) = {b:e}"))
}

fn random_state_sweep() -> Outcome {
    let start = Instant::now();
    let cfg = SweepConfig {
        num_states: 1000,
        shots_per_setting: 10_000,
        kind: SourceKind::Pure,
        seed: 707,
        ..SweepConfig::default()
    };
    let res = bench::run_pure_sweep(&cfg).unwrap();
    let eps: Vec<f64> = res.rows.iter().map(|r| r.epsilon).collect();
    let theta: Vec<f64> = res.rows.iter().map(|r| r.theta).collect();
    let phi: Vec<f64> = res.rows.iter().map(|r| r.phi).collect();
    let (ct, cp) = (bench::pearson(&eps, &theta), bench::pearson(&eps, &phi));
    let med = res.epsilon.median;
    let t = start.elapsed();
    outcome(
        (1e-6..=1e-3).contains(&med) && ct.abs() < 0.1 && cp.abs() < 0.1 && t < Duration::from_secs(300),
        format!(
            "median ε {med:.3e} (bracket [1e-6, 1e-3]), corr(ε,θ) {ct:+.3}, corr(ε,φ) {cp:+.3} (limit 0.1), {:.2} s",
            t.as_secs_f64()
        ),
    )
}

fn dop_sweeps() -> Outcome {
    let run = |kind| {
        bench::run_dop_sweep(&SweepConfig {
            num_states: 200,
            shots_per_setting: 10_000,
            kind,
            dop_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            seed: 808,
            ..SweepConfig::default()
        })
        .unwrap()
    };
    let (int, ext) = (run(SourceKind::Internal), run(SourceKind::External));
    let mut pass = true;
    let mut parts = Vec::new();
    for (gi, ge) in int.groups.iter().zip(&ext.groups) {
        let di = gi.mean_dop_est - gi.dop;
        let de = ge.mean_dop_est - ge.dop;
        let ratio = gi.epsilon.mean.max(ge.epsilon.mean) / gi.epsilon.mean.min(ge.epsilon.mean);
        let ok = di.abs() <= 0.02 && de.abs() <= 0.02 && ratio <= 10.0;
        pass &= ok;
        parts.push(format!(
            "DOP {:.2}: bias int {di:+.4} ext {de:+.4}, ε ratio {ratio:.2}{}",
            gi.dop,
            if ok { "" } else { " [out of tolerance]" }
        ));
    }
    outcome(pass, format!("{} (tol 0.02, ×10)", parts.join("; ")))
}

fn shots_benchmark() -> Outcome {
    let cfg = SweepConfig {
        num_states: 1000,
        kind: SourceKind::Pure,
        seed: 909,
        ..SweepConfig::default()
    };
    let rounds = [100, 1000, 10_000, 100_000];
    let rows = bench::run_shots_benchmark(&cfg, &rounds).unwrap();
    let two_se = |a: &bench::Aggregates, b: &bench::Aggregates| 2.0 * (a.se * a.se + b.se * b.se).sqrt();
    let mut pass = true;
    for w in rows.windows(2) {
        pass &= w[1].st.mean <= w[0].st.mean + two_se(&w[0].st, &w[1].st);
        pass &= w[1].qst.mean <= w[0].qst.mean + two_se(&w[0].qst, &w[1].qst);
    }
    for r in &rows {
        pass &= r.qst.mean <= r.st.mean + two_se(&r.st, &r.qst);
    }
    let x: Vec<f64> = rounds.iter().map(|&r| r as f64).collect();
    let st: Vec<f64> = rows.iter().map(|r| r.st.mean).collect();
    let qst: Vec<f64> = rows.iter().map(|r| r.qst.mean).collect();
    let (ss, sq) = (bench::log_log_slope(&x, &st), bench::log_log_slope(&x, &qst));
    pass &= (-1.4..=-0.6).contains(&ss) && (-1.4..=-0.6).contains(&sq);
    let at = &rows[2];
    let ratio = at.st.mean / at.qst.mean;
    pass &= (0.1..=10.0).contains(&ratio);
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("{}: ST {:.2e} QST {:.2e}", r.total_rounds, r.st.mean, r.qst.mean))
        .collect();
    outcome(
        pass,
        format!(
            "{}; slopes ST {ss:.3} QST {sq:.3} (range [-1.4, -0.6]); ST/QST at 1e4 rounds {ratio:.2}",
            table.join(", ")
        ),
    )
}

fn run_binary(out: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_hom-tomo"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove(cli::OUT_DIR_ENV)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn manifest_replay() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let commands: [(&str, &[&str]); 4] = [
        ("tomo", &["tomo", "--source", "external", "--lambda", "0.8", "--theta", "1.1", "--phi", "2.0", "--shots", "5000"]),
        ("sweep", &["sweep", "--kind", "pure", "--states", "200", "--shots", "1000"]),
        ("sweep", &["sweep", "--kind", "internal", "--states", "50", "--shots", "1000", "--seed", "random"]),
        ("bench", &["bench", "--states", "100", "--rounds", "300,3000"]),
    ];
    let mut identical = 0;
    for (k, (name, args)) in commands.iter().enumerate() {
        let a = dir.path().join(format!("run{k}"));
        let b = dir.path().join(format!("replay{k}"));
        let code = run_binary(&a, args);
        let manifest_path = a.join(format!("{name}_manifest.json"));
        let replay = run_binary(&b, &["replay", manifest_path.to_str().unwrap()]);
        let manifest = cli::read_manifest(&manifest_path).unwrap();
        let same = code == replay
            && manifest
                .outputs
                .iter()
                .filter(|f| !f.ends_with("_manifest.json"))
                .all(|f| fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap());
        identical += usize::from(same);
    }
    outcome(
        identical == commands.len(),
        format!("{identical}/{} commands byte-identical after replay", commands.len()),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("three-way oracle equivalence", three_way_equivalence),
        ("time-bin σ1 closed form", sigma1_closed_form),
        ("mixed-state coincidence law", mixed_state_law),
        ("singlet/determinant identity", determinant_identity),
        ("sign recovery", sign_recovery),
        ("coincidence-to-accidental ratio", noise_figure),
        ("random pure-state sweep", random_state_sweep),
        ("DOP sweeps", dop_sweeps),
        ("shots benchmark", shots_benchmark),
        ("manifest replay determinism", manifest_replay),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!("{} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
