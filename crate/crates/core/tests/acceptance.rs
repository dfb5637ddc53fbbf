//! Acceptance gate. Runs every criterion, prints one `PASS`/`FAIL` line per
//! criterion and exits non-zero if any failed.
//!
//! `FHT_BLESS=1` rewrites the golden files under `tests/golden` instead of
//! comparing against them.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use fht::assemble::{split_reconstruction, truncation_scan};
use fht::factorize::Parity;
use fht::fock::{build_from_factored, build_from_tensor};
use fht::generators::{
    random_valid, real_basis_instance, ring_planewave, two_mode_example, RingModelParams,
};
use fht::io::{FactorFile, TensorFile};
use fht::tensor::{group, HamiltonianInstance};
use fht::trotter::trotter_scan_against;
use fht::{factorize_hamiltonian, reconstruct_tensor, FactoredHamiltonian, FactorizationOptions};

const SEEDS: u64 = 20;
const TROTTER_DTS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn ring(half_width: usize) -> HamiltonianInstance {
    ring_planewave(&RingModelParams {
        n_modes: 2 * half_width + 1,
        ring_length: 10.0,
        potential_strength: 1.0,
        potential_width: 1.0,
    })
    .expect("valid ring parameters")
}

fn random(n: usize, seed: u64) -> HamiltonianInstance {
    HamiltonianInstance::interaction_only(random_valid(n, seed), format!("random n={n} seed={seed}"))
}

fn real_basis(n: usize, seed: u64) -> HamiltonianInstance {
    HamiltonianInstance::interaction_only(
        real_basis_instance(n, 3, seed),
        format!("real-basis n={n} seed={seed}"),
    )
}

fn factorize(inst: &HamiltonianInstance) -> FactoredHamiltonian {
    factorize_hamiltonian(inst, &FactorizationOptions::default())
        .unwrap_or_else(|e| panic!("{}: {e}", inst.label))
}

/// Random N=2..8 over all seeds, both ring sizes, real-basis N=2..6.
fn instance_set() -> Vec<HamiltonianInstance> {
    let mut out = Vec::new();
    for n in 2..=8 {
        for seed in 0..SEEDS {
            out.push(random(n, seed));
        }
    }
    out.push(ring(1));
    out.push(ring(2));
    for n in 2..=6 {
        for seed in 0..4 {
            out.push(real_basis(n, seed));
        }
    }
    out
}

struct Factored {
    inst: HamiltonianInstance,
    fh: FactoredHamiltonian,
}

fn factorization_identity(set: &[Factored]) -> Outcome {
    let mut worst = (0.0f64, String::new());
    for f in set {
        let exact = build_from_tensor(&f.inst).unwrap();
        let factored = build_from_factored(&f.fh).unwrap();
        let scaled = exact.max_abs_diff(&factored) / exact.max_abs().max(1.0);
        if scaled > worst.0 {
            worst = (scaled, f.inst.label.clone());
        }
    }
    outcome(
        worst.0 <= 1e-9,
        format!("{} instances, worst scaled Fock discrepancy {:.2e} ({})", set.len(), worst.0, worst.1),
    )
}

fn exact_reconstruction(set: &[Factored]) -> Outcome {
    let worst = set
        .iter()
        .map(|f| fht::assemble::relative_error(&f.inst.two_body, &reconstruct_tensor(&f.fh)))
        .fold(0.0, f64::max);
    outcome(worst <= 1e-10, format!("worst relative Frobenius error {worst:.2e}"))
}

fn cross_terms(set: &[Factored]) -> Outcome {
    let mut worst_residual = 0.0f64;
    let mut worst_cross = 0.0f64;
    for f in set {
        let m = group(&f.inst.two_body).unwrap();
        let split = split_reconstruction(&f.fh);
        let diff = m.entries() - (&split.symmetric + &split.antisymmetric);
        let norm = m.frobenius_norm();
        let residual = if norm > 0.0 { diff.norm() / norm } else { diff.norm() };
        worst_residual = worst_residual.max(residual);
        let cross = split.cross.amax() / m.max_abs().max(f64::MIN_POSITIVE);
        if m.max_abs() > 0.0 {
            worst_cross = worst_cross.max(cross);
        }
    }
    outcome(
        worst_residual <= 1e-10 && worst_cross <= 1e-10,
        format!("worst S-S + A-A residual {worst_residual:.2e}, worst mixed sum / |M|max {worst_cross:.2e}"),
    )
}

fn real_basis_degeneration() -> Outcome {
    let mut offending = Vec::new();
    let mut total = 0;
    for n in 2..=6 {
        for seed in 0..SEEDS {
            let fh = factorize(&real_basis(n, seed));
            total += 1;
            let a = fh.count(Parity::Antisymmetric);
            if a != 0 {
                offending.push(format!("n={n} seed={seed} |L_A|={a}"));
            }
        }
    }
    let detail = if offending.is_empty() {
        format!("{total} instances, all |L_A| = 0")
    } else {
        format!(
            "{} of {total} instances have |L_A| > 0, e.g. {}",
            offending.len(),
            offending[..offending.len().min(3)].join(", ")
        )
    };
    outcome(offending.is_empty(), detail)
}

fn complex_basis_necessity() -> Outcome {
    let mut counts = Vec::new();
    for n in 3..=6 {
        let hits = (0..SEEDS)
            .filter(|&seed| factorize(&random(n, seed)).count(Parity::Antisymmetric) >= 1)
            .count();
        counts.push((n, hits));
    }
    let pass = counts.iter().all(|&(_, hits)| hits >= 19);
    let detail = counts
        .iter()
        .map(|(n, h)| format!("n={n}: {h}/{SEEDS}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("seeds with |L_A| >= 1: {detail}"))
}

fn spectral_pairing(set: &[Factored]) -> Outcome {
    const TOL: f64 = 1e-10;
    let mut worst_pair = 0.0f64;
    let mut zero_failures = Vec::new();
    let mut checked = 0;
    for f in set {
        let n = f.fh.n_modes;
        for s in f.fh.slices.iter().filter(|s| s.parity == Parity::Antisymmetric) {
            checked += 1;
            // Sorted descending, so lambda_i pairs with lambda_{n-1-i}.
            let l = &s.lambdas;
            for i in 0..n {
                worst_pair = worst_pair.max((l[i] + l[n - 1 - i]).abs());
            }
            let zeros = l.iter().filter(|x| x.abs() <= TOL).count();
            let ok = if n % 2 == 1 { zeros == 1 } else { zeros == 0 };
            if !ok {
                zero_failures.push(format!("{} ({zeros} zeros)", f.inst.label));
            }
        }
    }
    let mut detail = format!("{checked} antisymmetric slices, worst pairing defect {worst_pair:.2e}");
    if !zero_failures.is_empty() {
        zero_failures.dedup();
        detail += &format!(
            ", zero-count mismatch in {} slices, e.g. {}",
            zero_failures.len(),
            zero_failures[..zero_failures.len().min(3)].join(", ")
        );
    }
    outcome(worst_pair <= TOL && zero_failures.is_empty(), detail)
}

fn parseval() -> Outcome {
    let inst = ring(2);
    let fh = factorize(&inst);
    let wmax = fh.weights().iter().fold(0.0f64, |a, w| a.max(w.abs()));
    // Eight log-spaced thresholds from 1e-6 |w|max to just above |w|max.
    let thresholds: Vec<f64> = (0..8)
        .map(|i| wmax * 10f64.powf(-6.0 + 6.1 * i as f64 / 7.0))
        .collect();
    let report = truncation_scan(&inst, &thresholds, &FactorizationOptions::default(), None).unwrap();
    let worst = report
        .recon_error_frobenius
        .iter()
        .zip(&report.dropped_weight_fraction)
        .map(|(e, f)| (e * e - f).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-10,
        format!(
            "ring m=2, kept {:?}, worst |err^2 - dropped fraction| {worst:.2e}",
            report.kept_slices
        ),
    )
}

fn trotter_scaling() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for inst in [ring(1), random(4, 0)] {
        let fh = factorize(&inst);
        let exact = build_from_tensor(&inst).unwrap();
        let res = trotter_scan_against(&exact, &fh, &TROTTER_DTS).unwrap();
        pass &= (1.9..=2.1).contains(&res.fitted_slope);
        let max_err = res.errors.iter().copied().fold(0.0, f64::max);
        parts.push(format!(
            "{}: slope {:.4}, largest error {max_err:.2e}",
            inst.label, res.fitted_slope
        ));
    }
    outcome(pass, parts.join("; "))
}

fn worked_example() -> Outcome {
    let inst = HamiltonianInstance::interaction_only(two_mode_example(), "two-mode");
    let fh = factorize(&inst);
    let mut problems = Vec::new();
    let c = fh.correction.entries();
    let correction_defect = (0..2)
        .flat_map(|p| (0..2).map(move |q| (p, q)))
        .map(|(p, q)| (c[(p, q)].re - if p == q { 0.5 } else { 0.0 }).abs() + c[(p, q)].im.abs())
        .fold(0.0, f64::max);
    if correction_defect > 1e-12 {
        problems.push(format!("correction off by {correction_defect:.2e}"));
    }
    let mut pattern: Vec<(i64, Parity)> = fh
        .slices
        .iter()
        .map(|s| (s.weight.round() as i64, s.parity))
        .collect();
    pattern.sort_by_key(|&(w, p)| (-w, p == Parity::Antisymmetric));
    let expected = vec![
        (1, Parity::Symmetric),
        (1, Parity::Antisymmetric),
        (-1, Parity::Symmetric),
        (-1, Parity::Symmetric),
    ];
    let weight_defect = fh.slices.iter().map(|s| (s.weight.abs() - 1.0).abs()).fold(0.0, f64::max);
    if pattern != expected || weight_defect > 1e-12 {
        problems.push(format!("slice pattern {pattern:?}, weight defect {weight_defect:.2e}"));
    }
    let exact = build_from_tensor(&inst).unwrap();
    let factored = build_from_factored(&fh).unwrap();
    let e_exact = exact.entries()[(3, 3)];
    let e_factored = factored.entries()[(3, 3)];
    if (e_exact.re - 2.0).abs() > 1e-12 || (e_factored - 2.0).norm() > 1e-12 {
        problems.push(format!("<11|H|11> = {e_exact} exact, {e_factored} factored"));
    }
    let detail = if problems.is_empty() {
        format!(
            "S = I/2, 3 symmetric + 1 antisymmetric slice, <11|H|11> = {:.15}",
            e_factored.re
        )
    } else {
        problems.join("; ")
    };
    outcome(problems.is_empty(), detail)
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

/// Compares `bytes` with the golden file, or writes it when blessing.
fn check_golden(name: &str, bytes: &[u8], bless: bool, problems: &mut Vec<String>) {
    let path = golden_dir().join(name);
    if bless {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, bytes).unwrap();
        return;
    }
    match std::fs::read(&path) {
        Ok(golden) if golden == bytes => {}
        Ok(_) => problems.push(format!("{name} differs from golden copy")),
        Err(e) => problems.push(format!("{name}: {e}")),
    }
}

fn format_stability() -> Outcome {
    let bless = std::env::var_os("FHT_BLESS").is_some();
    let mut problems = Vec::new();
    let tensors = [
        ("random_n4_seed7.fht", TensorFile::interaction_only(random_valid(4, 7))),
        ("real_basis_n3_seed1.fht", TensorFile::interaction_only(real_basis_instance(3, 3, 1))),
        ("ring_m1.fht", TensorFile::from_instance(&ring(1), true)),
        ("two_mode.fht", TensorFile::interaction_only(two_mode_example())),
    ];
    for (name, file) in &tensors {
        let bytes = file.to_bytes().unwrap();
        check_golden(name, &bytes, bless, &mut problems);
        let again = TensorFile::from_bytes(&bytes, true).unwrap().to_bytes().unwrap();
        if again != bytes {
            problems.push(format!("{name} changed on load/save"));
        }
        let label = name.trim_end_matches(".fht");
        let fh = factorize(&file.instance(label).unwrap());
        let text = FactorFile::from_factored(&fh).to_string_pretty().unwrap();
        let factor_name = format!("{label}.fhf.json");
        check_golden(&factor_name, text.as_bytes(), bless, &mut problems);
        let back = FactorFile::parse(&text).unwrap().to_factored().unwrap();
        if back != fh || FactorFile::from_factored(&back).to_string_pretty().unwrap() != text {
            problems.push(format!("{factor_name} changed on load/save"));
        }
    }
    let detail = if bless {
        format!("blessed {} golden files", 2 * tensors.len())
    } else if problems.is_empty() {
        format!("{} golden files byte-identical, round trips exact", 2 * tensors.len())
    } else {
        problems.join("; ")
    };
    outcome(problems.is_empty(), detail)
}

fn main() -> ExitCode {
    let start = Instant::now();
    let set: Vec<Factored> = instance_set()
        .into_iter()
        .map(|inst| Factored {
            fh: factorize(&inst),
            inst,
        })
        .collect();

    let criteria: Vec<Criterion> = vec![
        ("factorization identity", Box::new(|| factorization_identity(&set))),
        ("exact reconstruction", Box::new(|| exact_reconstruction(&set))),
        ("cross-term cancellation", Box::new(|| cross_terms(&set))),
        ("real-basis degeneration", Box::new(real_basis_degeneration)),
        ("complex-basis necessity", Box::new(complex_basis_necessity)),
        ("antisymmetric spectral pairing", Box::new(|| spectral_pairing(&set))),
        ("truncation Parseval identity", Box::new(parseval)),
        ("Trotter scaling", Box::new(trotter_scaling)),
        ("worked two-mode example", Box::new(worked_example)),
        ("format stability", Box::new(format_stability)),
    ];

    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {}  {} [{:.1}s]",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
