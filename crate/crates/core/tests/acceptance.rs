//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serre_spectrum::elliptic::{
    build_manifold, classify_reduction, count_points_fp, curve_measure, curve_quantities, hear_curve, nodal_curve,
    ReductionType, WeierstrassCurve,
};
use serre_spectrum::spectral::{
    apply_exact, apply_numeric, congruence_check, kozyrev_profile, rayleigh_quotient, spectrum_table,
    wavelet_eigenvalue, wavelet_integral, IntegralValue, KernelVariant, Normalization, Profile, WaveletSpec,
};
use serre_spectrum::{Ball, ManifoldModel, PAdicStructure, SymbolicValue};

const QS: [u64; 7] = [2, 3, 4, 5, 7, 8, 9];

struct Case {
    model: ManifoldModel,
    wavelet: WaveletSpec,
}

impl Case {
    fn describe(&self) -> String {
        let st = self.model.structure();
        let dens: Vec<i64> = self.model.sheets().iter().map(|s| s.density_exp).collect();
        format!(
            "q={} n={} densities={dens:?} sheet={} support={}",
            st.q(),
            st.n(),
            self.wavelet.sheet(),
            self.wavelet.support()
        )
    }
}

fn random_profile(rng: &mut ChaCha8Rng, len: usize) -> Vec<i64> {
    let mut v: Vec<i64> = (0..len).map(|_| rng.random_range(-5..=5)).collect();
    let rest: i64 = v[..len - 1].iter().sum();
    v[len - 1] = -rest;
    if v.iter().all(|&x| x == 0) {
        v[0] = 1;
        v[len - 1] = -1;
    }
    v
}

fn random_case(rng: &mut ChaCha8Rng, max_level: usize) -> Case {
    let q = QS[rng.random_range(0..QS.len())];
    let n = rng.random_range(1..=2);
    let st = PAdicStructure::from_q(q, n).unwrap();
    let sheets = rng.random_range(1..=6);
    let dens: Vec<i64> = (0..sheets).map(|_| rng.random_range(-3..=0)).collect();
    let model = ManifoldModel::with_chain_atlas(st, &dens).unwrap();
    let sheet = rng.random_range(0..sheets) as u32;
    let level = rng.random_range(0..=max_level);
    let b = st.branching();
    let support = Ball::new((0..level).map(|_| rng.random_range(0..b)).collect());
    let profile = Profile::integers(&random_profile(rng, b as usize));
    let wavelet = WaveletSpec::new(&model, sheet, support, profile, Normalization::Raw).unwrap();
    Case { model, wavelet }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: &[String], summary: String) -> Outcome {
    match failures.first() {
        None => Outcome { pass: true, detail: summary },
        Some(first) => {
            Outcome { pass: false, detail: format!("{summary}; {} failures, first: {first}", failures.len()) }
        }
    }
}

fn within(elapsed: Duration, limit: Duration, failures: &mut Vec<String>) {
    if elapsed > limit {
        failures.push(format!("took {:.1} s, limit {} s", elapsed.as_secs_f64(), limit.as_secs()));
    }
}

/// Criteria 1 and 2 share one sweep.
fn eigen_sweep() -> (Outcome, Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e77e);
    let cases = 500;
    let start = Instant::now();
    let mut eigen_fail = Vec::new();
    let mut cong_fail = Vec::new();
    for _ in 0..cases {
        let case = random_case(&mut rng, 3);
        let m = &case.model;
        let q = m.structure().q();
        let psi = case.wavelet.to_exact(m, case.wavelet.default_precision()).unwrap();
        let lambda = wavelet_eigenvalue(m, &case.wavelet).unwrap().total().to_rational();
        let du = apply_exact(m, &psi).unwrap().normalized();
        let expected = psi.map(|v| v * &lambda).specialize_q(q);
        if du != expected {
            eigen_fail.push(case.describe());
        }
        let c = congruence_check(m, &case.wavelet).unwrap();
        if !c.equal || c.serre_residue != m.serre_invariant() {
            cong_fail.push(format!("{}: lambda {} vs i(X) {}", case.describe(), c.lambda_residue, c.serre_residue));
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60), &mut eigen_fail);
    (
        outcome(&eigen_fail, format!("{cases} cases, {:.1} s", elapsed.as_secs_f64())),
        outcome(&cong_fail, format!("{cases} cases")),
    )
}

fn sphere_residues() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    for q in QS {
        for n in 1..=3 {
            let st = PAdicStructure::from_q(q, n).unwrap();
            let sphere = ManifoldModel::sphere(st).unwrap();
            let r = sphere.serre_invariant();
            let closed_form = (q.pow(n) - 1) % (q - 1);
            if r.value != 0 || closed_form != 0 || r.modulus != q - 1 {
                failures.push(format!("q={q} n={n}: residue {r}"));
            }
            checked += 1;
        }
    }
    outcome(&failures, format!("{checked} spheres"))
}

fn mean_zero_integrals() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    let mut rational = 0;
    for _ in 0..200 {
        let case = random_case(&mut rng, 3);
        match wavelet_integral(&case.model, &case.wavelet) {
            IntegralValue::Exact(v) if v.is_zero() => {}
            other => failures.push(format!("{}: {other:?}", case.describe())),
        }
        rational += 1;
    }
    let mut kozyrev = 0;
    for p in [2u64, 3, 5, 7] {
        let st = PAdicStructure::new(p, 1, 1).unwrap();
        let model = ManifoldModel::with_chain_atlas(st, &[0, -1, -3]).unwrap();
        for j in 1..p {
            let profile = kozyrev_profile(&st, j).unwrap();
            for sheet in 0..3 {
                for digits in [vec![], vec![(j % p) as u32], vec![0, (p - 1) as u32, 1 % p as u32]] {
                    for norm in [Normalization::Raw, Normalization::L2] {
                        let w = WaveletSpec::new(
                            &model,
                            sheet,
                            Ball::new(digits.clone()),
                            Profile::Complex(profile.clone()),
                            norm,
                        )
                        .unwrap();
                        let v = wavelet_integral(&model, &w);
                        if !v.is_zero_within(1e-12) {
                            failures.push(format!("p={p} j={j} sheet={sheet}: {v:?}"));
                        }
                        kozyrev += 1;
                    }
                }
            }
        }
    }
    outcome(&failures, format!("{rational} rational, {kozyrev} character profiles"))
}

fn legendre(a: i64, p: i64) -> i64 {
    let a = a.rem_euclid(p);
    if a == 0 {
        return 0;
    }
    // Euler's criterion by repeated multiplication.
    let mut r = 1i64;
    for _ in 0..(p - 1) / 2 {
        r = r * a % p;
    }
    if r == 1 {
        1
    } else {
        -1
    }
}

fn good_reduction() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut curves = 0;
    for p in [5i64, 7, 11, 13] {
        let mut taken = 0;
        'search: for a in -3..=3 {
            for b in -3..=3 {
                let c = WeierstrassCurve::short(a, b);
                let Ok(qs) = curve_quantities(&c) else { continue };
                if (&qs.discriminant % BigInt::from(p)) == BigInt::from(0) {
                    continue;
                }
                let oracle = p + 1 + (0..p).map(|x| legendre(x * x * x + a * x + b, p)).sum::<i64>();
                let r = classify_reduction(&c, p as u64, None).unwrap();
                let model = build_manifold(&r).unwrap();
                let expect = SymbolicValue::from(oracle) * SymbolicValue::q_pow(-1);
                let hear = hear_curve(&r).unwrap();
                let hasse = (oracle - (p + 1)).pow(2) <= 4 * p;
                if r.kind != ReductionType::Good
                    || r.smooth_count as i64 != oracle
                    || count_points_fp(&c, p as u64).unwrap().total as i64 != oracle
                    || model.total_measure() != expect
                    || curve_measure(&r).unwrap() != expect
                    || !hasse
                    || !hear.equal
                {
                    failures.push(format!("p={p} a={a} b={b}: count {} oracle {oracle}", r.smooth_count));
                }
                curves += 1;
                taken += 1;
                if taken == 4 {
                    break 'search;
                }
            }
        }
    }
    let anchor = classify_reduction(&WeierstrassCurve::short(1, 1), 5, None).unwrap();
    let mu = curve_measure(&anchor).unwrap();
    let nine_fifths = BigRational::new(BigInt::from(9), BigInt::from(5));
    if mu.evaluate_exact(5) != Some(nine_fifths) || mu.reduce_mod(5).value != 1 || !hear_curve(&anchor).unwrap().equal {
        failures.push(format!("anchor y^2=x^3+x+1 at 5: measure {mu}"));
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10), &mut failures);
    outcome(&failures, format!("{curves} curves plus anchor, {:.2} s", elapsed.as_secs_f64()))
}

fn split_multiplicative() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rows = 0;
    for p in [5u64, 7] {
        for m in 1..=6u32 {
            let c = nodal_curve(p, m, 1).unwrap();
            let r = classify_reduction(&c, p, None).unwrap();
            let expect = SymbolicValue::from(m as i64)
                * (SymbolicValue::q_pow(1) - SymbolicValue::one())
                * SymbolicValue::q_pow(-1);
            let mu = curve_measure(&r).unwrap();
            let model = build_manifold(&r).unwrap();
            let table = spectrum_table(&model, 2, None).unwrap();
            rows += table.len();
            let bad_rows = table.iter().filter(|row| row.residue.value != 0 || row.residue.modulus != p - 1).count();
            if r.kind != ReductionType::MultSplit
                || r.m != Some(m)
                || mu != expect
                || mu.reduce_mod(p).value != 0
                || model.serre_invariant().value != 0
                || bad_rows != 0
            {
                failures.push(format!("p={p} m={m}: {:?} measure {mu}, {bad_rows} nonzero rows", r.kind));
            }
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10), &mut failures);
    outcome(&failures, format!("12 curves, {rows} eigenvalue rows, {:.2} s", elapsed.as_secs_f64()))
}

fn numeric_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut worst_abs = 0.0f64;
    let mut largest = 0.0f64;
    let cases = 50;
    for i in 0..cases {
        let case = random_case(&mut rng, 3);
        let m = &case.model;
        let q = m.structure().q();
        let psi = if i % 5 == 0 && m.structure().n() == 1 && m.structure().f() == 1 {
            let st = m.structure();
            let prof = kozyrev_profile(st, 1).unwrap();
            let w = WaveletSpec::new(
                m,
                case.wavelet.sheet(),
                case.wavelet.support().clone(),
                Profile::Complex(prof),
                Normalization::L2,
            )
            .unwrap();
            w.to_numeric(m, w.default_precision()).unwrap()
        } else {
            case.wavelet.to_numeric(m, case.wavelet.default_precision()).unwrap()
        };
        let lambda = wavelet_eigenvalue(m, &case.wavelet).unwrap();
        for s in [-1.0, 0.0, 0.5, 1.0, 2.0] {
            let du = apply_numeric(m, KernelVariant::K0, s, &psi).unwrap();
            let rq = rayleigh_quotient(m, &psi, &du);
            let exact = lambda.evaluate(q, s);
            let abs_err = (rq - Complex64::new(exact, 0.0)).norm();
            let err = abs_err / exact.abs().max(1.0);
            worst = worst.max(err);
            worst_abs = worst_abs.max(abs_err);
            largest = largest.max(exact.abs());
            if err > 1e-9 {
                failures.push(format!("{} s={s}: {rq} vs {exact}", case.describe()));
            }
        }
    }
    outcome(&failures, format!(
            "{cases} cases x 5 values of s, worst error {worst_abs:.1e} absolute, {worst:.1e} scaled by max(1, |lambda|), largest |lambda| {largest:.1e}"
        ))
}

fn run_cli(args: &[&str]) -> std::io::Result<(i32, Vec<u8>)> {
    let out = Command::new(env!("CARGO_BIN_EXE_serre-spectrum")).args(args).output()?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn cli_round_trip() -> Outcome {
    let mut failures = Vec::new();
    let dir = tempfile::tempdir().unwrap();
    let curves: [(&[&str], &str); 3] = [
        (&["0", "0", "0", "1", "1", "-p", "5"], "good5"),
        (&["0", "1", "0", "0", "343", "-p", "7"], "split7"),
        (&["0", "-1", "1", "-10", "-20", "-p", "11"], "e11"),
    ];
    for (coeffs, name) in curves {
        let path = dir.path().join(format!("{name}.json"));
        let path_s = path.to_str().unwrap();
        let mut args = vec!["elliptic"];
        args.extend_from_slice(coeffs);
        args.extend_from_slice(&["--emit-manifold", path_s]);
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let (code, report) = run_cli(&args).unwrap();
            let manifold = std::fs::read(&path).unwrap_or_default();
            let (scode, csv) = run_cli(&["spectrum", path_s, "--max-level", "2"]).unwrap();
            let (jcode, json) =
                run_cli(&["spectrum", path_s, "--max-level", "2", "--s", "1/2", "--format", "json"]).unwrap();
            outputs.push((code, report, manifold, scode, csv, jcode, json));
        }
        if outputs[0] != outputs[1] {
            failures.push(format!("{name}: repeated runs differ"));
        }
        let (code, report, _, scode, csv, jcode, _) = &outputs[0];
        if (*code, *scode, *jcode) != (0, 0, 0) {
            failures.push(format!("{name}: exit codes {code} {scode} {jcode}"));
            continue;
        }
        let report: serde_json::Value = serde_json::from_slice(report).unwrap();
        let residue = report["serre_residue"].as_u64().unwrap().to_string();
        let csv = String::from_utf8_lossy(csv);
        let mut lines = csv.lines();
        let header_ok = lines.next() == Some("sheet,ball,lambda_symbolic,lambda_at_s,residue");
        let mut count = 0;
        for line in lines {
            count += 1;
            if line.rsplit(',').next() != Some(residue.as_str()) {
                failures.push(format!("{name}: row {line:?} disagrees with residue {residue}"));
                break;
            }
        }
        if !header_ok || count == 0 {
            failures.push(format!("{name}: malformed spectrum table"));
        }
    }
    outcome(&failures, "3 curves, each pipeline run twice".into())
}

fn main() -> ExitCode {
    let (c1, c2) = eigen_sweep();
    let results = [
        ("1 eigenfunction identity", c1),
        ("2 congruence with Serre invariant", c2),
        ("3 sphere residue", sphere_residues()),
        ("4 mean-zero integrals", mean_zero_integrals()),
        ("5 good reduction measure", good_reduction()),
        ("6 split multiplicative m-gon", split_multiplicative()),
        ("7 numeric/symbolic consistency", numeric_consistency()),
        ("8 CLI determinism and round trip", cli_round_trip()),
    ];
    let mut all = true;
    for (name, o) in &results {
        println!("[{}] criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        all &= o.pass;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
