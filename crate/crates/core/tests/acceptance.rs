//! Acceptance suite. Runs every criterion once, prints one PASS/FAIL line
//! per criterion and exits nonzero if any failed.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use eprb_core::consistency::{
    chsh_facets, chsh_s, correlation_from_prob, derive_chsh_facets, evaluate, facet_check,
    generate_consistency_inequalities, lp_certificate, prob_from_correlation,
    verify_boolean_derivation, CorrelationSet, Derivation, MEMBERSHIP_TOL,
};
use eprb_core::harness::{run_experiment, simulate_summary, ExperimentConfig, SettingAngles};
use eprb_core::lhv::{random_model, DEFAULT_QUADRATURE_POINTS};
use eprb_core::quantum::{
    bell_state, dephase, expectation, measure_collapse, polarizer_observable, rotated_bell_state,
    Angle, DensityOperator, Observable,
};
use eprb_core::{rng, Pair};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn coefficients(terms: &[(Pair, i32)]) -> BTreeMap<Pair, i32> {
    terms.iter().copied().collect()
}

fn inequality_count() -> Check {
    let start = Instant::now();
    let base = generate_consistency_inequalities();
    let elapsed = start.elapsed();
    ensure(base.len() == 16, || format!("{} inequalities", base.len()))?;
    for (i, a) in base.iter().enumerate() {
        for b in &base[i + 1..] {
            ensure(
                a.coefficients != b.coefficients || a.lower_bound != b.lower_bound,
                || format!("{} duplicates {}", a.name, b.name),
            )?;
        }
    }
    let named = [
        coefficients(&[(Pair::AB, 1), (Pair::ABPrime, 1), (Pair::BBPrime, 1)]),
        coefficients(&[(Pair::AB, 1), (Pair::ABPrime, -1), (Pair::BBPrime, -1)]),
        coefficients(&[
            (Pair::APrimeB, 1),
            (Pair::APrimeBPrime, 1),
            (Pair::BBPrime, 1),
        ]),
    ];
    for want in &named {
        ensure(
            base.iter()
                .any(|b| &b.coefficients == want && b.lower_bound == -1),
            || format!("missing {want:?} >= -1"),
        )?;
    }
    ensure(elapsed < Duration::from_millis(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "16 distinct, three named forms present, {elapsed:?}"
    ))
}

fn boolean_brute_force() -> Check {
    let start = Instant::now();
    let report = verify_boolean_derivation();
    let elapsed = start.elapsed();
    ensure(report.checks.len() == 256 && report.passes() == 256, || {
        format!("{}/{} checks passed", report.passes(), report.checks.len())
    })?;
    ensure(report.subset_failures() == 0, || {
        format!("{} subset failures", report.subset_failures())
    })?;
    // (AB)_× ∩ (AB′)_× ⊆ (BB′)_= on every assignment (A, A′, B, B′)
    for k in 0..16u8 {
        let v: [i8; 4] = std::array::from_fn(|j| if k >> j & 1 == 0 { 1 } else { -1 });
        let (a, b, bp) = (v[0], v[2], v[3]);
        if a != b && a != bp {
            ensure(b == bp, || format!("subset relation fails at {v:?}"))?;
        }
    }
    ensure(elapsed < Duration::from_millis(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "256/256 checks, subset relation holds, {elapsed:?}"
    ))
}

fn chsh_derivation() -> Check {
    let base = generate_consistency_inequalities();
    let facets = derive_chsh_facets(&base).map_err(|e| e.to_string())?;
    ensure(facets.len() == 8, || format!("{} facets", facets.len()))?;
    for f in &facets {
        ensure(f.lower_bound == -2, || {
            format!("{f}: bound {}", f.lower_bound)
        })?;
        ensure(
            f.coefficient(Pair::AAPrime) == 0 && f.coefficient(Pair::BBPrime) == 0,
            || format!("{f} keeps an unmeasured term"),
        )?;
    }
    let target = coefficients(&[
        (Pair::AB, 1),
        (Pair::ABPrime, -1),
        (Pair::APrimeB, 1),
        (Pair::APrimeBPrime, 1),
    ]);
    let facet = facets
        .iter()
        .find(|f| f.coefficients == target)
        .ok_or("⟨AB⟩−⟨AB′⟩+⟨A′B⟩+⟨A′B′⟩ ≥ −2 missing")?;
    let Derivation::ChshFacet { parents, .. } = &facet.derivation else {
        return Err(format!("{facet} has no facet provenance"));
    };
    let names: Vec<[&str; 2]> = parents
        .iter()
        .map(|[i, j]| [base[*i].name.as_str(), base[*j].name.as_str()])
        .collect();
    ensure(names[0] == ["P1(=,×)", "P2(=,=)"], || {
        format!("first provenance {:?}", names[0])
    })?;
    Ok(format!(
        "8 facets, {facet} from {} + {}",
        names[0][0], names[0][1]
    ))
}

fn quantum_violation() -> Check {
    let start = Instant::now();
    let angles = SettingAngles::tsirelson();
    let rho = bell_state().density();
    let corr = |x: f64, y: f64| {
        let obs = Observable::tensor(
            &polarizer_observable(Angle::new(x)),
            &polarizer_observable(Angle::new(y)),
        )
        .unwrap();
        expectation(&rho, &obs).unwrap()
    };
    let analytic = CorrelationSet::from_measured([
        corr(angles.a, angles.b),
        corr(angles.a, angles.b_prime),
        corr(angles.a_prime, angles.b),
        corr(angles.a_prime, angles.b_prime),
    ])
    .map_err(|e| e.to_string())?;
    let (s, _) = chsh_s(&analytic).map_err(|e| e.to_string())?;
    ensure((s - 2.0 * SQRT_2).abs() <= 1e-10, || {
        format!("analytic S = {s}")
    })?;

    let summary = simulate_summary(&ExperimentConfig::qm(angles, 1_000_000, 20_240_601))
        .map_err(|e| e.to_string())?;
    let sampled = summary.correlations().map_err(|e| e.to_string())?;
    let (s_hat, _) = chsh_s(&sampled).map_err(|e| e.to_string())?;
    let se = summary
        .pairs
        .values()
        .map(|p| p.std_error * p.std_error)
        .sum::<f64>()
        .sqrt();
    let elapsed = start.elapsed();
    ensure((s_hat - 2.0 * SQRT_2).abs() <= 5.0 * se, || {
        format!("sampled S = {s_hat}, combined SE {se}")
    })?;
    ensure(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "analytic S = {s:.12}, sampled S = {s_hat:.6} ± {se:.6} (N = 10^6/pair), {elapsed:.2?}"
    ))
}

fn lhv_satisfaction() -> Check {
    let start = Instant::now();
    let mut r = rng::stream(5, 0);
    let mut worst_exact = f64::INFINITY;
    let mut worst_z = f64::INFINITY;
    for m in 0..200u64 {
        let model = random_model(&mut r, DEFAULT_QUADRATURE_POINTS);
        let exact = model.correlation_set();
        for ineq in generate_consistency_inequalities()
            .iter()
            .chain(chsh_facets())
        {
            let slack = evaluate(ineq, &exact).map_err(|e| e.to_string())?;
            worst_exact = worst_exact.min(slack);
            ensure(slack >= -1e-9, || {
                format!("model {m}: {ineq} slack {slack}")
            })?;
        }
        let summary = simulate_summary(&ExperimentConfig::lhv(model, 100_000, 1_000 + m))
            .map_err(|e| e.to_string())?;
        let sampled = summary.correlations().map_err(|e| e.to_string())?;
        for f in chsh_facets() {
            let slack = evaluate(f, &sampled).map_err(|e| e.to_string())?;
            let se = f
                .labels()
                .map(|p| sampled.std_error(p).unwrap().powi(2))
                .sum::<f64>()
                .sqrt();
            if se > 0.0 {
                worst_z = worst_z.min(slack / se);
            }
            ensure(slack >= -5.0 * se, || {
                format!("model {m}: sampled {f} slack {slack}, SE {se}")
            })?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "200 models, min exact slack {worst_exact:.3e}, min sampled slack/SE {worst_z:.2}, {elapsed:.2?}"
    ))
}

fn fine_equivalence() -> Check {
    let start = Instant::now();
    let mut r = rng::stream(6, 0);
    let mut disagreements = Vec::new();
    let mut members = 0;
    for _ in 0..10_000 {
        let p: [f64; 4] = std::array::from_fn(|_| r.random_range(-1.0..=1.0));
        let by_facets = facet_check(&p).0 >= -MEMBERSHIP_TOL;
        let by_lp = lp_certificate(&p).is_some();
        members += usize::from(by_lp);
        if by_facets != by_lp {
            disagreements.push(p);
        }
    }
    let elapsed = start.elapsed();
    ensure(disagreements.is_empty(), || {
        format!(
            "{} disagreements, first {:?}",
            disagreements.len(),
            disagreements[0]
        )
    })?;
    ensure(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "0 disagreements over 10^4 vectors ({members} members), {elapsed:.2?}"
    ))
}

fn channel_math() -> Check {
    let mut r = rng::stream(7, 0);
    for _ in 0..100 {
        let rho = DensityOperator::random(&mut r, 4);
        let obs = Observable::random(&mut r, 4);
        let once = dephase(&rho, &obs).map_err(|e| e.to_string())?;
        let twice = dephase(&once, &obs).map_err(|e| e.to_string())?;
        let d = once.max_abs_diff(&twice);
        ensure(d <= 1e-12, || format!("idempotence defect {d:e}"))?;
        let t = (once.trace() - 1.0).norm();
        ensure(t <= 1e-12, || format!("trace defect {t:e}"))?;
    }
    let reference = rotated_bell_state(Angle::new(0.0));
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let theta = r.random_range(0.0..std::f64::consts::TAU);
        worst = worst.max(rotated_bell_state(Angle::new(theta)).max_abs_diff(&reference));
    }
    ensure(worst <= 1e-12, || format!("rotation defect {worst:e}"))?;
    let collapsed =
        measure_collapse(&bell_state().density(), Angle::new(0.0)).map_err(|e| e.to_string())?;
    let mut diag = [[0.0; 4]; 4];
    diag[0][0] = 0.5;
    diag[3][3] = 0.5;
    for (i, row) in diag.iter().enumerate() {
        for (j, want) in row.iter().enumerate() {
            let got = collapsed.matrix()[(i, j)];
            ensure(
                (got.re - want).abs() <= 1e-12 && got.im.abs() <= 1e-12,
                || format!("collapse entry ({i},{j}) = {got}"),
            )?;
        }
    }
    Ok(format!(
        "idempotent, trace-preserving, rotation defect {worst:.1e}, collapse = diag(1/2,0,0,1/2)"
    ))
}

fn round_trip_and_determinism() -> Check {
    let mut worst: f64 = 0.0;
    let steps = 200_000;
    for k in 0..=steps {
        let e = -1.0 + 2.0 * k as f64 / steps as f64;
        let back = correlation_from_prob(prob_from_correlation(e).map_err(|e| e.to_string())?);
        worst = worst.max((back - e).abs());
    }
    ensure(worst <= 1e-15, || format!("round-trip error {worst:e}"))?;

    let config = ExperimentConfig::qm(SettingAngles::tsirelson(), 10_000, 8);
    let dirs = [tempfile::tempdir(), tempfile::tempdir()].map(|d| d.expect("tempdir"));
    let outputs: Vec<_> = dirs
        .iter()
        .map(|d| run_experiment(&config, d.path()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    for pair in Pair::MEASURED {
        let read =
            |i: usize| std::fs::read(&outputs[i].shot_files[&pair]).map_err(|e| e.to_string());
        ensure(read(0)? == read(1)?, || format!("{pair} shot files differ"))?;
    }
    Ok(format!(
        "max round-trip error {worst:.1e}, 4 shot files byte-identical"
    ))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("inequality count", inequality_count),
        ("boolean brute force", boolean_brute_force),
        ("CHSH derivation", chsh_derivation),
        ("quantum violation", quantum_violation),
        ("LHV satisfaction", lhv_satisfaction),
        ("LP/facet equivalence", fine_equivalence),
        ("channel math", channel_math),
        ("round-trip and determinism", round_trip_and_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
