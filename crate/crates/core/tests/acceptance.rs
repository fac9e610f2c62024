//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use fixlab::cli;
use fixlab::gauge::{contraction_witness_reproduces, verify_contraction, GaugeKind, SelfMap, SelfMapSpec};
use fixlab::phi::{classify_phi, estimate_l_plus, log_spaced, ComparisonFunction, PhiPlan};
use fixlab::picard::{
    brute_force_fixed_points, default_starts, iterate, run_theorem_harness, run_theorem_harness_with,
    ConclusionStatus, HarnessOptions, PicardTrace, TheoremId,
};
use fixlab::seqlab::{lemma1_witness, SequencePrefix};
use fixlab::space::{DistanceStructure, Point, StructureLabel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn analytic(d: &str, t: &str) -> (DistanceStructure, SelfMap) {
    let space = DistanceStructure::parse_analytic(d, 0.0, 1.0, 65).unwrap();
    let map = SelfMap::new(SelfMapSpec::parse_analytic(t).unwrap(), &space).unwrap();
    (space, map)
}

fn half() -> ComparisonFunction {
    ComparisonFunction::parse("t/2", vec![], Some(true)).unwrap()
}

fn config(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "configs", name].iter().collect();
    p.display().to_string()
}

fn exit_code(args: &[&str]) -> i32 {
    let mut argv = vec!["fixlab"];
    argv.extend_from_slice(args);
    cli::run(argv, &mut Vec::new(), &mut Vec::new())
}

fn taxonomy() -> Outcome {
    let t0 = Instant::now();
    let cases = [
        ("abs(x-y)", StructureLabel::StandardMetric),
        ("max(x,y)", StructureLabel::PartialMetric),
        ("x+y", StructureLabel::AlmostPartialMetric),
    ];
    for (d, want) in cases {
        let space = DistanceStructure::parse_analytic(d, 0.0, 1.0, 65).map_err(|e| e.to_string())?;
        let class = space.classify().map_err(|e| e.to_string())?;
        ensure(class.label == want, || format!("{d}: got {}, want {want}", class.label))?;
    }
    let space = DistanceStructure::parse_analytic("x+y", 0.0, 1.0, 65).unwrap();
    let class = space.classify().unwrap();
    let matthews = class.report(fixlab::space::AxiomId::Matthews);
    let pts = matthews.witness.as_ref().map(|w| w.points.clone());
    ensure(
        !matthews.holds && pts == Some(vec![Point::Real(1.0), Point::Real(0.0)]),
        || format!("Matthews witness {pts:?}"),
    )?;
    ensure(space.witness_reproduces(matthews).unwrap(), || "witness does not reproduce".into())?;
    let el = t0.elapsed();
    within(el, Duration::from_secs(1))?;
    Ok(format!("three labels and Matthews witness (1,0) in {el:?}"))
}

fn theorem_three() -> Outcome {
    let mut notes = Vec::new();
    for (d, g) in [("max(x,y)", GaugeKind::M3), ("x+y", GaugeKind::M1)] {
        let t0 = Instant::now();
        let (space, map) = analytic(d, "x/2");
        let starts = default_starts(&space);
        ensure(starts.len() == 5, || "expected 5 starts".into())?;
        let v = run_theorem_harness(&space, &map, &half(), g, &starts, false, &HarnessOptions::default())
            .map_err(|e| e.to_string())?;
        ensure(v.theorem_id == Some(TheoremId::T3) && v.confirmed(), || {
            format!("{d}: {:?} {:?}", v.theorem_id, v.conclusion_status)
        })?;
        for t in &v.fixed_point_report.traces {
            let z = t.limit.ok_or("missing limit")?.coord();
            ensure(z.abs() <= 1e-9, || format!("{d}: limit {z}"))?;
            ensure(t.limit_displacement.unwrap() <= 1e-9, || format!("{d}: d(z,Tz) too large"))?;
            ensure(t.limit_self_distance.unwrap() <= 1e-9, || format!("{d}: d(z,z) too large"))?;
            ensure(t.iterations <= 64, || format!("{d}: {} iterations", t.iterations))?;
        }
        let el = t0.elapsed();
        within(el, Duration::from_secs(1))?;
        notes.push(format!("{d}/{g} {el:?}"));
    }
    ensure(exit_code(&["harness", &config("demo_partial_max.json")]) == 0, || "harness exit code".into())?;
    Ok(format!("Theorem 3 confirmed ({})", notes.join(", ")))
}

fn refutation() -> Outcome {
    let (space, map) = analytic("max(x,y)", "x/2");
    let quarter = ComparisonFunction::parse("t/4", vec![], Some(true)).unwrap();
    let report = verify_contraction(&space, &map, &quarter, GaugeKind::M3).map_err(|e| e.to_string())?;
    ensure(!report.holds, || "contraction unexpectedly holds".into())?;
    let w = report.witness.as_ref().ok_or("no witness")?;
    ensure((w.x, w.y) == (Point::Real(0.0), Point::Real(1.0)), || format!("witness ({}, {})", w.x, w.y))?;
    ensure(
        contraction_witness_reproduces(&space, &map, &quarter, GaugeKind::M3, w).unwrap(),
        || "witness does not reproduce".into(),
    )?;
    let v = run_theorem_harness(
        &space,
        &map,
        &quarter,
        GaugeKind::M3,
        &default_starts(&space),
        false,
        &HarnessOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure(v.conclusion_status == ConclusionStatus::NotApplicable, || {
        format!("harness status {:?}", v.conclusion_status)
    })?;
    let path = config("demo_bad_phi.json");
    let c1 = exit_code(&["check-contraction", &path]);
    let c2 = exit_code(&["harness", &path]);
    ensure(c1 == 1 && c2 == 1, || format!("exit codes {c1}, {c2}"))?;
    Ok("witness (0,1) reproduces, harness not-applicable, exit 1".into())
}

fn descent() -> Outcome {
    let phi = half();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let configs = [analytic("max(x,y)", "x/2"), analytic("x+y", "x/2")];
    let mut steps = 0;
    for k in 0..200 {
        let (space, map) = &configs[k % 2];
        let x0 = Point::Real(rng.gen_range(0.0..=1.0));
        let t = iterate(space, map, x0, 10_000, 1e-9).map_err(|e| e.to_string())?;
        for w in t.rho.windows(2) {
            let bound = phi.eval(w[0]).unwrap() + 1e-12;
            ensure(w[1] <= bound, || format!("start {x0}: rho {} > phi({}) + 1e-12", w[1], w[0]))?;
            ensure(w[1] <= w[0] + 1e-12, || format!("start {x0}: rho increases {} -> {}", w[0], w[1]))?;
            steps += 1;
        }
    }
    Ok(format!("200 starts, {steps} consecutive steps"))
}

fn witness() -> Outcome {
    let t0 = Instant::now();
    let mut x = vec![0.0f64];
    for k in 1..=100_000 {
        x.push(x[k - 1] + 1.0 / k as f64);
    }
    let prefix = SequencePrefix::real_line(&x).map_err(|e| e.to_string())?;
    let eps = 0.5;
    let w = lemma1_witness(&prefix, eps, 100).map_err(|e| e.to_string())?;
    ensure(w.complete && w.rows.len() == 101, || format!("{} rows", w.rows.len()))?;
    let j_eps = w.j_eps.ok_or("no j_eps")?;
    let mut checked = 0;
    for r in w.rows.iter().filter(|r| r.j >= j_eps) {
        ensure(r.far_pair_holds(eps), || format!("row {}: far pair", r.j))?;
        ensure(r.first_exit_holds(eps), || format!("row {}: first exit", r.j))?;
        ensure(r.sandwich_holds(eps), || format!("row {}: sandwich", r.j))?;
        checked += 1;
    }
    // Independent oracle: enumerate A(2) over a window large enough to
    // contain pairs starting at m = 2, then take the double minimum.
    let mut a2 = Vec::new();
    for m in 2..200 {
        for n in m + 1..=200 {
            if (x[n] - x[m]).abs() >= eps {
                a2.push((m, n));
            }
        }
    }
    let m2 = a2.iter().map(|p| p.0).min().ok_or("A(2) empty")?;
    let n2 = a2.iter().filter(|p| p.0 == m2).map(|p| p.1).min().unwrap();
    let row2 = &w.rows[2];
    ensure((row2.m, row2.n) == (m2, n2) && (m2, n2) == (2, 4), || {
        format!("row 2 = ({}, {}), oracle ({m2}, {n2})", row2.m, row2.n)
    })?;
    let el = t0.elapsed();
    within(el, Duration::from_secs(5))?;
    Ok(format!("j_eps={j_eps}, {checked} rows exact, row 2 = (2,4), {el:?}"))
}

fn envelope() -> Outcome {
    let step = ComparisonFunction::parse("if(t<1, 0, 0.9)", vec![1.0], None).unwrap();
    let at1 = estimate_l_plus(&step, 1.0).unwrap().value;
    let at_half = estimate_l_plus(&step, 0.5).unwrap().value;
    ensure((at1 - 0.9).abs() <= 1e-6, || format!("estimate at 1 = {at1}"))?;
    ensure(at_half == 0.0, || format!("estimate at 0.5 = {at_half}"))?;

    let catalog = [
        ComparisonFunction::parse("t/2", vec![], Some(true)).unwrap(),
        ComparisonFunction::parse("t/(1+t)", vec![], Some(true)).unwrap(),
        step,
        ComparisonFunction::parse("if(t<1, t/2, t-(t-1)^2)", vec![1.0], None).unwrap(),
    ];
    // The default scan domain, 10^-6 .. 10^3, on 1000 points puts a node at 1.
    let scan = log_spaced(1e-6, 1e3, 1000);
    let mut skipped = 0;
    let mut failures: Vec<(String, f64, f64, f64)> = Vec::new();
    for phi in &catalog {
        for &s in &scan {
            if phi.exceptional().iter().any(|q| (s - q).abs() <= 1e-9) {
                skipped += 1;
                continue;
            }
            let l = estimate_l_plus(phi, s).unwrap().value;
            let f = phi.eval(s).unwrap();
            if !(f <= l + 1e-9 && l <= s + 1e-9) {
                failures.push((phi.source().to_string(), s, f, l));
            }
        }
    }
    let checked = catalog.len() * scan.len() - skipped;
    if let (Some(first), Some(last)) = (failures.first(), failures.last()) {
        let mut names: Vec<&str> = failures.iter().map(|f| f.0.as_str()).collect();
        names.dedup();
        return Err(format!(
            "sandwich fails at {} of {checked} points ({}), s from {:e} to {:e}; \
             worst first: L+phi({:e}) = {:e} for {}",
            failures.len(),
            names.join(", "),
            first.1,
            last.1,
            first.1,
            first.3,
            first.0
        ));
    }
    Ok(format!(
        "step estimates {at1} / {at_half}; sandwich on {checked} points ({skipped} skipped at Q)"
    ))
}

fn random_table(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n = rng.gen_range(3..=6);
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(0..=8) as f64 * 0.25;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    let t = (0..n).map(|_| rng.gen_range(0..n)).collect();
    (m, t)
}

fn oracle_equivalence() -> Outcome {
    let t0 = Instant::now();
    let phi = half();
    let phi_report = classify_phi(&phi, &PhiPlan::default()).map_err(|e| e.to_string())?;
    let opts = HarnessOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let (mut confirmed, mut declined, mut refuted) = (0, 0, 0);
    let mut mismatches = Vec::new();
    for case in 0..500 {
        let (matrix, t) = random_table(&mut rng);
        let gauge = GaugeKind::ALL[rng.gen_range(0..3)];
        let space = DistanceStructure::tabulated(matrix.clone()).map_err(|e| e.to_string())?;
        let map = SelfMap::new(SelfMapSpec::Tabulated(t.clone()), &space).map_err(|e| e.to_string())?;
        let class = space.classify().map_err(|e| e.to_string())?;
        let v = run_theorem_harness_with(
            &space,
            &map,
            &phi,
            &phi_report,
            &class,
            gauge,
            &default_starts(&space),
            false,
            &opts,
        )
        .map_err(|e| format!("case {case}: harness crashed: {e}"))?;
        match v.conclusion_status {
            ConclusionStatus::Confirmed => {
                confirmed += 1;
                let sets = brute_force_fixed_points(&space, &map).unwrap();
                let limit = v.limit().map(|p| p.coord() as usize);
                if sets.d_fixed.len() != 1 || Some(sets.d_fixed[0]) != limit {
                    mismatches.push(format!(
                        "case {case}: {:?} under {gauge}, Fix(T;d) = {:?}, limit {limit:?}, d = {matrix:?}, T = {t:?}",
                        v.theorem_id, sets.d_fixed
                    ));
                }
            }
            ConclusionStatus::NotApplicable => declined += 1,
            ConclusionStatus::Refuted => refuted += 1,
        }
    }
    let el = t0.elapsed();
    let summary = format!("{confirmed} confirmed, {declined} declined, {refuted} refuted, {el:?}");
    if !mismatches.is_empty() {
        return Err(format!(
            "{summary}; {} confirmed runs with Fix(T;d) not a single point, first: {}",
            mismatches.len(),
            mismatches[0]
        ));
    }
    within(el, Duration::from_secs(60))?;
    Ok(summary)
}

fn constant_sequence() -> Outcome {
    let (space, map) = analytic("x+y", "x");
    let u = Point::Real(0.5);
    let self_d = space.distance(u, u).unwrap();
    ensure(self_d == 1.0, || format!("d(u,u) = {self_d}"))?;
    let trace = PicardTrace::from_orbit(&space, Some(&map), vec![u; 64], 1e-9, 8).map_err(|e| e.to_string())?;
    ensure(!trace.converged_0d, || "constant trace reported 0d-convergent".into())?;
    let t = iterate(&space, &map, u, 10_000, 1e-9).unwrap();
    ensure(!t.converged_0d, || "iterated constant orbit reported 0d-convergent".into())?;
    let code = exit_code(&["iterate", &config("demo_constant_orbit.json")]);
    ensure(code == 1, || format!("iterate exit code {code}"))?;
    Ok("constant orbit at 0.5 is not 0d-convergent, d(u,u)=1".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("taxonomy", taxonomy),
        ("theorem 3 end-to-end", theorem_three),
        ("refutation path", refutation),
        ("descent along orbits", descent),
        ("semi-Cauchy witness rows", witness),
        ("right upper envelope", envelope),
        ("oracle equivalence on random tables", oracle_equivalence),
        ("constant sequence", constant_sequence),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
