use fixlab::gauge::{gauge_breakdown, verify_contraction, GaugeKind, SelfMap, SelfMapSpec};
use fixlab::phi::{classify_phi, estimate_l_plus, ComparisonFunction, PhiPlan};
use fixlab::picard::{
    brute_force_fixed_points, default_starts, iterate, run_theorem_harness_with, HarnessOptions, TheoremId,
};
use fixlab::seqlab::{lemma1_witness, SequencePrefix};
use fixlab::space::{AxiomId, DistanceStructure, Point, StructureLabel, SLACK};
use proptest::prelude::*;

fn quarter_steps(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(0u8..=8, n * (n + 1) / 2).prop_map(move |flat| {
        let mut m = vec![vec![0.0; n]; n];
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                m[i][j] = flat[k] as f64 * 0.25;
                m[j][i] = m[i][j];
                k += 1;
            }
        }
        m
    })
}

fn table() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (3usize..=6).prop_flat_map(quarter_steps)
}

fn table_and_map() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    (3usize..=6).prop_flat_map(|n| (quarter_steps(n), prop::collection::vec(0..n, n)))
}

fn idx(i: usize) -> Point {
    Point::Index(i)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn reflexive_triangular_implies_triangular_and_self_distance_bound(m in table()) {
        let s = DistanceStructure::tabulated(m.clone()).unwrap();
        let class = s.classify().unwrap();
        if class.holds(AxiomId::ReflexiveTriangular) {
            prop_assert!(class.holds(AxiomId::Triangular));
            for i in 0..m.len() {
                for j in 0..m.len() {
                    prop_assert!(m[i][i] + m[j][j] <= 2.0 * m[i][j] + 2.0 * SLACK);
                }
            }
        }
    }

    #[test]
    fn label_chain_is_monotone(m in table()) {
        let class = DistanceStructure::tabulated(m).unwrap().classify().unwrap();
        if class.has(StructureLabel::PartialMetric) {
            prop_assert!(class.has(StructureLabel::AlmostPartialMetric));
        }
        if class.has(StructureLabel::AlmostPartialMetric) {
            prop_assert!(class.has(StructureLabel::WeakAlmostPartialMetric));
        }
        prop_assert_eq!(class.labels.first(), Some(&class.label));
    }

    #[test]
    fn axiom_witnesses_reproduce(m in table()) {
        let s = DistanceStructure::tabulated(m).unwrap();
        for r in s.classify().unwrap().reports.iter().filter(|r| !r.holds) {
            prop_assert!(s.witness_reproduces(r).unwrap(), "{:?}", r.axiom);
        }
    }

    #[test]
    fn gauge_chain_and_orbit_collapse((m, t) in table_and_map()) {
        let s = DistanceStructure::tabulated(m).unwrap();
        let map = SelfMap::new(SelfMapSpec::Tabulated(t.clone()), &s).unwrap();
        let reflexive = s.classify().unwrap().holds(AxiomId::ReflexiveTriangular);
        let d = |a: usize, b: usize| s.distance(idx(a), idx(b)).unwrap();
        for x in 0..t.len() {
            for y in 0..t.len() {
                let g = gauge_breakdown(&s, &map, idx(x), idx(y)).unwrap();
                prop_assert!(g.m1 <= g.m2 && g.m2 <= g.m3);
            }
            let tx = t[x];
            let g = gauge_breakdown(&s, &map, idx(x), idx(tx)).unwrap();
            let orbit_max = d(x, tx).max(d(tx, t[tx]));
            prop_assert_eq!(g.h, orbit_max);
            if reflexive {
                prop_assert!((g.m2 - orbit_max).abs() <= SLACK);
                prop_assert!((g.m3 - orbit_max).abs() <= SLACK);
            }
        }
    }

    #[test]
    fn descent_under_m1_contraction((m, t) in table_and_map()) {
        let s = DistanceStructure::tabulated(m).unwrap();
        let map = SelfMap::new(SelfMapSpec::Tabulated(t.clone()), &s).unwrap();
        let phi = ComparisonFunction::parse("t/2", vec![], Some(true)).unwrap();
        if verify_contraction(&s, &map, &phi, GaugeKind::M1).unwrap().holds {
            for x0 in 0..t.len() {
                let tr = iterate(&s, &map, idx(x0), 200, 1e-9).unwrap();
                for w in tr.rho.windows(2) {
                    prop_assert!(w[1] <= phi.eval(w[0]).unwrap() + SLACK);
                    prop_assert!(w[1] <= w[0] + SLACK);
                }
            }
        }
    }

    #[test]
    fn convergent_orbits_are_cauchy_on_triangular_tables((m, t) in table_and_map()) {
        let s = DistanceStructure::tabulated(m).unwrap();
        if s.classify().unwrap().holds(AxiomId::Triangular) {
            let map = SelfMap::new(SelfMapSpec::Tabulated(t.clone()), &s).unwrap();
            for x0 in 0..t.len() {
                let tr = iterate(&s, &map, idx(x0), 200, 1e-9).unwrap();
                if tr.converged_0d {
                    prop_assert!(tr.cauchy_0d);
                }
            }
        }
    }

    #[test]
    fn ladder_is_monotone_and_sandwiched(k in 0usize..4, s in 2e-3f64..50.0) {
        let catalog = ["t/2", "t/(1+t)", "if(t<1, 0, 0.9)", "if(t<1, t/2, t-(t-1)^2)"];
        let phi = ComparisonFunction::parse(catalog[k], vec![], None).unwrap();
        let est = estimate_l_plus(&phi, s).unwrap();
        for w in est.ladder.windows(2) {
            prop_assert!(w[1].sup <= w[0].sup);
        }
        prop_assert!(phi.eval(s).unwrap() <= est.value);
        if k < 3 {
            prop_assert!(est.value <= s + 1e-9, "{} at {s}: {}", catalog[k], est.value);
        }
    }

    #[test]
    fn witness_rows_on_random_walks(steps in prop::collection::vec(0.01f64..0.6, 40..200), eps in 0.3f64..1.5) {
        let mut x = vec![0.0];
        for st in &steps {
            x.push(x.last().unwrap() + st);
        }
        let prefix = SequencePrefix::real_line(&x).unwrap();
        let Ok(w) = lemma1_witness(&prefix, eps, 20) else { return Ok(()); };
        for r in &w.rows {
            prop_assert!(r.far_pair_holds(eps));
            if r.m > r.j {
                let prev = r.m - 1;
                prop_assert!((prev + 1..x.len()).all(|n| prefix.d(prev, n).unwrap() < eps));
            }
            prop_assert!((r.m + 1..r.n).all(|n| prefix.d(r.m, n).unwrap() < eps));
        }
        for r in w.late_rows() {
            prop_assert!(r.first_exit_holds(eps));
            prop_assert!(r.sandwich_holds(eps));
        }
    }

    /// Partial metric `max(a_i, a_j)` with `a_0 = 0` and maps that at least
    /// halve `a`: Theorem 3 applies and its fixed point is the unique one.
    #[test]
    fn confirmed_tables_agree_with_brute_force(
        n in 3usize..=6,
        picks in prop::collection::vec(any::<prop::sample::Index>(), 6),
    ) {
        let a: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { 3f64.powi(i as i32) }).collect();
        let m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[i].max(a[j])).collect()).collect();
        let t: Vec<usize> = (0..n).map(|i| if i == 0 { 0 } else { picks[i].index(i) }).collect();
        let s = DistanceStructure::tabulated(m).unwrap();
        let map = SelfMap::new(SelfMapSpec::Tabulated(t.clone()), &s).unwrap();
        let phi = ComparisonFunction::parse("t/2", vec![], Some(true)).unwrap();
        let report = classify_phi(&phi, &PhiPlan::default()).unwrap();
        let class = s.classify().unwrap();
        let v = run_theorem_harness_with(
            &s, &map, &phi, &report, &class, GaugeKind::M1,
            &default_starts(&s), false, &HarnessOptions::default(),
        ).unwrap();
        prop_assert_eq!(v.theorem_id, Some(TheoremId::T3));
        prop_assert!(v.confirmed(), "{:?}", v.fixed_point_report.checks);
        let sets = brute_force_fixed_points(&s, &map).unwrap();
        prop_assert_eq!(&sets.d_fixed, &vec![0]);
        prop_assert_eq!(v.limit(), Some(Point::Index(0)));
    }
}

#[test]
fn shifted_distances_stay_near_epsilon_on_the_harmonic_walk() {
    let mut x = vec![0.0f64];
    for k in 1..=20_000 {
        x.push(x[k - 1] + 1.0 / k as f64);
    }
    let prefix = SequencePrefix::real_line(&x).unwrap();
    let eps = 0.5;
    let w = lemma1_witness(&prefix, eps, 200).unwrap();
    for r in w.late_rows() {
        let sh = r.shifted.expect("n + 1 inside the prefix");
        let bound = r.last_gap + prefix.d(r.m, r.m + 1).unwrap() + prefix.d(r.n, r.n + 1).unwrap();
        for row in sh {
            for v in row {
                assert!((v - eps).abs() <= bound, "row {}: {v}", r.j);
            }
        }
    }
}
