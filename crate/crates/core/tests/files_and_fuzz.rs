use entsum::fuzz::run_fuzz;
use entsum::io::{
    parse_dist_file, parse_law_file, parse_set_file, report_json, write_dist_file, write_set_file,
};
use entsum::{FinDist, FuzzConfig, GroupContext, GroupSet, Suite};
use proptest::prelude::*;

fn group() -> impl Strategy<Value = GroupContext> {
    prop_oneof![
        (1usize..=3).prop_map(GroupContext::z),
        (1usize..=4).prop_map(GroupContext::f2),
        prop::collection::vec(2i64..9, 1..=3).prop_map(|m| GroupContext::zmod(&m).unwrap()),
    ]
}

fn points(dim: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-9i64..9, dim), 1..10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn set_files_round_trip((ctx, pts) in group().prop_flat_map(|g| { let d = g.dim(); (Just(g), points(d)) })) {
        let mut canon: Vec<_> = pts.iter().map(|p| ctx.canonicalize(p).unwrap()).collect();
        canon.sort();
        canon.dedup();
        let set = GroupSet::new(ctx, canon.iter().map(|e| e.coords().to_vec())).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.set");
        write_set_file(&set, &path).unwrap();
        prop_assert_eq!(&parse_set_file(&path).unwrap(), &set);
        prop_assert_eq!(parse_law_file(&path).unwrap(), FinDist::uniform(&set).unwrap());
    }

    #[test]
    fn dist_files_round_trip(
        (ctx, pts) in group().prop_flat_map(|g| { let d = g.dim(); (Just(g), points(d)) }),
        weights in prop::collection::vec(0.001f64..1.0, 10),
    ) {
        let mut canon: Vec<_> = pts.iter().map(|p| ctx.canonicalize(p).unwrap()).collect();
        canon.sort();
        canon.dedup();
        let total: f64 = weights[..canon.len()].iter().sum();
        let p = FinDist::new(
            ctx,
            canon.iter().zip(&weights).map(|(e, w)| (e.coords().to_vec(), w / total)),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.dist");
        write_dist_file(&p, &path).unwrap();
        prop_assert_eq!(&parse_dist_file(&path).unwrap(), &p);
        prop_assert_eq!(&parse_law_file(&path).unwrap(), &p);
    }
}

#[test]
fn malformed_files_report_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.set");
    std::fs::write(&path, "{\"group\":\"F2\",\"D\":2}\n[0,1]\n[1,1]\n[2,1]\n").unwrap();
    // [2,1] reduces to [0,1].
    let err = parse_set_file(&path).unwrap_err();
    assert!(matches!(err, entsum::Error::Parse { line: 4, .. }), "{err}");
    assert!(parse_set_file(&dir.path().join("missing")).is_err());
}

#[test]
fn fuzz_is_reproducible_and_clean() {
    let cfg = FuzzConfig {
        seed: 77,
        trials: 40,
        ..FuzzConfig::default()
    };
    let a = run_fuzz(&cfg).unwrap();
    let b = run_fuzz(&FuzzConfig { threads: Some(2), ..cfg.clone() }).unwrap();
    assert_eq!(report_json(&a).unwrap(), report_json(&b).unwrap());
    assert_eq!(a.suites.len(), Suite::ALL.len());
    assert_eq!(a.failures(), 0, "{}", report_json(&a).unwrap());
    for s in &a.suites {
        assert_eq!(s.errors, 0, "{:?}", s.first_error);
        assert!(s.checks > 0 || s.skipped == s.trials, "{:?}", s.suite);
        assert!(s.max_utilization <= 1.0 + cfg.tolerance, "{:?} {} {:?}", s.suite, s.max_utilization, s.tightest);
    }
    let other = run_fuzz(&FuzzConfig { seed: 78, ..cfg }).unwrap();
    assert_ne!(report_json(&a).unwrap(), report_json(&other).unwrap());
}

#[test]
fn fuzz_rejects_bad_configs() {
    assert!(run_fuzz(&FuzzConfig { trials: 0, ..FuzzConfig::default() }).is_err());
    assert!(run_fuzz(&FuzzConfig { min_support: 5, max_support: 2, ..FuzzConfig::default() }).is_err());
    assert!(run_fuzz(&FuzzConfig { groups: vec![], ..FuzzConfig::default() }).is_err());
}
