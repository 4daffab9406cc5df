use std::fs;

use proptest::prelude::*;
use serde_json::Value;
use splitstep::config::{load_config, EvolveSpec};
use splitstep::{builtin, run};
use splitstep_core::propagator::{Mode, Order};

fn gauss_free_short() -> splitstep::Scenario {
    let mut s = builtin("gauss_free").unwrap();
    s.evolve = Some(EvolveSpec {
        t_end: 0.2,
        snapshots: 3,
        ..s.evolve.unwrap()
    });
    s.output.amplitudes = true;
    s
}

#[test]
fn series_and_snapshots_follow_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&gauss_free_short(), Some(dir.path())).unwrap();

    let series = fs::read_to_string(dir.path().join("series.csv")).unwrap();
    let mut lines = series.lines();
    assert_eq!(lines.next(), Some("tau,norm,energy,mean_x,spread_x"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 5));
    assert_eq!(rows[0][0], 0.0);
    assert!((rows.last().unwrap()[0] - 0.2).abs() < 1e-12);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    // 17 significant digits in scientific notation.
    let cell = series.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert_eq!(cell.split('e').next().unwrap().len(), 18, "{cell}");

    let snaps: Vec<Value> = fs::read_to_string(dir.path().join("snapshots.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(snaps.len(), 3);
    assert_eq!(report.snapshots, 3);
    for (snap, want_tau) in snaps.iter().zip([0.0, 0.1, 0.2]) {
        assert!((snap["tau"].as_f64().unwrap() - want_tau).abs() < 1e-12);
        let grid = &snap["grid"];
        assert_eq!(grid["shape"], serde_json::json!([1024]));
        assert_eq!(grid["periodic"], serde_json::json!([false]));
        let spacing = grid["spacing"][0].as_f64().unwrap();
        assert!((spacing - 32.0 / 1024.0).abs() < 1e-15);
        assert!((grid["lower"][0].as_f64().unwrap() + 16.0).abs() < 1e-12);
        let density: Vec<f64> = snap["density"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert_eq!(density.len(), 1024);
        let mass: f64 = density.iter().sum::<f64>() * spacing;
        assert!((mass - snap["norm"].as_f64().unwrap()).abs() < 1e-12);
        let re = snap["re"].as_array().unwrap();
        let im = snap["im"].as_array().unwrap();
        for i in [0, 300, 512, 700] {
            let (a, b) = (re[i].as_f64().unwrap(), im[i].as_f64().unwrap());
            assert!((a * a + b * b - density[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn region_probabilities_appear_in_the_series() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = builtin("squid_static").unwrap();
    s.evolve.as_mut().unwrap().t_end = 0.05;
    run(&s, Some(dir.path())).unwrap();
    let series = fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert_eq!(series.lines().next(), Some("tau,norm,energy,mean_x,spread_x,p_neg,p_pos"));
    for line in series.lines().skip(1) {
        let c: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        // Regions tile the box and are reported as fractions of the norm.
        assert!((c[5] + c[6] - 1.0).abs() < 1e-12, "{line}");
    }
    assert!(dir.path().join("energies.csv").exists());
}

#[test]
fn probe_energies_are_written_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = builtin("squid_not").unwrap();
    s.evolve = None;
    s.init = None;
    let report = run(&s, Some(dir.path())).unwrap();
    let text = fs::read_to_string(dir.path().join("probe_energies.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert_eq!(report.probe_alpha, Some(0.4));
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut s = builtin("squid_static").unwrap();
    s.evolve.as_mut().unwrap().t_end = 0.1;
    run(&s, Some(a.path())).unwrap();
    run(&s, Some(b.path())).unwrap();
    for file in ["energies.csv", "series.csv", "snapshots.jsonl"] {
        let (x, y) = (fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
        assert!(!x.is_empty());
        assert!(x == y, "{file} differs between runs");
    }
}

#[test]
fn imaginary_evolution_renormalizes_by_default() {
    let mut s = builtin("gauss_free").unwrap();
    s.potential = "x^2".into();
    let ev = s.evolve.as_mut().unwrap();
    ev.mode = Mode::Imaginary;
    ev.t_end = 3.0;
    ev.order = Order::Third;
    let report = run(&s, None).unwrap();
    let fin = report.final_state.unwrap();
    assert!((fin.norm - 1.0).abs() < 1e-12);
    assert!((fin.energy - 1.0).abs() < 1e-3, "{}", fin.energy);
}

#[test]
fn every_builtin_round_trips_through_its_text_form() {
    for name in splitstep::builtin::NAMES {
        let s = builtin(name).unwrap();
        assert_eq!(load_config(&s.serialize()).unwrap(), s, "{name}");
    }
}

fn scenario_text() -> impl Strategy<Value = String> {
    (
        1usize..3,
        prop::sample::select(vec![16usize, 32, 64]),
        prop::sample::select(vec!["periodic", "box", "alpha"]),
        0.5f64..20.0,
        -2.0f64..2.0,
        prop::option::of((1usize..5, 1e-10f64..1e-6)),
        prop::option::of((0.1f64..5.0, 1usize..4, 0usize..6, any::<bool>())),
        prop::collection::vec(-3.0f64..3.0, 0..3),
    )
        .prop_map(|(dims, n, extent, size, origin, eigen, evolve, params)| {
            let potential = if dims == 1 { "x^2 + 0.1*cos(x)" } else { "x^2 + 0.1*cos(y)" };
            let mut t = format!("name = prop\npotential = \"{potential}\"\nalpha = \"1 + 0*t\"\n");
            t.push_str("[param]\n");
            for (i, p) in params.iter().enumerate() {
                t.push_str(&format!("p{i} = {p:?}\n"));
            }
            t.push_str(&format!("[grid]\ndims = {dims}\nn = {n}\nextent = {extent}\norigin = {origin:?}\n"));
            match extent {
                "periodic" => t.push_str(&format!("period = {size:?}\n")),
                "box" => t.push_str(&format!("length = {size:?}\n")),
                _ => {}
            }
            if let Some((count, tol)) = eigen {
                t.push_str(&format!("[eigen]\ncount = {count}\ntolerance = {tol:?}\n"));
                t.push_str("[init]\nkind = eigen\nindex = 0\n");
            } else {
                let beta0 = vec!["0.25"; dims].join(", ");
                let k0 = vec!["1"; dims].join(", ");
                t.push_str(&format!("[init]\nkind = gaussian\nbeta0 = {beta0}\nsigma0 = 0.7\nk0 = {k0}\n"));
            }
            // A scenario must solve or evolve something.
            let evolve = if eigen.is_none() { evolve.or(Some((1.0, 2, 0, false))) } else { evolve };
            if let Some((t_end, order, snaps, imaginary)) = evolve {
                let mode = if imaginary { "imaginary" } else { "real" };
                t.push_str(&format!(
                    "[evolve]\nt_end = {t_end:?}\norder = {order}\nsnapshots = {snaps}\nmode = {mode}\n"
                ));
            }
            t
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn config_text_round_trips(text in scenario_text()) {
        let s = load_config(&text).unwrap();
        let again = load_config(&s.serialize()).unwrap();
        prop_assert_eq!(s, again);
    }

    #[test]
    fn config_parser_never_panics(text in "[a-z_=\\[\\]\"#., 0-9\n]{0,80}") {
        let _ = load_config(&text);
    }
}
