mod common;

use std::path::PathBuf;

use common::CubeOracle;
use fd_core::vec3::{add, complexify, neg};
use fd_core::{CVec3, PotentialSpec, Vec3, C64};
use fd_forward::{apply_a, XiQuadrature};

const PROBES: [Vec3; 5] = [
    [2.0, 0.0, 0.0],
    [0.0, 1.0, 0.5],
    [-1.5, 0.5, 1.0],
    [0.3, -0.4, 2.2],
    [1.0, 1.0, 1.0],
];

fn data_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/apply_a_oracle.json")
}

fn setup() -> (CVec3, PotentialSpec) {
    let k = complexify(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
    (k, PotentialSpec::gaussian(0.01, 1.0, 2.0, 4.0))
}

fn oracle_at(oracle: &CubeOracle, k: &CVec3, v: &PotentialSpec, p: &Vec3) -> common::OracleValue {
    oracle.integrate(k, &|x| v.eval(&add(p, x)) * v.eval(&neg(x)))
}

#[test]
#[ignore = "regenerates the frozen oracle values (about a minute)"]
fn regenerate_frozen_oracle() {
    let (k, v) = setup();
    let oracle = CubeOracle::reference();
    let mut probes = Vec::new();
    for p in PROBES {
        let o = oracle_at(&oracle, &k, &v, &p);
        println!("{p:?} {} excluded {:e} points {}", o.value, o.excluded_volume, o.points);
        probes.push(serde_json::json!({
            "p": p,
            "value": [o.value.re, o.value.im],
            "excluded_volume": o.excluded_volume,
        }));
    }
    let doc = serde_json::json!({
        "k": [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]],
        "potential": {"amplitude": 0.01, "width": 1.0},
        "u": "v_hat",
        "oracle": {"n0": oracle.n0, "depth": oracle.depth, "thr": oracle.thr, "xi_max": oracle.xi_max},
        "probes": probes,
    });
    std::fs::write(data_path(), serde_json::to_string_pretty(&doc).unwrap()).unwrap();
}

fn frozen() -> Vec<(Vec3, C64)> {
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data_path()).unwrap()).unwrap();
    doc["probes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            let p: Vec3 = serde_json::from_value(e["p"].clone()).unwrap();
            let v: [f64; 2] = serde_json::from_value(e["value"].clone()).unwrap();
            (p, C64::new(v[0], v[1]))
        })
        .collect()
}

#[test]
fn production_rule_matches_frozen_oracle() {
    let (k, v) = setup();
    let quad = XiQuadrature::new(&k, 6.0, 16);
    let probes = frozen();
    let points: Vec<Vec3> = probes.iter().map(|e| e.0).collect();
    let out = apply_a(&quad, &v, &|x| v.eval(x), &points);
    for ((p, want), got) in probes.iter().zip(&out) {
        let rel = (got - want).norm() / want.norm();
        eprintln!("p={p:?} rel {rel:e}");
        assert!(rel < 1e-3, "p={p:?}: {got} vs {want} (rel {rel:e})");
    }
}

#[test]
fn frozen_values_come_from_the_oracle() {
    let (k, v) = setup();
    let (p, want) = frozen()[0];
    let got = oracle_at(&CubeOracle::reference(), &k, &v, &p).value;
    assert!((got - want).norm() <= 1e-12 * want.norm());
}

#[test]
fn production_rule_tracks_oracle_across_circle_sizes() {
    let v = PotentialSpec::gaussian(1.0, 1.0, 2.0, 4.0);
    let oracle = CubeOracle { n0: 64, depth: 9, thr: 4.0, xi_max: 6.0 };
    let cases: [(CVec3, Vec3); 3] = [
        (complexify(&[0.3, 0.0, 0.0], &[0.0, 0.3, 0.0]), [0.6, 0.0, 0.0]),
        (complexify(&[0.0, 2.4, 0.0], &[0.0, 0.0, -2.4]), [0.5, -1.0, 0.2]),
        (complexify(&[8.0, 0.0, 0.0], &[0.0, 8.0, 0.0]), [1.0, 0.5, 0.0]),
    ];
    for (k, p) in cases {
        let want = oracle_at(&oracle, &k, &v, &p).value;
        let quad = XiQuadrature::new(&k, 6.0, 16);
        let got = apply_a(&quad, &v, &|x| v.eval(x), &[p])[0];
        let rel = (got - want).norm() / want.norm();
        eprintln!("k={k:?} rel {rel:e}");
        assert!(rel < 2e-3, "k={k:?}: {got} vs {want} (rel {rel:e})");
    }
}
