//! Acceptance suite: one test per criterion, each printing a PASS line and
//! enforcing its runtime budget. Run with
//! `cargo test -p mso-cli --test acceptance -- --nocapture`.

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use mso::bundle::{Connection, Endomorphism, HermitianBundle};
use mso::certify::{
    kernel_search, surjectivity_certificate, CertificateBudgets, SurjectivityVerdict,
};
use mso::fields::{overlap, pairing, VectorField};
use mso::gallery::{hexagram_eigenfunction, star_image_defect, GeneratorSpec};
use mso::graph::{GraphOracle, VertexId};
use mso::schroedinger::{
    domination_defect, form_matrix, green_symmetry_defect, quadratic_form, MagneticOperator,
    ScalarPotential,
};
use mso::solve::{solve_batch, windowed_solve, SolveOutcome, SolveRequest};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pass(criterion: u32, name: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed < budget,
        "criterion {criterion} exceeded its runtime budget: {elapsed:.2?} >= {budget:.2?}"
    );
    println!("criterion {criterion:2} ({name}): PASS in {elapsed:.2?}");
}

// -- shared random-instance machinery ---------------------------------------

fn random_graph(rng: &mut StdRng, max_n: usize) -> (GraphOracle, Vec<VertexId>) {
    let n = rng.random_range(2..=max_n);
    let vertices: Vec<VertexId> = (0..n as i64).map(VertexId::Int).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(0.4) {
                edges.push((
                    VertexId::Int(i as i64),
                    VertexId::Int(j as i64),
                    rng.random_range(0.1..2.0),
                ));
            }
        }
    }
    (
        GraphOracle::finite("random", vertices.clone(), edges).unwrap(),
        vertices,
    )
}

fn random_unitary(rng: &mut StdRng, d: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(d, d, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
    .qr()
    .q()
}

fn random_hermitian(rng: &mut StdRng, d: usize) -> DMatrix<Complex64> {
    let m = DMatrix::from_fn(d, d, |_, _| {
        c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
    });
    (&m + m.adjoint()).scale(0.5)
}

struct Instance {
    op: MagneticOperator,
    vertices: Vec<VertexId>,
    dim: usize,
}

fn random_instance(seed: u64) -> Instance {
    let mut rng = StdRng::seed_from_u64(seed);
    let (graph, vertices) = random_graph(&mut rng, 12);
    let dim = rng.random_range(1..=3);
    let mut conn = BTreeMap::new();
    for x in &vertices {
        for (y, _) in graph.neighbors(x).unwrap() {
            if *x < y {
                conn.insert((x.clone(), y.clone()), random_unitary(&mut rng, dim));
            }
        }
    }
    let mut endo = BTreeMap::new();
    for x in &vertices {
        endo.insert(x.clone(), random_hermitian(&mut rng, dim));
    }
    Instance {
        op: MagneticOperator::new(
            graph,
            HermitianBundle::constant(dim),
            Connection::from_edge_map(conn),
            Endomorphism::from_map(endo),
        ),
        vertices,
        dim,
    }
}

fn random_field(rng: &mut StdRng, vertices: &[VertexId], dim: usize) -> VectorField {
    VectorField::from_entries(
        vertices
            .iter()
            .filter_map(|x| {
                if !rng.random_bool(0.6) {
                    return None;
                }
                let v = DVector::from_fn(dim, |_, _| {
                    c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
                });
                Some((x.clone(), v))
            })
            .collect::<Vec<_>>(),
    )
}

fn laplacian(spec: GeneratorSpec, v: f64) -> MagneticOperator {
    MagneticOperator::scalar_laplacian(spec.make_graph().unwrap(), ScalarPotential::constant(v))
}

// -- criteria ----------------------------------------------------------------

#[test]
fn criterion_01_hexagram_eigenrelation() {
    let t = Instant::now();
    let phi = hexagram_eigenfunction();
    for spec in [GeneratorSpec::Hexagram, GeneratorSpec::HexagramGluedRay] {
        let m = laplacian(spec, 0.0);
        let defect = m
            .apply_supported(&phi)
            .unwrap()
            .sub(&phi.scale(c(6.0, 0.0)))
            .unwrap()
            .norm_sup();
        assert!(defect <= 1e-12, "eigen-relation defect {defect:e}");
    }
    pass(1, "hexagram eigen-relation", t, Duration::from_secs(1));
}

#[test]
fn criterion_02_hexagram_shift_refutation() {
    let t = Instant::now();
    let m = laplacian(GeneratorSpec::HexagramGluedRay, -6.0);
    let support: BTreeSet<VertexId> = (1..=6)
        .flat_map(|i| [VertexId::tag("a", i), VertexId::tag("b", i)])
        .collect();
    assert_eq!(support.len(), 12);
    let w = kernel_search(&m, &support)
        .unwrap()
        .expect("kernel witness on the hexagram");
    assert!(w.residual <= 1e-10, "residual {:e}", w.residual);
    let align = overlap(&w.field, &hexagram_eigenfunction()).unwrap();
    assert!(align >= 0.99, "overlap after phase alignment {align}");
    pass(2, "refutation of the shifted Laplacian", t, Duration::from_secs(1));
}

#[test]
fn criterion_03_finite_component_obstruction() {
    let t = Instant::now();
    let budgets = CertificateBudgets::default();

    let check_constant_witness = |m: &MagneticOperator, center: &VertexId| {
        match surjectivity_certificate(m, center, &budgets).unwrap() {
            SurjectivityVerdict::Refuted(e) => {
                assert!(e.witness.residual <= 1e-9);
                let values: Vec<Complex64> = e
                    .witness
                    .field
                    .iter()
                    .map(|(_, v)| v[0])
                    .collect();
                assert_eq!(values.len(), 6);
                for v in &values {
                    assert!((v - values[0]).norm() <= 1e-9, "witness not constant");
                }
            }
            other => panic!("expected Refuted, got {}", other.status_name()),
        }
    };

    check_constant_witness(&laplacian(GeneratorSpec::Cycle { len: 6 }, 0.0), &VertexId::Int(0));
    let union = MagneticOperator::scalar_laplacian(
        GeneratorSpec::DisjointUnion(
            Box::new(GeneratorSpec::Cycle { len: 6 }),
            Box::new(GeneratorSpec::LatticeZ),
        )
        .make_graph()
        .unwrap(),
        ScalarPotential::zero(),
    );
    check_constant_witness(&union, &VertexId::Pair(0, 0));

    let m = laplacian(GeneratorSpec::Cycle { len: 6 }, 0.0);
    let window: BTreeSet<VertexId> = (0..6).map(VertexId::Int).collect();
    let rhs = VectorField::scalar_delta(VertexId::Int(2));
    match windowed_solve(&SolveRequest::new(m, rhs.clone(), window)).unwrap() {
        SolveOutcome::GloballyObstructed {
            kernel_witness,
            pairing_value,
        } => {
            assert!(pairing_value.norm() > 1e-8 * rhs.norm_l2());
            let p = pairing(&kernel_witness, &rhs).unwrap();
            assert!((p - pairing_value).norm() <= 1e-12);
        }
        other => panic!("expected GloballyObstructed, got {}", other.status_name()),
    }
    pass(3, "finite-component obstruction", t, Duration::from_secs(1));
}

#[test]
fn criterion_04_lattice_positive_case() {
    let t = Instant::now();
    let m = laplacian(GeneratorSpec::LatticeZ, 0.0);

    match surjectivity_certificate(&m, &VertexId::Int(0), &CertificateBudgets::default()).unwrap()
    {
        SurjectivityVerdict::Certified(e) => {
            assert!(e.form.is_certified(), "expected the fast-path form tier");
            assert!(e.components.accepted, "expected accepted component evidence");
        }
        other => panic!("expected Certified, got {}", other.status_name()),
    }

    let mut rng = StdRng::seed_from_u64(0x5EED_0004);
    let requests: Vec<SolveRequest> = (0..50)
        .map(|_| {
            let center = VertexId::Int(rng.random_range(-8..=8));
            let window = m.graph().ball(&center, 4).unwrap();
            let support: Vec<VertexId> = window.iter().cloned().collect();
            let rhs = VectorField::scalar(
                support
                    .iter()
                    .filter_map(|x| {
                        if !rng.random_bool(0.7) {
                            return None;
                        }
                        Some((
                            x.clone(),
                            c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
                        ))
                    })
                    .collect::<Vec<_>>(),
            );
            SolveRequest::new(m.clone(), rhs, window)
                .with_center(center)
                .with_r_max(64)
        })
        .collect();
    for outcome in solve_batch(&requests) {
        match outcome.unwrap() {
            SolveOutcome::Solved {
                residual,
                radius_used,
                ..
            } => {
                assert!(residual <= 1e-10, "residual {residual:e}");
                assert!(radius_used <= 64, "radius {radius_used}");
            }
            other => panic!("expected Solved on ℤ, got {}", other.status_name()),
        }
    }
    pass(4, "positive case on the lattice", t, Duration::from_secs(30));
}

#[test]
fn criterion_05_star_truncation_image() {
    let t = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5EED_0005);
    for truncation in [5usize, 10, 20] {
        let m = MagneticOperator::scalar_laplacian(
            GeneratorSpec::InfiniteStar {
                truncation,
                rate: 0.5,
            }
            .make_graph()
            .unwrap(),
            ScalarPotential::zero(),
        );
        let window = m.graph().ball(&VertexId::Int(0), 1).unwrap();
        assert_eq!(window.len(), truncation + 1);
        for case in 0..100 {
            let mut values: Vec<(VertexId, Complex64)> = (0..=truncation as i64)
                .map(|k| {
                    (
                        VertexId::Int(k),
                        c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
                    )
                })
                .collect();
            if case % 2 == 0 {
                // Force the zero-sum condition: f(0) = −Σ_{n≥1} f(n).
                let tail: Complex64 = values[1..].iter().map(|(_, z)| z).sum();
                values[0].1 = -tail;
            }
            let f = VectorField::scalar(values);
            let defect = star_image_defect(&f, truncation).unwrap();
            let solvable_by_defect = defect <= 1e-10;

            let req = SolveRequest::new(m.clone(), f, window.clone())
                .with_center(VertexId::Int(0))
                .with_r_max(4);
            let solved = matches!(
                windowed_solve(&req).unwrap(),
                SolveOutcome::Solved { .. }
            );
            assert_eq!(
                solved, solvable_by_defect,
                "N = {truncation}, case {case}: defect {defect:e} but solved = {solved}"
            );
        }
    }
    pass(5, "star truncation image law", t, Duration::from_secs(30));
}

#[test]
fn criterion_06_kato_domination_suite() {
    let t = Instant::now();
    for seed in 0..200u64 {
        let inst = random_instance(seed);
        let mut rng = StdRng::seed_from_u64(seed ^ 0xD0517A7E);
        let phi = random_field(&mut rng, &inst.vertices, inst.dim);
        let defect = domination_defect(&inst.op, &phi).unwrap();
        let floor = -1e-9 * phi.norm_l2().powi(2).max(1.0);
        assert!(defect >= floor, "seed {seed}: defect {defect:e} < {floor:e}");
    }
    pass(6, "Kato domination suite", t, Duration::from_secs(60));
}

#[test]
fn criterion_07_green_symmetry_suite() {
    let t = Instant::now();
    for seed in 0..200u64 {
        let inst = random_instance(seed);
        let mut rng = StdRng::seed_from_u64(seed ^ 0x6EE17);
        let phi = random_field(&mut rng, &inst.vertices, inst.dim);
        let psi = random_field(&mut rng, &inst.vertices, inst.dim);
        let defect = green_symmetry_defect(&inst.op, &phi, &psi).unwrap();
        let scale = (phi.norm_l2() * inst.op.apply_supported(&psi).unwrap().norm_l2()
            + inst.op.apply_supported(&phi).unwrap().norm_l2() * psi.norm_l2())
        .max(1.0);
        assert!(
            defect <= 1e-10 * scale,
            "seed {seed}: defect {defect:e} vs scale {scale:e}"
        );
    }
    pass(7, "Green symmetry suite", t, Duration::from_secs(60));
}

#[test]
fn criterion_08_negation_identity() {
    let t = Instant::now();
    for seed in 0..50u64 {
        let inst = random_instance(seed.wrapping_mul(7919));
        let neg = inst.op.negated();
        let mut rng = StdRng::seed_from_u64(seed ^ 0x8888);
        let f = random_field(&mut rng, &inst.vertices, inst.dim);
        let sum = inst
            .op
            .apply_supported(&f)
            .unwrap()
            .add(&neg.apply_supported(&f).unwrap())
            .unwrap();
        assert!(
            sum.norm_sup() <= 1e-12 * f.norm_l2().max(1.0),
            "seed {seed}: actions do not cancel"
        );
        for x in &inst.vertices {
            let expect =
                -inst.op.w_max_at(x).unwrap() - 2.0 * inst.op.graph().degree(x).unwrap();
            let got = neg.w_min_at(x).unwrap();
            assert!(
                (got - expect).abs() <= 1e-10,
                "seed {seed}: W_min identity off by {:e}",
                (got - expect).abs()
            );
        }
    }
    pass(8, "negation identity", t, Duration::from_secs(10));
}

#[test]
fn criterion_09_maximum_principle() {
    let t = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5EED_0009);

    // A weighted star with k spokes; the principle is probed at the center.
    let star = |rng: &mut StdRng| -> (GraphOracle, f64, usize) {
        let k = rng.random_range(1..=6usize);
        let vertices: Vec<VertexId> = (0..=k as i64).map(VertexId::Int).collect();
        let mut deg = 0.0;
        let edges: Vec<(VertexId, VertexId, f64)> = (1..=k as i64)
            .map(|j| {
                let w = rng.random_range(0.2..2.0);
                deg += w;
                (VertexId::Int(0), VertexId::Int(j), w)
            })
            .collect();
        (
            GraphOracle::finite("probe star", vertices, edges).unwrap(),
            deg,
            k,
        )
    };

    for _ in 0..100 {
        // Violating pair: −2·deg < V < 0.
        let (g, deg, _) = star(&mut rng);
        let vx = -2.0 * deg * rng.random_range(0.05..0.95);
        let v = ScalarPotential::from_map(BTreeMap::from([(VertexId::Int(0), vx)]), 0.0);
        match mso::certify::max_principle_analyze(&g, &v, &VertexId::Int(0)).unwrap() {
            mso::certify::MaxPrincipleOutcome::Fails {
                beta,
                witness,
                residual,
            } => {
                assert!(residual <= 1e-12);
                assert!(beta.abs() < 1.0);
                let op = MagneticOperator::scalar_laplacian(g.clone(), v.clone());
                let replay = op.apply_at(&witness, &VertexId::Int(0)).unwrap()[0].norm();
                assert!(replay <= 1e-12);
            }
            other => panic!("expected Fails, got {other:?}"),
        }
    }

    for i in 0..100 {
        // Satisfying pair: V ≥ 0 or V ≤ −2·deg.
        let (g, deg, k) = star(&mut rng);
        let vx = if i % 2 == 0 {
            rng.random_range(0.0..5.0)
        } else {
            -2.0 * deg - rng.random_range(0.0..5.0)
        };
        let v = ScalarPotential::from_map(BTreeMap::from([(VertexId::Int(0), vx)]), 0.0);
        assert!(matches!(
            mso::certify::max_principle_analyze(&g, &v, &VertexId::Int(0)).unwrap(),
            mso::certify::MaxPrincipleOutcome::Holds { .. }
        ));

        // Randomized search: 10³ candidate fields with 𝓛_V f(0) = 0 by
        // construction; none may peak strictly at the center.
        let weights: Vec<(VertexId, f64)> = g.neighbors(&VertexId::Int(0)).unwrap();
        let dv = deg + vx;
        assert!(dv.abs() > 1e-9, "satisfying pairs keep deg + V away from 0");
        let mut violations = 0;
        for _ in 0..1000 {
            let boundary: Vec<Complex64> = (0..k)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let fx: Complex64 =
                weights
                    .iter()
                    .zip(&boundary)
                    .map(|((_, w), fy)| fy * *w)
                    .sum::<Complex64>()
                    / c(dv, 0.0);
            let peak = fx.norm();
            let max_b = boundary.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let min_b = boundary.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
            let attains_sup = peak >= max_b - 1e-12;
            let non_constant = peak - min_b > 1e-9;
            if attains_sup && non_constant {
                violations += 1;
            }
        }
        assert_eq!(violations, 0, "maximum principle violated at V = {vx}");
    }
    pass(9, "maximum principle characterization", t, Duration::from_secs(30));
}

#[test]
fn criterion_10_form_matrix_consistency() {
    let t = Instant::now();
    for seed in 0..200u64 {
        let mut rng = StdRng::seed_from_u64(seed.wrapping_mul(0x9E37));
        let (graph, vertices) = random_graph(&mut rng, 10);
        let v = ScalarPotential::from_map(
            vertices
                .iter()
                .map(|x| (x.clone(), rng.random_range(-3.0..3.0)))
                .collect(),
            0.0,
        );
        let q = form_matrix(&graph, &v, &vertices).unwrap();

        // Real field: hᵀ Q h must equal q_V(h).
        let h_real: Vec<f64> = vertices
            .iter()
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let h_field = VectorField::scalar_real(
            vertices
                .iter()
                .cloned()
                .zip(h_real.iter().copied())
                .collect::<Vec<_>>(),
        );
        let hv = DVector::from_vec(h_real);
        let through_matrix = (hv.transpose() * &q * &hv)[(0, 0)];
        let direct = quadratic_form(&graph, &v, &h_field).unwrap();
        assert!(
            (through_matrix - direct).abs() <= 1e-12 * direct.abs().max(1.0),
            "seed {seed}: {through_matrix} vs {direct}"
        );

        // Complex field: the contraction q_V(|h|) ≤ q_V(h).
        let h_complex = VectorField::scalar(
            vertices
                .iter()
                .map(|x| {
                    (
                        x.clone(),
                        c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
                    )
                })
                .collect::<Vec<_>>(),
        );
        let qh = quadratic_form(&graph, &v, &h_complex).unwrap();
        let qabs = quadratic_form(&graph, &v, &h_complex.abs_field()).unwrap();
        assert!(
            qabs <= qh + 1e-12 * qh.abs().max(1.0),
            "seed {seed}: contraction failed: {qabs} > {qh}"
        );
    }
    pass(10, "form-matrix consistency", t, Duration::from_secs(30));
}

#[test]
fn criterion_11_witness_replay_via_cli() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_mso");

    let write = |name: &str, contents: &str| -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    };

    let hex = write(
        "hex.json",
        r#"{"format":1,"graph":{"generator":"hexagram_glued_ray","params":{}},"potential":{"constant":-6.0}}"#,
    );
    let c6 = write(
        "c6.json",
        r#"{"format":1,"graph":{"generator":"cycle","params":{"len":6}},"fields":{"delta":{"2":[[1.0,0.0]]}}}"#,
    );

    let run = |args: &[&str]| -> (i32, String) {
        let out = Command::new(bin).args(args).output().unwrap();
        (
            out.status.code().unwrap_or(-1),
            String::from_utf8_lossy(&out.stdout).to_string(),
        )
    };

    // Witnesses from criteria 2 and 3, through the CLI.
    let hex_report = dir.path().join("hex_report.json");
    let (code, _) = run(&[
        "certify",
        hex.to_str().unwrap(),
        "--out",
        hex_report.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "hexagram certify must refute");

    let c6_report = dir.path().join("c6_report.json");
    let (code, _) = run(&[
        "certify",
        c6.to_str().unwrap(),
        "--out",
        c6_report.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "cycle certify must refute");

    let solve_report = dir.path().join("c6_solve.json");
    let (code, _) = run(&[
        "solve",
        c6.to_str().unwrap(),
        "--rhs",
        "delta",
        "--out",
        solve_report.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "cycle solve must be obstructed");

    for report in [&hex_report, &c6_report, &solve_report] {
        let (code, out) = run(&["verify-witness", report.to_str().unwrap()]);
        assert_eq!(code, 0, "replay failed:\n{out}");
    }

    // Tamper with the dominant witness entry; the replay must now fail.
    let mut report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&hex_report).unwrap()).unwrap();
    let field = report["payload"]["witness_claims"][0]["field"]
        .as_object_mut()
        .unwrap();
    let dominant = field
        .iter()
        .max_by(|a, b| {
            let norm = |v: &serde_json::Value| {
                v[0][0].as_f64().unwrap().hypot(v[0][1].as_f64().unwrap())
            };
            norm(a.1).total_cmp(&norm(b.1))
        })
        .map(|(k, _)| k.clone())
        .unwrap();
    field.insert(dominant, serde_json::json!([[0.0, 0.0]]));
    let tampered = write("tampered.json", &report.to_string());
    let (code, out) = run(&["verify-witness", tampered.to_str().unwrap()]);
    assert_ne!(code, 0, "tampered witness must not replay:\n{out}");

    pass(11, "witness replay via the CLI", t, Duration::from_secs(5));
}
