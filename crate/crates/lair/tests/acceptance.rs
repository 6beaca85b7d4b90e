//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured quantities (run with `--nocapture` to see them). Criteria 6
//! and 9 carry sub-clauses that this discretization cannot reach; those
//! tests print every measured value before asserting the stated chain, and
//! their failure messages say which inequality broke.
//!
//! Criterion 12 (CLI byte-determinism) lives in the CLI crate's test suite.

use lair::dense::DenseMatrix;
use lair::diagnostics::{
    cgc_error_propagator, cycle_complexity, eigenvalues, f_relax_error_propagator,
    projection_norm_check, sort_spectrum, two_grid_g,
};
use lair::hierarchy::{setup, InterpolationKind, RelaxationKind, RestrictionKind, SetupConfig};
use lair::krylov::{gmres, SolveConfig};
use lair::problems::{
    advection_diffusion_reaction, block_diag_scale, synthetic_block_advection, time_step_system,
    PdeSpec, ReactionField, VelocityField,
};
use lair::rng::{random_guess, SplitMix64};
use lair::sparse::{BlockLayout, SparseMatrix};
use lair::strength::{block_condense, classical_soc, rs_first_pass, CfSplitting, Label};
use lair::transfer::{
    extract_w, extract_z, ideal_restriction, lair_neighborhood, lair_restriction,
    neumann_restriction, one_point_interpolation, Distance, FidelitySetup, RestrictionConfig,
};
use std::time::Instant;

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn random_dd(rng: &mut SplitMix64, n: usize, density: f64) -> SparseMatrix {
    let mut trips = Vec::new();
    let mut sums = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.next_f64() < density {
                let v = rng.uniform(-1.0, 0.2);
                trips.push((i, j, v));
                sums[i] += v.abs();
            }
        }
    }
    for (i, s) in sums.iter().enumerate() {
        trips.push((i, i, s + rng.uniform(0.5, 1.5)));
    }
    SparseMatrix::from_triplets(n, n, &trips).unwrap()
}

fn random_split(rng: &mut SplitMix64, n: usize) -> CfSplitting {
    loop {
        let labels: Vec<Label> = (0..n)
            .map(|_| {
                if rng.next_f64() < 0.4 {
                    Label::C
                } else {
                    Label::F
                }
            })
            .collect();
        let split = CfSplitting::from_labels(&labels);
        if split.n_c() > 1 && split.n_f() > 1 {
            return split;
        }
    }
}

/// Criterion 1: the lAIR defining identity on every C-row of a corpus of at
/// least 20 operators spanning kappa in {0, h, 1}.
#[test]
fn criterion_01_defining_identity() {
    let t0 = Instant::now();
    let mut corpus: Vec<(String, SparseMatrix, Option<BlockLayout>)> = Vec::new();
    // 1D transport chains
    for kappa_sel in 0..3 {
        let spec = PdeSpec {
            dim: 1,
            n: 64,
            kappa: kappa_for(kappa_sel, 64),
            velocity: VelocityField::Constant { angle: 0.0 },
            reaction: ReactionField::Constant(0.0),
            time_step: None,
        };
        let (a, _) = advection_diffusion_reaction(&spec).unwrap();
        corpus.push((format!("1d chain k{kappa_sel}"), a, None));
    }
    // 2D curved and recirculating
    for n in [16usize, 24] {
        for kappa_sel in 0..3 {
            let spec = PdeSpec {
                dim: 2,
                n,
                kappa: kappa_for(kappa_sel, n),
                velocity: VelocityField::CurvedNorthEast,
                reaction: ReactionField::PiecewiseGamma,
                time_step: None,
            };
            let (a, _) = advection_diffusion_reaction(&spec).unwrap();
            corpus.push((format!("2d curved n{n} k{kappa_sel}"), a, None));
        }
    }
    for kappa_sel in 1..3 {
        let spec = PdeSpec {
            dim: 2,
            n: 20,
            kappa: kappa_for(kappa_sel, 20),
            velocity: VelocityField::Recirculating,
            reaction: ReactionField::Constant(0.0),
            time_step: None,
        };
        let (a, _) = advection_diffusion_reaction(&spec).unwrap();
        corpus.push((format!("2d recirc k{kappa_sel}"), a, None));
    }
    // one block corpus entry
    {
        let spec = PdeSpec {
            dim: 2,
            n: 12,
            kappa: 0.0,
            velocity: VelocityField::CurvedNorthEast,
            reaction: ReactionField::PiecewiseGamma,
            time_step: None,
        };
        let layout = BlockLayout::new(2);
        let (a, _) = synthetic_block_advection(&spec, layout).unwrap();
        corpus.push(("2d block curved".into(), a, Some(layout)));
    }

    let mut operators = 0usize;
    let mut rows_checked = 0usize;
    let mut worst: f64 = 0.0;
    for (name, a, block) in &corpus {
        for distance in [Distance::One, Distance::Two] {
            let k = block.map_or(1, |b| b.block_size);
            let basis = if k > 1 {
                block_condense(a, block.unwrap())
            } else {
                a.clone()
            };
            let split = rs_first_pass(&classical_soc(&basis, 0.4));
            if split.n_c() == 0 || split.n_f() == 0 {
                panic!("degenerate split for {name}");
            }
            let theta = distance.default_theta();
            let s = classical_soc(&basis, theta);
            let mut cfg = RestrictionConfig::new(distance).with_theta(theta);
            if let Some(b) = block {
                cfg = cfg.with_block(*b);
            }
            let rest = lair_restriction(a, &split, &s, &cfg);
            let ra = rest.r.spmm(a);
            operators += 1;
            for node in 0..split.len() {
                if !split.is_c(node) {
                    continue;
                }
                let c = split.coarse_index(node);
                if rest.fallback_rows.contains(&(c * k)) {
                    continue;
                }
                let hood = lair_neighborhood(&s, &split, node, distance);
                for r in 0..k {
                    let row_inf = a.row_max_abs(node * k + r);
                    for &l in &hood {
                        for q in 0..k {
                            let v = ra.get(c * k + r, l * k + q).abs();
                            let rel = v / row_inf;
                            worst = worst.max(rel);
                            assert!(
                                v < 1e-9 * row_inf,
                                "{name} d{distance:?}: C-row {c} leaves |(RA)| = {v:.3e} at column {l}"
                            );
                            rows_checked += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(operators >= 20, "corpus has only {operators} operators");
    println!(
        "ACCEPTANCE 1 defining-identity: PASS ({operators} operators, {rows_checked} entries, worst rel {worst:.2e}, {:.1}s)",
        t0.elapsed().as_secs_f64()
    );
}

fn kappa_for(sel: usize, n: usize) -> f64 {
    match sel {
        0 => 0.0,
        1 => 1.0 / (n as f64 + 1.0), // kappa = h
        _ => 1.0,
    }
}

/// Criterion 2: ideal restriction plus exact F-solve drives random error
/// below 1e-10 relative in one two-level cycle.
#[test]
fn criterion_02_ideal_exactness() {
    let t0 = Instant::now();
    let mut rng = SplitMix64::new(2024);
    let mut worst: f64 = 0.0;
    for n in [60usize, 120, 200] {
        let a = random_dd(&mut rng, n, 0.08);
        let mut cfg = SetupConfig::lair(Distance::One);
        cfg.restriction = RestrictionKind::Ideal;
        cfg.relaxation = RelaxationKind::ExactFSolve;
        cfg.theta_d = 0.0;
        cfg.max_levels = 2;
        cfg.max_coarse = 4;
        let h = setup(&a, &cfg).unwrap();
        assert_eq!(h.depth(), 2);
        for trial in 0..5u64 {
            let e0 = random_guess(n, 7000 + trial);
            let mut x = e0.clone();
            h.vcycle(0, &mut x, &vec![0.0; n]);
            let rel = l2(&x) / l2(&e0);
            worst = worst.max(rel);
            assert!(rel < 1e-10, "n={n} trial {trial}: residual error {rel:.3e}");
        }
    }
    println!(
        "ACCEPTANCE 2 ideal-exactness: PASS (worst one-cycle error {worst:.2e}, {:.1}s)",
        t0.elapsed().as_secs_f64()
    );
}

/// Criterion 3: nonzero spectrum of the dense two-grid propagator equals the
/// spectrum of G for all four restriction variants.
#[test]
fn criterion_03_spectrum_oracle() {
    let t0 = Instant::now();
    let mut rng = SplitMix64::new(303);
    let mut instances = 0usize;
    let mut worst: f64 = 0.0;
    while instances < 10 {
        // n <= 100; moderate sizes keep the eigenproblems well conditioned,
        // leaving real margin under the pinned 1e-8 comparison tolerance
        let n = 40 + rng.below(41);
        let a = random_dd(&mut rng, n, 0.12);
        let split = random_split(&mut rng, n);
        let n_f = split.n_f();
        let n_c = split.n_c();
        let s1 = classical_soc(&a, 0.1);
        let s2 = classical_soc(&a, 0.2);
        let interp = one_point_interpolation(&a, &s1, &split);
        let w = extract_w(&interp.p, &split).to_dense();

        let variants: Vec<(&str, SparseMatrix)> = vec![
            ("ideal", ideal_restriction(&a, &split).unwrap().r),
            (
                "lair1",
                lair_restriction(&a, &split, &s1, &RestrictionConfig::new(Distance::One)).r,
            ),
            (
                "lair2",
                lair_restriction(&a, &split, &s2, &RestrictionConfig::new(Distance::Two)).r,
            ),
            ("neumann2", neumann_restriction(&a, &split, 2).unwrap().r),
        ];
        let blocks = a.extract_cf_blocks(&split);
        // per-row varied weights: a clustered spectrum (many F rows nearly
        // diagonal under one omega) is only resolvable to sqrt(eps) by any
        // dense eigensolver, which would sit on the 1e-8 comparison line
        let dinv: Vec<f64> = blocks
            .ff
            .diagonal()
            .iter()
            .map(|d| rng.uniform(0.5, 0.95) / d)
            .collect();
        let delta = DenseMatrix::from_fn(n_f, n_f, |i, j| if i == j { dinv[i] } else { 0.0 });
        let a_fc = a.permute_symmetric(&split.fc_order()).to_dense();
        let e_relax = f_relax_error_propagator(&a, &split, &delta);

        for (name, r_op) in variants {
            let z = extract_z(&r_op, &split).to_dense();
            let g = two_grid_g(&a, &split, &w, &z, &delta).unwrap();
            // dense propagator in the same FC coordinates
            let mut p_d = DenseMatrix::zeros(n, n_c);
            let mut r_d = DenseMatrix::zeros(n_c, n);
            for i in 0..n_f {
                for j in 0..n_c {
                    p_d[(i, j)] = w[(i, j)];
                    r_d[(j, i)] = z[(j, i)];
                }
            }
            for j in 0..n_c {
                p_d[(n_f + j, j)] = 1.0;
                r_d[(j, n_f + j)] = 1.0;
            }
            let e = e_relax.matmul(&cgc_error_propagator(&a_fc, &p_d, &r_d).unwrap());
            let mut spec_e = eigenvalues(&e);
            let mut spec_g = eigenvalues(&g);
            spec_g.extend(std::iter::repeat((0.0, 0.0)).take(n_c));
            sort_spectrum(&mut spec_e);
            sort_spectrum(&mut spec_g);
            for (ee, gg) in spec_e.iter().zip(&spec_g) {
                let d = ((ee.0 - gg.0).powi(2) + (ee.1 - gg.1).powi(2)).sqrt();
                worst = worst.max(d);
                assert!(
                    d < 1e-8,
                    "instance {instances} {name}: eigenvalue mismatch {d:.3e} ({ee:?} vs {gg:?})"
                );
            }
        }
        instances += 1;
    }
    println!(
        "ACCEPTANCE 3 spectrum-oracle: PASS ({instances} instances x 4 variants, worst {worst:.2e}, {:.1}s)",
        t0.elapsed().as_secs_f64()
    );
}

/// Criterion 4: projection-norm identity; records which singular-value
/// flavor satisfies it and requires one of the two on every instance.
#[test]
fn criterion_04_projection_norm() {
    let t0 = Instant::now();
    let mut rng = SplitMix64::new(404);
    let mut max_holds = 0usize;
    let mut min_holds = 0usize;
    for instance in 0..10 {
        let n = 30 + rng.below(21);
        let a = random_dd(&mut rng, n, 0.3);
        let split = random_split(&mut rng, n);
        let blocks = a.extract_cf_blocks(&split);
        let dinv: Vec<f64> = blocks.ff.diagonal().iter().map(|d| 1.0 / d).collect();
        let delta =
            DenseMatrix::from_fn(
                split.n_f(),
                split.n_f(),
                |i, j| {
                    if i == j {
                        dinv[i]
                    } else {
                        0.0
                    }
                },
            );
        let check = projection_norm_check(&a, &split, &delta).unwrap();
        let rel_max = (check.pi_norm_sq - check.rhs_max).abs() / check.pi_norm_sq;
        let rel_min = (check.pi_norm_sq - check.rhs_min).abs() / check.pi_norm_sq;
        if rel_max < 1e-6 {
            max_holds += 1;
        }
        if rel_min < 1e-6 {
            min_holds += 1;
        }
        assert!(
            rel_max < 1e-6 || rel_min < 1e-6,
            "instance {instance}: neither flavor holds ({check:?})"
        );
    }
    println!(
        "ACCEPTANCE 4 projection-norm: PASS (sigma_max holds on {max_holds}/10, sigma_min on {min_holds}/10; the proof's max flavor is the identity, {:.1}s)",
        t0.elapsed().as_secs_f64()
    );
    assert_eq!(
        max_holds, 10,
        "the max flavor should hold on every instance"
    );
}

/// Criterion 5: row scaling leaves the lAIR coarse-grid-correction error
/// propagator unchanged (P fixed).
#[test]
fn criterion_05_row_scaling() {
    let t0 = Instant::now();
    let mut rng = SplitMix64::new(505);
    let n = 50;
    let a = random_dd(&mut rng, n, 0.2);
    let cfg = RestrictionConfig::new(Distance::Two);
    let s = classical_soc(&a, cfg.theta_r);
    let split = rs_first_pass(&classical_soc(&a, 0.4));
    let interp = one_point_interpolation(&a, &s, &split);
    let p = interp.p.to_dense();
    let base_r = lair_restriction(&a, &split, &s, &cfg);
    let e_base = cgc_error_propagator(&a.to_dense(), &p, &base_r.r.to_dense()).unwrap();
    let mut worst: f64 = 0.0;
    for trial in 0..5u64 {
        let mut drng = SplitMix64::new(5050 + trial);
        let d: Vec<f64> = (0..n).map(|_| drng.uniform(0.1, 10.0)).collect();
        let da = a.scale_rows(&d);
        let s_scaled = classical_soc(&da, cfg.theta_r);
        let rest = lair_restriction(&da, &split, &s_scaled, &cfg);
        let e_scaled = cgc_error_propagator(&da.to_dense(), &p, &rest.r.to_dense()).unwrap();
        let diff = e_base.sub(&e_scaled).max_abs();
        worst = worst.max(diff);
        assert!(
            diff < 1e-9,
            "diagonal {trial}: propagator moved by {diff:.3e}"
        );
    }
    println!(
        "ACCEPTANCE 5 row-scaling: PASS (5 diagonals, worst entrywise drift {worst:.2e}, {:.1}s)",
        t0.elapsed().as_secs_f64()
    );
}

/// Criterion 6: Table-1 qualitative reproduction. The 1D-chain clause holds
/// exactly. On the recirculating problem the lAIR ordering holds on the
/// semicoarsened splitting; the first-pass values and the published
/// reference numbers are logged. The Neumann > 0.9 clause is asserted as
/// stated and is not attainable with a first-order upwind M-matrix (the
/// failure message explains why).
#[test]
fn criterion_06_fidelity_table() {
    let t0 = Instant::now();
    // 1D chain: lAIR_d equals Neumann_d exactly for d in {1, 2}
    let chain = PdeSpec {
        dim: 1,
        n: 200,
        kappa: 0.0,
        velocity: VelocityField::Constant { angle: 0.0 },
        reaction: ReactionField::Constant(0.0),
        time_step: None,
    };
    let (a_chain, _) = advection_diffusion_reaction(&chain).unwrap();
    let split_chain = rs_first_pass(&classical_soc(&a_chain, 0.4));
    let fid_chain = FidelitySetup::new(&a_chain, &split_chain).unwrap();
    for (d, dist) in [(1usize, Distance::One), (2, Distance::Two)] {
        let s = classical_soc(&a_chain, dist.default_theta());
        let f_lair = fid_chain.fidelity(&extract_z(
            &lair_restriction(&a_chain, &split_chain, &s, &RestrictionConfig::new(dist)).r,
            &split_chain,
        ));
        let f_neumann = fid_chain.fidelity(&extract_z(
            &neumann_restriction(&a_chain, &split_chain, d).unwrap().r,
            &split_chain,
        ));
        assert!(
            (f_lair - f_neumann).abs() < 1e-10,
            "chain d={d}: lAIR {f_lair:.3e} vs Neumann {f_neumann:.3e}"
        );
    }
    println!("ACCEPTANCE 6 fidelity (chain clause): lAIR_d = Neumann_d to 1e-10 for d in {{1,2}}");

    // recirculating problem, ~6000 DOFs, kappa = 1e-4
    let spec = PdeSpec {
        dim: 2,
        n: 77, // 5929 unknowns
        kappa: 1e-4,
        velocity: VelocityField::Recirculating,
        reaction: ReactionField::Constant(0.0),
        time_step: None,
    };
    let (a, _) = advection_diffusion_reaction(&spec).unwrap();
    let table = |split: &CfSplitting| -> [f64; 4] {
        let fid = FidelitySetup::new(&a, split).unwrap();
        let f = |z: SparseMatrix| fid.fidelity(&z);
        [
            f(extract_z(
                &neumann_restriction(&a, split, 1).unwrap().r,
                split,
            )),
            f(extract_z(
                &neumann_restriction(&a, split, 2).unwrap().r,
                split,
            )),
            f(extract_z(
                &lair_restriction(
                    &a,
                    split,
                    &classical_soc(&a, 0.1),
                    &RestrictionConfig::new(Distance::One),
                )
                .r,
                split,
            )),
            f(extract_z(
                &lair_restriction(
                    &a,
                    split,
                    &classical_soc(&a, 0.2),
                    &RestrictionConfig::new(Distance::Two),
                )
                .r,
                split,
            )),
        ]
    };
    // solver-default splitting, logged: the 5-point stencil leaves A_ff
    // diagonal here and the whole comparison degenerates
    let split_fp = rs_first_pass(&classical_soc(&a, 0.4));
    let t_fp = table(&split_fp);
    println!(
        "ACCEPTANCE 6 fidelity (first-pass splitting, logged): N1 {:.3} N2 {:.3} L1 {:.3} L2 {:.3}",
        t_fp[0], t_fp[1], t_fp[2], t_fp[3]
    );
    println!(
        "ACCEPTANCE 6 fidelity (published reference values, logged): N1 0.99 N2 0.99 L1 0.46 L2 0.17"
    );

    // x-semicoarsened splitting keeps F-F structure; orderings asserted here
    let n = 77usize;
    let labels: Vec<Label> = (0..n * n)
        .map(|p| if (p % n) % 2 == 0 { Label::C } else { Label::F })
        .collect();
    let split_semi = CfSplitting::from_labels(&labels);
    let t_semi = table(&split_semi);
    println!(
        "ACCEPTANCE 6 fidelity (semicoarsened splitting, asserted): N1 {:.3} N2 {:.3} L1 {:.3} L2 {:.3} ({:.1}s)",
        t_semi[0], t_semi[1], t_semi[2], t_semi[3],
        t0.elapsed().as_secs_f64()
    );
    assert!(
        t_semi[3] < t_semi[2] && t_semi[2] < 1.0,
        "lAIR ordering violated: L2 {:.3} vs L1 {:.3}",
        t_semi[3],
        t_semi[2]
    );
    println!("ACCEPTANCE 6 fidelity: lAIR2 < lAIR1 < 1 holds; asserting Neumann > 0.9 as stated");
    if !(t_semi[0] > 0.9 && t_semi[1] > 0.9) {
        println!(
            "ACCEPTANCE 6 fidelity-table: FAIL (Neumann {:.3}/{:.3} <= 0.9; unattainable on upwind FD)",
            t_semi[0], t_semi[1]
        );
    }
    assert!(
        t_semi[0] > 0.9 && t_semi[1] > 0.9,
        "Neumann fidelity {:.3}/{:.3} <= 0.9: first-order upwind FD is an M-matrix with a \
         convergent Neumann series, so no splitting or ordering reaches the reference value \
         0.99 of the streamline-upwind finite-element operator — expected red",
        t_semi[0],
        t_semi[1]
    );
    println!("ACCEPTANCE 6 fidelity-table: PASS");
}

/// Criterion 7: hyperbolic-limit block solver performance.
#[test]
fn criterion_07_hyperbolic_block_solver() {
    let t0 = Instant::now();
    let spec = PdeSpec {
        dim: 2,
        n: 64,
        kappa: 0.0,
        velocity: VelocityField::CurvedNorthEast,
        reaction: ReactionField::PiecewiseGamma,
        time_step: None,
    };
    let layout = BlockLayout::new(3);
    let (a_block, _) = synthetic_block_advection(&spec, layout).unwrap();
    let (a, _) = block_diag_scale(&a_block, layout).unwrap();
    let cfg = SetupConfig::lair(Distance::Two).with_block(layout);
    let h = setup(&a, &cfg).unwrap();
    let x0 = random_guess(a.n_rows(), 64);
    let (_, report) = gmres(&a, &vec![0.0; a.n_rows()], &x0, &h, &SolveConfig::default()).unwrap();
    assert!(report.converged, "hyperbolic block solve did not converge");
    assert!(
        report.measured_cf <= 0.6,
        "measured CF {:.3} above 0.6",
        report.measured_cf
    );
    println!(
        "ACCEPTANCE 7 hyperbolic-block: PASS (n={}, CF {:.4}, {} iterations, reference band 0.37-0.61, {:.1}s)",
        a.n_rows(),
        report.measured_cf,
        report.iterations,
        t0.elapsed().as_secs_f64()
    );
}

/// Criterion 8: diffusion-limit competitiveness on 2D Poisson.
#[test]
fn criterion_08_diffusion_limit() {
    let t0 = Instant::now();
    let spec = PdeSpec {
        dim: 2,
        n: 64,
        kappa: 1.0,
        velocity: VelocityField::None,
        reaction: ReactionField::Constant(0.0),
        time_step: None,
    };
    let (a, _) = advection_diffusion_reaction(&spec).unwrap();
    let cfg =
        SetupConfig::lair(Distance::Two).with_interpolation(InterpolationKind::ClassicalModified);
    let h = setup(&a, &cfg).unwrap();
    assert!(
        h.report.operator_complexity < 3.0,
        "operator complexity {:.3}",
        h.report.operator_complexity
    );
    let x0 = random_guess(a.n_rows(), 88);
    let (_, report) = gmres(&a, &vec![0.0; a.n_rows()], &x0, &h, &SolveConfig::default()).unwrap();
    assert!(report.converged, "Poisson solve did not reach 1e-12");
    assert!(
        report.iterations <= 60,
        "{} iterations exceed 60",
        report.iterations
    );
    println!(
        "ACCEPTANCE 8 diffusion-limit: PASS ({} iterations to 1e-12, operator complexity {:.2}, CF {:.3}, {:.1}s)",
        report.iterations,
        h.report.operator_complexity,
        report.measured_cf,
        t0.elapsed().as_secs_f64()
    );
}

/// Criterion 9: time-stepping trend on the recirculating flow. All measured
/// factors are printed before the chain is asserted; the 0.01 pivot between
/// dt = h^2 and dt = h is not attainable at desk scale.
#[test]
fn criterion_09_time_step_trend() {
    let t0 = Instant::now();
    let spec = PdeSpec {
        dim: 2,
        n: 64,
        kappa: 0.0,
        velocity: VelocityField::Recirculating,
        reaction: ReactionField::Constant(0.0),
        time_step: None,
    };
    let (s, meta) = advection_diffusion_reaction(&spec).unwrap();
    let h = meta.h;
    let mut cf = [0.0f64; 3];
    for (idx, dt) in [h * h, h, h.sqrt()].into_iter().enumerate() {
        let a = time_step_system(&s, dt);
        let hier = setup(&a, &SetupConfig::lair(Distance::Two)).unwrap();
        let x0 = random_guess(a.n_rows(), 99);
        let (_, report) = gmres(
            &a,
            &vec![0.0; a.n_rows()],
            &x0,
            &hier,
            &SolveConfig::default(),
        )
        .unwrap();
        assert!(report.converged, "dt case {idx} did not converge");
        cf[idx] = report.measured_cf;
    }
    println!(
        "ACCEPTANCE 9 time-step trend: CF(h^2) {:.2e}, CF(h) {:.2e}, CF(sqrt h) {:.2e} (reference: 1e-8 / 0.01 / 0.29, {:.1}s)",
        cf[0], cf[1], cf[2],
        t0.elapsed().as_secs_f64()
    );
    assert!(cf[0] < 0.01, "CF(h^2) {:.3e} not below 0.01", cf[0]);
    assert!(
        cf[1] < cf[2],
        "CF(h) {:.3e} not below CF(sqrt h) {:.3e}",
        cf[1],
        cf[2]
    );
    assert!(cf[2] < 1.0, "CF(sqrt h) {:.3e} not below 1", cf[2]);
    if 0.01 >= cf[1] {
        println!(
            "ACCEPTANCE 9 time-step trend: FAIL (0.01 < CF(dt=h) pivot unattainable at desk scale, CF(h) = {:.2e}; trend itself holds)",
            cf[1]
        );
    }
    assert!(
        0.01 < cf[1],
        "CF(dt=h) = {:.3e} <= 0.01: the FD desk-scale system at dt=h is far easier than the \
         reference 1.25e6-DOF streamline-upwind system; the trend holds but this pivot \
         cannot — expected red",
        cf[1]
    );
    println!("ACCEPTANCE 9 time-step trend: PASS");
}

/// Criterion 10: lumping neutrality on the advection-dominated problem.
#[test]
fn criterion_10_lumping_neutrality() {
    let t0 = Instant::now();
    let spec = PdeSpec {
        dim: 2,
        n: 48,
        kappa: 1e-4,
        velocity: VelocityField::CurvedNorthEast,
        reaction: ReactionField::PiecewiseGamma,
        time_step: None,
    };
    let (a, _) = advection_diffusion_reaction(&spec).unwrap();
    let h_lumped = setup(&a, &SetupConfig::lair(Distance::Two)).unwrap();
    let h_plain = setup(&a, &SetupConfig::lair(Distance::Two).with_theta_d(0.0)).unwrap();
    let nnz =
        |h: &lair::Hierarchy| h.levels.iter().map(|l| l.a.nnz()).sum::<usize>() + h.coarse_a.nnz();
    let x0 = random_guess(a.n_rows(), 10);
    let b = vec![0.0; a.n_rows()];
    let (_, rep_l) = gmres(&a, &b, &x0, &h_lumped, &SolveConfig::default()).unwrap();
    let (_, rep_0) = gmres(&a, &b, &x0, &h_plain, &SolveConfig::default()).unwrap();
    let cf_shift = (rep_l.measured_cf - rep_0.measured_cf).abs();
    let reduction = 1.0 - nnz(&h_lumped) as f64 / nnz(&h_plain) as f64;
    assert!(cf_shift < 0.05, "lumping moved CF by {cf_shift:.3}");
    assert!(
        reduction >= 0.05,
        "lumping trimmed only {:.1}% of hierarchy nonzeros",
        100.0 * reduction
    );
    println!(
        "ACCEPTANCE 10 lumping-neutrality: PASS (CF shift {:.4}, nnz reduction {:.1}%, reference: 10-25% WPD saving, {:.1}s)",
        cf_shift,
        100.0 * reduction,
        t0.elapsed().as_secs_f64()
    );
}

/// Criterion 11: Jacobi convergence direction under block-diagonal scaling.
#[test]
fn criterion_11_jacobi_scaling_direction() {
    let t0 = Instant::now();
    let spec = PdeSpec {
        dim: 2,
        n: 32,
        kappa: 0.0,
        velocity: VelocityField::CurvedNorthEast,
        reaction: ReactionField::PiecewiseGamma,
        time_step: None,
    };
    let layout = BlockLayout::new(3);
    let (a, _) = synthetic_block_advection(&spec, layout).unwrap();
    let (scaled, _) = block_diag_scale(&a, layout).unwrap();
    // F set from the solver's own nodal coarsening of the scaled system
    let split_nodal = rs_first_pass(&classical_soc(&block_condense(&scaled, layout), 0.4));
    let k = layout.block_size;
    let labels: Vec<Label> = (0..split_nodal.len() * k)
        .map(|p| {
            if split_nodal.is_c(p / k) {
                Label::C
            } else {
                Label::F
            }
        })
        .collect();
    let scalar_split = CfSplitting::from_labels(&labels);
    let ff = scaled.extract_cf_blocks(&scalar_split).ff;

    let fifty_sweep_cf = |m: &SparseMatrix, seed: u64| -> f64 {
        let n = m.n_rows();
        let mut x = random_guess(n, seed);
        let b = vec![0.0; n];
        let norm0 = l2(&x);
        for _ in 0..50 {
            lair::relax::jacobi_global(m, &mut x, &b, 1.0, 1);
        }
        (l2(&x) / norm0).powf(1.0 / 50.0)
    };
    let cf_a = fifty_sweep_cf(&a, 170);
    let cf_ff = fifty_sweep_cf(&ff, 171);
    assert!(
        cf_a >= 1.0,
        "unscaled Jacobi CF {cf_a:.3} unexpectedly below 1"
    );
    assert!(cf_ff < 0.9, "scaled F-F Jacobi CF {cf_ff:.3} not below 0.9");
    println!(
        "ACCEPTANCE 11 jacobi-scaling: PASS (CF(A) {:.2} >= 1.0, CF((DB^-1 A)_ff) {:.2e} < 0.9, reference: 1.58 vs 0.12, {:.1}s)",
        cf_a,
        cf_ff,
        t0.elapsed().as_secs_f64()
    );
}
