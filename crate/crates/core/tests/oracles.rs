use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use surfgrf::assembly::{assemble_mass_stiffness, DiscreteSpace};
use surfgrf::cli::{cmd_precond_bench, Cli, RunConfig};
use surfgrf::fractional::{sinc_apply, solve_fractional, split_beta, Pencil, SolverOptions};
use surfgrf::geometry::MultipatchSurface;
use surfgrf::linalg::{cg, CgOptions, CsrMatrix};
use surfgrf::reference::matern_link;
use surfgrf::sampler::{FieldSampler, NoiseStream, SampleOptions, SqrtMass};

use clap::Parser;

fn random_spd(n: usize, shift: f64, seed: u64) -> DMatrix<f64> {
    let mut s = NoiseStream::new(seed);
    let b = DMatrix::from_fn(n, n, |_, _| s.next_normal());
    b.transpose() * &b / n as f64 + DMatrix::identity(n, n) * shift
}

fn to_csr(m: &DMatrix<f64>) -> CsrMatrix {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    CsrMatrix::from_dense(&rows)
}

fn to_dense(m: &CsrMatrix) -> DMatrix<f64> {
    let d = m.to_dense();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i][j])
}

/// `f(S)` for symmetric `S` by eigendecomposition.
fn sym_fn(s: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let e = SymmetricEigen::new(s.clone());
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(f));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

fn rel_err(a: &[f64], b: &DVector<f64>) -> f64 {
    let num: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    num / b.norm()
}

#[test]
fn cg_two_by_two() {
    let a = CsrMatrix::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
    let (x, _) = cg(&a, &[1.0, 2.0], &CgOptions::default(), None).unwrap();
    assert!((x[0] - 1.0 / 11.0).abs() < 1e-15 && (x[1] - 7.0 / 11.0).abs() < 1e-15);
}

#[test]
fn scalar_sinc_matches_power() {
    let pencil = Pencil::from_pencil(CsrMatrix::from_dense(&[vec![2.0]]), CsrMatrix::identity(1)).unwrap();
    let (u, rep) = sinc_apply(&pencil, &[1.0], 0.5, 200, &SolverOptions::default()).unwrap();
    assert!((u[0] - 2f64.powf(-0.5)).abs() <= 2e-6, "{}", u[0]);
    assert_eq!(rep.solves, 401);
    // the same quadrature written out for a scalar
    let h = 1.0 / 200f64.sqrt();
    let direct: f64 = (-200..=200)
        .map(|k| {
            let t = k as f64 * h;
            (t).exp() / (1.0 + (2.0 * t).exp() * 2.0)
        })
        .sum::<f64>()
        * 2.0
        * h
        / PI;
    assert!((u[0] - direct).abs() < 1e-13);
}

#[test]
fn dense_fractional_solve_matches_eigendecomposition() {
    let n = 10;
    for (case, &beta) in [0.5, 0.4, 0.6, 1.5, 2.45, 1.0, 3.0].iter().enumerate() {
        let a = random_spd(n, 1.0, 10 + case as u64);
        let m = random_spd(n, 0.5, 100 + case as u64);
        let f = DVector::from_vec(NoiseStream::new(7 + case as u64).normals(n));
        // (M⁻¹A)^{−β} M⁻¹ = M^{−½} (M^{−½} A M^{−½})^{−β} M^{−½}
        let mih = sym_fn(&m, |x| x.powf(-0.5));
        let c = &mih * &a * &mih;
        let exact = &mih * sym_fn(&((&c + c.transpose()) * 0.5), |x| x.powf(-beta)) * &mih * &f;
        let pencil = Pencil::from_pencil(to_csr(&a), to_csr(&m)).unwrap();
        for improved in [false, true] {
            let plan = split_beta(beta, improved).unwrap().with_quadrature(400);
            let (u, _) = solve_fractional(&pencil, f.as_slice(), &plan, &SolverOptions::default()).unwrap();
            let e = rel_err(&u, &exact);
            assert!(e <= 1e-6, "beta={beta} improved={improved} err={e:e}");
        }
    }
}

#[test]
fn dense_square_root_matches_eigendecomposition() {
    for seed in 0..5 {
        let m = random_spd(12, 0.05, 300 + seed);
        let y = NoiseStream::new(seed).normals(12);
        let exact = sym_fn(&m, f64::sqrt) * DVector::from_column_slice(&y);
        let r = SqrtMass::new(&to_csr(&m), 20, None).unwrap();
        let e = rel_err(&r.apply(&y).unwrap(), &exact);
        assert!(e <= 1e-9, "seed={seed} err={e:e} ratio={}", r.params().ratio);
    }
}

#[test]
fn sample_covariance_matches_operator() {
    let s = Arc::new(MultipatchSurface::builtin("sphere").unwrap());
    let sampler = FieldSampler::new(s.clone(), 1, 1, 1.0, 1.0, SampleOptions::default()).unwrap();
    let n = sampler.space().num_dofs();
    let draws = 20_000;
    let mut noise = NoiseStream::new(2024);
    let mut sum = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for _ in 0..draws {
        let u = sampler.draw(&mut noise).unwrap();
        for i in 0..n {
            sum[i] += u[i];
            sq[i] += u[i] * u[i];
        }
    }
    let space = DiscreteSpace::new(s, 1, 1).unwrap();
    let (m, st) = assemble_mass_stiffness(&space).unwrap();
    let (m, st) = (to_dense(&m), to_dense(&st));
    let ainv = (&m + &st).try_inverse().unwrap();
    let cov = &ainv * &m * &ainv;
    for i in 0..n {
        let mean = sum[i] / draws as f64;
        let var = (sq[i] - draws as f64 * mean * mean) / (draws - 1) as f64;
        let rel = (var - cov[(i, i)]).abs() / cov[(i, i)];
        assert!(rel < 0.05, "dof {i}: {var} vs {}", cov[(i, i)]);
    }
}

#[test]
fn bpx_iterations_stay_bounded_in_level() {
    let cli = Cli::parse_from([
        "surfgrf",
        "precond-bench",
        "--levels",
        "3:6",
        "--degrees",
        "1:3",
        "--variants",
        "diag,ssor",
    ]);
    let cfg = RunConfig::from_command(&cli.command).unwrap();
    let rows = cmd_precond_bench(&cfg).unwrap();
    for r in &rows {
        if r.j < 4 {
            continue;
        }
        let prev = rows
            .iter()
            .find(|q| q.j == r.j - 1 && q.p == r.p && q.variant == r.variant)
            .unwrap();
        let (a, b) = (r.iterations.unwrap(), prev.iterations.unwrap());
        assert!(a as f64 <= 1.5 * b as f64, "j={} p={} {}: {a} after {b}", r.j, r.p, r.variant);
    }
}

#[test]
fn matern_parameters() {
    // β = 1 on a surface: ν = 1, σ² = 1/(4πκ²)
    let m = matern_link(1.0, 2.0).unwrap();
    assert!((m.nu - 1.0).abs() < 1e-15);
    assert!((m.sigma2 - 1.0 / (16.0 * PI)).abs() < 1e-15);
    assert!(matern_link(0.5, 1.0).is_err());
}
