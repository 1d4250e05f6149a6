//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criterion outcomes are reported, not asserted: the process exits
//! non-zero only when a criterion cannot be evaluated at all, or when
//! `ACCEPTANCE_STRICT=1` is set and some criterion fails.

use std::f64::consts::PI;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use clap::Parser;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use sha2::{Digest, Sha256};
use surfgrf::assembly::{assemble_mass, assemble_mass_stiffness, DiscreteSpace};
use surfgrf::cli::{execute, Cli, RunConfig, Row};
use surfgrf::fractional::{sinc_apply, solve_fractional, split_beta, Pencil, SolverOptions};
use surfgrf::geometry::MultipatchSurface;
use surfgrf::linalg::{cg, CgOptions, CsrMatrix};
use surfgrf::sampler::{jacobi_elliptic, FieldSampler, NoiseStream, SampleOptions, SqrtMass};
use surfgrf::splines::KnotVector;

type Outcome = Result<(bool, String), String>;

fn rows(args: &[&str]) -> Result<Vec<Row>, String> {
    let mut v = vec!["surfgrf"];
    v.extend_from_slice(args);
    let cli = Cli::try_parse_from(v).map_err(|e| e.to_string())?;
    let cfg = RunConfig::from_command(&cli.command).map_err(|e| e.to_string())?;
    execute(&cfg).map(|r| r.0).map_err(|e| e.to_string())
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn within_factor(v: f64, target: f64, factor: f64) -> bool {
    v >= target / factor && v <= target * factor
}

fn err_of(r: &Row) -> Result<f64, String> {
    r.l2_error.ok_or_else(|| "missing error column".to_string())
}

fn convergence_rates() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for p in 1..=3usize {
        let ps = p.to_string();
        let r = rows(&["solve", "--levels", "1:5", "--degrees", &ps])?;
        let js: Vec<f64> = r.iter().map(|r| r.j as f64).collect();
        let le: Vec<f64> = r.iter().map(|r| err_of(r).map(f64::log2)).collect::<Result<_, _>>()?;
        let rate = -slope(&js, &le);
        let good = (rate - (p + 1) as f64).abs() <= 0.1 * (p + 1) as f64;
        ok &= good;
        notes.push(format!("p={p} rate {rate:.3}{}", if good { "" } else { " (off)" }));
        for (j, target) in [(1usize, 5usize, 1.19e-4), (2, 4, 6.98e-6), (3, 3, 3.73e-6)]
            .iter()
            .filter(|t| t.0 == p)
            .map(|t| (t.1, t.2))
        {
            let e = err_of(r.iter().find(|r| r.j == j).unwrap())?;
            let good = within_factor(e, target, 2.0);
            ok &= good;
            notes.push(format!("p={p} j={j} err {e:.3e} vs {target:.2e}{}", if good { "" } else { " (off)" }));
        }
    }
    Ok((ok, notes.join("; ")))
}

fn bpx_iterations() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let r = rows(&["precond-bench", "--levels", "3:9", "--degrees", "1", "--variants", "diag,ssor"])?;
    let mut hi = rows(&["precond-bench", "--levels", "3:6", "--degrees", "2,3", "--variants", "diag,ssor"])?;
    hi.extend(r.iter().cloned());
    let it = |rs: &[Row], j: usize, p: usize, v: &str| {
        rs.iter()
            .find(|r| r.j == j && r.p == p && r.variant == v)
            .and_then(|r| r.iterations)
            .unwrap() as f64
    };
    let mut counts = Vec::new();
    for (j, target) in (5..=9).zip([24.0, 27.0, 29.0, 30.0, 32.0]) {
        let n = it(&r, j, 1, "diag");
        counts.push(format!("{n}"));
        ok &= (n - target).abs() <= 0.3 * target;
    }
    notes.push(format!("diag p=1 j=5..9: [{}] vs [24, 27, 29, 30, 32]", counts.join(", ")));
    let mut worse = Vec::new();
    for row in hi.iter().filter(|r| r.variant == "ssor") {
        let d = it(&hi, row.j, row.p, "diag");
        let s = row.iterations.unwrap() as f64;
        if s > d {
            worse.push(format!("p={} j={}: ssor {s} > diag {d}", row.p, row.j));
        }
    }
    if worse.is_empty() {
        notes.push("ssor <= diag for all j >= 3".into());
    } else {
        ok = false;
        notes.push(format!("ssor > diag at {}", worse.join(", ")));
    }
    Ok((ok, notes.join("; ")))
}

fn sinc_quadrature() -> Outcome {
    let ks = [10usize, 20, 30, 50, 100];
    let r = rows(&[
        "sinc-study",
        "--levels",
        "4",
        "--degrees",
        "3",
        "--betas",
        "0.15,0.3,0.5,0.7,0.85",
        "--ks",
        "10,20,30,50,100",
        "--plans",
        "plain",
    ])?;
    let mut ok = true;
    let mut notes = Vec::new();
    for beta in [0.15, 0.3, 0.5, 0.7, 0.85] {
        let sel: Vec<&Row> = r.iter().filter(|r| r.beta == Some(beta)).collect();
        let x: Vec<f64> = ks.iter().map(|&k| (k as f64).sqrt()).collect();
        let y: Vec<f64> = sel.iter().map(|r| err_of(r).map(f64::ln)).collect::<Result<_, _>>()?;
        let s = slope(&x, &y);
        let target = -2.0 * beta.min(1.0 - beta);
        let good = (s - target).abs() <= 0.15 * target.abs();
        ok &= good;
        notes.push(format!("beta={beta} slope {s:.3} vs {target:.2}{}", if good { "" } else { " (off)" }));
    }
    let e = err_of(r.iter().find(|r| r.beta == Some(0.5) && r.k == Some(100)).unwrap())?;
    let good = within_factor(e, 7.33e-5, 3.0);
    ok &= good;
    notes.push(format!("beta=0.5 K=100 err {e:.3e} vs 7.33e-5"));
    Ok((ok, notes.join("; ")))
}

fn improved_splitting() -> Outcome {
    let r = rows(&[
        "sinc-study",
        "--levels",
        "4",
        "--degrees",
        "3",
        "--betas",
        "1.1,1.3",
        "--ks",
        "200",
        "--plans",
        "plain,improved",
    ])?;
    let e = |beta: f64, v: &str| err_of(r.iter().find(|r| r.beta == Some(beta) && r.variant == v).unwrap());
    let (p11, i11, p13, i13) = (e(1.1, "plain")?, e(1.1, "improved")?, e(1.3, "plain")?, e(1.3, "improved")?);
    let ok = i11 * 2.0 <= p11 && p13 * 2.0 <= i13;
    Ok((
        ok,
        format!(
            "beta=1.1 plain {p11:.2e} improved {i11:.2e}; beta=1.3 plain {p13:.2e} improved {i13:.2e}"
        ),
    ))
}

fn matrix_square_root() -> Outcome {
    let r = rows(&["sqrt-study", "--levels", "1,3,4,5", "--degrees", "3", "--khats", "2:12"])?;
    let curve = |j: usize| -> Vec<f64> { r.iter().filter(|r| r.j == j).map(|r| r.l2_error.unwrap()).collect() };
    let khats: Vec<f64> = (2..=12).map(|k| k as f64).collect();
    let mut ok = true;
    let mut notes = Vec::new();
    for j in [1, 3, 4, 5] {
        let c = curve(j);
        let ln: Vec<f64> = c.iter().map(|e| e.ln()).collect();
        let s = slope(&khats, &ln);
        let decreasing = c.windows(2).all(|w| w[1] < w[0]);
        ok &= decreasing && s < 0.0;
        notes.push(format!("j={j} log-slope {s:.2}{}", if decreasing { "" } else { " (not monotone)" }));
    }
    let e10 = curve(4)[8];
    let good = within_factor(e10, 2.3e-8, 10.0);
    ok &= good;
    notes.push(format!("j=4 Khat=10 {e10:.2e} vs 2.3e-8"));
    let (c1, c3, c5) = (curve(1), curve(3), curve(5));
    let spread = (0..khats.len())
        .map(|i| {
            let v = [c1[i], c3[i], c5[i]];
            v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    ok &= spread <= 3.0;
    notes.push(format!("max spread over j=1,3,5: {spread:.2}"));
    Ok((ok, notes.join("; ")))
}

fn dense(m: &CsrMatrix) -> DMatrix<f64> {
    let d = m.to_dense();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i][j])
}

fn csr(m: &DMatrix<f64>) -> CsrMatrix {
    CsrMatrix::from_dense(&(0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect::<Vec<_>>())
}

fn sym_fn(s: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let e = SymmetricEigen::new(s.clone());
    &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues.map(f)) * e.eigenvectors.transpose()
}

fn random_spd(n: usize, shift: f64, seed: u64) -> DMatrix<f64> {
    let mut s = NoiseStream::new(seed);
    let b = DMatrix::from_fn(n, n, |_, _| s.next_normal());
    b.transpose() * &b / n as f64 + DMatrix::identity(n, n) * shift
}

fn rel(a: &[f64], b: &DVector<f64>) -> f64 {
    (DVector::from_column_slice(a) - b).norm() / b.norm()
}

fn property_suite() -> Outcome {
    let e = |x: surfgrf::Error| x.to_string();
    let mut failed: Vec<String> = Vec::new();
    let mut check = |name: &str, good: bool| {
        if !good {
            failed.push(name.to_string());
        }
    };
    let sphere = Arc::new(MultipatchSurface::builtin("sphere").map_err(e)?);

    let mut pou = true;
    for p in 1..=5 {
        let mut k = vec![0.0; p + 1];
        k.extend([0.2, 0.45, 0.5, 0.9]);
        k.extend(vec![1.0; p + 1]);
        let kv = KnotVector::new(p, k).map_err(e)?;
        for i in 0..=100 {
            let s: f64 = kv.eval_basis(i as f64 / 100.0, 0).map_err(e)?.values[0].iter().sum();
            pou &= (s - 1.0).abs() < 1e-13;
        }
    }
    check("partition of unity", pou);

    let v33 = DiscreteSpace::new(sphere.clone(), 3, 3).map_err(e)?;
    let (m, s) = assemble_mass_stiffness(&v33).map_err(e)?;
    let ones = vec![1.0; v33.num_dofs()];
    let s1 = s.mul_vec(&ones).iter().fold(0.0f64, |a, b| a.max(b.abs()));
    check("S*1 = 0", s1 < 1e-11 * s.max_abs());
    let area: f64 = m.mul_vec(&ones).iter().sum();
    check("1'M1 = 4pi", (area - 4.0 * PI).abs() <= 1e-8 * 4.0 * PI);

    let coarse = DiscreteSpace::new(sphere.clone(), 1, 2).map_err(e)?;
    let fine = DiscreteSpace::new(sphere.clone(), 2, 2).map_err(e)?;
    let pm = fine.prolongation_from(&coarse).map_err(e)?;
    let c = NoiseStream::new(1).normals(coarse.num_dofs());
    let f = pm.mul_vec(&c);
    let mut exact = true;
    for m in 0..6 {
        for (x, y) in [(0.1, 0.2), (0.5, 0.5), (0.77, 0.03), (1.0, 0.4)] {
            let (a, b) = (coarse.eval(&c, m, x, y).map_err(e)?, fine.eval(&f, m, x, y).map_err(e)?);
            exact &= (a - b).abs() < 1e-12 * (1.0 + a.abs());
        }
    }
    check("prolongation exactness", exact);

    let pencil = Pencil::from_pencil(CsrMatrix::from_dense(&[vec![2.0]]), CsrMatrix::identity(1)).map_err(e)?;
    let (u, _) = sinc_apply(&pencil, &[1.0], 0.5, 200, &SolverOptions::default()).map_err(e)?;
    check("scalar sinc", (u[0] - 2f64.powf(-0.5)).abs() <= 2e-6);

    let mut frac = true;
    for (i, beta) in [0.5, 0.4, 0.6, 1.5].into_iter().enumerate() {
        let a = random_spd(10, 1.0, 10 + i as u64);
        let mm = random_spd(10, 0.5, 100 + i as u64);
        let f = DVector::from_vec(NoiseStream::new(i as u64).normals(10));
        let mih = sym_fn(&mm, |x| x.powf(-0.5));
        let cc = &mih * &a * &mih;
        let ex = &mih * sym_fn(&((&cc + cc.transpose()) * 0.5), |x| x.powf(-beta)) * &mih * &f;
        let pencil = Pencil::from_pencil(csr(&a), csr(&mm)).map_err(e)?;
        let plan = split_beta(beta, true).map_err(e)?.with_quadrature(400);
        let (u, _) = solve_fractional(&pencil, f.as_slice(), &plan, &SolverOptions::default()).map_err(e)?;
        frac &= rel(&u, &ex) <= 1e-6;
    }
    check("dense 10x10 fractional oracle", frac);

    let mut sq = true;
    for seed in 0..3 {
        let mm = random_spd(12, 0.05, 300 + seed);
        let y = NoiseStream::new(seed).normals(12);
        let ex = sym_fn(&mm, f64::sqrt) * DVector::from_column_slice(&y);
        let r = SqrtMass::new(&csr(&mm), 20, None).map_err(e)?;
        sq &= rel(&r.apply(&y).map_err(e)?, &ex) <= 1e-9;
    }
    check("dense 12x12 sqrt oracle", sq);

    let a = CsrMatrix::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
    let (x, _) = cg(&a, &[1.0, 2.0], &CgOptions::default(), None).map_err(e)?;
    check("cg 2x2", (x[0] - 1.0 / 11.0).abs() < 1e-14 && (x[1] - 7.0 / 11.0).abs() < 1e-14);

    let mut ell = true;
    let mut ns = NoiseStream::new(77);
    for _ in 0..2000 {
        let u = 8.0 * ns.next_normal();
        let m = (ns.next_normal().abs() / 4.0).min(0.999);
        let (sn, cn, dn) = jacobi_elliptic(u, m);
        ell &= (sn * sn + cn * cn - 1.0).abs() <= 1e-12 && (dn * dn + m * sn * sn - 1.0).abs() <= 1e-12;
    }
    check("jacobi elliptic identities", ell);

    let sampler = FieldSampler::new(sphere.clone(), 1, 1, 1.0, 1.0, SampleOptions::default()).map_err(e)?;
    let n = sampler.space().num_dofs();
    let draws = 20_000;
    let mut noise = NoiseStream::new(2024);
    let (mut s1v, mut s2v) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..draws {
        let u = sampler.draw(&mut noise).map_err(e)?;
        for i in 0..n {
            s1v[i] += u[i];
            s2v[i] += u[i] * u[i];
        }
    }
    let v11 = DiscreteSpace::new(sphere, 1, 1).map_err(e)?;
    let md = dense(&assemble_mass(&v11).map_err(e)?);
    let (m2, s2) = assemble_mass_stiffness(&v11).map_err(e)?;
    let ainv = (dense(&m2) + dense(&s2)).try_inverse().ok_or("singular A")?;
    let cov = &ainv * md * &ainv;
    let worst = (0..n)
        .map(|i| {
            let mean = s1v[i] / draws as f64;
            let var = (s2v[i] - draws as f64 * mean * mean) / (draws - 1) as f64;
            (var - cov[(i, i)]).abs() / cov[(i, i)]
        })
        .fold(0.0, f64::max);
    check("sample covariance diagonal", worst < 0.05);

    let ok = failed.is_empty();
    Ok((
        ok,
        if ok {
            format!("11 checks passed (covariance worst {:.1}%)", 100.0 * worst)
        } else {
            format!("failed: {}", failed.join(", "))
        },
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut sums = Vec::new();
    for (i, threads) in ["1", "1", "2", "3"].iter().enumerate() {
        let vtk = dir.path().join(format!("f{i}.vtk"));
        let out = Command::new(env!("CARGO_BIN_EXE_surfgrf"))
            .args(["--threads", threads, "sample", "--level", "3", "--degree", "2", "--beta", "1.3"])
            .args(["--seed", "42", "--csv"])
            .arg(dir.path().join(format!("f{i}.csv")))
            .arg("--vtk")
            .arg(&vtk)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        let bytes = std::fs::read(&vtk).map_err(|e| e.to_string())?;
        sums.push(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect::<String>());
    }
    let ok = sums.windows(2).all(|w| w[0] == w[1]);
    Ok((ok, format!("sha256 {} over runs with 1, 1, 2, 3 threads", &sums[0][..16])))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("convergence rates", convergence_rates),
        ("BPX iteration counts", bpx_iterations),
        ("sinc quadrature", sinc_quadrature),
        ("improved splitting", improved_splitting),
        ("matrix square root", matrix_square_root),
        ("property suite", property_suite),
        ("determinism", determinism),
    ];
    let mut passed = 0;
    let mut broken = false;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok((true, d)) => {
                passed += 1;
                println!("PASS criterion {}: {name} [{secs:.1}s] {d}", i + 1);
            }
            Ok((false, d)) => println!("FAIL criterion {}: {name} [{secs:.1}s] {d}", i + 1),
            Err(msg) => {
                broken = true;
                println!("FAIL criterion {}: {name} [{secs:.1}s] error: {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if broken || (strict && passed < criteria.len()) {
        std::process::exit(1);
    }
}
