//! Negative fractional powers of `A = κ²M + S` acting on load vectors.
//!
//! All operators act on the pencil `(A, M)`: for a load vector `f` the
//! result approximates the coefficients of `(M⁻¹A)^{−β} M⁻¹ f`. Stages are
//! chained through `M`-weighted right-hand sides.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    cg, Bpx, BpxVariant, CgOptions, CsrMatrix, Hierarchy, Jacobi, Preconditioner, SolveReport,
};

/// One step of a fractional solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stage {
    /// `count` chained solves with `A`.
    Integer { count: usize },
    /// Sinc quadrature for exponent `exponent ∈ (0, 1)` with `2k + 1`
    /// shifted solves.
    Sinc { exponent: f64, k: usize },
}

impl Stage {
    pub fn exponent(&self) -> f64 {
        match *self {
            Stage::Integer { count } => count as f64,
            Stage::Sinc { exponent, .. } => exponent,
        }
    }
}

/// Ordered stages whose exponents sum to `beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalPlan {
    pub beta: f64,
    pub stages: Vec<Stage>,
    /// Set when the improved splitting was requested but not applicable.
    pub fallback: bool,
}

/// Splits `β = n + β′`. Plain mode gives `n` integer solves and one sinc
/// stage `β′`. Improved mode moves the sinc exponents into `(1/3, 2/3]`:
/// `β′ ≤ 1/3` becomes `n − 1` solves and two stages `(β′ + 1)/2`,
/// `β′ > 2/3` becomes `n` solves and two stages `β′/2`. Quadrature counts
/// are left at zero; see [`FractionalPlan::with_quadrature`].
pub fn split_beta(beta: f64, improved: bool) -> Result<FractionalPlan> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("beta = {beta} must be positive")));
    }
    let n = beta.floor() as usize;
    let frac = beta - n as f64;
    let mut stages = Vec::new();
    let push_int = |stages: &mut Vec<Stage>, count: usize| {
        if count > 0 {
            stages.push(Stage::Integer { count });
        }
    };
    // thresholds absorb rounding in β − ⌊β⌋
    let (low, high) = (1.0 / 3.0 + 1e-12, 2.0 / 3.0 + 1e-12);
    let mut fallback = false;
    if frac == 0.0 {
        push_int(&mut stages, n);
    } else if improved && frac <= low && n >= 1 {
        let b2 = (frac + 1.0) / 2.0;
        push_int(&mut stages, n - 1);
        stages.push(Stage::Sinc { exponent: b2, k: 0 });
        stages.push(Stage::Sinc { exponent: b2, k: 0 });
    } else if improved && frac > high {
        push_int(&mut stages, n);
        stages.push(Stage::Sinc { exponent: frac / 2.0, k: 0 });
        stages.push(Stage::Sinc { exponent: frac / 2.0, k: 0 });
    } else {
        fallback = improved && frac <= low;
        push_int(&mut stages, n);
        stages.push(Stage::Sinc { exponent: frac, k: 0 });
    }
    Ok(FractionalPlan {
        beta,
        stages,
        fallback,
    })
}

/// Quadrature count with `e^{−2 min(β, 1−β) √K} ≤ 2^{−j(p+1)}`.
pub fn default_quadrature(exponent: f64, level: usize, degree: usize) -> usize {
    let rate = 2.0 * exponent.min(1.0 - exponent);
    let target = (level * (degree + 1)) as f64 * std::f64::consts::LN_2;
    ((target / rate).powi(2).ceil() as usize).max(4)
}

impl FractionalPlan {
    /// Every sinc stage uses `k`.
    pub fn with_quadrature(mut self, k: usize) -> Self {
        for s in &mut self.stages {
            if let Stage::Sinc { k: kk, .. } = s {
                *kk = k;
            }
        }
        self
    }

    /// Splits `budget` evenly over the sinc stages.
    pub fn with_total_budget(self, budget: usize) -> Self {
        let n = self.num_sinc_stages().max(1);
        self.with_quadrature(budget / n)
    }

    /// [`default_quadrature`] per sinc stage.
    pub fn with_default_quadrature(mut self, level: usize, degree: usize) -> Self {
        for s in &mut self.stages {
            if let Stage::Sinc { exponent, k } = s {
                *k = default_quadrature(*exponent, level, degree);
            }
        }
        self
    }

    pub fn num_sinc_stages(&self) -> usize {
        self.stages
            .iter()
            .filter(|s| matches!(s, Stage::Sinc { .. }))
            .count()
    }

    /// Sum of stage exponents.
    pub fn total_exponent(&self) -> f64 {
        self.stages.iter().map(Stage::exponent).sum()
    }

    /// Number of linear solves the plan performs.
    pub fn num_solves(&self) -> usize {
        self.stages
            .iter()
            .map(|s| match *s {
                Stage::Integer { count } => count,
                Stage::Sinc { k, .. } => 2 * k + 1,
            })
            .sum()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::Config("empty fractional plan".into()));
        }
        for s in &self.stages {
            match *s {
                Stage::Integer { count: 0 } => {
                    return Err(Error::Config("integer stage with zero solves".into()))
                }
                Stage::Sinc { exponent, k } => {
                    if !(exponent > 0.0 && exponent < 1.0) {
                        return Err(Error::Domain(format!(
                            "sinc exponent {exponent} outside (0, 1)"
                        )));
                    }
                    if k == 0 {
                        return Err(Error::Config("sinc stage without quadrature count".into()));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for FractionalPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .stages
            .iter()
            .map(|s| match *s {
                Stage::Integer { count } => format!("int({count})"),
                Stage::Sinc { exponent, k } => format!("sinc({exponent:.6},K={k})"),
            })
            .collect();
        write!(f, "beta={} [{}]", self.beta, parts.join(" "))?;
        if self.fallback {
            write!(f, " fallback")?;
        }
        Ok(())
    }
}

/// Preconditioner for the pencil solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreconditionerKind {
    None,
    Jacobi,
    Bpx(BpxVariant),
    /// BPX with diagonal smoothing when a hierarchy is attached, Jacobi
    /// otherwise.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub cg: CgOptions,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            cg: CgOptions::default(),
            preconditioner: PreconditionerKind::Auto,
        }
    }
}

/// Accumulated cost of a multi-solve operation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FractionalReport {
    pub solves: usize,
    pub iterations: usize,
    pub max_iterations: usize,
    pub wall_seconds: f64,
}

impl FractionalReport {
    fn add(&mut self, r: &SolveReport) {
        self.solves += 1;
        self.iterations += r.iterations;
        self.max_iterations = self.max_iterations.max(r.iterations);
    }

    fn merge(&mut self, o: &FractionalReport) {
        self.solves += o.solves;
        self.iterations += o.iterations;
        self.max_iterations = self.max_iterations.max(o.max_iterations);
    }
}

#[derive(Clone, Debug)]
struct Multilevel {
    hierarchy: Arc<Hierarchy>,
    mass: Vec<CsrMatrix>,
    stiffness: Vec<CsrMatrix>,
}

/// The operator family `αM + γS` built from mass `M`, stiffness `S` and
/// `κ²`, with `A = κ²M + S`.
#[derive(Clone, Debug)]
pub struct Pencil {
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    kappa2: f64,
    multilevel: Option<Multilevel>,
}

impl Pencil {
    pub fn new(mass: CsrMatrix, stiffness: CsrMatrix, kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(Error::Domain(format!("kappa = {kappa} must be non-negative")));
        }
        if mass.nrows() != mass.ncols() {
            return Err(Error::Dimension("mass matrix is not square".into()));
        }
        let (mass, stiffness) = CsrMatrix::unify_patterns(&mass, &stiffness)?;
        Ok(Self {
            mass,
            stiffness,
            kappa2: kappa * kappa,
            multilevel: None,
        })
    }

    /// Generic SPD pencil `(A, M)`.
    pub fn from_pencil(a: CsrMatrix, m: CsrMatrix) -> Result<Self> {
        Self::new(m, a, 0.0)
    }

    /// Attaches a refinement hierarchy whose finest level matches the
    /// matrices; enables BPX preconditioning.
    pub fn with_hierarchy(mut self, hierarchy: Arc<Hierarchy>) -> Result<Self> {
        let mass = hierarchy.galerkin_levels(&self.mass)?;
        let stiffness = hierarchy.galerkin_levels(&self.stiffness)?;
        self.multilevel = Some(Multilevel {
            hierarchy,
            mass,
            stiffness,
        });
        Ok(self)
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }

    pub fn num_dofs(&self) -> usize {
        self.mass.nrows()
    }

    pub fn hierarchy(&self) -> Option<&Arc<Hierarchy>> {
        self.multilevel.as_ref().map(|m| &m.hierarchy)
    }

    /// `A = κ²M + S`.
    pub fn operator(&self) -> CsrMatrix {
        CsrMatrix::linear_combination(self.kappa2, &self.mass, 1.0, &self.stiffness)
            .expect("shared pattern")
    }

    /// Solves `(αM + γS) x = rhs`.
    pub fn solve_combination(
        &self,
        alpha: f64,
        gamma: f64,
        rhs: &[f64],
        opts: &SolverOptions,
    ) -> Result<(Vec<f64>, SolveReport)> {
        if rhs.len() != self.num_dofs() {
            return Err(Error::Dimension(format!(
                "right-hand side of length {} for {} dofs",
                rhs.len(),
                self.num_dofs()
            )));
        }
        // normalize so that matrix entries stay O(1) for extreme shifts
        let s = alpha + gamma;
        let (a, g) = (alpha / s, gamma / s);
        let mat = CsrMatrix::linear_combination(a, &self.mass, g, &self.stiffness)?;
        let b: Vec<f64> = rhs.iter().map(|v| v / s).collect();
        let kind = match (opts.preconditioner, &self.multilevel) {
            (PreconditionerKind::Auto, Some(_)) => PreconditionerKind::Bpx(BpxVariant::Diag),
            (PreconditionerKind::Auto, None) => PreconditionerKind::Jacobi,
            (k, _) => k,
        };
        match kind {
            PreconditionerKind::None => cg(&mat, &b, &opts.cg, None),
            PreconditionerKind::Jacobi => {
                let j = Jacobi::new(&mat)?;
                cg(&mat, &b, &opts.cg, Some(&j))
            }
            PreconditionerKind::Bpx(variant) => {
                let ml = self.multilevel.as_ref().ok_or_else(|| {
                    Error::Config("BPX preconditioning needs a refinement hierarchy".into())
                })?;
                let levels = ml
                    .mass
                    .iter()
                    .zip(&ml.stiffness)
                    .map(|(m, st)| CsrMatrix::linear_combination(a, m, g, st))
                    .collect::<Result<Vec<_>>>()?;
                let bpx = Bpx::new(&ml.hierarchy, levels, variant)?;
                cg(&mat, &b, &opts.cg, Some(&bpx as &dyn Preconditioner))
            }
            PreconditionerKind::Auto => unreachable!(),
        }
    }

    /// Solves `A x = rhs`.
    pub fn solve(&self, rhs: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
        self.solve_combination(self.kappa2, 1.0, rhs, opts)
    }
}

/// `w₁ = A⁻¹f`, `w_k = A⁻¹ M w_{k−1}`; returns `w_n`.
pub fn solve_integer(
    pencil: &Pencil,
    f: &[f64],
    n: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, FractionalReport)> {
    if n == 0 {
        return Err(Error::Domain("integer power must be at least one".into()));
    }
    let start = Instant::now();
    let mut rep = FractionalReport::default();
    let (mut w, r) = pencil.solve(f, opts)?;
    rep.add(&r);
    for _ in 1..n {
        let rhs = pencil.mass().mul_vec(&w);
        let (next, r) = pencil.solve(&rhs, opts)?;
        rep.add(&r);
        w = next;
    }
    rep.wall_seconds = start.elapsed().as_secs_f64();
    Ok((w, rep))
}

/// Shifted solves per parallel batch; bounds the memory held at once.
const SINC_BATCH: usize = 16;

/// `u_K = (2 sin(πβ) / (√K π)) Σ_{k=−K}^{K} e^{2βt_k} (M + e^{2t_k} A)⁻¹ f`
/// with `t_k = k/√K`.
pub fn sinc_apply(
    pencil: &Pencil,
    f: &[f64],
    beta: f64,
    k: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, FractionalReport)> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("sinc exponent {beta} outside (0, 1)")));
    }
    if k == 0 {
        return Err(Error::Domain("quadrature count must be positive".into()));
    }
    let start = Instant::now();
    let h = 1.0 / (k as f64).sqrt();
    let pre = 2.0 * (PI * beta).sin() * h / PI;
    let ks: Vec<i64> = (-(k as i64)..=k as i64).collect();
    let mut u = vec![0.0; f.len()];
    let mut rep = FractionalReport::default();
    for chunk in ks.chunks(SINC_BATCH) {
        let parts: Vec<(Vec<f64>, SolveReport)> = chunk
            .par_iter()
            .map(|&i| {
                let t = i as f64 * h;
                let e2t = (2.0 * t).exp();
                pencil
                    .solve_combination(1.0 + e2t * pencil.kappa2, e2t, f, opts)
                    .map_err(|e| Error::ShiftedSolve {
                        index: i,
                        source: Box::new(e),
                    })
            })
            .collect::<Result<_>>()?;
        for (&i, (v, r)) in chunk.iter().zip(&parts) {
            let wgt = pre * (2.0 * beta * i as f64 * h).exp();
            for (a, b) in u.iter_mut().zip(v) {
                *a += wgt * b;
            }
            rep.add(r);
        }
    }
    rep.wall_seconds = start.elapsed().as_secs_f64();
    Ok((u, rep))
}

/// Runs the stages of `plan` left to right.
pub fn solve_fractional(
    pencil: &Pencil,
    f: &[f64],
    plan: &FractionalPlan,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, FractionalReport)> {
    plan.validate()?;
    let start = Instant::now();
    let mut rep = FractionalReport::default();
    let mut u: Option<Vec<f64>> = None;
    for stage in &plan.stages {
        let rhs = match &u {
            None => f.to_vec(),
            Some(prev) => pencil.mass().mul_vec(prev),
        };
        let (next, r) = match *stage {
            Stage::Integer { count } => solve_integer(pencil, &rhs, count, opts)?,
            Stage::Sinc { exponent, k } => sinc_apply(pencil, &rhs, exponent, k, opts)?,
        };
        rep.merge(&r);
        u = Some(next);
    }
    rep.wall_seconds = start.elapsed().as_secs_f64();
    Ok((u.expect("non-empty plan"), rep))
}
