use std::sync::Arc;
use std::time::Instant;

use super::output::{format_vtk, Row};
use super::{RunConfig, Variant};
use crate::assembly::{
    assemble_load, assemble_mass, assemble_mass_stiffness, l2_error, DiscreteSpace,
};
use crate::error::Result;
use crate::fractional::{solve_fractional, split_beta, FractionalPlan, Pencil, Stage};
use crate::geometry::MultipatchSurface;
use crate::linalg::{cg, norm2, power_bounds, Bpx, CgOptions, Hierarchy, Jacobi, Preconditioner};
use crate::reference::{exact_sphere_solution, spherical_harmonic_projected, Y1M1};
use crate::sampler::{FieldSampler, NoiseStream, SampleOptions, SqrtMass, BOUND_STEPS};

/// Output of a single-configuration run that can be written as VTK.
pub struct FieldOutput {
    pub space: Arc<DiscreteSpace>,
    pub coeffs: Vec<f64>,
    pub title: String,
}

fn is_sphere(cfg: &RunConfig) -> bool {
    cfg.geometry_label == "sphere"
}

fn rhs(x: [f64; 3]) -> f64 {
    spherical_harmonic_projected(Y1M1, x)
}

fn first_k(plan: &FractionalPlan) -> Option<usize> {
    // the budget over all sinc stages, matching `with_total_budget`
    let ks: Vec<usize> = plan
        .stages
        .iter()
        .filter_map(|s| match s {
            Stage::Sinc { k, .. } => Some(*k),
            _ => None,
        })
        .collect();
    (!ks.is_empty()).then(|| ks.iter().sum())
}

fn make_plan(cfg: &RunConfig, beta: f64, j: usize, p: usize, budget: Option<usize>, improved: bool) -> Result<FractionalPlan> {
    let plan = split_beta(beta, improved)?;
    Ok(match budget.or(cfg.quadrature) {
        Some(k) if plan.num_sinc_stages() > 0 => plan.with_total_budget(k),
        _ => plan.with_default_quadrature(j, p),
    })
}

struct Problem {
    space: Arc<DiscreteSpace>,
    pencil: Pencil,
    load: Vec<f64>,
}

fn setup(cfg: &RunConfig, surface: &Arc<MultipatchSurface>, j: usize, p: usize, multilevel: bool) -> Result<Problem> {
    let (space, hierarchy) = if multilevel {
        let h = Arc::new(Hierarchy::new(surface.clone(), j, p)?);
        (Arc::new(h.finest().clone()), Some(h))
    } else {
        (Arc::new(DiscreteSpace::new(surface.clone(), j, p)?), None)
    };
    let (m, s) = assemble_mass_stiffness(&space)?;
    let load = assemble_load(&space, rhs)?;
    let mut pencil = Pencil::new(m, s, cfg.kappa)?;
    if let Some(h) = hierarchy {
        pencil = pencil.with_hierarchy(h)?;
    }
    Ok(Problem { space, pencil, load })
}

fn exact_error(cfg: &RunConfig, space: &DiscreteSpace, u: &[f64], beta: f64) -> Result<Option<f64>> {
    if !is_sphere(cfg) {
        return Ok(None);
    }
    let c = exact_sphere_solution(beta, cfg.kappa, Y1M1);
    l2_error(space, u, |x| c * rhs(x)).map(Some)
}

/// `(κ² − Δ_Γ)^β u = f` with `f` the `Y_{1,−1}` harmonic (projected to the
/// unit sphere for other geometries), one row per `(j, p, β)`.
pub fn cmd_solve(cfg: &RunConfig) -> Result<(Vec<Row>, Option<FieldOutput>)> {
    let surface = cfg.load_surface()?;
    let variant = cfg.variants[0];
    let mut rows = Vec::new();
    let mut field = None;
    for &j in &cfg.levels {
        for &p in &cfg.degrees {
            let prob = setup(cfg, &surface, j, p, variant.is_multilevel())?;
            for &beta in &cfg.betas {
                let opts = cfg.solver_options(variant);
                let plan = make_plan(cfg, beta, j, p, None, cfg.improved)?;
                let (u, rep) = solve_fractional(&prob.pencil, &prob.load, &plan, &opts)?;
                rows.push(Row {
                    geometry: cfg.geometry_label.clone(),
                    j,
                    p,
                    beta: Some(beta),
                    kappa: Some(cfg.kappa),
                    k: first_k(&plan),
                    variant: variant.to_string(),
                    iterations: Some(rep.iterations),
                    l2_error: exact_error(cfg, &prob.space, &u, beta)?,
                    wall_seconds: rep.wall_seconds,
                    ..Default::default()
                });
                if cfg.vtk.is_some() {
                    field = Some(FieldOutput {
                        space: prob.space.clone(),
                        title: format!(
                            "surfgrf solve geometry={} j={j} p={p} kappa={} plan={plan}",
                            cfg.geometry_label, cfg.kappa
                        ),
                        coeffs: u,
                    });
                }
            }
        }
    }
    Ok((rows, field))
}

/// One Gaussian random field realization.
pub fn cmd_sample(cfg: &RunConfig) -> Result<(Vec<Row>, Option<FieldOutput>)> {
    let surface = cfg.load_surface()?;
    let (j, p, beta) = (cfg.levels[0], cfg.degrees[0], cfg.betas[0]);
    let variant = cfg.variants[0];
    let opts = SampleOptions {
        sqrt_terms: cfg.sqrt_terms[0],
        quadrature: None,
        improved: cfg.improved,
        solver: cfg.solver_options(variant),
    };
    let start = Instant::now();
    let mut sampler = FieldSampler::new(surface, j, p, beta, cfg.kappa, opts)?;
    let plan = make_plan(cfg, beta, j, p, None, cfg.improved)?;
    sampler.set_plan(plan.clone())?;
    let field = sampler.sample(cfg.seed)?;
    let wall = start.elapsed().as_secs_f64();
    let row = Row {
        geometry: cfg.geometry_label.clone(),
        j,
        p,
        beta: Some(beta),
        kappa: Some(cfg.kappa),
        k: first_k(&plan),
        khat: Some(cfg.sqrt_terms[0]),
        variant: variant.to_string(),
        iterations: Some(field.report.iterations),
        wall_seconds: wall,
        seed: Some(cfg.seed),
        ..Default::default()
    };
    let title = format!(
        "surfgrf sample geometry={} j={j} p={p} kappa={} seed={} Khat={} plan={plan}",
        cfg.geometry_label, cfg.kappa, cfg.seed, cfg.sqrt_terms[0]
    );
    let out = FieldOutput {
        space: Arc::new(field.space().clone()),
        coeffs: field.coeffs,
        title,
    };
    Ok((vec![row], Some(out)))
}

/// CG iteration counts for `(κ²M + S) u = f` per `(j, p, preconditioner)`.
pub fn cmd_precond_bench(cfg: &RunConfig) -> Result<Vec<Row>> {
    let surface = cfg.load_surface()?;
    let mut rows = Vec::new();
    let copts = CgOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    for &j in &cfg.levels {
        for &p in &cfg.degrees {
            let multilevel = cfg.variants.iter().any(|v| v.is_multilevel());
            let hierarchy = if multilevel {
                Some(Hierarchy::new(surface.clone(), j, p)?)
            } else {
                None
            };
            let space = match &hierarchy {
                Some(h) => h.finest().clone(),
                None => DiscreteSpace::new(surface.clone(), j, p)?,
            };
            let (m, s) = assemble_mass_stiffness(&space)?;
            let a = Pencil::new(m, s, cfg.kappa)?.operator();
            let f = assemble_load(&space, rhs)?;
            let levels = match &hierarchy {
                Some(h) => Some(h.galerkin_levels(&a)?),
                None => None,
            };
            for &variant in &cfg.variants {
                let pre: Option<Box<dyn Preconditioner>> = match variant {
                    Variant::None => None,
                    Variant::Jacobi => Some(Box::new(Jacobi::new(&a)?)),
                    Variant::Bpx(v) => Some(Box::new(Bpx::new(
                        hierarchy.as_ref().expect("hierarchy built"),
                        levels.clone().expect("levels built"),
                        v,
                    )?)),
                };
                let (u, rep) = cg(&a, &f, &copts, pre.as_deref())?;
                rows.push(Row {
                    geometry: cfg.geometry_label.clone(),
                    j,
                    p,
                    beta: Some(1.0),
                    kappa: Some(cfg.kappa),
                    variant: variant.to_string(),
                    iterations: Some(rep.iterations),
                    l2_error: exact_error(cfg, &space, &u, 1.0)?,
                    wall_seconds: rep.wall_seconds,
                    ..Default::default()
                });
            }
        }
    }
    Ok(rows)
}

/// Fractional solves with the quadrature budgets in `cfg.quadrature_sweep`;
/// `K` is the budget summed over all sinc stages.
pub fn cmd_sinc_study(cfg: &RunConfig) -> Result<Vec<Row>> {
    let surface = cfg.load_surface()?;
    let variant = cfg.variants[0];
    let opts = cfg.solver_options(variant);
    let mut rows = Vec::new();
    for &j in &cfg.levels {
        for &p in &cfg.degrees {
            let prob = setup(cfg, &surface, j, p, variant.is_multilevel())?;
            for &beta in &cfg.betas {
                for &improved in &cfg.plans {
                    for &k in &cfg.quadrature_sweep {
                        let plan = make_plan(cfg, beta, j, p, Some(k), improved)?;
                        let (u, rep) = solve_fractional(&prob.pencil, &prob.load, &plan, &opts)?;
                        rows.push(Row {
                            geometry: cfg.geometry_label.clone(),
                            j,
                            p,
                            beta: Some(beta),
                            kappa: Some(cfg.kappa),
                            k: Some(k),
                            variant: if improved { "improved" } else { "plain" }.to_string(),
                            iterations: Some(rep.iterations),
                            l2_error: exact_error(cfg, &prob.space, &u, beta)?,
                            wall_seconds: rep.wall_seconds,
                            ..Default::default()
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Relative defect `‖M y − R(R(y))‖ / ‖M y‖` of the `√M` expansion `R`
/// for a standard normal `y`, per `(j, p, K̂)`.
pub fn cmd_sqrt_study(cfg: &RunConfig) -> Result<Vec<Row>> {
    let surface = cfg.load_surface()?;
    let mut rows = Vec::new();
    for &j in &cfg.levels {
        for &p in &cfg.degrees {
            let space = DiscreteSpace::new(surface.clone(), j, p)?;
            let m = assemble_mass(&space)?;
            let bounds = power_bounds(&m, BOUND_STEPS)?;
            let y = NoiseStream::new(cfg.seed).normals(space.num_dofs());
            let my = m.mul_vec(&y);
            let norm = norm2(&my);
            for &khat in &cfg.sqrt_terms {
                let start = Instant::now();
                let r = SqrtMass::new(&m, khat, Some(bounds))?;
                let g = r.apply(&r.apply(&y)?)?;
                let d: Vec<f64> = my.iter().zip(&g).map(|(a, b)| a - b).collect();
                rows.push(Row {
                    geometry: cfg.geometry_label.clone(),
                    j,
                    p,
                    khat: Some(khat),
                    variant: "sqrt".into(),
                    l2_error: Some(norm2(&d) / norm),
                    wall_seconds: start.elapsed().as_secs_f64(),
                    seed: Some(cfg.seed),
                    ..Default::default()
                });
            }
        }
    }
    Ok(rows)
}

pub fn render_vtk(field: &FieldOutput, subdivisions: u32) -> Result<String> {
    format_vtk(&field.space, &field.coeffs, subdivisions, &field.title)
}
