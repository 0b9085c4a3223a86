//! The eight acceptance criteria with their pinned tolerances.

use std::time::Instant;

use crate::error::Result;
use crate::quadrature::MAX_DEGREE;
use crate::reconstruction::build_reconstruction;
use crate::sparse::max_abs;
use crate::system::{build_system, solve, Scheme};

use super::checks::{hygiene, kkt_fd_check, operator_check};
use super::exact::{octet, stokes_bubble, ExactFields, OCTETS};
use super::residual::weak_residuals;
use super::study::{convergence_study, eoc, robustness_experiment, rt_interpolation_study, MeshSpec};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub operator: f64,
    pub moment: f64,
    pub weak_residual: f64,
    pub eoc_min: f64,
    pub eoc_max: f64,
    pub robust_spread: f64,
    pub classical_growth: f64,
    pub interpolation_eoc: f64,
    pub interpolation_tol: f64,
    pub kkt: f64,
    pub symmetry: f64,
    pub residual: f64,
    pub constraint: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            operator: 1e-10,
            moment: 1e-12,
            weak_residual: 1e-10,
            eoc_min: 0.85,
            eoc_max: 1.3,
            robust_spread: 1e-6,
            classical_growth: 10.0,
            interpolation_eoc: 2.0,
            interpolation_tol: 0.15,
            kkt: 1e-6,
            symmetry: 1e-12,
            residual: 1e-10,
            constraint: 1e-10,
        }
    }
}

/// Inputs shared by all criteria.
#[derive(Clone)]
pub struct Setup {
    pub mesh: MeshSpec,
    pub exact: ExactFields,
    pub levels: usize,
    pub scales: Vec<f64>,
    /// Level of the robustness experiment.
    pub robust_level: usize,
    pub fields: usize,
    pub directions: usize,
    pub seed: u64,
}

impl Default for Setup {
    fn default() -> Self {
        Setup {
            mesh: MeshSpec::default(),
            exact: super::exact::smooth_octet(),
            levels: 4,
            scales: vec![1.0, 1e2, 1e4],
            robust_level: 2,
            fields: 100,
            directions: 5,
            seed: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    /// Headline measured value.
    pub value: f64,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "criterion {} [{}] {}: {} ({:.1} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

pub const NAMES: [&str; 8] = [
    "operator identities",
    "moment reproduction",
    "manufactured residual",
    "convergence rates",
    "pressure robustness",
    "interpolation order",
    "KKT optimality",
    "system hygiene",
];

fn outcome(id: usize, start: Instant, passed: bool, value: f64, detail: String) -> Outcome {
    Outcome { id, name: NAMES[id - 1], passed, value, detail, seconds: start.elapsed().as_secs_f64() }
}

/// Runs criterion `id` (1 to 8).
pub fn run_criterion(id: usize, setup: &Setup, th: &Thresholds) -> Result<Outcome> {
    let start = Instant::now();
    match id {
        1 | 2 => {
            let spaces = setup.mesh.spaces(1)?;
            let recon = build_reconstruction(&spaces);
            if id == 2 {
                let d = crate::reconstruction::moment_defect(&spaces, &recon);
                return Ok(outcome(2, start, d < th.moment, d, format!("max moment defect {d:.3e} (< {:e})", th.moment)));
            }
            let c = operator_check(&spaces, &recon, setup.fields, setup.seed)?;
            let worst = c.max_divergence.max(c.max_interface_jump);
            Ok(outcome(
                1,
                start,
                worst < th.operator,
                worst,
                format!(
                    "{} fields: max |div Pi v| {:.3e}, max jump {:.3e}, max boundary flux {:.3e} (< {:e})",
                    c.fields, c.max_divergence, c.max_interface_jump, c.max_outer_normal, th.operator
                ),
            ))
        }
        3 => {
            let spaces = setup.mesh.spaces(0)?;
            let mut worst: f64 = 0.0;
            let mut parts = Vec::new();
            let mut fields = vec![setup.exact.clone()];
            fields.extend(OCTETS.iter().filter(|&&n| n != setup.exact.name).filter_map(|n| octet(n)));
            for e in fields {
                let r = weak_residuals(&spaces, &e, &e.derive_data()?, MAX_DEGREE)?;
                worst = worst.max(r.max());
                parts.push(format!("{} {:.3e}", e.name, r.max()));
            }
            Ok(outcome(3, start, worst < th.weak_residual, worst, format!("max weak residual {} (< {:e})", parts.join(", "), th.weak_residual)))
        }
        4 => {
            let mut ok = true;
            let mut parts = Vec::new();
            let mut value = f64::NAN;
            for scheme in [Scheme::Classical, Scheme::Robust] {
                let rep = convergence_study(&setup.exact, &setup.mesh, setup.levels, scheme)?;
                let e = rep.last_eoc().expect("at least two levels");
                for v in [e.u_x, e.z_x] {
                    ok &= v >= th.eoc_min && v <= th.eoc_max;
                    value = if value.is_nan() { v } else { value.min(v) };
                }
                parts.push(format!("{} EOC u {:.3} z {:.3}", scheme.name(), e.u_x, e.z_x));
            }
            Ok(outcome(4, start, ok, value, format!("{} (window [{}, {}])", parts.join(", "), th.eoc_min, th.eoc_max)))
        }
        5 => {
            let spaces = setup.mesh.spaces(setup.robust_level)?;
            let rep = robustness_experiment(&setup.exact, &stokes_bubble(), &setup.scales, &spaces)?;
            let (spread, growth) = (rep.robust_spread(), rep.classical_growth());
            let shift = rep.rows.iter().map(|r| r.robust_shift).fold(0.0, f64::max);
            Ok(outcome(
                5,
                start,
                spread < th.robust_spread && growth >= th.classical_growth,
                spread,
                format!(
                    "robust spread {spread:.3e} (< {:e}), classical growth {growth:.3e} (>= {}), robust coefficient shift/lambda {shift:.3e}",
                    th.robust_spread, th.classical_growth
                ),
            ))
        }
        6 => {
            let errs = rt_interpolation_study(&setup.exact, &setup.mesh, setup.levels)?;
            let rates: Vec<f64> = errs.windows(2).map(|w| eoc(w[0].1, w[1].1)).collect();
            let last = *rates.last().unwrap_or(&f64::NAN);
            let ok = (last - th.interpolation_eoc).abs() <= th.interpolation_tol;
            let shown: Vec<String> = rates.iter().map(|r| format!("{r:.3}")).collect();
            Ok(outcome(6, start, ok, last, format!("EOC {} (last increment, target {} +- {})", shown.join(", "), th.interpolation_eoc, th.interpolation_tol)))
        }
        7 => {
            let spaces = setup.mesh.spaces(1)?;
            let recon = build_reconstruction(&spaces);
            let data = setup.exact.derive_data()?;
            let mut worst: f64 = 0.0;
            let mut convex = true;
            for (scheme, r) in [(Scheme::Classical, None), (Scheme::Robust, Some(&recon))] {
                for row in kkt_fd_check(&spaces, &data, scheme, r, setup.directions, 1e-2, setup.seed)? {
                    worst = worst.max(row.derivative.abs());
                    convex &= row.cost_plus > row.cost && row.cost_minus > row.cost;
                }
            }
            Ok(outcome(
                7,
                start,
                worst < th.kkt && convex,
                worst,
                format!("max |dJ| {worst:.3e} over {} directions per scheme (< {:e}), perturbed costs larger: {convex}", setup.directions, th.kkt),
            ))
        }
        8 => {
            let spaces = setup.mesh.spaces(0)?;
            let recon = build_reconstruction(&spaces);
            let data = setup.exact.derive_data()?;
            let zero = ExactFields::zero().derive_data()?;
            let mut ok = true;
            let mut parts = Vec::new();
            let mut value: f64 = 0.0;
            for (scheme, r) in [(Scheme::Classical, None), (Scheme::Robust, Some(&recon))] {
                let h = hygiene(&build_system(&spaces, &data, scheme, r)?)?;
                let cons = [h.divergence_u, h.divergence_z, h.interface_u, h.interface_z].into_iter().fold(0.0, f64::max);
                let z = max_abs(&solve(&build_system(&spaces, &zero, scheme, r)?)?.x);
                ok &= h.asymmetry < th.symmetry && h.residual < th.residual && cons < th.constraint && z == 0.0;
                value = value.max(h.asymmetry).max(h.residual).max(cons);
                parts.push(format!(
                    "{}: asymmetry {:.3e}, residual {:.3e}, constraints {:.3e}, zero-data solution {:.1e}",
                    scheme.name(),
                    h.asymmetry,
                    h.residual,
                    cons,
                    z
                ));
            }
            Ok(outcome(8, start, ok, value, parts.join("; ")))
        }
        _ => Err(crate::Error::Argument(format!("no acceptance criterion {id}"))),
    }
}

/// Runs all eight criteria in order.
pub fn run_all(setup: &Setup, th: &Thresholds) -> Result<Vec<Outcome>> {
    (1..=8).map(|id| run_criterion(id, setup, th)).collect()
}
