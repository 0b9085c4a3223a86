use std::path::{Path, PathBuf};

use sdoc::assembly::sym_eigenvalues;
use sdoc::mesh::{Geometry, Rect};
use sdoc::system::Scheme;
use sdoc::verify::acceptance::{Setup, Thresholds};
use sdoc::verify::{octet, ExactFields, MeshSpec, OCTETS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Converge,
    Robust,
    CheckOp,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Converge => "converge",
            Command::Robust => "robust",
            Command::CheckOp => "check-op",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    Classical,
    Robust,
    Both,
}

impl SchemeChoice {
    pub fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeChoice::Classical => vec![Scheme::Classical],
            SchemeChoice::Robust => vec![Scheme::Robust],
            SchemeChoice::Both => vec![Scheme::Classical, Scheme::Robust],
        }
    }
}

/// Everything a run needs. Every field has a default, so a config file
/// only lists what it changes.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub stokes: Rect,
    pub darcy: Rect,
    pub n0: usize,
    pub levels: usize,
    pub scheme: SchemeChoice,
    pub mu: f64,
    pub k: [[f64; 2]; 2],
    pub alpha: f64,
    pub alpha1: f64,
    /// Manufactured solution: one of `smooth`, `linear`, `quadratic`, `zero`.
    pub solution: String,
    pub scales: Vec<f64>,
    /// Refinement level of the robustness experiment.
    pub robust_level: usize,
    /// Random admissible fields for `check-op`.
    pub fields: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub vtk: bool,
    pub thresholds: Thresholds,
}

impl Default for RunConfig {
    fn default() -> Self {
        let setup = Setup::default();
        let e = &setup.exact;
        RunConfig {
            command: None,
            stokes: setup.mesh.stokes,
            darcy: setup.mesh.darcy,
            n0: setup.mesh.n0,
            levels: setup.levels,
            scheme: SchemeChoice::Both,
            mu: e.mu,
            k: e.k,
            alpha: e.alpha,
            alpha1: e.alpha1,
            solution: e.name.clone(),
            scales: setup.scales.clone(),
            robust_level: setup.robust_level,
            fields: setup.fields,
            seed: setup.seed,
            out: PathBuf::from("out"),
            vtk: false,
            thresholds: Thresholds::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("mu", self.mu), ("alpha", self.alpha), ("alpha1", self.alpha1)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        let (lo, _) = sym_eigenvalues(self.k).map_err(|e| e.to_string())?;
        if !(lo > 0.0) {
            return Err(format!("permeability {:?} is not positive definite (smallest eigenvalue {lo})", self.k));
        }
        Geometry::new(self.stokes, self.darcy).map_err(|e| e.to_string())?;
        if self.n0 == 0 {
            return Err("n0 must be at least 1".into());
        }
        if self.command == Some(Command::Converge) && self.levels < 3 {
            return Err(format!("levels must be at least 3, got {}", self.levels));
        }
        if !OCTETS.contains(&self.solution.as_str()) {
            return Err(format!("unknown solution `{}`; expected one of {}", self.solution, OCTETS.join(", ")));
        }
        if self.scales.is_empty() || self.scales.iter().any(|s| !s.is_finite()) {
            return Err("scales must be a nonempty list of finite numbers".into());
        }
        if self.fields == 0 {
            return Err("fields must be at least 1".into());
        }
        Ok(())
    }

    pub fn mesh(&self) -> MeshSpec {
        MeshSpec { stokes: self.stokes, darcy: self.darcy, n0: self.n0 }
    }

    /// The selected manufactured solution with the configured parameters.
    pub fn exact(&self) -> ExactFields {
        let base = octet(&self.solution).expect("validated");
        let geometry = Geometry::new(self.stokes, self.darcy).expect("validated");
        ExactFields { mu: self.mu, k: self.k, alpha: self.alpha, alpha1: self.alpha1, ..base }.on_geometry(&geometry)
    }

    pub fn setup(&self) -> Setup {
        Setup {
            mesh: self.mesh(),
            exact: self.exact(),
            levels: self.levels,
            scales: self.scales.clone(),
            robust_level: self.robust_level,
            fields: self.fields,
            directions: Setup::default().directions,
            seed: self.seed,
        }
    }
}
