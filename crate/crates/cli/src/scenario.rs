//! Scenario files: TOML with either a `[system]` or a `[manifold]` block.

use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use sympidx::bilinear::{Subspace, SymForm};
use sympidx::geodesics::{AffineField, CoordinateManifold, Factor, GodelManifold, Manifold, ProductManifold};
use sympidx::indexform::DEFAULT_MESHES;
use sympidx::matfn::{ExprMatrix, MatrixFn};
use sympidx::reduction::Frame;
use sympidx::sds::{self, CoefficientPath, InitialData};

/// Matrix entry: a number or an expression in `t` (and `x0, x1, …` for metrics).
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Entry {
    Number(f64),
    Text(String),
}

impl Entry {
    fn source(&self) -> String {
        match self {
            Entry::Number(v) => format!("{v:?}"),
            Entry::Text(s) => s.clone(),
        }
    }
}

pub type EntryMatrix = Vec<Vec<Entry>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Integrate,
    Focal,
    Maslov,
    Reduce,
    IndexVerify,
    GeodesicCount,
    MorseCheck,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Integrate => "integrate",
            Task::Focal => "focal",
            Task::Maslov => "maslov",
            Task::Reduce => "reduce",
            Task::IndexVerify => "index-verify",
            Task::GeodesicCount => "geodesic-count",
            Task::MorseCheck => "morse-check",
        }
    }

    fn needs_manifold(self) -> bool {
        matches!(self, Task::GeodesicCount | Task::MorseCheck)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
pub enum TraceKind {
    #[serde(rename = "detV")]
    #[value(name = "detV")]
    DetV,
    #[serde(rename = "sigma_min")]
    #[value(name = "sigma_min")]
    SigmaMin,
    #[serde(rename = "detBint")]
    #[value(name = "detBint")]
    DetBint,
    #[serde(rename = "eigenflow")]
    #[value(name = "eigenflow")]
    Eigenflow,
}

impl TraceKind {
    pub fn name(self) -> &'static str {
        match self {
            TraceKind::DetV => "detV",
            TraceKind::SigmaMin => "sigma_min",
            TraceKind::DetBint => "detBint",
            TraceKind::Eigenflow => "eigenflow",
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub system: Option<SystemBlock>,
    pub manifold: Option<ManifoldBlock>,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub options: Options,
    #[serde(default)]
    pub expected: Expected,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub n: usize,
    pub interval: [f64; 2],
    /// Coefficient form `[[A, B], [C, −Aᵀ]]`.
    pub a: Option<EntryMatrix>,
    pub b: Option<EntryMatrix>,
    pub c: Option<EntryMatrix>,
    /// Morse–Sturm form `(g v′)′ = g R v`: constant metric and curvature entries.
    pub g: Option<Vec<Vec<f64>>>,
    pub r: Option<EntryMatrix>,
    pub initial: Option<InitialBlock>,
    /// `n × k` entries spanning the constraint family.
    pub frame: Option<EntryMatrix>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    /// Vectors spanning the initial subspace.
    pub p: Vec<Vec<f64>>,
    /// Symmetric form on it, in the coordinates of the given vectors.
    pub s: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ManifoldBlock {
    /// Sphere of radius `radius` times `time_dims` negative flat directions.
    StationarySphere { dim: usize, radius: f64, time_dims: usize, #[serde(flatten)] ends: Endpoints },
    Product { factors: Vec<FactorSpec>, #[serde(flatten)] ends: Endpoints },
    Godel { base_metric: EntryMatrix, rho: EntryMatrix, #[serde(flatten)] ends: Endpoints },
    Coordinate { metric: EntryMatrix, #[serde(flatten)] ends: Endpoints },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum FactorSpec {
    Sphere { dim: usize, radius: f64 },
    Flat { signs: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct Endpoints {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub interval: [f64; 2],
    #[serde(default)]
    pub fields: Vec<FieldSpec>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Coordinate { coordinate: usize },
    Rotation { rotation: [usize; 2] },
    Affine { linear: Vec<Vec<f64>>, offset: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// RK4 steps for fundamental matrices and frame integrals.
    pub steps: usize,
    pub meshes: Vec<usize>,
    pub agreeing_meshes: usize,
    pub quad_order: usize,
    /// Inertia and rank tolerance.
    pub tol: f64,
    pub trace_samples: usize,
    pub eigenflow_count: usize,
    /// Perturbation trials for the Maslov stability check; 0 disables it.
    pub stability_trials: usize,
    pub stability_delta: f64,
    pub seed: u64,
    pub grid: Vec<usize>,
    pub bound: f64,
    pub poincare: Vec<u64>,
    pub degree_cap: usize,
    pub traces: Vec<TraceKind>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            steps: 2000,
            meshes: DEFAULT_MESHES.to_vec(),
            agreeing_meshes: 3,
            quad_order: 3,
            tol: 1e-8,
            trace_samples: 400,
            eigenflow_count: 6,
            stability_trials: 0,
            stability_delta: 1e-6,
            seed: 0,
            grid: Vec::new(),
            bound: 1.0,
            poincare: Vec::new(),
            degree_cap: 0,
            traces: Vec::new(),
        }
    }
}

/// Regression integers; absent keys are not checked.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub maslov: Option<i64>,
    pub focal_count: Option<usize>,
    pub maslov_red: Option<i64>,
    pub family_index: Option<usize>,
    pub index_lhs: Option<i64>,
    pub index_rhs: Option<i64>,
    pub geodesics: Option<usize>,
    /// Sorted Morse indices of the found geodesics.
    pub morse_indices: Option<Vec<i64>>,
    pub morse_holds: Option<bool>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let sc: Scenario = toml::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
        sc.validate()?;
        Ok(sc)
    }

    fn validate(&self) -> Result<()> {
        match (&self.system, &self.manifold) {
            (Some(_), Some(_)) => bail!("scenario '{}': give either [system] or [manifold], not both", self.name),
            (None, None) => bail!("scenario '{}': a [system] or [manifold] block is required", self.name),
            _ => {}
        }
        if self.tasks.is_empty() {
            bail!("scenario '{}': tasks must be nonempty", self.name);
        }
        for t in &self.tasks {
            if t.needs_manifold() != self.manifold.is_some() {
                let block = if t.needs_manifold() { "manifold" } else { "system" };
                bail!("scenario '{}': task '{}' needs a [{block}] block", self.name, t.name());
            }
        }
        if self.manifold.is_some() && !self.options.traces.is_empty() {
            bail!("scenario '{}': traces are available for [system] scenarios only", self.name);
        }
        Ok(())
    }
}

fn exprs(m: &EntryMatrix, what: &str) -> Result<ExprMatrix> {
    let rows: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(Entry::source).collect()).collect();
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        bail!("{what}: rows must be nonempty and of equal length");
    }
    ExprMatrix::parse(&rows).with_context(|| format!("field '{what}'"))
}

fn time_only(m: &EntryMatrix, what: &str, shape: (usize, usize)) -> Result<MatrixFn> {
    let e = exprs(m, what)?;
    if (e.rows(), e.cols()) != shape {
        bail!("{what}: expected a {}x{} matrix, got {}x{}", shape.0, shape.1, e.rows(), e.cols());
    }
    for i in 0..e.rows() {
        for j in 0..e.cols() {
            if e.entry(i, j).max_coordinate().is_some() {
                bail!("{what}[{i}][{j}]: coefficients may depend on t only");
            }
        }
    }
    Ok(MatrixFn::from_exprs(e))
}

fn dense(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        bail!("{what}: rows must have equal length");
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// A linear system with its initial data and optional constraint frame.
pub struct BuiltSystem {
    pub x: CoefficientPath,
    pub l0: InitialData,
    pub frame: Option<Frame>,
}

impl SystemBlock {
    pub fn build(&self) -> Result<BuiltSystem> {
        let n = self.n;
        if n == 0 {
            bail!("system.n must be positive");
        }
        let interval = (self.interval[0], self.interval[1]);
        let x = match (&self.a, &self.b, &self.c, &self.g, &self.r) {
            (a, Some(b), Some(c), None, None) => {
                let a = match a {
                    Some(a) => time_only(a, "system.a", (n, n))?,
                    None => MatrixFn::zeros(n, n),
                };
                CoefficientPath::new(a, time_only(b, "system.b", (n, n))?, time_only(c, "system.c", (n, n))?, interval)?
            }
            (None, None, None, Some(g), Some(r)) => {
                let g = dense(g, "system.g")?;
                if g.shape() != (n, n) {
                    bail!("system.g: expected a {n}x{n} matrix");
                }
                sds::make_morse_sturm(&SymForm::new(g)?, &time_only(r, "system.r", (n, n))?, interval)?
            }
            _ => bail!("system: give either b and c (with optional a) or g and r"),
        };
        let l0 = match &self.initial {
            None => InitialData::l0(n),
            Some(init) => initial_data(n, init)?,
        };
        let frame = match &self.frame {
            None => None,
            Some(f) => {
                let k = f.first().map_or(0, Vec::len);
                Some(Frame::new(time_only(f, "system.frame", (n, k))?))
            }
        };
        Ok(BuiltSystem { x, l0, frame })
    }
}

/// `S` is given against the listed vectors `V = Q·M`; the core expects it
/// against the orthonormal basis `Q`, i.e. `M⁻ᵀ S M⁻¹`.
fn initial_data(n: usize, init: &InitialBlock) -> Result<InitialData> {
    let p = Subspace::from_vectors(n, &init.p).context("system.initial.p")?;
    let k = p.dim();
    let s = dense(&init.s, "system.initial.s")?;
    if k == 0 {
        return Ok(InitialData::new(p, SymForm::zero(0))?);
    }
    if s.shape() != (k, k) {
        bail!("system.initial.s: expected a {k}x{k} matrix");
    }
    let v = DMatrix::from_fn(n, k, |i, j| init.p[j][i]);
    let m = p.basis().transpose() * v;
    let mi = m.try_inverse().ok_or_else(|| anyhow!("system.initial.p: vectors are dependent"))?;
    Ok(InitialData::new(p, SymForm::new(mi.transpose() * s * mi)?)?)
}

/// A manifold with shooting endpoints and Killing fields.
pub struct BuiltManifold {
    pub manifold: Arc<dyn Manifold>,
    pub p: DVector<f64>,
    pub q: DVector<f64>,
    pub interval: (f64, f64),
    pub fields: Vec<AffineField>,
}

impl ManifoldBlock {
    pub fn build(&self) -> Result<BuiltManifold> {
        let (manifold, ends, default_fields): (Arc<dyn Manifold>, &Endpoints, Vec<AffineField>) = match self {
            ManifoldBlock::StationarySphere { dim, radius, time_dims, ends } => {
                (Arc::new(ProductManifold::stationary_sphere(*dim, *radius, *time_dims)?), ends, Vec::new())
            }
            ManifoldBlock::Product { factors, ends } => {
                let fs = factors
                    .iter()
                    .map(|f| match f {
                        FactorSpec::Sphere { dim, radius } => Factor::Sphere { dim: *dim, radius: *radius },
                        FactorSpec::Flat { signs } => Factor::Flat { signs: signs.clone() },
                    })
                    .collect();
                (Arc::new(ProductManifold::new(fs)?), ends, Vec::new())
            }
            ManifoldBlock::Godel { base_metric, rho, ends } => {
                let gm = GodelManifold::new(exprs(base_metric, "manifold.base_metric")?, exprs(rho, "manifold.rho")?)?;
                let fields = gm.fiber_fields();
                (Arc::new(gm), ends, fields)
            }
            ManifoldBlock::Coordinate { metric, ends } => {
                (Arc::new(CoordinateManifold::new(exprs(metric, "manifold.metric")?)?), ends, Vec::new())
            }
        };
        let dim = manifold.ambient_dim();
        if ends.p.len() != dim || ends.q.len() != dim {
            bail!("manifold.p and manifold.q must have {dim} entries");
        }
        let fields = if ends.fields.is_empty() {
            default_fields
        } else {
            ends.fields.iter().map(|f| field(f, dim)).collect::<Result<_>>()?
        };
        Ok(BuiltManifold {
            manifold,
            p: DVector::from_column_slice(&ends.p),
            q: DVector::from_column_slice(&ends.q),
            interval: (ends.interval[0], ends.interval[1]),
            fields,
        })
    }
}

fn field(spec: &FieldSpec, dim: usize) -> Result<AffineField> {
    match spec {
        FieldSpec::Coordinate { coordinate } if *coordinate < dim => Ok(AffineField::coordinate(dim, *coordinate)),
        FieldSpec::Rotation { rotation: [i, j] } if *i < dim && *j < dim && i != j => Ok(AffineField::rotation(dim, *i, *j)),
        FieldSpec::Affine { linear, offset } => Ok(AffineField::new(dense(linear, "manifold.fields.linear")?, DVector::from_column_slice(offset))?),
        _ => bail!("manifold.fields: coordinate index out of range for ambient dimension {dim}"),
    }
}
