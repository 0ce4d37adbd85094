//! Grid-based detection of flat minima on 2-D loss slices, plus a concrete
//! network whose optimum sits on a non-strict plateau.
//!
//! A scan evaluates a function on a regular grid, marks cells that are no
//! larger than any of their eight neighbours (up to a tolerance), groups the
//! marked cells into 4-connected components of near-equal value, and reports
//! for each component whether its surrounding collar lies strictly above it
//! and whether it sits at the grid-wide minimum.  Verdicts are
//! resolution-bounded evidence, not proofs.

use rayon::prelude::*;
use serde::Serialize;

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::{loss_eval, Dataset, Loss, NetSpec, Weights};
use crate::rng::CounterRng;

/// Default tolerance (relative to the value spread) for treating two cell
/// values as equal.
pub const DEFAULT_VALUE_TOL: f64 = 1e-9;
/// Default margin (relative to the value spread) a collar must clear for a
/// component to count as strictly isolated.
pub const DEFAULT_STRICT_MARGIN: f64 = 1e-9;

/// Axis bounds and resolution of a scanned rectangle.
#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub u_lo: f64,
    pub u_hi: f64,
    pub v_lo: f64,
    pub v_hi: f64,
    pub resolution: usize,
}

impl GridInfo {
    /// Coordinate of grid line `i` on the u axis; exact at both endpoints.
    pub fn u_coord(&self, i: usize) -> f64 {
        self.u_lo + (i as f64) * (self.u_hi - self.u_lo) / ((self.resolution - 1) as f64)
    }

    pub fn v_coord(&self, j: usize) -> f64 {
        self.v_lo + (j as f64) * (self.v_hi - self.v_lo) / ((self.resolution - 1) as f64)
    }
}

/// One 4-connected group of local-minimum cells with near-equal values.
#[derive(Debug, Clone, Serialize)]
pub struct PlateauComponent {
    /// Member cells as (u index, v index), sorted row-major.
    pub cells: Vec<(usize, usize)>,
    /// Smallest value attained on the component.
    pub value: f64,
    /// Smallest value on the surrounding collar of non-member neighbour
    /// cells; `None` when the component has no finite neighbours at all.
    pub boundary_min: Option<f64>,
    /// True when some member cell lies on the edge of the scanned box.
    pub touches_edge: bool,
    /// True when the collar lies strictly above the component value by more
    /// than the margin.  Edge-touching components are never strict: the grid
    /// cannot certify a full collar for them.
    pub setwise_strict: bool,
    /// True when the component value matches the grid-wide minimum up to the
    /// globality tolerance recorded on the report.
    pub is_global: bool,
}

/// Result of scanning a function on a 2-D grid.
#[derive(Debug, Clone, Serialize)]
pub struct PlateauReport {
    pub grid: GridInfo,
    /// Requested relative tolerances.
    pub value_tol: f64,
    pub strict_margin: f64,
    /// Absolute tolerances after scaling by the value spread.
    pub value_tol_abs: f64,
    pub strict_margin_abs: f64,
    /// Absolute tolerance used for the `is_global` flags.
    pub global_tol_abs: f64,
    pub components: Vec<PlateauComponent>,
    pub grid_global_min: f64,
    /// Number of cells excluded because the function value was not finite.
    pub non_finite_cells: usize,
    #[serde(skip)]
    values: Vec<f64>,
}

impl PlateauReport {
    /// Raw cell value at (u index `i`, v index `j`).
    pub fn cell_value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.resolution + j]
    }

    /// True when the cell belongs to some component, i.e. was marked as a
    /// grid local minimum.
    pub fn is_local_min_cell(&self, i: usize, j: usize) -> bool {
        self.components
            .iter()
            .any(|c| c.cells.binary_search(&(i, j)).is_ok())
    }

    /// Recompute the `is_global` flags with an absolute tolerance, e.g. one
    /// matched to the discretization error of the grid.
    pub fn reflag_global(&mut self, tol: f64) {
        self.global_tol_abs = tol;
        for c in &mut self.components {
            c.is_global = c.value <= self.grid_global_min + tol;
        }
    }
}

/// True when every strictly isolated component sits within `tol` of the grid
/// minimum.  Vacuously true without strict components.
pub fn weakly_global_verdict(report: &PlateauReport, tol: f64) -> bool {
    report
        .components
        .iter()
        .filter(|c| c.setwise_strict)
        .all(|c| c.value <= report.grid_global_min + tol)
}

/// Scan `f` on a `resolution`² grid over `[u_lo,u_hi]×[v_lo,v_hi]`.
///
/// `value_tol` and `strict_margin` are relative: they are scaled by
/// `max(1, spread)` where spread is the range of finite values seen, which
/// keeps the scan invariant under adding a constant to `f`.  Non-finite
/// values exclude their cell from every comparison and are counted on the
/// report.
pub fn grid_scan_2d<F>(
    f: F,
    ubox: [f64; 2],
    vbox: [f64; 2],
    resolution: usize,
    value_tol: f64,
    strict_margin: f64,
) -> Result<PlateauReport>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    if resolution < 3 {
        return Err(Error::InvalidInput(format!(
            "grid resolution must be at least 3, got {resolution}"
        )));
    }
    for &[lo, hi] in &[ubox, vbox] {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::InvalidInput(format!(
                "grid box bounds must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
    }
    for &t in &[value_tol, strict_margin] {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidInput(format!(
                "tolerances must be finite and nonnegative, got {t}"
            )));
        }
    }

    let grid = GridInfo {
        u_lo: ubox[0],
        u_hi: ubox[1],
        v_lo: vbox[0],
        v_hi: vbox[1],
        resolution,
    };
    let n = resolution;
    let values: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| f(grid.u_coord(idx / n), grid.v_coord(idx % n)))
        .collect();

    let finite = |i: usize, j: usize| values[i * n + j].is_finite();
    let non_finite_cells = values.iter().filter(|v| !v.is_finite()).count();
    if non_finite_cells == n * n {
        return Err(Error::InvalidInput(
            "no grid cell produced a finite value".into(),
        ));
    }

    let mut vmin = f64::INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    for &v in values.iter().filter(|v| v.is_finite()) {
        vmin = vmin.min(v);
        vmax = vmax.max(v);
    }
    let scale = (vmax - vmin).max(1.0);
    let value_tol_abs = value_tol * scale;
    let strict_margin_abs = strict_margin * scale;

    // Mark cells that are no larger than any finite 8-neighbour.
    let moore = |i: usize, j: usize| {
        let mut out = Vec::with_capacity(8);
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni >= 0 && nj >= 0 && (ni as usize) < n && (nj as usize) < n {
                    out.push((ni as usize, nj as usize));
                }
            }
        }
        out
    };
    let mut local_min = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            if !finite(i, j) {
                continue;
            }
            let v = values[i * n + j];
            local_min[i * n + j] = moore(i, j)
                .into_iter()
                .filter(|&(a, b)| finite(a, b))
                .all(|(a, b)| v <= values[a * n + b] + value_tol_abs);
        }
    }

    // 4-connected flood fill; adjacent marked cells join when their values
    // agree within the tolerance.
    let mut component_id = vec![usize::MAX; n * n];
    let mut components: Vec<Vec<(usize, usize)>> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if !local_min[i * n + j] || component_id[i * n + j] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut members = Vec::new();
            let mut queue = std::collections::VecDeque::from([(i, j)]);
            component_id[i * n + j] = id;
            while let Some((a, b)) = queue.pop_front() {
                members.push((a, b));
                let va = values[a * n + b];
                let mut push = |x: usize, y: usize| {
                    if local_min[x * n + y]
                        && component_id[x * n + y] == usize::MAX
                        && (values[x * n + y] - va).abs() <= value_tol_abs
                    {
                        component_id[x * n + y] = id;
                        queue.push_back((x, y));
                    }
                };
                if a > 0 {
                    push(a - 1, b);
                }
                if a + 1 < n {
                    push(a + 1, b);
                }
                if b > 0 {
                    push(a, b - 1);
                }
                if b + 1 < n {
                    push(a, b + 1);
                }
            }
            members.sort_unstable();
            components.push(members);
        }
    }

    let grid_global_min = vmin;
    let built: Vec<PlateauComponent> = components
        .into_iter()
        .enumerate()
        .map(|(id, cells)| {
            let value = cells
                .iter()
                .map(|&(a, b)| values[a * n + b])
                .fold(f64::INFINITY, f64::min);
            let touches_edge = cells
                .iter()
                .any(|&(a, b)| a == 0 || b == 0 || a == n - 1 || b == n - 1);
            let mut boundary_min = f64::INFINITY;
            let mut has_boundary = false;
            for &(a, b) in &cells {
                for (x, y) in moore(a, b) {
                    if component_id[x * n + y] != id && finite(x, y) {
                        has_boundary = true;
                        boundary_min = boundary_min.min(values[x * n + y]);
                    }
                }
            }
            let boundary_min = has_boundary.then_some(boundary_min);
            let setwise_strict = !touches_edge
                && boundary_min.is_some_and(|bm| bm > value + strict_margin_abs);
            PlateauComponent {
                cells,
                value,
                boundary_min,
                touches_edge,
                setwise_strict,
                is_global: value <= grid_global_min + value_tol_abs,
            }
        })
        .collect();

    Ok(PlateauReport {
        grid,
        value_tol,
        strict_margin,
        value_tol_abs,
        strict_margin_abs,
        global_tol_abs: value_tol_abs,
        components: built,
        grid_global_min,
        non_finite_cells,
        values,
    })
}

/// A scan bundled with its weak-globality verdict.
#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub plateau: PlateauReport,
    pub verdict_tol: f64,
    pub weakly_global: bool,
}

/// Globality tolerance for the 401-point product demo below: the best cell
/// per column misses the curve uv = 1 by at most half a grid step, giving
/// residual² ≤ (3·h/2)² ≈ 5.1e-4, so 1e-3 absorbs discretization error
/// with a factor-two cushion.
pub const PRODUCT_DEMO_GLOBAL_TOL: f64 = 1e-3;

/// Scan (uv − 1)² on [−3,3]² at resolution 401.
///
/// The continuum function attains 0 on an unbounded curve and has no strict
/// minimum; on the grid the curve shows up as edge-touching or
/// discretization-level components, every one of them within
/// [`PRODUCT_DEMO_GLOBAL_TOL`] of the grid minimum, so the verdict is true.
pub fn uv_demo() -> Result<ScanReport> {
    let mut plateau = grid_scan_2d(
        |u, v| (u * v - 1.0) * (u * v - 1.0),
        [-3.0, 3.0],
        [-3.0, 3.0],
        401,
        DEFAULT_VALUE_TOL,
        DEFAULT_STRICT_MARGIN,
    )?;
    plateau.reflag_global(PRODUCT_DEMO_GLOBAL_TOL);
    let weakly_global = weakly_global_verdict(&plateau, PRODUCT_DEMO_GLOBAL_TOL);
    Ok(ScanReport {
        plateau,
        verdict_tol: PRODUCT_DEMO_GLOBAL_TOL,
        weakly_global,
    })
}

/// Named synthetic surfaces for the scan command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticSurface {
    /// (uv − 1)²: flat global valley along a hyperbola, no strict minimum.
    Uv,
    /// u² + v²: a single strict global minimum at the origin.
    Bowl,
    /// A bowl at the origin plus a flat disk of higher value around (2,2):
    /// a strict plateau that is not global.
    BasinPlateau,
}

impl SyntheticSurface {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "uv" => Some(Self::Uv),
            "bowl" => Some(Self::Bowl),
            "basin_plateau" => Some(Self::BasinPlateau),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Uv => "uv",
            Self::Bowl => "bowl",
            Self::BasinPlateau => "basin_plateau",
        }
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        match self {
            Self::Uv => (u * v - 1.0) * (u * v - 1.0),
            Self::Bowl => u * u + v * v,
            Self::BasinPlateau => {
                let bowl = u * u + v * v;
                let d2 = (u - 2.0) * (u - 2.0) + (v - 2.0) * (v - 2.0);
                bowl.min(2.0 + (d2 - 0.25).max(0.0))
            }
        }
    }

    /// Box the surface is normally scanned on.
    pub fn default_box(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Self::Uv => ([-3.0, 3.0], [-3.0, 3.0]),
            Self::Bowl => ([-1.0, 1.0], [-1.0, 1.0]),
            Self::BasinPlateau => ([-4.0, 4.0], [-4.0, 4.0]),
        }
    }
}

/// A one-input one-output net of `width` hidden units whose tuned weights
/// land every hidden pre-activation exactly on a zero of the activation.
#[derive(Debug, Clone, Serialize)]
pub struct FlatMinimumInstance {
    #[serde(skip)]
    pub spec: NetSpec,
    pub width: usize,
    pub x: f64,
    pub y: f64,
    /// Pre-activation value each hidden unit is steered to; a zero of the
    /// activation, so the network output at the star point is 0.
    pub preactivation: f64,
    #[serde(skip)]
    pub star: Weights,
    #[serde(skip)]
    pub data: Dataset,
}

/// Build the instance: activation −sin²(z−1), first layer x ↦ z = 1, second
/// layer all entries sign(y).  The loss at the star point is y², every
/// nearby point has loss ≥ y² (the activation is nonpositive and the second
/// layer keeps the sign of y), and scaling the second layer moves along a
/// flat ray, so the star sits on a plateau of minima, none of them strict.
pub fn flat_minimum_instance(width: usize, x: f64, y: f64) -> Result<FlatMinimumInstance> {
    if width == 0 {
        return Err(Error::InvalidInput("hidden width must be positive".into()));
    }
    if x == 0.0 || !x.is_finite() {
        return Err(Error::InvalidInput(format!(
            "input value must be finite and nonzero, got {x}"
        )));
    }
    if y == 0.0 || !y.is_finite() {
        return Err(Error::InvalidInput(format!(
            "target value must be finite and nonzero, got {y}"
        )));
    }
    let preactivation = 1.0;
    let spec = NetSpec::new(
        vec![1, width, 1],
        Activation::builtin("negsin2")?,
        Loss::quadratic(),
    )?;
    let w1 = Matrix::new(width, 1, vec![preactivation / x; width])?;
    let w2 = Matrix::new(1, width, vec![y.signum(); width])?;
    let star = Weights::new(&spec, vec![w1, w2])?;
    let data = Dataset::new(Matrix::new(1, 1, vec![x])?, Matrix::new(1, 1, vec![y])?)?;
    Ok(FlatMinimumInstance {
        spec,
        width,
        x,
        y,
        preactivation,
        star,
        data,
    })
}

/// Numerical evidence that the star point is a minimum over a sampled
/// neighbourhood and sits on a flat ray of equal-loss points.
#[derive(Debug, Clone, Serialize)]
pub struct FlatMinimumEvidence {
    pub loss_at_star: f64,
    /// Target value the star loss should equal: y².
    pub expected_loss: f64,
    pub ball_radius: f64,
    pub ball_samples: usize,
    /// Smallest loss over all sampled points of the ∞-ball around the star.
    pub ball_min_loss: f64,
    /// Largest |loss − y²| over sampled scalings of the second layer,
    /// including the factor-2 witness.
    pub ray_max_deviation: f64,
    /// Largest loss change from permuting hidden units of a perturbed point.
    pub permutation_max_deviation: f64,
    pub seed: u64,
}

impl FlatMinimumEvidence {
    /// All three clauses at tolerance `tol`: star loss equals y², no sampled
    /// neighbour goes below it, and the ray stays flat.
    pub fn holds(&self, tol: f64) -> bool {
        (self.loss_at_star - self.expected_loss).abs() <= tol
            && self.ball_min_loss >= self.expected_loss - tol
            && self.ray_max_deviation <= tol
    }
}

fn loss_at(inst: &FlatMinimumInstance, w1: Matrix, w2: Matrix) -> Result<f64> {
    let w = Weights::new(&inst.spec, vec![w1, w2])?;
    loss_eval(&inst.spec, &w, &inst.data)
}

/// Sample the ∞-ball of `radius` around the star point and audit the flat
/// ray and the permutation symmetry of the hidden layer.
pub fn verify_flat_minimum(
    inst: &FlatMinimumInstance,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<FlatMinimumEvidence> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidInput(format!(
            "ball radius must be positive and finite, got {radius}"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let d = inst.width;
    let star_w1 = inst.star.mats()[0].clone();
    let star_w2 = inst.star.mats()[1].clone();
    let loss_at_star = loss_eval(&inst.spec, &inst.star, &inst.data)?;
    let expected_loss = inst.y * inst.y;

    let ball_min_loss = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = CounterRng::new(seed, s as u64);
            let w1 = Matrix::new(
                d,
                1,
                (0..d)
                    .map(|i| star_w1.get(i, 0) + rng.uniform_in(-radius, radius))
                    .collect(),
            )?;
            let w2 = Matrix::new(
                1,
                d,
                (0..d)
                    .map(|i| star_w2.get(0, i) + rng.uniform_in(-radius, radius))
                    .collect(),
            )?;
            loss_at(inst, w1, w2)
        })
        .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))?;

    let mut ray_max_deviation = 0.0f64;
    for alpha in crate::approximation::linspace(0.25, 4.0, 16)
        .into_iter()
        .chain([2.0])
    {
        let loss = loss_at(inst, star_w1.clone(), star_w2.scale(alpha))?;
        ray_max_deviation = ray_max_deviation.max((loss - expected_loss).abs());
    }

    // Permutation symmetry is only visible off the star point (its entries
    // are all equal), so check it on a perturbed point instead.
    let mut rng = CounterRng::new(seed, samples as u64);
    let p_w1: Vec<f64> = (0..d)
        .map(|i| star_w1.get(i, 0) + rng.uniform_in(-radius, radius))
        .collect();
    let p_w2: Vec<f64> = (0..d)
        .map(|i| star_w2.get(0, i) + rng.uniform_in(-radius, radius))
        .collect();
    let base = loss_at(
        inst,
        Matrix::new(d, 1, p_w1.clone())?,
        Matrix::new(1, d, p_w2.clone())?,
    )?;
    let mut permutation_max_deviation = 0.0f64;
    let rotate = |v: &[f64]| -> Vec<f64> {
        let mut out = v.to_vec();
        out.rotate_left(1.min(v.len() - 1));
        out
    };
    let reverse = |v: &[f64]| -> Vec<f64> { v.iter().rev().copied().collect() };
    for perm in [rotate(&p_w1), reverse(&p_w1)]
        .into_iter()
        .zip([rotate(&p_w2), reverse(&p_w2)])
    {
        let loss = loss_at(inst, Matrix::new(d, 1, perm.0)?, Matrix::new(1, d, perm.1)?)?;
        permutation_max_deviation = permutation_max_deviation.max((loss - base).abs());
    }

    Ok(FlatMinimumEvidence {
        loss_at_star,
        expected_loss,
        ball_radius: radius,
        ball_samples: samples,
        ball_min_loss,
        ray_max_deviation,
        permutation_max_deviation,
        seed,
    })
}
