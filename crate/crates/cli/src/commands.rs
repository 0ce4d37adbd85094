//! One runner per subcommand. Each writes `report.json` (deterministic),
//! `meta.json` (timing), and its CSV table, then reports whether the claim
//! under test held. A `false` return is a finding, not an error.

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use landscape_lab::landscape::{self, SyntheticSurface};
use landscape_lab::{
    certify_full_rank_measure, default_rank_tol, flat_minimum_instance, global_descent, linspace,
    random_weights, uniform_distance, uv_demo, verify_flat_minimum, weakly_global_verdict,
    ApproxSequence, CounterRng, Dataset, DescentConfig, DescentOutcome, Error, Loss, Matrix,
    NetSpec, RankVerdict, ScanReport,
};
use serde::Serialize;

use crate::config::{
    ApproximateCfg, CertifyRankCfg, CounterexampleCfg, DescendCfg, ScanCfg,
};
use crate::report::{write_csv, write_meta, write_report, Report, VERSION};

/// Anything that prevents a run from being attempted: bad flags, bad
/// config, unusable instance. Maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<Error> for UsageError {
    fn from(e: Error) -> Self {
        UsageError(e.to_string())
    }
}

impl From<std::io::Error> for UsageError {
    fn from(e: std::io::Error) -> Self {
        UsageError(format!("i/o failure: {e}"))
    }
}

pub struct Ctx {
    pub seed: u64,
    pub out: PathBuf,
    pub quiet: bool,
}

impl Ctx {
    fn say(&self, line: impl fmt::Display) {
        if !self.quiet {
            println!("{line}");
        }
    }
}

fn matrix_from(rows: &[Vec<f64>], what: &str) -> Result<Matrix, UsageError> {
    Matrix::from_rows(rows).map_err(|e| UsageError(format!("bad {what} matrix: {e}")))
}

fn finish<C: Serialize, R: Serialize>(
    ctx: &Ctx,
    command: &str,
    claim: &str,
    cfg: &C,
    result: &R,
    verified: bool,
    started: Instant,
) -> Result<(), UsageError> {
    write_report(
        &ctx.out,
        &Report {
            command,
            version: VERSION,
            claim,
            seed: ctx.seed,
            config: cfg,
            result,
            verified,
        },
    )?;
    write_meta(&ctx.out, command, started.elapsed().as_secs_f64())?;
    Ok(())
}

pub fn run_certify_rank(cfg: &CertifyRankCfg, ctx: &Ctx) -> Result<bool, UsageError> {
    let started = Instant::now();
    let spec = NetSpec::new(cfg.dims.clone(), cfg.activation.build()?, Loss::quadratic())?;
    let x = matrix_from(&cfg.x, "input")?;
    let n = x.cols();
    let data = Dataset::new(x, Matrix::zeros(spec.output_dim(), n))?;
    let rel_tol = cfg
        .rel_tol
        .unwrap_or_else(|| default_rank_tol(spec.last_hidden_dim(), n));
    let cert = certify_full_rank_measure(&spec, &data, cfg.trials, ctx.seed, rel_tol, cfg.scale)?;
    write_csv(
        &ctx.out.join("singulars.csv"),
        "trial,sigma_min_rel",
        cert.per_trial_sigma_min_rel
            .iter()
            .enumerate()
            .map(|(t, s)| format!("{t},{s}")),
    )?;
    let verified = cert.verdict == RankVerdict::CertifiedFullRankAe;
    ctx.say(format_args!(
        "certify-rank: {}/{} trials full rank (smallest relative sigma {:.3e}) -> {:?}",
        cert.full_rank_count, cert.trials, cert.min_smallest_singular, cert.verdict
    ));
    finish(
        ctx,
        "certify-rank",
        "random hidden weights give the last hidden layer full column rank outside a measure-zero set",
        cfg,
        &cert,
        verified,
        started,
    )?;
    Ok(verified)
}

pub fn run_descend(cfg: &DescendCfg, ctx: &Ctx) -> Result<bool, UsageError> {
    let started = Instant::now();
    let loss = match cfg.loss.as_str() {
        "quadratic" => Loss::quadratic(),
        "logistic" => Loss::logistic(),
        other => {
            return Err(UsageError(format!(
                "unknown loss '{other}'; expected quadratic or logistic"
            )))
        }
    };
    let spec = NetSpec::new(cfg.dims.clone(), cfg.activation.build()?, loss)?;
    let x = matrix_from(&cfg.x, "input")?;
    let y = matrix_from(&cfg.y, "target")?;
    let y_norm_sq = y.frobenius_norm().powi(2);
    let data = Dataset::new(x, y)?;
    let w0 = random_weights(&spec, CounterRng::new(ctx.seed, 0).next_u64(), cfg.init_scale)?;
    let dconfig = DescentConfig {
        max_tries: cfg.max_tries,
        seed: CounterRng::new(ctx.seed, 1).next_u64(),
        rank_rel_tol: cfg.rank_rel_tol,
        solver_tol: cfg.solver_tol,
        solver_max_iters: cfg.solver_max_iters,
        path_samples: cfg.path_samples,
    };
    let outcome = global_descent(&spec, &data, &w0, cfg.delta, &dconfig)?;
    let path_rows: Vec<String> = match &outcome {
        DescentOutcome::Reached(trace) => trace
            .path
            .iter()
            .map(|p| format!("{},{}", p.lambda, p.loss))
            .collect(),
        DescentOutcome::PerturbationExhausted(_) => Vec::new(),
    };
    write_csv(&ctx.out.join("path.csv"), "lambda,loss", path_rows)?;
    let verified = match &outcome {
        DescentOutcome::Reached(trace) => {
            let accept = cfg.accept_tol * (1.0 + y_norm_sq);
            let reached = trace.final_loss <= trace.infimum + accept;
            ctx.say(format_args!(
                "descend: loss {:.6e} -> {:.6e} (infimum {:.6e}) in {} tries, monotone={}",
                trace.initial_loss, trace.final_loss, trace.infimum, trace.tries_used,
                trace.monotone
            ));
            trace.monotone && reached
        }
        DescentOutcome::PerturbationExhausted(f) => {
            ctx.say(format_args!(
                "descend: perturbation never reached rank {} (best {}) in {} tries",
                f.target_rank, f.best_rank, f.tries
            ));
            false
        }
    };
    finish(
        ctx,
        "descend",
        "an arbitrarily small hidden-weight perturbation plus one convex solve reaches the global loss infimum along a non-increasing path",
        cfg,
        &outcome,
        verified,
        started,
    )?;
    Ok(verified)
}

#[derive(Serialize)]
struct ApproxRow {
    k: usize,
    sup_gap: f64,
    bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    derivatives_nonzero: Option<bool>,
}

#[derive(Serialize)]
struct ApproxResult {
    scale: f64,
    rows: Vec<ApproxRow>,
}

pub fn run_approximate(cfg: &ApproximateCfg, ctx: &Ctx) -> Result<bool, UsageError> {
    let started = Instant::now();
    if !(cfg.grid_lo < cfg.grid_hi) || !cfg.grid_lo.is_finite() || !cfg.grid_hi.is_finite() {
        return Err(UsageError(format!(
            "grid bounds must be finite with lo < hi, got [{}, {}]",
            cfg.grid_lo, cfg.grid_hi
        )));
    }
    if cfg.grid_points < 2 {
        return Err(UsageError("grid needs at least two points".into()));
    }
    let base = cfg.base.build()?;
    let seq = match cfg.scale_override {
        Some(s) => ApproxSequence::with_scale(base.clone(), cfg.order, s)?,
        None => ApproxSequence::new(base.clone(), cfg.order)?,
    };
    let grid = linspace(cfg.grid_lo, cfg.grid_hi, cfg.grid_points);
    let mut rows = Vec::with_capacity(cfg.k_max + 1);
    let mut verified = true;
    for k in 0..=cfg.k_max {
        let f_k = seq.f_k(k)?;
        let sup_gap = uniform_distance(&f_k, &base, &grid)?;
        let bound = seq.uniform_bound(k);
        let derivatives_nonzero = match cfg.certify_orders {
            Some(count) => Some(f_k.first_derivatives_nonzero(count)?.all_nonzero),
            None => None,
        };
        verified &= sup_gap <= bound + cfg.bound_slack;
        rows.push(ApproxRow {
            k,
            sup_gap,
            bound,
            derivatives_nonzero,
        });
    }
    write_csv(
        &ctx.out.join("approx.csv"),
        "k,sup_gap,bound",
        rows.iter()
            .map(|r| format!("{},{},{}", r.k, r.sup_gap, r.bound)),
    )?;
    ctx.say(format_args!(
        "approximate: base {} with scale {}, sup gap {:.4e} at k={} within bound: {}",
        seq.base().name(),
        seq.s(),
        rows.last().map(|r| r.sup_gap).unwrap_or(f64::NAN),
        cfg.k_max,
        verified
    ));
    let result = ApproxResult {
        scale: seq.s(),
        rows,
    };
    finish(
        ctx,
        "approximate",
        "each repaired activation stays uniformly within sqrt(2)/(s(k+1)) of its base",
        cfg,
        &result,
        verified,
        started,
    )?;
    Ok(verified)
}

#[derive(Serialize)]
struct CounterexampleResult {
    instance: landscape_lab::FlatMinimumInstance,
    star_first_layer: Vec<f64>,
    star_second_layer: Vec<f64>,
    evidence: landscape_lab::FlatMinimumEvidence,
}

pub fn run_counterexample(cfg: &CounterexampleCfg, ctx: &Ctx) -> Result<bool, UsageError> {
    let started = Instant::now();
    let inst = flat_minimum_instance(cfg.width, cfg.x, cfg.y)?;
    let evidence = verify_flat_minimum(&inst, cfg.radius, cfg.samples, ctx.seed)?;
    let verified = evidence.holds(cfg.tol);
    ctx.say(format_args!(
        "counterexample: star loss {} (target {}), ball min {}, ray deviation {:.3e} -> {}",
        evidence.loss_at_star,
        evidence.expected_loss,
        evidence.ball_min_loss,
        evidence.ray_max_deviation,
        if verified { "holds" } else { "violated" }
    ));
    let result = CounterexampleResult {
        star_first_layer: inst.star.mats()[0].as_slice().to_vec(),
        star_second_layer: inst.star.mats()[1].as_slice().to_vec(),
        instance: inst,
        evidence,
    };
    finish(
        ctx,
        "counterexample",
        "the tuned network admits no strictly better point in the sampled neighbourhood and sits on an equal-loss ray",
        cfg,
        &result,
        verified,
        started,
    )?;
    Ok(verified)
}

fn write_heatmap(out: &std::path::Path, plateau: &landscape_lab::PlateauReport) -> Result<(), UsageError> {
    let n = plateau.grid.resolution;
    write_csv(
        &out.join("heatmap.csv"),
        "u,v,value",
        (0..n * n).map(|idx| {
            let (i, j) = (idx / n, idx % n);
            format!(
                "{},{},{}",
                plateau.grid.u_coord(i),
                plateau.grid.v_coord(j),
                plateau.cell_value(i, j)
            )
        }),
    )?;
    Ok(())
}

fn say_scan(ctx: &Ctx, label: &str, scan: &ScanReport) {
    let strict = scan
        .plateau
        .components
        .iter()
        .filter(|c| c.setwise_strict)
        .count();
    ctx.say(format_args!(
        "{label}: {} components ({} strict), grid min {:.4e}, weakly global: {}",
        scan.plateau.components.len(),
        strict,
        scan.plateau.grid_global_min,
        scan.weakly_global
    ));
}

const SCAN_CLAIM: &str =
    "every strictly isolated grid minimum attains the grid-wide minimum up to the verdict tolerance";

pub fn run_scan(cfg: &ScanCfg, ctx: &Ctx) -> Result<bool, UsageError> {
    let started = Instant::now();
    let surface = SyntheticSurface::from_name(&cfg.surface).ok_or_else(|| {
        UsageError(format!(
            "unknown surface '{}'; expected uv, bowl, or basin_plateau",
            cfg.surface
        ))
    })?;
    let (default_u, default_v) = surface.default_box();
    let mut plateau = landscape::grid_scan_2d(
        |u, v| surface.eval(u, v),
        cfg.ubox.unwrap_or(default_u),
        cfg.vbox.unwrap_or(default_v),
        cfg.resolution,
        cfg.value_tol,
        cfg.strict_margin,
    )?;
    let verdict_tol = cfg.global_tol.unwrap_or(plateau.value_tol_abs);
    plateau.reflag_global(verdict_tol);
    let weakly_global = weakly_global_verdict(&plateau, verdict_tol);
    let scan = ScanReport {
        plateau,
        verdict_tol,
        weakly_global,
    };
    write_heatmap(&ctx.out, &scan.plateau)?;
    say_scan(ctx, "scan", &scan);
    finish(ctx, "scan", SCAN_CLAIM, cfg, &scan, weakly_global, started)?;
    Ok(weakly_global)
}

/// Config echo for the fixed demo; it has no tunables.
#[derive(Serialize)]
struct UvDemoCfg {}

pub fn run_uv_demo(ctx: &Ctx) -> Result<bool, UsageError> {
    let started = Instant::now();
    let scan = uv_demo()?;
    write_heatmap(&ctx.out, &scan.plateau)?;
    say_scan(ctx, "uv-demo", &scan);
    let verified = scan.weakly_global;
    finish(
        ctx,
        "uv-demo",
        SCAN_CLAIM,
        &UvDemoCfg {},
        &scan,
        verified,
        started,
    )?;
    Ok(verified)
}
