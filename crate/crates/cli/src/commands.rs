use serde::Serialize;

use rollgeo_core::bending::{bend as bend_path, break_limits, BendSpec, EndpointMap};
use rollgeo_core::jacobian::{audit, JacobianAudit};
use rollgeo_core::shortcut::{shortcut_search, ShortcutCertificate, ShortcutOptions};
use rollgeo_core::state::{base_defect, equivalence_defect};
use rollgeo_core::verify::{verify_geodesic, GeodesicReport, VerifyOptions};
use rollgeo_core::{arc_length, FieldConvention, HorizontalPath};

use crate::config::{Built, ExperimentConfig, PlaneCheck};
use crate::{output, CliError, Common};

struct Run {
    cfg: ExperimentConfig,
    seed: u64,
    built: Built,
}

fn prepare(args: &Common) -> Result<Run, CliError> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let built = cfg.build_path(seed)?;
    output::ensure_dir(&args.out)?;
    Ok(Run { cfg, seed, built })
}

#[derive(Serialize)]
struct Header<'a> {
    command: &'a str,
    seed: u64,
    radius: f64,
    step: f64,
    convention: FieldConvention,
}

impl<'a> Header<'a> {
    fn new(command: &'a str, run: &Run) -> Self {
        Self {
            command,
            seed: run.seed,
            radius: run.cfg.radius.get(),
            step: run.cfg.step,
            convention: run.cfg.convention,
        }
    }
}

#[derive(Serialize)]
struct PathSummary {
    samples: usize,
    length: f64,
    max_invariant_defect: f64,
    start: [f64; 12],
    end: [f64; 12],
    end_base_defect: f64,
}

impl PathSummary {
    fn of(p: &HorizontalPath) -> Self {
        Self {
            samples: p.samples().len(),
            length: arc_length(p),
            max_invariant_defect: p.max_invariant_defect(),
            start: p.start().to_array(),
            end: p.end().to_array(),
            end_base_defect: base_defect(p.end()),
        }
    }
}

#[derive(Serialize)]
struct PathReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    path: PathSummary,
    plane: Option<PlaneCheck>,
}

pub fn roll(args: &Common) -> Result<(), CliError> {
    let run = prepare(args)?;
    let p = &run.built.path;
    output::trajectory(&args.out, p)?;
    output::report(
        &args.out,
        &PathReport {
            header: Header::new("roll", &run),
            path: PathSummary::of(p),
            plane: run.built.plane.clone(),
        },
    )
}

pub fn trace(args: &Common) -> Result<(), CliError> {
    let run = prepare(args)?;
    if run.built.plane.is_none() {
        return Err(CliError::Input("trace needs `plane` in [path]".into()));
    }
    let p = &run.built.path;
    output::trajectory(&args.out, p)?;
    output::report(
        &args.out,
        &PathReport {
            header: Header::new("trace", &run),
            path: PathSummary::of(p),
            plane: run.built.plane.clone(),
        },
    )
}

#[derive(Serialize)]
struct BreakReport {
    t: f64,
    angle: f64,
    left: [f64; 12],
    right: [f64; 12],
    contact_jump: f64,
    equivalence_defect: f64,
}

#[derive(Serialize)]
struct BendReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    original: PathSummary,
    bent: PathSummary,
    breaks: Vec<BreakReport>,
}

pub fn bend(args: &Common) -> Result<(), CliError> {
    let run = prepare(args)?;
    let cfg = run.cfg.bend.as_ref().ok_or_else(|| CliError::Input("bend needs a [bend] section".into()))?;
    let spec = BendSpec::new(cfg.times, cfg.angles);
    let p = &run.built.path;
    let q = bend_path(p, &spec)?;
    let breaks = break_limits(p, &spec)?
        .iter()
        .enumerate()
        .map(|(j, (l, r))| BreakReport {
            t: spec.times[j],
            angle: spec.angles[j],
            left: l.to_array(),
            right: r.to_array(),
            contact_jump: (l.u() - r.u()).amax().max((l.v() - r.v()).amax()),
            equivalence_defect: equivalence_defect(l, r),
        })
        .collect();
    output::trajectory(&args.out, &q)?;
    output::report(
        &args.out,
        &BendReport {
            header: Header::new("bend", &run),
            original: PathSummary::of(p),
            bent: PathSummary::of(&q),
            breaks,
        },
    )
}

#[derive(Serialize)]
struct JacobianReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    horizon: f64,
    #[serde(flatten)]
    audit: JacobianAudit,
}

pub fn jacobian(args: &Common) -> Result<(), CliError> {
    let run = prepare(args)?;
    let p = &run.built.path;
    let cfg = run.cfg.jacobian.clone().unwrap_or(crate::config::JacobianConfig { times: None, horizon: None });
    let horizon = cfg.horizon.unwrap_or(p.end_time());
    let times = cfg
        .times
        .unwrap_or_else(|| std::array::from_fn(|k| (k as f64 + 0.5) / 5.0 * horizon));
    let map = EndpointMap::new(p, times, horizon)?;
    output::report(
        &args.out,
        &JacobianReport {
            header: Header::new("jacobian", &run),
            horizon,
            audit: audit(&map)?,
        },
    )
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    options: VerifyOptions,
    #[serde(flatten)]
    report: GeodesicReport,
}

pub fn verify(args: &Common) -> Result<(), CliError> {
    let run = prepare(args)?;
    let mut opts = VerifyOptions {
        seed: run.seed,
        ..VerifyOptions::default()
    };
    if let Some(v) = &run.cfg.verify {
        opts.trials = v.trials.unwrap_or(opts.trials);
        opts.residual_tol = v.residual_tol.unwrap_or(opts.residual_tol);
        opts.singularity_tol = v.singularity_tol.unwrap_or(opts.singularity_tol);
        opts.gap_fraction = v.gap_fraction.unwrap_or(opts.gap_fraction);
        opts.shortcut_lead = v.shortcut_lead.unwrap_or(opts.shortcut_lead);
    }
    let report = verify_geodesic(&run.built.path, &opts)?;
    output::report(
        &args.out,
        &VerifyReport {
            header: Header::new("verify", &run),
            options: opts,
            report,
        },
    )
}

#[derive(Serialize)]
struct ShortcutReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    #[serde(flatten)]
    certificate: ShortcutCertificate,
}

pub fn shortcut(args: &Common) -> Result<(), CliError> {
    let run = prepare(args)?;
    let cfg = run
        .cfg
        .shortcut
        .as_ref()
        .ok_or_else(|| CliError::Input("shortcut needs a [shortcut] section".into()))?;
    let defaults = ShortcutOptions::default();
    let opts = ShortcutOptions {
        tol: cfg.tol.unwrap_or(defaults.tol),
        max_iterations: cfg.max_iterations.unwrap_or(defaults.max_iterations),
        ..defaults
    };
    let certificate = shortcut_search(&run.built.path, cfg.horizon, cfg.target, cfg.times, &opts)?;
    output::report(
        &args.out,
        &ShortcutReport {
            header: Header::new("shortcut", &run),
            certificate,
        },
    )
}
