use crate::config::RunConfig;
use crate::{Cli, Command, FitArgs, InterveneArgs, SimulateArgs, SurrogateArgs, ValidateArgs};
use crossdyn::intervene::{
    occupancy_fraction_landscape, occupancy_fraction_with_tol, relative_effort_landscape, relative_effort_with_tol,
    tilted_landscape, Landau, Tilted,
};
use crossdyn::io::{self, ModelFile, SCHEMA_VERSION};
use crossdyn::landscape::{find_features, LandscapeFeatures, DEFAULT_SCAN_POINTS};
use crossdyn::markov::continuous_density;
use crossdyn::sde::{count_transitions, simulate, ForceTable, TransitionStats};
use crossdyn::surrogate::{sample_landau, LandauSpec};
use crossdyn::validate::{
    cluster_by_category, displacement_histogram, filter_range, validate_cohort, Categories, LongitudinalPair,
    Standardization, ValidationConfig, ValidationReport,
};
use crossdyn::{fit, CrossSection, Error, FitConfig, FittedModel, LangevinModel};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    BoundaryOptimum { sigma: f64, lo: f64, hi: f64 },
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::BoundaryOptimum { sigma, lo, hi } => write!(
                f,
                "fitted sigma {sigma} lies within 1% of the search bound [{lo}, {hi}]; outputs were written but the fit is unreliable"
            ),
        }
    }
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::BoundaryOptimum { .. } => "BoundaryOptimum",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::BoundaryOptimum { .. } => 3,
            CliError::Core(Error::Parse { .. } | Error::Json(_) | Error::Csv(_) | Error::SchemaVersion { .. }) => 2,
            CliError::Core(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

struct Context {
    config: RunConfig,
    out: PathBuf,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    fs::create_dir_all(&cli.out).map_err(Error::from)?;
    let mut ctx = Context { config, out: cli.out };
    match cli.command {
        Command::Fit(a) => cmd_fit(&mut ctx, a),
        Command::Surrogate(a) => cmd_surrogate(&ctx, a),
        Command::Simulate(a) => cmd_simulate(&ctx, a),
        Command::Validate(a) => cmd_validate(&ctx, a),
        Command::Intervene(a) => cmd_intervene(&ctx, a),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| {
        CliError::Core(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
    })
}

fn load_model(path: &Path) -> CliResult<ModelFile> {
    Ok(ModelFile::from_json(&read_text(path)?)?)
}

fn boundary_check(fitted: &FittedModel, cfg: &FitConfig) -> CliResult<()> {
    if fitted.at_boundary {
        return Err(CliError::BoundaryOptimum { sigma: fitted.model.sigma, lo: cfg.sigma.lo, hi: cfg.sigma.hi });
    }
    Ok(())
}

fn cmd_fit(ctx: &mut Context, args: FitArgs) -> CliResult<()> {
    if args.fixed_grid {
        ctx.config.fixed_grid = true;
    }
    if let Some(f) = args.fineness {
        ctx.config.fineness = f;
    }
    ctx.config.check()?;
    let (_, data) = io::read_cross_section(&read_text(&args.input)?)?;
    let cfg = ctx.config.fit_config();
    let fitted = fit(&data, &cfg)?;
    let file = ModelFile::from_fit(&fitted, ctx.config.seed);
    file.save(&ctx.path("model.json"))?;
    write_curves(&ctx.path("curves.csv"), &fitted)?;

    let features = fitted.features_original_units(&cfg).ok();
    println!(
        "sigma={} cost={} attractors={:?} tipping_points={:?}",
        fitted.model.sigma,
        fitted.cost,
        features.as_ref().map(|f| &f.attractors),
        features.as_ref().map(|f| &f.tipping_points)
    );
    boundary_check(&fitted, &cfg)
}

fn write_curves(path: &Path, fitted: &FittedModel) -> CliResult<()> {
    let model = &fitted.model;
    let chain = model.chain()?;
    let stationary = continuous_density(&chain)?;
    let d = model.landscape.density();
    let rows = chain.grid.points().iter().map(|&x| {
        vec![
            x,
            fitted.transform.invert(x),
            d.pdf(x),
            model.landscape.energy(x),
            model.landscape.force(x),
            stationary.eval(x),
        ]
    });
    io::write_table(path, &["x", "x_original", "pdf", "energy", "force", "stationary_density"], rows)?;
    Ok(())
}

fn cmd_surrogate(ctx: &Context, args: SurrogateArgs) -> CliResult<()> {
    let seed = ctx.config.require_seed()?;
    let spec = LandauSpec::new(args.a, args.b, args.n, seed)?;
    let data = sample_landau(&spec)?;
    let ids: Vec<String> = (1..=data.len()).map(|i| i.to_string()).collect();
    io::write_cross_section(&ctx.path("surrogate.csv"), &ids, data.values())?;
    Ok(())
}

#[derive(Serialize)]
struct TransitionsFile {
    schema_version: u32,
    seed: u64,
    x0: f64,
    dt: f64,
    steps: usize,
    burn_in: usize,
    tipping_point: Option<f64>,
    #[serde(flatten)]
    stats: Option<TransitionStats>,
}

fn model_features(model: &LangevinModel) -> CliResult<LandscapeFeatures> {
    Ok(find_features(&model.landscape, model.grid.x_min, model.grid.x_max, DEFAULT_SCAN_POINTS)?)
}

fn cmd_simulate(ctx: &Context, args: SimulateArgs) -> CliResult<()> {
    let seed = ctx.config.require_seed()?;
    let model = load_model(&args.model)?.model()?;
    let features = model_features(&model)?;
    let x0 = args.x0.unwrap_or(features.attractors[0]);
    let dt = args.dt.unwrap_or(model.grid.dt);
    let traj = if args.exact_force {
        simulate(&model.landscape, model.sigma, x0, dt, args.steps, seed)?
    } else {
        let g = model.grid;
        let pad = 0.5 * (g.x_max - g.x_min);
        let table = ForceTable::new(&model.landscape, g.x_min - pad, g.x_max + pad, 20_001)?;
        simulate(&table, model.sigma, x0, dt, args.steps, seed)?
    };
    let tipping_point = features.tipping_points.first().copied();
    let stats = match tipping_point {
        Some(tp) => Some(count_transitions(&traj.after(args.burn_in), tp)?),
        None => None,
    };
    io::write_table(&ctx.path("trajectory.csv"), &["time", "state"], traj.times().zip(&traj.states).map(|(t, &x)| vec![t, x]))?;
    let out = TransitionsFile { schema_version: SCHEMA_VERSION, seed, x0, dt, steps: args.steps, burn_in: args.burn_in, tipping_point, stats };
    io::write_json(&ctx.path("transitions.json"), &out)?;
    Ok(())
}

#[derive(Serialize)]
struct GroupReport {
    name: String,
    lo: Option<f64>,
    hi: Option<f64>,
    n: usize,
    disregarded: bool,
    refitted: bool,
    sigma: Option<f64>,
    warnings: Vec<String>,
    reports: Vec<ValidationReport>,
}

#[derive(Serialize)]
struct ReportFile {
    schema_version: u32,
    seed: u64,
    followups: Vec<String>,
    groups: Vec<GroupReport>,
}

fn parse_range(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Core(Error::InvalidArgument(format!("range {s:?} must look like lo:hi with lo < hi")));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn fit_baselines(rows: &[&LongitudinalPair], cfg: &FitConfig) -> crossdyn::Result<FittedModel> {
    let data = CrossSection::new(rows.iter().map(|r| r.baseline).collect())?;
    fit(&data, cfg)
}

struct Scoring<'a> {
    labels: &'a [String],
    config: ValidationConfig,
    bin_width: f64,
    bin_origin: f64,
}

type HistRow = (String, String, crossdyn::validate::HistogramBin);

impl Scoring<'_> {
    fn score(
        &self,
        name: &str,
        model: &LangevinModel,
        transform: &Standardization,
        rows: &[&LongitudinalPair],
        hist: &mut Vec<HistRow>,
    ) -> crossdyn::Result<Vec<ValidationReport>> {
        let ids: Vec<String> = rows.iter().map(|r| r.id.clone()).collect();
        let base: Vec<f64> = rows.iter().map(|r| r.baseline).collect();
        let mut out = Vec::new();
        for (k, label) in self.labels.iter().enumerate() {
            let follow: Vec<f64> = rows.iter().map(|r| r.followups[k].1).collect();
            let report = validate_cohort(&format!("{name}/{label}"), model, transform, &ids, &base, &follow, &self.config)?;
            let disp: Vec<f64> = base.iter().zip(&follow).map(|(b, f)| f - b).collect();
            for bin in displacement_histogram(&base, &disp, self.bin_width, self.bin_origin)? {
                hist.push((name.to_string(), label.clone(), bin));
            }
            out.push(report);
        }
        Ok(out)
    }
}

fn cmd_validate(ctx: &Context, args: ValidateArgs) -> CliResult<()> {
    let seed = ctx.config.require_seed()?;
    ctx.config.check()?;
    if args.model.is_none() && !args.refit {
        return Err(Error::InvalidArgument("pass --model <path> or --refit".into()).into());
    }
    let (labels, rows) = io::read_longitudinal(&read_text(&args.cohort)?)?;
    let fit_cfg = ctx.config.fit_config();
    let scoring = Scoring {
        labels: &labels,
        config: ValidationConfig {
            null_repetitions: ctx.config.null_repetitions,
            bootstrap_repetitions: ctx.config.bootstrap_repetitions,
            delta_t_scan: ctx.config.delta_t_scan,
            delta_t_unit: ctx.config.delta_t_unit,
            bootstrap: !args.no_bootstrap,
            seed,
        },
        bin_width: args.bin_width,
        bin_origin: args.bin_origin,
    };
    let mut hist: Vec<HistRow> = Vec::new();
    let mut groups = Vec::new();

    let all: Vec<&LongitudinalPair> = rows.iter().collect();
    let (model, transform, refitted) = match &args.model {
        Some(p) => {
            let file = load_model(p)?;
            (file.model()?, file.standardization, false)
        }
        None => {
            let f = fit_baselines(&all, &fit_cfg)?;
            (f.model, f.transform, true)
        }
    };
    groups.push(GroupReport {
        name: "pooled".into(),
        lo: None,
        hi: None,
        n: all.len(),
        disregarded: false,
        refitted,
        sigma: Some(model.sigma),
        warnings: Vec::new(),
        reports: scoring.score("pooled", &model, &transform, &all, &mut hist)?,
    });

    let baselines: Vec<f64> = rows.iter().map(|r| r.baseline).collect();
    let mut subsets: Vec<(String, f64, f64, Vec<usize>, bool)> = Vec::new();
    if let Some(scheme) = &args.clusters {
        if scheme != "bmi" {
            return Err(Error::InvalidArgument(format!("unknown cluster scheme {scheme:?}; expected `bmi`")).into());
        }
        for c in cluster_by_category(&baselines, &Categories::bmi(), ctx.config.min_cluster_size) {
            subsets.push((c.label, c.lo, c.hi, c.members, c.disregarded));
        }
    }
    if let Some(r) = &args.range {
        let (lo, hi) = parse_range(r)?;
        let members = filter_range(&baselines, lo, hi);
        let small = members.len() < ctx.config.min_cluster_size;
        subsets.push((format!("range [{lo}, {hi})"), lo, hi, members, small));
    }

    for (name, lo, hi, members, disregarded) in subsets {
        let mut g = GroupReport {
            name: name.clone(),
            lo: lo.is_finite().then_some(lo),
            hi: hi.is_finite().then_some(hi),
            n: members.len(),
            disregarded,
            refitted: true,
            sigma: None,
            warnings: Vec::new(),
            reports: Vec::new(),
        };
        if !disregarded {
            let sub: Vec<&LongitudinalPair> = members.iter().map(|&i| &rows[i]).collect();
            let outcome = fit_baselines(&sub, &fit_cfg).and_then(|f| {
                if f.at_boundary {
                    g.warnings.push(format!("BoundaryOptimum: sigma {} at search bound", f.model.sigma));
                }
                g.sigma = Some(f.model.sigma);
                scoring.score(&name, &f.model, &f.transform, &sub, &mut hist)
            });
            match outcome {
                Ok(r) => g.reports = r,
                Err(e) => g.warnings.push(format!("{}: {e}", e.code())),
            }
        }
        groups.push(g);
    }

    let report = ReportFile { schema_version: SCHEMA_VERSION, seed, followups: labels.clone(), groups };
    io::write_json(&ctx.path("report.json"), &report)?;
    write_histogram(&ctx.path("histogram.csv"), &hist)?;
    Ok(())
}

fn write_histogram(path: &Path, rows: &[HistRow]) -> CliResult<()> {
    let mut text = String::from("group,followup,bin_lo,bin_hi,positive,negative,relative\n");
    for (group, label, b) in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_field(group),
            csv_field(label),
            b.lo,
            b.hi,
            b.positive,
            b.negative,
            b.relative
        ));
    }
    io::write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Serialize)]
struct InterventionFile {
    schema_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    source: String,
    c: f64,
    t: f64,
    sigma: f64,
    r: f64,
    threshold: f64,
    occupancy_below: f64,
    occupancy_above: f64,
    attractors: Vec<f64>,
    tilted_attractors: Vec<f64>,
    tilted_tipping_points: Vec<f64>,
}

fn parse_landau(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Core(Error::InvalidArgument(format!("--landau {s:?} must look like a,b")));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn cmd_intervene(ctx: &Context, args: InterveneArgs) -> CliResult<()> {
    let tol = ctx.config.quadrature_tol;
    let out = match (&args.model, &args.landau) {
        (Some(path), None) => {
            let model = load_model(path)?.model()?;
            let base = model_features(&model)?;
            let sigma = args.sigma.unwrap_or(model.sigma);
            let threshold = args.threshold.or(base.tipping_points.first().copied()).unwrap_or(0.0);
            let r = relative_effort_landscape(&model.landscape, args.c, args.t, sigma)?;
            let below = occupancy_fraction_landscape(&model.landscape, args.c, threshold);
            let g = model.grid;
            let tilted = find_features(&tilted_landscape(&model.landscape, args.c), g.x_min, g.x_max, DEFAULT_SCAN_POINTS)?;
            InterventionFile {
                schema_version: SCHEMA_VERSION,
                seed: ctx.config.seed,
                source: path.display().to_string(),
                c: args.c,
                t: args.t,
                sigma,
                r,
                threshold,
                occupancy_below: below,
                occupancy_above: 1.0 - below,
                attractors: base.attractors,
                tilted_attractors: tilted.attractors,
                tilted_tipping_points: tilted.tipping_points,
            }
        }
        (None, Some(spec)) => {
            let (a, b) = parse_landau(spec)?;
            let sigma = args
                .sigma
                .ok_or_else(|| Error::InvalidArgument("--sigma is required with --landau".into()))?;
            let threshold = args.threshold.unwrap_or(0.0);
            let landau = Landau::new(a, b)?;
            let r = relative_effort_with_tol(a, b, args.c, args.t, sigma, tol)?;
            let below = occupancy_fraction_with_tol(a, b, args.c, threshold, tol)?;
            let (lo, hi) = landau.support(0.0);
            let base = find_features(&landau, lo, hi, DEFAULT_SCAN_POINTS)?;
            let (lo, hi) = landau.support(args.c);
            let tilted = find_features(&Tilted { base: landau, c: args.c }, lo, hi, DEFAULT_SCAN_POINTS)?;
            InterventionFile {
                schema_version: SCHEMA_VERSION,
                seed: ctx.config.seed,
                source: format!("landau(a={a}, b={b})"),
                c: args.c,
                t: args.t,
                sigma,
                r,
                threshold,
                occupancy_below: below,
                occupancy_above: 1.0 - below,
                attractors: base.attractors,
                tilted_attractors: tilted.attractors,
                tilted_tipping_points: tilted.tipping_points,
            }
        }
        _ => return Err(Error::InvalidArgument("pass exactly one of --model or --landau".into()).into()),
    };
    io::write_json(&ctx.path("intervention.json"), &out)?;
    Ok(())
}
