use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ssogd_core::numerics::{matrix_to_rows, min_sym_eigenvalue, Matrix};
use ssogd_core::optimizer::{check_step_size, halving_search, sufficient_condition};
use ssogd_core::scenarios::{self, REGISTRY};
use ssogd_core::simulator::{batch_worst_case_regret, write_trace_csv};
use ssogd_core::{dynamic_regret, ControllerKind, Problem, ScenarioSpec, StepSize};

use crate::config::{BatchSection, ConfigFile, OutputSection};
use crate::svg::{line_plot, Series};
use crate::{BatchArgs, RunArgs};

pub const EXIT_ASSUMPTION: u8 = 2;
pub const EXIT_INSTABILITY: u8 = 3;
pub const EXIT_IO: u8 = 4;

const DEFAULT_OUT: &str = "ssogd-out";
const DEFAULT_HORIZONS: [usize; 4] = [100, 200, 400, 800];
const DEFAULT_TRIALS: usize = 60;

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ssogd_core::Error>() {
            if e.is_assumption_violation() {
                return EXIT_ASSUMPTION;
            }
            if e.is_instability() {
                return EXIT_INSTABILITY;
            }
        }
    }
    EXIT_IO
}

/// Resolved run: the config as it will be recorded plus the spec it yields.
struct Run {
    config: ConfigFile,
    spec: ScenarioSpec,
    controllers: Vec<ControllerKind>,
    out: PathBuf,
    svg: bool,
}

fn resolve(args: &RunArgs) -> Result<Run> {
    let mut config = match (&args.config, &args.scenario) {
        (Some(path), _) => ConfigFile::load(path)?,
        (None, Some(name)) => {
            let entry = scenarios::find(name)
                .with_context(|| format!("unknown scenario `{name}`; see `ssogd scenarios`"))?;
            ConfigFile::from_spec(&(entry.build)())
        }
        (None, None) => bail!("pass --config <path> or --scenario <name>"),
    };
    let mut spec = config.to_spec()?;
    if let Some(alpha) = &args.alpha {
        spec.step_size = alpha.parse::<StepSize>().context("--alpha")?;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(horizon) = args.horizon {
        if horizon == 0 {
            bail!("--horizon must be at least 1");
        }
        spec.horizon = horizon;
    }
    let controllers = if args.controller.is_empty() {
        vec![spec.controller]
    } else {
        args.controller
            .iter()
            .map(|id| {
                id.trim()
                    .parse::<ControllerKind>()
                    .with_context(|| format!("--controller {id}"))
            })
            .collect::<Result<Vec<_>>>()?
    };
    spec.controller = controllers[0];
    let output = config.output.clone().unwrap_or(OutputSection {
        directory: None,
        svg: false,
    });
    let out = args
        .out
        .clone()
        .or_else(|| output.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let svg = args.svg || output.svg;

    let batch = config.batch.take();
    config = ConfigFile::from_spec(&spec);
    config.batch = batch;
    config.output = Some(OutputSection {
        directory: Some(out.display().to_string()),
        svg,
    });
    Ok(Run {
        config,
        spec,
        controllers,
        out,
        svg,
    })
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes the exact configuration and a manifest listing every artifact.
    fn finish(mut self, command: &str, config: &ConfigFile) -> Result<()> {
        self.write("config.toml", config.to_toml()?.as_bytes())?;
        let mut manifest = format!("command={command}\nspec=config.toml\n");
        for f in &self.files {
            let _ = writeln!(manifest, "artifact={f}");
        }
        let path = self.dir.join("manifest.txt");
        fs::write(&path, manifest).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

fn format_matrix(m: &Matrix) -> String {
    let rows: Vec<String> = matrix_to_rows(m)
        .iter()
        .map(|r| {
            format!(
                "[{}]",
                r.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn format_option(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| x.to_string())
}

pub fn synthesize(args: &RunArgs) -> Result<()> {
    let run = resolve(args)?;
    let spec = &run.spec;
    let problem = Problem::from_spec(spec)?;
    let g = &problem.gains;
    let rho_at = problem.combined.spectral_radius()?;
    let check = sufficient_condition(&problem.combined)?;
    let halving = halving_search(&problem.system, g, &problem.weights, 60)?;

    let mut report = String::new();
    let _ = writeln!(report, "P={}", format_matrix(&g.p));
    let _ = writeln!(report, "K={}", format_matrix(&g.k));
    let _ = writeln!(report, "S={}", format_matrix(&g.s));
    let _ = writeln!(report, "rho_F={}", g.closed_loop_radius);
    let _ = writeln!(report, "alpha={}", problem.alpha);
    let _ = writeln!(report, "alpha_mode={}", spec.step_size);
    let _ = writeln!(report, "rho_A_tilde={rho_at}");
    let _ = writeln!(
        report,
        "lambda_min_Mbar={}",
        min_sym_eigenvalue(&problem.combined.m_bar)
    );
    let _ = writeln!(report, "sufficient_condition={}", check.holds);
    let _ = writeln!(report, "sufficient_condition_loop_gain={}", check.loop_gain);
    let _ = writeln!(
        report,
        "sufficient_condition_alpha_limit={}",
        check.alpha_limit
    );
    let _ = writeln!(report, "halving_alpha={}", format_option(halving));
    print!("{report}");

    let mut artifacts = Artifacts::new(&run.out)?;
    artifacts.write("synthesis.txt", report.as_bytes())?;
    artifacts.finish("synthesize", &run.config)?;
    if !check_step_size(&problem.combined) {
        return Err(ssogd_core::Error::UnstableStep {
            alpha: problem.alpha,
            radius: rho_at,
        }
        .into());
    }
    Ok(())
}

pub fn simulate(args: &RunArgs) -> Result<()> {
    let run = resolve(args)?;
    let spec = &run.spec;
    let problem = Problem::from_spec(spec)?;
    let reference = spec.generate_reference()?;
    let mut artifacts = Artifacts::new(&run.out)?;
    let mut regret_series = Vec::new();

    for &kind in &run.controllers {
        let trace = problem.rollout(kind, &reference, spec.x0.as_deref(), spec.v0.as_deref())?;
        let report = dynamic_regret(&problem, &trace)?;

        let mut csv = Vec::new();
        write_trace_csv(&mut csv, &trace, Some(&report))?;
        artifacts.write(&format!("{kind}.trace.csv"), &csv)?;

        let terminal = trace.errors.last().map_or(0.0, |e| e.norm());
        let mut summary = String::new();
        let _ = writeln!(summary, "controller={kind}");
        let _ = writeln!(summary, "alpha={}", problem.alpha);
        let _ = writeln!(summary, "horizon={}", trace.horizon());
        let _ = writeln!(summary, "J={}", report.total_cost);
        let _ = writeln!(summary, "offline_J={}", report.offline_cost);
        let _ = writeln!(summary, "regret={}", report.regret);
        let _ = writeln!(summary, "regret_via_inputs={}", report.regret_via_inputs);
        let _ = writeln!(summary, "ss_regret={}", report.ss_regret);
        let _ = writeln!(
            summary,
            "ss_regret_last_step={}",
            report.ss_regret_last_step
        );
        let _ = writeln!(summary, "path_length={}", report.path_length);
        let _ = writeln!(
            summary,
            "theory_bound={}",
            format_option(report.theory_bound)
        );
        let _ = writeln!(summary, "ss_bound={}", format_option(report.ss_bound));
        let _ = writeln!(summary, "terminal_error={terminal}");
        print!("{summary}");
        artifacts.write(&format!("{kind}.summary.txt"), summary.as_bytes())?;

        if run.svg {
            let mut series = Vec::new();
            for i in 0..trace.states[0].len().min(2) {
                series.push(Series::new(
                    format!("x{i}"),
                    trace
                        .states
                        .iter()
                        .enumerate()
                        .map(|(t, x)| (t as f64, x[i]))
                        .collect(),
                ));
                series.push(
                    Series::new(
                        format!("r{i}"),
                        trace
                            .references
                            .iter()
                            .enumerate()
                            .map(|(t, r)| (t as f64, r[i]))
                            .collect(),
                    )
                    .dashed(),
                );
            }
            let plot = line_plot(
                &format!("{kind}: state vs reference"),
                "t",
                "position",
                &series,
            );
            artifacts.write(&format!("{kind}.position.svg"), plot.as_bytes())?;
            regret_series.push(Series::new(
                kind.to_string(),
                report
                    .cumulative
                    .iter()
                    .enumerate()
                    .map(|(t, c)| (t as f64, *c))
                    .collect(),
            ));
        }
    }
    if run.svg {
        let plot = line_plot("cumulative regret", "t", "regret", &regret_series);
        artifacts.write("regret.svg", plot.as_bytes())?;
    }
    artifacts.finish("simulate", &run.config)
}

pub fn batch_regret(args: &BatchArgs) -> Result<()> {
    let mut run = resolve(&args.run)?;
    let section = run.config.batch.clone();
    let horizons = if !args.horizons.is_empty() {
        args.horizons.clone()
    } else {
        section
            .as_ref()
            .map_or(DEFAULT_HORIZONS.to_vec(), |b| b.horizons.clone())
    };
    let trials = args
        .trials
        .or(section.as_ref().map(|b| b.trials))
        .unwrap_or(DEFAULT_TRIALS);
    if horizons.contains(&0) {
        bail!("horizons must be positive");
    }
    run.config.batch = Some(BatchSection {
        horizons: horizons.clone(),
        trials,
    });
    let rows = batch_worst_case_regret(&run.spec, &horizons, trials)?;

    let mut csv = String::from("horizon,worst_regret,mean_regret,theory_bound\n");
    for r in &rows {
        let bound = r.bound.map_or_else(String::new, |b| b.to_string());
        let _ = writeln!(csv, "{},{},{},{bound}", r.horizon, r.worst, r.mean);
    }
    print!("{csv}");
    let mut artifacts = Artifacts::new(&run.out)?;
    artifacts.write("batch.csv", csv.as_bytes())?;
    if run.svg {
        let mut series = vec![Series::new(
            "worst regret",
            rows.iter().map(|r| (r.horizon as f64, r.worst)).collect(),
        )];
        series.push(Series::new(
            "mean regret",
            rows.iter().map(|r| (r.horizon as f64, r.mean)).collect(),
        ));
        let plot = line_plot(
            &format!("{}: regret over {trials} trials", run.spec.controller),
            "T",
            "regret",
            &series,
        );
        artifacts.write("batch.svg", plot.as_bytes())?;
    }
    artifacts.finish("batch-regret", &run.config)
}

pub fn scenarios() -> Result<()> {
    for entry in &REGISTRY {
        let spec = (entry.build)();
        println!(
            "{}\tn={} m={} T={} reference={}\t{}",
            entry.name,
            spec.system.n(),
            spec.system.m(),
            spec.horizon,
            spec.reference.id(),
            entry.description
        );
    }
    Ok(())
}
