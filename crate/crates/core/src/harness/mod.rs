//! Experiment harness: builders, oracle, metrics, and the runner behind the
//! CLI `experiment` subcommand.

pub mod builders;
pub mod metrics;
pub mod oracle;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::duality::{eplus_all, Verdict};
use crate::error::{Error, Result};
use crate::game::{GameSpec, StrategyProfile};
use crate::solver::{default_bundle, solve, Method, Schedule, SolverConfig};
use crate::vi::{DualProfile, JointPoint};

/// Experiment description (JSON).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// `"sensor"` or `"logsumexp"`.
    pub experiment: String,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    pub iters: usize,
    pub methods: Vec<Method>,
    /// Seeds of the random feasible starting profiles.
    pub init_seeds: Vec<u64>,
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    pub schedule: Schedule,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub require: Option<Requirements>,
}

fn default_n() -> usize {
    10
}

/// Acceptance checks embedded in the experiment config; failing them flips
/// the report status (and the CLI exit code).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Requirements {
    /// Final MLE bound applied to the primary-method runs.
    #[serde(default)]
    pub max_final_mle: Option<f64>,
    /// All primary-method runs must certify as global NE.
    #[serde(default)]
    pub require_certified: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub method: Method,
    pub init_seed: u64,
    pub trace_path: String,
    pub iterations: usize,
    pub converged: bool,
    pub verdict: Verdict,
    pub vi_residual: f64,
    pub final_x: Vec<f64>,
    pub final_mle: Option<f64>,
    pub checkpoint_mle: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub game_digest: String,
    pub runs: Vec<RunReport>,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// FNV-1a over the serialized game: a stable instance fingerprint.
fn digest(s: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    format!("{h:016x}")
}

/// Builds the experiment's game and, when known, its ground truth.
pub fn build_experiment_game(cfg: &ExperimentConfig) -> Result<(GameSpec, Option<StrategyProfile>)> {
    match cfg.experiment.as_str() {
        "sensor" => {
            let game = builders::build_sensor_game(cfg.n, cfg.seed, (5.0, 10.0), (-6.0, 6.0), true)?;
            let truth = builders::sensor_ground_truth(cfg.n, cfg.seed, (5.0, 10.0), (-6.0, 6.0))?;
            Ok((game, Some(truth)))
        }
        "logsumexp" => Ok((builders::build_logsumexp_game(cfg.seed), None)),
        other => Err(Error::Config(format!("unknown experiment kind '{other}'"))),
    }
}

/// Runs every method × init combination, writes per-run trace CSVs and the
/// report JSON into `out_dir`, and returns the report. Outputs carry no
/// timestamps, so identical configs produce byte-identical artifacts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.methods.is_empty() {
        return Err(Error::Config("experiment needs at least one method".into()));
    }
    if cfg.init_seeds.is_empty() {
        return Err(Error::Config("experiment needs at least one init seed".into()));
    }
    let (game, truth) = build_experiment_game(cfg)?;
    let eplus = eplus_all(&game, crate::duality::DEFAULT_KAPPA_X)?;
    let bundle = default_bundle(&game, &eplus)?;
    fs::create_dir_all(&cfg.out_dir)?;

    let mut runs = Vec::new();
    for method in &cfg.methods {
        for init_seed in &cfg.init_seeds {
            let config = SolverConfig {
                method: *method,
                schedule: cfg.schedule,
                max_iters: cfg.iters,
                t_tol: 1e-3,
                seed: *init_seed,
                checkpoints: cfg.checkpoints.clone(),
                ..SolverConfig::default()
            };
            let init = seeded_start(&game, &eplus, *init_seed)?;
            let result = solve(&game, &bundle, &eplus, &config, Some(init), None)?;

            let trace_name = format!("{}_{:04}.csv", method_slug(*method), init_seed);
            let trace_path = cfg.out_dir.join(&trace_name);
            fs::write(&trace_path, result.trace_csv())?;

            let final_mle = truth
                .as_ref()
                .map(|t| metrics::mle(&result.x, t))
                .transpose()?;
            let checkpoint_mle = match &truth {
                Some(t) => result
                    .snapshots
                    .iter()
                    .map(|(k, x)| Ok((*k, metrics::mle(x, t)?)))
                    .collect::<Result<Vec<_>>>()?,
                None => vec![],
            };
            runs.push(RunReport {
                method: *method,
                init_seed: *init_seed,
                trace_path: trace_name,
                iterations: result.iterations,
                converged: result.converged,
                verdict: result.certificate.verdict,
                vi_residual: result.certificate.vi_residual,
                final_x: result.x.as_vector().iter().copied().collect(),
                final_mle,
                checkpoint_mle,
            });
        }
    }

    let passed = check_requirements(cfg, &runs);
    let report = ExperimentReport {
        experiment: cfg.experiment.clone(),
        game_digest: digest(&game.to_json()?),
        runs,
        passed,
    };
    fs::write(cfg.out_dir.join("report.json"), report.to_json()?)?;
    Ok(report)
}

fn check_requirements(cfg: &ExperimentConfig, runs: &[RunReport]) -> bool {
    let Some(req) = &cfg.require else { return true };
    let primary = |r: &&RunReport| !r.method.is_baseline();
    if let Some(bound) = req.max_final_mle {
        let ok = runs
            .iter()
            .filter(primary)
            .all(|r| r.final_mle.map_or(false, |m| m <= bound));
        if !ok {
            return false;
        }
    }
    if req.require_certified == Some(true) {
        let ok = runs
            .iter()
            .filter(primary)
            .all(|r| r.verdict == Verdict::GlobalNe);
        if !ok {
            return false;
        }
    }
    true
}

fn method_slug(m: Method) -> &'static str {
    match m {
        Method::Alg1 => "alg1",
        Method::Alg1Potential => "alg1_potential",
        Method::Gd => "gd",
        Method::Pgd => "pgd",
        Method::Omd => "omd",
        Method::Eg => "eg",
        Method::Sgd => "sgd",
        Method::Proximal => "proximal",
    }
}

/// Random feasible start: x uniform in Ω, σ at the E⁺ interior point.
pub fn seeded_start(
    game: &GameSpec,
    eplus: &[crate::duality::DualFeasibleSet],
    seed: u64,
) -> Result<JointPoint> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<_> = game
        .players()
        .iter()
        .map(|p| p.omega.sample_interior(&mut rng, 0.05))
        .collect();
    let x = StrategyProfile::from_blocks(&blocks);
    let sigma = crate::solver::dual_start(game, eplus, &x)?;
    Ok(JointPoint::new(x, DualProfile::from_blocks(game, sigma)?))
}

pub fn run_experiment_file(path: &Path) -> Result<ExperimentReport> {
    let text = fs::read_to_string(path)?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)?;
    run_experiment(&cfg)
}
