//! Experiment configuration: a versioned TOML file with unknown keys
//! rejected. One config describes one method on one problem; seeds fan out
//! to independent runs.

use crate::architectures::{self, ArchitectureSpec, SubnetSpec};
use crate::driver::{Schedule, SelectionRule};
use crate::error::{Error, Result};
use crate::network::{Activation, InputScaling};
use crate::optimizer::AdamConfig;
use crate::pinn::{make_hier_problem, make_test_problem_with, PoissonProblem};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub mode: Mode,
    /// Method label used in trace filenames and reports. Defaults to
    /// `<mode>-<architecture>`.
    #[serde(default)]
    pub label: Option<String>,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub architecture: Option<ArchitectureConfig>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default)]
    pub selection: Option<SelectionConfig>,
    #[serde(default)]
    pub sampling: Option<SamplingConfig>,
    pub run: RunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Initial full phase then cycles of full + selected-block phases.
    Faml,
    /// Same schedule shape driven by a fixed block cycle (coarse network).
    Hierarchical,
    /// Plain single-level training of the complete network.
    Single,
    /// Fixed-step gradient descent on a seeded quadratic.
    Theory,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Faml => "faml",
            Mode::Hierarchical => "hierarchical",
            Mode::Single => "single",
            Mode::Theory => "theory",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// "hier", "test1".."test4", or "quadratic" (theory mode).
    pub name: String,
    #[serde(default = "default_alpha")]
    pub alpha: i64,
    #[serde(default = "default_beta")]
    pub beta: i64,
    /// Four-lobe constants override for test2.
    #[serde(default)]
    pub lobe_rm: Option<f64>,
    #[serde(default)]
    pub lobe_rd: Option<f64>,
    /// Theory-mode quadratic dimensions and thresholds.
    #[serde(default = "default_n1")]
    pub n1: usize,
    #[serde(default = "default_n2")]
    pub n2: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Stepsize as a fraction of 1/L.
    #[serde(default = "default_alpha_frac")]
    pub alpha_frac: f64,
}

fn default_alpha() -> i64 {
    2
}
fn default_beta() -> i64 {
    4
}
fn default_n1() -> usize {
    16
}
fn default_n2() -> usize {
    8
}
fn default_eps() -> f64 {
    1e-2
}
fn default_tau() -> f64 {
    0.5
}
fn default_alpha_frac() -> f64 {
    0.9
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub subnets: Vec<SubnetConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubnetConfig {
    pub widths: Vec<usize>,
    #[serde(default = "default_act")]
    pub first_activation: String,
    #[serde(default = "default_act")]
    pub other_activation: String,
    #[serde(default = "default_scaling")]
    pub scaling: String,
}

fn default_act() -> String {
    "tanh".into()
}
fn default_scaling() -> String {
    "none".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub lr0: f64,
    pub decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let d = AdamConfig::default();
        Self { lr0: d.lr0, decay: d.decay, beta1: d.beta1, beta2: d.beta2, eps_hat: d.eps_hat }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default)]
    pub initial_full_epochs: usize,
    #[serde(default)]
    pub cycles: usize,
    #[serde(default)]
    pub full_epochs_per_cycle: usize,
    #[serde(default)]
    pub sub_epochs_per_cycle: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    pub rule: String,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    pub n_interior: usize,
    /// Pool size per boundary.
    pub n_boundary: usize,
    pub n_test: usize,
    pub batch_interior: usize,
    /// Batch size per boundary.
    pub batch_boundary: usize,
    /// Epoch stride of MSE evaluation; rows in between repeat the value.
    pub mse_every: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            n_interior: 50_000,
            n_boundary: 4_000,
            n_test: 30_000,
            batch_interior: 2_000,
            batch_boundary: 500,
            mse_every: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub budgets: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config version {} unsupported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.run.seeds.is_empty() {
            return Err(Error::Config("run.seeds must not be empty".into()));
        }
        self.adam_config().validate()?;
        match self.mode {
            Mode::Theory => {
                if self.problem.name != "quadratic" {
                    return Err(Error::Config(
                        "theory mode requires problem.name = \"quadratic\"".into(),
                    ));
                }
                if !(self.problem.eps > 0.0 && self.problem.eps <= 1.0) {
                    return Err(Error::Config("eps must lie in (0, 1]".into()));
                }
                if !(0.0 < self.problem.tau && self.problem.tau < 1.0) {
                    return Err(Error::Config("tau must lie in (0, 1)".into()));
                }
                if !(0.0 < self.problem.alpha_frac && self.problem.alpha_frac < 1.0) {
                    return Err(Error::Config("alpha_frac must lie in (0, 1)".into()));
                }
                if self.problem.n2 > self.problem.n1 || self.problem.n1 == 0 {
                    return Err(Error::Config("quadratic needs 1 <= n2 <= n1".into()));
                }
            }
            mode => {
                self.build_problem()?;
                let arch = self.architecture_spec()?;
                if arch.subnets.is_empty() {
                    return Err(Error::Config("architecture needs at least one subnet".into()));
                }
                arch.build()?;
                let schedule = self.schedule()?;
                match mode {
                    Mode::Single => {
                        if schedule.cycles != 0 || schedule.initial_full_epochs == 0 {
                            return Err(Error::Config(
                                "single mode uses schedule.initial_full_epochs as the epoch \
                                 count and requires cycles = 0"
                                    .into(),
                            ));
                        }
                    }
                    _ => {
                        self.selection_rule()?;
                    }
                }
                let sampling = self.sampling();
                if sampling.batch_interior > sampling.n_interior
                    || sampling.batch_boundary > sampling.n_boundary
                {
                    return Err(Error::Config("batch sizes must not exceed pool sizes".into()));
                }
                if sampling.batch_interior == 0 || sampling.mse_every == 0 {
                    return Err(Error::Config(
                        "batch_interior and mse_every must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        if let Some(label) = &self.label {
            return label.clone();
        }
        let arch = self
            .architecture
            .as_ref()
            .and_then(|a| a.name.clone())
            .unwrap_or_else(|| "inline".into());
        match self.mode {
            Mode::Theory => "theory-quadratic".into(),
            mode => format!("{}-{arch}", mode.as_str()),
        }
    }

    pub fn build_problem(&self) -> Result<PoissonProblem> {
        match self.problem.name.as_str() {
            "hier" => make_hier_problem(self.problem.alpha, self.problem.beta),
            "test1" => make_test_problem_with(1, None),
            "test2" => {
                let lobe = match (self.problem.lobe_rm, self.problem.lobe_rd) {
                    (Some(rm), Some(rd)) => Some((rm, rd)),
                    (None, None) => None,
                    _ => {
                        return Err(Error::Config(
                            "lobe_rm and lobe_rd must be set together".into(),
                        ))
                    }
                };
                make_test_problem_with(2, lobe)
            }
            "test3" => make_test_problem_with(3, None),
            "test4" => make_test_problem_with(4, None),
            other => Err(Error::Config(format!("unknown problem {other:?}"))),
        }
    }

    pub fn architecture_spec(&self) -> Result<ArchitectureSpec> {
        let Some(arch) = &self.architecture else {
            return Err(Error::Config("this mode requires an [architecture] section".into()));
        };
        match (&arch.name, arch.subnets.is_empty()) {
            (Some(name), true) => architectures::named(name),
            (None, false) => {
                let subnets: Result<Vec<SubnetSpec>> =
                    arch.subnets.iter().map(subnet_spec).collect();
                Ok(ArchitectureSpec {
                    name: "inline".into(),
                    input_dim: 2,
                    subnets: subnets?,
                    expected_params: None,
                })
            }
            (Some(_), false) => {
                Err(Error::Config("give either architecture.name or inline subnets, not both".into()))
            }
            (None, true) => Err(Error::Config("architecture needs a name or inline subnets".into())),
        }
    }

    pub fn adam_config(&self) -> AdamConfig {
        AdamConfig {
            lr0: self.optimizer.lr0,
            decay: self.optimizer.decay,
            beta1: self.optimizer.beta1,
            beta2: self.optimizer.beta2,
            eps_hat: self.optimizer.eps_hat,
        }
    }

    pub fn schedule(&self) -> Result<Schedule> {
        let Some(s) = &self.schedule else {
            return Err(Error::Config("this mode requires a [schedule] section".into()));
        };
        Ok(Schedule {
            initial_full_epochs: s.initial_full_epochs,
            cycles: s.cycles,
            full_epochs_per_cycle: s.full_epochs_per_cycle,
            sub_epochs_per_cycle: s.sub_epochs_per_cycle,
        })
    }

    pub fn selection_rule(&self) -> Result<SelectionRule> {
        let Some(sel) = &self.selection else {
            // The frequency-aware default: highest gradient-norm block.
            return Ok(SelectionRule::MaxRatio);
        };
        match sel.rule.as_str() {
            "max_ratio" => Ok(SelectionRule::MaxRatio),
            "threshold_first" => {
                if !(0.0 < sel.tau && sel.tau < 1.0) {
                    return Err(Error::Config("selection.tau must lie in (0, 1)".into()));
                }
                Ok(SelectionRule::ThresholdFirst { tau: sel.tau })
            }
            "fixed_cycle" => {
                if sel.order.is_empty() {
                    return Err(Error::Config("fixed_cycle needs a non-empty order".into()));
                }
                Ok(SelectionRule::FixedCycle { order: sel.order.clone() })
            }
            other => Err(Error::Config(format!("unknown selection rule {other:?}"))),
        }
    }

    pub fn sampling(&self) -> SamplingConfig {
        self.sampling.unwrap_or_default()
    }
}

fn subnet_spec(c: &SubnetConfig) -> Result<SubnetSpec> {
    if c.widths.is_empty() || c.widths.iter().any(|&w| w == 0) {
        return Err(Error::Config("subnet widths must be positive".into()));
    }
    Ok(SubnetSpec {
        widths: c.widths.clone(),
        first_activation: parse_activation_token(&c.first_activation)?,
        other_activation: parse_activation_token(&c.other_activation)?,
        scaling: parse_scaling_token(&c.scaling)?,
    })
}

pub fn parse_activation_token(tok: &str) -> Result<Activation> {
    if let Some(r) = tok.strip_prefix("sfm:") {
        let relax: f64 =
            r.parse().map_err(|_| Error::Config(format!("bad SFM relaxation {r:?}")))?;
        if !(0.0..=1.0).contains(&relax) {
            return Err(Error::Config("SFM relaxation must lie in [0, 1]".into()));
        }
        return Ok(Activation::Sfm { relax });
    }
    match tok {
        "tanh" => Ok(Activation::Tanh),
        "s2relu" => Ok(Activation::S2Relu),
        "identity" => Ok(Activation::Identity),
        other => Err(Error::Config(format!("unknown activation {other:?}"))),
    }
}

pub fn parse_scaling_token(tok: &str) -> Result<InputScaling> {
    if tok == "none" {
        return Ok(InputScaling::None);
    }
    if let Some(s) = tok.strip_prefix("learnable:") {
        let init_std: f64 =
            s.parse().map_err(|_| Error::Config(format!("bad scaling deviation {s:?}")))?;
        if init_std < 0.0 || !init_std.is_finite() {
            return Err(Error::Config("scaling deviation must be finite and non-negative".into()));
        }
        return Ok(InputScaling::Learnable { init_std });
    }
    if let Some(s) = tok.strip_prefix("fixed:") {
        let values: Vec<f64> = s
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("bad fixed scaling list {s:?}")))?;
        if values.is_empty() {
            return Err(Error::Config("fixed scaling needs at least one value".into()));
        }
        return Ok(InputScaling::Fixed(values));
    }
    Err(Error::Config(format!("unknown scaling {tok:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FAML_DESK: &str = r#"
version = 1
mode = "faml"

[problem]
name = "test3"

[[architecture.subnets]]
widths = [20, 20, 20]

[[architecture.subnets]]
widths = [20, 20, 20]
first_activation = "sfm:0.5"
scaling = "learnable:20"

[schedule]
initial_full_epochs = 10
cycles = 2
full_epochs_per_cycle = 5
sub_epochs_per_cycle = 20

[selection]
rule = "max_ratio"

[sampling]
n_interior = 200
n_boundary = 50
n_test = 40
batch_interior = 30
batch_boundary = 10
mse_every = 1

[run]
seeds = [1, 2]
budgets = [10.0, 20.0]
"#;

    #[test]
    fn desk_config_parses_and_builds() {
        let cfg = ExperimentConfig::from_toml(FAML_DESK).unwrap();
        assert_eq!(cfg.label(), "faml-inline");
        let arch = cfg.architecture_spec().unwrap();
        assert_eq!(arch.subnets.len(), 2);
        assert_eq!(
            arch.subnets[1].scaling,
            InputScaling::Learnable { init_std: 20.0 }
        );
        let cn = arch.build().unwrap();
        assert_eq!(cn.n_blocks(), 2);
        assert_eq!(cfg.schedule().unwrap().sub_epochs_per_cycle, 20);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = FAML_DESK.replace("[run]", "[run]\nbogus_key = 3");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad_top = format!("{FAML_DESK}\nextra = 1\n");
        assert!(ExperimentConfig::from_toml(&bad_top).is_err());
    }

    #[test]
    fn version_checked() {
        let bad = FAML_DESK.replace("version = 1", "version = 2");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn oversized_batch_rejected() {
        let bad = FAML_DESK.replace("batch_interior = 30", "batch_interior = 300");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn theory_config_parses() {
        let text = r#"
version = 1
mode = "theory"

[problem]
name = "quadratic"
n1 = 16
n2 = 8
eps = 0.01
tau = 0.5

[run]
seeds = [1, 2, 3]
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.mode, Mode::Theory);
        assert_eq!(cfg.label(), "theory-quadratic");
    }

    #[test]
    fn single_mode_requires_zero_cycles() {
        let text = r#"
version = 1
mode = "single"

[problem]
name = "hier"

[architecture]
name = "SL1"

[schedule]
initial_full_epochs = 50
cycles = 1
full_epochs_per_cycle = 5
sub_epochs_per_cycle = 5

[sampling]
n_interior = 100
n_boundary = 30
n_test = 20
batch_interior = 20
batch_boundary = 10

[run]
seeds = [7]
"#;
        assert!(ExperimentConfig::from_toml(text).is_err());
        let good = text.replace("cycles = 1", "cycles = 0");
        let cfg = ExperimentConfig::from_toml(&good).unwrap();
        assert_eq!(cfg.label(), "single-SL1");
    }
}
