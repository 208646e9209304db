//! Experiment configuration.
//!
//! ```json
//! {
//!   "instance": {"name": "plateau", "params": {}},
//!   "command": "pr4pc",
//!   "params": {"theta": [0.0], "strategy": {"kind": "log_grid", "lo": 0.25, "hi": 4.0, "count": 9}},
//!   "output_dir": "out/plateau",
//!   "seed": 0
//! }
//! ```
//!
//! `params` is parsed according to `command`; unknown keys are rejected at
//! every level. The experiment `seed` replaces the `seed` of any descent
//! solver block and drives random multiplier draws.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::demo::DemoName;
use crate::analysis::LambdaRange;
use crate::error::{Error, Result};
use crate::instances::InstanceSpec;
use crate::search::{LambdaStrategy, Solver};
use crate::solvers::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SolvePr,
    SolvePc,
    Pr4pc,
    Theorem1,
    Attainability,
    Monotonicity,
    Sensitivity,
    Demo,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::SolvePr,
        Command::SolvePc,
        Command::Pr4pc,
        Command::Theorem1,
        Command::Attainability,
        Command::Monotonicity,
        Command::Sensitivity,
        Command::Demo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::SolvePr => "solve-pr",
            Command::SolvePc => "solve-pc",
            Command::Pr4pc => "pr4pc",
            Command::Theorem1 => "theorem1",
            Command::Attainability => "attainability",
            Command::Monotonicity => "monotonicity",
            Command::Sensitivity => "sensitivity",
            Command::Demo => "demo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Required by every command except `demo`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceSpec>,
    pub command: Command,
    #[serde(default = "empty_object")]
    pub params: Value,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

fn default_solver() -> Solver {
    Solver::Grid(GridSpec::default())
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolvePrParams {
    pub lambda: Vec<f64>,
    #[serde(default = "default_solver")]
    pub solver: Solver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolvePcParams {
    pub theta: Vec<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    /// Exit with the feasibility code when the grid has no feasible point.
    #[serde(default = "yes")]
    pub require_feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pr4pcParams {
    pub theta: Vec<f64>,
    pub strategy: LambdaStrategy,
    #[serde(default = "default_solver")]
    pub solver: Solver,
    /// Exit with the feasibility code when no multiplier is stored.
    #[serde(default = "yes")]
    pub require_found: bool,
    /// Also compare every trace entry with the PC grid oracle at its own violation.
    #[serde(default)]
    pub conformance: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theorem1Params {
    #[serde(default)]
    pub lambdas: Vec<Vec<f64>>,
    /// Additional multipliers drawn log-uniformly from `random_range` with the experiment seed.
    #[serde(default)]
    pub random_count: usize,
    #[serde(default = "default_random_range")]
    pub random_range: [f64; 2],
    #[serde(default)]
    pub grid: GridSpec,
}

fn default_random_range() -> [f64; 2] {
    [1e-3, 1e3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttainabilityParams {
    /// The candidate constrained optimum. Exactly one of `w_star` and
    /// `w_star_from_lambda` must be given.
    #[serde(default)]
    pub w_star: Option<Vec<f64>>,
    /// Use the PR grid optimum for these multipliers as `w*`.
    #[serde(default)]
    pub w_star_from_lambda: Option<Vec<f64>>,
    #[serde(default)]
    pub j: usize,
    #[serde(default)]
    pub lambda_other: Vec<f64>,
    #[serde(default = "default_region_range")]
    pub lambda_grid: LambdaRange,
    #[serde(default)]
    pub grid: GridSpec,
    /// Also write every half-space to `halfspaces.csv` (one row per grid point).
    #[serde(default)]
    pub write_halfspaces: bool,
}

fn default_region_range() -> LambdaRange {
    LambdaRange {
        lo: 1e-3,
        hi: 1e3,
        count: 61,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotonicityParams {
    pub lambdas: Vec<Vec<f64>>,
    #[serde(default)]
    pub j: usize,
    #[serde(default = "default_solver")]
    pub solver: Solver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityParams {
    pub thetas: Vec<f64>,
    pub lambda_range: LambdaRange,
    #[serde(default)]
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoParams {
    pub name: DemoName,
}

/// A config with its `params` parsed for the command.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    SolvePr(SolvePrParams),
    SolvePc(SolvePcParams),
    Pr4pc(Pr4pcParams),
    Theorem1(Theorem1Params),
    Attainability(AttainabilityParams),
    Monotonicity(MonotonicityParams),
    Sensitivity(SensitivityParams),
    Demo(DemoParams),
}

fn parse<T: for<'de> Deserialize<'de>>(command: Command, params: &Value) -> Result<T> {
    serde_json::from_value(params.clone()).map_err(|e| Error::Config(format!("params for `{}`: {e}", command.as_str())))
}

fn seed_solver(solver: &mut Solver, seed: u64, budget: Option<u64>) {
    match solver {
        Solver::Descent(d) => d.seed = seed,
        Solver::Grid(g) => {
            if let Some(b) = budget {
                g.budget = b;
            }
        }
    }
}

fn set_budget(grid: &mut GridSpec, budget: Option<u64>) {
    if let Some(b) = budget {
        grid.budget = b;
    }
}

impl ExperimentConfig {
    /// Parse and validate a config document.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.job(None)?;
        Ok(config)
    }

    /// Parse `params` for the command. `budget` overrides every grid budget.
    pub fn job(&self, budget: Option<u64>) -> Result<Job> {
        if self.command != Command::Demo && self.instance.is_none() {
            return Err(Error::Config(format!("command `{}` needs an `instance`", self.command.as_str())));
        }
        let c = self.command;
        let p = &self.params;
        Ok(match c {
            Command::SolvePr => {
                let mut x: SolvePrParams = parse(c, p)?;
                seed_solver(&mut x.solver, self.seed, budget);
                Job::SolvePr(x)
            }
            Command::SolvePc => {
                let mut x: SolvePcParams = parse(c, p)?;
                set_budget(&mut x.grid, budget);
                Job::SolvePc(x)
            }
            Command::Pr4pc => {
                let mut x: Pr4pcParams = parse(c, p)?;
                seed_solver(&mut x.solver, self.seed, budget);
                if let Some(g) = x.conformance.as_mut() {
                    set_budget(g, budget);
                }
                Job::Pr4pc(x)
            }
            Command::Theorem1 => {
                let mut x: Theorem1Params = parse(c, p)?;
                set_budget(&mut x.grid, budget);
                Job::Theorem1(x)
            }
            Command::Attainability => {
                let mut x: AttainabilityParams = parse(c, p)?;
                if x.w_star.is_some() == x.w_star_from_lambda.is_some() {
                    return Err(Error::Config(
                        "attainability needs exactly one of `w_star` and `w_star_from_lambda`".into(),
                    ));
                }
                set_budget(&mut x.grid, budget);
                Job::Attainability(x)
            }
            Command::Monotonicity => {
                let mut x: MonotonicityParams = parse(c, p)?;
                seed_solver(&mut x.solver, self.seed, budget);
                Job::Monotonicity(x)
            }
            Command::Sensitivity => {
                let mut x: SensitivityParams = parse(c, p)?;
                set_budget(&mut x.grid, budget);
                Job::Sensitivity(x)
            }
            Command::Demo => Job::Demo(parse(c, p)?),
        })
    }
}

/// The published config schema.
pub const SCHEMA: &str = include_str!("../../config.schema.json");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pr4pc_config() {
        let text = r#"{
            "instance": {"name": "plateau"},
            "command": "pr4pc",
            "params": {"theta": [0.0], "strategy": {"kind": "log_grid", "lo": 0.25, "hi": 4.0, "count": 9},
                       "solver": {"kind": "grid", "points_per_dim": 2001}},
            "output_dir": "out"
        }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        match c.job(Some(5000)).unwrap() {
            Job::Pr4pc(p) => {
                assert_eq!(p.theta, vec![0.0]);
                assert!(p.require_found);
                match p.solver {
                    Solver::Grid(g) => {
                        assert_eq!(g.points_per_dim, 2001);
                        assert_eq!(g.budget, 5000);
                    }
                    s => panic!("{s:?}"),
                }
            }
            j => panic!("{j:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_everywhere() {
        let base = |params: &str| {
            format!(r#"{{"instance": {{"name": "plateau"}}, "command": "solve-pr", "params": {params}, "output_dir": "o"}}"#)
        };
        assert!(ExperimentConfig::from_json(&base(r#"{"lambda": [1.0]}"#)).is_ok());
        assert!(ExperimentConfig::from_json(&base(r#"{"lambda": [1.0], "lamda": 2}"#)).is_err());
        assert!(ExperimentConfig::from_json(&base(r#"{"lambda": [1.0], "solver": {"kind": "grid", "pts": 3}}"#)).is_err());
        assert!(ExperimentConfig::from_json(&base(r#"{"lambda": [-1.0]}"#)).is_ok()); // checked at run time
        let top = r#"{"instance": {"name": "plateau"}, "command": "solve-pr", "params": {"lambda": [1]}, "output_dir": "o", "extra": 1}"#;
        assert!(ExperimentConfig::from_json(top).is_err());
        let unknown = r#"{"instance": {"name": "nope"}, "command": "solve-pr", "params": {"lambda": [1]}, "output_dir": "o"}"#;
        assert!(ExperimentConfig::from_json(unknown).is_err());
    }

    #[test]
    fn descent_seed_comes_from_experiment() {
        let text = r#"{"instance": {"name": "plateau"}, "command": "solve-pr", "seed": 42,
            "params": {"lambda": [1.0], "solver": {"kind": "descent", "restarts": 2, "seed": 7}}, "output_dir": "o"}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        match c.job(None).unwrap() {
            Job::SolvePr(SolvePrParams {
                solver: Solver::Descent(d),
                ..
            }) => {
                assert_eq!(d.seed, 42);
                assert_eq!(d.restarts, 2);
            }
            j => panic!("{j:?}"),
        }
    }

    #[test]
    fn attainability_needs_exactly_one_target() {
        let mk = |params: &str| {
            format!(r#"{{"instance": {{"name": "plateau"}}, "command": "attainability", "params": {params}, "output_dir": "o"}}"#)
        };
        assert!(ExperimentConfig::from_json(&mk("{}")).is_err());
        assert!(ExperimentConfig::from_json(&mk(r#"{"w_star": [1.0]}"#)).is_ok());
        assert!(ExperimentConfig::from_json(&mk(r#"{"w_star": [1.0], "w_star_from_lambda": [1.0]}"#)).is_err());
    }

    #[test]
    fn demo_needs_no_instance() {
        let text = r#"{"command": "demo", "params": {"name": "fig2b"}, "output_dir": "o"}"#;
        assert!(ExperimentConfig::from_json(text).is_ok());
        let text = r#"{"command": "pr4pc", "params": {}, "output_dir": "o"}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    fn keys(v: &Value) -> std::collections::BTreeSet<String> {
        v.as_object().expect("object").keys().cloned().collect()
    }

    fn v<T: Serialize>(x: &T) -> Value {
        serde_json::to_value(x).unwrap()
    }

    fn schema_keys(schema: &Value, def: &str) -> std::collections::BTreeSet<String> {
        keys(&schema["$defs"][def]["properties"])
    }

    #[test]
    fn schema_covers_every_parameter() {
        use crate::search::LambdaStrategy as S;
        use crate::solvers::DescentConfig;
        let schema: Value = serde_json::from_str(SCHEMA).unwrap();
        let grid = GridSpec::default();
        let descent = DescentConfig {
            fd_step: Some(1e-6),
            ..DescentConfig::default()
        };
        let range = LambdaRange { lo: 1.0, hi: 2.0, count: 3 };
        let lambda = crate::problem::Multipliers::zeros(1);
        let cases: Vec<(&str, Value)> = vec![
            ("grid", v(&grid)),
            ("descent", v(&descent)),
            ("lambda_range", v(&range)),
            (
                "instance",
                v(&InstanceSpec {
                    labels: Some(vec!["a".into()]),
                    ..InstanceSpec::new(crate::instances::InstanceName::FiniteTable)
                }),
            ),
            ("strategy_explicit_list", v(&S::ExplicitList { lambdas: vec![lambda.clone()] })),
            ("strategy_log_grid", v(&S::LogGrid { lo: 1.0, hi: 2.0, count: 2 })),
            ("strategy_binary_search", v(&S::BinarySearch { lo: 1.0, hi: 2.0, tol: 0.1 })),
            ("strategy_dual_ascent", v(&S::DualAscent { lambda0: lambda, eta: 1.0, iters: 1 })),
            ("params_solve_pr", v(&SolvePrParams { lambda: vec![0.0], solver: default_solver() })),
            (
                "params_solve_pc",
                v(&SolvePcParams {
                    theta: vec![0.0],
                    grid: grid.clone(),
                    require_feasible: true,
                }),
            ),
            (
                "params_pr4pc",
                v(&Pr4pcParams {
                    theta: vec![0.0],
                    strategy: S::LogGrid { lo: 1.0, hi: 2.0, count: 2 },
                    solver: default_solver(),
                    require_found: true,
                    conformance: Some(grid.clone()),
                }),
            ),
            (
                "params_theorem1",
                v(&Theorem1Params {
                    lambdas: vec![],
                    random_count: 1,
                    random_range: default_random_range(),
                    grid: grid.clone(),
                }),
            ),
            (
                "params_attainability",
                v(&AttainabilityParams {
                    w_star: Some(vec![0.0]),
                    w_star_from_lambda: None,
                    j: 0,
                    lambda_other: vec![],
                    lambda_grid: range,
                    grid: grid.clone(),
                    write_halfspaces: false,
                }),
            ),
            (
                "params_monotonicity",
                v(&MonotonicityParams {
                    lambdas: vec![],
                    j: 0,
                    solver: default_solver(),
                }),
            ),
            (
                "params_sensitivity",
                v(&SensitivityParams {
                    thetas: vec![],
                    lambda_range: range,
                    grid,
                }),
            ),
            ("params_demo", v(&DemoParams { name: DemoName::Fig1a })),
        ];
        for (def, value) in cases {
            assert_eq!(schema_keys(&schema, def), keys(&value), "schema definition `{def}`");
        }
        let config = ExperimentConfig {
            instance: Some(InstanceSpec::new(crate::instances::InstanceName::Plateau)),
            command: Command::Pr4pc,
            params: empty_object(),
            output_dir: "o".into(),
            seed: 0,
        };
        assert_eq!(keys(&schema["properties"]), keys(&serde_json::to_value(&config).unwrap()));
        let commands: Vec<Value> = Command::ALL.iter().map(|c| Value::from(c.as_str())).collect();
        assert_eq!(schema["properties"]["command"]["enum"].as_array().unwrap(), &commands);
        let demos: Vec<Value> = DemoName::ALL.iter().map(|d| Value::from(d.as_str())).collect();
        assert_eq!(schema["$defs"]["params_demo"]["properties"]["name"]["enum"].as_array().unwrap(), &demos);
        let instances: Vec<Value> =
            crate::instances::InstanceName::ALL.iter().map(|n| Value::from(n.as_str())).collect();
        assert_eq!(schema["$defs"]["instance"]["properties"]["name"]["enum"].as_array().unwrap(), &instances);
    }
}
