//! Exogenous parameter set: defaults, admissible ranges, validation and the
//! JSON configuration document.
//!
//! Configuration documents may omit any field; omitted fields take the
//! default preset value. In strict mode unknown keys and out-of-range values
//! are reported; permissive mode reports only structural invariants (signs,
//! orderings, belief normalisation) that the solver cannot run without.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::automation::AutomationFunction;
use crate::error::GateError;

/// How human labour responds to automation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LaborMode {
    /// Labour moves freely onto the non-automated tasks.
    #[default]
    PerfectReallocation,
    /// Each task keeps its initial workforce.
    NoReallocation,
}

/// One automation function in the planner's prior: plateau `zeta` with probability `prob`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefCandidate {
    pub zeta: f64,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParameterSet {
    // General economics
    pub y0: f64,
    pub l0: f64,
    pub g_l: f64,
    pub k0: f64,
    pub alpha: f64,
    pub mu: f64,
    pub f0: f64,
    pub a_k: f64,
    pub delta_k: f64,
    pub rho: f64,
    pub beta: f64,
    pub eta: f64,
    // Hardware R&D
    pub h0: f64,
    pub h_max: f64,
    pub i_h0: f64,
    pub lambda_h: f64,
    pub phi_h: f64,
    pub theta_h: f64,
    // Software R&D
    pub s0: f64,
    pub s_max: f64,
    pub i_s0: f64,
    pub lambda_s: f64,
    pub phi_s: f64,
    pub theta_s: f64,
    // Compute investment and stock
    pub i_q0: f64,
    pub chi: f64,
    pub a_q: f64,
    pub delta_q: f64,
    pub c_t0: f64,
    pub c_l: f64,
    // Runtime compute
    pub c_i0: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub m: f64,
    pub iota_max: f64,
    // Automation
    pub t_agi: f64,
    pub f_init: f64,
    pub flop_gap_fraction: f64,
    // Add-ons
    pub xi: f64,
    pub belief_spec: Vec<BeliefCandidate>,
    pub labor_mode: LaborMode,
    // Horizons and discretisation
    pub tau_plan: usize,
    pub tau_optim: usize,
    pub task_grid_workers: usize,
    pub task_grid_labor: usize,
    /// Time step in years.
    pub dt: f64,
}

impl Default for ParameterSet {
    fn default() -> Self {
        default_preset()
    }
}

/// Default column of the parameter tables.
pub fn default_preset() -> ParameterSet {
    ParameterSet {
        y0: 110e12,
        l0: 3.6e9,
        g_l: 0.0025,
        k0: 450e12,
        alpha: 0.35,
        mu: 0.0,
        f0: 1e12,
        a_k: 1.0,
        delta_k: 0.065,
        rho: -0.65,
        beta: 0.05,
        eta: 1.45,
        h0: 1e18,
        h_max: 1e23,
        i_h0: 1e11,
        lambda_h: 0.14,
        phi_h: 0.0769,
        theta_h: 0.192,
        s0: 1.0,
        s_max: 1e4,
        i_s0: 5e9,
        lambda_s: 0.14,
        phi_s: 0.32,
        theta_s: 0.0307,
        i_q0: 2e11,
        chi: 4.0,
        a_q: 2.0,
        delta_q: 0.3,
        c_t0: 5e25,
        c_l: 2e38,
        c_i0: 1e28,
        gamma0: 15.0,
        gamma1: 9.0,
        m: 2.0,
        iota_max: 1e5,
        t_agi: 10f64.powf(36.5),
        f_init: 0.1,
        flop_gap_fraction: 0.55,
        xi: 8.0,
        belief_spec: vec![BeliefCandidate {
            zeta: 1.0,
            prob: 1.0,
        }],
        labor_mode: LaborMode::PerfectReallocation,
        tau_plan: 80,
        tau_optim: 160,
        task_grid_workers: 20,
        task_grid_labor: 100,
        dt: 1.0,
    }
}

/// Smaller horizon used for interactive runs and the test-suite.
pub fn desk_preset() -> ParameterSet {
    ParameterSet {
        tau_plan: 20,
        tau_optim: 40,
        ..default_preset()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    Strict,
    Permissive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Violation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
}

/// Descriptor for one scalar parameter, served to front-ends as the schema.
#[derive(Clone, Debug, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub units: &'static str,
    pub min: f64,
    pub max: f64,
    pub scale: Scale,
    pub group: &'static str,
    pub description: &'static str,
}

macro_rules! spec {
    ($name:literal, $units:literal, $min:expr, $max:expr, $group:literal, $desc:literal) => {
        ParamSpec {
            name: $name,
            units: $units,
            min: $min,
            max: $max,
            scale: if $min > 0.0 && $max / $min >= 100.0 {
                Scale::Log
            } else {
                Scale::Linear
            },
            group: $group,
            description: $desc,
        }
    };
}

/// Admissible ranges for every scalar field.
pub fn parameter_specs() -> Vec<ParamSpec> {
    vec![
        spec!(
            "y0",
            "USD/year",
            105e12,
            115e12,
            "economy",
            "Gross world product at the start of the simulation."
        ),
        spec!(
            "l0",
            "workers",
            3.4e9,
            3.8e9,
            "economy",
            "Human labour force at the start of the simulation."
        ),
        spec!(
            "g_l",
            "1/year",
            -0.01,
            0.02,
            "economy",
            "Annual population growth rate."
        ),
        spec!(
            "k0",
            "USD",
            200e12,
            1e15,
            "economy",
            "Initial stock of non-compute physical capital."
        ),
        spec!(
            "alpha",
            "",
            0.2,
            0.6,
            "economy",
            "Output elasticity of capital."
        ),
        spec!(
            "mu",
            "",
            0.0,
            0.3,
            "economy",
            "Output elasticity of the non-accumulable factor."
        ),
        spec!(
            "f0",
            "USD",
            1e12,
            1e12,
            "economy",
            "Non-accumulable factor stock; TFP is recalibrated so its level is immaterial."
        ),
        spec!(
            "a_k",
            "years",
            0.5,
            2.0,
            "economy",
            "Capital adjustment timescale."
        ),
        spec!(
            "delta_k",
            "1/year",
            0.003,
            0.2,
            "economy",
            "Capital depreciation rate."
        ),
        spec!(
            "rho",
            "",
            -5.0,
            -0.2,
            "economy",
            "Task substitution parameter; negative values make tasks gross complements."
        ),
        spec!(
            "beta",
            "1/year",
            0.03,
            0.07,
            "economy",
            "Consumption discount rate."
        ),
        spec!(
            "eta",
            "",
            1.0,
            6.0,
            "economy",
            "Relative risk aversion of the isoelastic utility."
        ),
        spec!(
            "h0",
            "FLOP/year/USD",
            1e17,
            1e19,
            "hardware",
            "Initial hardware efficiency."
        ),
        spec!(
            "h_max",
            "FLOP/year/USD",
            1e21,
            1e25,
            "hardware",
            "Ceiling on hardware efficiency."
        ),
        spec!(
            "i_h0",
            "USD/year",
            1e10,
            1e12,
            "hardware",
            "Initial hardware R&D spending."
        ),
        spec!(
            "lambda_h",
            "",
            0.0625,
            1.0,
            "hardware",
            "Returns to scale in hardware R&D investment."
        ),
        spec!(
            "phi_h",
            "",
            0.01,
            1.0,
            "hardware",
            "Fishing-out exponent for hardware efficiency."
        ),
        spec!(
            "theta_h",
            "",
            0.001,
            1000.0,
            "hardware",
            "Hardware R&D productivity."
        ),
        spec!(
            "s0",
            "eFLOP/FLOP",
            1.0,
            1.0,
            "software",
            "Initial software efficiency (normalised to one)."
        ),
        spec!(
            "s_max",
            "eFLOP/FLOP",
            50.0,
            1e8,
            "software",
            "Ceiling on software efficiency."
        ),
        spec!(
            "i_s0",
            "USD/year",
            1e9,
            2.5e10,
            "software",
            "Initial software R&D spending."
        ),
        spec!(
            "lambda_s",
            "",
            0.0625,
            1.0,
            "software",
            "Returns to scale in software R&D investment."
        ),
        spec!(
            "phi_s",
            "",
            0.1,
            1.0,
            "software",
            "Fishing-out exponent for software efficiency."
        ),
        spec!(
            "theta_s",
            "",
            0.001,
            1000.0,
            "software",
            "Software R&D productivity."
        ),
        spec!(
            "i_q0",
            "USD/year",
            5e10,
            8e11,
            "compute",
            "Initial spending on compute hardware."
        ),
        spec!(
            "chi",
            "",
            3.0,
            5.0,
            "compute",
            "Compute adjustment cost exponent."
        ),
        spec!(
            "a_q",
            "years",
            1.0,
            4.0,
            "compute",
            "Compute adjustment timescale."
        ),
        spec!(
            "delta_q",
            "1/year",
            0.1,
            0.5,
            "compute",
            "Compute hardware depreciation rate."
        ),
        spec!(
            "c_t0",
            "eFLOP",
            2e25,
            2e26,
            "compute",
            "Largest training run at the start of the simulation."
        ),
        spec!(
            "c_l",
            "FLOP/year",
            8.6e34,
            5e41,
            "compute",
            "Heat-dissipation bound on usable compute."
        ),
        spec!(
            "c_i0",
            "eFLOP/year",
            1e27,
            1e29,
            "runtime",
            "Initial runtime compute."
        ),
        spec!(
            "gamma0",
            "log10 FLOP/year",
            13.0,
            17.0,
            "runtime",
            "Log10 runtime requirement of the easiest task."
        ),
        spec!(
            "gamma1",
            "OOMs",
            7.0,
            11.0,
            "runtime",
            "Increase in runtime requirement across the task range."
        ),
        spec!(
            "m",
            "",
            1.0,
            4.0,
            "runtime",
            "Slope of the training-inference tradeoff."
        ),
        spec!(
            "iota_max",
            "",
            1e3,
            1e7,
            "runtime",
            "Maximum inference multiplier."
        ),
        spec!(
            "t_agi",
            "eFLOP",
            1e33,
            1e41,
            "automation",
            "Training compute required for full automation."
        ),
        spec!(
            "f_init",
            "",
            0.05,
            0.2,
            "automation",
            "Initial fraction of automatable tasks."
        ),
        spec!(
            "flop_gap_fraction",
            "",
            0.4,
            0.8,
            "automation",
            "FLOP gap as a fraction of the initial distance to full automation."
        ),
        spec!(
            "xi",
            "",
            2.0,
            20.0,
            "addons",
            "R&D wedge between social and perceived returns."
        ),
    ]
}

const INTEGER_FIELDS: &[&str] = &[
    "tau_plan",
    "tau_optim",
    "task_grid_workers",
    "task_grid_labor",
];
const OTHER_FIELDS: &[&str] = &["belief_spec", "labor_mode", "dt"];

fn known_field(name: &str) -> bool {
    parameter_specs().iter().any(|s| s.name == name)
        || INTEGER_FIELDS.contains(&name)
        || OTHER_FIELDS.contains(&name)
}

impl ParameterSet {
    /// Scalar field by name (integers are widened).
    pub fn get(&self, name: &str) -> Option<f64> {
        let v = serde_json::to_value(self).ok()?;
        v.get(name)?.as_f64()
    }

    /// Returns a copy with one numeric field replaced.
    pub fn with_field(&self, name: &str, value: f64) -> Result<ParameterSet, GateError> {
        let mut doc = serde_json::to_value(self)?;
        let obj = doc
            .as_object_mut()
            .expect("parameter set serialises to an object");
        match obj.get(name) {
            Some(Value::Number(_)) => {}
            _ => return Err(GateError::UnknownParameter(name.to_string())),
        }
        let new = if INTEGER_FIELDS.contains(&name) {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(GateError::Domain(format!(
                    "{name} must be a non-negative integer"
                )));
            }
            Value::from(value as u64)
        } else {
            serde_json::Number::from_f64(value)
                .map(Value::Number)
                .ok_or_else(|| GateError::Domain(format!("{name} must be finite")))?
        };
        obj.insert(name.to_string(), new);
        Ok(serde_json::from_value(doc)?)
    }

    /// Log10 capability of the initial frontier model at maximum inference scaling.
    pub fn initial_capability_log10(&self) -> f64 {
        self.c_t0.log10() + self.iota_max.log10() / self.m
    }

    /// FLOP gap in orders of magnitude, derived from the gap fraction.
    pub fn delta_flop(&self) -> f64 {
        self.flop_gap_fraction * (self.t_agi.log10() - self.initial_capability_log10())
    }

    /// The full-automation ("true") automation function.
    pub fn automation_function(&self) -> AutomationFunction {
        AutomationFunction::new(self.f_init, self.t_agi, self.delta_flop(), 1.0)
    }

    pub fn is_log_utility(&self) -> bool {
        (self.eta - 1.0).abs() < 1e-9
    }

    /// Stable SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        crate::io::sha256_hex(
            serde_json::to_string(self)
                .expect("serialisable")
                .as_bytes(),
        )
    }
}

/// Parses a (possibly partial) JSON configuration document.
///
/// Unknown keys are returned as strict-mode violations rather than errors, so
/// a permissive caller can still proceed.
pub fn parse_document(text: &str) -> Result<(ParameterSet, Vec<Violation>), GateError> {
    let value: Value = serde_json::from_str(text)?;
    from_value(value)
}

pub fn from_value(value: Value) -> Result<(ParameterSet, Vec<Violation>), GateError> {
    let obj: Map<String, Value> = match value {
        Value::Object(o) => o,
        Value::Null => Map::new(),
        _ => {
            return Err(GateError::Config(
                "configuration must be a JSON object".into(),
            ))
        }
    };
    let mut unknown = Vec::new();
    let mut known = Map::new();
    for (k, v) in obj {
        if known_field(&k) {
            known.insert(k, v);
        } else {
            unknown.push(Violation::new(&k, "unknown parameter"));
        }
    }
    let params: ParameterSet = serde_json::from_value(Value::Object(known))
        .map_err(|e| GateError::Config(e.to_string()))?;
    Ok((params, unknown))
}

/// Lists every violation. An empty list means the set is usable.
pub fn validate(p: &ParameterSet, mode: ValidationMode) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |ok: bool, field: &str, msg: &str| {
        if !ok {
            out.push(Violation::new(field, msg));
        }
    };

    for spec in parameter_specs() {
        let v = p.get(spec.name).unwrap_or(f64::NAN);
        check(v.is_finite(), spec.name, "must be finite");
    }

    check(p.rho < 0.0, "rho", "rho must be < 0");
    check(
        p.alpha > 0.0 && p.alpha < 1.0,
        "alpha",
        "alpha must lie in (0, 1)",
    );
    check(p.mu >= 0.0, "mu", "mu must be >= 0");
    check(p.alpha + p.mu < 1.0, "mu", "alpha + mu must be < 1");
    check(p.eta > 0.0, "eta", "eta must be > 0");
    check(p.beta > p.g_l, "beta", "beta must exceed g_l");
    for (name, v) in [
        ("y0", p.y0),
        ("l0", p.l0),
        ("k0", p.k0),
        ("f0", p.f0),
        ("a_k", p.a_k),
        ("a_q", p.a_q),
        ("h0", p.h0),
        ("s0", p.s0),
        ("i_h0", p.i_h0),
        ("i_s0", p.i_s0),
        ("i_q0", p.i_q0),
        ("c_t0", p.c_t0),
        ("c_l", p.c_l),
        ("c_i0", p.c_i0),
        ("m", p.m),
        ("theta_h", p.theta_h),
        ("theta_s", p.theta_s),
        ("xi", p.xi),
        ("t_agi", p.t_agi),
        ("dt", p.dt),
    ] {
        check(v > 0.0, name, &format!("{name} must be > 0"));
    }
    check(p.delta_k >= 0.0, "delta_k", "delta_k must be >= 0");
    check(
        (0.0..=1.0).contains(&p.delta_q),
        "delta_q",
        "delta_q must lie in [0, 1]",
    );
    check(p.chi > 1.0, "chi", "chi must be > 1");
    check(p.h_max > p.h0, "h_max", "h_max must exceed h0");
    check(p.s_max > p.s0, "s_max", "s_max must exceed s0");
    check(p.iota_max >= 1.0, "iota_max", "iota_max must be >= 1");
    check(p.lambda_h >= 0.0, "lambda_h", "lambda_h must be >= 0");
    check(p.lambda_s >= 0.0, "lambda_s", "lambda_s must be >= 0");
    check(
        p.f_init > 0.0 && p.f_init < 1.0,
        "f_init",
        "f_init must lie in (0, 1)",
    );
    check(
        p.flop_gap_fraction > 0.0 && p.flop_gap_fraction <= 1.0,
        "flop_gap_fraction",
        "flop_gap_fraction must lie in (0, 1]",
    );
    check(
        p.t_agi.log10() > p.initial_capability_log10(),
        "t_agi",
        "t_agi must exceed the initial capability c_t0 * iota_max^(1/m)",
    );
    check(
        p.c_i0 + p.c_t0 < p.c_l,
        "c_l",
        "initial effective compute must be below the heat cap c_l",
    );
    check(p.tau_plan >= 1, "tau_plan", "tau_plan must be >= 1");
    check(
        p.tau_optim >= p.tau_plan,
        "tau_optim",
        "tau_optim must be >= tau_plan",
    );
    check(
        p.task_grid_workers >= 1,
        "task_grid_workers",
        "task_grid_workers must be >= 1",
    );
    check(
        p.task_grid_labor >= 1,
        "task_grid_labor",
        "task_grid_labor must be >= 1",
    );

    // Belief specification.
    let beliefs = &p.belief_spec;
    check(
        !beliefs.is_empty(),
        "belief_spec",
        "belief_spec must not be empty",
    );
    check(
        beliefs.len() <= 20,
        "belief_spec",
        "at most 20 automation functions",
    );
    let total: f64 = beliefs.iter().map(|b| b.prob).sum();
    check(
        (total - 1.0).abs() < 1e-9,
        "belief_spec",
        "belief probabilities must sum to 1",
    );
    check(
        beliefs.iter().all(|b| (0.0..=1.0).contains(&b.prob)),
        "belief_spec",
        "belief probabilities must lie in [0, 1]",
    );
    check(
        beliefs.iter().all(|b| b.zeta > p.f_init && b.zeta <= 1.0),
        "belief_spec",
        "each zeta must lie in (f_init, 1]",
    );
    check(
        beliefs.iter().filter(|b| b.zeta == 1.0).count() == 1,
        "belief_spec",
        "exactly one automation function must reach full automation (zeta = 1)",
    );
    let mut zetas: Vec<f64> = beliefs.iter().map(|b| b.zeta).collect();
    zetas.sort_by(f64::total_cmp);
    check(
        zetas.windows(2).all(|w| w[0] != w[1]),
        "belief_spec",
        "plateau levels zeta must be distinct",
    );

    if mode == ValidationMode::Strict {
        for spec in parameter_specs() {
            let v = p.get(spec.name).unwrap_or(f64::NAN);
            if !(v >= spec.min && v <= spec.max) {
                out.push(Violation::new(
                    spec.name,
                    format!(
                        "{} = {} is outside the range [{}, {}]",
                        spec.name, v, spec.min, spec.max
                    ),
                ));
            }
        }
    }
    out
}

/// Constant TFP that reproduces `y0` at the initial state.
pub fn calibrate_tfp(p: &ParameterSet) -> Result<f64, GateError> {
    crate::economy::calibrate_tfp(p)
}

/// Parses and validates a document: permissive violations are errors, strict
/// ones (including unknown keys) come back as warnings.
pub fn load_checked(text: &str) -> Result<(ParameterSet, Vec<Violation>), GateError> {
    let (params, unknown) = parse_document(text)?;
    let errors = validate(&params, ValidationMode::Permissive);
    if !errors.is_empty() {
        return Err(GateError::Invalid(errors));
    }
    let mut warnings = unknown;
    warnings.extend(validate(&params, ValidationMode::Strict));
    Ok((params, warnings))
}
