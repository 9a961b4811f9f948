//! Job files: structured key/value text with coefficients as decimal
//! strings so extended precision survives I/O.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use selfsim::numerics::{Prec, Real};
use selfsim::ode::{bell_series, kink_series, OdeSpec, SolitonEquation};
use selfsim::oracles::{beta_sym_series, oscillator_coefficients, z_coefficients};
use selfsim::series::PowerSeries;

#[derive(Error, Debug)]
pub enum JobError {
    #[error("cannot read job file: {0}")]
    Io(#[from] std::io::Error),
    #[error("job file parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid job: {0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JobFile {
    pub method: String,
    #[serde(default = "default_precision")]
    pub precision: u32,
    pub orders: Orders,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default)]
    pub eval_points: Vec<String>,
    /// Evaluation points beyond a flagged domain boundary are rejected at
    /// validation time unless this is set.
    #[serde(default)]
    pub extrapolate: bool,
    pub input: InputSection,
    #[serde(default)]
    pub u: Option<USection>,
}

fn default_precision() -> u32 {
    60
}

fn default_output() -> String {
    "table".into()
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(untagged)]
pub enum Orders {
    Range(String),
    List(Vec<usize>),
}

#[derive(Serialize, Deserialize, Clone, Debug, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// beta_sym color count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_c: Option<u32>,
    /// kink/bell equation parameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<String>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct USection {
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<String>,
}

fn default_strategy() -> String {
    "fixed-grid-fallback".into()
}

/// Fully validated job ready to run.
#[derive(Clone, Debug)]
pub struct ResummationJob {
    pub method: Method,
    pub precision: Prec,
    pub orders: Vec<usize>,
    pub output: OutputFormat,
    pub eval_points: Vec<Real>,
    pub eval_labels: Vec<String>,
    pub extrapolate: bool,
    pub input: JobInput,
    pub u_policy: UPolicy,
    /// Canonical file form (round-trip stable).
    pub canonical: JobFile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Factor,
    Borel,
    Difflog,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Table,
}

#[derive(Clone, Debug)]
pub enum JobInput {
    Inline {
        series: PowerSeries,
    },
    BetaSym {
        n_c: u32,
    },
    ZPartition,
    Oscillator,
    Soliton {
        equation: SolitonEquation,
        epsilon: Real,
        normalization: Option<Real>,
    },
}

#[derive(Clone, Debug)]
pub enum UPolicy {
    Fixed(Real),
    Grid {
        min: f64,
        max: f64,
        step: f64,
        observable: UObservable,
    },
    FixedGridFallback {
        fixed: Real,
        min: f64,
        max: f64,
        step: f64,
        observable: UObservable,
    },
}

#[derive(Clone, Debug)]
pub enum UObservable {
    Exponent,
    ValueAt(Real),
}

pub fn parse_input(path: &std::path::Path) -> Result<ResummationJob, JobError> {
    let text = std::fs::read_to_string(path)?;
    parse_job_text(&text)
}

pub fn parse_job_text(text: &str) -> Result<ResummationJob, JobError> {
    let file: JobFile = toml::from_str(text)?;
    validate(file)
}

pub fn validate(file: JobFile) -> Result<ResummationJob, JobError> {
    let method = match file.method.as_str() {
        "factor" => Method::Factor,
        "borel" => Method::Borel,
        "difflog" => Method::Difflog,
        other => {
            return Err(JobError::Invalid(format!(
                "method must be factor|borel|difflog, got {other:?}"
            )))
        }
    };
    let precision = Prec::new(file.precision);
    let orders = expand_orders(&file.orders)?;
    if orders.is_empty() {
        return Err(JobError::Invalid("orders list is empty".into()));
    }
    if let Some(bad) = orders.iter().find(|k| **k < 2) {
        return Err(JobError::Invalid(format!(
            "orders must all be >= 2, got {bad}"
        )));
    }
    let output = match file.output.as_str() {
        "json" => OutputFormat::Json,
        "csv" => OutputFormat::Csv,
        "table" | "text-table" => OutputFormat::Table,
        other => {
            return Err(JobError::Invalid(format!(
                "output must be json|csv|table, got {other:?}"
            )))
        }
    };
    let mut eval_points = Vec::new();
    for s in &file.eval_points {
        let v = Real::parse(s, precision)
            .ok_or_else(|| JobError::Invalid(format!("eval point {s:?} does not parse")))?;
        eval_points.push(v);
    }
    let max_order = *orders.iter().max().unwrap();
    let input = validate_input(&file.input, max_order, precision)?;
    if let JobInput::Inline { series } = &input {
        if series.order() < max_order {
            return Err(JobError::Invalid(format!(
                "insufficient coefficients: order {} requested but only {} coefficients given",
                max_order,
                series.order() + 1
            )));
        }
    }
    let u_policy = validate_u(file.u.as_ref(), method, precision)?;
    Ok(ResummationJob {
        method,
        precision,
        orders,
        output,
        eval_points,
        eval_labels: file.eval_points.clone(),
        extrapolate: file.extrapolate,
        input,
        u_policy,
        canonical: file,
    })
}

fn expand_orders(orders: &Orders) -> Result<Vec<usize>, JobError> {
    match orders {
        Orders::List(v) => {
            let mut out = v.clone();
            out.sort_unstable();
            out.dedup();
            Ok(out)
        }
        Orders::Range(s) => parse_order_range(s),
    }
}

pub fn parse_order_range(s: &str) -> Result<Vec<usize>, JobError> {
    let b: Vec<&str> = s.split("..").collect();
    if b.len() == 2 {
        let lo: usize = b[0]
            .trim()
            .parse()
            .map_err(|_| JobError::Invalid(format!("bad order range {s:?}")))?;
        let hi: usize = b[1]
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| JobError::Invalid(format!("bad order range {s:?}")))?;
        if hi < lo {
            return Err(JobError::Invalid(format!("empty order range {s:?}")));
        }
        return Ok((lo..=hi).collect());
    }
    // comma list in string form
    let mut out = Vec::new();
    for part in s.split(',') {
        let k: usize = part
            .trim()
            .parse()
            .map_err(|_| JobError::Invalid(format!("bad order {part:?}")))?;
        out.push(k);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn validate_input(
    input: &InputSection,
    max_order: usize,
    p: Prec,
) -> Result<JobInput, JobError> {
    match (&input.fixture, &input.coefficients) {
        (Some(_), Some(_)) => Err(JobError::Invalid(
            "give either a fixture or inline coefficients, not both".into(),
        )),
        (None, None) => Err(JobError::Invalid(
            "input needs a fixture name or inline coefficients".into(),
        )),
        (None, Some(coeffs)) => {
            let mut vals = Vec::with_capacity(coeffs.len());
            for (i, s) in coeffs.iter().enumerate() {
                let v = Real::parse(s, p).ok_or_else(|| {
                    JobError::Invalid(format!("coefficient {i} ({s:?}) does not parse"))
                })?;
                vals.push(v);
            }
            let gap = input.gap.unwrap_or(1);
            let series = PowerSeries::with_gap(vals, gap, p)
                .map_err(|e| JobError::Invalid(e.to_string()))?
                .with_label(input.label.as_deref().unwrap_or("x"));
            Ok(JobInput::Inline { series })
        }
        (Some(name), None) => match name.as_str() {
            "beta_sym" => Ok(JobInput::BetaSym {
                n_c: input.n_c.unwrap_or(3),
            }),
            "z_partition" => Ok(JobInput::ZPartition),
            "oscillator" => {
                if max_order > 40 {
                    return Err(JobError::Invalid(
                        "oscillator fixture is guarded at order 40".into(),
                    ));
                }
                Ok(JobInput::Oscillator)
            }
            "kink" | "bell" => {
                let epsilon = match &input.epsilon {
                    Some(s) => Real::parse(s, p).ok_or_else(|| {
                        JobError::Invalid(format!("epsilon {s:?} does not parse"))
                    })?,
                    None => Real::one(p),
                };
                let normalization = match &input.normalization {
                    Some(s) => Some(Real::parse(s, p).ok_or_else(|| {
                        JobError::Invalid(format!("normalization {s:?} does not parse"))
                    })?),
                    None => None,
                };
                Ok(JobInput::Soliton {
                    equation: if name == "kink" {
                        SolitonEquation::Kink
                    } else {
                        SolitonEquation::Bell
                    },
                    epsilon,
                    normalization,
                })
            }
            other => Err(JobError::Invalid(format!(
                "unknown fixture {other:?} (expected beta_sym|z_partition|oscillator|kink|bell)"
            ))),
        },
    }
}

fn validate_u(
    u: Option<&USection>,
    method: Method,
    p: Prec,
) -> Result<UPolicy, JobError> {
    let section = match u {
        Some(s) => s.clone(),
        None => USection {
            strategy: default_strategy(),
            value: None,
            min: None,
            max: None,
            step: None,
            observable: None,
            probe: None,
        },
    };
    if method != Method::Borel {
        // ignored for non-borel methods; keep the default for canonical form
        return Ok(UPolicy::Fixed(Real::zero(p)));
    }
    let fixed_value = match &section.value {
        Some(s) => Real::parse(s, p)
            .ok_or_else(|| JobError::Invalid(format!("u value {s:?} does not parse")))?,
        None => Real::zero(p),
    };
    if !(fixed_value > Real::from_i64(-1, p)) {
        return Err(JobError::Invalid(format!(
            "u must exceed -1, got {fixed_value}"
        )));
    }
    let min = section.min.unwrap_or(-0.9);
    let max = section.max.unwrap_or(10.0);
    let step = section.step.unwrap_or(0.01);
    if step <= 0.0 && max > min {
        return Err(JobError::Invalid("u grid step must be positive".into()));
    }
    if min <= -1.0 {
        return Err(JobError::Invalid("u grid must stay above -1".into()));
    }
    let observable = match section.observable.as_deref() {
        None | Some("exponent") => UObservable::Exponent,
        Some("value-at") | Some("value_at") => {
            let probe = section
                .probe
                .as_ref()
                .and_then(|s| Real::parse(s, p))
                .ok_or_else(|| {
                    JobError::Invalid("value-at observable needs a parseable probe".into())
                })?;
            UObservable::ValueAt(probe)
        }
        Some(other) => {
            return Err(JobError::Invalid(format!(
                "observable must be exponent|value-at, got {other:?}"
            )))
        }
    };
    match section.strategy.as_str() {
        "fixed" => Ok(UPolicy::Fixed(fixed_value)),
        "grid" | "grid-optimized" => Ok(UPolicy::Grid {
            min,
            max,
            step,
            observable,
        }),
        "fixed-grid-fallback" => Ok(UPolicy::FixedGridFallback {
            fixed: fixed_value,
            min,
            max,
            step,
            observable,
        }),
        other => Err(JobError::Invalid(format!(
            "u strategy must be fixed|grid|fixed-grid-fallback, got {other:?}"
        ))),
    }
}

/// Materialize the input series at the requested order.
pub fn realize_series(job: &ResummationJob, max_order: usize) -> Result<PowerSeries, String> {
    let p = job.precision;
    match &job.input {
        JobInput::Inline { series } => Ok(series.truncated(max_order.min(series.order()))),
        JobInput::BetaSym { n_c } => beta_sym_series(*n_c, max_order, p)
            .map(|b| b.reduced)
            .map_err(|e| e.to_string()),
        JobInput::ZPartition => Ok(z_coefficients(max_order, p)),
        JobInput::Oscillator => oscillator_coefficients(max_order, p).map_err(|e| e.to_string()),
        JobInput::Soliton {
            equation,
            epsilon,
            normalization,
        } => {
            let mut spec = match equation {
                SolitonEquation::Kink => OdeSpec::kink(epsilon.clone(), max_order.max(3), p),
                SolitonEquation::Bell => OdeSpec::bell(epsilon.clone(), max_order.max(3), p),
            };
            if let Some(n) = normalization {
                spec.normalization = n.clone();
            }
            match equation {
                SolitonEquation::Kink => kink_series(&spec, p).map_err(|e| e.to_string()),
                SolitonEquation::Bell => bell_series(&spec, p).map_err(|e| e.to_string()),
            }
        }
    }
}

/// Canonical text form: parse(emit(parse(x))) == parse(x).
#[allow(dead_code)] // used by integration tests via the library path
pub fn emit_job_toml(job: &ResummationJob) -> String {
    toml::to_string(&job.canonical).expect("job serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_job_gets_defaults() {
        let job = parse_job_text(
            r#"
method = "factor"
orders = [2, 3]
[input]
coefficients = ["1", "1", "1", "1"]
"#,
        )
        .unwrap();
        assert_eq!(job.precision.digits(), 60);
        assert_eq!(job.orders, vec![2, 3]);
        assert_eq!(job.output, OutputFormat::Table);
    }

    #[test]
    fn order_ranges() {
        assert_eq!(parse_order_range("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_order_range("7").unwrap(), vec![7]);
        assert_eq!(parse_order_range("3,5,2").unwrap(), vec![2, 3, 5]);
    }

    #[test]
    fn decimal_strings_preserved() {
        let job = parse_job_text(
            r#"
method = "factor"
orders = [2]
[input]
coefficients = ["1", "0.7500000000000000000001", "1"]
"#,
        )
        .unwrap();
        let JobInput::Inline { series } = &job.input else {
            panic!()
        };
        let p = job.precision;
        let plain = Real::parse("0.75", p).unwrap();
        let diff = &series.coeff(1) - &plain;
        assert!(diff.is_positive());
        let expect = Real::pow10(-22, p);
        assert!((&diff - &expect).abs() < Real::pow10(-60, p));
    }

    #[test]
    fn insufficient_coefficients_rejected() {
        let err = parse_job_text(
            r#"
method = "factor"
orders = [2]
[input]
coefficients = ["1"]
"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("insufficient"), "{err}");
    }

    #[test]
    fn round_trip_stability() {
        let text = r#"
method = "borel"
precision = 45
orders = "2..6"
output = "json"
eval_points = ["0.5"]
[input]
fixture = "oscillator"
[u]
strategy = "grid"
min = 0.0
max = 2.0
step = 0.5
"#;
        let once = parse_job_text(text).unwrap();
        let emitted = emit_job_toml(&once);
        let twice = parse_job_text(&emitted).unwrap();
        assert_eq!(once.canonical, twice.canonical);
    }

    #[test]
    fn unknown_fields_rejected() {
        let err = parse_job_text(
            r#"
method = "factor"
orders = [2]
frobnicate = 1
[input]
coefficients = ["1", "1", "1"]
"#,
        );
        assert!(err.is_err());
    }
}
