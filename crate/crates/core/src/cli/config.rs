//! Line-based run configuration.
//!
//! ```text
//! [model]
//! name = spin-rotating-field
//! theta = 0.7853981633974483
//!
//! [run]
//! T = 16,32,64
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::adiabatic::{ConditionMode, System};
use crate::error::{LabError, Result};
use crate::evolve::{Picture, DUAL_PHASE_STEP, MAX_PHASE_STEP};
use crate::models::{lookup, ParamValue};

pub const DEFAULT_TIMES: [f64; 7] = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0];
pub const DEFAULT_K: usize = 2048;
pub const DEFAULT_SAMPLES: usize = 513;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSection {
    pub times: Vec<f64>,
    pub steps: Option<usize>,
    pub level: usize,
    pub picture: Picture,
    pub system: System,
    pub k_steps: usize,
    pub sample_count: usize,
    pub mode: ConditionMode,
    pub target: Option<usize>,
    pub phase_step: f64,
    pub dual_phase_step: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            times: DEFAULT_TIMES.to_vec(),
            steps: None,
            level: 0,
            picture: Picture::A,
            system: System::A,
            k_steps: DEFAULT_K,
            sample_count: DEFAULT_SAMPLES,
            mode: ConditionMode::SelfConsistent,
            target: None,
            phase_step: MAX_PHASE_STEP,
            dual_phase_step: DUAL_PHASE_STEP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model_name: String,
    /// Line of the `name` key, for errors raised after parsing.
    pub model_line: usize,
    pub model_params: BTreeMap<String, ParamValue>,
    pub run: RunSection,
    pub output: OutputSection,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Model,
    Run,
    Output,
}

fn parse_number(line: usize, key: &str, value: &str) -> Result<f64> {
    let x: f64 = value
        .parse()
        .map_err(|_| LabError::config(line, format!("`{key}` expects a number, got `{value}`")))?;
    if !x.is_finite() {
        return Err(LabError::config(line, format!("`{key}` must be finite")));
    }
    Ok(x)
}

fn parse_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|part| parse_number(line, key, part.trim()))
        .collect()
}

fn parse_count(line: usize, key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| {
        LabError::config(
            line,
            format!("`{key}` expects a non-negative integer, got `{value}`"),
        )
    })
}

/// Parses the config text. Every key is validated here so errors carry the
/// offending line.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut section: Option<Section> = None;
    let mut model_header = None;
    let mut model_name: Option<(String, usize)> = None;
    let mut raw_params: Vec<(String, String, usize)> = Vec::new();
    let mut run = RunSection::default();
    let mut output = OutputSection::default();
    let mut seen: BTreeMap<(u8, String), usize> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            section = Some(match name.trim() {
                "model" => {
                    model_header.get_or_insert(line);
                    Section::Model
                }
                "run" => Section::Run,
                "output" => Section::Output,
                other => {
                    return Err(LabError::config(
                        line,
                        format!("unknown section `[{other}]`"),
                    ))
                }
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| {
                LabError::config(line, format!("expected `key = value`, got `{content}`"))
            })?;
        if key.is_empty() || value.is_empty() {
            return Err(LabError::config(line, "empty key or value"));
        }
        let current =
            section.ok_or_else(|| LabError::config(line, "key outside of any section"))?;
        if let Some(first) = seen.insert((current as u8, key.to_string()), line) {
            return Err(LabError::config(
                line,
                format!("duplicate key `{key}` (first set on line {first})"),
            ));
        }
        match current {
            Section::Model => {
                if key == "name" {
                    model_name = Some((value.to_string(), line));
                } else {
                    raw_params.push((key.to_string(), value.to_string(), line));
                }
            }
            Section::Run => match key {
                "T" => {
                    let times = parse_list(line, key, value)?;
                    if times.iter().any(|&t| t <= 0.0) {
                        return Err(LabError::config(line, "every T must be positive"));
                    }
                    if times.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(LabError::config(
                            line,
                            "T values must be strictly increasing",
                        ));
                    }
                    run.times = times;
                }
                "steps" => run.steps = Some(parse_count(line, key, value)?),
                "level" => run.level = parse_count(line, key, value)?,
                "target" => run.target = Some(parse_count(line, key, value)?),
                "K" => {
                    run.k_steps = parse_count(line, key, value)?;
                    if run.k_steps < 16 {
                        return Err(LabError::config(line, "K must be at least 16"));
                    }
                }
                "sample_count" => {
                    run.sample_count = parse_count(line, key, value)?;
                    if run.sample_count < 3 {
                        return Err(LabError::config(line, "sample_count must be at least 3"));
                    }
                }
                "picture" => {
                    run.picture = match value {
                        "a" => Picture::A,
                        "b" => Picture::B,
                        _ => {
                            return Err(LabError::config(
                                line,
                                format!("picture must be `a` or `b`, got `{value}`"),
                            ))
                        }
                    }
                }
                "system" => {
                    run.system = match value {
                        "a" => System::A,
                        "b" => System::B,
                        _ => {
                            return Err(LabError::config(
                                line,
                                format!("system must be `a` or `b`, got `{value}`"),
                            ))
                        }
                    }
                }
                "mode" => {
                    run.mode = match value {
                        "self-consistent" => ConditionMode::SelfConsistent,
                        "frozen" => ConditionMode::Frozen,
                        _ => {
                            return Err(LabError::config(
                                line,
                                format!(
                                    "mode must be `self-consistent` or `frozen`, got `{value}`"
                                ),
                            ))
                        }
                    }
                }
                "phase_step" | "dual_phase_step" => {
                    let x = parse_number(line, key, value)?;
                    if !(x > 0.0 && x <= MAX_PHASE_STEP) {
                        return Err(LabError::config(
                            line,
                            format!("`{key}` must lie in (0, {MAX_PHASE_STEP}]"),
                        ));
                    }
                    if key == "phase_step" {
                        run.phase_step = x;
                    } else {
                        run.dual_phase_step = x;
                    }
                }
                _ => {
                    return Err(LabError::config(
                        line,
                        format!("unknown key `{key}` in [run]"),
                    ))
                }
            },
            Section::Output => match key {
                "path" => output.path = Some(PathBuf::from(value)),
                "format" => {
                    output.format = Format::parse(value).ok_or_else(|| {
                        LabError::config(
                            line,
                            format!("format must be `csv` or `json`, got `{value}`"),
                        )
                    })?
                }
                _ => {
                    return Err(LabError::config(
                        line,
                        format!("unknown key `{key}` in [output]"),
                    ))
                }
            },
        }
    }

    let Some((model_name, model_line)) = model_name else {
        let catalog = crate::models::model_catalog();
        if let Some((key, _, line)) = raw_params
            .iter()
            .find(|(key, _, _)| catalog.iter().all(|entry| entry.param(key).is_none()))
        {
            return Err(LabError::config(
                *line,
                format!("unknown key `{key}` in [model]"),
            ));
        }
        return Err(LabError::config(
            model_header.unwrap_or(1),
            "missing required key `name` in [model]",
        ));
    };
    let entry = lookup(&model_name).map_err(|e| LabError::config(model_line, e.to_string()))?;
    let mut model_params = BTreeMap::new();
    for (key, value, line) in raw_params {
        let spec = entry.param(&key).ok_or_else(|| {
            LabError::config(
                line,
                format!("unknown key `{key}` for model `{model_name}`"),
            )
        })?;
        let parsed = match spec.default {
            crate::models::ParamDefault::List(_) => {
                ParamValue::List(parse_list(line, &key, &value)?)
            }
            crate::models::ParamDefault::Number(_) => {
                ParamValue::Number(parse_number(line, &key, &value)?)
            }
        };
        model_params.insert(key, parsed);
    }
    Ok(RunConfig {
        model_name,
        model_line,
        model_params,
        run,
        output,
    })
}
