use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::aodv::BehaviorKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read configuration: {0}")]
    Io(#[from] std::io::Error),
}

/// Selfish strategy assigned to misbehaving nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    DropReq,
    DropRep,
}

impl Strategy {
    pub fn behavior(self) -> BehaviorKind {
        match self {
            Strategy::DropReq => BehaviorKind::DropReq,
            Strategy::DropRep => BehaviorKind::DropRep,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::DropReq => "dropreq",
            Strategy::DropRep => "droprep",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "").as_str() {
            "dropreq" => Ok(Strategy::DropReq),
            "droprep" => Ok(Strategy::DropRep),
            other => Err(format!(
                "unknown strategy `{other}` (expected dropreq or droprep)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_nodes: usize,
    pub area: (f64, f64),
    pub range: f64,
    pub duration_s: f64,
    pub selfish_fraction: f64,
    pub strategy: Strategy,
    pub drop_probability: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Observation window: spacing of detection ticks.
    pub w_s: f64,
    /// Detection window: span of data used at each tick.
    pub d_s: f64,
    pub rreq_timeout_s: f64,
    pub rrep_timeout_s: f64,
    pub session_rate_per_s: f64,
    pub session_duration_mean_s: f64,
    pub loss_probability: f64,
    pub seed: u64,
    pub k_max: usize,
    pub coop_threshold: f64,
    pub e_min: u32,
    pub e_strong: u32,
    pub vote_quorum: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_nodes: 50,
            area: (900.0, 900.0),
            range: 250.0,
            duration_s: 1600.0,
            selfish_fraction: 0.5,
            strategy: Strategy::DropReq,
            drop_probability: 1.0,
            alpha: 0.1,
            beta: 0.4,
            w_s: 100.0,
            d_s: 400.0,
            rreq_timeout_s: 0.5,
            rrep_timeout_s: 3.0,
            session_rate_per_s: 0.2,
            session_duration_mean_s: 20.0,
            loss_probability: 0.0,
            seed: 1,
            k_max: 5,
            coop_threshold: 0.5,
            e_min: 1,
            e_strong: 3,
            vote_quorum: 0.5,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| ConfigError::BadValue {
            key: key.to_string(),
            msg: e.to_string(),
        })
}

fn parse_area(key: &str, value: &str) -> Result<(f64, f64), ConfigError> {
    let parts: Vec<&str> = value.split([',', 'x', '*']).map(str::trim).collect();
    match parts.as_slice() {
        [w, h] => Ok((parse(key, w)?, parse(key, h)?)),
        _ => Err(ConfigError::BadValue {
            key: key.to_string(),
            msg: format!("expected `width,height`, got `{value}`"),
        }),
    }
}

impl ScenarioConfig {
    pub const KEYS: [&'static str; 22] = [
        "n_nodes",
        "area",
        "range",
        "duration_s",
        "selfish_fraction",
        "strategy",
        "drop_probability",
        "alpha",
        "beta",
        "W_s",
        "D_s",
        "rreq_timeout_s",
        "rrep_timeout_s",
        "session_rate_per_s",
        "session_duration_mean_s",
        "loss_probability",
        "seed",
        "k_max",
        "coop_threshold",
        "e_min",
        "e_strong",
        "vote_quorum",
    ];

    /// Sets one field from its textual `key = value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "n_nodes" => self.n_nodes = parse(key, value)?,
            "area" => self.area = parse_area(key, value)?,
            "range" => self.range = parse(key, value)?,
            "duration_s" => self.duration_s = parse(key, value)?,
            "selfish_fraction" => self.selfish_fraction = parse(key, value)?,
            "strategy" => self.strategy = parse(key, value)?,
            "drop_probability" => self.drop_probability = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "W_s" => self.w_s = parse(key, value)?,
            "D_s" => self.d_s = parse(key, value)?,
            "rreq_timeout_s" => self.rreq_timeout_s = parse(key, value)?,
            "rrep_timeout_s" => self.rrep_timeout_s = parse(key, value)?,
            "session_rate_per_s" => self.session_rate_per_s = parse(key, value)?,
            "session_duration_mean_s" => self.session_duration_mean_s = parse(key, value)?,
            "loss_probability" => self.loss_probability = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "k_max" => self.k_max = parse(key, value)?,
            "coop_threshold" => self.coop_threshold = parse(key, value)?,
            "e_min" => self.e_min = parse(key, value)?,
            "e_strong" => self.e_strong = parse(key, value)?,
            "vote_quorum" => self.vote_quorum = parse(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Parses flat `key = value` lines on top of the defaults. Blank lines
    /// and `#` comments are skipped.
    pub fn parse_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<ScenarioConfig, ConfigError> {
        ScenarioConfig::parse_str(&std::fs::read_to_string(path)?)
    }

    /// Serializes to the same `key = value` format [`parse_str`] reads.
    ///
    /// [`parse_str`]: ScenarioConfig::parse_str
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line("n_nodes", self.n_nodes.to_string());
        line("area", format!("{},{}", self.area.0, self.area.1));
        line("range", self.range.to_string());
        line("duration_s", self.duration_s.to_string());
        line("selfish_fraction", self.selfish_fraction.to_string());
        line("strategy", self.strategy.to_string());
        line("drop_probability", self.drop_probability.to_string());
        line("alpha", self.alpha.to_string());
        line("beta", self.beta.to_string());
        line("W_s", self.w_s.to_string());
        line("D_s", self.d_s.to_string());
        line("rreq_timeout_s", self.rreq_timeout_s.to_string());
        line("rrep_timeout_s", self.rrep_timeout_s.to_string());
        line("session_rate_per_s", self.session_rate_per_s.to_string());
        line(
            "session_duration_mean_s",
            self.session_duration_mean_s.to_string(),
        );
        line("loss_probability", self.loss_probability.to_string());
        line("seed", self.seed.to_string());
        line("k_max", self.k_max.to_string());
        line("coop_threshold", self.coop_threshold.to_string());
        line("e_min", self.e_min.to_string());
        line("e_strong", self.e_strong.to_string());
        line("vote_quorum", self.vote_quorum.to_string());
        out
    }

    // negated comparisons so that NaN fields are rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.n_nodes < 2 {
            return fail(format!("n_nodes must be at least 2, got {}", self.n_nodes));
        }
        if !(self.area.0 > 0.0 && self.area.1 > 0.0) || !(self.range > 0.0) {
            return fail("area and range must be positive".into());
        }
        if !unit(self.selfish_fraction) {
            return fail(format!(
                "selfish_fraction must lie in [0, 1], got {}",
                self.selfish_fraction
            ));
        }
        if !unit(self.drop_probability) || !unit(self.loss_probability) {
            return fail("drop_probability and loss_probability must lie in [0, 1]".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) || !(self.beta > 0.0 && self.beta <= 1.0) {
            return fail("alpha must lie in (0, 1) and beta in (0, 1]".into());
        }
        if !(self.w_s > 0.0) || !(self.d_s > 0.0) {
            return fail("W_s and D_s must be positive".into());
        }
        let d = self.d_s / self.w_s;
        if (d - d.round()).abs() > 1e-9 || d.round() < 1.0 {
            return fail(format!(
                "D_s ({}) must be a positive integer multiple of W_s ({})",
                self.d_s, self.w_s
            ));
        }
        if !(self.rreq_timeout_s > 0.0 && self.rrep_timeout_s > 0.0) {
            return fail("timeouts must be positive".into());
        }
        if !(self.duration_s >= self.d_s) {
            return fail(format!(
                "duration_s ({}) must cover at least one detection window ({})",
                self.duration_s, self.d_s
            ));
        }
        if !(self.session_rate_per_s >= 0.0) || !(self.session_duration_mean_s > 0.0) {
            return fail("session rate must be non-negative and mean duration positive".into());
        }
        if self.k_max < 2 {
            return fail(format!("k_max must be at least 2, got {}", self.k_max));
        }
        if self.e_min > self.e_strong {
            return fail(format!(
                "e_min ({}) must not exceed e_strong ({})",
                self.e_min, self.e_strong
            ));
        }
        if !unit(self.vote_quorum) || !unit(self.coop_threshold) {
            return fail("vote_quorum and coop_threshold must lie in [0, 1]".into());
        }
        Ok(())
    }
}
