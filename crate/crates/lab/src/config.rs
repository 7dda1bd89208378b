//! Flat `key = value` run configuration with `[section]` headers and `#`
//! comments.

use std::fmt::Write as _;
use std::path::PathBuf;

use exh_core::kmc::SamplerMode;
use exh_core::KernelChoice;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("model", &["n", "alpha", "beta", "kappa", "theta"]),
    ("kernel", &["kind", "gamma"]),
    ("schedule", &["times", "profile", "left", "right"]),
    ("ensemble", &["replicas", "seed", "mode", "threads", "max_events"]),
    ("output", &["dir", "correlations"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeChoice {
    Auto,
    Fixed(SamplerMode),
}

impl ModeChoice {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(ModeChoice::Auto),
            "exact" => Ok(ModeChoice::Fixed(SamplerMode::ExactTable)),
            "thinning" => Ok(ModeChoice::Fixed(SamplerMode::Thinning)),
            "lazy" => Ok(ModeChoice::Fixed(SamplerMode::LazyReservoir)),
            _ => Err(format!("unknown sampler mode `{s}` (expected auto, exact, thinning or lazy)")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModeChoice::Auto => "auto",
            ModeChoice::Fixed(SamplerMode::ExactTable) => "exact",
            ModeChoice::Fixed(SamplerMode::Thinning) => "thinning",
            ModeChoice::Fixed(SamplerMode::LazyReservoir) => "lazy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub theta: f64,
    pub kernel: KernelChoice,
    pub times: Vec<f64>,
    pub profile: String,
    pub left: f64,
    pub right: f64,
    pub replicas: u64,
    pub seed: u64,
    pub mode: ModeChoice,
    pub threads: Option<usize>,
    pub max_events: u64,
    pub out: PathBuf,
    pub correlations: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 64,
            alpha: 0.2,
            beta: 0.8,
            kappa: 1.0,
            theta: 0.0,
            kernel: KernelChoice::NearestNeighbor,
            times: vec![0.01, 0.05, 0.1],
            profile: "step".into(),
            left: 0.8,
            right: 0.2,
            replicas: 200,
            seed: 1,
            mode: ModeChoice::Auto,
            threads: None,
            max_events: exh_core::kmc::DEFAULT_MAX_EVENTS,
            out: PathBuf::from("out"),
            correlations: false,
        }
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| format!("bad number `{}`: {e}", v.trim()))).collect()
}

fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("bad value `{v}`: {e}"))
}

impl RunConfig {
    /// Parses on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut section: Option<&str> = None;
        let mut kind = "nn".to_string();
        let mut gamma: Option<f64> = None;
        let mut kind_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| ConfigError { line, message };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| err("unterminated section header".into()))?.trim();
                let known = SECTIONS.iter().find(|(s, _)| *s == name).ok_or_else(|| err(format!("unknown section `{name}`")))?;
                section = Some(known.0);
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| err(format!("expected `key = value`, found `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.ok_or_else(|| err(format!("key `{key}` appears before any section")))?;
            let keys = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !keys.contains(&key) {
                return Err(err(format!("unknown key `{key}` in section [{sec}]")));
            }
            let r: Result<(), String> = (|| {
                match (sec, key) {
                    ("model", "n") => cfg.n = num(value)?,
                    ("model", "alpha") => cfg.alpha = num(value)?,
                    ("model", "beta") => cfg.beta = num(value)?,
                    ("model", "kappa") => cfg.kappa = num(value)?,
                    ("model", "theta") => cfg.theta = num(value)?,
                    ("kernel", "kind") => {
                        if value != "nn" && value != "lj" {
                            return Err(format!("unknown kernel `{value}` (expected nn or lj)"));
                        }
                        kind = value.into();
                        kind_line = line;
                    }
                    ("kernel", "gamma") => gamma = Some(num(value)?),
                    ("schedule", "times") => cfg.times = parse_list(value)?,
                    ("schedule", "profile") => {
                        crate::harness::preset(value, 0.0, 1.0)?;
                        cfg.profile = value.into();
                    }
                    ("schedule", "left") => cfg.left = num(value)?,
                    ("schedule", "right") => cfg.right = num(value)?,
                    ("ensemble", "replicas") => cfg.replicas = num(value)?,
                    ("ensemble", "seed") => cfg.seed = num(value)?,
                    ("ensemble", "mode") => cfg.mode = ModeChoice::parse(value)?,
                    ("ensemble", "threads") => cfg.threads = Some(num(value)?),
                    ("ensemble", "max_events") => cfg.max_events = num(value)?,
                    ("output", "dir") => cfg.out = PathBuf::from(value),
                    ("output", "correlations") => cfg.correlations = num(value)?,
                    _ => unreachable!("key table and match arms disagree"),
                }
                Ok(())
            })();
            r.map_err(err)?;
        }
        cfg.kernel = match (kind.as_str(), gamma) {
            ("lj", Some(g)) => KernelChoice::LongJump { gamma: g },
            ("lj", None) => return Err(ConfigError { line: kind_line, message: "kind = lj needs gamma".into() }),
            _ => KernelChoice::NearestNeighbor,
        };
        Ok(cfg)
    }

    /// The fully resolved configuration in the same format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "[model]\nn = {}\nalpha = {}\nbeta = {}\nkappa = {}\ntheta = {}\n", self.n, self.alpha, self.beta, self.kappa, self.theta);
        match self.kernel {
            KernelChoice::NearestNeighbor => {
                let _ = writeln!(s, "[kernel]\nkind = nn\n");
            }
            KernelChoice::LongJump { gamma } => {
                let _ = writeln!(s, "[kernel]\nkind = lj\ngamma = {gamma}\n");
            }
        }
        let _ = writeln!(s, "[schedule]\ntimes = {}\nprofile = {}\nleft = {}\nright = {}\n", list(&self.times), self.profile, self.left, self.right);
        let _ = writeln!(s, "[ensemble]\nreplicas = {}\nseed = {}\nmode = {}", self.replicas, self.seed, self.mode.name());
        if let Some(t) = self.threads {
            let _ = writeln!(s, "threads = {t}");
        }
        let _ = writeln!(s, "max_events = {}\n", self.max_events);
        let _ = writeln!(s, "[output]\ndir = {}\ncorrelations = {}", self.out.display(), self.correlations);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.kernel = KernelChoice::LongJump { gamma: 2.5 };
        c.times = vec![0.5, 1.0];
        c.threads = Some(3);
        c.mode = ModeChoice::Fixed(SamplerMode::Thinning);
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = RunConfig::parse("# top\n\n[model]\nn = 12   # lattice\ntheta=1\n").unwrap();
        assert_eq!(c.n, 12);
        assert_eq!(c.theta, 1.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = RunConfig::parse("[model]\nn = 4\nsize = 3\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("size"));
        assert_eq!(RunConfig::parse("[model]\nalpha = x\n").unwrap_err().line, 2);
        assert_eq!(RunConfig::parse("n = 4\n").unwrap_err().line, 1);
        assert_eq!(RunConfig::parse("[extra]\n").unwrap_err().line, 1);
        assert_eq!(RunConfig::parse("[kernel]\nkind = lj\n").unwrap_err().line, 2);
        assert_eq!(RunConfig::parse("\n[ensemble]\nmode = fast\n").unwrap_err().line, 3);
    }
}
