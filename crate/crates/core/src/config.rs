//! Run configuration: one flat `key = value` text file (or the matching
//! command-line flags) covering every tunable across the engine. Unknown
//! keys are errors — a typo must not silently fall back to a default.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::acd::AcdParams;
use crate::derand::DerandConfig;
use crate::mpc::MpcConfig;
use crate::partition::{ReduceConfig, RunMode};
use crate::procs::ProcParams;
use crate::program::ProgramConfig;
use crate::source::SourceKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    /// Line without a single `=` separator.
    Malformed { line_no: usize, line: String },
    UnknownKey { key: String },
    BadValue { key: String, value: String, expected: &'static str },
    OutOfRange { key: String, why: String },
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Malformed { line_no, line } => {
                write!(f, "config line {line_no} is not `key = value`: {line:?}")
            }
            ConfigError::UnknownKey { key } => write!(f, "unknown config key {key:?}"),
            ConfigError::BadValue { key, value, expected } => {
                write!(f, "config key {key}: {value:?} is not {expected}")
            }
            ConfigError::OutOfRange { key, why } => write!(f, "config key {key}: {why}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Execution mode: the seed-searched deterministic drive, or fresh
/// pseudo-randomness keyed by `entropy_seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Derandomized,
    Randomized,
}

/// Every knob in one place. `parse` starts from `default()` and applies
/// overrides, so a config file only needs the keys it changes.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// RNG key for randomized mode; ignored when derandomized.
    pub entropy_seed: u64,
    /// Machine-space exponent: budget ceil(n^phi) words unless overridden.
    pub phi: BigRational,
    /// Degree-partition exponent: ceil(n^delta) bins per level.
    pub delta: BigRational,
    /// Explicit per-machine budget; 0 means use the n^phi formula.
    pub local_space_words: u64,
    /// Explicit machine count; 0 means derive from n, m, and the budget.
    pub machine_count: u64,
    /// Hash seeds scanned before partitioning gives up.
    pub seed_budget: u64,
    /// Independence parameter of the seeded bit generator.
    pub independence: u32,
    /// Cap on seed width; a binding phase searches 2^bits candidates.
    pub max_seed_bits: u32,
    pub source: SourceKind,
    /// Entropy key for the frozen-oracle source (ignored by the seeded one).
    pub oracle_entropy: u64,
    /// Residual degrees below this escape every success predicate;
    /// 0 means auto: ceil((log2 n)^2) of the root instance.
    pub low_degree_threshold: u64,
    /// Slack-generation target fraction: slack >= gamma * residual degree.
    pub gs_gamma: BigRational,
    /// Put-aside size target: |P_C| >= c_p * ell^2.
    pub pa_cp: BigRational,
    /// Synchronized-trial failure budget: c_t * ell per clique.
    pub synch_ct: u64,
    pub eps_ac: BigRational,
    pub eps_sp: BigRational,
    /// eps1..eps5 of the start-set classifier.
    pub eps_start: [BigRational; 5],
    pub heavy_threshold: BigRational,
    /// Trial-size exponent for the slack-color schedule, in (0, 1].
    pub kappa: BigRational,
    /// Opening random-color trials before the schedule proper.
    pub trc_rounds: u32,
    /// Deferral-recursion depth before the one-machine greedy tail.
    pub max_levels: u32,
    /// Skip the degree partition; run the mid-degree stage on the whole
    /// instance (its degree must then fit the space budget directly).
    pub no_partition: bool,
    /// Where `run` writes the report; empty means stdout only.
    pub report_path: String,
    /// Where `run` writes the coloring; empty means don't write it.
    pub coloring_path: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let pc = ProgramConfig::default();
        let mpc = MpcConfig::default();
        let rc = ReduceConfig::default();
        RunConfig {
            mode: Mode::Derandomized,
            entropy_seed: 0,
            phi: mpc.phi,
            delta: mpc.delta,
            local_space_words: 0,
            machine_count: 0,
            seed_budget: rc.seed_budget,
            independence: pc.derand.k,
            max_seed_bits: pc.derand.max_seed_bits,
            source: SourceKind::Seeded,
            oracle_entropy: 0,
            low_degree_threshold: 0,
            gs_gamma: pc.proc.gs_gamma,
            pa_cp: pc.proc.pa_cp,
            synch_ct: pc.proc.synch_ct,
            eps_ac: pc.acd.eps_ac,
            eps_sp: pc.acd.eps_sp,
            eps_start: pc.acd.eps_start,
            heavy_threshold: pc.acd.heavy_threshold,
            kappa: pc.kappa,
            trc_rounds: pc.trc_rounds,
            max_levels: pc.max_levels,
            no_partition: false,
            report_path: String::new(),
            coloring_path: String::new(),
        }
    }
}

/// `p/q` or a plain integer, exact.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(BigRational::new(n, d))
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(BigRational::from_integer(n))
    }
}

fn rational_text(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn bad(key: &str, value: &str, expected: &'static str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    }
}

impl RunConfig {
    /// Parse a whole config file: `key = value` lines, `#` comments,
    /// blank lines ignored, later lines override earlier ones.
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line_no: i + 1,
                line: raw.to_string(),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        self.validate()
    }

    /// Apply one override. Keys are the snake_case field names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let uint = |v: &str| -> Result<u64, ConfigError> {
            v.parse::<u64>().map_err(|_| bad(key, v, "an unsigned integer"))
        };
        let uint32 = |v: &str| -> Result<u32, ConfigError> {
            v.parse::<u32>().map_err(|_| bad(key, v, "an unsigned integer"))
        };
        let ratio = |v: &str| -> Result<BigRational, ConfigError> {
            parse_rational(v).ok_or_else(|| bad(key, v, "a rational `p/q` or integer"))
        };
        match key {
            "mode" => {
                self.mode = match value {
                    "derandomized" => Mode::Derandomized,
                    "randomized" => Mode::Randomized,
                    _ => return Err(bad(key, value, "`derandomized` or `randomized`")),
                }
            }
            "entropy_seed" => self.entropy_seed = uint(value)?,
            "phi" => self.phi = ratio(value)?,
            "delta" => self.delta = ratio(value)?,
            "local_space_words" => {
                self.local_space_words = if value == "auto" { 0 } else { uint(value)? }
            }
            "machine_count" => {
                self.machine_count = if value == "auto" { 0 } else { uint(value)? }
            }
            "seed_budget" => self.seed_budget = uint(value)?,
            "independence" => self.independence = uint32(value)?,
            "max_seed_bits" => self.max_seed_bits = uint32(value)?,
            "source" => {
                self.source = match value {
                    "seeded" => SourceKind::Seeded,
                    "oracle" => SourceKind::Oracle,
                    _ => return Err(bad(key, value, "`seeded` or `oracle`")),
                }
            }
            "oracle_entropy" => self.oracle_entropy = uint(value)?,
            "low_degree_threshold" => {
                self.low_degree_threshold = if value == "auto" { 0 } else { uint(value)? }
            }
            "gs_gamma" => self.gs_gamma = ratio(value)?,
            "pa_cp" => self.pa_cp = ratio(value)?,
            "synch_ct" => self.synch_ct = uint(value)?,
            "eps_ac" => self.eps_ac = ratio(value)?,
            "eps_sp" => self.eps_sp = ratio(value)?,
            "eps1" => self.eps_start[0] = ratio(value)?,
            "eps2" => self.eps_start[1] = ratio(value)?,
            "eps3" => self.eps_start[2] = ratio(value)?,
            "eps4" => self.eps_start[3] = ratio(value)?,
            "eps5" => self.eps_start[4] = ratio(value)?,
            "heavy_threshold" => self.heavy_threshold = ratio(value)?,
            "kappa" => self.kappa = ratio(value)?,
            "trc_rounds" => self.trc_rounds = uint32(value)?,
            "max_levels" => self.max_levels = uint32(value)?,
            "no_partition" => {
                self.no_partition = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(bad(key, value, "`true` or `false`")),
                }
            }
            "report_path" => self.report_path = value.to_string(),
            "coloring_path" => self.coloring_path = value.to_string(),
            _ => return Err(ConfigError::UnknownKey { key: key.to_string() }),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |key: &'static str, r: &BigRational, closed_top: bool| {
            let ok = r.is_positive() && (*r < BigRational::one() || (closed_top && r.is_one()));
            if ok {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    key: key.to_string(),
                    why: format!(
                        "{} must lie in (0, 1{}",
                        rational_text(r),
                        if closed_top { "]" } else { ")" }
                    ),
                })
            }
        };
        unit("phi", &self.phi, false)?;
        unit("delta", &self.delta, false)?;
        unit("kappa", &self.kappa, true)?;
        if self.independence == 0 {
            return Err(ConfigError::OutOfRange {
                key: "independence".into(),
                why: "must be at least 1".into(),
            });
        }
        if self.max_seed_bits > 24 {
            return Err(ConfigError::OutOfRange {
                key: "max_seed_bits".into(),
                why: "caps at 24 (the search enumerates 2^bits seeds)".into(),
            });
        }
        if self.max_levels == 0 {
            return Err(ConfigError::OutOfRange {
                key: "max_levels".into(),
                why: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// The auto escape threshold: ceil((log2 n)^2) of the root instance.
    pub fn auto_threshold(n: usize) -> u64 {
        let lg = (n.max(2) as f64).log2();
        (lg * lg).ceil() as u64
    }

    pub fn resolved_threshold(&self, root_n: usize) -> u64 {
        if self.low_degree_threshold == 0 {
            Self::auto_threshold(root_n)
        } else {
            self.low_degree_threshold
        }
    }

    pub fn run_mode(&self) -> RunMode {
        match self.mode {
            Mode::Derandomized => RunMode::Derandomized,
            Mode::Randomized => RunMode::Randomized {
                entropy: self.entropy_seed,
            },
        }
    }

    pub fn program_config(&self, root_n: usize) -> ProgramConfig {
        ProgramConfig {
            proc: ProcParams {
                low_degree_threshold: self.resolved_threshold(root_n),
                gs_gamma: self.gs_gamma.clone(),
                pa_cp: self.pa_cp.clone(),
                synch_ct: self.synch_ct,
            },
            acd: AcdParams {
                eps_ac: self.eps_ac.clone(),
                eps_sp: self.eps_sp.clone(),
                eps_start: self.eps_start.clone(),
                heavy_threshold: self.heavy_threshold.clone(),
            },
            derand: DerandConfig {
                k: self.independence,
                max_seed_bits: self.max_seed_bits,
                source: self.source,
                oracle_entropy: self.oracle_entropy,
            },
            kappa: self.kappa.clone(),
            trc_rounds: self.trc_rounds,
            max_levels: self.max_levels,
        }
    }

    pub fn mpc_config(&self) -> MpcConfig {
        MpcConfig {
            phi: self.phi.clone(),
            delta: self.delta.clone(),
            local_space_words: (self.local_space_words > 0).then_some(self.local_space_words),
            machine_count: (self.machine_count > 0).then_some(self.machine_count),
        }
    }

    pub fn reduce_config(&self, root_n: usize) -> ReduceConfig {
        ReduceConfig {
            program: self.program_config(root_n),
            mpc: self.mpc_config(),
            seed_budget: self.seed_budget,
        }
    }

    /// Canonical full listing, parseable by `parse` and echoed into every
    /// report so a run's exact configuration is always on record.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "mode = {}",
            match self.mode {
                Mode::Derandomized => "derandomized",
                Mode::Randomized => "randomized",
            }
        );
        let _ = writeln!(s, "entropy_seed = {}", self.entropy_seed);
        let _ = writeln!(s, "phi = {}", rational_text(&self.phi));
        let _ = writeln!(s, "delta = {}", rational_text(&self.delta));
        if self.local_space_words > 0 {
            let _ = writeln!(s, "local_space_words = {}", self.local_space_words);
        } else {
            let _ = writeln!(s, "local_space_words = auto");
        }
        if self.machine_count > 0 {
            let _ = writeln!(s, "machine_count = {}", self.machine_count);
        } else {
            let _ = writeln!(s, "machine_count = auto");
        }
        let _ = writeln!(s, "seed_budget = {}", self.seed_budget);
        let _ = writeln!(s, "independence = {}", self.independence);
        let _ = writeln!(s, "max_seed_bits = {}", self.max_seed_bits);
        let _ = writeln!(
            s,
            "source = {}",
            match self.source {
                SourceKind::Seeded => "seeded",
                SourceKind::Oracle => "oracle",
            }
        );
        let _ = writeln!(s, "oracle_entropy = {}", self.oracle_entropy);
        if self.low_degree_threshold > 0 {
            let _ = writeln!(s, "low_degree_threshold = {}", self.low_degree_threshold);
        } else {
            let _ = writeln!(s, "low_degree_threshold = auto");
        }
        let _ = writeln!(s, "gs_gamma = {}", rational_text(&self.gs_gamma));
        let _ = writeln!(s, "pa_cp = {}", rational_text(&self.pa_cp));
        let _ = writeln!(s, "synch_ct = {}", self.synch_ct);
        let _ = writeln!(s, "eps_ac = {}", rational_text(&self.eps_ac));
        let _ = writeln!(s, "eps_sp = {}", rational_text(&self.eps_sp));
        for (i, e) in self.eps_start.iter().enumerate() {
            let _ = writeln!(s, "eps{} = {}", i + 1, rational_text(e));
        }
        let _ = writeln!(s, "heavy_threshold = {}", rational_text(&self.heavy_threshold));
        let _ = writeln!(s, "kappa = {}", rational_text(&self.kappa));
        let _ = writeln!(s, "trc_rounds = {}", self.trc_rounds);
        let _ = writeln!(s, "max_levels = {}", self.max_levels);
        let _ = writeln!(s, "no_partition = {}", self.no_partition);
        if !self.report_path.is_empty() {
            let _ = writeln!(s, "report_path = {}", self.report_path);
        }
        if !self.coloring_path.is_empty() {
            let _ = writeln!(s, "coloring_path = {}", self.coloring_path);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::rat;

    #[test]
    fn defaults_round_trip_through_echo() {
        let cfg = RunConfig::default();
        let again = RunConfig::parse(&cfg.echo()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn overrides_and_comments_parse() {
        let text = "\
# run shape
mode = randomized
entropy_seed = 99
phi = 17/20   # machine space
delta = 1/10
gs_gamma = 1/64
low_degree_threshold = 37
no_partition = true
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.mode, Mode::Randomized);
        assert_eq!(cfg.entropy_seed, 99);
        assert_eq!(cfg.phi, rat(17, 20));
        assert_eq!(cfg.delta, rat(1, 10));
        assert_eq!(cfg.gs_gamma, rat(1, 64));
        assert_eq!(cfg.resolved_threshold(1 << 12), 37);
        assert!(cfg.no_partition);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(matches!(
            RunConfig::parse("grammar = 3\n"),
            Err(ConfigError::UnknownKey { .. })
        ));
        assert!(matches!(
            RunConfig::parse("phi = blue\n"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            RunConfig::parse("phi = 3/2\n"),
            Err(ConfigError::OutOfRange { .. })
        ));
        assert!(matches!(
            RunConfig::parse("kappa = 0\n"),
            Err(ConfigError::OutOfRange { .. })
        ));
        assert!(matches!(
            RunConfig::parse("just a line\n"),
            Err(ConfigError::Malformed { .. })
        ));
    }

    #[test]
    fn auto_threshold_tracks_root_size() {
        assert_eq!(RunConfig::auto_threshold(1 << 8), 64);
        assert_eq!(RunConfig::auto_threshold(1 << 12), 144);
        assert_eq!(RunConfig::auto_threshold(2), 1);
        // kappa = 1 is allowed (closed top), phi = 1 is not.
        let mut cfg = RunConfig::default();
        cfg.kappa = rat(1, 1);
        assert!(cfg.validate().is_ok());
        cfg.phi = rat(1, 1);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn builders_propagate_fields() {
        let mut cfg = RunConfig::default();
        cfg.set("max_seed_bits", "10").unwrap();
        cfg.set("synch_ct", "7").unwrap();
        cfg.set("local_space_words", "5000").unwrap();
        let pc = cfg.program_config(1 << 10);
        assert_eq!(pc.derand.max_seed_bits, 10);
        assert_eq!(pc.proc.synch_ct, 7);
        assert_eq!(pc.proc.low_degree_threshold, 100);
        let mc = cfg.mpc_config();
        assert_eq!(mc.local_space_words, Some(5000));
        assert_eq!(mc.machine_count, None);
    }
}
