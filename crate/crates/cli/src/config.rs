//! Flat `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Keys:
//!
//! ```text
//! command    = variance                   # optional; must match the CLI command
//! n_list     = 200, 400, 800
//! g_rule     = power(-0.5)                # or const(0.2), or single
//! psi_range  = 5, 50, 91                  # min, max, count
//! samples    = 500
//! mesh_level = 5                          # default: smallest admissible level
//! seed       = 42
//! tol        = 1e-6
//! threads    = 4                          # 0 = all cores
//! format     = csv                        # or json
//! out_path   = results.csv
//! dump_path  = lengths.csv                # mc-nodal: per-sample seed,length
//! ```

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use bandnodal::BandWindow;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    KernelCurve,
    KacriceCurve,
    Variance,
    McNodal,
    Chaos2,
    Selfcheck,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Self::KernelCurve, Self::KacriceCurve, Self::Variance, Self::McNodal, Self::Chaos2, Self::Selfcheck];

    pub fn name(self) -> &'static str {
        match self {
            Self::KernelCurve => "kernel-curve",
            Self::KacriceCurve => "kacrice-curve",
            Self::Variance => "variance",
            Self::McNodal => "mc-nodal",
            Self::Chaos2 => "chaos2",
            Self::Selfcheck => "selfcheck",
        }
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            Self::KernelCurve | Self::KacriceCurve => &["n_list", "g_rule", "psi_range"],
            Self::Variance => &["n_list", "g_rule"],
            Self::McNodal => &["n_list", "g_rule", "samples", "seed"],
            Self::Chaos2 => &["n_list", "g_rule"],
            Self::Selfcheck => &[],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown command '{s}'"))
    }
}

/// How `g` depends on `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GRule {
    Const(f64),
    /// `g = n^exponent`
    Power(f64),
    /// One-degree window `l = n`.
    Single,
}

impl GRule {
    pub fn window(self, n: u32) -> bandnodal::Result<BandWindow> {
        match self {
            Self::Const(g) => BandWindow::new(n, g),
            Self::Power(e) => BandWindow::new(n, f64::from(n).powf(e)),
            Self::Single => BandWindow::single(n),
        }
    }

    pub fn label(self) -> String {
        match self {
            Self::Const(g) => format!("const({g})"),
            Self::Power(e) => format!("power({e})"),
            Self::Single => "single".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl PsiRange {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.min + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub n_list: Vec<u32>,
    pub g_rule: GRule,
    pub psi_range: Option<PsiRange>,
    pub samples: Option<usize>,
    pub mesh_level: Option<u32>,
    pub seed: Option<u64>,
    pub tol: f64,
    pub threads: usize,
    pub format: Format,
    pub out_path: Option<String>,
    pub dump_path: Option<String>,
}

const KEYS: [&str; 12] = [
    "command", "n_list", "g_rule", "psi_range", "samples", "mesh_level", "seed", "tol", "threads", "format", "out_path",
    "dump_path",
];

fn err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Config { line: Some(line), msg: msg.into() }
}

fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| err(line, format!("{key}: cannot parse '{}'", v.trim())))
}

fn parse_g_rule(line: usize, v: &str) -> Result<GRule, CliError> {
    let inner = |prefix: &str| v.strip_prefix(prefix).and_then(|r| r.strip_suffix(')'));
    if v == "single" {
        Ok(GRule::Single)
    } else if let Some(x) = inner("const(") {
        Ok(GRule::Const(num(line, "g_rule", x)?))
    } else if let Some(x) = inner("power(") {
        Ok(GRule::Power(num(line, "g_rule", x)?))
    } else {
        Err(err(line, format!("g_rule: expected const(g), power(e) or single, got '{v}'")))
    }
}

impl ExperimentConfig {
    /// Parse and validate a configuration for `command`.
    pub fn parse(text: &str, command: Command) -> Result<Self, CliError> {
        let mut raw: HashMap<&str, (usize, &str)> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| err(lineno, format!("expected key = value, got '{body}'")))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(err(lineno, format!("unknown key '{k}'")));
            }
            if let Some((first, _)) = raw.insert(k, (lineno, v)) {
                return Err(err(lineno, format!("duplicate key '{k}' (first on line {first})")));
            }
        }
        for key in command.required() {
            if !raw.contains_key(key) {
                return Err(CliError::Config { line: None, msg: format!("{command} needs key '{key}'") });
            }
        }

        if let Some(&(line, v)) = raw.get("command") {
            let c: Command = v.parse().map_err(|e: String| err(line, e))?;
            if c != command {
                return Err(err(line, format!("config is for '{c}' but command is '{command}'")));
            }
        }
        let n_list = match raw.get("n_list") {
            Some(&(line, v)) => {
                let ns = v.split(',').map(|x| num::<u32>(line, "n_list", x)).collect::<Result<Vec<_>, _>>()?;
                if ns.is_empty() {
                    return Err(err(line, "n_list is empty"));
                }
                ns
            }
            None => vec![],
        };
        let g_rule = match raw.get("g_rule") {
            Some(&(line, v)) => {
                let rule = parse_g_rule(line, v)?;
                for &n in &n_list {
                    rule.window(n).map_err(|e| err(line, format!("{} at n={n}: {e}", rule.label())))?;
                }
                rule
            }
            None => GRule::Single,
        };
        let psi_range = match raw.get("psi_range") {
            Some(&(line, v)) => {
                let parts: Vec<&str> = v.split(',').collect();
                if parts.len() != 3 {
                    return Err(err(line, "psi_range: expected min, max, count"));
                }
                let r = PsiRange {
                    min: num(line, "psi_range", parts[0])?,
                    max: num(line, "psi_range", parts[1])?,
                    count: num(line, "psi_range", parts[2])?,
                };
                if !(r.min > 0.0 && r.max >= r.min && r.count >= 1) {
                    return Err(err(line, "psi_range: need 0 < min <= max and count >= 1"));
                }
                Some(r)
            }
            None => None,
        };
        let opt = |key: &str| raw.get(key).copied();
        let samples = opt("samples").map(|(l, v)| num::<usize>(l, "samples", v)).transpose()?;
        if let (Some(s), Some((l, _))) = (samples, opt("samples")) {
            if s < 2 {
                return Err(err(l, "samples must be at least 2"));
            }
        }
        let seed = opt("seed").map(|(l, v)| num::<u64>(l, "seed", v)).transpose()?;
        if samples.is_some() && seed.is_none() {
            return Err(CliError::Config { line: None, msg: "sampling needs an explicit 'seed'".into() });
        }
        let tol = opt("tol").map(|(l, v)| num::<f64>(l, "tol", v)).transpose()?.unwrap_or(1e-6);
        if !(tol > 0.0) {
            return Err(err(opt("tol").map_or(0, |p| p.0), "tol must be positive"));
        }
        let format = match opt("format") {
            None | Some((_, "csv")) => Format::Csv,
            Some((_, "json")) => Format::Json,
            Some((l, v)) => return Err(err(l, format!("format: expected csv or json, got '{v}'"))),
        };
        Ok(Self {
            command,
            n_list,
            g_rule,
            psi_range,
            samples,
            mesh_level: opt("mesh_level").map(|(l, v)| num(l, "mesh_level", v)).transpose()?,
            seed,
            tol,
            threads: opt("threads").map(|(l, v)| num(l, "threads", v)).transpose()?.unwrap_or(0),
            format,
            out_path: opt("out_path").map(|p| p.1.to_string()),
            dump_path: opt("dump_path").map(|p| p.1.to_string()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of(e: CliError) -> Option<usize> {
        match e {
            CliError::Config { line, .. } => line,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parses_full_config() {
        let text = "# variance sweep\nn_list = 200, 400,800\ng_rule = power(-0.5)  # g = n^-1/2\n\ntol=1e-7\nthreads = 2\nformat = json\n";
        let c = ExperimentConfig::parse(text, Command::Variance).unwrap();
        assert_eq!(c.n_list, vec![200, 400, 800]);
        assert_eq!(c.g_rule, GRule::Power(-0.5));
        assert_eq!(c.tol, 1e-7);
        assert_eq!(c.threads, 2);
        assert_eq!(c.format, Format::Json);
    }

    #[test]
    fn reports_line_numbers() {
        let text = "n_list = 10\n\ng_rule = const(0.2)\nbogus = 1\n";
        assert_eq!(line_of(ExperimentConfig::parse(text, Command::Variance).unwrap_err()), Some(4));
        let text = "n_list = 10, x\ng_rule = const(0.2)\n";
        assert_eq!(line_of(ExperimentConfig::parse(text, Command::Variance).unwrap_err()), Some(1));
        let text = "n_list = 10\ng_rule = const(1.5)\n";
        assert_eq!(line_of(ExperimentConfig::parse(text, Command::Variance).unwrap_err()), Some(2));
        let text = "n_list = 10\ng_rule = const(0.2)\nn_list = 12\n";
        assert_eq!(line_of(ExperimentConfig::parse(text, Command::Variance).unwrap_err()), Some(3));
        let text = "n_list = 10\ng_rule = const(0.2)\npsi_range = 0, 5, 3\n";
        assert_eq!(line_of(ExperimentConfig::parse(text, Command::KernelCurve).unwrap_err()), Some(3));
    }

    #[test]
    fn seed_required_for_sampling() {
        let text = "n_list = 10\ng_rule = const(0.2)\nsamples = 10\n";
        assert!(ExperimentConfig::parse(text, Command::McNodal).is_err());
        assert!(ExperimentConfig::parse(text, Command::Chaos2).is_err());
        let ok = format!("{text}seed = 3\n");
        assert_eq!(ExperimentConfig::parse(&ok, Command::McNodal).unwrap().seed, Some(3));
    }

    #[test]
    fn command_key_must_match() {
        let text = "command = chaos2\nn_list = 100\ng_rule = const(0.1)\n";
        assert!(ExperimentConfig::parse(text, Command::Chaos2).is_ok());
        assert_eq!(line_of(ExperimentConfig::parse(text, Command::Variance).unwrap_err()), Some(1));
    }

    #[test]
    fn psi_points() {
        let r = PsiRange { min: 5.0, max: 50.0, count: 91 };
        let p = r.points();
        assert_eq!(p.len(), 91);
        assert_eq!(p[0], 5.0);
        assert!((p[90] - 50.0).abs() < 1e-12);
        assert_eq!(PsiRange { min: 2.0, max: 9.0, count: 1 }.points(), vec![2.0]);
    }
}
