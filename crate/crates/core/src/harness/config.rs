use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::channel::Attenuation;
use crate::routing::{Scheme, Skeleton};
use crate::{Error, Result};

/// Environment variable holding the default seed list.
pub const SEEDS_ENV: &str = "PERCAP_SEEDS";

const DEFAULT_SEEDS: &str = "0..5";

/// Pipeline selected by a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Deploy,
    Percolate,
    Backbone,
    Route,
    Simulate,
    Bounds,
    Sweep,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Deploy,
        Mode::Percolate,
        Mode::Backbone,
        Mode::Route,
        Mode::Simulate,
        Mode::Bounds,
        Mode::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Deploy => "deploy",
            Mode::Percolate => "percolate",
            Mode::Backbone => "backbone",
            Mode::Route => "route",
            Mode::Simulate => "simulate",
            Mode::Bounds => "bounds",
            Mode::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config("mode", format!("unknown mode `{s}`")))
    }
}

/// How the density follows `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    Fixed(f64),
    /// `lambda = n`.
    Dense,
    /// `lambda = 1`.
    Extended,
}

impl LambdaRule {
    pub fn eval(self, n: f64) -> f64 {
        match self {
            LambdaRule::Fixed(v) => v,
            LambdaRule::Dense => n,
            LambdaRule::Extended => 1.0,
        }
    }
}

impl fmt::Display for LambdaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaRule::Fixed(v) => write!(f, "{v}"),
            LambdaRule::Dense => f.write_str("dense"),
            LambdaRule::Extended => f.write_str("extended"),
        }
    }
}

impl FromStr for LambdaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dense" | "n" => Ok(LambdaRule::Dense),
            "extended" => Ok(LambdaRule::Extended),
            other => other
                .parse::<f64>()
                .map(LambdaRule::Fixed)
                .map_err(|_| Error::config("lambda", format!("expected dense, extended or a number, got `{other}`"))),
        }
    }
}

/// A count as a function of `n`: `coef * n^power / (ln n)^log_power`, or a
/// constant when `power` is zero and `log_power` is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRule {
    pub coef: f64,
    pub power: f64,
    pub log_power: f64,
}

impl CountRule {
    pub fn constant(v: f64) -> Self {
        CountRule { coef: v, power: 0.0, log_power: 0.0 }
    }

    pub fn eval(self, n: f64) -> f64 {
        self.coef * n.powf(self.power) / n.ln().powf(self.log_power)
    }
}

impl fmt::Display for CountRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.power == 0.0 && self.log_power == 0.0 {
            return write!(f, "{}", self.coef);
        }
        if self.coef != 1.0 {
            write!(f, "{}*", self.coef)?;
        }
        f.write_str("n")?;
        if self.power != 1.0 {
            write!(f, "^{}", self.power)?;
        }
        if self.log_power != 0.0 {
            write!(f, "/(log n)^{}", self.log_power)?;
        }
        Ok(())
    }
}

impl FromStr for CountRule {
    type Err = Error;

    /// Accepts `4`, `n`, `2*n`, `n^0.5`, `sqrt(n)`, `n/log n` and
    /// `n/(log n)^2.5` (`ln` works as well as `log`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param(format!("cannot parse count expression `{s}`"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        if let Ok(v) = t.parse::<f64>() {
            return Ok(CountRule::constant(v));
        }
        let t = t.replace("ln", "log");
        let (coef, rest) = match t.split_once('*') {
            Some((c, r)) => (c.parse::<f64>().map_err(|_| bad())?, r.to_string()),
            None => (1.0, t.clone()),
        };
        let (head, tail) = match rest.split_once('/') {
            Some((h, tl)) => (h.to_string(), Some(tl.to_string())),
            None => (rest.clone(), None),
        };
        let power = match head.as_str() {
            "n" => 1.0,
            "sqrt(n)" => 0.5,
            h => h
                .strip_prefix("n^")
                .and_then(|p| p.trim_matches(|c| c == '(' || c == ')').parse::<f64>().ok())
                .ok_or_else(bad)?,
        };
        let log_power = match tail.as_deref() {
            None => 0.0,
            Some("logn") | Some("(logn)") => 1.0,
            Some(tl) => tl
                .strip_prefix("(logn)^")
                .and_then(|p| p.trim_matches(|c| c == '(' || c == ')').parse::<f64>().ok())
                .ok_or_else(bad)?,
        };
        Ok(CountRule { coef, power, log_power })
    }
}

/// Path-loss choice; `Auto` picks the dense form under the dense density rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttenuationRule {
    Auto,
    Fixed(Attenuation),
}

/// A validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub ns: Vec<usize>,
    pub lambda: LambdaRule,
    pub n_s: CountRule,
    pub n_d: CountRule,
    pub alpha: f64,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
    /// Percolation parameters `lambda pi r^2` for the percolate mode.
    pub gammas: Vec<f64>,
    pub grid: usize,
    pub polylog: f64,
    /// Largest admissible upper/lower ratio in the sweep mode.
    pub slack: f64,
    /// Largest admissible absolute log-ratio slope in the sweep mode.
    pub slope_tol: f64,
    pub skeleton: Skeleton,
    pub attenuation: AttenuationRule,
    pub power: f64,
    pub noise: f64,
    pub c: Option<f64>,
    pub kappa: Option<f64>,
    pub giant_fraction: f64,
    pub out: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Bounds,
            ns: vec![1 << 16],
            lambda: LambdaRule::Extended,
            n_s: CountRule { coef: 1.0, power: 1.0, log_power: 0.0 },
            n_d: CountRule::constant(4.0),
            alpha: 3.0,
            schemes: Scheme::ALL.to_vec(),
            seeds: vec![0],
            gammas: vec![4.0 * PI],
            grid: crate::bounds::DEFAULT_GRID,
            polylog: crate::bounds::DEFAULT_POLYLOG_POWER,
            slack: 8.0,
            slope_tol: 0.05,
            skeleton: Skeleton::Est,
            attenuation: AttenuationRule::Auto,
            power: 1.0,
            noise: 1.0,
            c: None,
            kappa: None,
            giant_fraction: crate::percolation::DEFAULT_GIANT_FRACTION,
            out: None,
        }
    }
}

fn field<T>(key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(key, other.to_string()),
    })
}

fn num(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::config(key, format!("`{v}` is not a number")))
}

fn parse_n(item: &str) -> Result<f64> {
    let s = item.trim();
    if let Some((b, e)) = s.split_once('^') {
        let b: f64 = b.trim().parse().map_err(|_| Error::param(format!("bad base in `{s}`")))?;
        let e: f64 = e.trim().parse().map_err(|_| Error::param(format!("bad exponent in `{s}`")))?;
        return Ok(b.powf(e));
    }
    s.parse::<f64>().map_err(|_| Error::param(format!("`{s}` is not a size")))
}

/// `1024, 2^12, 1e4` or a power range `2^10..2^16`.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let (ba, ea) = a.split_once('^').ok_or_else(|| Error::param(format!("range `{item}` needs b^k..b^l")))?;
            let (bb, eb) = b.split_once('^').ok_or_else(|| Error::param(format!("range `{item}` needs b^k..b^l")))?;
            let base: u32 = ba.trim().parse().map_err(|_| Error::param(format!("bad base in `{item}`")))?;
            if bb.trim() != ba.trim() {
                return Err(Error::param(format!("range `{item}` mixes bases")));
            }
            let lo: u32 = ea.trim().parse().map_err(|_| Error::param(format!("bad exponent in `{item}`")))?;
            let hi: u32 = eb.trim().parse().map_err(|_| Error::param(format!("bad exponent in `{item}`")))?;
            for e in lo..=hi {
                out.push(base.checked_pow(e).ok_or_else(|| Error::param(format!("`{item}` overflows")))? as usize);
            }
        } else {
            let v = parse_n(item)?;
            if !(v.is_finite() && v >= 1.0 && v.fract() == 0.0) {
                return Err(Error::param(format!("`{item}` is not a positive integer")));
            }
            out.push(v as usize);
        }
    }
    if out.is_empty() {
        return Err(Error::param("empty list"));
    }
    Ok(out)
}

/// `0,1,2` or a half-open range `0..10`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| Error::param(format!("bad seed range `{s}`")))?;
        let b: u64 = b.trim().parse().map_err(|_| Error::param(format!("bad seed range `{s}`")))?;
        if b <= a {
            return Err(Error::param(format!("empty seed range `{s}`")));
        }
        return Ok((a..b).collect());
    }
    let v: Vec<u64> = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|_| Error::param(format!("bad seed `{x}`"))))
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(Error::param("empty seed list"));
    }
    Ok(v)
}

/// `4pi, 0.5*pi, 12.6`.
fn parse_gammas(s: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| {
            let t = x.to_ascii_lowercase().replace(' ', "");
            let (c, scale) = match t.strip_suffix("pi") {
                Some(c) => (c.trim_end_matches('*').to_string(), PI),
                None => (t.clone(), 1.0),
            };
            let c = if c.is_empty() { 1.0 } else { c.parse::<f64>().map_err(|_| Error::param(format!("bad gamma `{x}`")))? };
            Ok(c * scale)
        })
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(Error::param("empty gamma list"));
    }
    Ok(v)
}

fn parse_attenuation(s: &str) -> Result<AttenuationRule> {
    match s.trim().to_ascii_lowercase().as_str() {
        "auto" => Ok(AttenuationRule::Auto),
        "dense" => Ok(AttenuationRule::Fixed(Attenuation::Dense)),
        "extended" => Ok(AttenuationRule::Fixed(Attenuation::Extended)),
        other => Err(Error::param(format!("expected auto, dense or extended, got `{other}`"))),
    }
}

/// Splits `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", no + 1), format!("expected key = value, got `{line}`")))?;
        out.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Builds a configuration from file text and `key=value` overrides; later
    /// pairs win, so overrides beat the file. Seeds default to
    /// `$PERCAP_SEEDS`, then `0..5`.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut pairs = parse_pairs(text)?;
        for o in overrides {
            pairs.extend(parse_pairs(o)?);
        }
        let mut cfg = ExperimentConfig::default();
        let env_seeds = std::env::var(SEEDS_ENV).ok();
        cfg.seeds = field("seeds", parse_seeds(env_seeds.as_deref().unwrap_or(DEFAULT_SEEDS)))?;
        let mut mode_set = false;
        for (k, v) in &pairs {
            let k = k.as_str();
            match k {
                "mode" => {
                    cfg.mode = v.parse()?;
                    mode_set = true;
                }
                "n" | "ns" => cfg.ns = field(k, parse_sizes(v))?,
                "lambda" => cfg.lambda = v.parse()?,
                "n_s" => cfg.n_s = field(k, v.parse())?,
                "n_d" => cfg.n_d = field(k, v.parse())?,
                "alpha" => cfg.alpha = num(k, v)?,
                "schemes" | "scheme" => {
                    cfg.schemes = field(
                        k,
                        v.split(',').map(str::trim).filter(|x| !x.is_empty()).map(str::parse).collect(),
                    )?
                }
                "seeds" => cfg.seeds = field(k, parse_seeds(v))?,
                "gammas" | "gamma" => cfg.gammas = field(k, parse_gammas(v))?,
                "grid" => cfg.grid = num(k, v)? as usize,
                "polylog" => cfg.polylog = num(k, v)?,
                "slack" => cfg.slack = num(k, v)?,
                "slope_tol" => cfg.slope_tol = num(k, v)?,
                "skeleton" => cfg.skeleton = field(k, v.parse())?,
                "attenuation" => cfg.attenuation = field(k, parse_attenuation(v))?,
                "power" => cfg.power = num(k, v)?,
                "noise" => cfg.noise = num(k, v)?,
                "c" => cfg.c = Some(num(k, v)?),
                "kappa" => cfg.kappa = Some(num(k, v)?),
                "giant_fraction" => cfg.giant_fraction = num(k, v)?,
                "out" => cfg.out = Some(v.clone()),
                other => return Err(Error::config(other, "unknown key")),
            }
        }
        if !mode_set {
            return Err(Error::config("mode", "missing"));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn attenuation(&self) -> Attenuation {
        match self.attenuation {
            AttenuationRule::Fixed(a) => a,
            AttenuationRule::Auto if self.lambda == LambdaRule::Dense => Attenuation::Dense,
            AttenuationRule::Auto => Attenuation::Extended,
        }
    }

    /// True for modes that build a deployment per seed.
    pub fn is_stochastic(&self) -> bool {
        !matches!(self.mode, Mode::Bounds | Mode::Sweep)
    }

    /// Rounded session and destination counts at `n`.
    pub fn counts(&self, n: usize) -> (usize, usize) {
        let nf = n as f64;
        (self.n_s.eval(nf).round() as usize, self.n_d.eval(nf).round() as usize)
    }

    /// Checks every rule at every `n` before anything runs.
    pub fn validate(&self) -> Result<()> {
        let err = |f: &str, m: String| Err(Error::config(f, m));
        if !(self.alpha.is_finite() && self.alpha > 2.0) {
            return err("alpha", format!("{} must exceed 2", self.alpha));
        }
        if self.grid < 32 {
            return err("grid", format!("{} must be at least 32", self.grid));
        }
        if !(self.polylog.is_finite() && self.polylog > 0.0) {
            return err("polylog", format!("{} must be positive", self.polylog));
        }
        if !(self.slack.is_finite() && self.slack >= 1.0) {
            return err("slack", format!("{} must be at least 1", self.slack));
        }
        if !(self.slope_tol.is_finite() && self.slope_tol > 0.0) {
            return err("slope_tol", format!("{} must be positive", self.slope_tol));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return err("power", format!("{} must be positive", self.power));
        }
        if !(self.noise > 0.0 && self.noise.is_finite()) {
            return err("noise", format!("{} must be positive", self.noise));
        }
        if !(self.giant_fraction > 0.0 && self.giant_fraction <= 1.0) {
            return err("giant_fraction", format!("{} outside (0, 1]", self.giant_fraction));
        }
        if let Some(c) = self.c {
            if !(c.is_finite() && c > 0.0) {
                return err("c", format!("{c} must be positive"));
            }
        }
        if let Some(k) = self.kappa {
            if !(k.is_finite() && k > 0.0) {
                return err("kappa", format!("{k} must be positive"));
            }
        }
        if self.schemes.is_empty() {
            return err("schemes", "empty".into());
        }
        if self.gammas.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return err("gammas", "every gamma must be positive".into());
        }
        for &n in &self.ns {
            let nf = n as f64;
            if n < 3 {
                return err("n", format!("{n} must be at least 3"));
            }
            let lambda = self.lambda.eval(nf);
            if !(lambda.is_finite() && (1.0..=nf).contains(&lambda)) {
                return err("lambda", format!("{lambda} outside [1, n] at n = {n}"));
            }
            if self.is_stochastic() {
                let (n_s, n_d) = self.counts(n);
                if matches!(self.mode, Mode::Route | Mode::Simulate) {
                    if !(n_s > 1 && n_s <= n) {
                        return err("n_s", format!("{n_s} outside (1, n] at n = {n}"));
                    }
                    if !(n_d >= 1 && n_d < n) {
                        return err("n_d", format!("{n_d} outside [1, n - 1] at n = {n}"));
                    }
                }
            } else {
                let (n_s, n_d) = (self.n_s.eval(nf), self.n_d.eval(nf));
                if !(n_s.is_finite() && n_s > 1.0 && n_s <= nf) {
                    return err("n_s", format!("{n_s} outside (1, n] at n = {n}"));
                }
                if !(n_d.is_finite() && (1.0..=nf).contains(&n_d)) {
                    return err("n_d", format!("{n_d} outside [1, n] at n = {n}"));
                }
            }
        }
        if self.mode == Mode::Sweep && self.ns.len() < 2 {
            return err("n", "a sweep needs at least two sizes".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_expressions() {
        let n = 2f64.powi(20);
        let ln = n.ln();
        let cases = [
            ("4", 4.0),
            ("n", n),
            ("2*n", 2.0 * n),
            ("sqrt(n)", n.sqrt()),
            ("n^0.5", n.sqrt()),
            ("n/log n", n / ln),
            ("n / (log n)^2.5", n / ln.powf(2.5)),
            ("n/(ln n)^(1.5)", n / ln.powf(1.5)),
        ];
        for (s, want) in cases {
            let r: CountRule = s.parse().unwrap();
            assert!((r.eval(n) / want - 1.0).abs() < 1e-12, "{s}");
            let again: CountRule = r.to_string().parse().unwrap();
            assert_eq!(again, r, "{s}");
        }
        assert!("m/2".parse::<CountRule>().is_err());
        assert!("n/(log n)^x".parse::<CountRule>().is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_sizes("2^10..2^12, 1e3").unwrap(), vec![1024, 2048, 4096, 1000]);
        assert!(parse_sizes("").is_err());
        assert!(parse_sizes("2^3..3^4").is_err());
        assert_eq!(parse_seeds("3..6").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_seeds("7, 1").unwrap(), vec![7, 1]);
        assert!(parse_seeds("5..5").is_err());
        let g = parse_gammas("0.5pi, 4*pi, 2").unwrap();
        assert!((g[0] - 0.5 * PI).abs() < 1e-15 && (g[1] - 4.0 * PI).abs() < 1e-15 && g[2] == 2.0);
    }

    #[test]
    fn overrides_win() {
        let text = "mode = bounds\n# comment\nn = 2^20\nalpha = 3\nlambda = dense\n";
        let c = ExperimentConfig::parse(text, &["alpha=4".into(), "n_d = n/(log n)^2".into()]).unwrap();
        assert_eq!(c.alpha, 4.0);
        assert_eq!(c.lambda, LambdaRule::Dense);
        assert_eq!(c.n_d.log_power, 2.0);
        assert_eq!(c.attenuation(), Attenuation::Dense);
    }

    #[test]
    fn field_level_errors() {
        let field_of = |text: &str| match ExperimentConfig::parse(text, &[]) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field_of("mode = bounds\nalpha = 2"), "alpha");
        assert_eq!(field_of("mode = nope"), "mode");
        assert_eq!(field_of("n = 100"), "mode");
        assert_eq!(field_of("mode = bounds\ncolour = red"), "colour");
        assert_eq!(field_of("mode = bounds\nn = 100\nn_d = 2*n"), "n_d");
        assert_eq!(field_of("mode = simulate\nn = 100\nn_d = n"), "n_d");
        assert_eq!(field_of("mode = simulate\nlambda = 500\nn = 100"), "lambda");
        assert_eq!(field_of("mode = bounds\nschemes = o, x"), "schemes");
        assert_eq!(field_of("mode = bounds\ngrid = 8"), "grid");
        assert_eq!(field_of("mode = sweep\nn = 100"), "n");
        assert_eq!(field_of("mode = bounds\njunk"), "line 2");
    }
}
