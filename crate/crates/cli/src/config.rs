//! Experiment configuration. A config file holds `key = value` lines (`#`
//! starts a comment); command-line flags override file values.
//!
//! Keys and defaults:
//!
//! | key          | default                                   |
//! |--------------|-------------------------------------------|
//! | `command`    | none (the positional command wins)        |
//! | `scheme`     | `qdr,qbsr,quzawa` (LFA), `qdr,quzawa,qibsr` (runs) |
//! | `transfer`   | `p25t` (`all` for every pair)             |
//! | `nu`         | `1,2,3,4`                                 |
//! | `n`          | `81`                                      |
//! | `bc`         | `dirichlet`                               |
//! | `omega`, `alpha`, `sigma`, `omega-j` | scheme defaults   |
//! | `resolution` | `81`                                      |
//! | `seed`       | `1`                                       |
//! | `out`        | standard output                           |
//! | `format`     | `csv`                                     |

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use mac3_core::lfa::analytic::uzawa_params_from_omega;
use mac3_core::mac::{check_grid_size, Bc};
use mac3_core::{RelaxParams, Scheme, TransferPair};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SmoothOpt,
    TwogridLfa,
    MgRun,
    Compare,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SmoothOpt => "smooth-opt",
            Command::TwogridLfa => "twogrid-lfa",
            Command::MgRun => "mg-run",
            Command::Compare => "compare",
            Command::Selftest => "selftest",
        }
    }

    fn default_schemes(self) -> Vec<Scheme> {
        match self {
            Command::SmoothOpt | Command::TwogridLfa => {
                vec![Scheme::Qdr, Scheme::QbsrExact, Scheme::Quzawa]
            }
            _ => vec![Scheme::Qdr, Scheme::Quzawa, Scheme::Qibsr],
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::from_str_ignore_case(s)
    }
}

impl Command {
    fn from_str_ignore_case(s: &str) -> Result<Self, CliError> {
        <Command as ValueEnum>::from_str(s.trim(), true).map_err(|_| {
            CliError::Config(format!(
                "unknown command `{s}`; expected one of smooth-opt, twogrid-lfa, mg-run, compare, selftest"
            ))
        })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Unparsed settings from one source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub command: Option<String>,
    pub scheme: Option<String>,
    pub transfer: Option<String>,
    pub nu: Option<String>,
    pub n: Option<String>,
    pub bc: Option<String>,
    pub omega: Option<String>,
    pub alpha: Option<String>,
    pub sigma: Option<String>,
    pub omega_j: Option<String>,
    pub resolution: Option<String>,
    pub seed: Option<String>,
    pub out: Option<String>,
    pub format: Option<String>,
}

impl RawConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut raw = RawConfig::default();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{origin}:{}: expected `key = value`, got `{line}`",
                    k + 1
                ))
            })?;
            let slot = raw.slot(key.trim()).ok_or_else(|| {
                CliError::Config(format!("{origin}:{}: unknown key `{}`", k + 1, key.trim()))
            })?;
            *slot = Some(value.trim().to_string());
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    fn slot(&mut self, key: &str) -> Option<&mut Option<String>> {
        Some(match key.replace('_', "-").as_str() {
            "command" => &mut self.command,
            "scheme" => &mut self.scheme,
            "transfer" => &mut self.transfer,
            "nu" => &mut self.nu,
            "n" => &mut self.n,
            "bc" => &mut self.bc,
            "omega" => &mut self.omega,
            "alpha" => &mut self.alpha,
            "sigma" => &mut self.sigma,
            "omega-j" => &mut self.omega_j,
            "resolution" => &mut self.resolution,
            "seed" => &mut self.seed,
            "out" => &mut self.out,
            "format" => &mut self.format,
            _ => return None,
        })
    }

    /// Values set in `over` replace those in `self`.
    pub fn merge(self, over: RawConfig) -> RawConfig {
        fn pick(a: Option<String>, b: Option<String>) -> Option<String> {
            b.or(a)
        }
        RawConfig {
            command: pick(self.command, over.command),
            scheme: pick(self.scheme, over.scheme),
            transfer: pick(self.transfer, over.transfer),
            nu: pick(self.nu, over.nu),
            n: pick(self.n, over.n),
            bc: pick(self.bc, over.bc),
            omega: pick(self.omega, over.omega),
            alpha: pick(self.alpha, over.alpha),
            sigma: pick(self.sigma, over.sigma),
            omega_j: pick(self.omega_j, over.omega_j),
            resolution: pick(self.resolution, over.resolution),
            seed: pick(self.seed, over.seed),
            out: pick(self.out, over.out),
            format: pick(self.format, over.format),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Overrides {
    pub omega: Option<f64>,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    pub omega_j: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub schemes: Vec<Scheme>,
    pub transfers: Vec<TransferPair>,
    pub nu: Vec<usize>,
    pub n: usize,
    pub bc: Bc,
    pub overrides: Overrides,
    pub resolution: usize,
    pub seed: u64,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn number<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("`{key}` expects a number, got `{v}`")))
}

fn list<T>(
    key: &str,
    v: &str,
    item: impl Fn(&str) -> Result<T, CliError>,
) -> Result<Vec<T>, CliError> {
    let out: Vec<T> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(CliError::Config(format!(
            "`{key}` needs at least one value"
        )));
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn resolve(raw: RawConfig) -> Result<Self, CliError> {
        let command: Command = raw
            .command
            .as_deref()
            .ok_or_else(|| CliError::Config("no command given; see `mac3 --help`".into()))?
            .parse()?;
        let schemes = match raw.scheme.as_deref() {
            None => command.default_schemes(),
            Some(v) => list("scheme", v, |s| {
                s.parse::<Scheme>().map_err(|_| {
                    CliError::Config(format!(
                        "unknown scheme `{s}`; expected qdr, qbsr, qibsr or quzawa"
                    ))
                })
            })?,
        };
        let transfers = match raw.transfer.as_deref() {
            None => vec![TransferPair::new(mac3_core::Restriction::P25T)],
            Some(v) if v.trim().eq_ignore_ascii_case("all") => TransferPair::all().to_vec(),
            // `p25,r9` names one pair, so lists are separated by `;` or spaces
            Some(v) => v
                .split([';', ' '])
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<TransferPair>().map_err(|_| {
                        CliError::Config(format!(
                            "unknown transfer `{s}`; expected r1, r9, r9b, p25t or all"
                        ))
                    })
                })
                .collect::<Result<_, _>>()?,
        };
        let nu = match raw.nu.as_deref() {
            None => vec![1, 2, 3, 4],
            Some(v) => list("nu", v, |s| number::<usize>("nu", s))?,
        };
        if let Some(bad) = nu.iter().find(|&&k| k == 0 || k > 16) {
            return Err(CliError::Config(format!(
                "`nu` values must lie in 1..=16, got {bad}"
            )));
        }
        let n = raw
            .n
            .as_deref()
            .map(|v| number("n", v))
            .transpose()?
            .unwrap_or(81);
        check_grid_size(n).map_err(|e| CliError::Config(format!("`n`: {e}")))?;
        let bc = match raw.bc.as_deref() {
            None => Bc::Dirichlet,
            Some(v) => v.parse().map_err(|_| {
                CliError::Config(format!("`bc` must be periodic or dirichlet, got `{v}`"))
            })?,
        };
        let float =
            |key: &str, v: &Option<String>| v.as_deref().map(|s| number::<f64>(key, s)).transpose();
        let overrides = Overrides {
            omega: float("omega", &raw.omega)?,
            alpha: float("alpha", &raw.alpha)?,
            sigma: float("sigma", &raw.sigma)?,
            omega_j: float("omega-j", &raw.omega_j)?,
        };
        let resolution = raw
            .resolution
            .as_deref()
            .map(|v| number("resolution", v))
            .transpose()?
            .unwrap_or(81);
        if resolution < 9 || resolution % 3 != 0 {
            return Err(CliError::Config(format!(
                "`resolution` must be a multiple of 3 and at least 9, got {resolution}"
            )));
        }
        let seed = raw
            .seed
            .as_deref()
            .map(|v| number("seed", v))
            .transpose()?
            .unwrap_or(1);
        let format = match raw.format.as_deref() {
            None => Format::Csv,
            Some(v) => Format::from_str(v.trim(), true).map_err(|_| {
                CliError::Config(format!("`format` must be csv or json, got `{v}`"))
            })?,
        };
        Ok(ExperimentConfig {
            command,
            schemes,
            transfers,
            nu,
            n,
            bc,
            overrides,
            resolution,
            seed,
            out: raw.out.map(PathBuf::from),
            format,
        })
    }

    /// Scheme defaults from `base`, then the overrides. For σ-Uzawa an `ω`
    /// override without `α` and `σ` moves along the optimal family.
    pub fn params(
        &self,
        scheme: Scheme,
        base: fn(Scheme) -> RelaxParams,
    ) -> Result<RelaxParams, CliError> {
        let o = self.overrides;
        let mut p = base(scheme);
        if let Some(w) = o.omega {
            p.omega = w;
            if scheme == Scheme::Quzawa && o.alpha.is_none() && o.sigma.is_none() {
                let (a, s) = uzawa_params_from_omega(w)
                    .map_err(|e| CliError::Config(format!("Uzawa ω override: {e}")))?;
                p.alpha = a;
                p.sigma = s;
            }
        }
        if let Some(a) = o.alpha {
            p.alpha = a;
        }
        if let Some(s) = o.sigma {
            p.sigma = s;
        }
        if let Some(j) = o.omega_j {
            p.omega_j = j;
        }
        p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(p)
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(cmd: &str) -> RawConfig {
        RawConfig {
            command: Some(cmd.into()),
            ..Default::default()
        }
    }

    #[test]
    fn file_syntax() {
        let r =
            RawConfig::parse("# comment\nscheme = qdr  # trailing\n\nomega_j=0.8\n", "t").unwrap();
        assert_eq!(r.scheme.as_deref(), Some("qdr"));
        assert_eq!(r.omega_j.as_deref(), Some("0.8"));
        assert!(RawConfig::parse("bogus = 1", "t").is_err());
        assert!(RawConfig::parse("scheme qdr", "t").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = RawConfig::parse("scheme = qdr\nseed = 5\nn = 27", "t").unwrap();
        let flags = RawConfig {
            seed: Some("9".into()),
            ..raw("mg-run")
        };
        let c = ExperimentConfig::resolve(file.merge(flags)).unwrap();
        assert_eq!(c.schemes, vec![Scheme::Qdr]);
        assert_eq!(c.seed, 9);
        assert_eq!(c.n, 27);
        assert_eq!(c.command, Command::MgRun);
    }

    #[test]
    fn defaults() {
        let c = ExperimentConfig::resolve(raw("twogrid-lfa")).unwrap();
        assert_eq!(c.nu, vec![1, 2, 3, 4]);
        assert_eq!((c.n, c.resolution, c.seed), (81, 81, 1));
        assert_eq!(c.bc, Bc::Dirichlet);
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.schemes.len(), 3);
    }

    #[test]
    fn transfer_lists() {
        let c = ExperimentConfig::resolve(RawConfig {
            transfer: Some("all".into()),
            ..raw("twogrid-lfa")
        })
        .unwrap();
        assert_eq!(c.transfers.len(), 4);
        let c = ExperimentConfig::resolve(RawConfig {
            transfer: Some("p25,r9;r1".into()),
            ..raw("twogrid-lfa")
        })
        .unwrap();
        assert_eq!(c.transfers.len(), 2);
    }

    #[test]
    fn rejects_bad_values() {
        for (f, v) in [
            ("n", "80"),
            ("resolution", "10"),
            ("nu", "0"),
            ("seed", "x"),
            ("format", "xml"),
        ] {
            let mut r = raw("mg-run");
            *r.slot(f).unwrap() = Some(v.into());
            assert!(
                matches!(ExperimentConfig::resolve(r), Err(CliError::Config(_))),
                "{f}={v}"
            );
        }
        assert!(ExperimentConfig::resolve(RawConfig::default()).is_err());
    }

    #[test]
    fn uzawa_omega_follows_family() {
        let mut c = ExperimentConfig::resolve(raw("smooth-opt")).unwrap();
        c.overrides.omega = Some(1.0);
        let p = c.params(Scheme::Quzawa, RelaxParams::lfa_optimal).unwrap();
        assert!((p.alpha - 47.0 / 36.0).abs() < 1e-14 && (p.sigma - 15.0 / 32.0).abs() < 1e-14);
        c.overrides.omega = Some(0.3);
        match c.params(Scheme::Quzawa, RelaxParams::lfa_optimal) {
            Err(CliError::Config(m)) => assert!(m.contains("0.555"), "{m}"),
            other => panic!("{other:?}"),
        }
        c.overrides.alpha = Some(1.0);
        c.overrides.sigma = Some(0.5);
        assert!(c.params(Scheme::Quzawa, RelaxParams::lfa_optimal).is_ok());
    }
}
