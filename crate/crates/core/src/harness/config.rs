//! Line-oriented sweep configuration.
//!
//! ```text
//! # defaults for every cell
//! reps = 300
//! seed = 2024
//!
//! [cell]
//! beta = 1
//! n = 100
//! alpha = 0.0001
//! test = bootstrap
//! scheme = rademacher
//! B = 300
//! ```
//!
//! Keys before the first `[cell]` set defaults; each `[cell]` block starts from
//! those defaults. Everything after `#` is ignored.

use std::fs;
use std::path::Path;

use crate::bootstrap::BootstrapScheme;
use crate::dgp::DgpConfig;
use crate::error::{Error, Result};

use super::{SweepCell, TestKind};

#[derive(Debug, Clone)]
struct Draft {
    dgp: DgpConfig,
    test: String,
    scheme: BootstrapScheme,
    b: usize,
    alpha: f64,
    nu_sobolev: f64,
    gamma: f64,
    reps: usize,
    center: bool,
}

impl Default for Draft {
    fn default() -> Self {
        Draft {
            dgp: DgpConfig::default(),
            test: "bootstrap".into(),
            scheme: BootstrapScheme::WildRademacher,
            b: 300,
            alpha: 1e-4,
            nu_sobolev: 0.0,
            gamma: 0.05,
            reps: 300,
            center: false,
        }
    }
}

fn value<T: std::str::FromStr>(line: u64, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid value '{raw}' for '{key}'"),
    })
}

impl Draft {
    fn set(&mut self, line: u64, key: &str, raw: &str) -> Result<()> {
        match key {
            "beta" | "beta_id" => self.dgp.beta_id = value(line, key, raw)?,
            "n" => self.dgp.n = value(line, key, raw)?,
            "p" => self.dgp.p = value(line, key, raw)?,
            "rho" => self.dgp.rho = value(line, key, raw)?,
            "nu_instr" => self.dgp.nu_instr = value(line, key, raw)?,
            "sigma" => self.dgp.sigma = value(line, key, raw)?,
            "h" => self.dgp.h = value(line, key, raw)?,
            "seed" => self.dgp.seed = value(line, key, raw)?,
            "test" => self.test = raw.to_ascii_lowercase(),
            "scheme" => {
                self.scheme = raw.parse().map_err(|e: Error| Error::Parse {
                    line,
                    message: e.to_string(),
                })?
            }
            "B" | "b" => self.b = value(line, key, raw)?,
            "alpha" => self.alpha = value(line, key, raw)?,
            "nu_sobolev" | "nu" => self.nu_sobolev = value(line, key, raw)?,
            "gamma" => self.gamma = value(line, key, raw)?,
            "reps" => self.reps = value(line, key, raw)?,
            "center" => self.center = value(line, key, raw)?,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown key '{other}'"),
                })
            }
        }
        Ok(())
    }

    fn finish(&self, line: u64) -> Result<SweepCell> {
        let test = match self.test.as_str() {
            "asymptotic" => TestKind::Asymptotic,
            "bootstrap" => TestKind::Bootstrap {
                scheme: self.scheme,
                b: self.b,
            },
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown test '{other}' (expected asymptotic or bootstrap)"),
                })
            }
        };
        let cell = SweepCell {
            dgp: self.dgp.clone(),
            test,
            alpha: self.alpha,
            nu_sobolev: self.nu_sobolev,
            gamma: self.gamma,
            reps: self.reps,
            center: self.center,
        };
        cell.validate().map_err(|e| Error::Parse {
            line,
            message: format!("invalid cell: {e}"),
        })?;
        Ok(cell)
    }
}

pub fn parse_sweep(text: &str) -> Result<Vec<SweepCell>> {
    let mut defaults = Draft::default();
    let mut current: Option<(Draft, u64)> = None;
    let mut cells = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            if content != "[cell]" {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown section '{content}'"),
                });
            }
            if let Some((draft, start)) = current.take() {
                cells.push(draft.finish(start)?);
            }
            current = Some((defaults.clone(), line));
            continue;
        }
        let (key, val) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected 'key = value', got '{content}'"),
        })?;
        let target = match current.as_mut() {
            Some((draft, _)) => draft,
            None => &mut defaults,
        };
        target.set(line, key.trim(), val.trim())?;
    }
    if let Some((draft, start)) = current {
        cells.push(draft.finish(start)?);
    }
    if cells.is_empty() {
        return Err(Error::EmptySweep);
    }
    Ok(cells)
}

pub fn read_sweep(path: impl AsRef<Path>) -> Result<Vec<SweepCell>> {
    parse_sweep(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let text = "\
# shared
reps = 50
seed = 7
alpha = 0.01   # per-n schedule below

[cell]
n = 25

[cell]
n = 300
alpha = 0.0001
test = asymptotic
";
        let cells = parse_sweep(text).unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].reps, 50);
        assert_eq!(cells[0].seed(), 7);
        assert_eq!(cells[0].alpha, 0.01);
        assert_eq!(cells[0].dgp.n, 25);
        assert_eq!(
            cells[0].test,
            TestKind::Bootstrap { scheme: BootstrapScheme::WildRademacher, b: 300 }
        );
        assert_eq!(cells[1].alpha, 0.0001);
        assert_eq!(cells[1].test, TestKind::Asymptotic);
        assert_eq!(cells[1].seed(), 7);
    }

    #[test]
    fn every_key_is_accepted() {
        let text = "[cell]\nbeta = 3\nn = 10\np = 32\nrho = 0.2\nnu_instr = 0.5\nsigma = 2\nh = 0.05\nseed = 1\n\
                    test = bootstrap\nscheme = mammen\nB = 40\nalpha = 0.001\nnu_sobolev = 3\ngamma = 0.1\nreps = 5\ncenter = true\n";
        let c = &parse_sweep(text).unwrap()[0];
        assert_eq!(c.dgp.beta_id, 3);
        assert_eq!(c.dgp.p, 32);
        assert_eq!(c.dgp.h, 0.05);
        assert_eq!(c.dgp.sigma, 2.0);
        assert_eq!(c.test, TestKind::Bootstrap { scheme: BootstrapScheme::WildMammen, b: 40 });
        assert_eq!(c.nu_sobolev, 3.0);
        assert_eq!(c.gamma, 0.1);
        assert!(c.center);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("[cell]\nn = ten\n", 2),
            ("[cell]\nwhatever = 1\n", 2),
            ("[cells]\n", 1),
            ("reps = 3\n[cell]\njust words\n", 3),
            ("[cell]\nrho = 0.8\nnu_instr = 0.7\n", 1),
            ("[cell]\nscheme = jackknife\n", 2),
            ("[cell]\ntest = exact\n", 1),
        ];
        for (text, expected) in cases {
            match parse_sweep(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, expected, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn no_cells_is_an_empty_sweep() {
        assert!(matches!(parse_sweep("reps = 3\n"), Err(Error::EmptySweep)));
    }
}
