//! Run configuration: `section.key = value` lines with `#` comments.
//!
//! ```text
//! # defaults reproduce the square (0, π)² with α(x) = 0.5·tanh(x) + π/2
//! beta = 1.5
//! twist.c = 0.5
//! domain.L = 20
//! domain.nx = 2000
//! ```

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Kv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "kv" => Ok(OutputFormat::Kv),
            other => Err(format!("unknown format `{other}` (expected csv or kv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SectionConfig {
    Rectangle { a: f64, b: f64 },
    Mask { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwistKind {
    Tanh,
    Bump,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistConfig {
    pub kind: TwistKind,
    pub c: f64,
    pub offset: f64,
    pub radius: f64,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cross_section: SectionConfig,
    pub beta: f64,
    pub twist: TwistConfig,
    pub half_length: f64,
    pub nx: usize,
    pub modes: usize,
    pub tol: f64,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cross_section: SectionConfig::Rectangle { a: PI, b: PI },
            beta: 1.5,
            twist: TwistConfig {
                kind: TwistKind::Tanh,
                c: 0.5,
                offset: FRAC_PI_2,
                radius: 2.0,
                file: None,
            },
            half_length: 20.0,
            nx: 2000,
            modes: 9,
            tol: 1e-8,
            output_path: None,
            format: OutputFormat::Csv,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub beta: Option<f64>,
    pub c: Option<f64>,
    pub half_length: Option<f64>,
    pub nx: Option<usize>,
    pub modes: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut kind = "rectangle".to_string();
        let mut mask = None;
        let mut lines: HashMap<&'static str, usize> = HashMap::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: String| Error::Parse {
                line,
                message: format!("`{key}`: {e}"),
            };
            let num = |v: &str| v.parse::<f64>().map_err(|e| bad(e.to_string()));
            let int = |v: &str| v.parse::<usize>().map_err(|e| bad(e.to_string()));
            let name: &'static str = match key {
                "cross_section.kind" => {
                    kind = value.to_string();
                    "cross_section.kind"
                }
                "cross_section.a" => {
                    set_rect(&mut cfg, Some(num(value)?), None);
                    "cross_section.a"
                }
                "cross_section.b" => {
                    set_rect(&mut cfg, None, Some(num(value)?));
                    "cross_section.b"
                }
                "cross_section.mask" => {
                    mask = Some(PathBuf::from(value));
                    "cross_section.mask"
                }
                "beta" => {
                    cfg.beta = num(value)?;
                    "beta"
                }
                "twist.kind" => {
                    cfg.twist.kind = match value {
                        "tanh" => TwistKind::Tanh,
                        "bump" => TwistKind::Bump,
                        "tabulated" => TwistKind::Tabulated,
                        other => return Err(bad(format!("unknown twist kind `{other}`"))),
                    };
                    "twist.kind"
                }
                "twist.c" => {
                    cfg.twist.c = num(value)?;
                    "twist.c"
                }
                "twist.offset" => {
                    cfg.twist.offset = num(value)?;
                    "twist.offset"
                }
                "twist.radius" => {
                    cfg.twist.radius = num(value)?;
                    "twist.radius"
                }
                "twist.file" => {
                    cfg.twist.file = Some(PathBuf::from(value));
                    "twist.file"
                }
                "domain.L" => {
                    cfg.half_length = num(value)?;
                    "domain.L"
                }
                "domain.nx" => {
                    cfg.nx = int(value)?;
                    "domain.nx"
                }
                "modes" => {
                    cfg.modes = int(value)?;
                    "modes"
                }
                "solver.tol" => {
                    cfg.tol = num(value)?;
                    "solver.tol"
                }
                "output.path" => {
                    cfg.output_path = Some(PathBuf::from(value));
                    "output.path"
                }
                "output.format" => {
                    cfg.format = value.parse().map_err(bad)?;
                    "output.format"
                }
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown key `{other}`"),
                    })
                }
            };
            lines.insert(name, line);
        }

        match kind.as_str() {
            "rectangle" => {}
            "mask" => {
                let path = mask.ok_or_else(|| Error::Parse {
                    line: lines.get("cross_section.kind").copied().unwrap_or(0),
                    message: "`cross_section.mask` is required for kind = mask".into(),
                })?;
                cfg.cross_section = SectionConfig::Mask { path };
            }
            other => {
                return Err(Error::Parse {
                    line: lines["cross_section.kind"],
                    message: format!("unknown cross-section kind `{other}`"),
                })
            }
        }
        cfg.validate_with(|key| lines.get(key).copied())?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(v) = o.beta {
            self.beta = v;
        }
        if let Some(v) = o.c {
            self.twist.c = v;
        }
        if let Some(v) = o.half_length {
            self.half_length = v;
        }
        if let Some(v) = o.nx {
            self.nx = v;
        }
        if let Some(v) = o.modes {
            self.modes = v;
        }
        if let Some(v) = &o.output_path {
            self.output_path = Some(v.clone());
        }
        if let Some(v) = o.format {
            self.format = v;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(|_| None)
    }

    fn validate_with(&self, line_of: impl Fn(&'static str) -> Option<usize>) -> Result<()> {
        let fail = |key: &'static str, reason: &str| match line_of(key) {
            Some(line) => Error::Parse {
                line,
                message: format!("`{key}` {reason}"),
            },
            None => Error::param(key, reason),
        };
        let finite = |v: f64| v.is_finite();
        if let SectionConfig::Rectangle { a, b } = self.cross_section {
            if !(a > 0.0 && finite(a)) {
                return Err(fail("cross_section.a", "must be > 0"));
            }
            if !(b > 0.0 && finite(b)) {
                return Err(fail("cross_section.b", "must be > 0"));
            }
        }
        if !(self.beta >= 0.0 && finite(self.beta)) {
            return Err(fail("beta", "must be ≥ 0"));
        }
        if !finite(self.twist.c) {
            return Err(fail("twist.c", "must be finite"));
        }
        if !finite(self.twist.offset) {
            return Err(fail("twist.offset", "must be finite"));
        }
        if self.twist.kind == TwistKind::Bump && !(self.twist.radius > 0.0) {
            return Err(fail("twist.radius", "must be > 0"));
        }
        if self.twist.kind == TwistKind::Tabulated && self.twist.file.is_none() {
            return Err(fail("twist.file", "is required for kind = tabulated"));
        }
        if !(self.half_length > 0.0 && finite(self.half_length)) {
            return Err(fail("domain.L", "must be > 0"));
        }
        if self.nx < 3 {
            return Err(fail("domain.nx", "must be ≥ 3"));
        }
        if self.modes < 1 {
            return Err(fail("modes", "must be ≥ 1"));
        }
        if !(self.tol > 0.0) {
            return Err(fail("solver.tol", "must be > 0"));
        }
        Ok(())
    }
}

fn set_rect(cfg: &mut RunConfig, a: Option<f64>, b: Option<f64>) {
    if let SectionConfig::Rectangle { a: ra, b: rb } = &mut cfg.cross_section {
        if let Some(a) = a {
            *ra = a;
        }
        if let Some(b) = b {
            *rb = b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
        let d = RunConfig::default();
        assert_eq!(d.cross_section, SectionConfig::Rectangle { a: PI, b: PI });
        assert_eq!((d.half_length, d.nx, d.modes, d.tol), (20.0, 2000, 9, 1e-8));
        assert_eq!(d.twist.c, 0.5);
    }

    #[test]
    fn partial_input_keeps_defaults() {
        let cfg = RunConfig::parse("beta = 1.5\ntwist.c = 0.5").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let cfg = RunConfig::parse("# comment\nbeta = 0.9 # trailing\n\nmodes = 4\n").unwrap();
        assert_eq!(cfg.beta, 0.9);
        assert_eq!(cfg.modes, 4);
    }

    #[test]
    fn range_error_names_key_and_line() {
        let err = RunConfig::parse("modes = 3\nbeta = -1").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("beta"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_and_malformed_lines() {
        assert!(matches!(
            RunConfig::parse("colour = red"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse("beta = 1\ndomain.nx = many"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            RunConfig::parse("beta 1"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(RunConfig::parse("domain.nx = 2").is_err());
        assert!(RunConfig::parse("twist.kind = tabulated").is_err());
        assert!(RunConfig::parse("cross_section.kind = mask").is_err());
    }

    #[test]
    fn mask_and_rectangle_sections() {
        let cfg =
            RunConfig::parse("cross_section.kind = mask\ncross_section.mask = s.txt").unwrap();
        assert_eq!(
            cfg.cross_section,
            SectionConfig::Mask {
                path: "s.txt".into()
            }
        );
        let cfg = RunConfig::parse("cross_section.a = 2\ncross_section.b = 1").unwrap();
        assert_eq!(
            cfg.cross_section,
            SectionConfig::Rectangle { a: 2.0, b: 1.0 }
        );
    }

    #[test]
    fn overrides_take_precedence_and_validate() {
        let mut cfg = RunConfig::parse("beta = 0.5").unwrap();
        cfg.apply(&Overrides {
            beta: Some(2.0),
            nx: Some(300),
            format: Some(OutputFormat::Kv),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!((cfg.beta, cfg.nx, cfg.format), (2.0, 300, OutputFormat::Kv));
        let err = cfg
            .apply(&Overrides {
                beta: Some(-3.0),
                ..Overrides::default()
            })
            .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "beta", .. }));
    }
}
