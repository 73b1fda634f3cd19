//! TOML run configuration. Every field is optional; missing ones take the
//! defaults of the chosen subcommand.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WqedError};
use crate::model::{Direction, PhysicalParams, WavepacketSpec, C64};
use crate::scenarios::{Engine, Scenario, ScenarioConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub omega_q: Option<f64>,
    pub gamma: Option<f64>,
    pub v_g: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub mu: Option<f64>,
    pub omega: Option<f64>,
    pub front: Option<f64>,
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub pulse: PulseSection,
    pub mus: Option<Vec<f64>>,
    pub deltas: Option<Vec<f64>>,
    /// Complex numbers written as "a", "bi" or "a+bi".
    pub xi: Option<Vec<String>>,
    pub oracle_xi: Option<Vec<String>>,
    pub gamma_grid: Option<Vec<f64>>,
    pub engine: Option<Engine>,
    pub samples: Option<usize>,
    pub span_gamma: Option<f64>,
    pub grid: Option<usize>,
    pub threshold: Option<f64>,
}

/// Parses "1", "-0.5", "2i", "-i", "0.5+1i", "1e-3-2.5i".
pub fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot read {s:?} as a complex number (expected a, bi or a+bi)");
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    // split before the last sign that is not an exponent sign or the leading one
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |x: &str| -> std::result::Result<f64, String> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(i) => {
            let re = body[..i].parse::<f64>().map_err(|_| bad())?;
            Ok(C64::new(re, imag(&body[i..])?))
        }
        None => Ok(C64::new(0.0, imag(body)?)),
    }
}

pub fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im.is_sign_negative() {
        format!("{}{}i", z.re, z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

fn parse_list(field: &str, v: &[String]) -> Result<Vec<C64>> {
    v.iter()
        .map(|s| parse_complex(s).map_err(|e| WqedError::param(field, e)))
        .collect()
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| WqedError::param("config", e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies the file on top of the scenario defaults.
    pub fn resolve(&self, scenario: Scenario) -> Result<ScenarioConfig> {
        let mut c = match scenario {
            Scenario::Generation => ScenarioConfig::generation_default(),
            Scenario::Manipulation => ScenarioConfig::manipulation_default(),
            Scenario::Detection => ScenarioConfig::detection_default(),
        };
        let p = &self.params;
        let params = PhysicalParams {
            omega_q: p.omega_q.unwrap_or(c.params.omega_q),
            gamma: p.gamma.unwrap_or(c.params.gamma),
            v_g: p.v_g.unwrap_or(c.params.v_g),
        };
        params.validate()?;
        // defaults are tied to γ: rescale them when only γ changes
        let ratio = if c.params.gamma > 0.0 && params.gamma > 0.0 {
            params.gamma / c.params.gamma
        } else {
            1.0
        };
        let q = &self.pulse;
        let default_mu = c.pulse.mu * ratio;
        let pulse = WavepacketSpec {
            mu: q.mu.unwrap_or(default_mu),
            omega: q.omega.unwrap_or(params.omega_q),
            front: q.front.unwrap_or(match scenario {
                Scenario::Detection => c.pulse.front / ratio,
                _ => c.pulse.front,
            }),
            direction: q.direction.unwrap_or(c.pulse.direction),
        };
        c.params = params;
        c.pulse = pulse;
        c.mus = match &self.mus {
            Some(v) => v.clone(),
            None => c.mus.iter().map(|m| m * ratio).collect(),
        };
        c.deltas = match &self.deltas {
            Some(v) => v.clone(),
            None if scenario == Scenario::Manipulation => crate::scenarios::default_delta_scan(&params),
            None => Vec::new(),
        };
        if let Some(v) = &self.xi {
            c.xi_grid = parse_list("xi", v)?;
        }
        if let Some(v) = &self.oracle_xi {
            c.oracle_xi = parse_list("oracle_xi", v)?;
        }
        c.gamma_grid = match &self.gamma_grid {
            Some(v) => v.clone(),
            None if scenario == Scenario::Detection => crate::scenarios::default_gamma_grid(pulse.mu),
            None => Vec::new(),
        };
        if let Some(e) = self.engine {
            c.engine = e;
        }
        if let Some(n) = self.samples {
            c.samples = n;
        }
        if self.span_gamma.is_some() {
            c.span_gamma = self.span_gamma;
        }
        if let Some(n) = self.grid {
            c.grid = n;
        }
        if let Some(t) = self.threshold {
            c.threshold = t;
        }
        c.validate()?;
        Ok(c)
    }

    /// Fully specified file that resolves back to `c`.
    pub fn snapshot(c: &ScenarioConfig) -> Self {
        let list = |v: &[C64]| Some(v.iter().map(|z| format_complex(*z)).collect());
        ConfigFile {
            params: ParamsSection {
                omega_q: Some(c.params.omega_q),
                gamma: Some(c.params.gamma),
                v_g: Some(c.params.v_g),
            },
            pulse: PulseSection {
                mu: Some(c.pulse.mu),
                omega: Some(c.pulse.omega),
                front: Some(c.pulse.front),
                direction: Some(c.pulse.direction),
            },
            mus: Some(c.mus.clone()),
            deltas: Some(c.deltas.clone()),
            xi: list(&c.xi_grid),
            oracle_xi: list(&c.oracle_xi),
            gamma_grid: Some(c.gamma_grid.clone()),
            engine: Some(c.engine),
            samples: Some(c.samples),
            span_gamma: c.span_gamma,
            grid: Some(c.grid),
            threshold: Some(c.threshold),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        let cases = [
            ("1", C64::new(1.0, 0.0)),
            ("-0.5", C64::new(-0.5, 0.0)),
            ("2i", C64::new(0.0, 2.0)),
            ("-i", C64::new(0.0, -1.0)),
            ("i", C64::new(0.0, 1.0)),
            ("0.5+1i", C64::new(0.5, 1.0)),
            ("1e-3-2.5i", C64::new(1e-3, -2.5)),
            ("-1e+2+1e-2i", C64::new(-100.0, 0.01)),
            (" 3 - i ", C64::new(3.0, -1.0)),
        ];
        for (s, want) in cases {
            assert_eq!(parse_complex(s).unwrap(), want, "{s}");
        }
        for s in ["", "x", "1+", "1+2", "i1"] {
            assert!(parse_complex(s).is_err(), "{s}");
        }
    }

    #[test]
    fn complex_round_trip() {
        for z in [C64::new(0.1, -0.2), C64::new(-4.0, 0.0), C64::new(1.0 / 3.0, 1e-17), C64::new(0.0, -0.0)] {
            assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
    }

    #[test]
    fn snapshot_resolves_to_same_config() {
        for s in [Scenario::Generation, Scenario::Manipulation, Scenario::Detection] {
            let c = ConfigFile::default().resolve(s).unwrap();
            let text = ConfigFile::snapshot(&c).to_toml();
            let back = ConfigFile::from_toml(&text).unwrap().resolve(s).unwrap();
            assert_eq!(c, back);
            assert_eq!(c.xi_grid, back.xi_grid);
        }
    }

    #[test]
    fn negative_gamma_names_the_field() {
        let f = ConfigFile::from_toml("[params]\ngamma = -0.01\n").unwrap();
        let e = f.resolve(Scenario::Generation).unwrap_err();
        assert!(matches!(e, WqedError::InvalidParameter { ref field, .. } if field == "gamma"), "{e}");
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(ConfigFile::from_toml("gama = 1\n").is_err());
    }

    #[test]
    fn gamma_only_rescales_defaults() {
        let f = ConfigFile::from_toml("[params]\ngamma = 0.02\n").unwrap();
        let c = f.resolve(Scenario::Generation).unwrap();
        for (got, want) in c.mus.iter().zip([0.01, 0.04, 0.02 / 15.0]) {
            assert!((got - want).abs() < 1e-15, "{got} {want}");
        }
    }
}
