use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::MagicFormula;

/// Keys every vehicle scenario file must define.
pub const SCENARIO_KEYS: [&str; 17] = [
    "Bf", "Cf", "Df", "Ef", "Br", "Cr", "Dr", "Er", "k", "kd", "u_kmh", "tau", "T_prev", "m", "J",
    "a1", "a2",
];

/// Keys accepted but not interpreted by [`VehicleScenario`].
const PASSIVE_KEYS: [&str; 2] = ["model", "name"];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { key: String, line: usize },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("unknown key `{0}`")]
    Unknown(String),
    #[error("key `{key}`: cannot parse `{value}` as a number")]
    NotANumber { key: String, value: String },
    #[error("key `{key}`: {reason}")]
    OutOfRange { key: String, reason: &'static str },
}

/// Ordered `key = value` pairs; `#` starts a comment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn number(&self, key: &str) -> Result<f64, ScenarioError> {
        let raw = self.get(key).ok_or_else(|| ScenarioError::Missing(key.into()))?;
        raw.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| ScenarioError::NotANumber {
                key: key.into(),
                value: raw.into(),
            })
    }
}

pub fn parse_key_values(text: &str) -> Result<KeyValues, ScenarioError> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ScenarioError::Syntax { line: i + 1 })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ScenarioError::Syntax { line: i + 1 });
        }
        if entries.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ScenarioError::Duplicate {
                key: k.into(),
                line: i + 1,
            });
        }
    }
    Ok(KeyValues { entries })
}

/// Vehicle, tire and driver parameters in SI units (speed input in km/h).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleScenario {
    pub front: MagicFormula,
    pub rear: MagicFormula,
    /// Proportional steering gain, 1/m.
    pub k: f64,
    /// Derivative steering gain, s/m.
    pub kd: f64,
    /// Longitudinal speed, m/s.
    pub u: f64,
    pub tau: f64,
    pub t_prev: f64,
    pub m: f64,
    pub j: f64,
    pub a1: f64,
    pub a2: f64,
}

impl VehicleScenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        Self::from_key_values(&parse_key_values(text)?)
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ScenarioError> {
        if let Some(k) = kv
            .keys()
            .find(|k| !SCENARIO_KEYS.contains(k) && !PASSIVE_KEYS.contains(k))
        {
            return Err(ScenarioError::Unknown(k.into()));
        }
        let n = |key: &str| kv.number(key);
        let positive = |key: &'static str| -> Result<f64, ScenarioError> {
            let x = n(key)?;
            if x > 0.0 {
                Ok(x)
            } else {
                Err(ScenarioError::OutOfRange {
                    key: key.into(),
                    reason: "must be positive",
                })
            }
        };
        let s = Self {
            front: MagicFormula::new(positive("Bf")?, n("Cf")?, positive("Df")?, n("Ef")?),
            rear: MagicFormula::new(positive("Br")?, n("Cr")?, positive("Dr")?, n("Er")?),
            k: n("k")?,
            kd: n("kd")?,
            u: positive("u_kmh")? / 3.6,
            tau: positive("tau")?,
            t_prev: positive("T_prev")?,
            m: positive("m")?,
            j: positive("J")?,
            a1: positive("a1")?,
            a2: positive("a2")?,
        };
        Ok(s)
    }

    /// Distance of the preview point ahead of the centre of mass.
    pub fn preview_distance(&self) -> f64 {
        self.u * self.t_prev
    }

    /// Text form accepted by [`VehicleScenario::parse`].
    pub fn to_text(&self) -> String {
        let vals = [
            self.front.b,
            self.front.c,
            self.front.d,
            self.front.e,
            self.rear.b,
            self.rear.c,
            self.rear.d,
            self.rear.e,
            self.k,
            self.kd,
            self.u * 3.6,
            self.tau,
            self.t_prev,
            self.m,
            self.j,
            self.a1,
            self.a2,
        ];
        SCENARIO_KEYS
            .iter()
            .zip(vals)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UN: &str = "
        # understeering
        Bf = 9.86\nCf = 1.87\nDf = 9778\nEf = 0.28
        Br = 18.75\nCr = 1.53\nDr = 9234\nEr = 0.30
        k = 0.010\nkd = 0.008\nu_kmh = 90\ntau = 0.2\nT_prev = 0.5
        m = 1400\nJ = 2100\na1 = 1.2\na2 = 1.4
    ";

    #[test]
    fn parses_and_converts_speed() {
        let s = VehicleScenario::parse(UN).unwrap();
        assert!((s.u - 25.0).abs() < 1e-12);
        assert!((s.preview_distance() - 12.5).abs() < 1e-12);
        assert_eq!(s.rear.b, 18.75);
    }

    #[test]
    fn round_trips_through_text() {
        let s = VehicleScenario::parse(UN).unwrap();
        let t = VehicleScenario::parse(&s.to_text()).unwrap();
        assert!((t.u - s.u).abs() < 1e-12);
        assert_eq!(t.front, s.front);
    }

    #[test]
    fn missing_key_is_named() {
        let text = UN.replace("kd = 0.008", "");
        assert_eq!(
            VehicleScenario::parse(&text).unwrap_err(),
            ScenarioError::Missing("kd".into())
        );
        assert_eq!(
            VehicleScenario::parse(&text).unwrap_err().to_string(),
            "missing key `kd`"
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            VehicleScenario::parse(&UN.replace("m = 1400", "m = heavy")),
            Err(ScenarioError::NotANumber { .. })
        ));
        assert!(matches!(
            VehicleScenario::parse(&UN.replace("tau = 0.2", "tau = -0.2")),
            Err(ScenarioError::OutOfRange { .. })
        ));
        assert!(matches!(
            VehicleScenario::parse(&format!("{UN}\nspeed = 3")),
            Err(ScenarioError::Unknown(_))
        ));
        assert!(matches!(
            VehicleScenario::parse(&format!("{UN}\nk = 3")),
            Err(ScenarioError::Duplicate { .. })
        ));
        assert!(matches!(parse_key_values("just words"), Err(ScenarioError::Syntax { line: 1 })));
    }
}
