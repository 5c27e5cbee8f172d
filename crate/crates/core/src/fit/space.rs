use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::{CoefficientKind, CoefficientSet, LawId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    #[serde(alias = "logarithmic")]
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub scale: Scale,
}

impl Dimension {
    /// Maps `u` in `[0, 1]` onto the dimension.
    pub fn from_unit(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        // endpoints are returned exactly
        if u == 0.0 {
            return self.lower;
        }
        if u == 1.0 {
            return self.upper;
        }
        match self.scale {
            Scale::Linear => self.lower + u * (self.upper - self.lower),
            Scale::Log => {
                let (a, b) = (self.lower.ln(), self.upper.ln());
                (a + u * (b - a)).exp().clamp(self.lower, self.upper)
            }
        }
    }

    pub fn to_unit(&self, v: f64) -> f64 {
        let u = match self.scale {
            Scale::Linear => (v - self.lower) / (self.upper - self.lower),
            Scale::Log => (v.ln() - self.lower.ln()) / (self.upper.ln() - self.lower.ln()),
        };
        u.clamp(0.0, 1.0)
    }
}

#[derive(Deserialize, Serialize)]
#[serde(untagged, deny_unknown_fields)]
enum Bounds {
    Range { lower: f64, upper: f64, scale: Scale },
    Fixed { value: f64 },
}

/// One coefficient of a search space: searched within bounds, or held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Free(Dimension),
    Fixed { name: String, value: f64 },
}

impl Entry {
    pub fn name(&self) -> &str {
        match self {
            Entry::Free(d) => &d.name,
            Entry::Fixed { name, .. } => name,
        }
    }
}

/// Bounds for every coefficient of one law, in the law's canonical order.
/// Coefficients may be held fixed; optimizers move only the free ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    law: LawId,
    entries: Vec<Entry>,
}

impl SearchSpace {
    /// A space where every coefficient is free.
    pub fn new(law: LawId, dims: Vec<Dimension>) -> Result<Self> {
        Self::with_entries(law, dims.into_iter().map(Entry::Free).collect())
    }

    pub fn with_entries(law: LawId, entries: Vec<Entry>) -> Result<Self> {
        let names = law.coefficient_names();
        for e in &entries {
            if !names.contains(&e.name()) {
                return Err(Error::SearchSpace(format!("'{}' is not a coefficient of {law}", e.name())));
            }
            match e {
                Entry::Free(d) => {
                    if !(d.lower.is_finite() && d.upper.is_finite() && d.lower < d.upper) {
                        return Err(Error::SearchSpace(format!(
                            "'{}' needs finite bounds with lower < upper, got [{}, {}]",
                            d.name, d.lower, d.upper
                        )));
                    }
                    if d.scale == Scale::Log && d.lower <= 0.0 {
                        return Err(Error::SearchSpace(format!(
                            "'{}' is log-scaled and needs a positive lower bound, got {}",
                            d.name, d.lower
                        )));
                    }
                }
                Entry::Fixed { name, value } if !value.is_finite() => {
                    return Err(Error::SearchSpace(format!("fixed '{name}' must be finite")));
                }
                Entry::Fixed { .. } => {}
            }
        }
        let mut ordered = Vec::with_capacity(names.len());
        for name in names {
            let mut matching = entries.iter().filter(|e| e.name() == *name);
            match (matching.next(), matching.next()) {
                (Some(e), None) => ordered.push(e.clone()),
                (None, _) => return Err(Error::SearchSpace(format!("missing coefficient '{name}'"))),
                (Some(_), Some(_)) => {
                    return Err(Error::SearchSpace(format!("coefficient '{name}' appears twice")))
                }
            }
        }
        if !ordered.iter().any(|e| matches!(e, Entry::Free(_))) {
            return Err(Error::SearchSpace("no free coefficient to search".into()));
        }
        Ok(SearchSpace { law, entries: ordered })
    }

    /// `[v/10, 10 v]` around each coefficient of `center`: log scale for
    /// constants, linear for exponents.
    pub fn default_for(center: &CoefficientSet) -> Self {
        let law = center.law();
        let dims = law
            .coefficient_names()
            .iter()
            .zip(law.coefficient_kinds())
            .zip(center.values())
            .map(|((name, kind), v)| {
                let (a, b) = (v / 10.0, v * 10.0);
                let (lower, upper) = if a <= b { (a, b) } else { (b, a) };
                let scale = match kind {
                    CoefficientKind::Scale if lower > 0.0 => Scale::Log,
                    _ => Scale::Linear,
                };
                Dimension { name: name.to_string(), lower, upper, scale }
            })
            .collect();
        SearchSpace::new(law, dims).expect("published coefficients are non-zero")
    }

    /// Parses `{coefficient: {lower, upper, scale} | {value}}`.
    pub fn from_json(law: LawId, text: &str) -> Result<Self> {
        let map: BTreeMap<String, Bounds> = serde_json::from_str(text)?;
        let entries = map
            .into_iter()
            .map(|(name, b)| match b {
                Bounds::Range { lower, upper, scale } => Entry::Free(Dimension { name, lower, upper, scale }),
                Bounds::Fixed { value } => Entry::Fixed { name, value },
            })
            .collect();
        SearchSpace::with_entries(law, entries)
    }

    pub fn to_json(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> = self
            .entries
            .iter()
            .map(|e| {
                let b = match e {
                    Entry::Free(d) => Bounds::Range { lower: d.lower, upper: d.upper, scale: d.scale },
                    Entry::Fixed { value, .. } => Bounds::Fixed { value: *value },
                };
                (e.name().to_string(), serde_json::to_value(b).unwrap())
            })
            .collect();
        serde_json::to_string_pretty(&map).unwrap()
    }

    pub fn law(&self) -> LawId {
        self.law
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// The searched dimensions, in canonical order.
    pub fn dims(&self) -> impl Iterator<Item = &Dimension> + Clone {
        self.entries.iter().filter_map(|e| match e {
            Entry::Free(d) => Some(d),
            Entry::Fixed { .. } => None,
        })
    }

    /// Number of free dimensions.
    pub fn len(&self) -> usize {
        self.dims().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Full coefficient vector from a point of the free unit hypercube.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        let mut free = u.iter();
        self.entries
            .iter()
            .map(|e| match e {
                Entry::Free(d) => d.from_unit(*free.next().expect("one unit coordinate per free dimension")),
                Entry::Fixed { value, .. } => *value,
            })
            .collect()
    }

    /// Free-dimension unit coordinates of a full coefficient vector.
    pub fn to_unit(&self, values: &[f64]) -> Vec<f64> {
        self.entries
            .iter()
            .zip(values)
            .filter_map(|(e, &v)| match e {
                Entry::Free(d) => Some(d.to_unit(v)),
                Entry::Fixed { .. } => None,
            })
            .collect()
    }

    pub fn contains(&self, values: &[f64]) -> bool {
        values.len() == self.entries.len()
            && self.entries.iter().zip(values).all(|(e, &v)| match e {
                Entry::Free(d) => d.lower <= v && v <= d.upper,
                Entry::Fixed { value, .. } => v == *value,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::published_coefficients;

    #[test]
    fn default_space_brackets_published() {
        for law in LawId::ALL {
            let center = published_coefficients(law);
            let space = SearchSpace::default_for(&center);
            assert_eq!(space.len(), center.values().len());
            assert!(space.contains(&center.values()));
        }
        let s = SearchSpace::default_for(&published_coefficients(LawId::Abnar));
        let lambda = s.dims().find(|d| d.name == "lambda").unwrap();
        assert_eq!(lambda.scale, Scale::Linear);
        assert!(lambda.lower < lambda.upper && lambda.upper < 0.0);
        let a = s.dims().find(|d| d.name == "a").unwrap();
        assert_eq!(a.scale, Scale::Log);
    }

    #[test]
    fn json_round_trip_and_reordering() {
        let text = r#"{
            "beta": {"lower": 0.1, "upper": 0.5, "scale": "linear"},
            "alpha": {"lower": 0.1, "upper": 0.5, "scale": "linear"},
            "e": {"lower": 1, "upper": 3, "scale": "log"},
            "a": {"lower": 100, "upper": 1000, "scale": "logarithmic"},
            "b": {"lower": 100, "upper": 1000, "scale": "log"}
        }"#;
        let s = SearchSpace::from_json(LawId::Hoffmann, text).unwrap();
        let names: Vec<&str> = s.dims().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["e", "a", "b", "alpha", "beta"]);
        assert_eq!(SearchSpace::from_json(LawId::Hoffmann, &s.to_json()).unwrap(), s);
    }

    #[test]
    fn rejects_invalid_spaces() {
        let dim = |name: &str, lower, upper, scale| Dimension { name: name.into(), lower, upper, scale };
        let full = |extra: Vec<Dimension>| {
            let mut v = vec![
                dim("e", 1.0, 2.0, Scale::Log),
                dim("a", 1.0, 2.0, Scale::Log),
                dim("b", 1.0, 2.0, Scale::Log),
                dim("alpha", 0.1, 1.0, Scale::Linear),
            ];
            v.extend(extra);
            v
        };
        assert!(SearchSpace::new(LawId::Hoffmann, full(vec![])).is_err());
        assert!(SearchSpace::new(LawId::Hoffmann, full(vec![dim("beta", 0.5, 0.1, Scale::Linear)])).is_err());
        assert!(SearchSpace::new(LawId::Hoffmann, full(vec![dim("beta", -1.0, 1.0, Scale::Log)])).is_err());
        assert!(SearchSpace::new(
            LawId::Hoffmann,
            full(vec![dim("beta", 0.1, 1.0, Scale::Linear), dim("beta", 0.1, 1.0, Scale::Linear)])
        )
        .is_err());
        assert!(SearchSpace::new(
            LawId::Hoffmann,
            full(vec![dim("beta", 0.1, 1.0, Scale::Linear), dim("gamma", 0.1, 1.0, Scale::Linear)])
        )
        .is_err());
        assert!(SearchSpace::new(LawId::Hoffmann, full(vec![dim("beta", 0.1, 1.0, Scale::Linear)])).is_ok());
    }

    #[test]
    fn fixed_entries() {
        let text = r#"{
            "e": {"value": 1.69}, "a": {"value": 406.4}, "b": {"value": 410.7},
            "alpha": {"lower": 0.3, "upper": 0.4, "scale": "linear"},
            "beta": {"value": 0.28}
        }"#;
        let s = SearchSpace::from_json(LawId::Hoffmann, text).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.from_unit(&[0.0]), vec![1.69, 406.4, 410.7, 0.3, 0.28]);
        assert_eq!(s.to_unit(&[1.69, 406.4, 410.7, 0.4, 0.28]), vec![1.0]);
        assert_eq!(SearchSpace::from_json(LawId::Hoffmann, &s.to_json()).unwrap(), s);
        let all_fixed = r#"{"e": {"value": 1}, "a": {"value": 1}, "b": {"value": 1},
            "alpha": {"value": 1}, "beta": {"value": 1}}"#;
        assert!(SearchSpace::from_json(LawId::Hoffmann, all_fixed).is_err());
    }

    #[test]
    fn unit_mapping_inverts() {
        let d = Dimension { name: "a".into(), lower: 1.0, upper: 1e4, scale: Scale::Log };
        assert_eq!(d.from_unit(0.0), 1.0);
        assert_eq!(d.from_unit(1.0), 1e4);
        assert!((d.from_unit(0.5) - 100.0).abs() < 1e-9);
        assert!((d.to_unit(100.0) - 0.5).abs() < 1e-12);
    }
}
