//! Coefficient records for each law and their published values.
//!
//! Each record serializes with the symbol names of its source table, so
//! symbols shared between laws (`gamma`, `c`, ...) never alias.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawId {
    Kaplan,
    Hoffmann,
    Frantar,
    FrantarReform,
    Abnar,
    Generalized,
}

impl LawId {
    pub const ALL: [LawId; 6] = [
        LawId::Kaplan,
        LawId::Hoffmann,
        LawId::Frantar,
        LawId::FrantarReform,
        LawId::Abnar,
        LawId::Generalized,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LawId::Kaplan => "kaplan",
            LawId::Hoffmann => "hoffmann",
            LawId::Frantar => "frantar",
            LawId::FrantarReform => "frantar_reform",
            LawId::Abnar => "abnar",
            LawId::Generalized => "generalized",
        }
    }

    /// Whether the law has a sparsity argument. Dense laws ignore it.
    pub fn uses_sparsity(self) -> bool {
        !matches!(self, LawId::Kaplan | LawId::Hoffmann)
    }

    /// Coefficient names in canonical order.
    pub fn coefficient_names(self) -> &'static [&'static str] {
        match self {
            LawId::Kaplan => Kaplan::NAMES,
            LawId::Hoffmann => Hoffmann::NAMES,
            LawId::Frantar => Frantar::NAMES,
            LawId::FrantarReform => FrantarReform::NAMES,
            LawId::Abnar => Abnar::NAMES,
            LawId::Generalized => Generalized::NAMES,
        }
    }

    pub fn coefficient_kinds(self) -> &'static [CoefficientKind] {
        match self {
            LawId::Kaplan => Kaplan::KINDS,
            LawId::Hoffmann => Hoffmann::KINDS,
            LawId::Frantar => Frantar::KINDS,
            LawId::FrantarReform => FrantarReform::KINDS,
            LawId::Abnar => Abnar::KINDS,
            LawId::Generalized => Generalized::KINDS,
        }
    }
}

impl fmt::Display for LawId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LawId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LawId::ALL
            .into_iter()
            .find(|law| law.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown law '{s}' (expected one of kaplan, hoffmann, frantar, frantar_reform, abnar, generalized)"
                ))
            })
    }
}

/// Role of a coefficient, used for validation and default search spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientKind {
    /// Multiplicative or additive constant; searched on a log scale.
    Scale,
    /// Power-law exponent; must be positive.
    Exponent,
    /// Exponent allowed to take either sign (Abnar's lambda).
    SignedExponent,
}

macro_rules! coefficient_record {
    (
        $(#[$meta:meta])*
        $name:ident {
            $( $(#[$fmeta:meta])* $field:ident = $json:literal : $kind:ident, )+
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $( $(#[$fmeta])* #[serde(rename = $json)] pub $field: f64, )+
        }

        impl $name {
            pub const NAMES: &'static [&'static str] = &[$($json),+];
            pub const KINDS: &'static [CoefficientKind] = &[$(CoefficientKind::$kind),+];

            pub fn values(&self) -> Vec<f64> {
                vec![$(self.$field),+]
            }

            fn from_slice(values: &[f64]) -> Self {
                let mut it = values.iter().copied();
                $name { $($field: it.next().expect("length checked by caller")),+ }
            }
        }
    };
}

coefficient_record! {
    /// `L = [(N_C/N)^(alpha_N/alpha_D) + D_C/D]^alpha_D`
    Kaplan {
        alpha_n = "alpha_N": Exponent,
        alpha_d = "alpha_D": Exponent,
        n_c = "N_C": Scale,
        d_c = "D_C": Scale,
    }
}

coefficient_record! {
    /// `L = e + a/N^alpha + b/D^beta`
    Hoffmann {
        e = "e": Scale,
        a = "a": Scale,
        b = "b": Scale,
        alpha = "alpha": Exponent,
        beta = "beta": Exponent,
    }
}

coefficient_record! {
    /// `L = (a_S (1-S)^b_S + c_S) (1/N)^b_N + (a_D/D)^b_D + c`, N nonzero parameters.
    Frantar {
        a_s = "a_S": Scale,
        b_s = "b_S": Exponent,
        c_s = "c_S": Scale,
        b_n = "b_N": Exponent,
        a_d = "a_D": Scale,
        b_d = "b_D": Exponent,
        c = "c": Scale,
    }
}

coefficient_record! {
    /// `L = e + (a_S (1-S)^b_S + c_S)/N^alpha + b/D^beta`
    FrantarReform {
        a_s = "a_S": Scale,
        b_s = "b_S": Exponent,
        c_s = "c_S": Scale,
        b = "b": Scale,
        alpha = "alpha": Exponent,
        beta = "beta": Exponent,
        e = "e": Scale,
    }
}

coefficient_record! {
    /// `L = e + a/N^alpha + b/D^beta + c/(1-S)^lambda + d/((1-S)^delta N^gamma)`,
    /// N active parameters. The `d` coefficient is stored as `d_coef`.
    Abnar {
        e = "e": Scale,
        a = "a": Scale,
        b = "b": Scale,
        c = "c": Scale,
        d_coef = "d": Scale,
        alpha = "alpha": Exponent,
        beta = "beta": Exponent,
        lambda = "lambda": SignedExponent,
        delta = "delta": Exponent,
        gamma = "gamma": Exponent,
    }
}

coefficient_record! {
    /// `L = e (1-S)^gamma + (a (1-S)^alpha + c S)/N^alpha + b/D^beta`,
    /// N active parameters.
    Generalized {
        e = "e": Scale,
        a = "a": Scale,
        b = "b": Scale,
        /// Sparsity factor.
        c = "c": Scale,
        alpha = "alpha": Exponent,
        beta = "beta": Exponent,
        /// Entropy adjustment exponent.
        gamma = "gamma": Exponent,
    }
}

impl Kaplan {
    pub const PUBLISHED: Kaplan = Kaplan { alpha_n: 0.076, alpha_d: 0.103, n_c: 6.4e13, d_c: 1.8e13 };
}

impl Hoffmann {
    pub const PUBLISHED: Hoffmann = Hoffmann { e: 1.69, a: 406.4, b: 410.7, alpha: 0.34, beta: 0.28 };
}

impl Frantar {
    pub const PUBLISHED: Frantar =
        Frantar { a_s: 16.8, b_s: 0.722, c_s: 45.0, b_n: 0.245, a_d: 6.90e8, b_d: 0.203, c: 0.651 };
}

impl FrantarReform {
    pub const PUBLISHED: FrantarReform =
        FrantarReform { a_s: 16.8, b_s: 0.722, c_s: 45.0, b: 62.271, alpha: 0.245, beta: 0.203, e: 0.651 };
}

impl Abnar {
    pub const PUBLISHED: Abnar = Abnar {
        e: 0.94,
        a: 16612.50,
        b: 5455.67,
        c: 0.4598,
        d_coef: 17.26,
        alpha: 0.5962,
        beta: 0.3954,
        lambda: -0.1666,
        delta: 0.1603,
        gamma: 0.1595,
    };
}

impl Generalized {
    pub const PUBLISHED: Generalized =
        Generalized { e: 1.69, a: 406.4, b: 410.7, c: 93.45, alpha: 0.34, beta: 0.28, gamma: 1e-2 };

    /// The parameter-term coefficient at sparsity `s`: `a (1-s)^alpha + c s`.
    pub fn effective_param_coefficient(&self, s: f64) -> f64 {
        self.a * (1.0 - s).powf(self.alpha) + self.c * s
    }

    pub fn dense_part(&self) -> Hoffmann {
        Hoffmann { e: self.e, a: self.a, b: self.b, alpha: self.alpha, beta: self.beta }
    }
}

/// Coefficients for one law, tagged by the law they belong to.
///
/// JSON form: `{"law": "<id>", "coefficients": {name: value, ...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", content = "coefficients", rename_all = "snake_case")]
pub enum CoefficientSet {
    Kaplan(Kaplan),
    Hoffmann(Hoffmann),
    Frantar(Frantar),
    FrantarReform(FrantarReform),
    Abnar(Abnar),
    Generalized(Generalized),
}

/// Published coefficients for `law`.
pub fn published_coefficients(law: LawId) -> CoefficientSet {
    match law {
        LawId::Kaplan => CoefficientSet::Kaplan(Kaplan::PUBLISHED),
        LawId::Hoffmann => CoefficientSet::Hoffmann(Hoffmann::PUBLISHED),
        LawId::Frantar => CoefficientSet::Frantar(Frantar::PUBLISHED),
        LawId::FrantarReform => CoefficientSet::FrantarReform(FrantarReform::PUBLISHED),
        LawId::Abnar => CoefficientSet::Abnar(Abnar::PUBLISHED),
        LawId::Generalized => CoefficientSet::Generalized(Generalized::PUBLISHED),
    }
}

impl CoefficientSet {
    pub fn law(&self) -> LawId {
        match self {
            CoefficientSet::Kaplan(_) => LawId::Kaplan,
            CoefficientSet::Hoffmann(_) => LawId::Hoffmann,
            CoefficientSet::Frantar(_) => LawId::Frantar,
            CoefficientSet::FrantarReform(_) => LawId::FrantarReform,
            CoefficientSet::Abnar(_) => LawId::Abnar,
            CoefficientSet::Generalized(_) => LawId::Generalized,
        }
    }

    pub fn names(&self) -> &'static [&'static str] {
        self.law().coefficient_names()
    }

    /// Coefficient values in the order of [`LawId::coefficient_names`].
    pub fn values(&self) -> Vec<f64> {
        match self {
            CoefficientSet::Kaplan(c) => c.values(),
            CoefficientSet::Hoffmann(c) => c.values(),
            CoefficientSet::Frantar(c) => c.values(),
            CoefficientSet::FrantarReform(c) => c.values(),
            CoefficientSet::Abnar(c) => c.values(),
            CoefficientSet::Generalized(c) => c.values(),
        }
    }

    pub fn from_values(law: LawId, values: &[f64]) -> Result<Self, Error> {
        let expected = law.coefficient_names().len();
        if values.len() != expected {
            return Err(Error::Coefficients(format!(
                "{law} takes {expected} coefficients, got {}",
                values.len()
            )));
        }
        Ok(match law {
            LawId::Kaplan => CoefficientSet::Kaplan(Kaplan::from_slice(values)),
            LawId::Hoffmann => CoefficientSet::Hoffmann(Hoffmann::from_slice(values)),
            LawId::Frantar => CoefficientSet::Frantar(Frantar::from_slice(values)),
            LawId::FrantarReform => CoefficientSet::FrantarReform(FrantarReform::from_slice(values)),
            LawId::Abnar => CoefficientSet::Abnar(Abnar::from_slice(values)),
            LawId::Generalized => CoefficientSet::Generalized(Generalized::from_slice(values)),
        })
    }

    /// Checks that every value is finite and every exponent positive.
    pub fn validate(&self) -> Result<(), Error> {
        let law = self.law();
        for ((name, kind), value) in
            law.coefficient_names().iter().zip(law.coefficient_kinds()).zip(self.values())
        {
            if !value.is_finite() {
                return Err(Error::Coefficients(format!("{law}.{name} is not finite")));
            }
            if *kind == CoefficientKind::Exponent && value <= 0.0 {
                return Err(Error::Coefficients(format!(
                    "{law}.{name} is an exponent and must be > 0, got {value}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("coefficient sets always serialize")
    }

    /// Parses and validates a coefficient document.
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let set: CoefficientSet = serde_json::from_str(text)?;
        set.validate()?;
        Ok(set)
    }
}

/// Published values as printed in their source tables, in canonical order.
/// Each literal parses to the corresponding `PUBLISHED` value.
pub fn published_literals(law: LawId) -> &'static [&'static str] {
    match law {
        LawId::Kaplan => &["0.076", "0.103", "6.4e13", "1.8e13"],
        LawId::Hoffmann => &["1.69", "406.4", "410.7", "0.34", "0.28"],
        LawId::Frantar => &["16.8", "0.722", "45", "0.245", "6.90e8", "0.203", "0.651"],
        LawId::FrantarReform => &["16.8", "0.722", "45", "62.271", "0.245", "0.203", "0.651"],
        LawId::Abnar => &[
            "0.94", "16612.50", "5455.67", "0.4598", "17.26", "0.5962", "0.3954", "-0.1666", "0.1603",
            "0.1595",
        ],
        LawId::Generalized => &["1.69", "406.4", "410.7", "93.45", "0.34", "0.28", "1e-2"],
    }
}

/// Rewrites pruning-law coefficients in the dense law's notation:
/// `c -> e`, `b_N -> alpha`, `b_D -> beta`, `a_D^b_D -> b`.
pub fn reformat_frantar(coeffs: &Frantar) -> FrantarReform {
    FrantarReform {
        a_s: coeffs.a_s,
        b_s: coeffs.b_s,
        c_s: coeffs.c_s,
        b: coeffs.a_d.powf(coeffs.b_d),
        alpha: coeffs.b_n,
        beta: coeffs.b_d,
        e: coeffs.c,
    }
}
