// Frozen output of tests/oracle/high_precision.py (60-digit mpmath).
#![allow(clippy::excessive_precision, dead_code)]

pub const KAPLAN_1E9_1E10: f64 = 2.419651819169177476466309;
pub const KAPLAN_AT_SCALE_CONSTANTS: f64 = 1.074004471620124336272993;
pub const HOFFMANN_70B_1T4: f64 = 1.93664547055871726910271;
pub const FRANTAR_85M_65B_S0875: f64 = 1.604605927509400873542367;
pub const ABNAR_1B_100B_S098: f64 = 2.680662202488418965858232;
pub const GENERALIZED_1B_20B_S09: f64 = 2.422662319541359601403057;
pub const REFORMAT_B: f64 = 62.27107533082415586421821;
