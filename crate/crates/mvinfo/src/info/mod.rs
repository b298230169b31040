//! Exact information-theoretic computation on finite systems: joint
//! tables, encodings, entropy/MI reports, likelihood partitions and the
//! definition/lemma/theorem verifiers.

pub mod measures;
pub mod partition;
pub mod table;
pub mod theorems;

pub use measures::{info_report, Axis, ExtendedJoint, InfoReport};
pub use partition::{
    check_sufficiency, enumerate_partitions, minimal_sufficient_partition, mi_views, verify_dpi,
    verify_minimality, MinimalityReport, MAX_ENUM_ALPHABET, ROW_TOL, SUFFICIENCY_TOL,
};
pub use table::{apply_encoding, Encoding, JointTable, MAX_ALPHABET};
pub use theorems::{
    bayes_error, gamma_threshold, gaussian_mi, verify_lemma1, verify_theorem1, verify_theorem2,
    verify_theorem3, GaussianScenario, Lemma1Report, NoiseFamily, Theorem1Report, Theorem2Report,
    Theorem3Report,
};
