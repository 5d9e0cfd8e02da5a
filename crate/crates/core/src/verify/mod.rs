//! Empirical certification of supremum estimates.
//!
//! The constants in estimates of Moser type are existential, so every check
//! here extracts the smallest constant that a computed profile or family
//! requires and records it together with the norms it was derived from.

mod certificate;
mod chain;
mod embedding;
mod local;
mod scaling;

pub use certificate::{
    certify_family, global_certificate, signed_part_certificates, Branch, BoundCertificate, FamilySummary,
};
pub use chain::{reverse_holder_chain, ChainReport};
pub use embedding::{coercivity_check, embedding_norm, CoercivityReport, EmbeddingReport, FamilyBest, TrialFamily};
pub use local::{local_estimate_check, structure_audit, LocalEstimateReport, StructureAudit};
pub use scaling::{apriori_ball_check, scaling_refinement_check, AprioriReport, BallProblem, ScalingReport};
