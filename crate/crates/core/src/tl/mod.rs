//! Temperley-Lieb diagram calculus.

pub mod diagram;
pub mod gram;
pub mod jw;
pub mod morphism;

pub use diagram::{catalan, TlDiagram};
pub use gram::{
    embed, embed_left_inverse, gram_corank, gram_matrix, gram_matrix_f64, radical_basis, signature_scan, special_signature,
    GradeSignature, SignatureScan, SpecialSignature,
};
pub use jw::{jones_wenzl, jones_wenzl_exact, JwProjector};
pub use morphism::TlMorphism;

/// All diagrams of Hom(m, n).
pub fn enumerate_diagrams(m: usize, n: usize) -> Vec<TlDiagram> {
    TlDiagram::enumerate(m, n)
}
