//! The large Heisenberg group G(H, alpha), its partial composition, and
//! functorial maps between tori.

pub mod element;
pub mod morphism;

pub use element::{
    compose, double_sided, groupoid_inverse, heis_act, heis_mul, psi_dn, representatives, same_class, twist,
    HeisElement, HeisRaw,
};
pub use morphism::{heis_transport, morphism_new, morphism_pullback, TorusMorphism};
