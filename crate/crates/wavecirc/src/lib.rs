//! Wavelet filter banks as circuits of local unitary and invertible gates.

pub mod analysis;
pub mod boundary;
pub mod circuits;
pub mod construction;
pub mod design;
pub mod fixtures;
pub mod gates;
pub mod numfmt;
pub mod transform;
