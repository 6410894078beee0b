use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DeformationMatrix, TorusElement};
use crate::error::{DeformError, Result};

#[derive(Serialize, Deserialize)]
struct Coeff {
    k: Vec<i64>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct Wire {
    n: usize,
    theta_upper: Vec<f64>,
    coeffs: Vec<Coeff>,
}

pub fn element_to_json(e: &TorusElement) -> String {
    let wire = Wire {
        n: e.n(),
        theta_upper: e.theta().upper().to_vec(),
        coeffs: e.iter().map(|(k, c)| Coeff { k: k.to_vec(), re: c.re, im: c.im }).collect(),
    };
    serde_json::to_string(&wire).expect("plain data serializes")
}

pub fn element_from_json(s: &str) -> Result<TorusElement> {
    let wire: Wire = serde_json::from_str(s).map_err(|e| DeformError::Format(e.to_string()))?;
    let theta = DeformationMatrix::from_upper(wire.n, wire.theta_upper)?;
    TorusElement::from_terms(
        theta,
        wire.coeffs.into_iter().map(|c| (c.k, Complex64::new(c.re, c.im))),
    )
}
