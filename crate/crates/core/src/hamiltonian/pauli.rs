//! Exact 16×16 comparison of the box and dual-box projectors with their
//! Pauli-polynomial forms.
//!
//! Basis order: bond 0 (the marked bond) is the most significant qubit, and
//! index 0 of each qubit is `|+⟩`, so σ_z = diag(1, −1).

use serde::Serialize;

use crate::error::Result;
use crate::scalar::{Backend, Field, Ring, Scalar};

type Mat = Vec<Vec<Scalar>>;

fn zeros(n: usize, b: Backend) -> Mat {
    vec![vec![b.zero(); n]; n]
}

fn identity(b: Backend) -> Mat {
    vec![vec![b.one(), b.zero()], vec![b.zero(), b.one()]]
}

fn sigma_z(b: Backend) -> Mat {
    vec![vec![b.one(), b.zero()], vec![b.zero(), b.from_int(-1)]]
}

fn sigma_x(b: Backend) -> Mat {
    vec![vec![b.zero(), b.one()], vec![b.one(), b.zero()]]
}

fn add(a: &Mat, c: &Mat) -> Mat {
    a.iter().zip(c).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x.add(y)).collect()).collect()
}

fn scale(a: &Mat, s: &Scalar) -> Mat {
    a.iter().map(|r| r.iter().map(|x| x.mul(s)).collect()).collect()
}

fn kron(a: &Mat, c: &Mat, b: Backend) -> Mat {
    let (n, m) = (a.len(), c.len());
    let mut out = zeros(n * m, b);
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    out[i * m + k][j * m + l] = a[i][j].mul(&c[k][l]);
                }
            }
        }
    }
    out
}

/// Outer product v vᵀ of a vector given as (basis index, coefficient).
fn projector(terms: &[(usize, Scalar)], b: Backend) -> Mat {
    let mut out = zeros(16, b);
    for (i, x) in terms {
        for (j, y) in terms {
            out[*i][*j] = out[*i][*j].add(&x.mul(y));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct PauliDisplay {
    pub name: &'static str,
    /// The printed polynomial equals the projector.
    pub equal: bool,
    /// The polynomial with the identified correction applied equals it.
    pub corrected_equal: bool,
    pub correction: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct PauliCheck {
    pub ell: u32,
    pub displays: Vec<PauliDisplay>,
}

impl PauliCheck {
    pub fn all_equal(&self) -> bool {
        self.displays.iter().all(|d| d.equal)
    }
}

/// Compares the box projector (|−+++⟩ − d⁻¹|++++⟩) and the dual-box projector
/// (|+−−−⟩ − d⁻¹|−−−−⟩) with the four printed Pauli polynomials.
pub fn pauli_expand_check(ell: u32) -> Result<PauliCheck> {
    let b = Backend::Special(ell);
    let d = b.d();
    let inv_d = d.inv().expect("d > 0");
    let inv_d2 = inv_d.mul(&inv_d);
    let q = |num: i128, den: i128| b.from_int(num).mul(&b.from_int(den).inv().unwrap());
    let (i2, z, x) = (identity(b), sigma_z(b), sigma_x(b));
    let i_plus_z = add(&i2, &z);
    let i_minus_z = add(&i2, &scale(&z, &b.from_int(-1)));
    let cube = |m: &Mat| kron(&kron(m, m, b), m, b);

    // |+⟩ has index 0 per qubit; bond 0 is the high bit.
    let box_p = projector(&[(0b1000, b.one()), (0b0000, inv_d.neg())], b);
    let dual_p = projector(&[(0b0111, b.one()), (0b1111, inv_d.neg())], b);

    // [(1/16)(I − σz) − (1/(8d))σx + (1/(16d²))(I + σz)]
    let factor = |minus_first: bool| {
        let (first, last) = if minus_first { (&i_minus_z, &i_plus_z) } else { (&i_plus_z, &i_minus_z) };
        add(&add(&scale(first, &q(1, 16)), &scale(&x, &inv_d.mul(&q(-1, 8)))), &scale(last, &inv_d2.mul(&q(1, 16))))
    };
    // (1/16)[(d²+1)/d² I + s·(1−d²)/d² σz − c σx]
    let expanded = |z_sign: i128, x_coeff: &Scalar| {
        let one = b.one();
        let d2 = d.mul(&d);
        let ci = d2.add(&one).mul(&inv_d2);
        let cz = one.sub(&d2).mul(&inv_d2).mul(&b.from_int(z_sign));
        let m = add(&add(&scale(&i2, &ci), &scale(&z, &cz)), &scale(&x, &x_coeff.neg()));
        scale(&m, &q(1, 16))
    };
    let two_over_d2 = inv_d2.mul(&b.from_int(2));
    let two_over_d = inv_d.mul(&b.from_int(2));

    let product_box = kron(&factor(true), &cube(&i_plus_z), b);
    let product_dual = kron(&factor(true), &cube(&i_minus_z), b);
    let product_dual_fixed = kron(&factor(false), &cube(&i_minus_z), b);
    let expanded_box = kron(&expanded(1, &two_over_d2), &cube(&i_plus_z), b);
    let expanded_box_fixed = kron(&expanded(1, &two_over_d), &cube(&i_plus_z), b);
    let expanded_dual = kron(&expanded(-1, &two_over_d2), &cube(&i_minus_z), b);
    let expanded_dual_fixed = kron(&expanded(-1, &two_over_d), &cube(&i_minus_z), b);

    let displays = vec![
        PauliDisplay { name: "box, factored", equal: product_box == box_p, corrected_equal: product_box == box_p, correction: "none" },
        PauliDisplay {
            name: "dual box, factored",
            equal: product_dual == dual_p,
            corrected_equal: product_dual_fixed == dual_p,
            correction: "marked-bond factor with I+σz and I−σz exchanged",
        },
        PauliDisplay {
            name: "box, expanded",
            equal: expanded_box == box_p,
            corrected_equal: expanded_box_fixed == box_p,
            correction: "σx coefficient 2/d instead of 2/d²",
        },
        PauliDisplay {
            name: "dual box, expanded",
            equal: expanded_dual == dual_p,
            corrected_equal: expanded_dual_fixed == dual_p,
            correction: "σx coefficient 2/d instead of 2/d²",
        },
    ];
    Ok(PauliCheck { ell, displays })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_box_factored_form_is_exact() {
        for ell in [2, 3] {
            let c = pauli_expand_check(ell).unwrap();
            assert!(c.displays[0].equal);
            assert!(c.displays.iter().all(|d| d.corrected_equal), "{c:?}");
        }
    }

    #[test]
    fn test_printed_forms_that_differ() {
        let c = pauli_expand_check(2).unwrap();
        let eq: Vec<bool> = c.displays.iter().map(|d| d.equal).collect();
        assert_eq!(eq, vec![true, false, false, false]);
        assert!(!c.all_equal());
    }

    #[test]
    fn test_projector_trace() {
        // Tr(v vᵀ) = 1 + 1/d².
        let b = Backend::Special(3);
        let inv = b.d().inv().unwrap();
        let p = projector(&[(8, b.one()), (0, inv.neg())], b);
        let tr = (0..16).fold(b.zero(), |acc, i| acc.add(&p[i][i]));
        assert_eq!(tr, b.one().add(&inv.mul(&inv)));
    }
}
