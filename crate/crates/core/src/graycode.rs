//! Binary and reflected Gray codes, and the rotation folding that assigns a
//! point of the cone `0 <= x2 <= x1` to one of `2^ν` angular slices.

use std::f64::consts::FRAC_PI_4;

use crate::error::GrayError;

/// Bits, most significant first.
pub type Code = Vec<u8>;

fn check(i: usize, nu: usize) -> Result<(), GrayError> {
    if nu == 0 {
        return Err(GrayError::Empty);
    }
    if nu < usize::BITS as usize && i >> nu != 0 {
        return Err(GrayError::Range { i, nu });
    }
    Ok(())
}

/// Big-endian binary digits: `i = Σ_j 2^(ν−j) β_j`.
pub fn binarize(i: usize, nu: usize) -> Result<Code, GrayError> {
    check(i, nu)?;
    Ok((0..nu).map(|j| ((i >> (nu - 1 - j)) & 1) as u8).collect())
}

pub fn from_bits(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

/// `α_1 = β_1`, `α_j = β_j ⊕ β_(j−1)`.
pub fn gray(i: usize, nu: usize) -> Result<Code, GrayError> {
    binarize(i ^ (i >> 1), nu)
}

pub fn gray_inverse(code: &[u8]) -> Result<usize, GrayError> {
    if code.is_empty() {
        return Err(GrayError::Empty);
    }
    let mut acc = 0u8;
    let bits: Vec<u8> = code
        .iter()
        .map(|&a| {
            acc ^= a & 1;
            acc
        })
        .collect();
    Ok(from_bits(&bits))
}

/// One-based bit positions `{1, …, ĵ−1}` where `ĵ` starts the trailing run of
/// zeros in the binary expansion of the slice index. Empty for slice 0.
pub fn strengthened_support(code: &[u8]) -> Result<Vec<usize>, GrayError> {
    let i = gray_inverse(code)?;
    let beta = binarize(i, code.len())?;
    let last_one = beta.iter().rposition(|&b| b == 1);
    Ok(match last_one {
        None => Vec::new(),
        Some(p) => (1..=p + 1).collect(),
    })
}

/// Rotation angle of stage `j` (one-based): `π / (4·2^j)`.
pub fn theta(j: usize) -> f64 {
    FRAC_PI_4 / (1u64 << j) as f64
}

/// Width of each of the `2^ν` slices of `[0, π/4]`.
pub fn slice_width(nu: usize) -> f64 {
    FRAC_PI_4 / (1u64 << nu) as f64
}

/// `Rot(θ)(ξ, η) = (cosθ ξ + sinθ η, −sinθ ξ + cosθ η)`.
pub fn rotate(xi: f64, eta: f64, th: f64) -> (f64, f64) {
    let (s, c) = th.sin_cos();
    (c * xi + s * eta, -s * xi + c * eta)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliceInfo {
    pub index: usize,
    pub code: Code,
    /// Folded point `(ξ_ν, η_ν)`, at an angle in `[0, π/(4·2^ν)]`.
    pub folded: (f64, f64),
}

/// Folds `(x1, x2)` through `ν` rotations with reflections; bit `j` is set
/// when stage `j` reflected (`η̃_j < 0`). Slice 0 holds angle π/4.
pub fn slice_index(x1: f64, x2: f64, nu: usize) -> Result<SliceInfo, GrayError> {
    if nu == 0 {
        return Err(GrayError::Empty);
    }
    if !(x2 >= 0.0 && x2 <= x1 && x1 > 0.0) {
        return Err(GrayError::Domain(x1, x2));
    }
    let (mut xi, mut eta) = (x1, x2);
    let mut code = Vec::with_capacity(nu);
    for j in 1..=nu {
        let (a, b) = rotate(xi, eta, theta(j));
        code.push(u8::from(b < 0.0));
        xi = a;
        eta = b.abs();
    }
    let index = gray_inverse(&code)?;
    Ok(SliceInfo {
        index,
        code,
        folded: (xi, eta),
    })
}

/// Angle range `[lo, hi]` of slice `i` in the original cone.
pub fn slice_angles(i: usize, nu: usize) -> (f64, f64) {
    let w = slice_width(nu);
    (FRAC_PI_4 - (i + 1) as f64 * w, FRAC_PI_4 - i as f64 * w)
}

/// Whether folded angle 0 corresponds to the low-angle end of slice `i`.
pub fn folded_zero_is_low(i: usize, nu: usize) -> bool {
    let (lo, hi) = slice_angles(i, nu);
    let probe = lo + 0.25 * (hi - lo);
    let info = slice_index(probe.cos(), probe.sin(), nu).expect("probe lies in the cone");
    let folded = info.folded.1.atan2(info.folded.0);
    folded < 0.5 * slice_width(nu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_codes() {
        assert_eq!(binarize(4, 3).unwrap(), vec![1, 0, 0]);
        assert_eq!(binarize(6, 3).unwrap(), vec![1, 1, 0]);
        assert_eq!(gray(4, 3).unwrap(), vec![1, 1, 0]);
        assert_eq!(gray(6, 3).unwrap(), vec![1, 0, 1]);
        assert_eq!(gray(7, 3).unwrap(), vec![1, 0, 0]);
        assert!(gray(8, 3).is_err());
        assert!(binarize(0, 0).is_err());
    }

    #[test]
    fn supports() {
        assert!(strengthened_support(&[0, 0, 0]).unwrap().is_empty());
        assert_eq!(strengthened_support(&gray(4, 3).unwrap()).unwrap(), vec![1]);
        assert_eq!(strengthened_support(&[1, 1, 1]).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn extreme_angles() {
        let top = slice_index(1.0, 1.0, 3).unwrap();
        assert_eq!(top.index, 0);
        assert_eq!(top.code, vec![0, 0, 0]);
        let bottom = slice_index(1.0, 0.0, 3).unwrap();
        assert_eq!(bottom.index, 7);
        assert_eq!(bottom.code, vec![1, 0, 0]);
        assert!(slice_index(1.0, 2.0, 3).is_err());
    }

    #[test]
    fn folding_is_an_isometry_of_each_slice() {
        for nu in 1..6 {
            let w = slice_width(nu);
            for i in 0..(1 << nu) {
                let (lo, _) = slice_angles(i, nu);
                let low = folded_zero_is_low(i, nu);
                for s in [0.1, 0.5, 0.9] {
                    let ang = lo + s * w;
                    let info = slice_index(2.0 * ang.cos(), 2.0 * ang.sin(), nu).unwrap();
                    assert_eq!(info.index, i);
                    let f = info.folded.1.atan2(info.folded.0);
                    let expect = if low { s * w } else { (1.0 - s) * w };
                    assert!((f - expect).abs() < 1e-12);
                    assert!((info.folded.0.hypot(info.folded.1) - 2.0).abs() < 1e-12);
                }
            }
        }
    }
}
