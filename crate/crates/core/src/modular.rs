//! Closed-form bookkeeping per level: label counts, the S-matrix, and the
//! even-sector rank.

use nalgebra::DMatrix;
use serde::Serialize;

/// Index convention for S_{y,x} = √(2/(ℓ+2)) sin(π·x·y/(ℓ+2)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SConvention {
    /// Arguments (x+1)(y+1): labels 0..ℓ.
    Shifted,
    /// Arguments x·y as written.
    Unshifted,
}

impl SConvention {
    pub fn name(&self) -> &'static str {
        match self {
            SConvention::Shifted => "shifted",
            SConvention::Unshifted => "unshifted",
        }
    }
}

pub fn s_entry(ell: u32, y: usize, x: usize, conv: SConvention) -> f64 {
    let k = ell as f64 + 2.0;
    let (a, b) = match conv {
        SConvention::Shifted => (x as f64 + 1.0, y as f64 + 1.0),
        SConvention::Unshifted => (x as f64, y as f64),
    };
    (2.0 / k).sqrt() * (std::f64::consts::PI * a * b / k).sin()
}

/// (ℓ+1)×(ℓ+1) S-matrix.
pub fn s_matrix(ell: u32, conv: SConvention) -> DMatrix<f64> {
    let n = ell as usize + 1;
    DMatrix::from_fn(n, n, |i, j| s_entry(ell, i, j, conv))
}

/// Restriction of the shifted S-matrix to even labels.
pub fn s_even(ell: u32) -> DMatrix<f64> {
    let idx: Vec<usize> = (0..=ell as usize).filter(|i| i % 2 == 0).collect();
    let s = s_matrix(ell, SConvention::Shifted);
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| s[(idx[i], idx[j])])
}

pub fn numeric_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let sv = m.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > tol * smax.max(1.0)).count()
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelData {
    pub ell: u32,
    pub label_count: usize,
    pub color_reversing_count: usize,
    pub specific_heat: usize,
    pub s_full: Vec<Vec<f64>>,
    pub s_even: Vec<Vec<f64>>,
    pub even_rank: usize,
    pub even_singular: bool,
    /// Rank of S_even ⊗ S_even.
    pub doubled_even_rank: usize,
    pub even_pair_count: usize,
    pub odd_pair_count: usize,
    /// Even labels whose S-row is proportional to the vacuum row.
    pub transparent_labels: Vec<usize>,
    /// Every transparent label has integer conformal weight, so the even
    /// sector becomes nondegenerate after condensing them.
    pub transparent_all_bosons: bool,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Conformal weight a(a+2)/(4(ℓ+2)) of label a.
pub fn conformal_weight(ell: u32, a: usize) -> f64 {
    (a * (a + 2)) as f64 / (4.0 * (ell as f64 + 2.0))
}

/// Even labels b with S_{b,c}/S_{0,c} = S_{b,0}/S_{0,0} for every even c.
pub fn transparent_even_labels(ell: u32) -> Vec<usize> {
    let se = s_even(ell);
    let n = se.nrows();
    (0..n)
        .filter(|&b| {
            let dim = se[(b, 0)] / se[(0, 0)];
            (0..n).all(|c| (se[(b, c)] - dim * se[(0, c)]).abs() < 1e-9)
        })
        .map(|b| 2 * b)
        .collect()
}

pub fn level_data(ell: u32) -> LevelData {
    let l = ell as usize;
    let se = s_even(ell);
    let even_rank = numeric_rank(&se, 1e-9);
    let doubled = se.kronecker(&se);
    let evens = (0..=l).filter(|x| x % 2 == 0).count();
    let odds = (0..=l).filter(|x| x % 2 == 1).count();
    let transparent = transparent_even_labels(ell);
    LevelData {
        ell,
        label_count: ceil_div(l + 1, 2).pow(2),
        color_reversing_count: ceil_div(l, 2).pow(2),
        specific_heat: ceil_div((l + 1) * (l + 1), 2),
        s_full: rows(&s_matrix(ell, SConvention::Shifted)),
        s_even: rows(&se),
        even_rank,
        even_singular: even_rank < se.nrows(),
        doubled_even_rank: numeric_rank(&doubled, 1e-9),
        even_pair_count: evens * evens,
        odd_pair_count: odds * odds,
        transparent_all_bosons: transparent.iter().all(|&a| {
            let h = conformal_weight(ell, a);
            (h - h.round()).abs() < 1e-12
        }),
        transparent_labels: transparent,
    }
}

pub fn level_table(ell_max: u32) -> Vec<LevelData> {
    assert!(ell_max <= 16, "level table is limited to ℓ ≤ 16");
    (1..=ell_max).map(level_data).collect()
}

/// Genus 1 returns the label count; higher genus evaluates the asymptotic
/// expression (2/√(ℓ+2))·sin(π/(ℓ+2))^χ with χ = 2 − 2g.
pub fn torus_dimension_estimate(ell: u32, genus: u32) -> f64 {
    assert!(genus >= 1, "genus must be at least 1");
    if genus == 1 {
        return level_data(ell).label_count as f64;
    }
    asymptotic_dimension(ell, genus)
}

pub fn asymptotic_dimension(ell: u32, genus: u32) -> f64 {
    let k = ell as f64 + 2.0;
    let chi = 2 - 2 * genus as i32;
    2.0 / k.sqrt() * (std::f64::consts::PI / k).sin().powi(chi)
}

/// CSV of the numeric columns: theory, dim on T², labels, color-reversing,
/// specific heat, nonsingular.
pub fn fig02_csv(table: &[LevelData]) -> String {
    let mut out = String::from("theory,dim_torus,labels,color_reversing,specific_heat,nonsingular\n");
    for r in table {
        out.push_str(&format!(
            "DE{},{},{},{},{},{}\n",
            r.ell,
            r.label_count,
            r.label_count,
            r.color_reversing_count,
            r.specific_heat,
            if r.even_singular { "no" } else { "yes" }
        ));
    }
    out
}

/// The published rows for ℓ = 1..6: (dim on T², labels, color-reversing,
/// specific heat, nonsingular).
pub const FIG02_ROWS: [(usize, usize, usize, usize, bool); 6] = [
    (1, 1, 1, 2, true),
    (4, 4, 1, 5, false),
    (4, 4, 4, 8, true),
    (9, 9, 4, 13, true),
    (9, 9, 9, 18, true),
    (16, 16, 9, 25, false),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_level_examples() {
        let t = level_table(6);
        assert_eq!((t[2].label_count, t[2].color_reversing_count, t[2].specific_heat), (4, 4, 8));
        assert_eq!(t[0].label_count, 1);
        assert!(t[1].even_singular);
        for row in &t[1].s_even {
            for x in row {
                assert!((x - 0.5).abs() < 1e-12);
            }
        }
        for (r, &(dim, labels, rev, heat, ok)) in t.iter().zip(FIG02_ROWS.iter()) {
            assert_eq!((r.label_count, r.label_count, r.color_reversing_count, r.specific_heat), (dim, labels, rev, heat));
            assert_eq!(r.transparent_all_bosons, ok);
        }
    }

    #[test]
    fn test_counts_match_parity_pairs() {
        for r in level_table(16) {
            assert_eq!(r.label_count, r.even_pair_count);
            assert_eq!(r.color_reversing_count, r.odd_pair_count);
            assert_eq!(r.specific_heat, r.label_count + r.color_reversing_count);
        }
    }

    #[test]
    fn test_even_rank_pattern() {
        // Labels 0 and ℓ share an S-row for every even ℓ, so the literal
        // restriction is deficient at ℓ ≡ 0 mod 4 as well.
        for r in level_table(14) {
            assert_eq!(r.even_singular, r.ell % 2 == 0, "ℓ = {}", r.ell);
            let expect: Vec<usize> = if r.ell % 2 == 0 { vec![0, r.ell as usize] } else { vec![0] };
            assert_eq!(r.transparent_labels, expect);
            assert_eq!(r.transparent_all_bosons, r.ell % 4 != 2, "ℓ = {}", r.ell);
            assert_eq!(r.doubled_even_rank, r.even_rank * r.even_rank);
        }
    }

    #[test]
    fn test_s_matrix() {
        let s = s_matrix(2, SConvention::Shifted);
        let h = 2f64.sqrt() / 2.0;
        let expect = DMatrix::from_row_slice(3, 3, &[0.5, h, 0.5, h, 0.0, -h, 0.5, -h, 0.5]);
        assert!((s.clone() - expect).abs().max() < 1e-12);
        for ell in 1..=10 {
            let s = s_matrix(ell, SConvention::Shifted);
            let id = DMatrix::<f64>::identity(s.nrows(), s.nrows());
            assert!((&s * &s - id).abs().max() < 1e-12);
        }
    }

    #[test]
    fn test_torus_dimension() {
        assert_eq!(torus_dimension_estimate(3, 1), 4.0);
        assert_eq!(torus_dimension_estimate(5, 1), 9.0);
        let v = torus_dimension_estimate(2, 2);
        let expect = 2.0 / 2.0 * (std::f64::consts::PI / 4.0).sin().powi(-2);
        assert!((v - expect).abs() < 1e-12);
    }
}
