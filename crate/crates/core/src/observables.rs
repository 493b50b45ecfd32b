//! Order parameters, bubble densities, correlations and fidelities.
//!
//! σ_z on site `j` is `1 − 2 n_j`, so a Rydberg atom contributes −1.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{z2_minus_index, z2_plus_index, StateVector};
use crate::lattice::stagger;
use crate::linalg::CHUNK;

/// How k-bubble windows are laid on the chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Windowing {
    /// Periodic: `n_s` windows, indices taken mod `n_s`.
    #[default]
    Wrap,
    /// Open: `n_s − k − 1` windows that do not cross the seam.
    Open,
}

/// Which alternating pattern σ_{n_s} projects on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaPattern {
    /// |0101…01⟩, the order opposite to the initial |1010…10⟩.
    #[default]
    AntiInitial,
    /// |1010…10⟩, the pattern written n₁g₂n₃….
    Literal,
    /// Mean of the two alternating projectors.
    Both,
}

impl std::str::FromStr for Windowing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wrap" => Ok(Windowing::Wrap),
            "open" => Ok(Windowing::Open),
            other => Err(Error::invalid(format!("windowing must be \"wrap\" or \"open\", got {other:?}"))),
        }
    }
}

impl std::str::FromStr for SigmaPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anti-initial" => Ok(SigmaPattern::AntiInitial),
            "literal" => Ok(SigmaPattern::Literal),
            "both" => Ok(SigmaPattern::Both),
            other => Err(Error::invalid(format!(
                "sigma_ns pattern must be \"anti-initial\", \"literal\" or \"both\", got {other:?}"
            ))),
        }
    }
}

fn occupied(b: usize, site: usize) -> bool {
    (b >> site) & 1 == 1
}

/// Néel value of a basis state: `(1/n_s) Σ_j (−1)^j σ_z,j`.
pub fn neel_of_basis(n_s: usize, b: usize) -> f64 {
    let sum: f64 = (0..n_s)
        .map(|j| {
            let sz = if occupied(b, j) { -1.0 } else { 1.0 };
            stagger(j + 1) * sz
        })
        .sum();
    sum / n_s as f64
}

/// Occupation pattern of one k-bubble window (k + 2 sites), `true` = Rydberg.
///
/// A wall pair `nn`, then `k − 1` further alternating sites, then a closing
/// repeat: k = 1 gives `nnn`, k = 2 `nngg`, k = 3 `nngnn`.
pub fn bubble_pattern(k: usize) -> Vec<bool> {
    let mut p = Vec::with_capacity(k + 2);
    p.push(true);
    for i in 0..k {
        p.push(i % 2 == 0);
    }
    p.push(p[k]);
    p
}

/// Number of bubble windows for a chain.
pub fn bubble_window_count(n_s: usize, k: usize, windowing: Windowing) -> usize {
    match windowing {
        Windowing::Wrap => n_s,
        Windowing::Open => n_s - k - 1,
    }
}

fn check_k(n_s: usize, k: usize) -> Result<()> {
    if k == 0 || k > n_s || (k + 2 > n_s && k != n_s) {
        return Err(Error::invalid(format!(
            "bubble size k = {k} invalid for n_s = {n_s} (need 1 <= k <= n_s - 2 or k = n_s)"
        )));
    }
    Ok(())
}

/// Σ_k evaluated on a single basis state.
pub fn bubble_density_of_basis(
    n_s: usize,
    b: usize,
    k: usize,
    windowing: Windowing,
    pattern: SigmaPattern,
) -> Result<f64> {
    check_k(n_s, k)?;
    if k == n_s {
        let lit = f64::from(u8::from(b == z2_plus_index(n_s)));
        let anti = f64::from(u8::from(b == z2_minus_index(n_s)));
        return Ok(match pattern {
            SigmaPattern::AntiInitial => anti,
            SigmaPattern::Literal => lit,
            SigmaPattern::Both => 0.5 * (lit + anti),
        });
    }
    let pat = bubble_pattern(k);
    let windows = bubble_window_count(n_s, k, windowing);
    let mut hits = 0usize;
    for start in 0..windows {
        let cells = (0..k + 2).map(|i| occupied(b, (start + i) % n_s));
        let direct = cells.clone().zip(&pat).all(|(c, p)| c == *p);
        let flipped = cells.zip(&pat).all(|(c, p)| c != *p);
        hits += usize::from(direct) + usize::from(flipped);
    }
    Ok(hits as f64 / windows as f64)
}

/// A diagonal operator stored by its value on every basis state.
#[derive(Debug, Clone)]
pub struct DiagonalObservable {
    pub name: String,
    values: Vec<f64>,
}

impl DiagonalObservable {
    pub fn from_fn(name: impl Into<String>, n_s: usize, f: impl Fn(usize) -> f64) -> Self {
        DiagonalObservable {
            name: name.into(),
            values: (0..1usize << n_s).map(f).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        if psi.dim() != self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                found: psi.dim(),
            });
        }
        Ok(diag_expectation(psi.amplitudes(), &self.values))
    }
}

fn diag_expectation(amps: &[C64], table: &[f64]) -> f64 {
    let partial = |a: &[C64], t: &[f64]| a.iter().zip(t).map(|(x, v)| x.norm_sqr() * v).sum::<f64>();
    if amps.len() <= CHUNK {
        return partial(amps, table);
    }
    let parts: Vec<f64> = amps
        .par_chunks(CHUNK)
        .zip(table.par_chunks(CHUNK))
        .map(|(a, t)| partial(a, t))
        .collect();
    parts.into_iter().sum()
}

/// ⟨N̂⟩.
pub fn neel_op(psi: &StateVector) -> f64 {
    let n = psi.n_s();
    let table: Vec<f64> = (0..psi.dim()).map(|b| neel_of_basis(n, b)).collect();
    diag_expectation(psi.amplitudes(), &table)
}

/// σ_k = ⟨Σ̂_k⟩.
pub fn bubble_density(psi: &StateVector, k: usize, windowing: Windowing, pattern: SigmaPattern) -> Result<f64> {
    let n = psi.n_s();
    check_k(n, k)?;
    let table = (0..psi.dim())
        .map(|b| bubble_density_of_basis(n, b, k, windowing, pattern))
        .collect::<Result<Vec<_>>>()?;
    Ok(diag_expectation(psi.amplitudes(), &table))
}

/// Two-point σ_z correlations `g_ij`, connected unless `connected` is false.
pub fn tpcf(psi: &StateVector, connected: bool) -> DMatrix<f64> {
    let n = psi.n_s();
    let mut single = vec![0.0; n];
    let mut pair = vec![0.0; n * n];
    for (b, a) in psi.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for i in 0..n {
            let si = if occupied(b, i) { -1.0 } else { 1.0 };
            single[i] += p * si;
            for j in i + 1..n {
                let sj = if occupied(b, j) { -1.0 } else { 1.0 };
                pair[i * n + j] += p * si * sj;
            }
        }
    }
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let v = 1.0;
            return if connected { v - single[i] * single[i] } else { v };
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let g = pair[lo * n + hi];
        if connected {
            g - single[i] * single[j]
        } else {
            g
        }
    })
}

/// `(1/n_pairs) Σ_{i<j} (−1)^{i+j} g_ij`.
pub fn tpcf_neel(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * g[(i, j)];
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

/// |⟨φ|ψ⟩|².
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(phi.inner(psi)?.norm_sqr())
}

/// One named measurement, with the conventions used to produce it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableRecord {
    pub name: String,
    pub value: f64,
    pub time: Option<f64>,
    pub metadata: BTreeMap<String, String>,
}

/// Column names of the standard observable set, in CSV order.
pub const STANDARD_COLUMNS: [&str; 7] = [
    "neel",
    "sigma_1",
    "sigma_2",
    "sigma_ns",
    "fidelity_z2p",
    "fidelity_z2m",
    "fidelity_zero",
];

/// Precomputed diagonal tables for repeated measurement along a trajectory.
#[derive(Debug, Clone)]
pub struct ObservableSet {
    n_s: usize,
    windowing: Windowing,
    pattern: SigmaPattern,
    tables: Vec<DiagonalObservable>,
}

impl ObservableSet {
    /// Tables for the named columns; accepts any subset of [`STANDARD_COLUMNS`].
    pub fn new(n_s: usize, names: &[&str], windowing: Windowing, pattern: SigmaPattern) -> Result<Self> {
        let z2p = z2_plus_index(n_s);
        let z2m = z2_minus_index(n_s);
        let mut tables = Vec::with_capacity(names.len());
        for &name in names {
            let table = match name {
                "neel" => DiagonalObservable::from_fn(name, n_s, |b| neel_of_basis(n_s, b)),
                "sigma_1" | "sigma_2" | "sigma_ns" => {
                    let k = match name {
                        "sigma_1" => 1,
                        "sigma_2" => 2,
                        _ => n_s,
                    };
                    check_k(n_s, k)?;
                    DiagonalObservable::from_fn(name, n_s, |b| {
                        bubble_density_of_basis(n_s, b, k, windowing, pattern).unwrap_or(f64::NAN)
                    })
                }
                "fidelity_z2p" => DiagonalObservable::from_fn(name, n_s, |b| f64::from(u8::from(b == z2p))),
                "fidelity_z2m" => DiagonalObservable::from_fn(name, n_s, |b| f64::from(u8::from(b == z2m))),
                "fidelity_zero" => DiagonalObservable::from_fn(name, n_s, |b| f64::from(u8::from(b == 0))),
                other => return Err(Error::invalid(format!("unknown observable {other:?}"))),
            };
            tables.push(table);
        }
        Ok(ObservableSet {
            n_s,
            windowing,
            pattern,
            tables,
        })
    }

    pub fn standard(n_s: usize, windowing: Windowing, pattern: SigmaPattern) -> Result<Self> {
        Self::new(n_s, &STANDARD_COLUMNS, windowing, pattern)
    }

    pub fn names(&self) -> Vec<String> {
        self.tables.iter().map(|t| t.name.clone()).collect()
    }

    pub fn evaluate(&self, psi: &StateVector) -> Result<Vec<f64>> {
        if psi.n_s() != self.n_s {
            return Err(Error::DimensionMismatch {
                expected: self.n_s,
                found: psi.n_s(),
            });
        }
        self.tables.iter().map(|t| t.expectation(psi)).collect()
    }

    pub fn records(&self, psi: &StateVector, time: Option<f64>) -> Result<Vec<ObservableRecord>> {
        let values = self.evaluate(psi)?;
        let mut meta = BTreeMap::new();
        meta.insert("windowing".to_string(), format!("{:?}", self.windowing).to_lowercase());
        meta.insert(
            "sigma_ns_pattern".to_string(),
            serde_json::to_value(self.pattern)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
        );
        Ok(self
            .tables
            .iter()
            .zip(values)
            .map(|(t, value)| ObservableRecord {
                name: t.name.clone(),
                value,
                time,
                metadata: meta.clone(),
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> usize {
        // leftmost character is site 1
        s.chars()
            .enumerate()
            .map(|(j, c)| if c == '1' { 1 << j } else { 0 })
            .sum()
    }

    #[test]
    fn neel_reference_states() {
        let n = 8;
        assert_eq!(neel_op(&StateVector::z2_plus(n).unwrap()), 1.0);
        assert_eq!(neel_op(&StateVector::z2_minus(n).unwrap()), -1.0);
        assert_eq!(neel_op(&StateVector::all_ground(n).unwrap()), 0.0);
        assert_eq!(neel_of_basis(n, (1 << n) - 1), 0.0);
    }

    #[test]
    fn patterns() {
        assert_eq!(bubble_pattern(1), vec![true, true, true]);
        assert_eq!(bubble_pattern(2), vec![true, true, false, false]);
        assert_eq!(bubble_pattern(3), vec![true, true, false, true, true]);
    }

    #[test]
    fn sigma_values_on_product_states() {
        let z2p = StateVector::z2_plus(8).unwrap();
        let z2m = StateVector::z2_minus(8).unwrap();
        for w in [Windowing::Wrap, Windowing::Open] {
            assert_eq!(bubble_density(&z2p, 1, w, SigmaPattern::AntiInitial).unwrap(), 0.0);
        }
        assert_eq!(bubble_density(&z2m, 8, Windowing::Wrap, SigmaPattern::AntiInitial).unwrap(), 1.0);
        assert_eq!(bubble_density(&z2p, 8, Windowing::Wrap, SigmaPattern::Literal).unwrap(), 1.0);
        assert_eq!(bubble_density(&z2p, 8, Windowing::Wrap, SigmaPattern::Both).unwrap(), 0.5);
        let zero = StateVector::all_ground(8).unwrap();
        assert_eq!(bubble_density(&zero, 1, Windowing::Open, SigmaPattern::AntiInitial).unwrap(), 1.0);
    }

    #[test]
    fn sigma_2_open_example() {
        // five open windows: 1100 1001 0010 0101 1010, only the first matches
        let b = bits("11001010");
        let v = bubble_density_of_basis(8, b, 2, Windowing::Open, SigmaPattern::AntiInitial).unwrap();
        assert_eq!(v, 1.0 / 5.0);
        let wrapped = bubble_density_of_basis(8, b, 2, Windowing::Wrap, SigmaPattern::AntiInitial).unwrap();
        // wrap adds 0101 1011 0110; none match
        assert_eq!(wrapped, 1.0 / 8.0);
    }

    #[test]
    fn invalid_k() {
        let psi = StateVector::z2_plus(6).unwrap();
        assert!(bubble_density(&psi, 0, Windowing::Wrap, SigmaPattern::Both).is_err());
        assert!(bubble_density(&psi, 5, Windowing::Wrap, SigmaPattern::Both).is_err());
        assert!(bubble_density(&psi, 7, Windowing::Wrap, SigmaPattern::Both).is_err());
    }

    #[test]
    fn ghz_correlations() {
        let n = 4;
        let mut amps = vec![C64::new(0.0, 0.0); 16];
        amps[z2_plus_index(n)] = C64::new(1.0, 0.0);
        amps[z2_minus_index(n)] = C64::new(1.0, 0.0);
        let psi = StateVector::normalized(n, amps).unwrap();
        let g = tpcf(&psi, true);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let expect = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    assert!((g[(i, j)] - expect).abs() < 1e-14);
                }
            }
        }
        assert!((tpcf_neel(&g) - 1.0).abs() < 1e-14);
        assert_eq!(tpcf_neel(&DMatrix::zeros(4, 4)), 0.0);
    }

    #[test]
    fn product_state_has_no_connected_correlation() {
        let g = tpcf(&StateVector::z2_plus(6).unwrap(), true);
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert_eq!(g[(i, j)], 0.0);
                }
            }
        }
        let raw = tpcf(&StateVector::z2_plus(6).unwrap(), false);
        assert_eq!(raw[(0, 1)], -1.0);
    }

    #[test]
    fn standard_set_columns() {
        let set = ObservableSet::standard(6, Windowing::Wrap, SigmaPattern::AntiInitial).unwrap();
        assert_eq!(set.names(), STANDARD_COLUMNS.map(String::from).to_vec());
        let v = set.evaluate(&StateVector::z2_plus(6).unwrap()).unwrap();
        assert_eq!(v, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let recs = set.records(&StateVector::z2_plus(6).unwrap(), Some(0.0)).unwrap();
        assert_eq!(recs[3].metadata["sigma_ns_pattern"], "anti-initial");
        assert!(ObservableSet::new(6, &["bogus"], Windowing::Wrap, SigmaPattern::Both).is_err());
    }
}
