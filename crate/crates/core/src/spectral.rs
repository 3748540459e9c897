//! Sparse Fourier-side representation of mean-zero fields on the torus,
//! with the homogeneous Sobolev norms, inner products and projections the
//! rest of the toolkit is built on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer wavevector on the d-dimensional lattice, d ∈ {1, 2}.
///
/// Components are `i128` so that coefficient dynamics doubling the
/// wavenumber every step stay exact far beyond the `f64` integer range
/// (k = 2^n is exact up to n = 126).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Wavevector([i128; 2]);

impl Wavevector {
    pub fn d1(k: i128) -> Self {
        Wavevector([k, 0])
    }

    pub fn d2(k1: i128, k2: i128) -> Self {
        Wavevector([k1, k2])
    }

    pub fn components(&self) -> [i128; 2] {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0, 0]
    }

    /// |k|² as a float. Exact whenever each |k_j| < 2^53 or is a power of two.
    pub fn norm_sq(&self) -> f64 {
        let a = self.0[0] as f64;
        let b = self.0[1] as f64;
        a * a + b * b
    }

    /// Largest component magnitude, used for grid sizing and step caps.
    pub fn max_abs_component(&self) -> i128 {
        self.0[0].abs().max(self.0[1].abs())
    }

    /// True when the first nonzero component is positive (the one-sided
    /// storage convention).
    pub fn leading_positive(&self) -> bool {
        if self.0[0] != 0 {
            self.0[0] > 0
        } else {
            self.0[1] > 0
        }
    }

    pub fn negated(&self) -> Self {
        Wavevector([-self.0[0], -self.0[1]])
    }

    fn fits_dims(&self, dims: u8) -> bool {
        dims == 2 || self.0[1] == 0
    }
}

impl fmt::Display for Wavevector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0[1] == 0 {
            write!(f, "({})", self.0[0])
        } else {
            write!(f, "({}, {})", self.0[0], self.0[1])
        }
    }
}

/// Storage convention for the coefficient map.
///
/// `OneSided` keeps only wavevectors with positive leading component and
/// counts each stored mode once in every norm, matching the bookkeeping of
/// the coefficient-dynamics tables. `FullLattice` stores every mode, as a
/// PDE solver on the standard lattice produces them.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    OneSided,
    FullLattice,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symmetry::OneSided => write!(f, "one_sided"),
            Symmetry::FullLattice => write!(f, "full_lattice"),
        }
    }
}

/// Sparse complex Fourier coefficients of a mean-zero field on the torus.
///
/// Invariants: no entry at k = 0, all amplitudes finite, all wavevectors
/// consistent with `dims`, and under `OneSided` every stored wavevector has
/// positive leading component.
#[derive(Clone, PartialEq, Debug)]
pub struct FourierField {
    dims: u8,
    symmetry: Symmetry,
    entries: BTreeMap<Wavevector, Complex64>,
}

impl FourierField {
    pub fn empty(dims: u8, symmetry: Symmetry) -> Self {
        FourierField {
            dims,
            symmetry,
            entries: BTreeMap::new(),
        }
    }

    /// Validating constructor: rejects k = 0 entries, duplicates, dimension
    /// mismatches, convention violations and non-finite amplitudes.
    pub fn new<I>(dims: u8, symmetry: Symmetry, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Wavevector, Complex64)>,
    {
        if dims != 1 && dims != 2 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: dims,
            });
        }
        let mut map = BTreeMap::new();
        for (k, v) in entries {
            if k.is_zero() {
                return Err(Error::ZeroModePresent);
            }
            if !k.fits_dims(dims) {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    got: 2,
                });
            }
            if symmetry == Symmetry::OneSided && !k.leading_positive() {
                return Err(Error::ConventionMismatch(format!(
                    "one-sided field cannot store {k}"
                )));
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFiniteAmplitude(k.to_string()));
            }
            if map.insert(k, v).is_some() {
                return Err(Error::DuplicateWavevector(k.to_string()));
            }
        }
        Ok(FourierField {
            dims,
            symmetry,
            entries: map,
        })
    }

    /// Internal constructor for step functions that maintain the invariants
    /// themselves.
    pub(crate) fn from_map(
        dims: u8,
        symmetry: Symmetry,
        entries: BTreeMap<Wavevector, Complex64>,
    ) -> Self {
        FourierField {
            dims,
            symmetry,
            entries,
        }
    }

    pub fn dims(&self) -> u8 {
        self.dims
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Wavevector, &Complex64)> {
        self.entries.iter()
    }

    /// Amplitude at k, zero if absent.
    pub fn amplitude(&self, k: &Wavevector) -> Complex64 {
        self.entries
            .get(k)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn max_abs_component(&self) -> i128 {
        self.entries
            .keys()
            .map(Wavevector::max_abs_component)
            .max()
            .unwrap_or(0)
    }

    /// Homogeneous Sobolev norm (Σ_k |k|^{2α} |f_k|²)^{1/2} over the stored
    /// index set. A one-sided field counts each stored mode once.
    pub fn sobolev_norm(&self, alpha: f64) -> f64 {
        let sum: f64 = self
            .entries
            .iter()
            .map(|(k, v)| k.norm_sq().powf(alpha) * v.norm_sqr())
            .sum();
        sum.sqrt()
    }

    /// Plancherel pairing Σ_k f_k conj(g_k) over the union of stored
    /// indices (absent modes contribute zero).
    pub fn inner_product(&self, other: &FourierField) -> Result<Complex64> {
        self.check_convention(other)?;
        let mut sum = Complex64::new(0.0, 0.0);
        for (k, v) in &self.entries {
            if let Some(w) = other.entries.get(k) {
                sum += v * w.conj();
            }
        }
        Ok(sum)
    }

    /// Projection P_I: keeps exactly the entries with k ∈ I.
    pub fn project(&self, set: &WavenumberSet) -> FourierField {
        let entries = self
            .entries
            .iter()
            .filter(|(k, _)| set.contains(k))
            .map(|(k, v)| (*k, *v))
            .collect();
        FourierField {
            dims: self.dims,
            symmetry: self.symmetry,
            entries,
        }
    }

    /// Largest deviation from conjugate symmetry f_{−k} = conj(f_k), for
    /// full-lattice fields declared real.
    pub fn conjugate_symmetry_residue(&self) -> f64 {
        let mut worst = 0.0f64;
        for (k, v) in &self.entries {
            let mirror = self.amplitude(&k.negated());
            let d = (v - mirror.conj()).norm();
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    /// Conjugate-symmetry residue for a field sampled from an n-point DFT
    /// per axis, where the mirror wavenumber folds back into
    /// [−n/2, n/2 − 1] and the Nyquist label −n/2 is its own mirror.
    pub fn conjugate_symmetry_residue_on(&self, n: usize) -> f64 {
        let half = (n / 2) as i128;
        let fold = |x: i128| if x > half - 1 { x - n as i128 } else { x };
        let mut worst = 0.0f64;
        for (k, v) in &self.entries {
            let [k1, k2] = k.components();
            let mirror = Wavevector::d2(fold(-k1), fold(-k2));
            let d = (v - self.amplitude(&mirror).conj()).norm();
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    pub(crate) fn check_convention(&self, other: &FourierField) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::ConventionMismatch(format!(
                "dims {} vs {}",
                self.dims, other.dims
            )));
        }
        if self.symmetry != other.symmetry {
            return Err(Error::ConventionMismatch(format!(
                "symmetry {} vs {}",
                self.symmetry, other.symmetry
            )));
        }
        Ok(())
    }
}

/// A set of wavevectors: explicit list, ball |k| ≤ R, or annulus
/// J_lo < |k| ≤ J_hi.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum WavenumberSet {
    Explicit(BTreeSet<Wavevector>),
    Ball { radius: i128 },
    Annulus { inner: i128, outer: i128 },
}

impl WavenumberSet {
    pub fn explicit<I: IntoIterator<Item = Wavevector>>(modes: I) -> Self {
        WavenumberSet::Explicit(modes.into_iter().collect())
    }

    pub fn ball(radius: i128) -> Self {
        WavenumberSet::Ball { radius }
    }

    pub fn annulus(inner: i128, outer: i128) -> Result<Self> {
        if inner >= outer {
            return Err(Error::ParameterConstraintViolated(format!(
                "annulus needs J_lo < J_hi, got {inner} >= {outer}"
            )));
        }
        Ok(WavenumberSet::Annulus { inner, outer })
    }

    /// Membership test. Radii are compared through |k|² in `f64`, which is
    /// exact for every wavevector either below 2^53 or produced by the
    /// frequency-doubling dynamics (powers of two).
    pub fn contains(&self, k: &Wavevector) -> bool {
        match self {
            WavenumberSet::Explicit(set) => set.contains(k),
            WavenumberSet::Ball { radius } => {
                if *radius < 0 {
                    return false;
                }
                let r = *radius as f64;
                k.norm_sq() <= r * r
            }
            WavenumberSet::Annulus { inner, outer } => {
                let nsq = k.norm_sq();
                let lo = (*inner).max(0) as f64;
                let hi = *outer as f64;
                nsq > lo * lo && nsq <= hi * hi
            }
        }
    }

    /// Materialize the set for the given convention, refusing to enumerate
    /// more than `limit` wavevectors.
    pub fn enumerate(&self, dims: u8, symmetry: Symmetry, limit: usize) -> Result<Vec<Wavevector>> {
        let too_many = |got: usize| Error::StateCapExceeded { got, cap: limit };
        match self {
            WavenumberSet::Explicit(set) => {
                if set.len() > limit {
                    return Err(too_many(set.len()));
                }
                Ok(set.iter().copied().collect())
            }
            WavenumberSet::Ball { .. } | WavenumberSet::Annulus { .. } => {
                let (lo, hi) = match self {
                    WavenumberSet::Ball { radius } => (0i128, *radius),
                    WavenumberSet::Annulus { inner, outer } => (*inner, *outer),
                    WavenumberSet::Explicit(_) => unreachable!(),
                };
                if hi <= 0 {
                    return Ok(Vec::new());
                }
                // Axis modes alone exceed the cap for large radii; bail out
                // before looping over a huge range.
                let axis_count = (hi - lo.max(0)).min(usize::MAX as i128) as usize;
                if axis_count > limit {
                    return Err(too_many(axis_count));
                }
                let mut out = Vec::new();
                let range = -hi..=hi;
                for k1 in range.clone() {
                    if dims == 1 {
                        let k = Wavevector::d1(k1);
                        if !k.is_zero()
                            && self.contains(&k)
                            && (symmetry == Symmetry::FullLattice || k.leading_positive())
                        {
                            out.push(k);
                            if out.len() > limit {
                                return Err(too_many(out.len()));
                            }
                        }
                    } else {
                        for k2 in range.clone() {
                            let k = Wavevector::d2(k1, k2);
                            if !k.is_zero()
                                && self.contains(&k)
                                && (symmetry == Symmetry::FullLattice || k.leading_positive())
                            {
                                out.push(k);
                                if out.len() > limit {
                                    return Err(too_many(out.len()));
                                }
                            }
                        }
                    }
                }
                out.sort();
                Ok(out)
            }
        }
    }
}

/// Header metadata carried by every spectrum series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub dims: u8,
    pub symmetry: Symmetry,
    pub system: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

/// Time-ordered spectra from one evolution run.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumSeries {
    meta: SeriesMeta,
    samples: Vec<(f64, FourierField)>,
}

impl SpectrumSeries {
    pub fn new(meta: SeriesMeta) -> Self {
        SpectrumSeries {
            meta,
            samples: Vec::new(),
        }
    }

    /// Append a sample; times must be strictly increasing and every field
    /// must share the header's convention.
    pub fn push(&mut self, t: f64, field: FourierField) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::ParameterConstraintViolated(format!(
                "sample time {t} is not finite"
            )));
        }
        if let Some((last, _)) = self.samples.last() {
            if t <= *last {
                return Err(Error::ParameterConstraintViolated(format!(
                    "sample times must increase: {t} after {last}"
                )));
            }
        }
        if field.dims() != self.meta.dims || field.symmetry() != self.meta.symmetry {
            return Err(Error::ConventionMismatch(
                "sample does not match series header".into(),
            ));
        }
        self.samples.push((t, field));
        Ok(())
    }

    pub fn meta(&self) -> &SeriesMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut SeriesMeta {
        &mut self.meta
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[(f64, FourierField)] {
        &self.samples
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|(t, _)| *t)
    }
}
