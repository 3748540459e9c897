//! Witness observables: test functions g ∈ H^q whose correlation with the
//! evolving field certifiably tracks a prescribed rate. Three
//! constructions are provided — the duality observable that touches the
//! mix-norm at one chosen time, the sign-state observable for trajectories
//! whose low-mode energy keeps returning, and the shell-supported
//! observable that tracks a rate h = o(mix-norm) on transient
//! trajectories — together with a numerical verifier.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rates::{mixnorm_series, tail_start_index, RateFunction};
use crate::spectral::{FourierField, SpectrumSeries, WavenumberSet, Wavevector};

/// Cap on |I| for the sign-state construction (the state space grows as
/// 4^{|I|}).
pub const STATE_CAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessMode {
    Duality,
    SignState,
    Transient,
}

/// A constructed observable with its certification metadata.
#[derive(Clone, Debug)]
pub struct WitnessObservable {
    pub g: FourierField,
    pub mode: WitnessMode,
    pub q: f64,
    pub delta: Option<f64>,
    /// Lower-bound constant c for the sign-state mode.
    pub c: Option<f64>,
    /// Times at which the guaranteed bound is certified.
    pub selected_times: Vec<f64>,
    /// Human-readable statement of the certified inequality.
    pub guaranteed_bound: String,
}

/// Sidecar metadata serialized next to the witness coefficients.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessMetadata {
    pub mode: WitnessMode,
    pub q: f64,
    pub delta: Option<f64>,
    pub c: Option<f64>,
    pub selected_times: Vec<f64>,
    pub guaranteed_bound: String,
    pub g_norm_hq: f64,
}

impl WitnessObservable {
    pub fn metadata(&self) -> WitnessMetadata {
        WitnessMetadata {
            mode: self.mode,
            q: self.q,
            delta: self.delta,
            c: self.c,
            selected_times: self.selected_times.clone(),
            guaranteed_bound: self.guaranteed_bound.clone(),
            g_norm_hq: self.g.sobolev_norm(self.q),
        }
    }
}

/// The observable g_k = f_k k^{−2q} / ‖f‖_{H^{−q}} built at one sample:
/// ‖g‖_{H^q} = 1 and ⟨f, g⟩ = ‖f‖_{H^{−q}} exactly.
pub fn duality_witness(f: &FourierField, q: f64) -> Result<WitnessObservable> {
    let norm = f.sobolev_norm(-q);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateNorm(
            "duality witness needs a positive mix-norm".into(),
        ));
    }
    let mut entries = BTreeMap::new();
    for (k, v) in f.iter() {
        let w = v * k.norm_sq().powf(-q) / norm;
        entries.insert(*k, w);
    }
    let g = FourierField::from_map(f.dims(), f.symmetry(), entries);
    Ok(WitnessObservable {
        g,
        mode: WitnessMode::Duality,
        q,
        delta: None,
        c: None,
        selected_times: Vec::new(),
        guaranteed_bound: format!(
            "<f,g> equals the H^-{q} mix-norm at the construction time; \
             |<f^t,g>| <= mixnorm(t) for all t since |g|_Hq = 1"
        ),
    })
}

/// Duality witness anchored at the sample closest to time t0; its
/// selected_times records that sample time.
pub fn duality_witness_at(series: &SpectrumSeries, t0: f64, q: f64) -> Result<WitnessObservable> {
    let (t, f) = series
        .samples()
        .iter()
        .min_by(|(ta, _), (tb, _)| (ta - t0).abs().total_cmp(&(tb - t0).abs()))
        .ok_or(Error::InsufficientHorizon { got: 0, need: 1 })?;
    let mut w = duality_witness(f, q)?;
    w.selected_times = vec![*t];
    Ok(w)
}

/// Quadrant state of a list of complex amplitudes: (sgn Re, sgn Im) per
/// mode with sgn(0) = +1.
fn quadrant_state(f: &FourierField, modes: &[Wavevector]) -> Vec<(i8, i8)> {
    modes
        .iter()
        .map(|k| {
            let v = f.amplitude(k);
            let sgn = |x: f64| if x >= 0.0 { 1i8 } else { -1i8 };
            (sgn(v.re), sgn(v.im))
        })
        .collect()
}

/// Sign-state witness on a finite mode set I: among the candidate times
/// where ‖P_I f^t‖_{H^{−q}} ≥ c·h(t), the most frequent quadrant state
/// (c_k, d_k) of {f_k}_{k∈I} is selected (lexicographically smallest on
/// ties) and g_k = (c_k + i d_k) k^{−q} on I. At each selected time
/// |⟨f,g⟩| ≥ (Σ_I |f_k|² k^{−2q})^{1/2} ≥ c·h(t).
pub fn sign_state_witness(
    series: &SpectrumSeries,
    set: &WavenumberSet,
    q: f64,
    h: &RateFunction,
    c: f64,
) -> Result<WitnessObservable> {
    if !(c > 0.0) {
        return Err(Error::ParameterConstraintViolated(format!(
            "need c > 0, got {c}"
        )));
    }
    let meta = series.meta();
    let modes = set.enumerate(meta.dims, meta.symmetry, STATE_CAP)?;
    let as_set = WavenumberSet::explicit(modes.iter().copied());

    let mut candidates = Vec::new();
    for (t, f) in series.samples() {
        let captured = f.project(&as_set).sobolev_norm(-q);
        if captured >= c * h.eval(*t)? {
            candidates.push((*t, f));
        }
    }
    if candidates.is_empty() {
        return Err(Error::NoCandidateTimes);
    }

    let mut counts: BTreeMap<Vec<(i8, i8)>, usize> = BTreeMap::new();
    for (_, f) in &candidates {
        *counts.entry(quadrant_state(f, &modes)).or_insert(0) += 1;
    }
    // max count, ties broken by the lexicographically smallest state:
    // ascending BTreeMap order plus a strict comparison keeps the first
    // maximal state.
    let mut best: Option<(&Vec<(i8, i8)>, usize)> = None;
    for (state, n) in &counts {
        if best.is_none_or(|(_, bn)| *n > bn) {
            best = Some((state, *n));
        }
    }
    let best_state = best.expect("candidates is nonempty").0.clone();

    let selected_times: Vec<f64> = candidates
        .iter()
        .filter(|(_, f)| quadrant_state(f, &modes) == best_state)
        .map(|(t, _)| *t)
        .collect();

    let mut entries = BTreeMap::new();
    for (k, (ck, dk)) in modes.iter().zip(&best_state) {
        let w = Complex64::new(*ck as f64, *dk as f64) * k.norm_sq().powf(-q / 2.0);
        entries.insert(*k, w);
    }
    let g = FourierField::from_map(meta.dims, meta.symmetry, entries);
    Ok(WitnessObservable {
        g,
        mode: WitnessMode::SignState,
        q,
        delta: None,
        c: Some(c),
        selected_times,
        guaranteed_bound: format!(
            "at each selected time |<f,g>| >= (sum_I |f_k|^2 k^-2q)^(1/2) >= c*h(t), c = {c}"
        ),
    })
}

/// One shell of the decomposition: modes J_prev < |k| ≤ J with its time.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShellEntry {
    pub j_prev: i128,
    pub j: i128,
    pub time: f64,
    /// Shell energy ≥ (1−δ)·mixnorm² at its time.
    pub property1: bool,
    /// Low-mode energy ≤ min(δ, δ/c²)·h² at every later sample.
    pub property2: bool,
}

impl ShellEntry {
    pub fn annulus(&self) -> WavenumberSet {
        WavenumberSet::Annulus {
            inner: self.j_prev,
            outer: self.j,
        }
    }
}

/// The (J_i, T_i) sequence capturing escaping Fourier energy.
#[derive(Clone, Debug, Serialize)]
pub struct ShellDecomposition {
    pub q: f64,
    pub delta: f64,
    pub entries: Vec<ShellEntry>,
    /// True when the search for the next time T_{i+1} failed with horizon
    /// left over (Property 2 unsatisfiable: energy keeps returning).
    pub blocked: bool,
    pub horizon_end: f64,
}

/// Cumulative low-mode energy Σ_{0 < |k| ≤ J} k^{−2q} |f_k|².
fn low_mode_energy(f: &FourierField, j: i128, q: f64) -> f64 {
    if j <= 0 {
        return 0.0;
    }
    f.project(&WavenumberSet::ball(j)).sobolev_norm(-q).powi(2)
}

/// Smallest integer radius J ≥ floor such that energy in (floor, J]
/// reaches the target, or None if even the full field falls short.
fn smallest_radius_reaching(f: &FourierField, floor: i128, q: f64, target: f64) -> Option<i128> {
    // Sorted mode radii above the floor with cumulative annulus energy.
    let floor_sq = (floor.max(0) as f64) * (floor.max(0) as f64);
    let mut modes: Vec<(f64, f64)> = f
        .iter()
        .filter(|(k, _)| k.norm_sq() > floor_sq)
        .map(|(k, v)| (k.norm_sq(), k.norm_sq().powf(-q) * v.norm_sqr()))
        .collect();
    modes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for (nsq, e) in modes {
        acc += e;
        if acc >= target {
            let r = nsq.sqrt();
            let mut j = r.ceil() as i128;
            // guard against ceil landing one short after roundoff
            if (j as f64) * (j as f64) < nsq {
                j += 1;
            }
            return Some(j.max(floor + 1));
        }
    }
    None
}

/// Build the shell decomposition: T₁ is the first sample and J₁ the
/// smallest radius capturing (1−δ) of the energy there; each later T_i is
/// the earliest sample ≥ T_{i−1}+1 from which the low modes |k| ≤ J_{i−1}
/// hold at most min(δ, δ/c²)·h²(t) for every remaining sample, and J_i
/// restores the (1−δ) capture at T_i. Construction stops when the horizon
/// runs out; `blocked` records whether Property 2 was the obstruction.
pub fn shell_decomposition(
    series: &SpectrumSeries,
    q: f64,
    h: &RateFunction,
    delta: f64,
    c_bound: f64,
) -> Result<ShellDecomposition> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ParameterConstraintViolated(format!(
            "need 0 < delta < 1, got {delta}"
        )));
    }
    if !(c_bound > 0.0) {
        return Err(Error::ParameterConstraintViolated(format!(
            "need c_bound > 0, got {c_bound}"
        )));
    }
    if series.is_empty() {
        return Err(Error::InsufficientHorizon { got: 0, need: 1 });
    }
    let samples = series.samples();
    let m = samples.len();
    let h_at: Vec<f64> = samples
        .iter()
        .map(|(t, _)| h.eval(*t))
        .collect::<Result<_>>()?;
    let mix_sq: Vec<f64> = samples
        .iter()
        .map(|(t, f)| {
            let v = f.sobolev_norm(-q);
            if !(v > 0.0) {
                return Err(Error::DegenerateNorm(format!("zero mix-norm at t = {t}")));
            }
            Ok(v * v)
        })
        .collect::<Result<_>>()?;
    let low_bound = delta.min(delta / (c_bound * c_bound));

    let mut entries: Vec<ShellEntry> = Vec::new();
    let blocked;
    let mut j_prev = 0i128;
    let mut idx = 0usize; // sample index of the current T_i
    loop {
        let (t_i, f_i) = &samples[idx];
        let target = (1.0 - delta) * mix_sq[idx];
        let Some(j) = smallest_radius_reaching(f_i, j_prev, q, target) else {
            // cannot happen when Property 2 held at idx, but guard anyway
            blocked = true;
            break;
        };
        entries.push(ShellEntry {
            j_prev,
            j,
            time: *t_i,
            property1: true,
            property2: true,
        });
        j_prev = j;

        // earliest next sample with t >= T_i + 1 whose whole suffix keeps
        // low-mode energy under the bound
        let mut next = None;
        let mut suffix_ok_from = m; // first index from which all later samples pass
        for i in (0..m).rev() {
            if low_mode_energy(&samples[i].1, j_prev, q) <= low_bound * h_at[i] * h_at[i] {
                suffix_ok_from = i;
            } else {
                break;
            }
        }
        for (i, (t, _)) in samples.iter().enumerate().skip(idx + 1) {
            if *t >= t_i + 1.0 && i >= suffix_ok_from {
                next = Some(i);
                break;
            }
        }
        match next {
            Some(i) => idx = i,
            None => {
                // distinguish "horizon consumed" from "energy keeps returning"
                blocked = samples.iter().any(|(t, _)| *t >= t_i + 1.0);
                break;
            }
        }
    }

    Ok(ShellDecomposition {
        q,
        delta,
        entries,
        blocked,
        horizon_end: samples[m - 1].0,
    })
}

/// Greedy subsequence schedule for the transient witness: pick the first
/// shell with ratio r = h(T)/mixnorm(T) ≤ δ/2, then every next shell with
/// r ≤ (δ²/2)·r_prev. Geometric summation then gives Σ r ≤ δ and
/// Σ_{ℓ>L} r_ℓ ≤ δ²·r_L.
fn select_subsequence(ratios: &[(usize, f64)], delta: f64) -> Vec<usize> {
    let mut selected = Vec::new();
    let mut bound = delta / 2.0;
    for (i, r) in ratios {
        if *r <= bound {
            selected.push(*i);
            bound = (delta * delta / 2.0) * r;
        }
    }
    selected
}

/// The shell-supported observable of the transient construction:
/// g_k = f_k^{T_ℓ} k^{−2q} ‖f^{T_ℓ}‖⁻²_{H^{−q}} h(T_ℓ) on each selected
/// shell. Certifies ‖g‖²_{H^q} ≤ Σ r² ≤ δ² and
/// ⟨f^{T_ℓ}, g⟩ ≥ (1−3δ) h(T_ℓ) at every selected time.
pub fn transient_witness(
    series: &SpectrumSeries,
    shells: &ShellDecomposition,
    q: f64,
    h: &RateFunction,
    delta: f64,
) -> Result<WitnessObservable> {
    if !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(Error::ParameterConstraintViolated(format!(
            "transient witness needs delta < 1/3, got {delta}"
        )));
    }
    if shells.delta > delta + 1e-15 {
        return Err(Error::ParameterConstraintViolated(format!(
            "shell decomposition was built with delta = {} > {delta}",
            shells.delta
        )));
    }
    if shells.entries.len() < 2 {
        return Err(Error::HorizonExhausted {
            completed: shells.entries.len(),
        });
    }
    let samples = series.samples();
    let sample_at = |time: f64| -> Result<&(f64, FourierField)> {
        samples
            .iter()
            .find(|(t, _)| *t == time)
            .ok_or_else(|| Error::MisalignedSeries(format!("no sample at t = {time}")))
    };

    let mut ratios = Vec::with_capacity(shells.entries.len());
    for (i, entry) in shells.entries.iter().enumerate() {
        let (t, f) = sample_at(entry.time)?;
        let mix = f.sobolev_norm(-q);
        ratios.push((i, h.eval(*t)? / mix));
    }
    let selected = select_subsequence(&ratios, delta);
    if selected.is_empty() {
        return Err(Error::SubsequenceUnavailable(format!(
            "no shell time has h/mixnorm <= delta/2 = {}",
            delta / 2.0
        )));
    }

    let mut entries = BTreeMap::new();
    let mut selected_times = Vec::with_capacity(selected.len());
    let mut norm_budget = 0.0;
    for &i in &selected {
        let shell = &shells.entries[i];
        let (t, f) = sample_at(shell.time)?;
        let mix_sq = f.sobolev_norm(-q).powi(2);
        let h_t = h.eval(*t)?;
        let annulus = shell.annulus();
        for (k, v) in f.iter() {
            if annulus.contains(k) {
                let w = v * k.norm_sq().powf(-q) * h_t / mix_sq;
                entries.insert(*k, w);
            }
        }
        selected_times.push(*t);
        norm_budget += (h_t * h_t) / mix_sq;
    }
    let g = FourierField::from_map(series.meta().dims, series.meta().symmetry, entries);
    debug_assert!(g.sobolev_norm(q).powi(2) <= norm_budget * (1.0 + 1e-12));
    Ok(WitnessObservable {
        g,
        mode: WitnessMode::Transient,
        q,
        delta: Some(delta),
        c: None,
        selected_times,
        guaranteed_bound: format!(
            "<f^T,g> >= (1-3*delta)*h(T) at each selected time and |g|^2_Hq <= delta^2, delta = {delta}"
        ),
    })
}

/// Direct recomputation of the cross terms E₁ (earlier selected shells)
/// and E₂ (later selected shells) of the transient pairing at one
/// selected time. Both must stay within δ·h(T).
pub fn transient_cross_terms(
    series: &SpectrumSeries,
    shells: &ShellDecomposition,
    witness: &WitnessObservable,
    at_time: f64,
) -> Result<(f64, f64)> {
    let samples = series.samples();
    let f_t = &samples
        .iter()
        .find(|(t, _)| *t == at_time)
        .ok_or_else(|| Error::MisalignedSeries(format!("no sample at t = {at_time}")))?
        .1;
    let mut e1 = Complex64::new(0.0, 0.0);
    let mut e2 = Complex64::new(0.0, 0.0);
    for entry in &shells.entries {
        if !witness.selected_times.contains(&entry.time) || entry.time == at_time {
            continue;
        }
        let annulus = entry.annulus();
        let mut part = Complex64::new(0.0, 0.0);
        for (k, v) in f_t.iter() {
            if annulus.contains(k) {
                part += v * witness.g.amplitude(k).conj();
            }
        }
        if entry.time < at_time {
            e1 += part;
        } else {
            e2 += part;
        }
    }
    Ok((e1.norm(), e2.norm()))
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationRow {
    pub t: f64,
    pub corr: f64,
    pub h: f64,
    pub mixnorm: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessVerification {
    pub rows: Vec<VerificationRow>,
    /// Tail maximum of corr/h over the trailing quarter of samples.
    pub tail_max_corr_over_h: f64,
    pub all_selected_pass: bool,
}

impl WitnessVerification {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,corr,h,mixnorm,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
                r.t, r.corr, r.h, r.mixnorm, r.pass
            ));
        }
        out
    }
}

const VERIFY_SLACK: f64 = 1e-12;

/// Evaluate |⟨f^t, g⟩| along the series, check the duality envelope at
/// every sample, and check the witness's guaranteed bound at its selected
/// times.
pub fn verify_witness(
    series: &SpectrumSeries,
    witness: &WitnessObservable,
    q: f64,
    h: &RateFunction,
) -> Result<WitnessVerification> {
    let g_norm = witness.g.sobolev_norm(q);
    let mix = mixnorm_series(series, q);
    let support = WavenumberSet::explicit(witness.g.iter().map(|(k, _)| *k));
    let mut rows = Vec::with_capacity(series.len());
    let mut ratios = Vec::with_capacity(series.len());
    let mut all_selected_pass = true;
    for (i, (t, f)) in series.samples().iter().enumerate() {
        let corr = f.inner_product(&witness.g)?.norm();
        let h_t = h.eval(*t)?;
        let mixnorm = mix.values()[i];
        // duality envelope holds for every observable
        let mut pass = corr <= mixnorm * g_norm * (1.0 + VERIFY_SLACK);
        if witness.selected_times.contains(t) {
            let bound_ok = match witness.mode {
                WitnessMode::Duality => (corr - mixnorm).abs() <= 1e-10 * mixnorm,
                WitnessMode::SignState => {
                    let captured_sq = f.project(&support).sobolev_norm(-q).powi(2);
                    let c = witness.c.unwrap_or(0.0);
                    corr + VERIFY_SLACK * corr.max(1.0) >= captured_sq.sqrt()
                        && corr + VERIFY_SLACK * corr.max(1.0) >= c * h_t
                }
                WitnessMode::Transient => {
                    let delta = witness.delta.unwrap_or(0.0);
                    let pairing = f.inner_product(&witness.g)?.re;
                    pairing >= (1.0 - 3.0 * delta) * h_t * (1.0 - VERIFY_SLACK)
                }
            };
            all_selected_pass &= bound_ok;
            pass &= bound_ok;
        }
        ratios.push(if h_t > 0.0 { corr / h_t } else { f64::INFINITY });
        rows.push(VerificationRow {
            t: *t,
            corr,
            h: h_t,
            mixnorm,
            pass,
        });
    }
    let start = tail_start_index(ratios.len(), 0.25);
    let tail_max_corr_over_h = ratios[start..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(WitnessVerification {
        rows,
        tail_max_corr_over_h,
        all_selected_pass,
    })
}
