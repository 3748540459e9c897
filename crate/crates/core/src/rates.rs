//! Decay-rate analytics: norm time series, finite-horizon limsup
//! surrogates, log-linear rate fits, rate-definition checks and cross-q
//! norm comparisons.
//!
//! Every limsup here is a tail maximum over the trailing fraction of
//! samples; callers that need horizon stability compare the full-horizon
//! value against the half-horizon one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::SpectrumSeries;

/// Finite real samples at strictly increasing times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeSeriesReal {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeriesReal {
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (t, v) in pairs {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::ParameterConstraintViolated(format!(
                    "non-finite sample ({t}, {v})"
                )));
            }
            if let Some(last) = times.last() {
                if t <= *last {
                    return Err(Error::ParameterConstraintViolated(format!(
                        "times must increase strictly: {t} after {last}"
                    )));
                }
            }
            times.push(t);
            values.push(v);
        }
        Ok(TimeSeriesReal { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check_aligned(&self, other: &TimeSeriesReal) -> Result<()> {
        if self.times != other.times {
            return Err(Error::MisalignedSeries("sample times differ".into()));
        }
        Ok(())
    }

    /// Index of the first sample in the trailing `tail_fraction` window
    /// (at least one sample, never more than the whole series).
    pub fn tail_start(&self, tail_fraction: f64) -> usize {
        tail_start_index(self.len(), tail_fraction)
    }
}

pub(crate) fn tail_start_index(len: usize, tail_fraction: f64) -> usize {
    if len == 0 {
        return 0;
    }
    let frac = tail_fraction.clamp(0.0, 1.0);
    let count = ((len as f64) * frac).ceil() as usize;
    len - count.clamp(1, len)
}

/// A rate function h(t): either the closed form
/// amplitude · e^{−rate·t} · (t + shift)^power, or a sampled table
/// evaluated only at its own sample times.
#[derive(Clone, Debug, PartialEq)]
pub enum RateFunction {
    ClosedForm {
        amplitude: f64,
        rate: f64,
        power: f64,
        shift: f64,
    },
    Sampled(TimeSeriesReal),
}

impl RateFunction {
    pub fn closed(amplitude: f64, rate: f64, power: f64, shift: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !rate.is_finite() || !power.is_finite() || !shift.is_finite() {
            return Err(Error::ParameterConstraintViolated(
                "closed-form rate needs amplitude > 0 and finite parameters".into(),
            ));
        }
        Ok(RateFunction::ClosedForm {
            amplitude,
            rate,
            power,
            shift,
        })
    }

    pub fn sampled(ts: TimeSeriesReal) -> Result<Self> {
        if ts.values().iter().any(|v| !(*v > 0.0)) {
            return Err(Error::ParameterConstraintViolated(
                "sampled rate must be strictly positive".into(),
            ));
        }
        Ok(RateFunction::Sampled(ts))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            RateFunction::ClosedForm {
                amplitude,
                rate,
                power,
                shift,
            } => {
                let base = t + shift;
                if *power != 0.0 && base <= 0.0 {
                    return Err(Error::RateUndefined(t));
                }
                let v = amplitude * (-rate * t).exp() * base.powf(*power);
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::RateUndefined(t));
                }
                Ok(v)
            }
            RateFunction::Sampled(ts) => {
                match ts.times().binary_search_by(|probe| probe.total_cmp(&t)) {
                    Ok(idx) => Ok(ts.values()[idx]),
                    Err(_) => Err(Error::RateUndefined(t)),
                }
            }
        }
    }
}

/// Per-sample homogeneous Sobolev norm of index alpha.
pub fn sobolev_series(series: &SpectrumSeries, alpha: f64) -> TimeSeriesReal {
    let pairs: Vec<(f64, f64)> = series
        .samples()
        .iter()
        .map(|(t, f)| (*t, f.sobolev_norm(alpha)))
        .collect();
    TimeSeriesReal::new(pairs).expect("series times are already strictly increasing")
}

/// Mix-norm series ‖f^t‖_{H^{−q}}. Zero values are possible for empty
/// samples; downstream operations that need positivity reject them.
pub fn mixnorm_series(series: &SpectrumSeries, q: f64) -> TimeSeriesReal {
    sobolev_series(series, -q)
}

/// Tail maximum of num/den over the trailing `tail_fraction` of samples.
pub fn empirical_limsup(
    num: &TimeSeriesReal,
    den: &TimeSeriesReal,
    tail_fraction: f64,
) -> Result<f64> {
    num.check_aligned(den)?;
    if num.is_empty() {
        return Err(Error::MisalignedSeries("empty series".into()));
    }
    let start = num.tail_start(tail_fraction);
    let mut max = f64::NEG_INFINITY;
    for i in start..num.len() {
        let d = den.values()[i];
        if !(d > 0.0) {
            return Err(Error::DegenerateDenominator);
        }
        let r = num.values()[i] / d;
        if r > max {
            max = r;
        }
    }
    Ok(max)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayFit {
    /// Decay exponent: value ~ e^{−lambda·t} over the window.
    pub lambda: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares fit of log(value) against t over [window.0, window.1].
pub fn fit_decay_rate(ts: &TimeSeriesReal, window: (f64, f64)) -> Result<DecayFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (t, v) in ts.iter() {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::NonPositiveValues);
        }
        xs.push(t);
        ys.push(v.ln());
    }
    let n = xs.len();
    if n < 4 {
        return Err(Error::WindowTooSmall { got: n, need: 4 });
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mean_x;
        let dy = ys[i] - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = if syy <= f64::EPSILON * mean_y.abs().max(1.0) {
        1.0
    } else {
        1.0 - ss_res / syy
    };
    Ok(DecayFit {
        lambda: -slope,
        r_squared,
        points: n,
    })
}

/// Pointwise geometric mean √(ρ · mixnorm); sits between the two inputs
/// wherever ρ ≤ mixnorm.
pub fn geometric_mean_rate(
    rho: &TimeSeriesReal,
    mixnorm: &TimeSeriesReal,
) -> Result<TimeSeriesReal> {
    rho.check_aligned(mixnorm)?;
    let pairs: Vec<(f64, f64)> = rho
        .iter()
        .zip(mixnorm.values())
        .map(|((t, r), m)| (t, (r * m).sqrt()))
        .collect();
    TimeSeriesReal::new(pairs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    Uniform,
    Asymptotic,
    Translational,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateCheck {
    pub mode: RateMode,
    pub pass: bool,
    /// Smallest admissible translation, for the translational mode.
    pub tau: Option<f64>,
    /// Tail maximum of corr/rate, for the asymptotic mode.
    pub tail_max: Option<f64>,
    pub tail_max_half: Option<f64>,
}

const REL_SLACK: f64 = 1e-12;

/// Check one of the three rate-of-decay notions for a correlation series
/// against a rate function scaled by ‖g‖_{H^q}.
pub fn check_rate_definition(
    corr: &TimeSeriesReal,
    rate: &RateFunction,
    g_norm: f64,
    mode: RateMode,
    tau_search: (f64, f64),
) -> Result<RateCheck> {
    if corr.is_empty() {
        return Err(Error::MisalignedSeries("empty correlation series".into()));
    }
    match mode {
        RateMode::Uniform => {
            let mut pass = true;
            for (t, c) in corr.iter() {
                let r = rate.eval(t)?;
                if c > r * g_norm * (1.0 + REL_SLACK) {
                    pass = false;
                    break;
                }
            }
            Ok(RateCheck {
                mode,
                pass,
                tau: None,
                tail_max: None,
                tail_max_half: None,
            })
        }
        RateMode::Asymptotic => {
            let ratios: Vec<(f64, f64)> = corr
                .iter()
                .map(|(t, c)| Ok((t, c / rate.eval(t)?)))
                .collect::<Result<_>>()?;
            let tail = |upto: usize| -> f64 {
                let start = tail_start_index(upto, 0.25);
                ratios[start..upto]
                    .iter()
                    .map(|(_, r)| *r)
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let full = tail(ratios.len());
            let half = tail((ratios.len() / 2).max(1));
            let pass = full.is_finite() && full <= half * (1.0 + 1e-9) + 1e-300;
            Ok(RateCheck {
                mode,
                pass,
                tau: None,
                tail_max: Some(full),
                tail_max_half: Some(half),
            })
        }
        RateMode::Translational => {
            // Candidate translations on the sampling grid of the series.
            let times = corr.times();
            let dt = if times.len() >= 2 {
                times[1] - times[0]
            } else {
                1.0
            };
            let mut tau = tau_search.0.max(0.0);
            let mut found = None;
            while tau <= tau_search.1 + 1e-12 {
                let mut ok = true;
                for (t, c) in corr.iter() {
                    if t <= tau {
                        continue;
                    }
                    let r = match rate.eval(t - tau) {
                        Ok(r) => r,
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    };
                    if c > r * g_norm * (1.0 + REL_SLACK) {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    found = Some(tau);
                    break;
                }
                tau += dt;
            }
            Ok(RateCheck {
                mode,
                pass: found.is_some(),
                tau: found,
                tail_max: None,
                tail_max_half: None,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CrossQComparison {
    pub q: f64,
    pub q_prime: f64,
    pub tail_max_ratio: f64,
    /// ‖f‖_{H^{−q'}} ≤ ‖f‖_{H^{−q}} at every sample (the trivial estimate).
    pub monotone_ok: bool,
}

/// Tail maximum of ‖f^t‖_{H^{−q'}} / ‖f^t‖_{H^{−q}} for q' > q, plus the
/// exact monotonicity flag. Samples with zero denominator (empty fields)
/// are skipped.
pub fn cross_q_comparison(
    series: &SpectrumSeries,
    q: f64,
    q_prime: f64,
    tail_fraction: f64,
) -> Result<CrossQComparison> {
    if !(q_prime > q && q > 0.0) {
        return Err(Error::ParameterConstraintViolated(format!(
            "need q' > q > 0, got q = {q}, q' = {q_prime}"
        )));
    }
    let lo = mixnorm_series(series, q_prime);
    let hi = mixnorm_series(series, q);
    let mut monotone_ok = true;
    let mut tail_max = 0.0f64;
    let start = tail_start_index(lo.len(), tail_fraction);
    for i in 0..lo.len() {
        let (num, den) = (lo.values()[i], hi.values()[i]);
        if den == 0.0 {
            continue;
        }
        let r = num / den;
        if r > 1.0 + REL_SLACK {
            monotone_ok = false;
        }
        if i >= start && r > tail_max {
            tail_max = r;
        }
    }
    Ok(CrossQComparison {
        q,
        q_prime,
        tail_max_ratio: tail_max,
        monotone_ok,
    })
}

/// CSV export with one value column per series, aligned on times.
pub fn series_to_csv(header: &[&str], columns: &[&TimeSeriesReal]) -> Result<String> {
    let mut out = String::new();
    out.push('t');
    for h in header {
        out.push(',');
        out.push_str(h);
    }
    out.push('\n');
    let first = columns
        .first()
        .ok_or_else(|| Error::MisalignedSeries("no columns".into()))?;
    for col in columns {
        first.check_aligned(col)?;
    }
    for (i, t) in first.times().iter().enumerate() {
        out.push_str(&format!("{:.17e}", t));
        for col in columns {
            out.push_str(&format!(",{:.17e}", col.values()[i]));
        }
        out.push('\n');
    }
    Ok(out)
}
