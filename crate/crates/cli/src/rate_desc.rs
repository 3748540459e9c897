//! The h-descriptor mini-language used by analysis and witness commands:
//!
//!   mixnorm        — the series' own H^{−q} mix-norm, sampled
//!   pow:p          — mixnorm(t) · (t+2)^p, sampled
//!   exp:r          — e^{−r·t}, closed form
//!   table:<path>   — sampled (t, value) pairs from a CSV file
//!   <desc>*geom    — geometric mean of <desc> with the mix-norm
//!
//! The +2 shift in pow keeps t = 0 finite on unit-step time grids.

use mixnorm_core::rates::{geometric_mean_rate, mixnorm_series, RateFunction, TimeSeriesReal};
use mixnorm_core::spectral::SpectrumSeries;

pub fn build_rate(desc: &str, series: &SpectrumSeries, q: f64) -> Result<RateFunction, String> {
    let desc = desc.trim();
    let (base, geom) = match desc.strip_suffix("*geom") {
        Some(stripped) => (stripped.trim(), true),
        None => (desc, false),
    };
    let mix = mixnorm_series(series, q);
    let base_rate = parse_base(base, &mix)?;
    if !geom {
        return Ok(base_rate);
    }
    let sampled = match base_rate {
        RateFunction::Sampled(ts) => ts,
        closed => TimeSeriesReal::new(
            mix.times()
                .iter()
                .map(|&t| Ok((t, closed.eval(t).map_err(|e| e.to_string())?)))
                .collect::<Result<Vec<_>, String>>()?,
        )
        .map_err(|e| e.to_string())?,
    };
    let h = geometric_mean_rate(&sampled, &mix).map_err(|e| e.to_string())?;
    RateFunction::sampled(h).map_err(|e| e.to_string())
}

fn parse_base(base: &str, mix: &TimeSeriesReal) -> Result<RateFunction, String> {
    if base == "mixnorm" {
        return RateFunction::sampled(mix.clone()).map_err(|e| e.to_string());
    }
    if let Some(p) = base.strip_prefix("pow:") {
        let p: f64 = p.parse().map_err(|e| format!("bad pow exponent: {e}"))?;
        let ts = TimeSeriesReal::new(mix.iter().map(|(t, v)| (t, v * (t + 2.0).powf(p))))
            .map_err(|e| e.to_string())?;
        return RateFunction::sampled(ts).map_err(|e| e.to_string());
    }
    if let Some(r) = base.strip_prefix("exp:") {
        let r: f64 = r.parse().map_err(|e| format!("bad exp rate: {e}"))?;
        return RateFunction::closed(1.0, r, 0.0, 0.0).map_err(|e| e.to_string());
    }
    if let Some(path) = base.strip_prefix("table:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read rate table {path}: {e}"))?;
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('t') || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',');
            let t: f64 = cols
                .next()
                .ok_or_else(|| format!("{path}:{}: missing t", i + 1))?
                .trim()
                .parse()
                .map_err(|e| format!("{path}:{}: {e}", i + 1))?;
            let v: f64 = cols
                .next()
                .ok_or_else(|| format!("{path}:{}: missing value", i + 1))?
                .trim()
                .parse()
                .map_err(|e| format!("{path}:{}: {e}", i + 1))?;
            pairs.push((t, v));
        }
        let ts = TimeSeriesReal::new(pairs).map_err(|e| e.to_string())?;
        return RateFunction::sampled(ts).map_err(|e| e.to_string());
    }
    Err(format!(
        "unknown rate descriptor {base:?}; expected mixnorm, pow:<p>, exp:<r> or table:<path>"
    ))
}
