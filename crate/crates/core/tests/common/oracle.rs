//! Straight-line scalar transcription of the online decomposition.
//!
//! Deliberately naive: full histories kept in `Vec`s, kernels rebuilt on
//! every call, cyclic subseries materialised as explicit index lists. It
//! shares no code with the library and exists only to cross-check it.

#![allow(dead_code)]

pub struct OraclePoint {
    pub index: usize,
    pub value: f64,
    pub trend: f64,
    pub seasonal: Vec<f64>,
    pub residual: f64,
}

fn w(u: f64) -> f64 {
    if (0.0..1.0).contains(&u) {
        let c = 1.0 - u * u * u;
        c * c * c
    } else {
        0.0
    }
}

/// One-sided tri-cube average of the last `lambda` entries of `hist`.
fn one_sided(hist: &[f64], lambda: usize) -> f64 {
    let tail = &hist[hist.len() - lambda..];
    let mut num = 0.0;
    for k in 1..=lambda {
        let weight = w((lambda - k) as f64 / lambda as f64);
        num += weight * tail[k - 1];
    }
    let mut norm = 0.0;
    for k in 1..=lambda {
        norm += w((lambda - k) as f64 / lambda as f64);
    }
    num / norm
}

/// Two-sided tri-cube average at `t`, truncated at the series edges.
fn two_sided(series: &[f64], t: usize, half: usize) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    let h = half as i64;
    for j in -h..=h {
        let idx = t as i64 + j;
        if idx < 0 || idx >= series.len() as i64 {
            continue;
        }
        let weight = w(j.unsigned_abs() as f64 / (half + 1) as f64);
        num += weight * series[idx as usize];
        den += weight;
    }
    num / den
}

/// Exponentially smooths each cyclic subseries; returns the re-interleaved
/// series and the final smoothed value of each phase.
fn smooth_subseries(d: &[f64], period: usize, gamma: f64) -> (Vec<f64>, Vec<f64>) {
    let mut out = vec![0.0; d.len()];
    let mut last = vec![0.0; period];
    for phase in 0..period {
        let members: Vec<usize> = (0..d.len()).filter(|i| i % period == phase).collect();
        let mut c = d[members[0]];
        out[members[0]] = c;
        for &idx in &members[1..] {
            c = gamma * d[idx] + (1.0 - gamma) * c;
            out[idx] = c;
        }
        last[phase] = c;
    }
    (out, last)
}

pub fn decompose(periods: &[usize], gamma: f64, xs: &[f64]) -> Vec<OraclePoint> {
    let m = *periods.iter().max().unwrap();
    let n0 = 4 * m;
    assert!(xs.len() >= n0);
    let k = periods.len();

    // ---- initialization ----
    let mut working: Vec<f64> = xs[..n0].to_vec();
    let mut es: Vec<Vec<f64>> = Vec::new();
    let mut et: Vec<Vec<f64>> = Vec::new();
    let mut kp: Vec<Vec<f64>> = Vec::new();
    let mut init_seasonal: Vec<Vec<f64>> = Vec::new();
    for &mp in periods {
        let half1 = (2 * mp) / 2;
        let t1: Vec<f64> = (0..n0).map(|t| working[t] - two_sided(&working, t, half1)).collect();
        let (smoothed, last_s) = smooth_subseries(&t1, mp, gamma);
        es.push(last_s);
        let half4 = (3 * mp / 2) / 2;
        let d5: Vec<f64> = (0..n0).map(|t| t1[t] - two_sided(&smoothed, t, half4)).collect();
        kp.push(smoothed);
        let (s5, last_t) = smooth_subseries(&d5, mp, gamma);
        et.push(last_t);
        for t in 0..n0 {
            working[t] -= s5[t];
        }
        init_seasonal.push(s5);
    }
    let mut a: Vec<f64> = xs[..n0].to_vec();
    let mut dd: Vec<f64> = working[n0 - m..].to_vec();

    let mut out = Vec::with_capacity(xs.len());
    for t in 0..n0 {
        let trend = two_sided(&working, t, m / 2);
        let seasonal: Vec<f64> = (0..k).map(|p| init_seasonal[p][t]).collect();
        let mut ssum = 0.0;
        for s in &seasonal {
            ssum += s;
        }
        out.push(OraclePoint {
            index: t + 1,
            value: xs[t],
            trend,
            residual: xs[t] - trend - ssum,
            seasonal,
        });
    }

    // ---- online updates ----
    for (offset, &x) in xs[n0..].iter().enumerate() {
        let i = n0 + offset + 1;
        a.push(x);
        let mut b = x;
        let mut phases = vec![0; k];
        for p in 0..k {
            let mp = periods[p];
            let t1 = one_sided(&a, 4 * mp);
            let d1 = b - t1;
            let r = (i - 1) % mp;
            phases[p] = r;
            es[p][r] = gamma * d1 + (1.0 - gamma) * es[p][r];
            kp[p].push(es[p][r]);
            let t4 = one_sided(&kp[p], 3 * m);
            let d5 = b - t1 - t4;
            et[p][r] = gamma * d5 + (1.0 - gamma) * et[p][r];
            b -= et[p][r];
        }
        dd.push(b);
        let trend = one_sided(&dd, m);
        let seasonal: Vec<f64> = (0..k).map(|p| et[p][phases[p]]).collect();
        let mut ssum = 0.0;
        for s in &seasonal {
            ssum += s;
        }
        out.push(OraclePoint {
            index: i,
            value: x,
            trend,
            residual: x - trend - ssum,
            seasonal,
        });
    }
    out
}

/// Final smoothed-seasonality arrays after initialization only, for each
/// period: `(E_S, E_T)`.
pub fn init_arrays(periods: &[usize], gamma: f64, xs: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let m = *periods.iter().max().unwrap();
    let n0 = 4 * m;
    let mut working: Vec<f64> = xs[..n0].to_vec();
    let mut res = Vec::new();
    for &mp in periods {
        let t1: Vec<f64> = (0..n0).map(|t| working[t] - two_sided(&working, t, mp)).collect();
        let (smoothed, last_s) = smooth_subseries(&t1, mp, gamma);
        let half4 = (3 * mp / 2) / 2;
        let d5: Vec<f64> = (0..n0).map(|t| t1[t] - two_sided(&smoothed, t, half4)).collect();
        let (s5, last_t) = smooth_subseries(&d5, mp, gamma);
        for t in 0..n0 {
            working[t] -= s5[t];
        }
        res.push((last_s, last_t));
    }
    res
}

/// `%.17g`-style rendering, kept independent of the CLI's formatter.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let body = if (-4..17).contains(&exp) {
        if exp >= 0 {
            let e = exp as usize;
            let (int, frac) = digits.split_at(e + 1);
            let frac = frac.trim_end_matches('0');
            if frac.is_empty() {
                int.to_string()
            } else {
                format!("{int}.{frac}")
            }
        } else {
            let zeros = "0".repeat((-exp - 1) as usize);
            format!("0.{zeros}{}", digits.trim_end_matches('0'))
        }
    } else {
        let (lead, rest) = digits.split_at(1);
        let rest = rest.trim_end_matches('0');
        let sign = if exp < 0 { '-' } else { '+' };
        if rest.is_empty() {
            format!("{lead}e{sign}{:02}", exp.abs())
        } else {
            format!("{lead}.{rest}e{sign}{:02}", exp.abs())
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}
