//! Sub-sample location of extrema in uniformly sampled profiles.
//!
//! Fringe profiles are locally an offset sinusoid, so each discrete
//! extremum is refined by fitting `A + B cos(w x + c)` through a 5-sample
//! stencil, with the frequency taken from the linear recurrence
//! `f[j+1] + f[j-1] = 2 cos(w) f[j] + const`. That fit is exact for
//! sinusoids at any sampling density above Nyquist. Stencils that do not
//! look sinusoidal fall back to a three-point parabola.

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Extremum {
    /// Fractional sample index.
    pub index: f64,
    pub value: f64,
    pub is_max: bool,
}

/// Discrete local extrema whose 5-sample neighbourhood varies by more than
/// `floor`, refined to sub-sample precision.
pub(crate) fn local_extrema(profile: &[f64], floor: f64) -> Vec<Extremum> {
    let n = profile.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    for i in 1..n - 1 {
        let (prev, cur, next) = (profile[i - 1], profile[i], profile[i + 1]);
        let is_min = cur < prev && cur <= next;
        let is_max = cur > prev && cur >= next;
        if !(is_min || is_max) {
            continue;
        }
        let lo = i.saturating_sub(2);
        let hi = (i + 2).min(n - 1);
        let (smin, smax) = profile[lo..=hi]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        if smax - smin <= floor {
            continue;
        }
        let (offset, value) = refine(profile, i, is_max);
        out.push(Extremum {
            index: i as f64 + offset,
            value,
            is_max,
        });
    }
    out
}

/// Refine the extremum at discrete index `i`; returns (offset in samples, value).
pub(crate) fn refine(profile: &[f64], i: usize, is_max: bool) -> (f64, f64) {
    if i >= 2 && i + 2 < profile.len() {
        if let Some(r) = sinusoid_fit(&profile[i - 2..=i + 2], is_max) {
            return r;
        }
    }
    parabolic(profile[i - 1], profile[i], profile[i + 1])
}

fn parabolic(a: f64, b: f64, c: f64) -> (f64, f64) {
    let den = a - 2.0 * b + c;
    if den == 0.0 {
        return (0.0, b);
    }
    let d = (0.5 * (a - c) / den).clamp(-1.0, 1.0);
    (d, b - 0.25 * (a - c) * d)
}

fn sinusoid_fit(s: &[f64], is_max: bool) -> Option<(f64, f64)> {
    debug_assert_eq!(s.len(), 5);
    let span = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - s.iter().cloned().fold(f64::INFINITY, f64::min);

    // g_j = s[j+1] + s[j-1] against x_j = s[j] for the three inner samples
    let xs = [s[1], s[2], s[3]];
    let gs = [s[2] + s[0], s[3] + s[1], s[4] + s[2]];
    let mx = xs.iter().sum::<f64>() / 3.0;
    let mg = gs.iter().sum::<f64>() / 3.0;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxg: f64 = xs.iter().zip(&gs).map(|(x, g)| (x - mx) * (g - mg)).sum();
    if sxx <= 1e-20 * span * span {
        return None;
    }
    let slope = sxg / sxx;
    let cos_w = 0.5 * slope;
    if !(cos_w > -0.999 && cos_w < 0.999) {
        return None;
    }
    let intercept = mg - slope * mx;
    let offset = intercept / (2.0 - 2.0 * cos_w);
    let w = cos_w.acos();

    let (mut num_c, mut num_s, mut den_c, mut den_s) = (0.0, 0.0, 0.0, 0.0);
    for (k, &v) in s.iter().enumerate() {
        let m = k as f64 - 2.0;
        let (sn, cs) = (w * m).sin_cos();
        num_c += (v - offset) * cs;
        num_s += (v - offset) * sn;
        den_c += cs * cs;
        den_s += sn * sn;
    }
    if den_s < 1e-6 || den_c < 1e-6 {
        return None;
    }
    let (c, sn) = (num_c / den_c, num_s / den_s);
    let amp = c.hypot(sn);
    let mut phase = sn.atan2(c);
    let value = if is_max {
        offset + amp
    } else {
        phase += std::f64::consts::PI;
        if phase > std::f64::consts::PI {
            phase -= 2.0 * std::f64::consts::PI;
        }
        offset - amp
    };
    let pos = phase / w;
    if pos.abs() > 1.0 {
        return None;
    }
    let centre = s[2];
    let consistent = if is_max {
        value >= centre - 1e-12 * span && value <= centre + span
    } else {
        value <= centre + 1e-12 * span && value >= centre - span
    };
    consistent.then_some((pos, value))
}
