//! Seismogram processing: Butterworth band-pass, Fourier amplitude spectra,
//! response spectra and Anderson goodness-of-fit scores.

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("invalid band [{f_lo}, {f_hi}] Hz for Nyquist {nyquist} Hz")]
    InvalidBand { f_lo: f64, f_hi: f64, nyquist: f64 },
    #[error("filter order must be at least 1")]
    InvalidOrder,
    #[error("trace needs dt > 0 and at least 2 samples")]
    InvalidTrace,
    #[error("traces differ in length or sampling ({0} vs {1} samples)")]
    Mismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterMode {
    /// Single forward pass.
    #[default]
    Causal,
    /// Forward then backward pass (squared magnitude, no phase shift).
    ZeroPhase,
}

/// One biquad `b0 + b1 z^-1 + b2 z^-2 / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let num = self.b[0] + self.b[1] * z_inv + self.b[2] * z_inv * z_inv;
        let den = 1.0 + self.a[0] * z_inv + self.a[1] * z_inv * z_inv;
        num / den
    }

    fn run(&self, x: &mut [f64]) {
        // transposed direct form II
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b[0] * input + s1;
            s1 = self.b[1] * input - self.a[0] * y + s2;
            s2 = self.b[2] * input - self.a[1] * y;
            *v = y;
        }
    }
}

/// Digital Butterworth band-pass from the bilinear transform of a prewarped
/// analog prototype of the given order, as second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPass {
    pub sections: Vec<Biquad>,
    pub dt: f64,
}

impl BandPass {
    pub fn design(dt: f64, f_lo: f64, f_hi: f64, order: usize) -> Result<Self, SignalError> {
        let nyquist = 0.5 / dt;
        if !(dt > 0.0) {
            return Err(SignalError::InvalidTrace);
        }
        if !(0.0 < f_lo && f_lo < f_hi && f_hi < nyquist) {
            return Err(SignalError::InvalidBand { f_lo, f_hi, nyquist });
        }
        if order == 0 {
            return Err(SignalError::InvalidOrder);
        }
        let fs2 = 2.0 / dt;
        let w_lo = fs2 * (std::f64::consts::PI * f_lo * dt).tan();
        let w_hi = fs2 * (std::f64::consts::PI * f_hi * dt).tan();
        let bw = w_hi - w_lo;
        let w0_sq = w_lo * w_hi;
        // analog band-pass poles from the low-pass prototype poles
        let mut poles = Vec::with_capacity(2 * order);
        for k in 0..order {
            let theta = std::f64::consts::PI * (2 * k + 1 + order) as f64 / (2 * order) as f64;
            let p = Complex64::from_polar(1.0, theta);
            let pb = p * bw;
            let disc = (pb * pb - 4.0 * w0_sq).sqrt();
            poles.push((pb + disc) / 2.0);
            poles.push((pb - disc) / 2.0);
        }
        let zpoles: Vec<Complex64> = poles.iter().map(|s| (fs2 + s) / (fs2 - s)).collect();
        // pair conjugates; real poles are paired among themselves
        let mut upper: Vec<Complex64> = zpoles.iter().copied().filter(|z| z.im > 1e-14).collect();
        upper.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        let mut reals: Vec<f64> = zpoles.iter().filter(|z| z.im.abs() <= 1e-14).map(|z| z.re).collect();
        reals.sort_by(f64::total_cmp);
        let mut dens: Vec<[f64; 2]> = upper.iter().map(|z| [-2.0 * z.re, z.norm_sqr()]).collect();
        for pair in reals.chunks(2) {
            dens.push(match pair {
                [r1, r2] => [-(r1 + r2), r1 * r2],
                [r] => [-r, 0.0],
                _ => unreachable!(),
            });
        }
        // each section carries one zero at z = 1 and one at z = -1
        let sections = dens.into_iter().map(|a| Biquad { b: [1.0, 0.0, -1.0], a }).collect();
        let mut filter = Self { sections, dt };
        // unit gain at the (prewarped) geometric centre
        let f_c = (w0_sq.sqrt() / fs2).atan() / (std::f64::consts::PI * dt);
        let g = filter.gain(f_c);
        for b in &mut filter.sections[0].b {
            *b /= g;
        }
        Ok(filter)
    }

    /// Magnitude of the single-pass frequency response.
    pub fn gain(&self, f: f64) -> f64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * self.dt);
        self.sections
            .iter()
            .map(|s| s.response(z_inv))
            .product::<Complex64>()
            .norm()
    }

    pub fn apply(&self, x: &[f64], mode: FilterMode) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            s.run(&mut y);
        }
        if mode == FilterMode::ZeroPhase {
            y.reverse();
            for s in &self.sections {
                s.run(&mut y);
            }
            y.reverse();
        }
        y
    }
}

/// Band-pass filter a trace; `order` is the prototype order.
pub fn butterworth_bandpass(
    x: &[f64],
    dt: f64,
    f_lo: f64,
    f_hi: f64,
    order: usize,
    mode: FilterMode,
) -> Result<Vec<f64>, SignalError> {
    if x.len() < 2 {
        return Err(SignalError::InvalidTrace);
    }
    Ok(BandPass::design(dt, f_lo, f_hi, order)?.apply(x, mode))
}

/// One-sided amplitude spectrum `|X_k| dt` on `f_k = k / (N dt)`, `k = 0..=N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub amps: Vec<f64>,
    pub n: usize,
    pub df: f64,
}

impl Spectrum {
    /// `int |X(f)|^2 df` over both signs of frequency.
    pub fn energy(&self) -> f64 {
        let mut e = 0.0;
        for (k, a) in self.amps.iter().enumerate() {
            let mirrored = k != 0 && !(self.n % 2 == 0 && k == self.n / 2);
            e += if mirrored { 2.0 } else { 1.0 } * a * a;
        }
        e * self.df
    }
}

pub fn fourier_amplitude_spectrum(x: &[f64], dt: f64) -> Spectrum {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if n > 0 {
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    }
    let df = 1.0 / (n.max(1) as f64 * dt);
    let half = n / 2;
    Spectrum {
        freqs: (0..=half).map(|k| k as f64 * df).collect(),
        amps: buf.iter().take(half + 1).map(|c| c.norm() * dt).collect(),
        n,
        df,
    }
}

/// Peak absolute acceleration of a damped oscillator (period `T`, damping
/// ratio `zeta`) under base acceleration `acc`, integrated with the average
/// acceleration Newmark scheme on a grid refined to `dt <= T / 20`.
pub fn response_spectrum(acc: &[f64], dt: f64, periods: &[f64], zeta: f64) -> Vec<f64> {
    periods.iter().map(|&t| sdof_peak(acc, dt, t, zeta)).collect()
}

fn sdof_peak(acc: &[f64], dt: f64, period: f64, zeta: f64) -> f64 {
    if acc.len() < 2 {
        return 0.0;
    }
    let sub = ((20.0 * dt / period).ceil() as usize).max(1);
    let h = dt / sub as f64;
    let w = 2.0 * std::f64::consts::PI / period;
    let (c, k) = (2.0 * zeta * w, w * w);
    // effective stiffness of the average-acceleration scheme (unit mass)
    let k_eff = k + 2.0 * c / h + 4.0 / (h * h);
    let (mut u, mut v) = (0.0, 0.0);
    let mut a = -acc[0];
    let mut peak = (c * v + k * u).abs();
    for i in 0..acc.len() - 1 {
        for j in 1..=sub {
            let s = j as f64 / sub as f64;
            let ag = acc[i] + s * (acc[i + 1] - acc[i]);
            let rhs = -ag + (4.0 / (h * h)) * u + (4.0 / h) * v + a + c * ((2.0 / h) * u + v);
            let u_new = rhs / k_eff;
            let v_new = 2.0 * (u_new - u) / h - v;
            let a_new = 4.0 * (u_new - u) / (h * h) - 4.0 * v / h - a;
            u = u_new;
            v = v_new;
            a = a_new;
            // absolute acceleration = relative + ground = -(c v + k u)
            peak = peak.max((c * v + k * u).abs());
        }
    }
    peak
}

/// Anderson's scoring functional `10 exp(-((p1 - p2) / min(p1, p2))^2)`.
/// Equal values score 10; a zero against a non-zero value scores 0.
pub fn anderson_score(p1: f64, p2: f64) -> f64 {
    if p1 == p2 {
        return 10.0;
    }
    let m = p1.min(p2);
    if !(m > 0.0) {
        return 0.0;
    }
    let r = (p1 - p2) / m;
    10.0 * (-r * r).exp()
}

/// Duration between 5 % and 75 % of the cumulative `int v^2 dt`.
pub fn energy_duration(v: &[f64], dt: f64) -> f64 {
    let mut cum = Vec::with_capacity(v.len());
    let mut s = 0.0;
    for x in v {
        s += x * x * dt;
        cum.push(s);
    }
    if s == 0.0 {
        return 0.0;
    }
    let crossing = |level: f64| -> f64 {
        let target = level * s;
        let k = cum.iter().position(|&c| c >= target).unwrap_or(cum.len() - 1);
        if k == 0 {
            return 0.0;
        }
        let (c0, c1) = (cum[k - 1], cum[k]);
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
        (k as f64 - 1.0 + frac) * dt
    };
    crossing(0.75) - crossing(0.05)
}

pub const CRITERIA: [&str; 5] = ["ED", "PGV", "PGU", "RS", "FAS"];

/// One component of one station: displacement and velocity on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentTrace {
    pub dt: f64,
    pub disp: Vec<f64>,
    pub vel: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentScore {
    /// ED, PGV, PGU, RS, FAS.
    pub scores: [f64; 5],
    pub mean: f64,
    /// Set when either trace carries no energy and the criteria are undefined.
    pub undefined: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofReport {
    pub components: Vec<ComponentScore>,
    pub mean: f64,
}

/// `n` logarithmically spaced values from `a` to `b`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| (a.ln() + (b.ln() - a.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

fn differentiate(v: &[f64], dt: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if n < 2 {
                0.0
            } else if i == 0 {
                (v[1] - v[0]) / dt
            } else if i == n - 1 {
                (v[n - 1] - v[n - 2]) / dt
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

fn peak(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Scores one component pair; the traces must already be filtered alike and
/// share sampling. RS and FAS average the score over the band.
pub fn component_gof(
    syn: &ComponentTrace,
    rec: &ComponentTrace,
    band: (f64, f64),
) -> Result<ComponentScore, SignalError> {
    if syn.vel.len() != rec.vel.len() || syn.disp.len() != rec.disp.len() || syn.dt != rec.dt {
        return Err(SignalError::Mismatch(syn.vel.len(), rec.vel.len()));
    }
    if syn.vel.len() < 2 || !(syn.dt > 0.0) {
        return Err(SignalError::InvalidTrace);
    }
    let dt = syn.dt;
    let energy = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    if energy(&syn.vel) == 0.0 || energy(&rec.vel) == 0.0 {
        return Ok(ComponentScore {
            scores: [0.0; 5],
            mean: 0.0,
            undefined: true,
        });
    }
    let ed = anderson_score(energy_duration(&syn.vel, dt), energy_duration(&rec.vel, dt));
    let pgv = anderson_score(peak(&syn.vel), peak(&rec.vel));
    let pgu = anderson_score(peak(&syn.disp), peak(&rec.disp));

    let periods = log_grid(1.0 / band.1, 1.0 / band.0, 20);
    let rs_s = response_spectrum(&differentiate(&syn.vel, dt), dt, &periods, 0.05);
    let rs_r = response_spectrum(&differentiate(&rec.vel, dt), dt, &periods, 0.05);
    let rs = rs_s.iter().zip(&rs_r).map(|(a, b)| anderson_score(*a, *b)).sum::<f64>() / periods.len() as f64;

    let fs = fourier_amplitude_spectrum(&syn.vel, dt);
    let fr = fourier_amplitude_spectrum(&rec.vel, dt);
    let in_band: Vec<usize> = (0..fs.freqs.len())
        .filter(|&k| fs.freqs[k] >= band.0 && fs.freqs[k] <= band.1)
        .collect();
    let fas = if in_band.is_empty() {
        anderson_score(fs.energy(), fr.energy())
    } else {
        in_band
            .iter()
            .map(|&k| anderson_score(fs.amps[k], fr.amps[k]))
            .sum::<f64>()
            / in_band.len() as f64
    };
    let scores = [ed, pgv, pgu, rs, fas];
    Ok(ComponentScore {
        scores,
        mean: scores.iter().sum::<f64>() / 5.0,
        undefined: false,
    })
}

/// Per-component scores and the station mean over components.
pub fn anderson_gof(
    syn: &[ComponentTrace],
    rec: &[ComponentTrace],
    band: (f64, f64),
) -> Result<GofReport, SignalError> {
    if syn.len() != rec.len() {
        return Err(SignalError::Mismatch(syn.len(), rec.len()));
    }
    let components = syn
        .iter()
        .zip(rec)
        .map(|(s, r)| component_gof(s, r, band))
        .collect::<Result<Vec<_>, _>>()?;
    let mean = components.iter().map(|c| c.mean).sum::<f64>() / components.len().max(1) as f64;
    Ok(GofReport { components, mean })
}

/// Linear interpolation of a uniformly sampled series onto `n` samples of step `dt_out`;
/// values past the end hold the last sample.
pub fn resample_linear(x: &[f64], dt_in: f64, dt_out: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = k as f64 * dt_out / dt_in;
            let i = s.floor() as usize;
            if i + 1 >= x.len() {
                *x.last().unwrap_or(&0.0)
            } else {
                let f = s - i as f64;
                x[i] + f * (x[i + 1] - x[i])
            }
        })
        .collect()
}
