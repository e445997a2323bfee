//! Classical coupled-mode theory with delayed boundary conditions.
//!
//! Each cavity obeys `da/dt = −(iδ + Γ)a + √Γ (S_in^L + S_in^R)` and passes
//! `S_out = S_in − √Γ a` on. Superscript `L` marks the right-moving channel
//! (entering from the left), `R` the left-moving one. Mirrors and the
//! cavity-to-cavity segment feed delayed, phase-shifted outputs back as
//! inputs. Frame rotating at the reference frequency.
//!
//! Stepping is RK4 on a grid commensurate with every delay. Outputs are kept
//! at half steps (midpoints from cubic Hermite interpolation) with separate
//! left limits at grid points, because the initial kick makes inputs jump
//! at every multiple of a delay.

use std::io::Write;

use num_complex::Complex64;

use crate::full_model::{full_model_evolve, CmtConfig, FullModelConfig};
use crate::{Error, Result};

/// Energy drift that aborts a run.
pub const MAX_ENERGY_DRIFT: f64 = 1e-4;

/// Output streams, in order: c1 right-moving, c1 left-moving, c2 right-moving,
/// c2 left-moving.
const C1_RIGHT: usize = 0;
const C1_LEFT: usize = 1;
const C2_RIGHT: usize = 2;
const C2_LEFT: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CmtTrace {
    pub dt: f64,
    pub times: Vec<f64>,
    pub a1: Vec<Complex64>,
    pub a2: Vec<Complex64>,
    /// Outputs at grid times (right limits), stream order as documented above.
    pub s_out: [Vec<Complex64>; 4],
    /// Cavity energy plus energy in flight (and escaped, for open ends).
    pub total_energy: Vec<f64>,
    pub max_energy_residual: f64,
}

impl CmtTrace {
    pub fn population_c1(&self) -> Vec<f64> {
        self.a1.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn population_c2(&self) -> Vec<f64> {
        self.a2.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,re_a1,im_a1,re_a2,im_a2,energy_c1,energy_c2,total_energy")?;
        for k in 0..self.times.len() {
            let (a1, a2) = (self.a1[k], self.a2[k]);
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                self.times[k],
                a1.re,
                a1.im,
                a2.re,
                a2.im,
                a1.norm_sqr(),
                a2.norm_sqr(),
                self.total_energy[k]
            )?;
        }
        Ok(())
    }
}

/// Delay in steps, or an error if `tau` is not a multiple of `dt`.
fn steps_of(tau: f64, dt: f64) -> Result<usize> {
    let q = tau / dt;
    let m = q.round();
    if (q - m).abs() > 1e-9 * q.max(1.0) || m < 1.0 {
        return Err(Error::IncommensurateStep { delay: tau, dt });
    }
    Ok(m as usize)
}

/// Largest step that divides every delay, resolves each with at least eight
/// steps and keeps `Γ·dt ≤ 0.01`.
pub fn default_step(cfg: &CmtConfig) -> Result<f64> {
    cfg.validate()?;
    let taus = [cfg.tau_m1, cfg.tau_12, cfg.tau_m2];
    let tmin = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let gmax = cfg.gamma1.max(cfg.gamma2);
    let q_min = 8usize.max((tmin * gmax / 0.01).ceil() as usize);
    for q in q_min..=100_000 {
        let dt = tmin / q as f64;
        if taus.iter().all(|&t| steps_of(t, dt).is_ok()) {
            return Ok(dt);
        }
    }
    Err(Error::IncommensurateStep { delay: tmin, dt: tmin / 100_000.0 })
}

struct Stream {
    /// Values at half steps; grid points hold right limits.
    right: Vec<Complex64>,
    /// Left limits at grid points.
    left: Vec<Complex64>,
    /// `∫_0^{k dt} |S|²` at grid points.
    cumulative: Vec<f64>,
}

impl Stream {
    fn new(capacity: usize) -> Self {
        Self {
            right: Vec::with_capacity(2 * capacity),
            left: Vec::with_capacity(capacity),
            cumulative: Vec::with_capacity(capacity),
        }
    }

    /// Value at half-step index `h`; grid points give the left limit when asked.
    fn at(&self, h: isize, left_limit: bool) -> Complex64 {
        if h < 0 {
            return Complex64::default();
        }
        let h = h as usize;
        if left_limit && h.is_multiple_of(2) {
            self.left[h / 2]
        } else {
            self.right[h]
        }
    }

    /// Energy emitted over the last `m` steps before grid point `k`.
    fn window(&self, k: usize, m: usize) -> f64 {
        self.cumulative[k] - if k >= m { self.cumulative[k - m] } else { 0.0 }
    }
}

struct Network {
    kappa: [f64; 2],
    detune: [f64; 2],
    gamma: [f64; 2],
    /// `(source stream, delay in half steps, phase factor)` feeding each cavity
    /// input, or `None` for an open end. Order: c1 from left, c1 from right,
    /// c2 from left, c2 from right.
    inputs: [Option<(usize, isize, Complex64)>; 4],
}

impl Network {
    fn new(cfg: &CmtConfig, dt: f64) -> Result<Self> {
        let m1 = 2 * steps_of(cfg.tau_m1, dt)? as isize;
        let m12 = 2 * steps_of(cfg.tau_12, dt)? as isize;
        let m2 = 2 * steps_of(cfg.tau_m2, dt)? as isize;
        let th = cfg.phase_settings();
        let ph = |x: f64| Complex64::from_polar(1.0, x);
        let (mirror1, mirror2) = if cfg.open_ends {
            (None, None)
        } else {
            (Some((C1_LEFT, m1, ph(th.theta_m1))), Some((C2_RIGHT, m2, ph(th.theta_m2))))
        };
        Ok(Self {
            kappa: [cfg.gamma1.sqrt(), cfg.gamma2.sqrt()],
            detune: [cfg.omega_c1 - cfg.omega_ref, cfg.omega_c2 - cfg.omega_ref],
            gamma: [cfg.gamma1, cfg.gamma2],
            inputs: [mirror1, Some((C2_LEFT, m12, ph(th.theta_12))), Some((C1_RIGHT, m12, ph(th.theta_12))), mirror2],
        })
    }

    /// Cavity inputs at half-step `h`.
    fn inputs(&self, streams: &[Stream; 4], h: isize, left_limit: bool) -> [Complex64; 4] {
        std::array::from_fn(|i| match self.inputs[i] {
            Some((src, delay, phase)) => phase * streams[src].at(h - delay, left_limit),
            None => Complex64::default(),
        })
    }

    fn derivative(&self, a: [Complex64; 2], s_in: &[Complex64; 4]) -> [Complex64; 2] {
        std::array::from_fn(|l| {
            -Complex64::new(self.gamma[l], self.detune[l]) * a[l] + self.kappa[l] * (s_in[2 * l] + s_in[2 * l + 1])
        })
    }

    fn outputs(&self, a: [Complex64; 2], s_in: &[Complex64; 4]) -> [Complex64; 4] {
        [
            s_in[0] - self.kappa[0] * a[0],
            s_in[1] - self.kappa[0] * a[0],
            s_in[2] - self.kappa[1] * a[1],
            s_in[3] - self.kappa[1] * a[1],
        ]
    }
}

fn axpy(a: [Complex64; 2], h: f64, k: [Complex64; 2]) -> [Complex64; 2] {
    [a[0] + k[0] * h, a[1] + k[1] * h]
}

/// Evolves the cavity amplitudes from `initial` with empty waveguides.
pub fn cmt_evolve(cfg: &CmtConfig, initial: [Complex64; 2], horizon: f64, dt: f64) -> Result<CmtTrace> {
    cmt_evolve_delayed(cfg, initial, horizon, dt, 0)
}

/// As [`cmt_evolve`] with the cavities excited at step `start` instead of 0.
pub fn cmt_evolve_delayed(
    cfg: &CmtConfig,
    initial: [Complex64; 2],
    horizon: f64,
    dt: f64,
    start: usize,
) -> Result<CmtTrace> {
    cfg.validate()?;
    if !(dt.is_finite() && dt > 0.0) || !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::InvalidParameter(format!("need dt > 0 and horizon >= 0, got {dt}, {horizon}")));
    }
    for tau in [cfg.tau_m1, cfg.tau_12, cfg.tau_m2] {
        if steps_of(tau, dt)? < 8 {
            return Err(Error::InvalidParameter(format!("step {dt} resolves delay {tau} with fewer than 8 steps")));
        }
    }
    if cfg.gamma1.max(cfg.gamma2) * dt > 0.01 + 1e-12 {
        return Err(Error::InvalidParameter(format!("Gamma dt = {} exceeds 0.01", cfg.gamma1.max(cfg.gamma2) * dt)));
    }
    let net = Network::new(cfg, dt)?;
    let [m1, m12, m2] = [cfg.tau_m1, cfg.tau_12, cfg.tau_m2].map(|t| steps_of(t, dt).unwrap_or(0));
    let n = (horizon / dt).round() as usize;
    let mut streams: [Stream; 4] = std::array::from_fn(|_| Stream::new(n + 1));
    let mut trace = CmtTrace {
        dt,
        times: Vec::with_capacity(n + 1),
        a1: Vec::with_capacity(n + 1),
        a2: Vec::with_capacity(n + 1),
        s_out: std::array::from_fn(|_| Vec::with_capacity(n + 1)),
        total_energy: Vec::with_capacity(n + 1),
        max_energy_residual: 0.0,
    };
    let e0 = initial[0].norm_sqr() + initial[1].norm_sqr();
    let zero = [Complex64::default(); 2];
    let mut a = if start == 0 { initial } else { zero };
    let mut escaped = 0.0;

    // grid point 0: left limit is the unexcited network
    {
        let s_in = net.inputs(&streams, 0, false);
        let out = net.outputs(a, &s_in);
        for (i, s) in streams.iter_mut().enumerate() {
            s.right.push(out[i]);
            s.left.push(Complex64::default());
            s.cumulative.push(0.0);
        }
    }
    for k in 0..=n {
        if k > 0 {
            let h0 = 2 * (k as isize - 1);
            let in0 = net.inputs(&streams, h0, false);
            let in_mid = net.inputs(&streams, h0 + 1, false);
            let in1 = net.inputs(&streams, h0 + 2, true);
            let k1 = net.derivative(a, &in0);
            let k2 = net.derivative(axpy(a, 0.5 * dt, k1), &in_mid);
            let k3 = net.derivative(axpy(a, 0.5 * dt, k2), &in_mid);
            let k4 = net.derivative(axpy(a, dt, k3), &in1);
            let mut next = [Complex64::default(); 2];
            for l in 0..2 {
                next[l] = a[l] + (k1[l] + k2[l] * 2.0 + k3[l] * 2.0 + k4[l]) * (dt / 6.0);
            }
            let end_slope = net.derivative(next, &in1);
            let mid: [Complex64; 2] =
                std::array::from_fn(|l| (a[l] + next[l]) * 0.5 + (k1[l] - end_slope[l]) * (dt / 8.0));
            if k == start {
                next = initial;
            }
            let out_mid = net.outputs(mid, &in_mid);
            let out_left = net.outputs(if k == start { zero } else { next }, &in1);
            let in_right = net.inputs(&streams, h0 + 2, false);
            let out_right = net.outputs(next, &in_right);
            for (i, s) in streams.iter_mut().enumerate() {
                let y0 = s.right[h0 as usize];
                s.right.push(out_mid[i]);
                s.right.push(out_right[i]);
                s.left.push(out_left[i]);
                let simpson = dt / 6.0 * (y0.norm_sqr() + 4.0 * out_mid[i].norm_sqr() + out_left[i].norm_sqr());
                let c = s.cumulative[k - 1] + simpson;
                s.cumulative.push(c);
            }
            if cfg.open_ends {
                escaped = streams[C1_LEFT].cumulative[k] + streams[C2_RIGHT].cumulative[k];
            }
            a = next;
        }
        let in_flight = streams[C1_RIGHT].window(k, m12)
            + streams[C2_LEFT].window(k, m12)
            + if cfg.open_ends { 0.0 } else { streams[C1_LEFT].window(k, m1) + streams[C2_RIGHT].window(k, m2) };
        let total = a[0].norm_sqr() + a[1].norm_sqr() + in_flight + escaped;
        let expected = if k >= start { e0 } else { 0.0 };
        if e0 > 0.0 && k >= start {
            let residual = (total - expected).abs() / e0;
            trace.max_energy_residual = trace.max_energy_residual.max(residual);
            if residual > MAX_ENERGY_DRIFT {
                return Err(Error::UnstableStep { drift: residual, t: k as f64 * dt });
            }
        }
        trace.times.push(k as f64 * dt);
        trace.a1.push(a[0]);
        trace.a2.push(a[1]);
        for (i, s) in streams.iter().enumerate() {
            trace.s_out[i].push(s.right[2 * k]);
        }
        trace.total_energy.push(total);
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmtComparison {
    pub dt: f64,
    pub n_modes: usize,
    /// Largest population difference over time for c1 and c2.
    pub max_deviation_c1: f64,
    pub max_deviation_c2: f64,
    pub max_energy_residual: f64,
}

impl CmtComparison {
    pub fn max_deviation(&self) -> f64 {
        self.max_deviation_c1.max(self.max_deviation_c2)
    }
}

/// Runs the delay-line model and the multimode model from a photon in c1 and
/// compares cavity populations on the CMT grid.
pub fn compare_full_model(cfg: &CmtConfig, n_modes: usize, horizon: f64) -> Result<CmtComparison> {
    let dt = default_step(cfg)?;
    let one = [Complex64::new(1.0, 0.0), Complex64::default()];
    let cmt = cmt_evolve(cfg, one, horizon, dt)?;
    let full = full_model_evolve(&FullModelConfig::centered(*cfg, n_modes)?, one, &cmt.times)?;
    let dev = |x: Vec<f64>, y: Vec<f64>| x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    Ok(CmtComparison {
        dt,
        n_modes,
        max_deviation_c1: dev(cmt.population_c1(), full.population_c1()),
        max_deviation_c2: dev(cmt.population_c2(), full.population_c2()),
        max_energy_residual: cmt.max_energy_residual,
    })
}
