//! Zero-energy radial solution `-u'' + V u = 0`, `u(0) = 0`, and the
//! quantities built from `psi0 = u / r`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::momentum::BsSpectrum;
use super::potential::RadialPotential;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroEnergySettings {
    /// Largest RK4 step inside the potential support.
    pub step: f64,
    /// Outer radius; the criticality test is applied here.
    pub r_max: f64,
    /// Accepted `|u'(r_max)| r_max / |u(r_max)|`.
    pub log_derivative_tol: f64,
    /// Samples placed geometrically between the support edge and `r_max`.
    pub exterior_samples: usize,
}

impl Default for ZeroEnergySettings {
    fn default() -> Self {
        Self {
            step: 1e-3,
            r_max: 50.0,
            log_derivative_tol: 1e-4,
            exterior_samples: 400,
        }
    }
}

/// `psi0 = u / r` normalized so that `||∇psi0|| = 1`, i.e. `4π ∫ u'² dr = 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroEnergySolution {
    pub r_samples: Vec<f64>,
    pub psi0: Vec<f64>,
    /// `psi0(r) = c / r` beyond the support (up to the residual exterior slope).
    pub tail_coefficient: f64,
    pub a1: f64,
    pub a2: f64,
    /// `∫|V| psi0 r² dr = (4π)^{-1} ∫|V| psi0 d³r`.
    pub c0: f64,
    pub support: f64,
    /// `u'` beyond the support; zero at exact criticality.
    pub exterior_slope: f64,
    u: Vec<f64>,
    du: Vec<f64>,
    /// `∫_0^r u² dr` at each sample.
    cum_u2: Vec<f64>,
}

#[derive(Clone, Copy)]
struct State {
    u: f64,
    du: f64,
    u2: f64,
    du2: f64,
    vu: f64,
}

impl State {
    fn axpy(self, h: f64, k: State) -> State {
        State {
            u: self.u + h * k.u,
            du: self.du + h * k.du,
            u2: self.u2 + h * k.u2,
            du2: self.du2 + h * k.du2,
            vu: self.vu + h * k.vu,
        }
    }
}

fn deriv(v: &RadialPotential, r: f64, s: State) -> State {
    let vr = v.value(r);
    State {
        u: s.du,
        du: vr * s.u,
        u2: s.u * s.u,
        du2: s.du * s.du,
        vu: vr.abs() * s.u * r,
    }
}

struct Interior {
    r: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
    cum: Vec<f64>,
    end: State,
}

/// RK4 from the origin to the support edge, stepping exactly onto every breakpoint.
fn integrate_interior(v: &RadialPotential, settings: &ZeroEnergySettings) -> Interior {
    let support = v.support_radius();
    let mut bps = v.breakpoints();
    bps.retain(|&x| x <= support);

    let mut r_s = vec![0.0];
    let mut st = State {
        u: 0.0,
        du: 1.0,
        u2: 0.0,
        du2: 0.0,
        vu: 0.0,
    };
    let mut us = vec![0.0];
    let mut dus = vec![1.0];
    let mut cum = vec![0.0];
    for seg in bps.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let n = ((b - a) / settings.step).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        // evaluate V strictly inside the segment so shell edges are respected
        let inner = |r: f64| r.clamp(a + 1e-12 * h, b - 1e-12 * h);
        for i in 0..n {
            let r = a + i as f64 * h;
            let k1 = deriv(v, inner(r), st);
            let k2 = deriv(v, inner(r + 0.5 * h), st.axpy(0.5 * h, k1));
            let k3 = deriv(v, inner(r + 0.5 * h), st.axpy(0.5 * h, k2));
            let k4 = deriv(v, inner(r + h), st.axpy(h, k3));
            let mut next = st;
            next.u += h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
            next.du += h / 6.0 * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
            next.u2 += h / 6.0 * (k1.u2 + 2.0 * k2.u2 + 2.0 * k3.u2 + k4.u2);
            next.du2 += h / 6.0 * (k1.du2 + 2.0 * k2.du2 + 2.0 * k3.du2 + k4.du2);
            next.vu += h / 6.0 * (k1.vu + 2.0 * k2.vu + 2.0 * k3.vu + k4.vu);
            st = next;
            r_s.push(if i + 1 == n {
                b
            } else {
                a + (i + 1) as f64 * h
            });
            us.push(st.u);
            dus.push(st.du);
            cum.push(st.u2);
        }
    }

    Interior {
        r: r_s,
        u: us,
        du: dus,
        cum,
        end: st,
    }
}

/// `u'/u` at the support edge; zero exactly at criticality.
pub fn exterior_log_derivative(v: &RadialPotential, settings: &ZeroEnergySettings) -> Result<f64> {
    if !(settings.step > 0.0) {
        return Err(Error::invalid("zero-energy step must be positive"));
    }
    let end = integrate_interior(v, settings).end;
    Ok(end.du / end.u)
}

pub fn zero_energy_solution(
    v: &RadialPotential,
    settings: &ZeroEnergySettings,
) -> Result<ZeroEnergySolution> {
    if !(settings.step > 0.0) || settings.exterior_samples < 2 {
        return Err(Error::invalid(
            "zero-energy settings need a positive step and >= 2 exterior samples",
        ));
    }
    let support = v.support_radius();
    let r_max = settings.r_max.max(support);
    let Interior {
        r: mut r_s,
        u: mut us,
        du: mut dus,
        mut cum,
        end: st,
    } = integrate_interior(v, settings);

    // exterior: V = 0, so u is exactly linear
    let (u_s, slope) = (st.u, st.du);
    if r_max > support {
        let m = settings.exterior_samples;
        let start = support.max(1e-3);
        let ratio = (r_max / start).ln();
        for k in 1..=m {
            let r = if k == m {
                r_max
            } else {
                start * (ratio * k as f64 / m as f64).exp()
            };
            if r <= support {
                continue;
            }
            let t = r - support;
            let u = u_s + slope * t;
            r_s.push(r);
            us.push(u);
            dus.push(slope);
            cum.push(st.u2 + u_s * u_s * t + u_s * slope * t * t + slope * slope * t * t * t / 3.0);
        }
    }

    let u_end = *us.last().unwrap();
    let logd = slope.abs() * r_max / u_end.abs();
    if !(logd < settings.log_derivative_tol) || us[1..].iter().any(|&u| !(u > 0.0)) {
        return Err(Error::NotCritical(format!(
            "|u'(r_max)| r_max / |u(r_max)| = {logd:e} at r_max = {r_max}"
        )));
    }

    let du2_total = st.du2 + slope * slope * (r_max - support);
    let kappa = 1.0 / (4.0 * PI * du2_total).sqrt();
    let u: Vec<f64> = us.iter().map(|x| x * kappa).collect();
    let du: Vec<f64> = dus.iter().map(|x| x * kappa).collect();
    let cum_u2: Vec<f64> = cum.iter().map(|x| x * kappa * kappa).collect();
    let psi0: Vec<f64> = r_s
        .iter()
        .zip(&u)
        .zip(&du)
        .map(|((&r, &u), &du)| if r == 0.0 { du } else { u / r })
        .collect();
    let (a1, a2) = r_s
        .iter()
        .zip(&psi0)
        .map(|(r, p)| (1.0 + r) * p)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(x), hi.max(x))
        });

    Ok(ZeroEnergySolution {
        r_samples: r_s,
        psi0,
        tail_coefficient: u_s * kappa,
        a1,
        a2,
        c0: st.vu * kappa,
        support,
        exterior_slope: slope * kappa,
        u,
        du,
        cum_u2,
    })
}

impl ZeroEnergySolution {
    fn locate(&self, r: f64) -> usize {
        self.r_samples
            .partition_point(|&x| x <= r)
            .clamp(1, self.r_samples.len() - 1)
            - 1
    }

    /// `u(r)` by cubic Hermite interpolation inside the support, exact outside.
    pub fn u_at(&self, r: f64) -> f64 {
        if r >= self.support {
            return self.tail_coefficient + self.exterior_slope * (r - self.support);
        }
        let i = self.locate(r);
        hermite(
            self.r_samples[i],
            self.r_samples[i + 1],
            self.u[i],
            self.u[i + 1],
            self.du[i],
            self.du[i + 1],
            r,
        )
    }

    pub fn psi_at(&self, r: f64) -> f64 {
        if r == 0.0 {
            return self.du[0];
        }
        self.u_at(r) / r
    }

    fn cumulative(&self, r: f64) -> f64 {
        if r >= self.support {
            let t = r - self.support;
            let (c, s) = (self.tail_coefficient, self.exterior_slope);
            let at_support = self.cumulative_inside(self.support);
            return at_support + c * c * t + c * s * t * t + s * s * t * t * t / 3.0;
        }
        self.cumulative_inside(r)
    }

    fn cumulative_inside(&self, r: f64) -> f64 {
        let i = self.locate(r.min(self.support));
        let (a, b) = (self.r_samples[i], self.r_samples[i + 1]);
        if r >= b {
            return self.cum_u2[i + 1];
        }
        // d/dr ∫u² = u²
        let ua = self.u[i];
        let ub = self.u[i + 1];
        hermite(
            a,
            b,
            self.cum_u2[i],
            self.cum_u2[i + 1],
            ua * ua,
            ub * ub,
            r,
        )
    }

    /// `4π ∫_a^b psi0² r² dr`.
    pub fn radial_norm(&self, a: f64, b: f64) -> f64 {
        4.0 * PI * (self.cumulative(b) - self.cumulative(a))
    }

    /// Largest `|psi0(r) r - c| / |c|` over exterior samples.
    pub fn exterior_deviation(&self) -> f64 {
        self.r_samples
            .iter()
            .zip(&self.psi0)
            .filter(|(r, _)| **r > self.support)
            .map(|(r, p)| (p * r - self.tail_coefficient).abs() / self.tail_coefficient.abs())
            .fold(0.0, f64::max)
    }
}

fn hermite(a: f64, b: f64, fa: f64, fb: f64, da: f64, db: f64, x: f64) -> f64 {
    let h = b - a;
    let t = (x - a) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * fa
        + (t3 - 2.0 * t2 + t) * h * da
        + (-2.0 * t3 + 3.0 * t2) * fb
        + (t3 - t2) * h * db
}

/// `(4π ∫_0^R psi² r² dr, 4π ∫_R^{2R} psi² r² dr)` from samples, by piecewise
/// quadratic quadrature (average of the two three-point interpolants on each interval).
pub fn capture_integrals(r: &[f64], psi: &[f64], big_r: f64) -> Result<(f64, f64)> {
    if r.len() != psi.len() || r.len() < 3 {
        return Err(Error::invalid(
            "capture integrals need at least three matching samples",
        ));
    }
    if !(big_r >= 0.0) {
        return Err(Error::invalid(format!(
            "R must be nonnegative, got {big_r}"
        )));
    }
    if r.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("sample radii must be strictly increasing"));
    }
    let last = *r.last().unwrap();
    if r[0] > 1e-12 || last < 2.0 * big_r * (1.0 - 1e-12) {
        return Err(Error::invalid(format!(
            "samples cover [{}, {last}] but [0, {}] is needed",
            r[0],
            2.0 * big_r
        )));
    }
    let g: Vec<f64> = r
        .iter()
        .zip(psi)
        .map(|(r, p)| 4.0 * PI * r * r * p * p)
        .collect();
    Ok((
        integrate_samples(r, &g, 0.0, big_r),
        integrate_samples(r, &g, big_r, 2.0 * big_r),
    ))
}

fn integrate_samples(x: &[f64], g: &[f64], a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = x.len();
    let quad = |i0: usize, t: f64| {
        let (x0, x1, x2) = (x[i0], x[i0 + 1], x[i0 + 2]);
        g[i0] * (t - x1) * (t - x2) / ((x0 - x1) * (x0 - x2))
            + g[i0 + 1] * (t - x0) * (t - x2) / ((x1 - x0) * (x1 - x2))
            + g[i0 + 2] * (t - x0) * (t - x1) / ((x2 - x0) * (x2 - x1))
    };
    let mut total = 0.0;
    for i in 0..n - 1 {
        let lo = x[i].max(a);
        let hi = x[i + 1].min(b);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let mut stencils = Vec::with_capacity(2);
        if i >= 1 {
            stencils.push(i - 1);
        }
        if i + 2 < n {
            stencils.push(i);
        }
        let mut acc = 0.0;
        for &s in &stencils {
            // Simpson is exact on the quadratic
            acc += (hi - lo) / 6.0 * (quad(s, lo) + 4.0 * quad(s, mid) + quad(s, hi));
        }
        total += acc / stencils.len() as f64;
    }
    total
}

/// Largest relative deviation between `psi0` from the momentum eigenvector
/// and from the radial ODE on `window`, after matching at `r_ref`.
pub fn psi0_cross_check(
    spec: &BsSpectrum,
    ode: &ZeroEnergySolution,
    window: (f64, f64),
    r_ref: f64,
) -> Result<f64> {
    let a = spec.psi0_at(r_ref);
    let b = ode.psi_at(r_ref);
    if !(a.abs() > 1e-300) || !(b.abs() > 1e-300) {
        return Err(Error::invalid(format!(
            "psi0 vanishes at the reference radius {r_ref}"
        )));
    }
    if !(window.0 > 0.0 && window.0 < window.1) {
        return Err(Error::invalid(
            "cross-check window must be a positive interval",
        ));
    }
    let scale = b / a;
    let n = 100;
    let mut worst: f64 = 0.0;
    for k in 0..=n {
        let r = window.0 + (window.1 - window.0) * k as f64 / n as f64;
        let ode_v = ode.psi_at(r);
        let bs_v = spec.psi0_at(r) * scale;
        worst = worst.max((bs_v / ode_v - 1.0).abs());
    }
    Ok(worst)
}
