//! The computations behind each subcommand, returned as tables.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use fewbody::few_body::{
    feynman_hellmann_frozen, svm_grow, CouplingPath, EnergyResult, FeynmanHellmann, FrozenProblem,
    FROZEN_REGULARIZATION,
};
use fewbody::numerics::generalized_lowest_eigen;
use fewbody::two_body::{
    b_prime_at_zero, efimov_residual, efimov_s0, ensure_critical, extrapolated_slope,
    make_v_lambda, p_wave_mu, tune_critical_depth, CriticalitySettings, PerturbationShape,
    RadialPotential,
};
use fewbody::Error as CoreError;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ShapeConfig};
use crate::output::{Cell, Table};

/// Wall time per named operation, in call order.
#[derive(Debug, Default)]
pub struct Timings(pub Vec<(String, f64)>);

impl Timings {
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.0.push((name.to_string(), t.elapsed().as_secs_f64()));
        out
    }
}

/// A shape at zero-energy resonance.
#[derive(Debug, Clone)]
pub struct CriticalShape {
    pub name: String,
    pub g_star: f64,
    pub potential: RadialPotential,
    /// `μ(V) - 1`.
    pub residual: f64,
    pub perturbation: Option<(f64, f64, f64)>,
}

pub fn critical_shape(shape: &ShapeConfig, s: &CriticalitySettings) -> Result<CriticalShape> {
    let profile = shape.profile.potential()?;
    let g = tune_critical_depth(&profile, shape.bracket, s)
        .with_context(|| format!("tuning {}", shape.name))?;
    let base = profile.scaled(g);
    let (potential, perturbation) = match shape.perturbation {
        None => (base, None),
        Some(p) => {
            let family = s.scheme.family(&base, p.r)?;
            ensure_critical(&family, s)?;
            let b = family
                .solve_b(p.lambda, s)
                .with_context(|| format!("B(λ) for {}", shape.name))?;
            let v = make_v_lambda(&base, &PerturbationShape::new(p.lambda, b, p.r)?)?;
            (v, Some((p.lambda, p.r, b)))
        }
    };
    let residual = s.scheme.mu(&potential)? - 1.0;
    Ok(CriticalShape {
        name: shape.name.clone(),
        g_star: g,
        potential,
        residual,
        perturbation,
    })
}

fn status(e: &anyhow::Error) -> Cell {
    Cell::Text(format!("error: {e:#}"))
}

pub fn tune(cfg: &ExperimentConfig, timings: &mut Timings) -> Result<Vec<Table>> {
    cfg.require_shapes()?;
    let results: Vec<Result<CriticalShape>> = timings.time("tune", || {
        cfg.shapes
            .par_iter()
            .map(|s| critical_shape(s, &cfg.criticality))
            .collect()
    });
    let mut t = Table::new(
        "tune",
        &["shape", "g_star", "lambda", "r", "b", "residual", "status"],
    );
    for (shape, res) in cfg.shapes.iter().zip(results) {
        match res {
            Ok(c) => {
                let (l, r, b) = c
                    .perturbation
                    .map_or((None, None, None), |(l, r, b)| (Some(l), Some(r), Some(b)));
                t.push(vec![
                    c.name.into(),
                    c.g_star.into(),
                    l.into(),
                    r.into(),
                    b.into(),
                    c.residual.into(),
                    "ok".into(),
                ]);
            }
            Err(e) => t.push(vec![
                shape.name.clone().into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                status(&e),
            ]),
        }
    }
    Ok(vec![t])
}

fn core(cfg: &ExperimentConfig) -> Result<CriticalShape> {
    critical_shape(cfg.shape(&cfg.core_shape)?, &cfg.criticality)
}

struct RadiusCurve {
    rows: Vec<Vec<Cell>>,
    b_prime: Vec<Cell>,
}

fn curve_at_radius(cfg: &ExperimentConfig, v0: &RadialPotential, r: f64) -> Result<RadiusCurve> {
    let s = &cfg.criticality;
    let family = s.scheme.family(v0, r)?;
    ensure_critical(&family, s)?;
    let bp = b_prime_at_zero(v0, r, s)?;
    let slope = extrapolated_slope(&family, cfg.slope_probe / (r * r), s)?;
    let rows: Vec<Vec<Cell>> = cfg
        .lambda_values
        .par_iter()
        .map(|&l| match family.solve_b(l, s) {
            Ok(b) => {
                let deviation = if l > 0.0 { b / l / bp - 1.0 } else { 0.0 };
                vec![
                    r.into(),
                    l.into(),
                    b.into(),
                    (family.mu(l, b) - 1.0).abs().into(),
                    deviation.into(),
                    (deviation.abs() > cfg.linearity_window).into(),
                    "ok".into(),
                ]
            }
            Err(e @ CoreError::NonPerturbative { .. }) => vec![
                r.into(),
                l.into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                true.into(),
                Cell::Text(e.to_string()),
            ],
            Err(e) => vec![
                r.into(),
                l.into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                status(&e.into()),
            ],
        })
        .collect();
    // l = 1 check at the largest coupling that stayed perturbative
    let largest = rows
        .iter()
        .filter_map(|row| match (&row[1], &row[2]) {
            (Cell::Num(l), Cell::Num(b)) => Some((*l, *b)),
            _ => None,
        })
        .max_by(|a, b| a.0.total_cmp(&b.0));
    let (p_lambda, p_mu) = match largest {
        Some((l, b)) => (Some(l), Some(p_wave_mu(v0, l, b, r, s)?)),
        None => (None, None),
    };
    Ok(RadiusCurve {
        rows,
        b_prime: vec![
            r.into(),
            bp.into(),
            slope.into(),
            ((bp - slope) / bp).abs().into(),
            p_lambda.into(),
            p_mu.into(),
            p_mu.map_or(Cell::Empty, |m| (m < 1.0).into()),
        ],
    })
}

pub fn coupling_curve(cfg: &ExperimentConfig, timings: &mut Timings) -> Result<Vec<Table>> {
    cfg.require_r_values()?;
    cfg.require_lambda_values()?;
    let c = timings.time("tune_core", || core(cfg))?;
    let curves: Vec<Result<RadiusCurve>> = timings.time("coupling_curve", || {
        cfg.r_values
            .par_iter()
            .map(|&r| curve_at_radius(cfg, &c.potential, r))
            .collect()
    });
    let mut curve = Table::new(
        "coupling_curve",
        &[
            "r",
            "lambda",
            "b",
            "residual",
            "slope_deviation",
            "nonperturbative",
            "status",
        ],
    );
    let mut table = Table::new(
        "b_prime",
        &[
            "r",
            "b_prime_0",
            "extrapolated_slope",
            "relative_residual",
            "p_wave_lambda",
            "p_wave_mu",
            "s_wave_valid",
        ],
    );
    for (r, res) in cfg.r_values.iter().zip(curves) {
        let rc = res.with_context(|| format!("coupling curve at R = {r}"))?;
        rc.rows.into_iter().for_each(|row| curve.push(row));
        table.push(rc.b_prime);
    }
    Ok(vec![curve, table])
}

fn ratio_with_uncertainty(e3: &EnergyResult, e4: &EnergyResult) -> (f64, f64) {
    let c = e4.energy / e3.energy;
    (
        c,
        c.abs() * (e3.uncertainty / e3.energy.abs() + e4.uncertainty / e4.energy.abs()),
    )
}

struct ShapeEnergies {
    shape: CriticalShape,
    e3: EnergyResult,
    e4: EnergyResult,
}

fn shape_energies(cfg: &ExperimentConfig, shape: &ShapeConfig) -> Result<ShapeEnergies> {
    let c = critical_shape(shape, &cfg.criticality)?;
    let (_, e3) =
        svm_grow(3, &c.potential, &cfg.basis.n3.with_seed(cfg.seed)).context("N = 3 growth")?;
    let (_, e4) =
        svm_grow(4, &c.potential, &cfg.basis.n4.with_seed(cfg.seed)).context("N = 4 growth")?;
    Ok(ShapeEnergies { shape: c, e3, e4 })
}

pub fn universality(cfg: &ExperimentConfig, timings: &mut Timings) -> Result<Vec<Table>> {
    cfg.require_shapes()?;
    let results: Vec<Result<ShapeEnergies>> = timings.time("universality", || {
        cfg.shapes
            .par_iter()
            .map(|s| shape_energies(cfg, s))
            .collect()
    });
    let mut t = Table::new(
        "universality",
        &[
            "shape",
            "g_star",
            "e3",
            "e3_uncertainty",
            "e4",
            "e4_uncertainty",
            "c",
            "c_uncertainty",
            "status",
        ],
    );
    let mut done: Vec<(String, f64, f64)> = Vec::new();
    for (shape, res) in cfg.shapes.iter().zip(results) {
        match res {
            Ok(r) => {
                let (c, sc) = ratio_with_uncertainty(&r.e3, &r.e4);
                let ordered = r.e4.energy < r.e3.energy && r.e3.energy < 0.0;
                t.push(vec![
                    r.shape.name.clone().into(),
                    r.shape.g_star.into(),
                    r.e3.energy.into(),
                    r.e3.uncertainty.into(),
                    r.e4.energy.into(),
                    r.e4.uncertainty.into(),
                    c.into(),
                    sc.into(),
                    (if ordered { "ok" } else { "unordered energies" }).into(),
                ]);
                done.push((r.shape.name, c, sc));
            }
            Err(e) => {
                let mut row = vec![shape.name.clone().into()];
                row.extend(std::iter::repeat_n(Cell::Empty, 7));
                row.push(status(&e));
                t.push(row);
            }
        }
    }
    let mut d = Table::new(
        "universality_delta",
        &["shape_a", "shape_b", "delta_c", "delta_c_uncertainty"],
    );
    for (i, a) in done.iter().enumerate() {
        for b in &done[i + 1..] {
            d.push(vec![
                a.0.clone().into(),
                b.0.clone().into(),
                (a.1 - b.1).into(),
                (a.2 + b.2).into(),
            ]);
        }
    }
    Ok(vec![t, d])
}

/// Frozen basis at `V0` with the ground state and its half-basis truncation.
struct Sector {
    frozen: FrozenProblem,
    energy: EnergyResult,
}

impl Sector {
    fn grow(n: usize, v0: &RadialPotential, cfg: &ExperimentConfig) -> Result<Self> {
        let settings = if n == 3 { cfg.basis.n3 } else { cfg.basis.n4 }.with_seed(cfg.seed);
        let (basis, energy) =
            svm_grow(n, v0, &settings).with_context(|| format!("N = {n} growth"))?;
        Ok(Self {
            frozen: FrozenProblem::new(basis, v0)?,
            energy,
        })
    }

    /// `(capture, shell)` on the leading `k` functions.
    fn expectations(&self, r: f64, k: usize) -> Result<(f64, f64)> {
        let f = &self.frozen;
        let chi = f.pair_indicator(0.0, r)?;
        let eta = f.pair_indicator(r, 2.0 * r)?;
        let block = |m: &DMatrix<f64>| m.view((0, 0), (k, k)).into_owned();
        let g =
            generalized_lowest_eigen(&block(&f.core), &block(&f.overlap), FROZEN_REGULARIZATION)?;
        let c: &DVector<f64> = &g.coefficients;
        let pairs = (f.basis.n * (f.basis.n - 1) / 2) as f64;
        let q = |m: &DMatrix<f64>| c.dot(&(block(m) * c));
        let norm = q(&f.overlap) * pairs;
        Ok((q(&chi) / norm, q(&eta) / norm))
    }
}

struct Side {
    fh: FeynmanHellmann,
    capture_unc: f64,
    shell_unc: f64,
}

fn side(sector: &Sector, v0: &RadialPotential, r: f64, cfg: &ExperimentConfig) -> Result<Side> {
    let path = CouplingPath::Critical {
        r,
        settings: cfg.criticality,
    };
    let fh = feynman_hellmann_frozen(&sector.frozen, v0, &path, 0.0, cfg.fd_step)?;
    let k = sector.frozen.basis.len();
    let (cap_half, shell_half) = sector.expectations(r, (k / 2).max(1))?;
    Ok(Side {
        capture_unc: (fh.capture - cap_half).abs(),
        shell_unc: (fh.shell - shell_half).abs(),
        fh,
    })
}

const CONTRADICTION_HEADERS: &[&str] = &[
    "r",
    "b_prime",
    "b_prime_residual",
    "de3_dlambda",
    "de3_fh",
    "de3_residual",
    "de4_dlambda",
    "de4_fh",
    "de4_residual",
    "lhs",
    "lhs_uncertainty",
    "rhs",
    "rhs_uncertainty",
    "implied_cu",
    "implied_cu_uncertainty",
    "capture3",
    "capture3_uncertainty",
    "capture4",
    "capture4_uncertainty",
    "shell3",
    "shell3_uncertainty",
    "shell4",
    "shell4_uncertainty",
    "measured_c",
    "measured_c_uncertainty",
    "status",
];

fn contradiction_row(
    cfg: &ExperimentConfig,
    v0: &RadialPotential,
    s3: &Sector,
    s4: &Sector,
    r: f64,
) -> Result<Vec<Cell>> {
    let crit = &cfg.criticality;
    let t3 = side(s3, v0, r, cfg)?;
    let t4 = side(s4, v0, r, cfg)?;
    let (f3, f4) = (&t3.fh, &t4.fh);
    let bp = f3.b_prime;
    let family = crit.scheme.family(v0, r)?;
    let slope = extrapolated_slope(&family, cfg.slope_probe / (r * r), crit)?;
    let (c, sc) = ratio_with_uncertainty(&s3.energy, &s4.energy);
    let lhs = 3.0 * c * f3.capture;
    let rhs = 6.0 * f4.capture - 6.0 * bp * f4.shell + 3.0 * c * bp * f3.shell;
    let num = 6.0 * (f4.capture - bp * f4.shell);
    let den = 3.0 * (f3.capture - bp * f3.shell);
    let implied = (den != 0.0).then(|| num / den);
    let rel = |fh: &FeynmanHellmann| ((fh.fd_slope - fh.fh_value) / fh.fh_value).abs();
    let implied_unc = implied.map(|x| x.abs() * (rel(f3) + rel(f4)));
    Ok(vec![
        r.into(),
        bp.into(),
        (bp - slope).abs().into(),
        f3.fd_slope.into(),
        f3.fh_value.into(),
        (f3.fd_slope - f3.fh_value).abs().into(),
        f4.fd_slope.into(),
        f4.fh_value.into(),
        (f4.fd_slope - f4.fh_value).abs().into(),
        lhs.into(),
        (3.0 * (sc * f3.capture + c * t3.capture_unc)).into(),
        rhs.into(),
        (6.0 * (t4.capture_unc + bp * t4.shell_unc)
            + 3.0 * bp * (sc * f3.shell + c * t3.shell_unc))
            .into(),
        implied.into(),
        implied_unc.into(),
        f3.capture.into(),
        t3.capture_unc.into(),
        f4.capture.into(),
        t4.capture_unc.into(),
        f3.shell.into(),
        t3.shell_unc.into(),
        f4.shell.into(),
        t4.shell_unc.into(),
        c.into(),
        sc.into(),
        "ok".into(),
    ])
}

pub fn contradiction(cfg: &ExperimentConfig, timings: &mut Timings) -> Result<Vec<Table>> {
    cfg.require_r_values()?;
    let c = timings.time("tune_core", || core(cfg))?;
    let v0 = &c.potential;
    let s3 = timings.time("grow_n3", || Sector::grow(3, v0, cfg))?;
    let s4 = timings.time("grow_n4", || Sector::grow(4, v0, cfg))?;
    let rows: Vec<Result<Vec<Cell>>> = timings.time("diagnostic", || {
        cfg.r_values
            .par_iter()
            .map(|&r| contradiction_row(cfg, v0, &s3, &s4, r))
            .collect()
    });
    let mut t = Table::new("contradiction", CONTRADICTION_HEADERS);
    for (r, row) in cfg.r_values.iter().zip(rows) {
        match row {
            Ok(row) => t.push(row),
            Err(e) => {
                let mut row = vec![Cell::Num(*r)];
                row.extend(std::iter::repeat_n(
                    Cell::Empty,
                    CONTRADICTION_HEADERS.len() - 2,
                ));
                row.push(status(&e));
                t.push(row);
            }
        }
    }
    let mut e = Table::new(
        "contradiction_energies",
        &["n", "energy", "uncertainty", "basis_size", "gap"],
    );
    for s in [&s3, &s4] {
        let r = &s.energy;
        e.push(vec![
            Cell::Int(r.n as i64),
            r.energy.into(),
            r.uncertainty.into(),
            Cell::Int(r.basis_size as i64),
            r.gap.into(),
        ]);
    }
    Ok(vec![t, e])
}

pub fn s0(timings: &mut Timings) -> Result<Vec<Table>> {
    let s = timings.time("s0", efimov_s0);
    let residual = efimov_residual(s);
    if !residual.is_finite() {
        bail!("non-finite residual at s0 = {s}");
    }
    let mut t = Table::new("s0", &["s0", "residual"]);
    t.push(vec![s.into(), residual.into()]);
    Ok(vec![t])
}
