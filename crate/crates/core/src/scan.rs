//! Sweep and verification front end shared by the `mesofluct` binary.
//!
//! Curves and phase boundaries are emitted as CSV (mandatory header,
//! full-precision shortest-round-trip floats) or JSON (array of objects
//! keyed exactly like the CSV columns). All outputs are deterministic for a
//! fixed configuration and seed.

use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::entanglement::{self, EntanglementCurve};
use crate::error::{Error, Result};
use crate::fock;
use crate::linalg::{max_abs, CovarianceMatrix, SymplecticForm, Tolerances};
use crate::meso;
use crate::micro::{self, BathParams, FluctuationKinematics};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::InvalidParameter {
                name: "format",
                value: f64::NAN,
                requirement: "one of {csv, json}",
            }),
        }
    }
}

/// Configuration of an `evolve` run. Defaults mirror the standard figure
/// parameters: `T = 0.1`, `omega = 1`, `k = 1`, sample step `0.01`.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub temperature: f64,
    pub omega: f64,
    pub coupling: f64,
    pub squeeze: f64,
    pub t_max: f64,
    pub dt_sample: f64,
    pub format: OutputFormat,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            temperature: 0.1,
            omega: 1.0,
            coupling: 1.0,
            squeeze: 1.0,
            t_max: 10.0,
            dt_sample: 0.01,
            format: OutputFormat::Csv,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t-max",
                value: self.t_max,
                requirement: "t-max > 0",
            });
        }
        if !(self.dt_sample > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt_sample,
                requirement: "dt > 0",
            });
        }
        Ok(())
    }
}

/// One curve sample: time, entanglement report scalars, and the six block
/// entries of the reduced covariance that the report derives from.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct CurveRow {
    pub t: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "Idet")]
    pub idet: f64,
    #[serde(rename = "Sigma11")]
    pub sigma11: f64,
    #[serde(rename = "Sigma22")]
    pub sigma22: f64,
    #[serde(rename = "Sigma33")]
    pub sigma33: f64,
    #[serde(rename = "Sigma44")]
    pub sigma44: f64,
    #[serde(rename = "Sigmac11")]
    pub sigmac11: f64,
    #[serde(rename = "Sigmac22")]
    pub sigmac22: f64,
}

pub const CURVE_HEADER: &str = "t,E,S,Idet,Sigma11,Sigma22,Sigma33,Sigma44,Sigmac11,Sigmac22";

/// Run the evolution pipeline over the sample grid of a configuration.
pub fn compute_curve(cfg: &RunConfig) -> Result<Vec<CurveRow>> {
    cfg.validate()?;
    let bath = BathParams::new(cfg.temperature, cfg.omega, cfg.coupling)?;
    let steps = (cfg.t_max / cfg.dt_sample).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * cfg.dt_sample).collect();
    let curve = entanglement::entanglement_curve(&bath, cfg.squeeze, &grid)?;
    Ok(curve_rows(&curve))
}

/// Flatten a curve into serializable rows.
pub fn curve_rows(curve: &EntanglementCurve) -> Vec<CurveRow> {
    curve
        .samples
        .iter()
        .map(|sample| {
            let m = sample.reduced.matrix();
            CurveRow {
                t: sample.t,
                e: sample.report.e,
                s: sample.report.s,
                idet: sample.report.idet,
                sigma11: m[(0, 0)],
                sigma22: m[(1, 1)],
                sigma33: m[(2, 2)],
                sigma44: m[(3, 3)],
                sigmac11: m[(0, 2)],
                sigmac22: m[(1, 3)],
            }
        })
        .collect()
}

pub fn write_curve_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.t,
            r.e,
            r.s,
            r.idet,
            r.sigma11,
            r.sigma22,
            r.sigma33,
            r.sigma44,
            r.sigmac11,
            r.sigmac22
        ));
    }
    out
}

pub fn write_curve_json(rows: &[CurveRow]) -> String {
    serde_json::to_string_pretty(rows).expect("curve rows serialize")
}

/// Parse CSV produced by [`write_curve_csv`]; used by round-trip checks.
pub fn parse_curve_csv(text: &str) -> Result<Vec<CurveRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CURVE_HEADER => {}
        _ => return Err(Error::Consistency("missing or malformed CSV header".into())),
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Consistency(format!("bad CSV field {f:?}")))
            })
            .collect::<Result<_>>()?;
        if fields.len() != 10 {
            return Err(Error::Consistency(format!(
                "expected 10 CSV fields, got {}",
                fields.len()
            )));
        }
        rows.push(CurveRow {
            t: fields[0],
            e: fields[1],
            s: fields[2],
            idet: fields[3],
            sigma11: fields[4],
            sigma22: fields[5],
            sigma33: fields[6],
            sigma44: fields[7],
            sigmac11: fields[8],
            sigmac22: fields[9],
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// phase boundary
// ---------------------------------------------------------------------------

/// Configuration of a `phase` scan over the squeezing axis.
#[derive(Debug, Clone, Copy)]
pub struct PhaseConfig {
    pub k_min: f64,
    pub k_max: f64,
    pub k_steps: usize,
    pub omega: f64,
    /// Statistical coupling; the boundary is only defined at the maximal
    /// value 1.0, and any other choice fails its brackets by construction.
    pub coupling: f64,
    pub format: OutputFormat,
}

/// One phase-boundary row: the critical temperature at a squeezing value
/// and the final half-width of its bisection bracket. `t_c` is NaN when the
/// bracket failed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryRow {
    pub k: f64,
    #[serde(rename = "T_c")]
    pub t_c: f64,
    pub bisection_margin: f64,
    pub status: BoundaryStatus,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryStatus {
    Ok,
    BracketFailure,
}

pub const BOUNDARY_HEADER: &str = "k,T_c,bisection_margin,status";

/// Scan the squeezing grid; returns the rows and whether every bracket
/// succeeded.
pub fn compute_phase(cfg: &PhaseConfig) -> Result<(Vec<BoundaryRow>, bool)> {
    if cfg.k_steps == 0 {
        return Err(Error::InvalidParameter {
            name: "k-steps",
            value: 0.0,
            requirement: "a nonempty squeezing grid",
        });
    }
    if !(cfg.k_min > 0.0) || cfg.k_max < cfg.k_min {
        return Err(Error::InvalidParameter {
            name: "k-min/k-max",
            value: cfg.k_min,
            requirement: "0 < k-min <= k-max",
        });
    }
    let mut rows = Vec::with_capacity(cfg.k_steps);
    let mut all_ok = true;
    for i in 0..cfg.k_steps {
        let k = if cfg.k_steps == 1 {
            cfg.k_min
        } else {
            cfg.k_min + (cfg.k_max - cfg.k_min) * i as f64 / (cfg.k_steps - 1) as f64
        };
        match entanglement::critical_temperature_at_coupling(k, cfg.coupling, cfg.omega) {
            Ok((t_c, margin)) => rows.push(BoundaryRow {
                k,
                t_c,
                bisection_margin: margin,
                status: BoundaryStatus::Ok,
            }),
            // a failed bracket or a plateau that cannot be resolved (very
            // strong squeezing exhausts f64 near the boundary) degrades to a
            // marked row rather than aborting the scan
            Err(Error::Bracket(_)) | Err(Error::Convergence(_)) => {
                all_ok = false;
                rows.push(BoundaryRow {
                    k,
                    t_c: f64::NAN,
                    bisection_margin: f64::NAN,
                    status: BoundaryStatus::BracketFailure,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok((rows, all_ok))
}

pub fn write_phase_csv(rows: &[BoundaryRow]) -> String {
    let mut out = String::from(BOUNDARY_HEADER);
    out.push('\n');
    for r in rows {
        let status = match r.status {
            BoundaryStatus::Ok => "ok",
            BoundaryStatus::BracketFailure => "bracket_failure",
        };
        out.push_str(&format!("{},{},{},{}\n", r.k, r.t_c, r.bisection_margin, status));
    }
    out
}

pub fn write_phase_json(rows: &[BoundaryRow]) -> String {
    serde_json::to_string_pretty(rows).expect("boundary rows serialize")
}

// ---------------------------------------------------------------------------
// verification suites
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Micro,
    Meso,
    Fock,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(Self::Micro),
            "meso" => Ok(Self::Meso),
            "fock" => Ok(Self::Fock),
            "all" => Ok(Self::All),
            _ => Err(Error::InvalidParameter {
                name: "suite",
                value: f64::NAN,
                requirement: "one of {micro, meso, fock, all}",
            }),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub suite: Suite,
    pub n_max: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            suite: Suite::All,
            n_max: 24,
            seed: 7,
        }
    }
}

/// One verification row: a named measured quantity and its requirement.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub measured: f64,
    pub requirement: String,
    pub pass: bool,
}

impl VerifyCheck {
    fn upper(name: &str, measured: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            requirement: format!("< {limit:.1e}"),
            pass: measured < limit,
        }
    }

    fn lower(name: &str, measured: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            requirement: format!(">= {limit:.1e}"),
            pass: measured >= limit,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Fixed-width text table: name, measured value, requirement, verdict.
    pub fn render(&self) -> String {
        let name_w = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = format!(
            "{:<name_w$}  {:>13}  {:>12}  {}\n",
            "check", "measured", "required", "verdict"
        );
        for c in &self.checks {
            out.push_str(&format!(
                "{:<name_w$}  {:>13.6e}  {:>12}  {}\n",
                c.name,
                c.measured,
                c.requirement,
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

fn micro_suite(checks: &mut Vec<VerifyCheck>) -> Result<()> {
    // generator cross-derivation over a temperature/frequency/coupling grid
    let mut worst = 0.0f64;
    for t in [0.05, 0.5, 2.0] {
        for w in [0.5, 1.0, 2.0] {
            for lam in [0.0, 0.3, 0.9, 1.0] {
                let bath = BathParams::new(t, w, lam)?;
                let derived = micro::derive_meso_generator(&bath)?;
                let closed = meso::generator(&bath)?;
                worst = worst.max(max_abs(&(&derived.matrix - closed.matrix())));
            }
        }
    }
    checks.push(VerifyCheck::upper(
        "meso generator matches closed form",
        worst,
        1e-10,
    ));

    let mut cov_dev = 0.0f64;
    let mut form_dev = 0.0f64;
    for t in [0.05, 0.1, 0.5, 1.0] {
        let bath = BathParams::new(t, 1.0, 0.0)?;
        let kin = micro::fluctuation_kinematics(&bath)?;
        cov_dev = cov_dev.max(kin.covariance_deviation);
        form_dev = form_dev.max(kin.form_deviation);
    }
    checks.push(VerifyCheck::upper(
        "fluctuation covariance closed form",
        cov_dev,
        1e-12,
    ));
    checks.push(VerifyCheck::upper(
        "fluctuation symplectic form closed form",
        form_dev,
        1e-12,
    ));

    let mut kmin = f64::INFINITY;
    for lam in [-1.0, -0.5, 0.0, 0.5, 0.9, 1.0] {
        let bath = BathParams::new(0.3, 1.0, lam)?;
        kmin = kmin.min(micro::kossakowski(&bath)?.min_eigenvalue());
    }
    checks.push(VerifyCheck::lower(
        "Kossakowski matrix PSD on the coupling range",
        kmin,
        -1e-12,
    ));

    let mut mean_dev = 0.0f64;
    for lam in [0.0, 0.7, 1.0] {
        let bath = BathParams::new(0.2, 1.0, lam)?;
        let site = micro::thermal_site_covariance(&bath);
        for x in micro::basis_observables(&bath) {
            mean_dev = mean_dev.max(micro::lindblad_action(&x, &bath).mean(&site).abs());
        }
    }
    checks.push(VerifyCheck::upper(
        "thermal mean of Lindblad images",
        mean_dev,
        1e-12,
    ));

    let bath = BathParams::new(0.1, 1.0, 0.5)?;
    let basis = micro::basis_observables(&bath);
    let ratio = micro::mean_field_variance(&basis[0], &bath, 5)
        / micro::mean_field_variance(&basis[0], &bath, 10);
    checks.push(VerifyCheck::upper(
        "mean-field variance ratio n vs 2n minus two",
        (ratio - 2.0).abs(),
        f64::MIN_POSITIVE,
    ));
    Ok(())
}

fn meso_suite(checks: &mut Vec<VerifyCheck>, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = Tolerances::DEFAULT;
    let form = SymplecticForm::standard(6)?;
    let mut m_dev = 0.0f64;
    let mut k_dev = 0.0f64;
    let mut k_min = f64::INFINITY;
    let mut cp_min = f64::INFINITY;
    let mut stat_dev = 0.0f64;
    let mut weyl_dev = 0.0f64;
    for _ in 0..12 {
        let bath = BathParams::new(
            rng.gen_range(0.05..2.0),
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.0..=1.0),
        )?;
        let gen = meso::generator(&bath)?;
        let sb = gen.invariant_covariance();
        let (t, s) = (rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0));
        let bt = meso::propagate(&gen, &sb, t)?;
        let bs = meso::propagate(&gen, &sb, s)?;
        let bts = meso::propagate(&gen, &sb, t + s)?;
        m_dev = m_dev.max(max_abs(
            &(bts.propagator() - bt.propagator() * bs.propagator()),
        ));
        k_dev = k_dev.max(max_abs(
            &(bts.noise() - (bt.noise() + bt.propagator() * bs.noise() * bt.propagator().transpose())),
        ));
        k_min = k_min.min(bt.noise_min_eigenvalue());
        cp_min = cp_min.min(meso::cp_certificate(&bt, &sb, &form));

        let sb_cov = CovarianceMatrix::new(sb.clone(), form.clone(), &tol)?;
        let evolved = meso::evolve_covariance(&gen, &sb, &sb_cov, t)?;
        stat_dev = stat_dev.max(max_abs(&(evolved.matrix() - &sb)));

        let r = nalgebra::DVector::from_fn(6, |_, _| rng.gen_range(-1.5..1.5));
        let w = meso::WeylElement::new(r.clone())?;
        let out = meso::apply_heisenberg(&bt, &w);
        let lhs = out.log_prefactor - 0.5 * (out.r.transpose() * &sb * &out.r)[(0, 0)];
        let rhs = -0.5 * (r.transpose() * &sb * &r)[(0, 0)];
        weyl_dev = weyl_dev.max((lhs - rhs).abs());
    }
    checks.push(VerifyCheck::upper("propagator semigroup residual", m_dev, 1e-10));
    checks.push(VerifyCheck::upper("noise composition residual", k_dev, 1e-10));
    checks.push(VerifyCheck::lower("noise matrix minimum eigenvalue", k_min, -1e-10));
    checks.push(VerifyCheck::lower("complete positivity margin", cp_min, -1e-10));
    checks.push(VerifyCheck::upper("invariant covariance stationarity", stat_dev, 1e-9));
    checks.push(VerifyCheck::upper(
        "Weyl prefactor stationarity identity",
        weyl_dev,
        1e-10,
    ));

    // micro/meso agreement is covered in the micro suite; add the maximal
    // coupling spectrum here
    let bath = BathParams::new(0.1, 1.0, 1.0)?;
    let gen = meso::generator(&bath)?;
    let eigs = gen.matrix().clone().complex_eigenvalues();
    let undamped = eigs
        .iter()
        .map(|z| z.re.abs())
        .fold(f64::INFINITY, f64::min);
    checks.push(VerifyCheck::upper(
        "undamped sector at maximal coupling",
        undamped,
        1e-12,
    ));
    Ok(())
}

fn fock_suite(checks: &mut Vec<VerifyCheck>, n_list: &[u64], n_max: usize, seed: u64) -> Result<()> {
    let grid = fock::FockGrid::new(n_max)?;
    let bath = BathParams::new(0.1, 1.0, 0.0)?;

    // interior commutators
    let canon = fock::build_canonicals(&grid);
    let comm = canon[0].matrix() * canon[1].matrix() - canon[1].matrix() * canon[0].matrix();
    let mut dev = 0.0f64;
    for &i in &grid.interior_indices() {
        for &j in &grid.interior_indices() {
            let want = if i == j {
                crate::linalg::C64::new(0.0, 1.0)
            } else {
                crate::linalg::C64::new(0.0, 0.0)
            };
            dev = dev.max((comm[(i, j)] - want).norm());
        }
    }
    checks.push(VerifyCheck::upper("interior canonical commutators", dev, 1e-12));

    // thermal second moment against the closed form
    let state = fock::thermal_state(&grid, &bath)?;
    let two = {
        let x = canon[0].matrix();
        state.expectation(&(x * x)).re
    };
    checks.push(VerifyCheck::upper(
        "thermal second moment deviation",
        (two - 1.0 / (2.0 * bath.eta())).abs(),
        1e-10,
    ));

    // quantum central limit
    let mut e1 = [0.0; 6];
    e1[0] = 1.0;
    let clt = fock::clt_convergence(&e1, n_list, &grid, &bath)?;
    for (n, err) in &clt.points {
        checks.push(VerifyCheck::upper(
            &format!("CLT deviation at n = {n}"),
            *err,
            0.05,
        ));
    }
    let mut worst_ratio = 0.0f64;
    for w in clt.points.windows(2) {
        worst_ratio = worst_ratio.max(w[1].1 / w[0].1);
    }
    checks.push(VerifyCheck::upper(
        "CLT errors decrease along the ladder",
        worst_ratio,
        1.0,
    ));
    checks.push(VerifyCheck::upper(
        "CLT deviation at the largest length",
        clt.points.last().map(|p| p.1).unwrap_or(f64::NAN),
        0.02,
    ));
    // the generic remainder bound allows no slower than 1/sqrt(n); the
    // phase-symmetric thermal state actually delivers 1/n
    checks.push(VerifyCheck::upper(
        "CLT log-log slope (bound allows -0.5 + 0.15)",
        clt.slope,
        -0.35,
    ));

    // emergent Weyl relation on a seeded random pair
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r1 = [0.0; 6];
    let mut r2 = [0.0; 6];
    for i in 0..6 {
        r1[i] = rng.gen_range(-1.0..1.0);
        r2[i] = rng.gen_range(-1.0..1.0);
    }
    let (na, nb) = match n_list.len() {
        0 | 1 => (10_000, 100_000),
        n => (n_list[n - 2], n_list[n - 1]),
    };
    let res_a = fock::weyl_product_residual(&r1, &r2, na, &grid, &bath)?;
    let res_b = fock::weyl_product_residual(&r1, &r2, nb, &grid, &bath)?;
    checks.push(VerifyCheck::upper(
        "Weyl product residual at the larger length",
        res_b,
        0.02,
    ));
    checks.push(VerifyCheck::upper(
        "Weyl product residual shrinks with length",
        res_b / res_a,
        1.0,
    ));

    // dissipative sandwich at a small truncation
    let sandwich_grid = fock::FockGrid::new(8)?;
    let sandwich_bath = BathParams::new(0.1, 1.0, 0.9)?;
    let zero = [0.0; 6];
    let mut e3 = [0.0; 6];
    e3[2] = 1.0;
    let mut e2 = [0.0; 6];
    e2[1] = 1.0;
    let s50 = fock::dissipative_sandwich(&e1, &e3, &e2, 0.25, 50, &sandwich_grid, &sandwich_bath, 1e-3)?;
    let s200 =
        fock::dissipative_sandwich(&e1, &e3, &e2, 0.25, 200, &sandwich_grid, &sandwich_bath, 1e-3)?;
    for (n, s) in [(50, &s50), (200, &s200)] {
        checks.push(VerifyCheck::upper(
            &format!("sandwich |lhs - rhs| at n = {n}"),
            s.error,
            0.05,
        ));
    }
    checks.push(VerifyCheck::upper(
        "sandwich error shrinks with length",
        s200.error / s50.error,
        1.0,
    ));
    let stat = fock::dissipative_sandwich(&zero, &e3, &zero, 0.25, 50, &sandwich_grid, &sandwich_bath, 1e-3)?;
    let scale = FluctuationKinematics::scale(&sandwich_bath);
    checks.push(VerifyCheck::upper(
        "sandwich stationary prediction is exact",
        (stat.rhs - crate::linalg::C64::new((-0.5 * scale).exp(), 0.0)).norm(),
        1e-12,
    ));
    Ok(())
}

/// Run the requested verification suite(s).
pub fn verify(opts: &VerifyOptions, n_list: &[u64]) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    if matches!(opts.suite, Suite::Micro | Suite::All) {
        micro_suite(&mut checks)?;
    }
    if matches!(opts.suite, Suite::Meso | Suite::All) {
        meso_suite(&mut checks, opts.seed)?;
    }
    if matches!(opts.suite, Suite::Fock | Suite::All) {
        fock_suite(&mut checks, n_list, opts.n_max, opts.seed)?;
    }
    Ok(VerifyReport { checks })
}
