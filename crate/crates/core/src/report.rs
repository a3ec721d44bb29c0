//! Verification suites emitting JSON-lines check records, and window sweeps
//! emitting CSV.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::commutant::{self, ClockShiftModel};
use crate::config::LabConfig;
use crate::crossed_product::{self as cp, CircleFn, GradedElement, LocalGenerator, Term};
use crate::error::{LabError, Result};
use crate::fock::{self, FockSpace};
use crate::fredholm::{self, Side};
use crate::linalg::c;
use crate::mode_space::{
    hs_offdiag_norms, multiplication_operator, pairing, regular_rep, HalfSpace, LoopFunction, ModeWindow, TrigPoly,
    WindowedOperator,
};
use crate::sampling;
use crate::weyl::{self, GeneratorElement, WeylWord};

/// Measured or expected quantity in a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Complex([f64; 2]),
}

impl From<Complex64> for Value {
    fn from(z: Complex64) -> Self {
        Value::Complex([z.re, z.im])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check_id: String,
    pub params: serde_json::Value,
    pub value: Value,
    pub expected: Value,
    pub tolerance: f64,
    pub pass: bool,
    pub window: usize,
    pub runtime_ms: u64,
}

impl CheckRecord {
    fn new(id: &str, params: serde_json::Value, value: Value, expected: Value, tolerance: f64, window: usize) -> Self {
        let pass = match (&value, &expected) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Real(a), Value::Real(b)) => (a - b).abs() <= tolerance,
            (Value::Complex(a), Value::Complex(b)) => c(a[0] - b[0], a[1] - b[1]).norm() <= tolerance,
            _ => false,
        };
        Self { check_id: id.to_string(), params, value, expected, tolerance, pass, window, runtime_ms: 0 }
    }

    pub fn real(id: &str, params: serde_json::Value, value: f64, expected: f64, tolerance: f64, window: usize) -> Self {
        Self::new(id, params, Value::Real(value), Value::Real(expected), tolerance, window)
    }

    pub fn int(id: &str, params: serde_json::Value, value: i64, expected: i64, window: usize) -> Self {
        Self::new(id, params, Value::Int(value), Value::Int(expected), 0.0, window)
    }

    pub fn flag(id: &str, params: serde_json::Value, value: bool, window: usize) -> Self {
        Self::new(id, params, Value::Bool(value), Value::Bool(true), 0.0, window)
    }

    pub fn complex(id: &str, params: serde_json::Value, value: Complex64, expected: Complex64, tolerance: f64, window: usize) -> Self {
        Self::new(id, params, value.into(), expected.into(), tolerance, window)
    }

    /// A record for a check that errored out.
    fn failed(id: &str, err: &LabError) -> Self {
        Self::new(id, json!({ "error": err.to_string() }), Value::Bool(false), Value::Bool(true), 0.0, 0)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Index,
    Schwinger,
    Weyl,
    Grading,
    Stabilizer,
    All,
}

impl std::str::FromStr for Suite {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "index" => Suite::Index,
            "schwinger" => Suite::Schwinger,
            "weyl" => Suite::Weyl,
            "grading" => Suite::Grading,
            "stabilizer" => Suite::Stabilizer,
            "all" => Suite::All,
            other => return Err(LabError::UnknownSuite(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRun {
    pub records: Vec<CheckRecord>,
}

impl SuiteRun {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }

    pub fn to_json_lines(&self) -> String {
        self.records.iter().map(|r| r.to_json_line() + "\n").collect()
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }
}

type Family = fn(&LabConfig) -> Result<Vec<CheckRecord>>;

/// Runs one family; an error becomes a single failing record.
fn run_family(name: &str, f: Family, config: &LabConfig, out: &mut Vec<CheckRecord>) {
    let start = Instant::now();
    match f(config) {
        Ok(mut recs) => {
            if config.timing {
                let ms = start.elapsed().as_millis() as u64;
                for r in &mut recs {
                    r.runtime_ms = ms;
                }
            }
            out.extend(recs);
        }
        Err(e) => out.push(CheckRecord::failed(name, &e)),
    }
}

pub fn suite_families(suite: Suite) -> Vec<(&'static str, Family)> {
    let index: Vec<(&'static str, Family)> = vec![
        ("index.shift", index_shift),
        ("index.random_loops", index_random_loops),
        ("index.covariance", covariance_checks),
        ("index.offdiag", offdiag_checks),
    ];
    let schwinger: Vec<(&'static str, Family)> =
        vec![("schwinger.commutator", schwinger_checks), ("schwinger.positivity", positivity_checks)];
    let weyl: Vec<(&'static str, Family)> =
        vec![("weyl.algebra", weyl_algebra_checks), ("weyl.vev", vev_checks), ("weyl.requirements", requirements_checks)];
    let grading: Vec<(&'static str, Family)> = vec![("grading.commutant", commutant_checks), ("grading.spectral", grading_checks)];
    let stabilizer: Vec<(&'static str, Family)> =
        vec![("stabilizer.action", stabilizer_checks), ("stabilizer.locality", locality_checks)];
    match suite {
        Suite::Index => index,
        Suite::Schwinger => schwinger,
        Suite::Weyl => weyl,
        Suite::Grading => grading,
        Suite::Stabilizer => stabilizer,
        Suite::All => [index, schwinger, weyl, grading, stabilizer].concat(),
    }
}

pub fn run_suite(name: &str, config: &LabConfig) -> Result<SuiteRun> {
    let suite: Suite = name.parse()?;
    let mut records = Vec::new();
    for (id, f) in suite_families(suite) {
        run_family(id, f, config, &mut records);
    }
    records.sort_by(|a, b| a.check_id.cmp(&b.check_id));
    Ok(SuiteRun { records })
}

fn window(n: usize) -> Result<ModeWindow> {
    ModeWindow::new(n)
}

fn index_shift(cfg: &LabConfig) -> Result<Vec<CheckRecord>> {
    let cut = HalfSpace::nonnegative();
    let v = LoopFunction::monomial(1);
    let r = fredholm::charge_index(&v, cut, Some(window(cfg.n_max)?))?;
    let mut out = vec![CheckRecord::int("index.shift_charge", json!({ "winding": 1, "windows": r.windows }), r.q, 1, cfg.n_max)];

    // U_ζ V U_ζ⁻¹ = ζ V on the exact interior
    let mut rng = sampling::rng(cfg.seed);
    let w = window(cfg.n_max)?;
    let vop = multiplication_operator(&v, w)?;
    let r = vop.exact_radius().unwrap_or(0) as i64;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let zeta = sampling::unit_complex(&mut rng);
        let u = regular_rep(zeta, w)?;
        let lhs = u.mul(&vop)?.mul(&u.adjoint())?;
        for m in -r..=r {
            for n in -r..=r {
                worst = worst.max((lhs.entry(m, n) - zeta * vop.entry(m, n)).norm());
            }
        }
    }
    out.push(CheckRecord::real("index.shift_covariance", json!({ "samples": 20 }), worst, 0.0, cfg.tolerances.algebraic, cfg.n_max));
    Ok(out)
}

fn index_random_loops(cfg: &LabConfig) -> Result<Vec<CheckRecord>> {
    let cut = HalfSpace::nonnegative();
    let mut rng = sampling::rng(cfg.seed ^ 0x1);
    let mut additive = 0;
    let pairs = 50;
    for _ in 0..pairs {
        let f = sampling::loop_function(&mut rng, -3..=3, 2, 0.5);
        let g = sampling::loop_function(&mut rng, -3..=3, 2, 0.5);
        if fredholm::verify_additivity(&f, &g)? {
            additive += 1;
        }
    }
    let mut agree = 0;
    let mut worst_sum = 0i64;
    let loops = 20;
    for _ in 0..loops {
        let f = sampling::loop_function(&mut rng, -3..=3, 2, 0.5);
        if fredholm::index_winding_agreement(&f)? {
            agree += 1;
        }
        let tol = cfg.tolerances.clone();
        let range = fredholm::side_index(&f, cut, Side::Range, None, &tol)?;
        let comp = fredholm::side_index(&f, cut, Side::Complement, None, &tol)?;
        let sum = range.q + comp.q;
        if sum.abs() > worst_sum.abs() {
            worst_sum = sum;
        }
    }
    Ok(vec![
        CheckRecord::int("index.additivity", json!({ "pairs": pairs, "windings": [-3, 3] }), additive, pairs, 0),
        CheckRecord::int("index.winding_agreement", json!({ "loops": loops }), agree, loops, 0),
        CheckRecord::int("index.index_sum_zero", json!({ "loops": loops }), worst_sum, 0, 0),
    ])
}

fn covariance_checks(cfg: &LabConfig) -> Result<Vec<CheckRecord>> {
    let w = window(4)?;
    let space = FockSpace::full(w, cfg.sector_cap)?;
    let phi = fock::shift_implementer(&space);
    let mut power = phi.clone();
    let mut out = Vec::new();
    for n in 1..=3i64 {
        if n > 1 {
            power = power.compose(&phi);
        }
        let (q, residual) = fock::covariance_exponent(&power, cfg.tolerances.fock)?;
        let cross = fock::gauge_covariance(&LoopFunction::monomial(n), &power, &space)?;
        out.push(CheckRecord::int(&format!("index.covariance_exponent_{n}"), json!({ "power": n }), q, n, w.n_max()));
        out.push(CheckRecord::int(&format!("index.covariance_vs_charge_{n}"), json!({ "power": n }), cross, n, w.n_max()));
        out.push(CheckRecord::real(
            &format!("index.covariance_residual_{n}"),
            json!({ "power": n }),
            residual,
            0.0,
            cfg.tolerances.fock,
            w.n_max(),
        ));
    }
    Ok(out)
}

fn offdiag_checks(cfg: &LabConfig) -> Result<Vec<CheckRecord>> {
    let w = window(cfg.n_max)?;
    let cut = HalfSpace::nonnegative();
    let mut out = Vec::new();
    for k in 1..=3i64 {
        let u = LoopFunction::monomial(k).build(w)?;
        let b = fredholm::offdiag_block(&u, cut)?;
        let want: Vec<(i64, i64)> = (1..=k).rev().map(|j| (k - j, -j)).collect();
        let mut got = b.support.clone();
        got.sort_by_key(|&(m, _)| m);
        out.push(CheckRecord::flag(&format!("index.offdiag_support_{k}"), json!({ "winding": k, "support": got }), got == want, w.n_max()));
        out.push(CheckRecord::int(&format!("index.offdiag_rank_{k}"), json!({ "winding": k }), b.rank as i64, k, w.n_max()));
    }
    Ok(out)
}

fn schwinger_checks(cfg: &LabConfig) -> Result<Vec<CheckRecord>> {
    let n = cfg.fock_n_max;
    let w = window(n)?;
    let mut rng = sampling::rng(cfg.seed ^ 0x2);
    let mut worst_residual: f64 = 0.0;
    let mut worst_spread: f64 = 0.0;
    let pairs = 10;
    for _ in 0..pairs {
        let a = sampling::trig_poly(&mut rng, 2, 1.0).without_mean();
        let b = sampling::trig_poly(&mut rng, 2, 1.0).without_mean();
        let r = fock::schwinger_commutator(&a.operator(w)?, &b.operator(w)?, cfg.sector_cap)?;
        worst_residual = worst_residual.max(r.residual);
        worst_spread = worst_spread.max(r.routes.spread());
    }
    let cs = fock::schwinger_commutator(
        &TrigPoly::cos_sin(1, 2.0, 0.0).operator(w)?,
        &TrigPoly::cos_sin(1, 0.0, 2.0).operator(w)?,
        cfg.sector_cap,
    )?;
    Ok(vec![
        CheckRecord::real("schwinger.commutator_residual", json!({ "pairs": pairs }), worst_residual, 0.0, cfg.tolerances.fock, n),
        CheckRecord::real("schwinger.route_spread", json!({ "pairs": pairs }), worst_spread, 0.0, cfg.tolerances.quadrature, n),
        CheckRecord::complex(
            "schwinger.cos_sin_scalar",
            json!({ "a": "2cos", "b": "2sin", "routes": cs.routes }),
            cs.scalar,
            c(0.0, 2.0),
            cfg.tolerances.fock,
            n,
        ),
    ])
}

fn positivity_checks(cfg: &LabConfig) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for n in [4, 6] {
        let r = fock::spectrum_positivity(window(n)?, cfg.sector_cap)?;
        let p = json!({ "zero_multiplicity_full": r.zero_multiplicity, "second_lowest": r.second_lowest });
        out.push(CheckRecord::flag(&format!("schwinger.positivity_min_{n}"), p.clone(), r.min_eigenvalue >= -1e-12 && r.diagonal, n));
        out.push(CheckRecord::real(&format!("schwinger.positivity_vacuum_{n}"), p.clone(), r.vacuum_eigenvalue, 0.0, 1e-12, n));
        out.push(CheckRecord::int(&format!("schwinger.positivity_unique_zero_{n}"), p, r.zero_multiplicity_charge0 as i64, 1, n));
    }
    Ok(out)
}

fn random_generator(rng: &mut impl Rng) -> Result<GeneratorElement> {
    GeneratorElement::new(sampling::trig_poly(rng, 3, 1.0).without_mean())
}

fn weyl_algebra_checks(cfg: &LabConfig) -> Result<Vec<CheckRecord>> {
    let mut rng = sampling::rng(cfg.seed ^ 0x3);
    let mut spread: f64 = 0.0;
    for _ in 0..10 {
        let letters = (0..5).map(|_| random_generator(&mut rng)).collect::<Result<Vec<_>>>()?;
        spread = spread.max(weyl::association_spread(&WeylWord::new(letters))?);
    }
    let mut pairing_err: f64 = 0.0;
    let mut functional_err: f64 = 0.0;
    for _ in 0..10 {
        let a = random_generator(&mut rng)?;
        let direct: f64 = (1..=a.band() as i64).map(|m| m as f64 * a.poly().coeff(m).norm_sqr()).sum();
        let p = weyl::pairing_norm(&a)?;
        pairing_err = pairing_err.max((p - direct).abs());
        functional_err = functional_err.max((weyl::generating_functional(&a)? - (-0.25 * direct).exp()).abs());
    }
    let sign = fock::weyl_relation(&TrigPoly::cos_sin(1, 1.0, 0.0), &TrigPoly::cos_sin(1, 0.0, 1.0), window(8)?, cfg.sector_cap)?;
    let phase = weyl::commutation_phase(
        &GeneratorElement::new(TrigPoly::cos_sin(1, 2.0, 0.0))?,
        &GeneratorElement::new(TrigPoly::cos_sin(1, 0.0, 2.0))?,
    )?;
    let tol = cfg.tolerances.algebraic;
    Ok(vec![
        CheckRecord::real("weyl.association_spread", json!({ "words": 10, "letters": 5 }), spread, 0.0, tol, 0),
        CheckRecord::real("weyl.pairing_norm", json!({ "samples": 10 }), pairing_err, 0.0, tol, 0),
        CheckRecord::real("weyl.generating_functional", json!({ "samples": 10 }), functional_err, 0.0, tol, 0),
        CheckRecord::int(
            "weyl.relation_sign",
            json!({ "residual": sign.residual, "s": sign.s }),
            sign.sign as i64,
            weyl::WEYL_PHASE_SIGN as i64,
            sign.window,
        ),
        CheckRecord::complex("weyl.commutation_phase", json!({ "a": "2cos", "b": "2sin" }), phase, crate::linalg::cis(2.0), tol, 0),
    ])
}

fn vev_checks(cfg: &LabConfig) -> Result<Vec<CheckRecord>> {
    let a = GeneratorElement::new(TrigPoly::cos_sin(1, 2.0, 0.0))?;
    let windows = [4, 6, 8, 10];
    let r = weyl::measure_kappa(&a, &[0.25, 0.5, 1.0], &windows)?;
    let params = json!({
        "amplitudes": [0.25, 0.5, 1.0],
        "windows": windows,
        "kappa_mean": r.kappa_mean,
        "reference_kappa": r.reference_kappa,
        "ratio_to_reference": r.kappa_mean / r.reference_kappa,
    });
    let last = *windows.last().expect("nonempty");
    Ok(vec![
        CheckRecord::real("weyl.kappa_spread", params.clone(), r.kappa_spread, 0.0, cfg.tolerances.kappa_spread, last),
        CheckRecord::real("weyl.kappa_measured", params, r.kappa_mean, 0.5, cfg.tolerances.kappa_spread, last),
        CheckRecord::flag("weyl.vev_convergent", json!({ "windows": windows }), r.rows.iter().all(|row| row.convergent), last),
    ])
}

fn requirements_checks(_cfg: &LabConfig) -> Result<Vec<CheckRecord>> {
    let gens: Vec<TrigPoly> = (1..=3).flat_map(|k| [TrigPoly::cos_sin(k, 1.0, 0.0), TrigPoly::cos_sin(k, 0.0, 1.0)]).collect();
    let r = weyl::requirements_checklist(&gens, &LoopFunction::monomial(1))?;
    let params = serde_json::to_value(&r)?;
    Ok(vec![CheckRecord::flag("weyl.requirements", params, r.all, 0)])
}

fn commutant_checks(_cfg: &LabConfig) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for m in [4usize, 5] {
        for k in [1usize, 2] {
            let model = ClockShiftModel::new(m, k)?;
            let d = model.dim();
            let r = commutant::verify_center_identity(&model.fixed_point_generators(), &model.full_generators(), d, Some(&model.clock()))?;
            let params = serde_json::to_value(&r)?;
            let tag = format!("m{m}_k{k}");
            out.push(CheckRecord::flag(&format!("grading.center_identity_{tag}"), params.clone(), r.center_equals_relative_commutant, d));
            let a = commutant::generated_algebra(&model.fixed_point_generators(), d)?;
            let z = commutant::center(&a);
            let span = commutant::generated_algebra(&model.spectral_projections(), d)?;
            out.push(CheckRecord::flag(&format!("grading.center_is_spectral_{tag}"), params.clone(), z.equals(&span), d));
            if k == 1 {
                out.push(CheckRecord::flag(&format!("grading.minimal_a_equals_center_{tag}"), params, r.a_equals_center, d));
            }
            let bicomm = commutant::commutant(&commutant::commutant(&a));
            out.push(CheckRecord::flag(&format!("grading.double_commutant_{tag}"), json!({}), bicomm.equals(&a), d));
        }
    }
    Ok(out)
}

fn grading_checks(cfg: &LabConfig) -> Result<Vec<CheckRecord>> {
    let mut rng = sampling::rng(cfg.seed ^ 0x4);
    let mut out = Vec::new();
    for m in [4usize, 5] {
        for k in [1usize, 2] {
            let model = ClockShiftModel::new(m, k)?;
            let f = sampling::complex_matrix(&mut rng, model.dim(), model.dim());
            let r = commutant::grading_check(&f, &model)?;
            let worst = r.reconstruction.max(r.fixed_point).max(r.orthogonality);
            out.push(CheckRecord::real(
                &format!("grading.spectral_m{m}_k{k}"),
                serde_json::to_value(&r)?,
                worst,
                0.0,
                cfg.tolerances.algebraic,
                model.dim(),
            ));
        }
    }
    Ok(out)
}

fn random_element(rng: &mut impl Rng, theta: f64) -> Result<GradedElement> {
    let mut terms = Vec::new();
    for _ in 0..3 {
        let n = rng.random_range(-2..=2);
        let circle = CircleFn::new(crate::fourier::Fourier::from_pairs(
            (-2..=2).map(|k| (k, c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))),
        ));
        let letters = vec![cp::BLetter { nu: rng.random_range(-1..=1), generator: random_generator(rng)? }];
        terms.push((n, Term { circle, letters }));
    }
    GradedElement::from_terms(theta, terms)
}

fn stabilizer_checks(cfg: &LabConfig) -> Result<Vec<CheckRecord>> {
    let mut rng = sampling::rng(cfg.seed ^ 0x5);
    let phases = 20;
    let (mut fixes, mut gauge, mut mult, mut kappa) = (0, 0, 0, 0);
    let mut hom: f64 = 0.0;
    let mut inverse: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for _ in 0..phases {
        let theta = rng.random_range(0.0..TAU);
        let f = CircleFn::from_loop(&sampling::loop_function(&mut rng, -2..=2, 2, 0.4));
        let g = CircleFn::from_loop(&sampling::loop_function(&mut rng, -2..=2, 2, 0.4));
        let x = random_element(&mut rng, theta)?;
        let r = cp::check_stabilizer_properties(&f, &x, sampling::unit_complex(&mut rng))?;
        fixes += r.fixes_fixed_point_algebra as i64;
        gauge += r.commutes_with_gauge as i64;
        mult += r.multiplicative as i64;
        kappa += r.implements_kappa as i64;
        worst = worst.max(r.worst_residual);
        hom = hom.max(cp::homomorphism_residual(&f, &g, &x)?);
        let back = cp::stabilizer_action(&g.conj(), &cp::stabilizer_action(&g, &x)?)?;
        inverse = inverse.max(back.distance(&x));
    }
    let p = json!({ "phases": phases, "worst_residual": worst });
    let tol = 1e-10;
    Ok(vec![
        CheckRecord::int("stabilizer.fixes_fixed_points", p.clone(), fixes, phases, 0),
        CheckRecord::int("stabilizer.commutes_with_gauge", p.clone(), gauge, phases, 0),
        CheckRecord::int("stabilizer.multiplicative", p.clone(), mult, phases, 0),
        CheckRecord::int("stabilizer.implements_kappa", p, kappa, phases, 0),
        CheckRecord::real("stabilizer.homomorphism", json!({ "phases": phases }), hom, 0.0, tol, 0),
        CheckRecord::real("stabilizer.inverse", json!({ "phases": phases }), inverse, 0.0, tol, 0),
    ])
}

fn locality_checks(cfg: &LabConfig) -> Result<Vec<CheckRecord>> {
    let q = PI / 4.0;
    // supports (0, π/2) and (π, 3π/2)
    let a = LocalGenerator::bump(q, q, 1.0)?;
    let b = LocalGenerator::bump(PI + q, q, 1.0)?;
    let r = cp::net_locality(&a, &b)?;
    let inner = LocalGenerator::bump(q, q / 2.0, 1.0)?;
    let nested = cp::net_locality(&inner, &a)?;
    let mut rng = sampling::rng(cfg.seed ^ 0x6);
    let mut worst: f64 = 0.0;
    let mut all_hold = true;
    for _ in 0..10 {
        let c1 = rng.random_range(0.0..TAU);
        let w1 = rng.random_range(0.2..1.0);
        let w2 = rng.random_range(0.2..1.0);
        let gap = rng.random_range(0.05..(TAU - 2.0 * (w1 + w2)).max(0.1));
        let g1 = LocalGenerator::bump(c1, w1, rng.random_range(-2.0..2.0))?;
        let g2 = LocalGenerator::bump(c1 + w1 + gap + w2, w2, rng.random_range(-2.0..2.0))?;
        let r = cp::net_locality(&g1, &g2)?;
        if r.disjoint {
            worst = worst.max(r.s.abs());
        }
        all_hold &= r.holds;
    }
    Ok(vec![
        CheckRecord::real("stabilizer.locality_quarter_arcs", serde_json::to_value(&r)?, r.s, 0.0, cfg.tolerances.quadrature, 0),
        CheckRecord::real("stabilizer.locality_random_disjoint", json!({ "pairs": 10 }), worst, 0.0, cfg.tolerances.quadrature, 0),
        CheckRecord::flag("stabilizer.locality_holds", json!({ "pairs": 10 }), all_hold && r.holds, 0),
        CheckRecord::flag("stabilizer.locality_monotone", serde_json::to_value(&nested)?, nested.nested, 0),
    ])
}

/// Checks that accept a window parameter.
pub const SWEEPABLE: [&str; 3] = ["vev", "pairing", "hs_offdiag"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub window: usize,
    pub value: f64,
    /// `|value − value at the largest window|`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub check_id: String,
    pub rows: Vec<SweepRow>,
    /// Deltas never grow (up to rounding) as the window grows.
    pub monotone: bool,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("check_id,window,value,delta,monotone\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{:.17e},{:.3e},{}", self.check_id, r.window, r.value, r.delta, self.monotone);
        }
        s
    }
}

fn sweep_value(check_id: &str, n: usize) -> Result<f64> {
    let w = window(n)?;
    match check_id {
        "vev" => {
            let a = TrigPoly::cos_sin(1, 1.0, 0.0).operator(w)?;
            Ok(fock::vacuum_expectation_det(&a)?.re)
        }
        "pairing" => {
            let a = TrigPoly::cos_sin(1, 1.0, 0.0).operator(w)?;
            let b = TrigPoly::cos_sin(1, 0.0, 1.0).operator(w)?;
            Ok(pairing(&a, &b)?.im)
        }
        "hs_offdiag" => Ok(hs_offdiag_norms(&LoopFunction::monomial(1), HalfSpace::nonnegative(), w)?.p_u_pperp),
        other => Err(LabError::NotSweepable(other.to_string())),
    }
}

pub fn convergence_sweep(check_id: &str, windows: &[usize]) -> Result<SweepTable> {
    if !SWEEPABLE.contains(&check_id) {
        return Err(LabError::NotSweepable(check_id.to_string()));
    }
    let mut ws = windows.to_vec();
    ws.sort_unstable();
    ws.dedup();
    if ws.is_empty() {
        return Err(LabError::InvalidArgument("no windows given".into()));
    }
    let values = ws.iter().map(|&n| sweep_value(check_id, n)).collect::<Result<Vec<_>>>()?;
    let last = *values.last().expect("nonempty");
    let rows: Vec<SweepRow> = ws.iter().zip(&values).map(|(&window, &value)| SweepRow { window, value, delta: (value - last).abs() }).collect();
    let monotone = rows.windows(2).all(|p| p[1].delta <= p[0].delta.max(weyl::VEV_ROUNDING));
    Ok(SweepTable { check_id: check_id.to_string(), rows, monotone })
}
