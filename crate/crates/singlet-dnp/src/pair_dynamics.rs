//! The 13C-1H two-spin system: Hamiltonian across field strengths,
//! adiabatic state correspondence, population bookkeeping, singlet order,
//! and a time-dependent propagation oracle that checks (rather than
//! assumes) adiabaticity of the field ramp.
//!
//! Total z-projection is conserved, so only the zero-quantum block
//! {|ud>, |du>} has nontrivial ramp dynamics; |uu> and |dd> are exact
//! eigenstates at every field. The propagation therefore runs in that
//! 2x2 block, which is exact, not an approximation.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::buildup::PolarizationPair;
use crate::error::{ModelError, Result};
use crate::ode;

/// Two-spin Hamiltonian parameters. `g_hz` is the scalar coupling in Hz;
/// gyromagnetic ratios are angular, rad/(s*T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairHamiltonianSpec {
    pub g_hz: f64,
    pub gamma_c: f64,
    pub gamma_h: f64,
    pub b: f64,
}

/// Field regime relative to the scalar coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRegime {
    HighField,
    Intermediate,
    LowField,
}

impl PairHamiltonianSpec {
    pub fn new(g_hz: f64, gamma_c: f64, gamma_h: f64, b: f64) -> Result<Self> {
        if !g_hz.is_finite() || g_hz <= 0.0 {
            return Err(ModelError::InvalidInput(format!(
                "scalar coupling must be finite and > 0, got {g_hz}"
            )));
        }
        if !gamma_c.is_finite() || gamma_c <= 0.0 || !gamma_h.is_finite() || gamma_h <= 0.0 {
            return Err(ModelError::InvalidInput(
                "gyromagnetic ratios must be finite and > 0".into(),
            ));
        }
        if !b.is_finite() || b < 0.0 {
            return Err(ModelError::InvalidInput(format!(
                "field must be finite and >= 0, got {b}"
            )));
        }
        Ok(Self {
            g_hz,
            gamma_c,
            gamma_h,
            b,
        })
    }

    /// Larmor frequencies in Hz, (nu_C, nu_H).
    fn larmor_hz(&self) -> (f64, f64) {
        (self.gamma_c * self.b / TAU, self.gamma_h * self.b / TAU)
    }

    /// Zeeman difference nu_C - nu_H in Hz (negative for positive field).
    fn zeeman_difference_hz(&self) -> f64 {
        let (nc, nh) = self.larmor_hz();
        nc - nh
    }

    pub fn regime(&self) -> FieldRegime {
        let (nc, nh) = self.larmor_hz();
        let zeeman = nc.abs().min(nh.abs());
        if zeeman >= 100.0 * self.g_hz {
            FieldRegime::HighField
        } else if zeeman <= 0.01 * self.g_hz {
            FieldRegime::LowField
        } else {
            FieldRegime::Intermediate
        }
    }
}

/// Basis convention attached to a set of populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// {uu, ud, du, dd}, first arrow carbon, second hydrogen.
    Product,
    /// {S0, T0, T+1, T-1}.
    SingletTriplet,
}

/// Four populations summing to one, with the basis label attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPopulations {
    values: [f64; 4],
    basis: Basis,
}

impl PairPopulations {
    pub fn new(values: [f64; 4], basis: Basis) -> Result<Self> {
        for v in values {
            if !(0.0..=1.0).contains(&v) {
                return Err(ModelError::InvalidInput(format!(
                    "population {v} outside [0, 1]"
                )));
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(ModelError::InvalidInput(format!(
                "populations sum to {sum}, expected 1"
            )));
        }
        Ok(Self { values, basis })
    }

    pub fn values(&self) -> [f64; 4] {
        self.values
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    fn expect_basis(&self, expected: Basis) -> Result<()> {
        if self.basis != expected {
            return Err(ModelError::WrongBasis {
                expected,
                got: self.basis,
            });
        }
        Ok(())
    }
}

/// Which zero-quantum assignment the high-field -> low-field relabeling
/// uses. The two conventions swap |ud> and |du> between S0 and T0; only
/// the swap-consistent one reproduces the closed-form singlet order for
/// positive scalar coupling, and the ramp propagation confirms it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapConvention {
    Eq6AsPrinted,
    Eq8Consistent,
}

impl MapConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            MapConvention::Eq6AsPrinted => "eq6_as_printed",
            MapConvention::Eq8Consistent => "eq8_consistent",
        }
    }
}

impl std::str::FromStr for MapConvention {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "eq6_as_printed" => Ok(MapConvention::Eq6AsPrinted),
            "eq8_consistent" => Ok(MapConvention::Eq8Consistent),
            other => Err(format!("unknown convention '{other}'")),
        }
    }
}

/// Pair Hamiltonian in the product basis {uu, ud, du, dd}, entries in Hz.
///
/// Block structure by total z-projection: {uu}, {ud, du}, {dd}.
pub fn pair_hamiltonian(spec: &PairHamiltonianSpec) -> [[f64; 4]; 4] {
    let g = spec.g_hz;
    let (nc, nh) = spec.larmor_hz();
    let mut h = [[0.0; 4]; 4];
    h[0][0] = g / 4.0 + (nc + nh) / 2.0;
    h[1][1] = -g / 4.0 + (nc - nh) / 2.0;
    h[2][2] = -g / 4.0 - (nc - nh) / 2.0;
    h[3][3] = g / 4.0 - (nc + nh) / 2.0;
    h[1][2] = g / 2.0;
    h[2][1] = g / 2.0;
    h
}

/// Adiabatic branch labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelLabel {
    /// Zero-quantum branch connected to S0 at zero field.
    SingletBranch,
    /// Zero-quantum branch connected to T0 at zero field.
    TripletZeroBranch,
    TripletPlus,
    TripletMinus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenLevel {
    pub energy_hz: f64,
    /// Real eigenvector in the product basis {uu, ud, du, dd}.
    pub vector: [f64; 4],
    pub label: LevelLabel,
    /// |<S0|v>|^2.
    pub singlet_character: f64,
}

/// Mixing angle of the zero-quantum block; the eigenvectors are
/// v_upper = (cos t, sin t), v_lower = (-sin t, cos t) over (ud, du).
fn zq_mixing_angle(spec: &PairHamiltonianSpec) -> f64 {
    0.5 * spec.g_hz.atan2(spec.zeeman_difference_hz())
}

fn zq_eigenvectors(spec: &PairHamiltonianSpec) -> ([f64; 2], [f64; 2]) {
    let t = zq_mixing_angle(spec);
    ([t.cos(), t.sin()], [-t.sin(), t.cos()])
}

/// Eigendecomposition with adiabatic labels tracked continuously in B.
///
/// The labels follow the analytic classification at B = 0 (no level
/// crossings occur within a symmetry block). Order: singlet branch, T0
/// branch, T+1, T-1.
pub fn eigenlevels(spec: &PairHamiltonianSpec) -> [EigenLevel; 4] {
    let g = spec.g_hz;
    let (nc, nh) = spec.larmor_hz();
    let dnu = spec.zeeman_difference_hz();
    let gap_half = 0.5 * g.hypot(dnu);
    let (upper, lower) = zq_eigenvectors(spec);
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
    let singlet_char = |v: &[f64; 2]| {
        let overlap = sqrt_half * (v[0] - v[1]);
        overlap * overlap
    };
    [
        EigenLevel {
            energy_hz: -g / 4.0 - gap_half,
            vector: [0.0, lower[0], lower[1], 0.0],
            label: LevelLabel::SingletBranch,
            singlet_character: singlet_char(&lower),
        },
        EigenLevel {
            energy_hz: -g / 4.0 + gap_half,
            vector: [0.0, upper[0], upper[1], 0.0],
            label: LevelLabel::TripletZeroBranch,
            singlet_character: singlet_char(&upper),
        },
        EigenLevel {
            energy_hz: g / 4.0 + (nc + nh) / 2.0,
            vector: [1.0, 0.0, 0.0, 0.0],
            label: LevelLabel::TripletPlus,
            singlet_character: 0.0,
        },
        EigenLevel {
            energy_hz: g / 4.0 - (nc + nh) / 2.0,
            vector: [0.0, 0.0, 0.0, 1.0],
            label: LevelLabel::TripletMinus,
            singlet_character: 0.0,
        },
    ]
}

/// Product-basis populations of a pair leaving the polarizing cell with
/// polarizations (p_C, p_H): the four products 1/4 (1 +- p_C)(1 +- p_H).
pub fn high_field_populations(p: &PolarizationPair) -> PairPopulations {
    let (pc, ph) = (p.p_c, p.p_h);
    let values = [
        0.25 * (1.0 + pc) * (1.0 + ph),
        0.25 * (1.0 + pc) * (1.0 - ph),
        0.25 * (1.0 - pc) * (1.0 + ph),
        0.25 * (1.0 - pc) * (1.0 - ph),
    ];
    PairPopulations {
        values,
        basis: Basis::Product,
    }
}

/// Relabel product-basis populations into the singlet-triplet basis under
/// the adiabatic correspondence. T+1 and T-1 pass through unchanged.
pub fn adiabatic_map(pops: &PairPopulations, convention: MapConvention) -> Result<PairPopulations> {
    pops.expect_basis(Basis::Product)?;
    let [uu, ud, du, dd] = pops.values;
    let (s0, t0) = match convention {
        MapConvention::Eq6AsPrinted => (du, ud),
        MapConvention::Eq8Consistent => (ud, du),
    };
    Ok(PairPopulations {
        values: [s0, t0, uu, dd],
        basis: Basis::SingletTriplet,
    })
}

/// Singlet order: singlet population minus the mean triplet population.
pub fn singlet_order_from_populations(pops: &PairPopulations) -> Result<f64> {
    pops.expect_basis(Basis::SingletTriplet)?;
    let [s0, t0, tp, tm] = pops.values;
    Ok(s0 - (t0 + tp + tm) / 3.0)
}

/// Closed form of the singlet order, (p_C - p_H - p_C p_H) / 3.
pub fn singlet_order_closed_form(p: &PolarizationPair) -> f64 {
    (p.p_c - p.p_h - p.p_c * p.p_h) / 3.0
}

/// Field ramp protocol, tesla and seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampProtocol {
    pub b_high: f64,
    pub b_low: f64,
    pub t2: f64,
    pub shape: RampShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    Linear,
    Exponential,
    Tanh,
}

impl RampShape {
    pub fn as_str(&self) -> &'static str {
        match self {
            RampShape::Linear => "linear",
            RampShape::Exponential => "exponential",
            RampShape::Tanh => "tanh",
        }
    }
}

impl std::str::FromStr for RampShape {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear" => Ok(RampShape::Linear),
            "exponential" => Ok(RampShape::Exponential),
            "tanh" => Ok(RampShape::Tanh),
            other => Err(format!("unknown ramp shape '{other}'")),
        }
    }
}

impl RampProtocol {
    pub fn new(b_high: f64, b_low: f64, t2: f64, shape: RampShape) -> Result<Self> {
        if !(b_high.is_finite() && b_low.is_finite() && b_high > b_low && b_low > 0.0) {
            return Err(ModelError::InvalidInput(format!(
                "ramp fields must satisfy b_high > b_low > 0, got {b_high}, {b_low}"
            )));
        }
        if !t2.is_finite() || t2 <= 0.0 {
            return Err(ModelError::InvalidInput(format!(
                "ramp duration must be finite and > 0, got {t2}"
            )));
        }
        Ok(Self {
            b_high,
            b_low,
            t2,
            shape,
        })
    }
}

/// Field value at time `t` of the ramp, monotone from b_high to b_low.
pub fn ramp_field(t: f64, protocol: &RampProtocol) -> Result<f64> {
    if !(0.0..=protocol.t2).contains(&t) {
        return Err(ModelError::InvalidInput(format!(
            "time {t} outside the ramp interval [0, {}]",
            protocol.t2
        )));
    }
    let s = t / protocol.t2;
    let (bh, bl) = (protocol.b_high, protocol.b_low);
    Ok(match protocol.shape {
        RampShape::Linear => bh + (bl - bh) * s,
        RampShape::Exponential => bh * (bl / bh).powf(s),
        RampShape::Tanh => {
            // smooth switch with exact endpoints
            const ALPHA: f64 = 2.0;
            let w = 0.5 * (1.0 - (ALPHA * (2.0 * s - 1.0)).tanh() / ALPHA.tanh());
            bl + (bh - bl) * w
        }
    })
}

/// dB/dt at time `t`.
fn ramp_field_derivative(t: f64, protocol: &RampProtocol) -> f64 {
    let s = t / protocol.t2;
    let (bh, bl) = (protocol.b_high, protocol.b_low);
    match protocol.shape {
        RampShape::Linear => (bl - bh) / protocol.t2,
        RampShape::Exponential => {
            let ln = (bl / bh).ln();
            bh * (bl / bh).powf(s) * ln / protocol.t2
        }
        RampShape::Tanh => {
            const ALPHA: f64 = 2.0;
            let x = ALPHA * (2.0 * s - 1.0);
            let sech2 = 1.0 / x.cosh().powi(2);
            -(bh - bl) * ALPHA * sech2 / (ALPHA.tanh() * protocol.t2)
        }
    }
}

/// First time at which the ramp reaches field `b` (bisection on the
/// monotone profile).
fn ramp_time_at_field(b: f64, protocol: &RampProtocol) -> Result<f64> {
    if b >= protocol.b_high {
        return Ok(0.0);
    }
    if b <= protocol.b_low {
        return Ok(protocol.t2);
    }
    let mut lo = 0.0;
    let mut hi = protocol.t2;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ramp_field(mid, protocol)? > b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of propagating the ramp through the anti-crossing region.
#[derive(Debug, Clone, Copy)]
pub struct RampOutcome {
    /// Populations in the low-field eigenbasis {S0, T0, T+1, T-1}.
    pub final_populations: PairPopulations,
    /// Population found in the wrong zero-quantum adiabatic branch at b_low
    /// for a pair starting in |ud>.
    pub diabatic_leakage: f64,
    /// | ||psi||^2 - 1 | after integration.
    pub norm_defect: f64,
    /// Field at which the integration starts.
    pub start_field: f64,
    pub start_time: f64,
}

/// Propagate product-basis populations through the field ramp by solving
/// the time-dependent Schroedinger equation in the zero-quantum block.
///
/// The integration starts where the Zeeman difference equals
/// `start_field_factor * g`; above that field the adiabatic-theorem margin
/// keeps populations frozen (mixing angle ~ 1/(2*factor)). The common
/// zero-quantum phase -g/4 is removed before integration so only the gap
/// dynamics remain.
pub fn propagate_ramp(
    initial: &PairPopulations,
    protocol: &RampProtocol,
    spec: &PairHamiltonianSpec,
    start_field_factor: f64,
) -> Result<RampOutcome> {
    initial.expect_basis(Basis::Product)?;
    if !start_field_factor.is_finite() || start_field_factor <= 0.0 {
        return Err(ModelError::InvalidInput(format!(
            "start field factor must be finite and > 0, got {start_field_factor}"
        )));
    }
    let dnu_per_tesla = (spec.gamma_c - spec.gamma_h).abs() / TAU;
    let b_start = (start_field_factor * spec.g_hz / dnu_per_tesla).min(protocol.b_high);
    let at = |b: f64| PairHamiltonianSpec { b, ..*spec };

    if b_start <= protocol.b_low {
        // the entire ramp stays above the mixing region; the branch
        // populations pass through unchanged
        let [uu, ud, du, dd] = initial.values;
        return Ok(RampOutcome {
            final_populations: PairPopulations::new([ud, du, uu, dd], Basis::SingletTriplet)?,
            diabatic_leakage: 0.0,
            norm_defect: 0.0,
            start_field: b_start,
            start_time: protocol.t2,
        });
    }
    let t_start = ramp_time_at_field(b_start, protocol)?;

    // lower zero-quantum eigenvector at the start field
    let (_, lower_start) = zq_eigenvectors(&at(ramp_field(t_start, protocol)?));
    let psi0 = [
        Complex64::new(lower_start[0], 0.0),
        Complex64::new(lower_start[1], 0.0),
    ];

    let g_half = TAU * spec.g_hz / 2.0;
    let rhs = |t: f64, y: &ode::State2| -> ode::State2 {
        let b = ramp_field(t.clamp(0.0, protocol.t2), protocol).expect("clamped into range");
        let dnu_half = TAU * at(b).zeeman_difference_hz() / 2.0;
        [
            Complex64::new(0.0, -1.0) * (dnu_half * y[0] + g_half * y[1]),
            Complex64::new(0.0, -1.0) * (g_half * y[0] - dnu_half * y[1]),
        ]
    };
    let psi = ode::integrate(rhs, t_start, protocol.t2, psi0, 5e-13, 1e-15)?;
    let norm_defect = ((psi[0].norm_sqr() + psi[1].norm_sqr()) - 1.0).abs();

    let low = at(protocol.b_low);
    let (upper_end, _) = zq_eigenvectors(&low);
    let overlap_upper = upper_end[0] * psi[0] + upper_end[1] * psi[1];
    let leakage = overlap_upper.norm_sqr() / (psi[0].norm_sqr() + psi[1].norm_sqr());

    // branch populations at the start field for a density matrix diagonal
    // in the product basis
    let [uu, ud, du, dd] = initial.values;
    let start_spec = at(b_start);
    let (upper_s, lower_s) = zq_eigenvectors(&start_spec);
    let n_lower = ud * lower_s[0] * lower_s[0] + du * lower_s[1] * lower_s[1];
    let n_upper = ud * upper_s[0] * upper_s[0] + du * upper_s[1] * upper_s[1];
    // the 2x2 propagator moves `leakage` across branches symmetrically
    let n_s0 = n_lower * (1.0 - leakage) + n_upper * leakage;
    let n_t0 = n_lower * leakage + n_upper * (1.0 - leakage);

    let final_populations = PairPopulations::new(
        normalize4([n_s0, n_t0, uu, dd]),
        Basis::SingletTriplet,
    )?;
    Ok(RampOutcome {
        final_populations,
        diabatic_leakage: leakage,
        norm_defect,
        start_field: b_start,
        start_time: t_start,
    })
}

/// Wash out sub-1e-12 rounding so the population invariant holds exactly.
fn normalize4(mut v: [f64; 4]) -> [f64; 4] {
    let sum: f64 = v.iter().sum();
    for x in &mut v {
        *x /= sum;
    }
    v
}

/// Closed-form diabatic transition probability for the ramp, evaluated at
/// the point where the Zeeman difference equals the coupling:
/// exp(-pi^2 g^2 / |d(dnu)/dt|), sweep rate in Hz/s.
pub fn landau_zener_estimate(protocol: &RampProtocol, spec: &PairHamiltonianSpec) -> Result<f64> {
    let dnu_per_tesla = (spec.gamma_c - spec.gamma_h).abs() / TAU;
    let b_at_g = spec.g_hz / dnu_per_tesla;
    let t_star = ramp_time_at_field(b_at_g, protocol)?;
    let rate = dnu_per_tesla * ramp_field_derivative(t_star, protocol).abs();
    if rate == 0.0 {
        return Ok(0.0);
    }
    Ok((-std::f64::consts::PI.powi(2) * spec.g_hz * spec.g_hz / rate).exp())
}
