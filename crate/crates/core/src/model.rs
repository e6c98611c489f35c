//! Problem data and the rate arithmetic of the RSMA downlink.
//!
//! Receiver `k` decodes the common stream first, treating every private
//! stream as noise, then its own private stream with the remaining private
//! streams as noise. Noise power is normalized to one. All rates are in
//! bits per channel use.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conic::SearchBox;
use crate::error::ModelError;

/// Default absolute tolerance on rate and power residuals.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Which streams the transmitter may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Common stream plus one private stream per user.
    #[default]
    Rsma,
    /// Private streams only (`p_c = 0`, no common rate).
    UnicastOnly,
    /// Common stream only (`p_k = 0`).
    MulticastOnly,
}

impl Mode {
    pub fn uses_common(self) -> bool {
        !matches!(self, Mode::UnicastOnly)
    }

    pub fn uses_private(self) -> bool {
        !matches!(self, Mode::MulticastOnly)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Rsma => "rsma",
            Mode::UnicastOnly => "unicast-only",
            Mode::MulticastOnly => "multicast-only",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rsma" => Ok(Mode::Rsma),
            "unicast-only" | "unicast" => Ok(Mode::UnicastOnly),
            "multicast-only" | "multicast" => Ok(Mode::MulticastOnly),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

/// Data of one resource allocation problem.
///
/// Invariants (checked by [`ProblemInstance::new`]): every channel vector
/// is nonzero and has length `m`, the weights are nonnegative and not all
/// zero, `mu >= 0`, `circuit_power > 0`, `power > 0`, rate floors `>= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    k: usize,
    m: usize,
    channels: Vec<Vec<Complex64>>,
    power: f64,
    weights: Vec<f64>,
    mu: f64,
    circuit_power: f64,
    rate_floors: Vec<f64>,
}

impl ProblemInstance {
    pub fn new(
        channels: Vec<Vec<Complex64>>,
        power: f64,
        weights: Vec<f64>,
        mu: f64,
        circuit_power: f64,
        rate_floors: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let k = channels.len();
        if k == 0 {
            return Err(ModelError::InvalidInstance("at least one user required".into()));
        }
        let m = channels[0].len();
        if m == 0 {
            return Err(ModelError::InvalidInstance("at least one antenna required".into()));
        }
        for (i, h) in channels.iter().enumerate() {
            if h.len() != m {
                return Err(ModelError::Dimension(format!(
                    "channel {i} has {} entries, expected {m}",
                    h.len()
                )));
            }
            let norm_sqr: f64 = h.iter().map(|z| z.norm_sqr()).sum();
            if !(norm_sqr > 0.0) || !norm_sqr.is_finite() {
                return Err(ModelError::InvalidInstance(format!("channel {i} is zero or not finite")));
            }
        }
        if weights.len() != k || rate_floors.len() != k {
            return Err(ModelError::Dimension(format!(
                "expected {k} weights and rate floors, got {} and {}",
                weights.len(),
                rate_floors.len()
            )));
        }
        if weights.iter().any(|&u| !(u >= 0.0) || !u.is_finite()) || weights.iter().all(|&u| u == 0.0) {
            return Err(ModelError::InvalidInstance("weights must be nonnegative and not all zero".into()));
        }
        if rate_floors.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(ModelError::InvalidInstance("rate floors must be nonnegative".into()));
        }
        if !(power > 0.0) || !power.is_finite() {
            return Err(ModelError::InvalidInstance("power budget must be positive".into()));
        }
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(ModelError::InvalidInstance("mu must be nonnegative".into()));
        }
        if !(circuit_power > 0.0) || !circuit_power.is_finite() {
            return Err(ModelError::InvalidInstance("circuit power must be positive".into()));
        }
        Ok(Self { k, m, channels, power, weights, mu, circuit_power, rate_floors })
    }

    /// Weighted-sum-rate instance: unit weights, `mu = 0`, `P_c = 1`, no
    /// rate floors.
    pub fn wsr(channels: Vec<Vec<Complex64>>, power: f64) -> Result<Self, ModelError> {
        let k = channels.len();
        Self::new(channels, power, vec![1.0; k], 0.0, 1.0, vec![0.0; k])
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn antennas(&self) -> usize {
        self.m
    }

    pub fn channels(&self) -> &[Vec<Complex64>] {
        &self.channels
    }

    pub fn channel(&self, k: usize) -> &[Complex64] {
        &self.channels[k]
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn circuit_power(&self) -> f64 {
        self.circuit_power
    }

    pub fn rate_floors(&self) -> &[f64] {
        &self.rate_floors
    }

    pub fn channel_norm_sqr(&self, k: usize) -> f64 {
        self.channels[k].iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Same instance with a different power budget.
    pub fn with_power(&self, power: f64) -> Result<Self, ModelError> {
        Self::new(
            self.channels.clone(),
            power,
            self.weights.clone(),
            self.mu,
            self.circuit_power,
            self.rate_floors.clone(),
        )
    }

    /// Same instance with different rate floors.
    pub fn with_rate_floors(&self, rate_floors: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(
            self.channels.clone(),
            self.power,
            self.weights.clone(),
            self.mu,
            self.circuit_power,
            rate_floors,
        )
    }

    /// Channels scaled by `sigma`, budget by `1/sigma^2` and `mu` by
    /// `sigma^2`. Every `h^H p` and every objective value is unchanged when
    /// precoders are scaled by `1/sigma`.
    pub fn rescaled(&self, sigma: f64) -> Self {
        Self {
            k: self.k,
            m: self.m,
            channels: self
                .channels
                .iter()
                .map(|h| h.iter().map(|z| z * sigma).collect())
                .collect(),
            power: self.power / (sigma * sigma),
            weights: self.weights.clone(),
            mu: self.mu * sigma * sigma,
            circuit_power: self.circuit_power,
            rate_floors: self.rate_floors.clone(),
        }
    }
}

/// `h^H p`.
pub fn inner(h: &[Complex64], p: &[Complex64]) -> Complex64 {
    h.iter().zip(p).map(|(h, p)| h.conj() * p).sum()
}

pub fn log2_1p(x: f64) -> f64 {
    (1.0 + x).log2()
}

/// A primal point: precoders and common-rate shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(with = "complex_vec")]
    pub p_c: Vec<Complex64>,
    #[serde(with = "complex_mat")]
    pub p: Vec<Vec<Complex64>>,
    pub c: Vec<f64>,
}

impl Candidate {
    pub fn zeros(k: usize, m: usize) -> Self {
        Self {
            p_c: vec![Complex64::new(0.0, 0.0); m],
            p: vec![vec![Complex64::new(0.0, 0.0); m]; k],
            c: vec![0.0; k],
        }
    }

    pub fn total_power(&self) -> f64 {
        let common: f64 = self.p_c.iter().map(|z| z.norm_sqr()).sum();
        let private: f64 = self.p.iter().flatten().map(|z| z.norm_sqr()).sum();
        common + private
    }

    /// Multiplies every precoder by `e^{j theta}`.
    pub fn rotated(&self, theta: f64) -> Self {
        let r = Complex64::from_polar(1.0, theta);
        Self {
            p_c: self.p_c.iter().map(|z| z * r).collect(),
            p: self.p.iter().map(|v| v.iter().map(|z| z * r).collect()).collect(),
            c: self.c.clone(),
        }
    }

    fn check_dims(&self, inst: &ProblemInstance) -> Result<(), ModelError> {
        let (k, m) = (inst.users(), inst.antennas());
        if self.p_c.len() != m {
            return Err(ModelError::Dimension(format!("common precoder has {} entries, expected {m}", self.p_c.len())));
        }
        if self.p.len() != k || self.c.len() != k {
            return Err(ModelError::Dimension(format!(
                "candidate has {} private precoders and {} shares, expected {k}",
                self.p.len(),
                self.c.len()
            )));
        }
        if let Some(v) = self.p.iter().find(|v| v.len() != m) {
            return Err(ModelError::Dimension(format!("private precoder has {} entries, expected {m}", v.len())));
        }
        Ok(())
    }
}

/// SINRs, rates and objective value of a candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub gamma_c: Vec<f64>,
    pub gamma_p: Vec<f64>,
    /// `log2(1 + gamma_c,k)`, the common rate user `k` can decode.
    pub common_capacity: Vec<f64>,
    /// `log2(1 + gamma_p,k)`.
    pub private_rate: Vec<f64>,
    /// `C_k + R_p,k`.
    pub per_user_rate: Vec<f64>,
    pub total_power: f64,
    pub objective: f64,
}

impl RateReport {
    /// Largest common rate every user can decode.
    pub fn common_rate(&self) -> f64 {
        self.common_capacity.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_gamma_c(&self) -> f64 {
        self.gamma_c.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates the SINRs of both decoding stages and the objective
/// `sum_k u_k (C_k + R_p,k) / (mu * power + P_c)`.
pub fn compute_sinrs(inst: &ProblemInstance, cand: &Candidate) -> Result<RateReport, ModelError> {
    cand.check_dims(inst)?;
    let k_users = inst.users();
    let mut gamma_c = Vec::with_capacity(k_users);
    let mut gamma_p = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let h = inst.channel(k);
        let gains: Vec<f64> = cand.p.iter().map(|p| inner(h, p).norm_sqr()).collect();
        let private_total: f64 = gains.iter().sum();
        gamma_c.push(inner(h, &cand.p_c).norm_sqr() / (private_total + 1.0));
        gamma_p.push(gains[k] / (private_total - gains[k] + 1.0));
    }
    let common_capacity: Vec<f64> = gamma_c.iter().map(|&g| log2_1p(g)).collect();
    let private_rate: Vec<f64> = gamma_p.iter().map(|&g| log2_1p(g)).collect();
    let per_user_rate: Vec<f64> = cand.c.iter().zip(&private_rate).map(|(c, r)| c + r).collect();
    let total_power = cand.total_power();
    let objective = objective_value(inst, &per_user_rate, total_power);
    Ok(RateReport { gamma_c, gamma_p, common_capacity, private_rate, per_user_rate, total_power, objective })
}

/// Objective for given per-user rates and total transmit power.
pub fn objective_value(inst: &ProblemInstance, per_user_rate: &[f64], total_power: f64) -> f64 {
    let numerator: f64 = inst.weights().iter().zip(per_user_rate).map(|(u, r)| u * r).sum();
    numerator / (inst.mu() * total_power + inst.circuit_power())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// `sum_k' C_k' <= log2(1 + gamma_c,k)`.
    CommonRate,
    /// `C_k >= max(0, R_k^th - log2(1 + gamma_p,k))`.
    RateFloor,
    /// Total transmit power `<= P`.
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ConstraintKind,
    pub user: Option<usize>,
    /// Amount by which the constraint is exceeded (before tolerance).
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every constraint of the resource allocation problem and lists the
/// violated ones.
pub fn check_primal_feasible(
    inst: &ProblemInstance,
    cand: &Candidate,
    tol: f64,
) -> Result<FeasibilityReport, ModelError> {
    let report = compute_sinrs(inst, cand)?;
    let mut violations = Vec::new();
    let shares: f64 = cand.c.iter().sum();
    for (k, cap) in report.common_capacity.iter().enumerate() {
        let residual = shares - cap;
        if residual > tol {
            violations.push(Violation { kind: ConstraintKind::CommonRate, user: Some(k), residual });
        }
    }
    for k in 0..inst.users() {
        let floor = (inst.rate_floors()[k] - report.private_rate[k]).max(0.0);
        let residual = floor - cand.c[k];
        if residual > tol {
            violations.push(Violation { kind: ConstraintKind::RateFloor, user: Some(k), residual });
        }
    }
    let residual = report.total_power - inst.power();
    if residual > tol {
        violations.push(Violation { kind: ConstraintKind::Power, user: None, residual });
    }
    Ok(FeasibilityReport { violations })
}

/// Initial search box `[0, P||h_k||^2]^K x [0, min_k P||h_k||^2] x [0, 2pi]^(K-1)`.
pub fn initial_box(inst: &ProblemInstance) -> SearchBox {
    initial_box_for(inst, Mode::Rsma)
}

/// Initial box restricted to the streams of `mode`. Unicast-only pins the
/// common SINR to zero and carries no phase block; multicast-only pins the
/// private SINRs to zero.
pub fn initial_box_for(inst: &ProblemInstance, mode: Mode) -> SearchBox {
    let k = inst.users();
    let gamma_max: Vec<f64> = (0..k).map(|i| inst.power() * inst.channel_norm_sqr(i)).collect();
    let s_max = gamma_max.iter().copied().fold(f64::INFINITY, f64::min);
    let gamma_hi = if mode.uses_private() { gamma_max } else { vec![0.0; k] };
    let (s_hi, phases) = if mode.uses_common() { (s_max, k - 1) } else { (0.0, 0) };
    SearchBox {
        gamma_lo: vec![0.0; k],
        gamma_hi,
        s_lo: 0.0,
        s_hi,
        alpha_lo: vec![0.0; phases],
        alpha_hi: vec![TAU; phases],
    }
}

/// Interchange representation of a complex number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(z: ComplexJson) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// On-disk instance format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub channels: Vec<Vec<ComplexJson>>,
    #[serde(rename = "P")]
    pub power: f64,
    pub weights: Vec<f64>,
    pub mu: f64,
    #[serde(rename = "Pc")]
    pub circuit_power: f64,
    #[serde(rename = "Rth")]
    pub rate_floors: Vec<f64>,
}

impl From<&ProblemInstance> for InstanceFile {
    fn from(inst: &ProblemInstance) -> Self {
        Self {
            k: inst.users(),
            m: inst.antennas(),
            channels: inst
                .channels()
                .iter()
                .map(|h| h.iter().copied().map(ComplexJson::from).collect())
                .collect(),
            power: inst.power(),
            weights: inst.weights().to_vec(),
            mu: inst.mu(),
            circuit_power: inst.circuit_power(),
            rate_floors: inst.rate_floors().to_vec(),
        }
    }
}

impl TryFrom<InstanceFile> for ProblemInstance {
    type Error = ModelError;

    fn try_from(file: InstanceFile) -> Result<Self, ModelError> {
        if file.channels.len() != file.k {
            return Err(ModelError::Dimension(format!("K = {} but {} channels", file.k, file.channels.len())));
        }
        if file.channels.iter().any(|h| h.len() != file.m) {
            return Err(ModelError::Dimension(format!("every channel must have M = {} entries", file.m)));
        }
        let channels = file
            .channels
            .into_iter()
            .map(|h| h.into_iter().map(Complex64::from).collect())
            .collect();
        ProblemInstance::new(channels, file.power, file.weights, file.mu, file.circuit_power, file.rate_floors)
    }
}

impl Serialize for ProblemInstance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        InstanceFile::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProblemInstance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = InstanceFile::deserialize(deserializer)?;
        ProblemInstance::try_from(file).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod complex_vec {
    use super::ComplexJson;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().copied().map(ComplexJson::from).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        Ok(Vec::<ComplexJson>::deserialize(d)?.into_iter().map(Complex64::from).collect())
    }
}

pub(crate) mod complex_mat {
    use super::ComplexJson;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<Complex64>], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|row| row.iter().copied().map(ComplexJson::from).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Complex64>>, D::Error> {
        Ok(Vec::<Vec<ComplexJson>>::deserialize(d)?
            .into_iter()
            .map(|row| row.into_iter().map(Complex64::from).collect())
            .collect())
    }
}
