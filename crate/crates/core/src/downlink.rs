//! Fading, truncated channel inversion and the compressive transmission request.
//!
//! All powers are in units of the noise floor `N0`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::scene::SignatureBook;
use crate::{Error, Result};

/// How each node computes its correlator statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Mode {
    /// Superimpose the actual signatures, add complex noise, correlate.
    Waveform,
    /// Sample the large-`L` Gaussian model of the correlator output.
    Gaussian,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Waveform => "waveform",
            Mode::Gaussian => "gaussian",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Mode::Waveform, Mode::Gaussian].into_iter().find(|m| m.name() == name)
    }
}

/// Where a node puts its decision threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ThresholdPolicy {
    /// `z >= sqrt(P_ap) g (1 + scaled_decision) / 2`.
    Scaled,
    /// Log-likelihood test against the prior odds of being requested.
    Map,
}

impl ThresholdPolicy {
    pub fn name(self) -> &'static str {
        match self {
            ThresholdPolicy::Scaled => "scaled",
            ThresholdPolicy::Map => "map",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [ThresholdPolicy::Scaled, ThresholdPolicy::Map].into_iter().find(|m| m.name() == name)
    }
}

/// Radio-side scalars of one request round.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinkParams {
    /// Signature length `L`.
    pub signature_len: usize,
    /// Nodes requested per round, `N`.
    pub requested: usize,
    /// `P_rx / P_max`: nodes with gain below this cannot transmit.
    pub omega: f64,
    /// `A_ap^2 / N0`.
    pub ap_snr: f64,
    /// `gamma * u_q`, strictly inside (-1, 1).
    pub scaled_decision: f64,
    pub noise_floor: f64,
    pub threshold: ThresholdPolicy,
}

impl LinkParams {
    pub fn new(signature_len: usize, requested: usize, omega: f64, ap_snr: f64, scaled_decision: f64) -> Result<Self> {
        let p = Self {
            signature_len,
            requested,
            omega,
            ap_snr,
            scaled_decision,
            noise_floor: 1.0,
            threshold: ThresholdPolicy::Scaled,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.signature_len == 0 || self.requested == 0 {
            return Err(Error::InvalidDimension("L and N must be positive"));
        }
        if !self.omega.is_finite() || self.omega < 0.0 {
            return Err(Error::InvalidConfig("omega must be finite and nonnegative"));
        }
        if self.ap_snr.is_nan() || self.ap_snr <= 0.0 || self.noise_floor.is_nan() || self.noise_floor <= 0.0 {
            return Err(Error::InvalidConfig("AP SNR and noise floor must be positive"));
        }
        if !(self.scaled_decision > -1.0 && self.scaled_decision < 1.0) {
            return Err(Error::InvalidConfig("scaled decision parameter must lie in (-1, 1)"));
        }
        Ok(())
    }

    /// Request amplitude `A_ap`.
    pub fn amplitude(&self) -> f64 {
        libm::sqrt(self.ap_snr * self.noise_floor)
    }

    /// Per-signature power of the probe, `A_ap^2 / N`.
    pub fn p_ap(&self) -> f64 {
        self.ap_snr * self.noise_floor / self.requested as f64
    }

    /// Interference-plus-noise seen by a node that was not requested.
    pub fn sigma2_h0(&self) -> f64 {
        self.p_ap() * self.requested as f64 / self.signature_len as f64 + self.noise_floor
    }

    /// Interference-plus-noise seen by a requested node.
    pub fn sigma2_h1(&self) -> f64 {
        self.p_ap() * (self.requested as f64 - 1.0) / self.signature_len as f64 + self.noise_floor
    }

    /// Downlink SINR `gamma = P_ap / sigma2_h0`.
    pub fn sinr(&self) -> f64 {
        self.p_ap() / self.sigma2_h0()
    }

    /// Decision threshold of a node with gain `gain` among `listeners`
    /// nodes of which `requested` were asked.
    pub fn threshold(&self, gain: f64, listeners: usize, requested: usize) -> f64 {
        let sqrt_p = libm::sqrt(self.p_ap());
        match self.threshold {
            ThresholdPolicy::Scaled => sqrt_p * gain / 2.0 * (1.0 + self.scaled_decision),
            ThresholdPolicy::Map => {
                let idle = listeners.saturating_sub(requested) as f64;
                let tau = libm::log(idle / requested as f64);
                sqrt_p * gain / 2.0 + self.sigma2_h0() * tau / (2.0 * sqrt_p)
            }
        }
    }
}

/// `gamma` for a link.
pub fn compute_sinr(params: &LinkParams) -> f64 {
    params.sinr()
}

/// One round of Rayleigh fading for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    /// `|h_k|^2`, unit-mean exponential.
    pub gains: Vec<f64>,
    /// `h_k / |h_k|`.
    pub phases: Vec<Complex64>,
}

impl ChannelDraw {
    pub fn coefficient(&self, node: usize) -> Complex64 {
        self.phases[node] * libm::sqrt(self.gains[node])
    }

    pub fn is_feasible(&self, node: usize, omega: f64) -> bool {
        self.gains[node] >= omega
    }
}

pub fn draw_gains<R: Rng + ?Sized>(num_nodes: usize, rng: &mut R) -> ChannelDraw {
    let gains: Vec<f64> = (0..num_nodes).map(|_| rng.sample(Exp1)).collect();
    let phases = (0..num_nodes)
        .map(|_| {
            let theta = rng.random::<f64>() * core::f64::consts::TAU;
            Complex64::new(libm::cos(theta), libm::sin(theta))
        })
        .collect();
    ChannelDraw { gains, phases }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DownlinkOutcome {
    pub requested: Vec<usize>,
    pub listeners: Vec<usize>,
    /// Correlator output, aligned with `listeners`.
    pub statistic: Vec<f64>,
    /// Nodes that actually transmit, ascending.
    pub realized: Vec<usize>,
    /// Requested but silent, ascending.
    pub md_events: Vec<usize>,
    /// Not requested but transmitting, ascending.
    pub fa_events: Vec<usize>,
}

/// Runs the request test at every listening node.
///
/// A node transmits iff its statistic clears its threshold and its gain is at
/// least `omega`. `requested` must be a subset of `listeners`.
pub fn simulate_request<R: Rng + ?Sized>(
    requested: &[usize],
    listeners: &[usize],
    book: &SignatureBook,
    draw: &ChannelDraw,
    params: &LinkParams,
    mode: Mode,
    rng: &mut R,
) -> Result<DownlinkOutcome> {
    let k_total = draw.gains.len();
    if book.num_nodes() != k_total {
        return Err(Error::LengthMismatch { expected: k_total, actual: book.num_nodes() });
    }
    let mut listening = vec![false; k_total];
    for &k in listeners {
        if k >= k_total {
            return Err(Error::Contract("listener index out of range"));
        }
        listening[k] = true;
    }
    let mut asked = vec![false; k_total];
    for &k in requested {
        if k >= k_total || !listening[k] {
            return Err(Error::Contract("requested nodes must be listening"));
        }
        asked[k] = true;
    }

    let statistic: Vec<f64> = match mode {
        Mode::Gaussian => {
            let sqrt_p = libm::sqrt(params.p_ap());
            let (s0, s1) = (params.sigma2_h0(), params.sigma2_h1());
            listeners
                .iter()
                .map(|&k| {
                    let g = draw.gains[k];
                    let xi: f64 = rng.sample(StandardNormal);
                    if asked[k] {
                        sqrt_p * g + libm::sqrt(g * s1 / 2.0) * xi
                    } else {
                        libm::sqrt(g * s0 / 2.0) * xi
                    }
                })
                .collect()
        }
        Mode::Waveform => waveform_statistics(requested, listeners, book, draw, params, rng),
    };

    let mut realized = Vec::new();
    let mut md_events = Vec::new();
    let mut fa_events = Vec::new();
    for (i, &k) in listeners.iter().enumerate() {
        let g = draw.gains[k];
        let declares = statistic[i] >= params.threshold(g, listeners.len(), requested.len());
        let active = declares && g >= params.omega;
        match (asked[k], active) {
            (true, true) => realized.push(k),
            (true, false) => md_events.push(k),
            (false, true) => {
                realized.push(k);
                fa_events.push(k);
            }
            (false, false) => {}
        }
    }
    realized.sort_unstable();
    md_events.sort_unstable();
    fa_events.sort_unstable();
    Ok(DownlinkOutcome {
        requested: requested.to_vec(),
        listeners: listeners.to_vec(),
        statistic,
        realized,
        md_events,
        fa_events,
    })
}

/// `z_k = Re((h_k c_k)^H y_k)` with `y_k = h_k (A / ||p||) p + n_k`.
fn waveform_statistics<R: Rng + ?Sized>(
    requested: &[usize],
    listeners: &[usize],
    book: &SignatureBook,
    draw: &ChannelDraw,
    params: &LinkParams,
    rng: &mut R,
) -> Vec<f64> {
    let len = book.length;
    let mut probe = vec![Complex64::new(0.0, 0.0); len];
    for &k in requested {
        for (p, c) in probe.iter_mut().zip(book.signature(k).iter()) {
            *p += c;
        }
    }
    let norm = libm::sqrt(probe.iter().map(|p| p.norm_sqr()).sum::<f64>());
    let gain = if norm > 0.0 { params.amplitude() / norm } else { 0.0 };
    let noise_sd = libm::sqrt(params.noise_floor / 2.0);

    let mut received = vec![Complex64::new(0.0, 0.0); len];
    listeners
        .iter()
        .map(|&k| {
            let h = draw.coefficient(k);
            for (y, p) in received.iter_mut().zip(&probe) {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *y = h * gain * p + Complex64::new(re, im) * noise_sd;
            }
            let corr: Complex64 = book.signature(k).iter().zip(&received).map(|(c, y)| c.conj() * y).sum();
            (h.conj() * corr).re
        })
        .collect()
}
