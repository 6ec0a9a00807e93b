//! Experiment presets for the published figures.

use clap::ValueEnum;
use dasense_core::downlink::{LinkParams, Mode};
use dasense_core::engine::{Experiment, Protocol, ProtocolConfig};
use dasense_core::selection::Selector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetName {
    /// Small field: K=64, M=25, S=3, N=5.
    Fig3,
    /// Detection counts versus N.
    Fig4,
    /// Detection counts versus the scaled decision parameter.
    Fig5,
    /// MSE per round.
    Fig6,
    /// MSE at q=3 versus the scaled decision parameter.
    Fig7,
    /// MSE at q=3 versus S.
    Fig8,
    /// MSE at q=3 versus K.
    Fig9,
    /// MSE at q=3 versus N.
    Fig10,
}

impl PresetName {
    pub fn name(self) -> &'static str {
        match self {
            PresetName::Fig3 => "fig3",
            PresetName::Fig4 => "fig4",
            PresetName::Fig5 => "fig5",
            PresetName::Fig6 => "fig6",
            PresetName::Fig7 => "fig7",
            PresetName::Fig8 => "fig8",
            PresetName::Fig9 => "fig9",
            PresetName::Fig10 => "fig10",
        }
    }
}

/// Parameter varied across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    N,
    GammaU,
    S,
    K,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::GammaU => "gamma_u",
            Axis::S => "s",
            Axis::K => "k",
        }
    }

    pub fn apply(self, config: &mut ProtocolConfig, value: f64) {
        match self {
            Axis::N => config.link.requested = value as usize,
            Axis::GammaU => config.link.scaled_decision = value,
            Axis::S => config.sparsity = value as usize,
            Axis::K => config.num_nodes = value as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl Sweep {
    /// Config at every sweep point, in order.
    pub fn points(&self, base: &ProtocolConfig) -> Vec<(f64, ProtocolConfig)> {
        self.values
            .iter()
            .map(|&v| {
                let mut c = base.clone();
                self.axis.apply(&mut c, v);
                (v, c)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: PresetName,
    pub config: ProtocolConfig,
    pub sweep: Option<Sweep>,
}

const GAMMA_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

fn link(n: usize) -> LinkParams {
    // omega = -10 dB, A^2/N0 = 20 dB
    LinkParams::new(64, n, 0.1, 100.0, 0.5).expect("preset link is valid")
}

/// Defaults when no preset is named: the per-round MSE setting with 100 runs.
pub fn base_config() -> ProtocolConfig {
    let mut c = ProtocolConfig::new(300, 100, 10, link(10));
    c.rounds = 3;
    c.runs = 100;
    c.selector = Selector::CorrNorm;
    c.protocols = vec![Protocol::Das, Protocol::DasIdeal, Protocol::Rrs];
    c.mode = Mode::Gaussian;
    c
}

fn downlink_config(n: usize) -> ProtocolConfig {
    let mut c = base_config();
    c.link = link(n);
    c.experiment = Experiment::Downlink;
    c.protocols = vec![Protocol::Das];
    c.rounds = 1;
    c.runs = 1000;
    c
}

fn mse_config() -> ProtocolConfig {
    let mut c = base_config();
    c.runs = 500;
    c
}

pub fn preset(name: PresetName) -> Preset {
    let range = |lo: usize, hi: usize, step: usize| (lo..=hi).step_by(step).map(|v| v as f64).collect::<Vec<_>>();
    let (config, sweep) = match name {
        PresetName::Fig3 => {
            let mut c = ProtocolConfig::new(64, 25, 3, LinkParams::new(64, 5, 0.0, 100.0, 0.5).expect("valid"));
            c.rounds = 3;
            c.runs = 200;
            c.selector = Selector::CorrNorm;
            c.protocols = vec![Protocol::DasIdeal, Protocol::Rrs];
            (c, None)
        }
        PresetName::Fig4 => (downlink_config(50), Some(Sweep { axis: Axis::N, values: range(10, 50, 5) })),
        PresetName::Fig5 => (downlink_config(10), Some(Sweep { axis: Axis::GammaU, values: GAMMA_GRID.to_vec() })),
        PresetName::Fig6 => (mse_config(), None),
        PresetName::Fig7 => (mse_config(), Some(Sweep { axis: Axis::GammaU, values: GAMMA_GRID.to_vec() })),
        PresetName::Fig8 => (mse_config(), Some(Sweep { axis: Axis::S, values: range(4, 16, 2) })),
        PresetName::Fig9 => (mse_config(), Some(Sweep { axis: Axis::K, values: range(200, 500, 50) })),
        PresetName::Fig10 => (mse_config(), Some(Sweep { axis: Axis::N, values: range(5, 20, 5) })),
    };
    Preset { name, config, sweep }
}
