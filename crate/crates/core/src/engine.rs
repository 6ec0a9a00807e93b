//! Multi-round protocols and Monte-Carlo aggregation.
//!
//! A run draws one scene and one signature book, performs a shared round 0
//! (a uniform `N`-subset of power-feasible nodes reports), then plays each
//! configured protocol for `Q` further rounds. Every random quantity comes
//! from a stream keyed by `(seed, run, round)`, so protocols inside a run see
//! the same channel realizations and the whole trace is a pure function of
//! the configuration.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;

use crate::downlink::{self, ChannelDraw, LinkParams, Mode};
use crate::recovery::{squared_error, Estimate, MeasurementSet, SolverOptions};
use crate::rng::{self, tag};
use crate::scene::{generate_signatures, Scene, SignatureBook};
use crate::selection::{self, AcquiredSet, Selector};
use crate::{Error, Result};

/// Protocol variant played after round 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Protocol {
    /// Data-aided selection with the downlink request test.
    Das,
    /// Data-aided selection, no detection errors; gains below `omega` still drop out.
    DasIdeal,
    /// Uniform selection with the budget of a paired data-aided run.
    Rrs,
    /// Data-aided flow driven by the true field.
    Oracle,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Protocol::Das, Protocol::DasIdeal, Protocol::Rrs, Protocol::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Das => "das",
            Protocol::DasIdeal => "das_ideal",
            Protocol::Rrs => "rrs",
            Protocol::Oracle => "oracle",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    fn stream_id(self) -> u64 {
        match self {
            Protocol::Das => 0,
            Protocol::DasIdeal => 1,
            Protocol::Rrs => 2,
            Protocol::Oracle => 3,
        }
    }
}

/// What a run simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Experiment {
    /// Round 0 plus `Q` rounds of acquisition and recovery.
    Sensing,
    /// A single request to a uniform `N`-subset with every node listening;
    /// only detection counts are recorded.
    Downlink,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Sensing => "sensing",
            Experiment::Downlink => "downlink",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Experiment::Sensing, Experiment::Downlink].into_iter().find(|e| e.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProtocolConfig {
    /// `K`.
    pub num_nodes: usize,
    /// `M`.
    pub basis_dim: usize,
    /// `S`.
    pub sparsity: usize,
    /// Radio parameters; `link.requested` is `N`, `link.signature_len` is `L`.
    pub link: LinkParams,
    /// `Q`, rounds after round 0.
    pub rounds: usize,
    pub runs: usize,
    pub selector: Selector,
    /// Protocols reported, in output order.
    pub protocols: Vec<Protocol>,
    pub experiment: Experiment,
    pub seed: u64,
    pub mode: Mode,
    /// Reuse one scene for every run.
    pub pin_scene: bool,
    pub solver: SolverOptions,
}

impl ProtocolConfig {
    /// Config with solver defaults, a single `das` protocol and gaussian mode.
    pub fn new(num_nodes: usize, basis_dim: usize, sparsity: usize, link: LinkParams) -> Self {
        Self {
            num_nodes,
            basis_dim,
            sparsity,
            link,
            rounds: 3,
            runs: 1,
            selector: Selector::CorrNorm,
            protocols: vec![Protocol::Das],
            experiment: Experiment::Sensing,
            seed: 0,
            mode: Mode::Gaussian,
            pin_scene: false,
            solver: SolverOptions::default(),
        }
    }

    pub fn requested(&self) -> usize {
        self.link.requested
    }

    /// Largest number of simultaneous uplink transmissions the AP can separate.
    pub fn cra_capacity(&self) -> usize {
        self.link.signature_len.saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        if self.num_nodes == 0 || self.basis_dim == 0 {
            return Err(Error::InvalidDimension("K and M must be positive"));
        }
        if self.basis_dim > self.num_nodes {
            return Err(Error::InvalidConfig("M must not exceed K"));
        }
        if self.sparsity > self.basis_dim {
            return Err(Error::InvalidConfig("S must not exceed M"));
        }
        if self.link.requested > self.num_nodes {
            return Err(Error::InvalidConfig("N must not exceed K"));
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be positive"));
        }
        if self.protocols.is_empty() {
            return Err(Error::InvalidConfig("at least one protocol is required"));
        }
        for (i, p) in self.protocols.iter().enumerate() {
            if self.protocols[..i].contains(p) {
                return Err(Error::InvalidConfig("protocols must be distinct"));
            }
        }
        let s = &self.solver;
        let positive = |x: f64| x > 0.0;
        if !positive(s.lambda_scale)
            || !positive(s.tol)
            || s.max_iter == 0
            || s.support_rel_threshold.is_nan()
            || s.support_rel_threshold < 0.0
        {
            return Err(Error::InvalidConfig("solver options must be positive"));
        }
        Ok(())
    }

    /// Seed of the scene used by `run`.
    pub fn scene_seed(&self, run: usize) -> u64 {
        if self.pin_scene {
            rng::derive_seed(self.seed, &[tag::SCENE])
        } else {
            rng::derive_seed(self.seed, &[tag::SCENE, run as u64])
        }
    }

    /// Protocol that sets the per-round budget of `rrs` (and of `das_ideal`
    /// when `das` is also played).
    fn budget_source(&self) -> Protocol {
        [Protocol::Das, Protocol::DasIdeal, Protocol::Oracle]
            .into_iter()
            .find(|p| self.protocols.contains(p))
            .unwrap_or(Protocol::Das)
    }
}

/// One round of one protocol in one run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundRecord {
    pub round: usize,
    pub requested: usize,
    /// Nodes that transmitted, `requested - md + fa`.
    pub realized: usize,
    pub md: usize,
    pub fa: usize,
    /// `realized <= L - 1`; on failure the round contributes no data.
    pub cra_success: bool,
    /// Measurements held after this round.
    pub acquired_total: usize,
    /// `||v - v_hat||^2` after recovery; NaN in downlink-only experiments.
    pub sq_error: f64,
    /// `max_j |s_hat_j - s_j|` after recovery; NaN in downlink-only experiments.
    pub coef_error: f64,
}

/// Things that went wrong in a run without aborting it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunFlags {
    /// Round 0 found fewer than `N` feasible nodes.
    pub round0_shortfall: bool,
    /// Candidates ran out; the run stopped early or requested fewer than `N`.
    pub exhausted: bool,
    pub cra_failures: usize,
    /// Lasso solves that hit `max_iter`.
    pub unconverged: usize,
    /// Correlation-normalized selection had no acquired nodes to normalize by.
    pub selector_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunTrace {
    pub run: usize,
    pub scene_seed: u64,
    pub protocol: Protocol,
    pub rounds: Vec<RoundRecord>,
    pub flags: RunFlags,
}

/// Per-protocol, per-round statistics over runs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundAggregate {
    pub protocol: Protocol,
    pub round: usize,
    /// Runs that reached this round.
    pub count: usize,
    pub mean_requested: f64,
    pub mean_realized: f64,
    pub mean_md: f64,
    pub mean_fa: f64,
    pub cra_success_rate: f64,
    pub mean_acquired: f64,
    pub mean_sq_error: f64,
    /// Sample standard deviation; zero for a single run.
    pub std_sq_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trace {
    pub config: ProtocolConfig,
    /// Ordered by run, then by `config.protocols`.
    pub runs: Vec<RunTrace>,
}

impl Trace {
    /// Means over runs, accumulated in run order.
    pub fn aggregates(&self) -> Vec<RoundAggregate> {
        let mut out = Vec::new();
        for &protocol in &self.config.protocols {
            let max_round = self
                .runs
                .iter()
                .filter(|r| r.protocol == protocol)
                .flat_map(|r| r.rounds.iter().map(|x| x.round))
                .max();
            let Some(max_round) = max_round else { continue };
            for round in 0..=max_round {
                let recs: Vec<&RoundRecord> = self
                    .runs
                    .iter()
                    .filter(|r| r.protocol == protocol)
                    .flat_map(|r| r.rounds.iter().filter(move |x| x.round == round))
                    .collect();
                if recs.is_empty() {
                    continue;
                }
                let n = recs.len() as f64;
                let mean = |f: &dyn Fn(&RoundRecord) -> f64| recs.iter().map(|r| f(r)).sum::<f64>() / n;
                let mean_sq_error = mean(&|r| r.sq_error);
                let std_sq_error = if recs.len() > 1 {
                    let ss: f64 = recs.iter().map(|r| (r.sq_error - mean_sq_error).powi(2)).sum();
                    libm::sqrt(ss / (n - 1.0))
                } else {
                    0.0
                };
                out.push(RoundAggregate {
                    protocol,
                    round,
                    count: recs.len(),
                    mean_requested: mean(&|r| r.requested as f64),
                    mean_realized: mean(&|r| r.realized as f64),
                    mean_md: mean(&|r| r.md as f64),
                    mean_fa: mean(&|r| r.fa as f64),
                    cra_success_rate: mean(&|r| if r.cra_success { 1.0 } else { 0.0 }),
                    mean_acquired: mean(&|r| r.acquired_total as f64),
                    mean_sq_error,
                    std_sq_error,
                });
            }
        }
        out
    }

    pub fn aggregate(&self, protocol: Protocol, round: usize) -> Option<RoundAggregate> {
        self.aggregates().into_iter().find(|a| a.protocol == protocol && a.round == round)
    }

    pub fn records(&self) -> impl Iterator<Item = (&RunTrace, &RoundRecord)> {
        self.runs.iter().flat_map(|r| r.rounds.iter().map(move |x| (r, x)))
    }
}

/// Everything a run shares across protocols.
#[derive(Debug, Clone)]
pub struct RunContext<'a> {
    pub config: &'a ProtocolConfig,
    pub run: usize,
    pub scene: Scene,
    pub book: SignatureBook,
}

impl<'a> RunContext<'a> {
    pub fn new(config: &'a ProtocolConfig, run: usize) -> Result<Self> {
        let scene = Scene::generate(config.num_nodes, config.basis_dim, config.sparsity, config.scene_seed(run))?;
        let book = signature_book(config, run)?;
        Ok(Self { config, run, scene, book })
    }

    fn key(&self, label: u64, round: usize) -> [u64; 3] {
        [label, self.run as u64, round as u64]
    }

    /// Channel realization of `round`, common to every protocol of the run.
    pub fn channel(&self, round: usize) -> ChannelDraw {
        let mut r = rng::stream(self.config.seed, &self.key(tag::CHANNEL, round));
        downlink::draw_gains(self.config.num_nodes, &mut r)
    }
}

fn signature_book(config: &ProtocolConfig, run: usize) -> Result<SignatureBook> {
    let seed = rng::derive_seed(config.seed, &[tag::SIGNATURES, run as u64]);
    generate_signatures(config.link.signature_len, config.num_nodes, seed)
}

/// Acquisition state of one protocol within a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundState {
    pub round: usize,
    pub acquired: AcquiredSet,
    pub data: MeasurementSet,
    pub estimate: Estimate,
}

/// Result of one round beyond its record.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub record: RoundRecord,
    /// Nodes whose measurements entered the data set this round.
    pub appended: Vec<usize>,
    pub exhausted: bool,
    pub fallback: bool,
}

impl RoundState {
    fn record(&self, requested: usize, realized: usize, md: usize, fa: usize, cra_success: bool) -> RoundRecord {
        RoundRecord {
            round: self.round,
            requested,
            realized,
            md,
            fa,
            cra_success,
            acquired_total: self.acquired.len(),
            sq_error: f64::NAN,
            coef_error: f64::NAN,
        }
    }

    /// Appends `nodes` and refits, warm-starting from the previous lasso solution.
    fn absorb(&mut self, scene: &Scene, nodes: &[usize], solver: &SolverOptions) -> Result<()> {
        if nodes.is_empty() {
            return Ok(());
        }
        self.data.append_from_scene(scene, nodes)?;
        self.acquired.insert_all(nodes);
        let warm = self.estimate.lasso_coef.clone();
        self.estimate = Estimate::from_measurements(scene, &self.data, solver, Some(&warm))?;
        Ok(())
    }

    /// Fills the error columns of `record` from the current estimate.
    fn score(&self, scene: &Scene, record: &mut RoundRecord) -> Result<()> {
        record.sq_error = squared_error(scene.target.as_slice(), self.estimate.v_hat.as_slice())?;
        record.coef_error = (&self.estimate.s_hat - &scene.sparse).amax();
        Ok(())
    }
}

/// Round 0: a uniform `N`-subset of the nodes with `g >= omega` reports.
/// With fewer feasible nodes all of them report (`realized < requested`).
pub fn run_round0(ctx: &RunContext<'_>) -> Result<(RoundState, RoundRecord)> {
    let config = ctx.config;
    let draw = ctx.channel(0);
    let feasible: Vec<usize> = (0..config.num_nodes).filter(|&k| draw.is_feasible(k, config.link.omega)).collect();
    let mut pick = rng::stream(config.seed, &[tag::ROUND0, ctx.run as u64]);
    let take = config.requested().min(feasible.len());
    let mut nodes: Vec<usize> =
        index::sample(&mut pick, feasible.len(), take).into_iter().map(|i| feasible[i]).collect();
    nodes.sort_unstable();

    let mut state = RoundState {
        round: 0,
        acquired: AcquiredSet::new(config.num_nodes),
        data: MeasurementSet::empty(config.basis_dim),
        estimate: Estimate::zero(&ctx.scene),
    };
    let cra_success = nodes.len() <= config.cra_capacity();
    if cra_success {
        state.absorb(&ctx.scene, &nodes, &config.solver)?;
    }
    let mut record = state.record(config.requested(), nodes.len(), config.requested() - nodes.len(), 0, cra_success);
    state.score(&ctx.scene, &mut record)?;
    Ok((state, record))
}

/// Data-aided round: select, request, gate, recover.
///
/// `protocol` is `Das`, `DasIdeal` or `Oracle`. For `Das` and `Oracle`,
/// `want` is the number of nodes requested; for `DasIdeal` it is the number
/// of measurements to collect. Returns `None` when no candidates remain.
pub fn run_das_round(
    state: &mut RoundState,
    ctx: &RunContext<'_>,
    protocol: Protocol,
    want: usize,
) -> Result<Option<RoundOutcome>> {
    let config = ctx.config;
    let candidates = state.acquired.candidates();
    if candidates.is_empty() {
        return Ok(None);
    }
    state.round += 1;
    let q = state.round;
    let scene = &ctx.scene;
    let draw = ctx.channel(q);
    let selector = if protocol == Protocol::Oracle { Selector::Oracle } else { config.selector };
    let select = |n: usize| match selector {
        Selector::Random => {
            // prefix of one shuffle per round, so larger requests extend smaller ones
            let mut r = rng::stream(config.seed, &[tag::REQUEST, ctx.run as u64, q as u64, protocol.stream_id()]);
            let mut sel = selection::select_random(&candidates, candidates.len(), &mut r);
            sel.ids.truncate(n);
            sel.exhausted = n > candidates.len();
            sel
        }
        Selector::Magnitude => selection::select_magnitude(state.estimate.v_hat.as_slice(), &candidates, n),
        Selector::Oracle => selection::select_oracle(scene.target.as_slice(), &candidates, n),
        Selector::CorrNorm => selection::select_corr_normalized(
            &state.estimate.s_hat,
            &scene.basis,
            &state.acquired.acquired(),
            &candidates,
            n,
        ),
    };
    let feasible = |k: &usize| draw.is_feasible(*k, config.link.omega);
    let mut selection = select(want);
    if protocol == Protocol::DasIdeal {
        // Without detection errors the AP keeps asking down its ranking until
        // `want` nodes answer; nodes below the power cutoff stay silent.
        loop {
            let answered = selection.ids.iter().filter(|k| feasible(k)).count();
            if answered >= want || selection.ids.len() >= candidates.len() {
                break;
            }
            selection = select(selection.ids.len() + want - answered);
        }
        selection.exhausted = selection.ids.iter().filter(|k| feasible(k)).count() < want;
    }
    let mut requested = selection.ids.clone();
    requested.sort_unstable();

    let (realized, md, fa) = match protocol {
        Protocol::DasIdeal => {
            let realized: Vec<usize> = requested.iter().copied().filter(|k| feasible(k)).collect();
            let md = requested.len() - realized.len();
            (realized, md, 0)
        }
        _ => {
            let mut noise = rng::stream(config.seed, &[tag::DOWNLINK, ctx.run as u64, q as u64]);
            let out = downlink::simulate_request(
                &requested,
                &candidates,
                &ctx.book,
                &draw,
                &config.link,
                config.mode,
                &mut noise,
            )?;
            let (md, fa) = (out.md_events.len(), out.fa_events.len());
            (out.realized, md, fa)
        }
    };

    let cra_success = realized.len() <= config.cra_capacity();
    let appended = if cra_success { realized.clone() } else { Vec::new() };
    state.absorb(scene, &appended, &config.solver)?;
    let mut record = state.record(requested.len(), realized.len(), md, fa, cra_success);
    state.score(scene, &mut record)?;
    Ok(Some(RoundOutcome { record, appended, exhausted: selection.exhausted, fallback: selection.fallback }))
}

/// Random round with a budget matched to a data-aided run: a uniform
/// `matched_count`-subset of the remaining candidates reports without errors.
pub fn run_rrs_round(
    state: &mut RoundState,
    ctx: &RunContext<'_>,
    matched_count: usize,
) -> Result<Option<RoundOutcome>> {
    let config = ctx.config;
    let candidates = state.acquired.candidates();
    if candidates.is_empty() {
        return Ok(None);
    }
    state.round += 1;
    let q = state.round;
    let mut r = rng::stream(config.seed, &[tag::RANDOM_SELECT, ctx.run as u64, q as u64]);
    let selection = selection::select_random(&candidates, matched_count, &mut r);
    let mut nodes = selection.ids;
    nodes.sort_unstable();
    state.absorb(&ctx.scene, &nodes, &config.solver)?;
    let mut record = state.record(nodes.len(), nodes.len(), 0, 0, true);
    state.score(&ctx.scene, &mut record)?;
    Ok(Some(RoundOutcome { record, appended: nodes, exhausted: selection.exhausted, fallback: false }))
}

struct Played {
    trace: RunTrace,
    /// Measurements appended in rounds `1..`.
    budgets: Vec<usize>,
}

fn play(
    ctx: &RunContext<'_>,
    protocol: Protocol,
    start: &(RoundState, RoundRecord),
    budgets: Option<&[usize]>,
) -> Result<Played> {
    let config = ctx.config;
    let (mut state, rec0) = start.clone();
    let mut flags = RunFlags {
        round0_shortfall: rec0.realized < rec0.requested,
        cra_failures: usize::from(!rec0.cra_success),
        unconverged: usize::from(!state.estimate.converged),
        ..RunFlags::default()
    };
    let mut rounds = vec![rec0];
    let mut appended = Vec::with_capacity(config.rounds);
    for q in 1..=config.rounds {
        let want = budgets.map_or(config.requested(), |b| b.get(q - 1).copied().unwrap_or(0));
        let outcome = match protocol {
            Protocol::Rrs => run_rrs_round(&mut state, ctx, want)?,
            _ => run_das_round(&mut state, ctx, protocol, want)?,
        };
        let Some(outcome) = outcome else {
            flags.exhausted = true;
            break;
        };
        flags.exhausted |= outcome.exhausted;
        flags.selector_fallback |= outcome.fallback;
        flags.cra_failures += usize::from(!outcome.record.cra_success);
        if !outcome.appended.is_empty() && !state.estimate.converged {
            flags.unconverged += 1;
        }
        appended.push(outcome.appended.len());
        rounds.push(outcome.record);
    }
    let trace = RunTrace { run: ctx.run, scene_seed: ctx.scene.seed, protocol, rounds, flags };
    Ok(Played { trace, budgets: appended })
}

fn run_downlink(config: &ProtocolConfig, run: usize) -> Result<RunTrace> {
    let book = signature_book(config, run)?;
    let key = [run as u64, 1];
    let mut chan = rng::stream(config.seed, &[tag::CHANNEL, key[0], key[1]]);
    let draw = downlink::draw_gains(config.num_nodes, &mut chan);
    let mut pick = rng::stream(config.seed, &[tag::REQUEST, key[0]]);
    let mut requested = index::sample(&mut pick, config.num_nodes, config.requested()).into_vec();
    requested.sort_unstable();
    let listeners: Vec<usize> = (0..config.num_nodes).collect();
    let mut noise = rng::stream(config.seed, &[tag::DOWNLINK, key[0], key[1]]);
    let out = downlink::simulate_request(&requested, &listeners, &book, &draw, &config.link, config.mode, &mut noise)?;
    let cra_success = out.realized.len() <= config.cra_capacity();
    let record = RoundRecord {
        round: 1,
        requested: requested.len(),
        realized: out.realized.len(),
        md: out.md_events.len(),
        fa: out.fa_events.len(),
        cra_success,
        acquired_total: if cra_success { out.realized.len() } else { 0 },
        sq_error: f64::NAN,
        coef_error: f64::NAN,
    };
    let flags = RunFlags { cra_failures: usize::from(!cra_success), ..RunFlags::default() };
    Ok(config
        .protocols
        .first()
        .map(|&protocol| RunTrace { run, scene_seed: 0, protocol, rounds: vec![record], flags })
        .expect("validated config has a protocol"))
}

/// Plays every configured protocol for one Monte-Carlo run.
///
/// `rrs` takes its per-round budget from the measurements appended by the
/// first of `das`, `das_ideal`, `oracle` in the config (a hidden `das` run
/// when none is configured). When `das` is configured, `das_ideal` collects
/// exactly as many measurements per round as `das` appended.
pub fn run_single(config: &ProtocolConfig, run: usize) -> Result<Vec<RunTrace>> {
    config.validate()?;
    if config.experiment == Experiment::Downlink {
        return Ok(vec![run_downlink(config, run)?]);
    }
    let ctx = RunContext::new(config, run)?;
    let start = run_round0(&ctx)?;
    let source = config.budget_source();
    let source_run = play(&ctx, source, &start, None)?;

    let mut out = Vec::with_capacity(config.protocols.len());
    for &protocol in &config.protocols {
        let played = if protocol == source {
            source_run.trace.clone()
        } else {
            let budgets = match protocol {
                Protocol::Rrs => Some(source_run.budgets.as_slice()),
                Protocol::DasIdeal if source == Protocol::Das => Some(source_run.budgets.as_slice()),
                _ => None,
            };
            play(&ctx, protocol, &start, budgets)?.trace
        };
        out.push(played);
    }
    Ok(out)
}

/// Runs all repetitions sequentially.
pub fn run_experiment(config: &ProtocolConfig) -> Result<Trace> {
    config.validate()?;
    let mut runs = Vec::with_capacity(config.runs * config.protocols.len());
    for run in 0..config.runs {
        runs.extend(run_single(config, run)?);
    }
    Ok(Trace { config: config.clone(), runs })
}
