//! The two-type competition automaton.
//!
//! Yellow spreads with parameter `p` and blue with `q >= p`. Each step every
//! active site tries once to infect each empty neighbour and then becomes
//! passive. A site reached by both colours in the same step turns green and
//! carries both colours from then on.
//!
//! Two constructions are provided:
//!
//! - [`step_sampled`] draws each site's next state from its local transition
//!   law ([`local_transition_distribution`]), i.e. the product kernel of the
//!   cellular automaton;
//! - [`step_field`] evolves the active and total sets of each colour through
//!   the random boundary operator of one fixed edge field, which couples
//!   every choice of parameters on the same randomness.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BoxDomain, EdgeWeights};

const YELLOW: u8 = 1;
const BLUE: u8 = 2;
const ACTIVE: u8 = 4;

/// Sentinel entry time for sites never reached by a colour.
pub const NEVER: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum SiteState {
    Empty = 0,
    YActive = 1,
    BActive = 2,
    GActive = 3,
    YPassive = 4,
    BPassive = 5,
    GPassive = 6,
}

impl SiteState {
    pub const ALL: [SiteState; 7] = [
        SiteState::Empty,
        SiteState::YActive,
        SiteState::BActive,
        SiteState::GActive,
        SiteState::YPassive,
        SiteState::BPassive,
        SiteState::GPassive,
    ];

    /// Palette index, equal to the discriminant.
    #[inline]
    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<SiteState> {
        SiteState::ALL.get(i as usize).copied()
    }

    #[inline]
    pub fn is_active(self) -> bool {
        matches!(self, SiteState::YActive | SiteState::BActive | SiteState::GActive)
    }

    #[inline]
    pub fn is_passive(self) -> bool {
        matches!(self, SiteState::YPassive | SiteState::BPassive | SiteState::GPassive)
    }

    /// Carries the yellow colour (yellow or green).
    #[inline]
    pub fn has_yellow(self) -> bool {
        self.color_bits() & YELLOW != 0
    }

    /// Carries the blue colour (blue or green).
    #[inline]
    pub fn has_blue(self) -> bool {
        self.color_bits() & BLUE != 0
    }

    /// Passive counterpart of an active state; other states are unchanged.
    pub fn passive(self) -> SiteState {
        match self {
            SiteState::YActive => SiteState::YPassive,
            SiteState::BActive => SiteState::BPassive,
            SiteState::GActive => SiteState::GPassive,
            s => s,
        }
    }

    fn color_bits(self) -> u8 {
        match self {
            SiteState::Empty => 0,
            SiteState::YActive | SiteState::YPassive => YELLOW,
            SiteState::BActive | SiteState::BPassive => BLUE,
            SiteState::GActive | SiteState::GPassive => YELLOW | BLUE,
        }
    }

    fn from_bits(bits: u8) -> SiteState {
        match (bits & (YELLOW | BLUE), bits & ACTIVE != 0) {
            (0, _) => SiteState::Empty,
            (YELLOW, true) => SiteState::YActive,
            (BLUE, true) => SiteState::BActive,
            (_, true) => SiteState::GActive,
            (YELLOW, false) => SiteState::YPassive,
            (BLUE, false) => SiteState::BPassive,
            (_, false) => SiteState::GPassive,
        }
    }
}

/// A site-state map over a box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    domain: BoxDomain,
    states: Vec<SiteState>,
    time: u32,
}

impl Configuration {
    pub fn empty(domain: BoxDomain) -> Self {
        let states = vec![SiteState::Empty; domain.num_sites()];
        Configuration { domain, states, time: 0 }
    }

    /// All sites empty except an active yellow `s1` and an active blue `s2`.
    pub fn two_sources(domain: BoxDomain, params: &CompetitionParams) -> Result<Self> {
        let mut c = Configuration::empty(domain);
        c.set(&params.s1, SiteState::YActive)?;
        c.set(&params.s2, SiteState::BActive)?;
        Ok(c)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn time(&self) -> u32 {
        self.time
    }

    pub fn states(&self) -> &[SiteState] {
        &self.states
    }

    #[inline]
    pub fn state(&self, idx: usize) -> SiteState {
        self.states[idx]
    }

    pub fn get(&self, x: &[i64]) -> Result<SiteState> {
        Ok(self.states[self.domain.index(x)?])
    }

    pub fn set(&mut self, x: &[i64], s: SiteState) -> Result<()> {
        let idx = self.domain.index(x)?;
        self.states[idx] = s;
        Ok(())
    }
}

/// Infection parameters and the two source sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompetitionParams {
    /// Yellow (weaker) parameter.
    pub p: f64,
    /// Blue (stronger) parameter.
    pub q: f64,
    pub s1: Vec<i64>,
    pub s2: Vec<i64>,
}

impl CompetitionParams {
    pub fn new(p: f64, q: f64, s1: Vec<i64>, s2: Vec<i64>) -> Result<Self> {
        let params = CompetitionParams { p, q, s1, s2 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.p && self.p <= self.q && self.q <= 1.0) {
            return Err(Error::arg(format!("need 0 <= p <= q <= 1, got p = {}, q = {}", self.p, self.q)));
        }
        if self.s1.len() != self.s2.len() || self.s1.is_empty() {
            return Err(Error::arg("sources must have the same positive dimension"));
        }
        if self.s1 == self.s2 {
            return Err(Error::arg("sources must be distinct"));
        }
        Ok(())
    }

    /// Largest `|s|_inf` over the two sources.
    pub fn source_radius(&self) -> i64 {
        self.s1.iter().chain(&self.s2).map(|c| c.abs()).max().unwrap_or(0)
    }
}

/// Law of a site's next state, indexed by [`SiteState::index`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionLaw(pub [f64; 7]);

impl TransitionLaw {
    fn point(s: SiteState) -> Self {
        let mut probs = [0.0; 7];
        probs[s.index() as usize] = 1.0;
        TransitionLaw(probs)
    }

    #[inline]
    pub fn prob(&self, s: SiteState) -> f64 {
        self.0[s.index() as usize]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// States with positive probability.
    pub fn support(&self) -> impl Iterator<Item = (SiteState, f64)> + '_ {
        SiteState::ALL.iter().map(|&s| (s, self.prob(s))).filter(|&(_, pr)| pr > 0.0)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SiteState {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = SiteState::Empty;
        for (s, pr) in self.support() {
            acc += pr;
            last = s;
            if u < acc {
                return s;
            }
        }
        last
    }
}

/// Next-state law of site `x` in configuration `config`.
pub fn local_transition_distribution(
    config: &Configuration,
    x: &[i64],
    params: &CompetitionParams,
) -> Result<TransitionLaw> {
    let idx = config.domain.index(x)?;
    Ok(local_law(config, idx, params.p, params.q))
}

fn local_law(config: &Configuration, idx: usize, p: f64, q: f64) -> TransitionLaw {
    let state = config.states[idx];
    if state != SiteState::Empty {
        return TransitionLaw::point(state.passive());
    }
    let (mut ny, mut nb, mut ng) = (0i32, 0i32, 0i32);
    for (nb_idx, _) in config.domain.neighbors(idx) {
        match config.states[nb_idx] {
            SiteState::YActive => ny += 1,
            SiteState::BActive => nb += 1,
            SiteState::GActive => ng += 1,
            _ => {}
        }
    }
    if ny + nb + ng == 0 {
        return TransitionLaw::point(SiteState::Empty);
    }
    let (fy, fb) = (1.0 - p, 1.0 - q);
    let stay = fb.powi(nb + ng) * fy.powi(ny);
    let yellow = fb.powi(nb + ng) * (1.0 - fy.powi(ny));
    // blue only: no yellow or green edge is p-open, and some blue edge is
    // q-open or, failing that, some green edge is q-open
    let blue = (1.0 - fb.powi(nb)) * fy.powi(ny + ng)
        + fb.powi(nb) * fy.powi(ny) * (fy.powi(ng) - fb.powi(ng));
    let green = 1.0 - stay - yellow - blue;
    let mut probs = [0.0; 7];
    probs[SiteState::Empty as usize] = stay;
    probs[SiteState::YActive as usize] = yellow;
    probs[SiteState::BActive as usize] = blue;
    probs[SiteState::GActive as usize] = green.max(0.0);
    TransitionLaw(probs)
}

/// One step of the automaton: every site draws its next state independently
/// from its local law.
pub fn step_sampled<R: Rng + ?Sized>(
    config: &Configuration,
    params: &CompetitionParams,
    rng: &mut R,
) -> Configuration {
    let states = (0..config.states.len())
        .map(|idx| local_law(config, idx, params.p, params.q).sample(rng))
        .collect();
    Configuration { domain: config.domain.clone(), states, time: config.time + 1 }
}

/// Active and total colour sets of the field-driven construction.
///
/// Per site a byte stores the colours the site carries (its membership in the
/// total yellow and blue sets) and whether it is currently active.
#[derive(Clone, Debug)]
pub struct CompetitionState {
    domain: BoxDomain,
    bits: Vec<u8>,
    active_y: Vec<usize>,
    active_b: Vec<usize>,
    time: u32,
    pending: Vec<u8>,
    #[cfg(debug_assertions)]
    audit: EdgeAudit,
}

/// Counts edges examined in more than one step.
#[cfg(debug_assertions)]
#[derive(Clone, Debug)]
struct EdgeAudit {
    step_of: Vec<u32>,
    repeats: u64,
}

impl PartialEq for CompetitionState {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain
            && self.bits == other.bits
            && self.active_y == other.active_y
            && self.active_b == other.active_b
            && self.time == other.time
    }
}

impl CompetitionState {
    /// Yellow source at `s1`, blue source at `s2`, everything else empty.
    pub fn from_sources(domain: BoxDomain, params: &CompetitionParams) -> Result<Self> {
        params.validate()?;
        let c = Configuration::two_sources(domain, params)?;
        Ok(Self::from_configuration(&c))
    }

    pub fn from_configuration(config: &Configuration) -> Self {
        let domain = config.domain.clone();
        let mut bits = vec![0u8; domain.num_sites()];
        let mut active_y = Vec::new();
        let mut active_b = Vec::new();
        for (idx, &s) in config.states.iter().enumerate() {
            bits[idx] = s.color_bits() | if s.is_active() { ACTIVE } else { 0 };
            if s.is_active() && s.has_yellow() {
                active_y.push(idx);
            }
            if s.is_active() && s.has_blue() {
                active_b.push(idx);
            }
        }
        let pending = vec![0; domain.num_sites()];
        CompetitionState {
            #[cfg(debug_assertions)]
            audit: EdgeAudit { step_of: vec![0; domain.num_edge_slots()], repeats: 0 },
            domain,
            bits,
            active_y,
            active_b,
            time: config.time,
            pending,
        }
    }

    pub fn to_configuration(&self) -> Configuration {
        let states = self.bits.iter().map(|&b| SiteState::from_bits(b)).collect();
        Configuration { domain: self.domain.clone(), states, time: self.time }
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn time(&self) -> u32 {
        self.time
    }

    #[inline]
    pub fn state(&self, idx: usize) -> SiteState {
        SiteState::from_bits(self.bits[idx])
    }

    /// Active sites carrying yellow, sorted by index.
    pub fn active_yellow(&self) -> &[usize] {
        &self.active_y
    }

    /// Active sites carrying blue, sorted by index.
    pub fn active_blue(&self) -> &[usize] {
        &self.active_b
    }

    #[inline]
    pub fn has_yellow(&self, idx: usize) -> bool {
        self.bits[idx] & YELLOW != 0
    }

    #[inline]
    pub fn has_blue(&self, idx: usize) -> bool {
        self.bits[idx] & BLUE != 0
    }

    /// Sites ever coloured yellow (yellow or green).
    pub fn total_yellow(&self) -> BTreeSet<usize> {
        (0..self.bits.len()).filter(|&i| self.has_yellow(i)).collect()
    }

    /// Sites ever coloured blue (blue or green).
    pub fn total_blue(&self) -> BTreeSet<usize> {
        (0..self.bits.len()).filter(|&i| self.has_blue(i)).collect()
    }

    pub fn count_yellow(&self) -> usize {
        self.bits.iter().filter(|&&b| b & YELLOW != 0).count()
    }

    pub fn count_blue(&self) -> usize {
        self.bits.iter().filter(|&&b| b & BLUE != 0).count()
    }

    pub fn count_green(&self) -> usize {
        self.bits.iter().filter(|&&b| b & (YELLOW | BLUE) == YELLOW | BLUE).count()
    }

    /// Edges examined in two different steps so far. Only tracked in debug
    /// builds; the field construction guarantees zero.
    pub fn repeated_edge_examinations(&self) -> Option<u64> {
        #[cfg(debug_assertions)]
        {
            Some(self.audit.repeats)
        }
        #[cfg(not(debug_assertions))]
        {
            None
        }
    }

    /// Advances one step on `field`:
    /// new yellow actives are `d_p(A_y) \ (B_y u B_b)`, new blue actives
    /// `d_q(A_b) \ (B_y u B_b)`, and both are added to the total sets.
    pub fn advance<W: EdgeWeights + ?Sized>(&mut self, field: &W, p: f64, q: f64) {
        debug_assert_eq!(field.domain(), &self.domain);
        let step = self.time + 1;
        let mut new_y = Vec::new();
        let mut new_b = Vec::new();
        for (actives, param, color, out) in
            [(&self.active_y, p, YELLOW, &mut new_y), (&self.active_b, q, BLUE, &mut new_b)]
        {
            for &x in actives {
                for (y, slot) in self.domain.neighbors(x) {
                    if self.bits[y] & (YELLOW | BLUE) != 0 {
                        continue;
                    }
                    #[cfg(debug_assertions)]
                    {
                        let seen = &mut self.audit.step_of[slot];
                        if *seen == 0 {
                            *seen = step;
                        } else if *seen != step {
                            self.audit.repeats += 1;
                        }
                    }
                    if self.pending[y] & color == 0 && field.is_open(slot, param) {
                        self.pending[y] |= color;
                        out.push(y);
                    }
                }
            }
        }
        for &x in self.active_y.iter().chain(&self.active_b) {
            self.bits[x] &= !ACTIVE;
        }
        for &y in new_y.iter().chain(&new_b) {
            self.bits[y] |= self.pending[y] | ACTIVE;
        }
        for &y in new_y.iter().chain(&new_b) {
            self.pending[y] = 0;
        }
        new_y.sort_unstable();
        new_b.sort_unstable();
        self.active_y = new_y;
        self.active_b = new_b;
        self.time = step;
    }
}

/// One step of the field-driven construction, returning the new state.
pub fn step_field<W: EdgeWeights + ?Sized>(
    state: &CompetitionState,
    field: &W,
    params: &CompetitionParams,
) -> CompetitionState {
    let mut next = state.clone();
    next.advance(field, params.p, params.q);
    next
}

/// Outcome of a finite-horizon competition run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub params: CompetitionParams,
    pub horizon: u32,
    pub state: CompetitionState,
    /// Entry time into the total yellow set per site, [`NEVER`] if not reached.
    pub entry_y: Vec<u32>,
    /// Entry time into the total blue set per site, [`NEVER`] if not reached.
    pub entry_b: Vec<u32>,
    /// Yellow still has an active site at the horizon.
    pub survived_y: bool,
    /// Blue still has an active site at the horizon.
    pub survived_b: bool,
    /// The horizon exceeded the exact-simulation bound.
    pub censored: bool,
}

impl RunSummary {
    pub fn coexisted(&self) -> bool {
        self.survived_y && self.survived_b
    }

    pub fn record(&self, seed: u64) -> RunRecord {
        RunRecord {
            p: self.params.p,
            q: self.params.q,
            s1: self.params.s1.clone(),
            s2: self.params.s2.clone(),
            horizon: self.horizon,
            seed,
            survived_y: self.survived_y,
            survived_b: self.survived_b,
            colored_y: self.state.count_yellow(),
            colored_b: self.state.count_blue(),
            green_count: self.state.count_green(),
        }
    }
}

/// JSON form of a run summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub p: f64,
    pub q: f64,
    pub s1: Vec<i64>,
    pub s2: Vec<i64>,
    #[serde(rename = "T")]
    pub horizon: u32,
    pub seed: u64,
    pub survived_y: bool,
    pub survived_b: bool,
    pub colored_y: usize,
    pub colored_b: usize,
    pub green_count: usize,
}

/// Runs the field-driven competition for `horizon` steps from the
/// two-source configuration.
///
/// A front moves at most one site per step, so the run is exact for the
/// infinite lattice while `horizon <= L - max(|s1|_inf, |s2|_inf)`. Longer
/// horizons are rejected unless `allow_censored` is set.
pub fn run_competition<W: EdgeWeights + ?Sized>(
    params: &CompetitionParams,
    field: &W,
    horizon: u32,
    allow_censored: bool,
) -> Result<RunSummary> {
    params.validate()?;
    let domain = field.domain();
    let slack = domain.half_width() as i64 - params.source_radius();
    let censored = horizon as i64 > slack;
    if censored && !allow_censored {
        return Err(Error::arg(format!(
            "horizon {horizon} exceeds the exact bound {slack} for this box and sources"
        )));
    }
    let mut state = CompetitionState::from_sources(domain.clone(), params)?;
    let mut entry_y = vec![NEVER; domain.num_sites()];
    let mut entry_b = vec![NEVER; domain.num_sites()];
    for &i in state.active_yellow() {
        entry_y[i] = 0;
    }
    for &i in state.active_blue() {
        entry_b[i] = 0;
    }
    for t in 1..=horizon {
        if state.active_yellow().is_empty() && state.active_blue().is_empty() {
            state.time = horizon;
            break;
        }
        state.advance(field, params.p, params.q);
        for &i in state.active_yellow() {
            entry_y[i] = t;
        }
        for &i in state.active_blue() {
            entry_b[i] = t;
        }
    }
    Ok(RunSummary {
        params: params.clone(),
        horizon,
        survived_y: !state.active_yellow().is_empty(),
        survived_b: !state.active_blue().is_empty(),
        state,
        entry_y,
        entry_b,
        censored,
    })
}
