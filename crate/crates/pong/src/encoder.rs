//! Population code of the world state on 133 input nodes.
//!
//! | nodes     | group                                   |
//! |-----------|-----------------------------------------|
//! | 0..30     | ball x, 30 equal bins                   |
//! | 30..60    | ball y, 30 equal bins                   |
//! | 60..69    | ball vx, 9 equal-occupancy bins         |
//! | 69..78    | ball vy, 9 equal-occupancy bins         |
//! | 78..108   | racket y, 30 equal bins                 |
//! | 108..133  | ball in the 3 x 3 cm field at the racket, 5 x 5 cells |
//!
//! Every active node spikes at 300 Hz through an integer phase accumulator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{reset_world, step_world, WorldState, HALF_SIZE};

pub const N_POS_BINS: usize = 30;
pub const N_VEL_BINS: usize = 9;
pub const CLOSE_GRID: usize = 5;
/// Side of the close-zone field, cm.
pub const CLOSE_SIZE: f64 = 3.0;

pub const X_OFFSET: usize = 0;
pub const Y_OFFSET: usize = X_OFFSET + N_POS_BINS;
pub const VX_OFFSET: usize = Y_OFFSET + N_POS_BINS;
pub const VY_OFFSET: usize = VX_OFFSET + N_VEL_BINS;
pub const RACKET_OFFSET: usize = VY_OFFSET + N_VEL_BINS;
pub const CLOSE_OFFSET: usize = RACKET_OFFSET + N_POS_BINS;
pub const N_NODES: usize = CLOSE_OFFSET + CLOSE_GRID * CLOSE_GRID;

/// Accumulator increment per tick and firing level: 3/10 of a spike per tick.
const PHASE_STEP: u8 = 3;
const PHASE_FIRE: u8 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Interior edges of the vx bins, ascending.
    pub vx_edges: Vec<f64>,
    pub vy_edges: Vec<f64>,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        for edges in [&self.vx_edges, &self.vy_edges] {
            if edges.len() != N_VEL_BINS - 1 {
                return Err(Error::Calibration(format!(
                    "expected {} velocity edges, got {}",
                    N_VEL_BINS - 1,
                    edges.len()
                )));
            }
            if edges
                .windows(2)
                .any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt()))
            {
                return Err(Error::Calibration("velocity edges not ascending".into()));
            }
        }
        Ok(())
    }

    pub fn active_nodes(&self, s: &WorldState) -> ActiveNodes {
        ActiveNodes {
            x: pos_bin(s.ball_x) as u8,
            y: pos_bin(s.ball_y) as u8,
            vx: vel_bin(&self.vx_edges, s.ball_vx) as u8,
            vy: vel_bin(&self.vy_edges, s.ball_vy) as u8,
            racket: pos_bin(s.racket_y) as u8,
            close: close_cell(s).map(|c| c as u8),
        }
    }
}

/// Equal-width bin of a coordinate in `[-5, 5]`.
pub fn pos_bin(v: f64) -> usize {
    let w = 2.0 * HALF_SIZE / N_POS_BINS as f64;
    (((v + HALF_SIZE) / w).floor().max(0.0) as usize).min(N_POS_BINS - 1)
}

pub fn pos_bin_center(bin: usize) -> f64 {
    let w = 2.0 * HALF_SIZE / N_POS_BINS as f64;
    -HALF_SIZE + (bin as f64 + 0.5) * w
}

pub fn vel_bin(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e <= v)
}

/// Cell of the close-zone field holding the ball, row-major from the
/// field's bottom-left corner.
pub fn close_cell(s: &WorldState) -> Option<usize> {
    let dx = s.ball_x + HALF_SIZE;
    let dy = s.ball_y - (s.racket_y - CLOSE_SIZE / 2.0);
    if !(0.0..=CLOSE_SIZE).contains(&dx) || !(0.0..=CLOSE_SIZE).contains(&dy) {
        return None;
    }
    let cell = CLOSE_SIZE / CLOSE_GRID as f64;
    let col = ((dx / cell) as usize).min(CLOSE_GRID - 1);
    let row = ((dy / cell) as usize).min(CLOSE_GRID - 1);
    Some(row * CLOSE_GRID + col)
}

/// The one active node of each group, as indices within the group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActiveNodes {
    pub x: u8,
    pub y: u8,
    pub vx: u8,
    pub vy: u8,
    pub racket: u8,
    pub close: Option<u8>,
}

impl ActiveNodes {
    /// Global input-node indices, at most six.
    pub fn nodes(&self) -> impl Iterator<Item = usize> {
        [
            Some(X_OFFSET + self.x as usize),
            Some(Y_OFFSET + self.y as usize),
            Some(VX_OFFSET + self.vx as usize),
            Some(VY_OFFSET + self.vy as usize),
            Some(RACKET_OFFSET + self.racket as usize),
            self.close.map(|c| CLOSE_OFFSET + c as usize),
        ]
        .into_iter()
        .flatten()
    }
}

/// Group of an input node and its index within the group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeGroup {
    X(usize),
    Y(usize),
    Vx(usize),
    Vy(usize),
    Racket(usize),
    Close(usize),
}

pub fn node_group(node: usize) -> Option<NodeGroup> {
    Some(match node {
        n if n < Y_OFFSET => NodeGroup::X(n - X_OFFSET),
        n if n < VX_OFFSET => NodeGroup::Y(n - Y_OFFSET),
        n if n < VY_OFFSET => NodeGroup::Vx(n - VX_OFFSET),
        n if n < RACKET_OFFSET => NodeGroup::Vy(n - VY_OFFSET),
        n if n < CLOSE_OFFSET => NodeGroup::Racket(n - RACKET_OFFSET),
        n if n < N_NODES => NodeGroup::Close(n - CLOSE_OFFSET),
        _ => return None,
    })
}

/// Per-node phase accumulators turning active nodes into 300 Hz spike trains.
#[derive(Clone, Debug)]
pub struct PhaseEncoder {
    phase: [u8; N_NODES],
}

impl Default for PhaseEncoder {
    fn default() -> Self {
        PhaseEncoder {
            phase: [0; N_NODES],
        }
    }
}

impl PhaseEncoder {
    pub fn reset(&mut self) {
        self.phase = [0; N_NODES];
    }

    /// Appends this tick's spiking nodes to `out`, in ascending order.
    pub fn step(&mut self, active: &ActiveNodes, out: &mut Vec<u16>) {
        for n in active.nodes() {
            let p = &mut self.phase[n];
            *p += PHASE_STEP;
            if *p >= PHASE_FIRE {
                *p -= PHASE_FIRE;
                out.push(n as u16);
            }
        }
    }
}

/// Spike raster of consecutive ticks, phases starting from zero.
pub fn encode_interval(active: &[ActiveNodes]) -> Vec<Vec<u16>> {
    let mut enc = PhaseEncoder::default();
    active
        .iter()
        .map(|a| {
            let mut v = Vec::new();
            enc.step(a, &mut v);
            v
        })
        .collect()
}

/// Ball velocities seen over a free-running simulation, one per tick.
pub fn sample_velocities<R: Rng>(ticks: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let mut vx = Vec::with_capacity(ticks);
    let mut vy = Vec::with_capacity(ticks);
    let mut s = reset_world(rng);
    for _ in 0..ticks {
        vx.push(s.ball_vx);
        vy.push(s.ball_vy);
        let (next, event) = step_world(&s);
        s = if event.is_some() {
            reset_world(rng)
        } else {
            next
        };
    }
    (vx, vy)
}

/// Interior edges splitting `samples` into `bins` equally populated bins.
pub fn quantile_edges(samples: &mut [f64], bins: usize) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Calibration("no velocity samples".into()));
    }
    samples.sort_by(f64::total_cmp);
    Ok((1..bins)
        .map(|k| samples[(k * samples.len() / bins).min(samples.len() - 1)])
        .collect())
}

/// Equal-occupancy velocity bins from `ticks` ticks of free running.
pub fn calibrate_velocity_bins<R: Rng>(ticks: usize, rng: &mut R) -> Result<EncoderConfig> {
    let (mut vx, mut vy) = sample_velocities(ticks, rng);
    Ok(EncoderConfig {
        vx_edges: quantile_edges(&mut vx, N_VEL_BINS)?,
        vy_edges: quantile_edges(&mut vy, N_VEL_BINS)?,
    })
}

/// Fraction of `samples` in each bin.
pub fn bin_occupancy(edges: &[f64], samples: &[f64]) -> Vec<f64> {
    let mut counts = vec![0usize; edges.len() + 1];
    for &v in samples {
        counts[vel_bin(edges, v)] += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 / samples.len().max(1) as f64)
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
struct Mean {
    sum: f64,
    n: u64,
}

impl Mean {
    fn add(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }

    fn get(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// Mean coordinate behind each active node, measured on a calibration run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMeans {
    x: Vec<Mean>,
    y: Vec<Mean>,
    vx: Vec<Mean>,
    vy: Vec<Mean>,
    racket: Vec<Mean>,
}

impl ConditionalMeans {
    pub fn new() -> Self {
        ConditionalMeans {
            x: vec![Mean::default(); N_POS_BINS],
            y: vec![Mean::default(); N_POS_BINS],
            vx: vec![Mean::default(); N_VEL_BINS],
            vy: vec![Mean::default(); N_VEL_BINS],
            racket: vec![Mean::default(); N_POS_BINS],
        }
    }

    pub fn add(&mut self, a: &ActiveNodes, s: &WorldState) {
        self.x[a.x as usize].add(s.ball_x);
        self.y[a.y as usize].add(s.ball_y);
        self.vx[a.vx as usize].add(s.ball_vx);
        self.vy[a.vy as usize].add(s.ball_vy);
        self.racket[a.racket as usize].add(s.racket_y);
    }

    /// Accumulates `ticks` ticks of free running.
    pub fn measure<R: Rng>(encoder: &EncoderConfig, ticks: usize, rng: &mut R) -> Self {
        let mut m = ConditionalMeans::new();
        let mut s = reset_world(rng);
        for _ in 0..ticks {
            m.add(&encoder.active_nodes(&s), &s);
            let (next, event) = step_world(&s);
            s = if event.is_some() {
                reset_world(rng)
            } else {
                next
            };
        }
        m
    }

    /// Expected world state given the active bins; unseen bins fall back to
    /// their centers (velocity bins to the middle of their edges).
    pub fn reconstruct(&self, encoder: &EncoderConfig, a: &ActiveNodes) -> WorldState {
        let vel_mid = |edges: &[f64], b: usize| {
            let lo = if b == 0 { edges[0] } else { edges[b - 1] };
            let hi = if b >= edges.len() {
                edges[edges.len() - 1]
            } else {
                edges[b]
            };
            (lo + hi) / 2.0
        };
        let pick = |m: &[Mean], b: u8, fallback: f64| m[b as usize].get().unwrap_or(fallback);
        WorldState {
            ball_x: pick(&self.x, a.x, pos_bin_center(a.x as usize)),
            ball_y: pick(&self.y, a.y, pos_bin_center(a.y as usize)),
            ball_vx: pick(&self.vx, a.vx, vel_mid(&encoder.vx_edges, a.vx as usize)),
            ball_vy: pick(&self.vy, a.vy, vel_mid(&encoder.vy_edges, a.vy as usize)),
            racket_y: pick(&self.racket, a.racket, pos_bin_center(a.racket as usize)),
        }
    }
}

impl Default for ConditionalMeans {
    fn default() -> Self {
        Self::new()
    }
}

/// Active bins recovered from an interval's raster: the last spiking node of
/// each group. Groups without spikes are `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DecodedBins {
    pub x: Option<u8>,
    pub y: Option<u8>,
    pub vx: Option<u8>,
    pub vy: Option<u8>,
    pub racket: Option<u8>,
    pub close: Option<u8>,
}

impl DecodedBins {
    pub fn from_raster(raster: &[Vec<u16>]) -> Self {
        let mut d = DecodedBins::default();
        for tick in raster {
            for &n in tick {
                match node_group(n as usize) {
                    Some(NodeGroup::X(i)) => d.x = Some(i as u8),
                    Some(NodeGroup::Y(i)) => d.y = Some(i as u8),
                    Some(NodeGroup::Vx(i)) => d.vx = Some(i as u8),
                    Some(NodeGroup::Vy(i)) => d.vy = Some(i as u8),
                    Some(NodeGroup::Racket(i)) => d.racket = Some(i as u8),
                    Some(NodeGroup::Close(i)) => d.close = Some(i as u8),
                    None => {}
                }
            }
        }
        d
    }

    /// Fills groups without spikes with their middle bin.
    pub fn complete(&self) -> ActiveNodes {
        ActiveNodes {
            x: self.x.unwrap_or(N_POS_BINS as u8 / 2),
            y: self.y.unwrap_or(N_POS_BINS as u8 / 2),
            vx: self.vx.unwrap_or(N_VEL_BINS as u8 / 2),
            vy: self.vy.unwrap_or(N_VEL_BINS as u8 / 2),
            racket: self.racket.unwrap_or(N_POS_BINS as u8 / 2),
            close: self.close,
        }
    }
}
