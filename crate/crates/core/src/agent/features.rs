//! Augmented per-segment state: six local attributes followed by thirteen
//! network-wide descriptors shared by every segment in the same year.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::network::{NetworkState, Segment, HISTOGRAM_BINS, PQI_MAX};

pub const LOCAL_FEATURES: usize = 6;
pub const GLOBAL_FEATURES: usize = 3 + HISTOGRAM_BINS;
pub const FEATURE_DIM: usize = LOCAL_FEATURES + GLOBAL_FEATURES;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedState(pub [f64; FEATURE_DIM]);

impl AugmentedState {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn local(&self) -> &[f64] {
        &self.0[..LOCAL_FEATURES]
    }

    pub fn global(&self) -> &[f64] {
        &self.0[LOCAL_FEATURES..]
    }
}

/// Normalisers fixed per network so features stay comparable across years
/// and across reloads of a trained model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScales {
    pub max_area: f64,
    pub max_lambda: f64,
    pub max_recon_cost: f64,
}

impl FeatureScales {
    pub fn of(network: &NetworkState) -> Self {
        Self {
            max_area: network.max_area(),
            max_lambda: network.max_lambda(),
            max_recon_cost: network.costs.max_recon(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSummary {
    pub year: usize,
    pub horizon: usize,
    pub remaining_budget: f64,
    pub total_budget: f64,
    pub mean_los: f64,
    pub histogram: Vec<f64>,
}

impl NetworkSummary {
    pub fn of(state: &NetworkState) -> Result<Self> {
        Ok(Self {
            year: state.year,
            horizon: state.horizon,
            remaining_budget: state.remaining_budget().dollars(),
            total_budget: state.total_budget().dollars(),
            mean_los: state.los()?,
            histogram: state.condition_histogram(HISTOGRAM_BINS)?,
        })
    }

    pub fn global_block(&self) -> [f64; GLOBAL_FEATURES] {
        let mut g = [0.0; GLOBAL_FEATURES];
        g[0] = self.year as f64 / self.horizon as f64;
        g[1] = if self.total_budget > 0.0 {
            (self.remaining_budget / self.total_budget).clamp(0.0, 1.0)
        } else {
            0.0
        };
        g[2] = self.mean_los / PQI_MAX;
        g[3..].copy_from_slice(&self.histogram);
        g
    }
}

fn ratio(x: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        x / scale
    } else {
        0.0
    }
}

fn local_block(segment: &Segment, scales: &FeatureScales) -> [f64; LOCAL_FEATURES] {
    [
        segment.pqi / PQI_MAX,
        ratio(segment.area, scales.max_area),
        ratio(segment.lambda, scales.max_lambda),
        segment.k,
        ratio(segment.costs.rehab, scales.max_recon_cost),
        ratio(segment.costs.recon, scales.max_recon_cost),
    ]
}

pub fn build_state(
    segment: &Segment,
    summary: &NetworkSummary,
    scales: &FeatureScales,
) -> AugmentedState {
    assemble(&local_block(segment, scales), &summary.global_block())
}

fn assemble(local: &[f64; LOCAL_FEATURES], global: &[f64; GLOBAL_FEATURES]) -> AugmentedState {
    let mut v = [0.0; FEATURE_DIM];
    v[..LOCAL_FEATURES].copy_from_slice(local);
    v[LOCAL_FEATURES..].copy_from_slice(global);
    AugmentedState(v)
}

/// Feature matrix for every segment, row-major `n × FEATURE_DIM`.
pub fn feature_matrix(state: &NetworkState, scales: &FeatureScales) -> Result<Vec<f64>> {
    let global = NetworkSummary::of(state)?.global_block();
    let mut out = Vec::with_capacity(state.len() * FEATURE_DIM);
    for s in &state.segments {
        out.extend_from_slice(&local_block(s, scales));
        out.extend_from_slice(&global);
    }
    Ok(out)
}
