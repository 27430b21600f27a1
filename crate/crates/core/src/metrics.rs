//! Binary mask evaluation: confusion counts, accuracy, sensitivity and the
//! rank (Mann-Whitney) estimate of ROC AUC.

use crate::error::{Error, Result};
use crate::image::Image;

/// Default binarization threshold: samples `>= 0.5` are positive.
pub const DEFAULT_MASK_THRESHOLD: f64 = 0.5;

/// Reported figures for the mask segmentation comparison, shipped for
/// reference only. They cannot be reproduced here (no data, no model).
pub mod reference {
    pub const UNET_ACC: f64 = 0.9645;
    pub const RES_UNET_ACC: f64 = 0.9649;
    pub const PROPOSED_ACC: f64 = 0.9669;
    pub const UNET_AUC: f64 = 0.8142;
    pub const RES_UNET_AUC: f64 = 0.8444;
    pub const PROPOSED_AUC: f64 = 0.8477;
    pub const UNET_SEN: f64 = 0.9879;
    pub const RES_UNET_SEN: f64 = 0.9890;
    pub const PROPOSED_SEN: f64 = 0.9893;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

fn check_shape(a: &Image, b: &Image) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::contract(format!(
            "mask shapes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

pub fn confusion_with_threshold(pred: &Image, truth: &Image, threshold: f64) -> Result<ConfusionCounts> {
    check_shape(pred, truth)?;
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.data().iter().zip(truth.data()) {
        match (p >= threshold, t >= threshold) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

pub fn confusion(pred: &Image, truth: &Image) -> Result<ConfusionCounts> {
    confusion_with_threshold(pred, truth, DEFAULT_MASK_THRESHOLD)
}

pub fn accuracy(c: &ConfusionCounts) -> Result<f64> {
    let total = c.total();
    if total == 0 {
        return Err(Error::UndefinedMetric("accuracy of an empty comparison".into()));
    }
    Ok((c.tp + c.tn) as f64 / total as f64)
}

pub fn sensitivity(c: &ConfusionCounts) -> Result<f64> {
    let positives = c.tp + c.fn_;
    if positives == 0 {
        return Err(Error::UndefinedMetric(
            "sensitivity without positive pixels".into(),
        ));
    }
    Ok(c.tp as f64 / positives as f64)
}

/// Probability that a positive pixel outscores a negative one, ties
/// counting one half, computed from average ranks.
pub fn auc_with_threshold(scores: &Image, truth: &Image, threshold: f64) -> Result<f64> {
    check_shape(scores, truth)?;
    let mut ranked: Vec<(f64, bool)> = scores
        .data()
        .iter()
        .zip(truth.data())
        .map(|(&s, &t)| (s, t >= threshold))
        .collect();
    let positives = ranked.iter().filter(|r| r.1).count() as u64;
    let negatives = ranked.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs both positive and negative pixels".into(),
        ));
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Ranks are 1-based; doubled so tied groups get integer average ranks.
    let mut doubled_rank_sum: u64 = 0;
    let mut start = 0;
    while start < ranked.len() {
        let mut end = start + 1;
        while end < ranked.len() && ranked[end].0 == ranked[start].0 {
            end += 1;
        }
        let doubled_avg = (start + 1 + end) as u64;
        let pos_in_group = ranked[start..end].iter().filter(|r| r.1).count() as u64;
        doubled_rank_sum += doubled_avg * pos_in_group;
        start = end;
    }
    let doubled_u = doubled_rank_sum - positives * (positives + 1);
    Ok((doubled_u as f64 / 2.0) / (positives * negatives) as f64)
}

pub fn auc(scores: &Image, truth: &Image) -> Result<f64> {
    auc_with_threshold(scores, truth, DEFAULT_MASK_THRESHOLD)
}
