//! Serializable metric reports with stable key ordering.

use crate::metrics::InstanceBoundaryError;

#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct ReportFlags {
    pub whdr_degenerate: bool,
    pub r3_no_change: bool,
    pub alignment_degenerate: bool,
    pub normalization_degenerate: bool,
}

/// Per-image metric report. All depths are normalized to the working range
/// and scale-shift aligned to the ground truth before any metric runs, which
/// the `alignment` note records for downstream readers.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct MetricsReport {
    pub image: String,
    pub alignment: String,
    pub rmse: f64,
    pub whdr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mbe: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r3: Option<f64>,
    pub eps_acc: f64,
    pub eps_comp: f64,
    pub pairs_sampled: usize,
    pub instance_count: usize,
    pub boundary_pixels: usize,
    pub improved_pixels: usize,
    pub worsened_pixels: usize,
    pub per_instance: Vec<InstanceBoundaryError>,
    pub flags: ReportFlags,
}

impl MetricsReport {
    pub fn finite(&self) -> bool {
        self.rmse.is_finite()
            && self.whdr.is_finite()
            && self.mbe.is_none_or(|v| v.is_finite())
            && self.r3.is_none_or(|v| v.is_finite())
            && self.eps_acc.is_finite()
            && self.eps_comp.is_finite()
    }
}

/// Suite-level aggregate: arithmetic means over per-image reports, computed
/// with pairwise summation in fixed image order.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct AggregateReport {
    pub images: usize,
    pub rmse: f64,
    pub whdr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mbe: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r3: Option<f64>,
    pub eps_acc: f64,
    pub eps_comp: f64,
    pub per_image: Vec<MetricsReport>,
}

/// Pairwise (cascade) summation for deterministic, well-conditioned means.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise_sum(values) / values.len() as f64
}

pub fn aggregate_reports(per_image: Vec<MetricsReport>) -> AggregateReport {
    let collect = |f: &dyn Fn(&MetricsReport) -> f64| -> Vec<f64> {
        per_image.iter().map(f).collect()
    };
    let optional = |f: &dyn Fn(&MetricsReport) -> Option<f64>| -> Option<f64> {
        let vals: Vec<f64> = per_image.iter().filter_map(f).collect();
        if vals.is_empty() {
            None
        } else {
            Some(mean(&vals))
        }
    };
    AggregateReport {
        images: per_image.len(),
        rmse: mean(&collect(&|r| r.rmse)),
        whdr: mean(&collect(&|r| r.whdr)),
        mbe: optional(&|r| r.mbe),
        r3: optional(&|r| r.r3),
        eps_acc: mean(&collect(&|r| r.eps_acc)),
        eps_comp: mean(&collect(&|r| r.eps_comp)),
        per_image,
    }
}
