//! Segmentation evaluation: confusion-based overlap metrics, largest connected
//! component postprocessing and the Mann-Whitney U test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Conventional significance level reported next to every p-value.
pub const ALPHA: f64 = 0.05;

/// Binary H×W mask with values in {0, 1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
}

impl Mask {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Shape(format!(
                "mask has {} values, expected {height}x{width}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|&&v| v > 1) {
            return Err(Error::Input(format!("mask value {v} is not binary")));
        }
        Ok(Self { height, width, data })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0; height * width],
        }
    }

    pub fn from_bools(height: usize, width: usize, bits: &[bool]) -> Result<Self> {
        Self::new(height, width, bits.iter().map(|&b| b as u8).collect())
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.data.iter().map(|&v| v == 1).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    pub fn complement(&self) -> Mask {
        Mask {
            data: self.data.iter().map(|&v| 1 - v).collect(),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion_counts(pred: &Mask, gt: &Mask) -> Result<ConfusionCounts> {
    if pred.height != gt.height || pred.width != gt.width {
        return Err(Error::Shape(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.height, pred.width, gt.height, gt.width
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.data.iter().zip(&gt.data) {
        match (p, g) {
            (1, 1) => c.tp += 1,
            (1, _) => c.fp += 1,
            (_, 1) => c.fn_ += 1,
            _ => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dice: f64,
    pub iou: f64,
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

impl MetricsReport {
    pub const COLUMNS: [&'static str; 5] = ["dice", "iou", "precision", "sensitivity", "specificity"];

    pub fn values(&self) -> [f64; 5] {
        [self.dice, self.iou, self.precision, self.sensitivity, self.specificity]
    }

    pub fn get(&self, column: &str) -> Option<f64> {
        Self::COLUMNS.iter().position(|&c| c == column).map(|i| self.values()[i])
    }
}

/// `num / den`, or the agreement convention when the denominator is empty:
/// 1 if the complementary set is empty too, otherwise 0.
fn ratio(num: u64, den: u64, other_empty: bool) -> f64 {
    if den == 0 {
        if other_empty {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(c: &ConfusionCounts) -> MetricsReport {
    let pred_pos = c.tp + c.fp;
    let gt_pos = c.tp + c.fn_;
    let pred_neg = c.tn + c.fn_;
    let union = c.tp + c.fp + c.fn_;
    MetricsReport {
        // union == 0 means both masks are empty
        dice: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_, true),
        iou: ratio(c.tp, union, true),
        precision: ratio(c.tp, pred_pos, gt_pos == 0),
        sensitivity: ratio(c.tp, gt_pos, pred_pos == 0),
        specificity: ratio(c.tn, c.fp + c.tn, pred_neg == 0),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    #[serde(rename = "4")]
    Four,
    #[default]
    #[serde(rename = "8")]
    Eight,
}

impl Connectivity {
    pub fn from_neighbours(n: u8) -> Option<Self> {
        match n {
            4 => Some(Connectivity::Four),
            8 => Some(Connectivity::Eight),
            _ => None,
        }
    }
}

/// Component labelling result. Label 0 is background; foreground components
/// are numbered from 1 in order of first appearance in a row-major scan.
#[derive(Clone, Debug)]
pub struct Components {
    pub labels: Vec<u32>,
    /// `areas[k]` is the pixel count of component `k + 1`.
    pub areas: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.areas.len()
    }

    /// Label of the component with maximal area; ties go to the lowest label.
    pub fn largest(&self) -> Option<u32> {
        let mut best: Option<(usize, usize)> = None;
        for (k, &a) in self.areas.iter().enumerate() {
            if best.is_none_or(|(_, b)| a > b) {
                best = Some((k, a));
            }
        }
        best.map(|(k, _)| k as u32 + 1)
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) -> u32 {
    let (ra, rb) = (find(parent, a), find(parent, b));
    let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
    parent[hi as usize] = lo;
    lo
}

/// Two-pass union-find labelling.
pub fn label_components(mask: &[bool], height: usize, width: usize, connectivity: Connectivity) -> Components {
    let mut provisional = vec![0u32; height * width];
    let mut parent: Vec<u32> = vec![0];
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            if !mask[i] {
                continue;
            }
            let mut neighbours = [0u32; 4];
            let mut n = 0;
            let mut look = |j: usize| {
                if provisional[j] != 0 {
                    neighbours[n] = provisional[j];
                    n += 1;
                }
            };
            if c > 0 {
                look(i - 1);
            }
            if r > 0 {
                look(i - width);
                if connectivity == Connectivity::Eight {
                    if c > 0 {
                        look(i - width - 1);
                    }
                    if c + 1 < width {
                        look(i - width + 1);
                    }
                }
            }
            provisional[i] = if n == 0 {
                let id = parent.len() as u32;
                parent.push(id);
                id
            } else {
                let mut root = neighbours[0];
                for &other in &neighbours[1..n] {
                    root = union(&mut parent, root, other);
                }
                find(&mut parent, root)
            };
        }
    }

    let mut compact = vec![0u32; parent.len()];
    let mut areas = Vec::new();
    let mut labels = vec![0u32; height * width];
    for (i, &p) in provisional.iter().enumerate() {
        if p == 0 {
            continue;
        }
        let root = find(&mut parent, p) as usize;
        if compact[root] == 0 {
            areas.push(0);
            compact[root] = areas.len() as u32;
        }
        let id = compact[root];
        areas[id as usize - 1] += 1;
        labels[i] = id;
    }
    Components { labels, areas }
}

/// Keeps only the maximal-area foreground component.
pub fn largest_component(mask: &Mask, connectivity: Connectivity) -> Mask {
    let comps = label_components(&mask.to_bools(), mask.height, mask.width, connectivity);
    let keep = comps.largest().unwrap_or(0);
    Mask {
        height: mask.height,
        width: mask.width,
        data: comps.labels.iter().map(|&l| (l != 0 && l == keep) as u8).collect(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UMethod {
    Exact,
    NormalApprox,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UTestResult {
    #[serde(rename = "u")]
    pub u_statistic: f64,
    #[serde(rename = "p")]
    pub p_value: f64,
    pub method: UMethod,
    pub n1: usize,
    pub n2: usize,
}

impl UTestResult {
    pub fn significant(&self) -> bool {
        self.p_value < ALPHA
    }
}

/// Largest combined sample size for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 12;

/// Midranks (1-based) of `values` and the tie term Σ(t³ − t) over tie groups.
pub fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        let t = (end - start) as f64;
        ties += t * t * t - t;
        start = end;
    }
    (ranks, ties)
}

/// Number of arrangements giving each U value, for sample sizes (n1, n2)
/// without ties; index is U.
fn exact_u_counts(n1: usize, n2: usize) -> Vec<f64> {
    // table[i][j][u]: arrangements of i + j items with statistic u
    let max_u = n1 * n2;
    let mut table = vec![vec![vec![0.0f64; max_u + 1]; n2 + 1]; n1 + 1];
    for row in table.iter_mut() {
        row[0][0] = 1.0;
    }
    for j in 0..=n2 {
        table[0][j][0] = 1.0;
    }
    for i in 1..=n1 {
        for j in 1..=n2 {
            for u in 0..=i * j {
                // largest item from the first sample beats all j of the second
                let from_a = if u >= j { table[i - 1][j][u - j] } else { 0.0 };
                let from_b = table[i][j - 1][u];
                table[i][j][u] = from_a + from_b;
            }
        }
    }
    table[n1][n2].clone()
}

/// Mann-Whitney U test of `a` against `b`. The reported statistic is U of `a`.
pub fn mann_whitney_u(a: &[f64], b: &[f64], _alternative: Alternative) -> Result<UTestResult> {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::Input("Mann-Whitney U needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Input("Mann-Whitney U samples contain NaN".into()));
    }
    let combined: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&combined);
    let rank_sum: f64 = ranks[..n1].iter().sum();
    let u = rank_sum - (n1 * (n1 + 1)) as f64 / 2.0;
    let n = (n1 + n2) as f64;
    let mean = (n1 * n2) as f64 / 2.0;

    if n1 + n2 <= EXACT_LIMIT && ties == 0.0 {
        let counts = exact_u_counts(n1, n2);
        let total: f64 = counts.iter().sum();
        let k = u.round() as usize;
        let lower: f64 = counts[..=k].iter().sum::<f64>() / total;
        let upper: f64 = counts[k..].iter().sum::<f64>() / total;
        let p = (2.0 * lower.min(upper)).min(1.0);
        return Ok(UTestResult {
            u_statistic: u,
            p_value: p,
            method: UMethod::Exact,
            n1,
            n2,
        });
    }

    let var = (n1 * n2) as f64 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::standard();
        (2.0 * normal.sf(z)).clamp(f64::MIN_POSITIVE, 1.0)
    };
    Ok(UTestResult {
        u_statistic: u,
        p_value: p,
        method: UMethod::NormalApprox,
        n1,
        n2,
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 0 { (v[m - 1] + v[m]) / 2.0 } else { v[m] })
}

/// Population variance (divides by n).
pub fn population_variance(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Some(values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
}
