//! Discrete rearrangement classes and the bathtub selection.
//!
//! A density is piecewise constant on triangles and takes one of the values
//! `c_1 < … < c_m`. Material `i` must cover (approximately) the area `S_i`.
//! Since triangle areas rarely add up to `S_i` exactly, every assignment
//! places its cuts where the cumulative area comes closest to the cumulative
//! target, so each material misses its target by at most one element.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{ElementMeasure, TriMesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RearrangementClass {
    densities: Vec<f64>,
    target_areas: Vec<f64>,
}

impl RearrangementClass {
    pub fn new(densities: Vec<f64>, target_areas: Vec<f64>) -> Result<Self> {
        if densities.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least two materials, got {}",
                densities.len()
            )));
        }
        if densities.len() != target_areas.len() {
            return Err(Error::InvalidArgument(format!(
                "{} densities but {} target areas",
                densities.len(),
                target_areas.len()
            )));
        }
        if !(densities[0].is_finite() && densities[0] > 0.0) {
            return Err(Error::InvalidArgument(format!("densities must be positive, got {}", densities[0])));
        }
        if let Some(w) = densities.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "densities must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
        if let Some(s) = target_areas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidArgument(format!("target areas must be positive, got {s}")));
        }
        Ok(Self {
            densities,
            target_areas,
        })
    }

    pub fn m(&self) -> usize {
        self.densities.len()
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn target_areas(&self) -> &[f64] {
        &self.target_areas
    }

    pub fn total_target(&self) -> f64 {
        self.target_areas.iter().sum()
    }

    /// Same class with target areas rescaled to sum to `total_area`.
    pub fn fitted_to(&self, total_area: f64) -> Self {
        let k = total_area / self.total_target();
        Self {
            densities: self.densities.clone(),
            target_areas: self.target_areas.iter().map(|s| s * k).collect(),
        }
    }

    /// Checks `Σ S_i = |Ω|` to within one element.
    pub fn check_against(&self, measure: &ElementMeasure) -> Result<()> {
        let gap = (self.total_target() - measure.total_area).abs();
        if gap > measure.max_area() {
            return Err(Error::InvalidArgument(format!(
                "target areas sum to {} but the mesh area is {} (allowed gap {})",
                self.total_target(),
                measure.total_area,
                measure.max_area()
            )));
        }
        Ok(())
    }

    /// Cumulative cut targets, scaled so the last one is the mesh area.
    fn cumulative_targets(&self, total_area: f64) -> Vec<f64> {
        let k = total_area / self.total_target();
        let mut acc = 0.0;
        self.target_areas[..self.m() - 1]
            .iter()
            .map(|s| {
                acc += s * k;
                acc
            })
            .collect()
    }
}

/// A density that is constant per triangle and takes class values only.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    materials: Vec<usize>,
    values: Vec<f64>,
    achieved_areas: Vec<f64>,
}

impl DensityField {
    /// `materials[k]` is the (0-based) material index of element `k`.
    pub fn from_materials(class: &RearrangementClass, materials: Vec<usize>, measure: &ElementMeasure) -> Result<Self> {
        if materials.len() != measure.len() {
            return Err(Error::InvalidArgument(format!(
                "{} material labels for {} elements",
                materials.len(),
                measure.len()
            )));
        }
        let mut achieved_areas = vec![0.0; class.m()];
        for (k, &mat) in materials.iter().enumerate() {
            if mat >= class.m() {
                return Err(Error::InvalidArgument(format!("element {k} has material {mat} outside the class")));
            }
            achieved_areas[mat] += measure.areas[k];
        }
        let values = materials.iter().map(|&i| class.densities[i]).collect();
        Ok(Self {
            materials,
            values,
            achieved_areas,
        })
    }

    /// Recovers material labels from density values; each value must be one
    /// of the class densities exactly.
    pub fn from_values(class: &RearrangementClass, values: &[f64], measure: &ElementMeasure) -> Result<Self> {
        let materials = values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                class.densities.iter().position(|c| c == v).ok_or_else(|| {
                    Error::InvalidArgument(format!("element {k} has density {v}, not a class value"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_materials(class, materials, measure)
    }

    /// Materials laid out in vertical stripes, left to right from `c_1` to `c_m`.
    pub fn stripes(class: &RearrangementClass, mesh: &TriMesh, measure: &ElementMeasure) -> Result<Self> {
        let c = mesh.centroids();
        let mut order: Vec<usize> = (0..mesh.num_triangles()).collect();
        order.sort_by(|&a, &b| {
            c[a][0]
                .total_cmp(&c[b][0])
                .then(c[a][1].total_cmp(&c[b][1]))
                .then(a.cmp(&b))
        });
        Self::from_materials(class, assign_in_order(&order, class, measure), measure)
    }

    /// Seeded uniformly random layout.
    pub fn random(class: &RearrangementClass, measure: &ElementMeasure, seed: u64) -> Result<Self> {
        let mut order: Vec<usize> = (0..measure.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self::from_materials(class, assign_in_order(&order, class, measure), measure)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn materials(&self) -> &[usize] {
        &self.materials
    }

    pub fn achieved_areas(&self) -> &[f64] {
        &self.achieved_areas
    }

    /// Every material within one (largest) element area of its target.
    pub fn satisfies_class(&self, class: &RearrangementClass, measure: &ElementMeasure) -> bool {
        let slack = measure.max_area() * (1.0 + 1e-12);
        let targets = class.fitted_to(measure.total_area);
        self.achieved_areas
            .iter()
            .zip(targets.target_areas())
            .all(|(a, s)| (a - s).abs() <= slack)
    }

    /// `Σ_k ρ_k f_k |T_k|`.
    pub fn weighted_integral(&self, f: &ScalarElementField, measure: &ElementMeasure) -> f64 {
        self.values
            .iter()
            .zip(f.values())
            .zip(&measure.areas)
            .map(|((r, f), a)| r * f * a)
            .sum()
    }
}

/// Nonnegative per-element values, typically the element mean of `u²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarElementField(Vec<f64>);

impl ScalarElementField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "element field must be finite and nonnegative; element {k} is {}",
                values[k]
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Which way the linear functional `∫ρf` is pushed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BathtubMode {
    /// Smallest density where `f` is largest.
    Min,
    /// Largest density where `f` is largest.
    Max,
}

/// How the level sets are located.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "method")]
pub enum Selection {
    /// Exact sort of the element values.
    Sort,
    /// Bisection on the threshold with an area tolerance.
    Bisection { tol: f64 },
}

/// `|{f > s}|`.
pub fn distribution_function(f: &ScalarElementField, measure: &ElementMeasure, s: f64) -> f64 {
    f.values()
        .iter()
        .zip(&measure.areas)
        .filter(|(v, _)| **v > s)
        .map(|(_, a)| a)
        .sum()
}

/// Walks `order` and assigns materials `0..m` with cuts at the cumulative
/// area closest to each cumulative target. On a tie the earlier cut wins.
fn assign_in_order(order: &[usize], class: &RearrangementClass, measure: &ElementMeasure) -> Vec<usize> {
    let targets = class.cumulative_targets(measure.total_area);
    let mut materials = vec![class.m() - 1; order.len()];
    let mut k = 0;
    let mut cum = 0.0;
    for (mat, &t) in targets.iter().enumerate() {
        while k < order.len() {
            let next = cum + measure.areas[order[k]];
            if (next - t).abs() < (cum - t).abs() {
                materials[order[k]] = mat;
                cum = next;
                k += 1;
            } else {
                break;
            }
        }
    }
    materials
}

/// Element order for a mode: `f` descending for [`BathtubMode::Min`],
/// ascending for [`BathtubMode::Max`]; ties by element index.
fn sorted_order(f: &ScalarElementField, mode: BathtubMode) -> Vec<usize> {
    let v = f.values();
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| {
        let c = match mode {
            BathtubMode::Min => v[b].total_cmp(&v[a]),
            BathtubMode::Max => v[a].total_cmp(&v[b]),
        };
        c.then(a.cmp(&b))
    });
    order
}

/// Thresholds `t_1..t_{m-1}` together with the resulting layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Levels {
    pub thresholds: Vec<f64>,
    pub field: DensityField,
    /// Some cut could not meet the area tolerance because `F` jumps by more
    /// than the tolerance; the closest achievable cut was used.
    pub quantization_warning: bool,
}

fn check_lengths(f: &ScalarElementField, measure: &ElementMeasure) -> Result<()> {
    if f.len() != measure.len() {
        return Err(Error::InvalidArgument(format!(
            "element field has {} values for {} elements",
            f.len(),
            measure.len()
        )));
    }
    Ok(())
}

pub fn bathtub_levels(
    f: &ScalarElementField,
    class: &RearrangementClass,
    measure: &ElementMeasure,
    mode: BathtubMode,
    selection: Selection,
) -> Result<Levels> {
    match selection {
        Selection::Sort => sorted_levels(f, class, measure, mode),
        Selection::Bisection { tol } => levels_bisection(f, class, measure, mode, tol),
    }
}

fn sorted_levels(
    f: &ScalarElementField,
    class: &RearrangementClass,
    measure: &ElementMeasure,
    mode: BathtubMode,
) -> Result<Levels> {
    check_lengths(f, measure)?;
    let order = sorted_order(f, mode);
    let materials = assign_in_order(&order, class, measure);
    // threshold = value of the last element placed in each material
    let mut thresholds = Vec::with_capacity(class.m() - 1);
    let v = f.values();
    for mat in 0..class.m() - 1 {
        let last = order.iter().rev().find(|&&k| materials[k] == mat);
        let t = match (last, mode) {
            (Some(&k), _) => v[k],
            (None, BathtubMode::Min) => f64::INFINITY,
            (None, BathtubMode::Max) => f64::NEG_INFINITY,
        };
        thresholds.push(t);
    }
    Ok(Levels {
        thresholds,
        field: DensityField::from_materials(class, materials, measure)?,
        quantization_warning: false,
    })
}

/// `c_1` on the largest `f`, then `c_2`, …; minimizes `∫ρf` over the class.
pub fn bathtub_minimize(f: &ScalarElementField, class: &RearrangementClass, measure: &ElementMeasure) -> Result<DensityField> {
    Ok(sorted_levels(f, class, measure, BathtubMode::Min)?.field)
}

/// `c_1` on the smallest `f`, …, `c_m` on the largest; maximizes `∫ρf`.
pub fn bathtub_maximize(f: &ScalarElementField, class: &RearrangementClass, measure: &ElementMeasure) -> Result<DensityField> {
    Ok(sorted_levels(f, class, measure, BathtubMode::Max)?.field)
}

const BISECTION_STEPS: usize = 200;

/// Level sets by bisection on the threshold. Material `i` takes
/// `{f > t_i}` (mode `Min`) or `{f ≤ t_i}` (mode `Max`) within the part of
/// the domain not yet assigned; the last material takes the rest.
///
/// When no threshold meets `tol`, the cut with the smallest area mismatch
/// is used and `quantization_warning` is set.
pub fn levels_bisection(
    f: &ScalarElementField,
    class: &RearrangementClass,
    measure: &ElementMeasure,
    mode: BathtubMode,
    tol: f64,
) -> Result<Levels> {
    check_lengths(f, measure)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("bisection tolerance must be positive, got {tol}")));
    }
    let v = f.values();
    let n = v.len();
    let targets = class.cumulative_targets(measure.total_area);
    let mut materials: Vec<Option<usize>> = vec![None; n];
    let mut assigned = 0.0;
    let mut thresholds = Vec::with_capacity(class.m() - 1);
    let mut warning = false;

    let selects = |value: f64, theta: f64| match mode {
        BathtubMode::Min => value > theta,
        BathtubMode::Max => value <= theta,
    };

    for (mat, &cum_target) in targets.iter().enumerate() {
        let goal = cum_target - assigned;
        let remaining: Vec<usize> = (0..n).filter(|&k| materials[k].is_none()).collect();
        let area_at = |theta: f64| -> f64 {
            remaining
                .iter()
                .filter(|&&k| selects(v[k], theta))
                .map(|&k| measure.areas[k])
                .sum()
        };
        let upper = remaining.iter().map(|&k| v[k]).fold(0.0, f64::max);
        let (mut lo, mut hi) = (0.0, upper);
        let mut found = None;
        for _ in 0..BISECTION_STEPS {
            let theta = 0.5 * (lo + hi);
            let area = area_at(theta);
            if (area - goal).abs() < tol {
                found = Some(theta);
                break;
            }
            // the selected area shrinks with theta in Min mode and grows in Max mode
            let too_small = area < goal;
            match (mode, too_small) {
                (BathtubMode::Min, true) | (BathtubMode::Max, false) => hi = theta,
                _ => lo = theta,
            }
            if hi - lo <= f64::EPSILON * hi.max(1.0) {
                break;
            }
        }
        let theta = match found {
            Some(t) => t,
            None => {
                warning = true;
                best_cut(&remaining, v, &measure.areas, goal, mode)
            }
        };
        for &k in &remaining {
            if selects(v[k], theta) {
                materials[k] = Some(mat);
                assigned += measure.areas[k];
            }
        }
        thresholds.push(theta);
    }
    let last = class.m() - 1;
    let materials = materials.into_iter().map(|m| m.unwrap_or(last)).collect();
    if warning {
        log::warn!("bisection could not meet area tolerance {tol}; used the closest discrete cut");
    }
    Ok(Levels {
        thresholds,
        field: DensityField::from_materials(class, materials, measure)?,
        quantization_warning: warning,
    })
}

/// Threshold between consecutive distinct values whose selected area is
/// closest to `goal`; the smaller selection wins a tie.
fn best_cut(remaining: &[usize], v: &[f64], areas: &[f64], goal: f64, mode: BathtubMode) -> f64 {
    let mut idx = remaining.to_vec();
    idx.sort_by(|&a, &b| match mode {
        BathtubMode::Min => v[b].total_cmp(&v[a]),
        BathtubMode::Max => v[a].total_cmp(&v[b]),
    });
    // cut after position p selects idx[..p]; only positions between distinct values are reachable
    let mut best = (goal.abs(), 0usize);
    let mut cum = 0.0;
    for p in 1..=idx.len() {
        cum += areas[idx[p - 1]];
        let reachable = p == idx.len() || v[idx[p]] != v[idx[p - 1]];
        if reachable && (cum - goal).abs() < best.0 {
            best = ((cum - goal).abs(), p);
        }
    }
    let p = best.1;
    match mode {
        BathtubMode::Min => {
            let above = if p < idx.len() { v[idx[p]] } else { -1.0 };
            if p == 0 {
                v[idx[0]]
            } else if p == idx.len() {
                (v[idx[p - 1]] - 1.0).min(-1.0)
            } else {
                0.5 * (v[idx[p - 1]] + above)
            }
        }
        BathtubMode::Max => {
            if p == 0 {
                -1.0
            } else if p == idx.len() {
                v[idx[p - 1]]
            } else {
                0.5 * (v[idx[p - 1]] + v[idx[p]])
            }
        }
    }
}

/// `‖ρ_a − ρ_b‖_{L²}`.
pub fn l2_distance(a: &[f64], b: &[f64], measure: &ElementMeasure) -> Result<f64> {
    if a.len() != b.len() || a.len() != measure.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {}, {} and {} elements",
            a.len(),
            b.len(),
            measure.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .zip(&measure.areas)
        .map(|((x, y), w)| (x - y) * (x - y) * w)
        .sum::<f64>()
        .sqrt())
}

/// Outcome of exchanging two equal-area pieces between two materials.
#[derive(Debug, Clone, PartialEq)]
pub struct Swap {
    pub field: DensityField,
    /// `(lighter, heavier)` material indices.
    pub pair: (usize, usize),
    /// Elements that moved from the lighter to the heavier material.
    pub set_a: Vec<usize>,
    /// Elements that moved from the heavier to the lighter material.
    pub set_b: Vec<usize>,
    pub delta_l2: f64,
}

/// Material pairs in use, ordered by density gap (largest first).
fn material_pairs(class: &RearrangementClass, field: &DensityField) -> Vec<(usize, usize)> {
    let mut present = vec![false; class.m()];
    for &m in field.materials() {
        present[m] = true;
    }
    let c = class.densities();
    let mut pairs = Vec::new();
    for j in 0..class.m() {
        for i in j + 1..class.m() {
            if present[i] && present[j] {
                pairs.push((j, i));
            }
        }
    }
    pairs.sort_by(|&(j1, i1), &(j2, i2)| {
        (c[i2] - c[j2])
            .total_cmp(&(c[i1] - c[j1]))
            .then((j1, i1).cmp(&(j2, i2)))
    });
    pairs
}

/// Elements of `mat`, ordered by `f` (ascending or descending), ties broken
/// by a seeded shuffle.
fn members_by_f(field: &DensityField, f: &[f64], mat: usize, descending: bool, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..field.len()).filter(|&k| field.materials[k] == mat).collect();
    idx.shuffle(rng);
    idx.sort_by(|&a, &b| {
        let o = f[a].total_cmp(&f[b]);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    idx
}

fn apply_swap(
    class: &RearrangementClass,
    rho: &DensityField,
    measure: &ElementMeasure,
    (j, i): (usize, usize),
    set_a: &[usize],
    set_b: &[usize],
) -> Result<Swap> {
    let mut materials = rho.materials.clone();
    for &k in set_a {
        materials[k] = i;
    }
    for &k in set_b {
        materials[k] = j;
    }
    let field = DensityField::from_materials(class, materials, measure)?;
    let delta_l2 = l2_distance(rho.values(), field.values(), measure)?;
    Ok(Swap {
        field,
        pair: (j, i),
        set_a: set_a.to_vec(),
        set_b: set_b.to_vec(),
        delta_l2,
    })
}

/// Exchanges a lighter piece `A` (low `f`) with a heavier piece `B` (high
/// `f`) of about `swap_area` each, so that `∫ρf` strictly decreases.
///
/// Material pairs are tried from the largest density gap down. `A` is the
/// prefix of the lighter material sorted by increasing `f`; `B` is the prefix
/// of the heavier material sorted by decreasing `f`, with its length chosen
/// to keep the lighter material's area closest to its target. Both pieces
/// hold at least one element.
pub fn partial_swap(
    rho: &DensityField,
    class: &RearrangementClass,
    f: &ScalarElementField,
    measure: &ElementMeasure,
    swap_area: f64,
    seed: u64,
) -> Result<Swap> {
    check_lengths(f, measure)?;
    if !(swap_area > 0.0) {
        return Err(Error::InvalidArgument(format!("swap area must be positive, got {swap_area}")));
    }
    let pairs = material_pairs(class, rho);
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("density uses a single material; nothing to swap".into()));
    }
    let fv = f.values();
    let targets = class.fitted_to(measure.total_area);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let before = rho.weighted_integral(f, measure);

    for (j, i) in pairs {
        let low = members_by_f(rho, fv, j, false, &mut rng);
        let high = members_by_f(rho, fv, i, true, &mut rng);
        let mut area_a = 0.0;
        let mut take_a = 0;
        while take_a < low.len() && (take_a == 0 || area_a < swap_area) {
            area_a += measure.areas[low[take_a]];
            take_a += 1;
        }
        let dev = rho.achieved_areas[j] - targets.target_areas()[j] - area_a;
        let mut best = (f64::INFINITY, 0usize);
        let mut area_b = 0.0;
        for (p, &k) in high.iter().enumerate() {
            area_b += measure.areas[k];
            let miss = (dev + area_b).abs();
            if miss < best.0 {
                best = (miss, p + 1);
            }
            if dev + area_b > 0.0 {
                break;
            }
        }
        let set_a = &low[..take_a];
        let set_b = &high[..best.1];
        let swap = apply_swap(class, rho, measure, (j, i), set_a, set_b)?;
        if swap.field.weighted_integral(f, measure) < before {
            return Ok(swap);
        }
    }
    Err(Error::NoSwapAvailable)
}

/// Single-element exchanges that strictly decrease `∫ρf` and keep every
/// material within one element of its target, best first, at most `limit`.
pub fn single_swaps(
    rho: &DensityField,
    class: &RearrangementClass,
    f: &ScalarElementField,
    measure: &ElementMeasure,
    limit: usize,
) -> Result<Vec<Swap>> {
    ranked_single_swaps(rho, class, f, measure, limit, true)
}

/// Single-element exchanges ranked by how much they raise `∫ρf`, best (or
/// least harmful) first. Unlike [`single_swaps`] nothing is filtered out:
/// at a bathtub maximizer every exchange lowers the functional, and the
/// caller judges the candidates by their eigenvalue instead.
pub fn uphill_single_swaps(
    rho: &DensityField,
    class: &RearrangementClass,
    f: &ScalarElementField,
    measure: &ElementMeasure,
    limit: usize,
) -> Result<Vec<Swap>> {
    ranked_single_swaps(rho, class, f, measure, limit, false)
}

fn ranked_single_swaps(
    rho: &DensityField,
    class: &RearrangementClass,
    f: &ScalarElementField,
    measure: &ElementMeasure,
    limit: usize,
    decrease: bool,
) -> Result<Vec<Swap>> {
    check_lengths(f, measure)?;
    let fv = f.values();
    let c = class.densities();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut scored: Vec<(f64, (usize, usize), usize, usize)> = Vec::new();
    for (j, i) in material_pairs(class, rho) {
        // a leaves the lighter material j, b leaves the heavier material i
        let light = members_by_f(rho, fv, j, !decrease, &mut rng);
        let heavy = members_by_f(rho, fv, i, decrease, &mut rng);
        for &a in light.iter().take(limit) {
            for &b in heavy.iter().take(limit) {
                let change = (c[i] - c[j]) * (fv[a] * measure.areas[a] - fv[b] * measure.areas[b]);
                if !decrease || change < 0.0 {
                    // sort key: most favourable first
                    let key = if decrease { change } else { -change };
                    scored.push((key, (j, i), a, b));
                }
            }
        }
    }
    scored.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal).then((x.2, x.3).cmp(&(y.2, y.3))));
    let mut out = Vec::new();
    for (_, pair, a, b) in scored {
        if out.len() >= limit {
            break;
        }
        let swap = apply_swap(class, rho, measure, pair, &[a], &[b])?;
        if swap.field.satisfies_class(class, measure) {
            out.push(swap);
        }
    }
    Ok(out)
}
