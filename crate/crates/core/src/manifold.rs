//! Compact p-adic manifolds in normal form: disjoint weighted unit sheets
//! glued by a chart cover whose nerve complex must be connected.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::symbolic::{Residue, SymbolicValue};
use crate::tree::{Ball, PAdicStructure};

pub type SheetId = u32;
pub type ChartId = u32;

/// One copy of `O_K^n` with constant measure density `q^density_exp`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sheet {
    pub id: SheetId,
    pub density_exp: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    pub sheet: SheetId,
    pub ball: Ball,
}

impl Region {
    pub fn new(sheet: SheetId, ball: Ball) -> Self {
        Region { sheet, ball }
    }

    pub fn root(sheet: SheetId) -> Self {
        Region { sheet, ball: Ball::root() }
    }

    pub fn intersects(&self, other: &Region) -> bool {
        self.sheet == other.sheet && self.ball.intersects(&other.ball)
    }

    pub fn contains(&self, other: &Region) -> bool {
        self.sheet == other.sheet && self.ball.is_prefix_of(&other.ball)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    pub id: ChartId,
    pub regions: Vec<Region>,
}

/// A finite-precision point: a cell of the working level on one sheet.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub sheet: SheetId,
    pub cell: Ball,
}

impl Point {
    pub fn new(sheet: SheetId, cell: Ball) -> Self {
        Point { sheet, cell }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.sheet, self.cell)
    }
}

/// Simplicial nerve of the chart cover. Vertices are chart indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NerveComplex {
    vertex_count: usize,
    facets: Vec<Vec<usize>>,
    edges: BTreeSet<(usize, usize)>,
}

impl NerveComplex {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Maximal simplices, each a sorted list of chart indices.
    pub fn facets(&self) -> &[Vec<usize>] {
        &self.facets
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn contains_simplex(&self, simplex: &[usize]) -> bool {
        self.facets.iter().any(|f| simplex.iter().all(|v| f.binary_search(v).is_ok()))
    }

    pub fn dimension(&self) -> usize {
        self.facets.iter().map(|f| f.len().saturating_sub(1)).max().unwrap_or(0)
    }

    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn component_count(&self) -> usize {
        let adj = self.neighbours();
        let mut seen = vec![false; self.vertex_count];
        let mut components = 0;
        for start in 0..self.vertex_count {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }
}

/// A compact p-adic analytic manifold in normal form.
#[derive(Debug)]
pub struct ManifoldModel {
    structure: PAdicStructure,
    sheets: Vec<Sheet>,
    charts: Vec<Chart>,
    sheet_index: HashMap<SheetId, usize>,
    nerve: NerveComplex,
    path_minima: OnceLock<Vec<Vec<SymbolicValue>>>,
}

impl Clone for ManifoldModel {
    fn clone(&self) -> Self {
        ManifoldModel {
            structure: self.structure,
            sheets: self.sheets.clone(),
            charts: self.charts.clone(),
            sheet_index: self.sheet_index.clone(),
            nerve: self.nerve.clone(),
            path_minima: OnceLock::new(),
        }
    }
}

impl PartialEq for ManifoldModel {
    fn eq(&self, other: &Self) -> bool {
        self.structure == other.structure && self.sheets == other.sheets && self.charts == other.charts
    }
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidModel { path: path.into(), reason: reason.into() }
}

impl ManifoldModel {
    /// Validates and builds a model. Rejects a disconnected nerve.
    pub fn new(structure: PAdicStructure, sheets: Vec<Sheet>, charts: Vec<Chart>) -> Result<Self> {
        if sheets.is_empty() {
            return Err(invalid("sheets", "at least one sheet is required"));
        }
        let mut sheet_index = HashMap::with_capacity(sheets.len());
        for (i, sheet) in sheets.iter().enumerate() {
            if sheet_index.insert(sheet.id, i).is_some() {
                return Err(invalid(format!("sheets[{i}].id"), format!("duplicate sheet id {}", sheet.id)));
            }
        }
        if charts.is_empty() {
            return Err(invalid("charts", "at least one chart is required"));
        }
        let mut chart_ids = HashSet::with_capacity(charts.len());
        for (i, chart) in charts.iter().enumerate() {
            if !chart_ids.insert(chart.id) {
                return Err(invalid(format!("charts[{i}].id"), format!("duplicate chart id {}", chart.id)));
            }
            if chart.regions.is_empty() {
                return Err(invalid(format!("charts[{i}].regions"), "chart has no regions"));
            }
            for (j, region) in chart.regions.iter().enumerate() {
                if !sheet_index.contains_key(&region.sheet) {
                    return Err(invalid(
                        format!("charts[{i}].regions[{j}].sheet"),
                        format!("unknown sheet id {}", region.sheet),
                    ));
                }
                structure.check_ball(&region.ball).map_err(|r| invalid(format!("charts[{i}].regions[{j}].ball"), r))?;
                for (k, other) in chart.regions[..j].iter().enumerate() {
                    if region.intersects(other) {
                        return Err(invalid(
                            format!("charts[{i}].regions[{j}]"),
                            format!("nested with regions[{k}] of the same chart"),
                        ));
                    }
                }
            }
        }
        let mut by_sheet: HashMap<SheetId, Vec<&Ball>> = HashMap::new();
        for region in charts.iter().flat_map(|c| &c.regions) {
            by_sheet.entry(region.sheet).or_default().push(&region.ball);
        }
        for (i, sheet) in sheets.iter().enumerate() {
            let balls = by_sheet.get(&sheet.id).map(Vec::as_slice).unwrap_or(&[]);
            if !covered(&Ball::root(), balls, structure.branching()) {
                return Err(invalid(format!("sheets[{i}]"), "not covered by the chart regions"));
            }
        }
        let nerve = build_nerve(&charts);
        let components = nerve.component_count();
        if components > 1 {
            return Err(Error::DisconnectedNerve { components });
        }
        Ok(ManifoldModel { structure, sheets, charts, sheet_index, nerve, path_minima: OnceLock::new() })
    }

    /// Sheets `0..k` with the given densities, charts chained so that chart `i`
    /// covers sheets `i` and `i+1`.
    pub fn with_chain_atlas(structure: PAdicStructure, densities: &[i64]) -> Result<Self> {
        let sheets: Vec<Sheet> =
            densities.iter().enumerate().map(|(i, &density_exp)| Sheet { id: i as SheetId, density_exp }).collect();
        let charts = if sheets.len() == 1 {
            vec![Chart { id: 0, regions: vec![Region::root(0)] }]
        } else {
            (0..sheets.len() - 1)
                .map(|i| Chart {
                    id: i as ChartId,
                    regions: vec![Region::root(i as SheetId), Region::root(i as SheetId + 1)],
                })
                .collect()
        };
        Self::new(structure, sheets, charts)
    }

    /// A sphere in `K^n`: the unit ball minus one maximal subball, as
    /// `q^n - 1` sheets of density `q^-n`.
    pub fn sphere(structure: PAdicStructure) -> Result<Self> {
        let count = structure.branching() as usize - 1;
        Self::with_chain_atlas(structure, &vec![-(structure.n() as i64); count])
    }

    pub fn structure(&self) -> &PAdicStructure {
        &self.structure
    }

    pub fn sheets(&self) -> &[Sheet] {
        &self.sheets
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn sheet(&self, id: SheetId) -> Option<&Sheet> {
        self.sheet_index.get(&id).map(|&i| &self.sheets[i])
    }

    pub fn density_exp(&self, id: SheetId) -> Option<i64> {
        self.sheet(id).map(|s| s.density_exp)
    }

    pub fn total_measure(&self) -> SymbolicValue {
        self.sheets.iter().map(|s| SymbolicValue::q_pow(s.density_exp)).sum()
    }

    pub fn serre_invariant(&self) -> Residue {
        self.total_measure().reduce_mod(self.structure.q())
    }

    pub fn nerve_complex(&self) -> &NerveComplex {
        &self.nerve
    }

    pub fn is_connected(&self) -> bool {
        self.nerve.is_connected()
    }

    /// Largest ball containing `x`: the root of its sheet.
    pub fn largest_ball(&self, x: &Point) -> Region {
        Region::root(x.sheet)
    }

    pub fn region_measure(&self, region: &Region) -> SymbolicValue {
        let e = self.density_exp(region.sheet).expect("region sheet exists");
        self.structure.ball_measure(&region.ball, e)
    }

    /// Measure of a union of regions, counting nested regions once.
    pub fn union_measure<'a>(&self, regions: impl IntoIterator<Item = &'a Region>) -> SymbolicValue {
        let mut all: Vec<&Region> = regions.into_iter().collect();
        all.sort();
        all.dedup();
        let mut kept: Vec<&Region> = Vec::with_capacity(all.len());
        for r in all {
            // Sorted order puts every ancestor before its descendants.
            if kept.last().is_some_and(|k| k.contains(r)) {
                continue;
            }
            kept.push(r);
        }
        kept.into_iter().map(|r| self.region_measure(r)).sum()
    }

    fn check_point(&self, x: &Point) -> Result<i64> {
        let e =
            self.density_exp(x.sheet).ok_or_else(|| invalid("point.sheet", format!("unknown sheet id {}", x.sheet)))?;
        self.structure.check_ball(&x.cell).map_err(|r| invalid("point.cell", r))?;
        Ok(e)
    }

    /// Indices of charts having a region that contains the cell of `x`.
    pub fn charts_containing(&self, x: &Point) -> Vec<usize> {
        self.charts
            .iter()
            .enumerate()
            .filter(|(_, c)| c.regions.iter().any(|r| r.sheet == x.sheet && r.ball.is_prefix_of(&x.cell)))
            .map(|(i, _)| i)
            .collect()
    }

    /// Geodetic distance: join measure on a common sheet, otherwise the least
    /// union measure of chart sets along a simple path in the nerve.
    pub fn geodetic_distance(&self, x: &Point, y: &Point) -> Result<SymbolicValue> {
        let e = self.check_point(x)?;
        self.check_point(y)?;
        if x.sheet == y.sheet {
            return Ok(self.structure.ball_measure(&x.cell.join(&y.cell), e));
        }
        let from = self.charts_containing(x);
        if from.is_empty() {
            return Err(Error::PointNotCovered(x.to_string()));
        }
        let to = self.charts_containing(y);
        if to.is_empty() {
            return Err(Error::PointNotCovered(y.to_string()));
        }
        Ok(self.min_path_measure(&from, &to))
    }

    /// Minimum over `a in from, b in to` of the least path union measure.
    pub fn min_path_measure(&self, from: &[usize], to: &[usize]) -> SymbolicValue {
        let minima = self.path_minima();
        let q = self.structure.q();
        let mut best: Option<(BigRational, &SymbolicValue)> = None;
        for &a in from {
            for &b in to {
                let v = &minima[a][b];
                let val = v.evaluate_exact(q).expect("measures are T-free");
                if best.as_ref().is_none_or(|(bv, _)| val < *bv) {
                    best = Some((val, v));
                }
            }
        }
        best.expect("non-empty chart sets").1.clone()
    }

    fn path_minima(&self) -> &Vec<Vec<SymbolicValue>> {
        self.path_minima.get_or_init(|| {
            let adj = self.nerve.neighbours();
            let n = self.charts.len();
            (0..n)
                .map(|start| {
                    let mut search = PathSearch {
                        model: self,
                        adj: &adj,
                        visited: vec![false; n],
                        regions: Vec::new(),
                        best: vec![None; n],
                    };
                    search.visit(start);
                    search.best.into_iter().map(|b| b.expect("nerve is connected").1).collect()
                })
                .collect()
        })
    }

    /// Replaces one sheet by its `q^n` maximal subballs, each a new sheet of
    /// density `e - n`. Chart regions are carried over to the new sheets.
    pub fn subdivide_sheet(&self, id: SheetId) -> Result<ManifoldModel> {
        let e = self.density_exp(id).ok_or_else(|| invalid("sheet", format!("unknown sheet id {id}")))?;
        let branching = self.structure.branching();
        let next_id = self.sheets.iter().map(|s| s.id).max().unwrap_or(0) + 1;
        let new_id = |digit: u32| next_id + digit;
        let mut sheets: Vec<Sheet> = self.sheets.iter().filter(|s| s.id != id).copied().collect();
        sheets.extend((0..branching).map(|d| Sheet { id: new_id(d), density_exp: e - self.structure.n() as i64 }));
        let charts = self
            .charts
            .iter()
            .map(|c| Chart {
                id: c.id,
                regions: c
                    .regions
                    .iter()
                    .flat_map(|r| {
                        if r.sheet != id {
                            vec![r.clone()]
                        } else if r.ball.is_root() {
                            (0..branching).map(|d| Region::root(new_id(d))).collect()
                        } else {
                            let d = r.ball.digits();
                            vec![Region::new(new_id(d[0]), Ball::new(d[1..].to_vec()))]
                        }
                    })
                    .collect(),
            })
            .collect();
        ManifoldModel::new(self.structure, sheets, charts)
    }
}

struct PathSearch<'a> {
    model: &'a ManifoldModel,
    adj: &'a [Vec<usize>],
    visited: Vec<bool>,
    regions: Vec<&'a Region>,
    best: Vec<Option<(BigRational, SymbolicValue)>>,
}

impl<'a> PathSearch<'a> {
    fn visit(&mut self, v: usize) {
        let mark = self.regions.len();
        self.visited[v] = true;
        self.regions.extend(self.model.charts[v].regions.iter());
        let measure = self.model.union_measure(self.regions.iter().copied());
        let value = measure.evaluate_exact(self.model.structure.q()).expect("T-free");
        if self.best[v].as_ref().is_none_or(|(b, _)| value < *b) {
            self.best[v] = Some((value.clone(), measure));
        }
        // Unions only grow along a path; stop once nothing can improve.
        let improvable = self.best.iter().any(|b| b.as_ref().is_none_or(|(b, _)| value < *b));
        if improvable {
            for &w in &self.adj[v] {
                if !self.visited[w] {
                    self.visit(w);
                }
            }
        }
        self.regions.truncate(mark);
        self.visited[v] = false;
    }
}

fn covered(ball: &Ball, regions: &[&Ball], branching: u32) -> bool {
    if regions.iter().any(|r| r.is_prefix_of(ball)) {
        return true;
    }
    if !regions.iter().any(|r| ball.is_strict_prefix_of(r)) {
        return false;
    }
    let below: Vec<&Ball> = regions.iter().copied().filter(|r| ball.is_strict_prefix_of(r)).collect();
    ball.children(branching).all(|c| covered(&c, &below, branching))
}

/// A family of balls has a common point iff it is a chain; its deepest
/// member is then a region of some chart. So the facets are the sets of
/// charts owning a region that contains some region `r`.
fn build_nerve(charts: &[Chart]) -> NerveComplex {
    let mut candidates: BTreeSet<Vec<usize>> = BTreeSet::new();
    for chart in charts {
        for r in &chart.regions {
            let members: Vec<usize> = charts
                .iter()
                .enumerate()
                .filter(|(_, c)| c.regions.iter().any(|o| o.contains(r)))
                .map(|(i, _)| i)
                .collect();
            candidates.insert(members);
        }
    }
    let candidates: Vec<Vec<usize>> = candidates.into_iter().collect();
    let is_subset = |a: &[usize], b: &[usize]| a.len() < b.len() && a.iter().all(|v| b.binary_search(v).is_ok());
    let facets: Vec<Vec<usize>> =
        candidates.iter().filter(|a| !candidates.iter().any(|b| is_subset(a, b))).cloned().collect();
    let mut edges = BTreeSet::new();
    for f in &facets {
        for (i, &a) in f.iter().enumerate() {
            for &b in &f[i + 1..] {
                edges.insert((a, b));
            }
        }
    }
    NerveComplex { vertex_count: charts.len(), facets, edges }
}
