//! Functions constant on the cells of a fixed precision level.

use std::collections::{BTreeMap, HashSet};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::manifold::{ManifoldModel, Point, Region, SheetId};
use crate::symbolic::RationalSymbolic;
use crate::tree::Ball;

/// Value domain of a [`CellFunction`].
pub trait CellValue: Clone + PartialEq + Send + Sync + std::fmt::Debug {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
}

impl CellValue for RationalSymbolic {
    fn zero() -> Self {
        RationalSymbolic::zero()
    }

    fn is_zero(&self) -> bool {
        RationalSymbolic::is_zero(self)
    }
}

impl CellValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

/// A function on the level-`precision` cells of every sheet. Missing cells are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CellFunction<V> {
    precision: usize,
    values: BTreeMap<Point, V>,
}

pub type ExactCellFunction = CellFunction<RationalSymbolic>;
pub type NumericCellFunction = CellFunction<Complex64>;

impl<V: CellValue> CellFunction<V> {
    pub fn new(precision: usize) -> Self {
        CellFunction { precision, values: BTreeMap::new() }
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn insert(&mut self, point: Point, value: V) -> Result<()> {
        if point.cell.level() != self.precision {
            return Err(Error::InvalidCellFunction {
                path: point.to_string(),
                reason: format!("cell level {} differs from precision {}", point.cell.level(), self.precision),
            });
        }
        self.values.insert(point, value);
        Ok(())
    }

    pub fn get(&self, point: &Point) -> V {
        self.values.get(point).cloned().unwrap_or_else(V::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, &V)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Drops explicit zeros, so that equal functions compare equal.
    pub fn normalized(&self) -> Self {
        CellFunction {
            precision: self.precision,
            values: self.values.iter().filter(|(_, v)| !v.is_zero()).map(|(k, v)| (k.clone(), v.clone())).collect(),
        }
    }

    pub fn map<W: CellValue>(&self, f: impl Fn(&V) -> W) -> CellFunction<W> {
        CellFunction { precision: self.precision, values: self.values.iter().map(|(k, v)| (k.clone(), f(v))).collect() }
    }

    /// Checks sheets and digits against the model.
    pub fn validate(&self, model: &ManifoldModel) -> Result<()> {
        for (i, point) in self.values.keys().enumerate() {
            if model.sheet(point.sheet).is_none() {
                return Err(Error::InvalidCellFunction {
                    path: format!("values[{i}].sheet"),
                    reason: format!("unknown sheet id {}", point.sheet),
                });
            }
            model
                .structure()
                .check_ball(&point.cell)
                .map_err(|reason| Error::InvalidCellFunction { path: format!("values[{i}].cell"), reason })?;
        }
        Ok(())
    }
}

impl<V: CellValue> FromIterator<(Point, V)> for CellFunction<V> {
    /// Precision is taken from the first cell; an empty iterator gives precision 0.
    fn from_iter<I: IntoIterator<Item = (Point, V)>>(iter: I) -> Self {
        let values: BTreeMap<Point, V> = iter.into_iter().collect();
        let precision = values.keys().next().map_or(0, |p| p.cell.level());
        CellFunction { precision, values }
    }
}

impl ExactCellFunction {
    /// Values with `Q = q` substituted, zeros dropped. Compare exact results through this.
    pub fn specialize_q(&self, q: u64) -> Self {
        self.map(|v| v.specialize_q(q)).normalized()
    }
}

/// A cell function in either exact or numeric mode.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyCellFunction {
    Exact(ExactCellFunction),
    Numeric(NumericCellFunction),
}

impl AnyCellFunction {
    pub fn precision(&self) -> usize {
        match self {
            AnyCellFunction::Exact(f) => f.precision(),
            AnyCellFunction::Numeric(f) => f.precision(),
        }
    }
}

/// A ball of one sheet on which a cell function is constant.
#[derive(Clone, Debug)]
pub(crate) struct Piece<V> {
    pub sheet: SheetId,
    pub ball: Ball,
    pub density_exp: i64,
    pub value: V,
    /// True when the piece is a cell listed in the source function.
    pub listed: bool,
}

/// Coarsest ball partition of the model on which `u` is constant and which
/// refines every `marker` region.
///
/// Listed cells become pieces of their own; everything else is covered by
/// the unlisted siblings along the paths to the markers.
pub(crate) fn partition<V: CellValue>(model: &ManifoldModel, u: &CellFunction<V>, markers: &[Region]) -> Vec<Piece<V>> {
    let branching = model.structure().branching();
    let mut pieces = Vec::new();
    for sheet in model.sheets() {
        let listed: BTreeMap<&Ball, &V> = u
            .values
            .range(Point::new(sheet.id, Ball::root())..)
            .take_while(|(p, _)| p.sheet == sheet.id)
            .map(|(p, v)| (&p.cell, v))
            .collect();
        let mut nodes: HashSet<Ball> = HashSet::new();
        let marker_balls =
            listed.keys().copied().chain(markers.iter().filter(|r| r.sheet == sheet.id).map(|r| &r.ball));
        for ball in marker_balls {
            for l in 0..=ball.level() {
                nodes.insert(ball.truncate(l));
            }
        }
        let mut stack = vec![Ball::root()];
        let mut sheet_pieces = Vec::new();
        while let Some(ball) = stack.pop() {
            if let Some(v) = listed.get(&ball) {
                sheet_pieces.push(Piece {
                    sheet: sheet.id,
                    ball,
                    density_exp: sheet.density_exp,
                    value: (*v).clone(),
                    listed: true,
                });
                continue;
            }
            let has_inner = ball.children(branching).any(|c| nodes.contains(&c));
            if !has_inner {
                sheet_pieces.push(Piece {
                    sheet: sheet.id,
                    ball,
                    density_exp: sheet.density_exp,
                    value: V::zero(),
                    listed: false,
                });
                continue;
            }
            for c in ball.children(branching) {
                if nodes.contains(&c) {
                    stack.push(c);
                } else {
                    sheet_pieces.push(Piece {
                        sheet: sheet.id,
                        ball: c,
                        density_exp: sheet.density_exp,
                        value: V::zero(),
                        listed: false,
                    });
                }
            }
        }
        sheet_pieces.sort_by(|a, b| a.ball.cmp(&b.ball));
        pieces.extend(sheet_pieces);
    }
    pieces
}

/// Upper bound on cells produced when expanding coarse pieces.
pub const MAX_EXPANDED_CELLS: u64 = 10_000_000;

/// Turns piece values back into a cell function at `precision`. Listed cells
/// are always emitted; other pieces only when nonzero.
pub(crate) fn expand<V: CellValue>(
    model: &ManifoldModel,
    pieces: &[Piece<V>],
    values: Vec<V>,
    precision: usize,
) -> Result<CellFunction<V>> {
    let st = model.structure();
    let mut out = CellFunction::new(precision);
    let mut budget = MAX_EXPANDED_CELLS;
    for (piece, value) in pieces.iter().zip(values) {
        if piece.listed || piece.ball.level() == precision {
            if piece.listed || !value.is_zero() {
                out.values.insert(Point::new(piece.sheet, piece.ball.clone()), value);
            }
            continue;
        }
        if value.is_zero() {
            continue;
        }
        let depth = (precision - piece.ball.level()) as u32;
        let count = (st.branching() as u64).checked_pow(depth).filter(|c| *c <= budget);
        let Some(count) = count else {
            return Err(Error::TooManyCells { limit: MAX_EXPANDED_CELLS });
        };
        budget -= count;
        for cell in st.descendants(&piece.ball, precision) {
            out.values.insert(Point::new(piece.sheet, cell), value.clone());
        }
    }
    Ok(out)
}
