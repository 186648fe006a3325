//! Ground-truth simulators with exact binary state encodings.

use itertools::Itertools;

use crate::bits::BitVector;

use super::DatasetError;

/// A deterministic transition system over `width`-bit states.
///
/// `apply` returns `None` exactly when the action is not applicable.
pub trait GroundTruthDomain: Send + Sync {
    fn name(&self) -> &str;
    fn width(&self) -> usize;
    fn action_count(&self) -> usize;
    fn apply(&self, state: &BitVector, action: usize) -> Option<BitVector>;
    fn goal_state(&self) -> BitVector;

    fn applicable(&self, state: &BitVector, action: usize) -> bool {
        self.apply(state, action).is_some()
    }

    fn applicable_actions(&self, state: &BitVector) -> Vec<usize> {
        (0..self.action_count())
            .filter(|&a| self.applicable(state, a))
            .collect()
    }

    /// Every state of the encoding, when the state space is small enough to list.
    fn states(&self) -> Option<Box<dyn Iterator<Item = BitVector> + '_>> {
        None
    }
}

/// Lights Out on an `n × n` grid. Bit `r·n + c` is the light at row `r`,
/// column `c`; action `r·n + c` presses that light.
#[derive(Debug, Clone)]
pub struct LightsOut {
    n: usize,
    name: String,
    masks: Vec<BitVector>,
}

pub fn make_lights_out(n: usize) -> Result<LightsOut, DatasetError> {
    if n < 2 {
        return Err(DatasetError::InvalidParameter(format!(
            "lights out grid side must be at least 2, got {n}"
        )));
    }
    let width = n * n;
    let masks = (0..width)
        .map(|cell| {
            let (r, c) = (cell / n, cell % n);
            let mut m = BitVector::zeros(width);
            m.set(cell, true);
            if r > 0 {
                m.set(cell - n, true);
            }
            if r + 1 < n {
                m.set(cell + n, true);
            }
            if c > 0 {
                m.set(cell - 1, true);
            }
            if c + 1 < n {
                m.set(cell + 1, true);
            }
            m
        })
        .collect();
    Ok(LightsOut {
        n,
        name: format!("lightsout{n}"),
        masks,
    })
}

impl LightsOut {
    pub fn side(&self) -> usize {
        self.n
    }

    /// Lights toggled by pressing `action`.
    pub fn mask(&self, action: usize) -> &BitVector {
        &self.masks[action]
    }
}

impl GroundTruthDomain for LightsOut {
    fn name(&self) -> &str {
        &self.name
    }

    fn width(&self) -> usize {
        self.n * self.n
    }

    fn action_count(&self) -> usize {
        self.n * self.n
    }

    fn apply(&self, state: &BitVector, action: usize) -> Option<BitVector> {
        self.masks.get(action).map(|m| state.xor(m))
    }

    fn applicable(&self, _state: &BitVector, action: usize) -> bool {
        action < self.action_count()
    }

    fn goal_state(&self) -> BitVector {
        BitVector::zeros(self.width())
    }

    fn states(&self) -> Option<Box<dyn Iterator<Item = BitVector> + '_>> {
        let width = self.width();
        if width > 24 {
            return None;
        }
        Some(Box::new(
            (0..1u64 << width).map(move |x| BitVector::from_u64(width, x)),
        ))
    }
}

/// Direction the blank moves in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

const DIRECTIONS: [Direction; 4] = [
    Direction::Up,
    Direction::Down,
    Direction::Left,
    Direction::Right,
];

/// The `side × side` sliding-tile puzzle in one-hot encoding: bit
/// `t·side² + p` is set iff tile `t` sits at position `p`. Tile 0 is the
/// blank. Action `4·p + d` moves the blank from position `p` in direction `d`
/// (up, down, left, right).
#[derive(Debug, Clone)]
pub struct SlidingPuzzle {
    side: usize,
    name: String,
}

pub fn make_sliding_puzzle(side: usize) -> Result<SlidingPuzzle, DatasetError> {
    if side < 2 {
        return Err(DatasetError::InvalidParameter(format!(
            "sliding puzzle side must be at least 2, got {side}"
        )));
    }
    Ok(SlidingPuzzle {
        side,
        name: format!("puzzle{side}"),
    })
}

impl SlidingPuzzle {
    pub fn side(&self) -> usize {
        self.side
    }

    fn cells(&self) -> usize {
        self.side * self.side
    }

    pub fn action(&self, position: usize, direction: Direction) -> usize {
        position * 4 + DIRECTIONS.iter().position(|&d| d == direction).unwrap()
    }

    /// Encodes `tiles[p] = tile at position p`.
    pub fn encode(&self, tiles: &[usize]) -> BitVector {
        let cells = self.cells();
        assert_eq!(tiles.len(), cells);
        BitVector::from_indices(
            cells * cells,
            tiles.iter().enumerate().map(|(p, &t)| t * cells + p),
        )
    }

    /// Inverse of [`SlidingPuzzle::encode`]; `None` if the vector is not a valid one-hot board.
    pub fn decode(&self, state: &BitVector) -> Option<Vec<usize>> {
        let cells = self.cells();
        if state.width() != cells * cells || state.count_ones() != cells {
            return None;
        }
        let mut tiles = vec![usize::MAX; cells];
        for bit in state.iter_ones() {
            let (t, p) = (bit / cells, bit % cells);
            if tiles[p] != usize::MAX {
                return None;
            }
            tiles[p] = t;
        }
        Some(tiles)
    }

    fn neighbor(&self, p: usize, d: Direction) -> Option<usize> {
        let (r, c) = (p / self.side, p % self.side);
        match d {
            Direction::Up if r > 0 => Some(p - self.side),
            Direction::Down if r + 1 < self.side => Some(p + self.side),
            Direction::Left if c > 0 => Some(p - 1),
            Direction::Right if c + 1 < self.side => Some(p + 1),
            _ => None,
        }
    }
}

impl GroundTruthDomain for SlidingPuzzle {
    fn name(&self) -> &str {
        &self.name
    }

    fn width(&self) -> usize {
        self.cells() * self.cells()
    }

    fn action_count(&self) -> usize {
        self.cells() * 4
    }

    fn apply(&self, state: &BitVector, action: usize) -> Option<BitVector> {
        let cells = self.cells();
        if action >= self.action_count() || state.width() != self.width() {
            return None;
        }
        let (p, d) = (action / 4, DIRECTIONS[action % 4]);
        // blank is tile 0, so its row of the encoding is bits 0..cells
        if !state.get(p) {
            return None;
        }
        let q = self.neighbor(p, d)?;
        let tile = (1..cells).find(|&t| state.get(t * cells + q))?;
        let mut next = state.clone();
        next.set(p, false);
        next.set(q, true);
        next.set(tile * cells + q, false);
        next.set(tile * cells + p, true);
        Some(next)
    }

    fn goal_state(&self) -> BitVector {
        let tiles: Vec<usize> = (0..self.cells()).collect();
        self.encode(&tiles)
    }

    fn states(&self) -> Option<Box<dyn Iterator<Item = BitVector> + '_>> {
        let cells = self.cells();
        if cells > 9 {
            return None;
        }
        Some(Box::new(
            (0..cells)
                .permutations(cells)
                .map(move |tiles| self.encode(&tiles)),
        ))
    }
}

/// Looks up a domain by its configuration name (`lightsout` or `puzzle`).
pub fn domain_by_name(name: &str, size: usize) -> Result<Box<dyn GroundTruthDomain>, DatasetError> {
    match name {
        "lightsout" | "lights_out" | "lights-out" => Ok(Box::new(make_lights_out(size)?)),
        "puzzle" | "sliding" | "sliding_puzzle" | "sliding-puzzle" => {
            Ok(Box::new(make_sliding_puzzle(size)?))
        }
        other => Err(DatasetError::InvalidParameter(format!(
            "unknown domain {other:?}"
        ))),
    }
}
