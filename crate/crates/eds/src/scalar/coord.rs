//! Chart coordinates: independent base variables, fibre variables, jets up to
//! order 3, and auxiliary difference coordinates such as xi = u - q.

use std::fmt;

use serde::Serialize;

pub const MAX_JET_ORDER: u8 = 3;

/// The two independent directions for jets and total derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Direction {
    X,
    T,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::X => write!(f, "x"),
            Direction::T => write!(f, "t"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum CoordKind {
    /// An independent base coordinate (x or t).
    Independent,
    /// A fibre coordinate depending on the base (u, p, q, y, v, ...).
    Fibre,
    /// Jet of a fibre coordinate: `base` differentiated `xs` times in x and
    /// `ts` times in t.
    Jet { base: String, xs: u8, ts: u8 },
    /// Auxiliary coordinate defined as `minuend - subtrahend`, admitted so
    /// that fractional powers of differences stay single power products.
    Aux { minuend: String, subtrahend: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Coordinate {
    pub name: String,
    pub kind: CoordKind,
}

impl Coordinate {
    pub fn independent(name: &str) -> Self {
        Coordinate { name: name.to_string(), kind: CoordKind::Independent }
    }

    pub fn fibre(name: &str) -> Self {
        Coordinate { name: name.to_string(), kind: CoordKind::Fibre }
    }

    pub fn aux(name: &str, minuend: &str, subtrahend: &str) -> Self {
        Coordinate {
            name: name.to_string(),
            kind: CoordKind::Aux {
                minuend: minuend.to_string(),
                subtrahend: subtrahend.to_string(),
            },
        }
    }

    pub fn jet(base: &str, xs: u8, ts: u8) -> Self {
        assert!(xs + ts <= MAX_JET_ORDER, "jet order above {}", MAX_JET_ORDER);
        assert!(xs + ts > 0, "zeroth jet is the base coordinate itself");
        let mut name = format!("{}_", base);
        for _ in 0..xs {
            name.push('x');
        }
        for _ in 0..ts {
            name.push('t');
        }
        Coordinate { name, kind: CoordKind::Jet { base: base.to_string(), xs, ts } }
    }

    pub fn jet_order(&self) -> u8 {
        match &self.kind {
            CoordKind::Jet { xs, ts, .. } => xs + ts,
            _ => 0,
        }
    }

    /// The jet obtained by one more total derivative in `dir`; None when the
    /// order cap would be exceeded.
    pub fn jet_successor(&self, dir: Direction) -> Option<Coordinate> {
        let (base, xs, ts) = match &self.kind {
            CoordKind::Fibre => (self.name.as_str(), 0u8, 0u8),
            CoordKind::Jet { base, xs, ts } => (base.as_str(), *xs, *ts),
            _ => return None,
        };
        let (xs, ts) = match dir {
            Direction::X => (xs + 1, ts),
            Direction::T => (xs, ts + 1),
        };
        if xs + ts > MAX_JET_ORDER {
            return None;
        }
        Some(Coordinate::jet(base, xs, ts))
    }
}

// deterministic order: lexicographic on name as the final tie-break
impl PartialOrd for Coordinate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Coordinate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.name.cmp(&other.name)
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}
