use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the plane (cm).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl Point2 {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Point2 { x1, x2 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x1 - other.x1).hypot(self.x2 - other.x2)
    }

    pub fn offset(&self, d1: f64, d2: f64) -> Point2 {
        Point2::new(self.x1 + d1, self.x2 + d2)
    }
}

/// Axis-aligned rectangle `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectDomain {
    lower: Point2,
    upper: Point2,
}

impl RectDomain {
    pub fn new(lower: Point2, upper: Point2) -> Result<Self> {
        if !lower.is_finite()
            || !upper.is_finite()
            || !(upper.x1 > lower.x1)
            || !(upper.x2 > lower.x2)
        {
            return Err(Error::domain(format!(
                "degenerate rectangle: lower {lower:?}, upper {upper:?}"
            )));
        }
        Ok(RectDomain { lower, upper })
    }

    pub fn unit_square() -> Self {
        RectDomain {
            lower: Point2::new(0.0, 0.0),
            upper: Point2::new(1.0, 1.0),
        }
    }

    pub fn lower(&self) -> Point2 {
        self.lower
    }

    pub fn upper(&self) -> Point2 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper.x1 - self.lower.x1
    }

    pub fn height(&self) -> f64 {
        self.upper.x2 - self.lower.x2
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.lower.x1 + self.upper.x1),
            0.5 * (self.lower.x2 + self.upper.x2),
        )
    }

    /// Closed-set membership.
    pub fn contains(&self, p: &Point2) -> bool {
        p.x1 >= self.lower.x1
            && p.x1 <= self.upper.x1
            && p.x2 >= self.lower.x2
            && p.x2 <= self.upper.x2
    }

    pub fn contains_strictly(&self, p: &Point2) -> bool {
        p.x1 > self.lower.x1 && p.x1 < self.upper.x1 && p.x2 > self.lower.x2 && p.x2 < self.upper.x2
    }

    /// Euclidean distance from `p` to the rectangle (zero inside).
    pub fn distance_to(&self, p: &Point2) -> f64 {
        let d1 = (self.lower.x1 - p.x1).max(0.0).max(p.x1 - self.upper.x1);
        let d2 = (self.lower.x2 - p.x2).max(0.0).max(p.x2 - self.upper.x2);
        d1.hypot(d2)
    }

    /// Corners in counter-clockwise order starting at `lower`.
    pub fn corners(&self) -> [Point2; 4] {
        let (l, u) = (self.lower, self.upper);
        [l, Point2::new(u.x1, l.x2), u, Point2::new(l.x1, u.x2)]
    }

    /// Splits into four congruent quarters.
    pub fn quarters(&self) -> [RectDomain; 4] {
        let c = self.center();
        let (l, u) = (self.lower, self.upper);
        [
            RectDomain { lower: l, upper: c },
            RectDomain {
                lower: Point2::new(c.x1, l.x2),
                upper: Point2::new(u.x1, c.x2),
            },
            RectDomain { lower: c, upper: u },
            RectDomain {
                lower: Point2::new(l.x1, c.x2),
                upper: Point2::new(c.x1, u.x2),
            },
        ]
    }
}
