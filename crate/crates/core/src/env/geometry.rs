//! Straight multi-lane track geometry. Lanes run along +x; lane centers are
//! spaced one lane width apart with lane 0 centered at `y = 0`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneGeometry {
    pub lane_count: usize,
    pub lane_width: f64,
    pub track_length: f64,
}

impl Default for LaneGeometry {
    fn default() -> Self {
        Self {
            lane_count: 2,
            lane_width: 0.5,
            track_length: 20.0,
        }
    }
}

impl LaneGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.lane_count < 1 {
            return Err(Error::Config("lane_count must be at least 1".into()));
        }
        if !(self.lane_width > 0.0) || !(self.track_length > 0.0) {
            return Err(Error::Config("lane_width and track_length must be positive".into()));
        }
        Ok(())
    }

    /// Lateral coordinate of lane `l`'s center.
    pub fn lane_center(&self, lane: usize) -> f64 {
        lane as f64 * self.lane_width
    }

    /// Nearest lane to lateral coordinate `y`; ties go to the lower index.
    pub fn nearest_lane(&self, y: f64) -> usize {
        let mut best = 0;
        let mut best_dist = (y - self.lane_center(0)).abs();
        for l in 1..self.lane_count {
            let d = (y - self.lane_center(l)).abs();
            if d < best_dist {
                best = l;
                best_dist = d;
            }
        }
        best
    }

    /// Lateral band covered by the lanes (half a lane width beyond the
    /// outermost centers).
    pub fn lateral_bounds(&self) -> (f64, f64) {
        (
            -self.lane_width / 2.0,
            self.lane_center(self.lane_count - 1) + self.lane_width / 2.0,
        )
    }

    /// The lane an agent changes into from `lane`: the next lane up when it
    /// exists, otherwise the next lane down. `None` on a single-lane track.
    pub fn adjacent_lane(&self, lane: usize) -> Option<usize> {
        if lane + 1 < self.lane_count {
            Some(lane + 1)
        } else if lane > 0 {
            Some(lane - 1)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_are_ordered_and_spaced() {
        let g = LaneGeometry::default();
        assert_eq!(g.lane_center(0), 0.0);
        assert_eq!(g.lane_center(1), 0.5);
    }

    #[test]
    fn nearest_lane_ties_break_low() {
        let g = LaneGeometry::default();
        assert_eq!(g.nearest_lane(0.2), 0);
        assert_eq!(g.nearest_lane(0.3), 1);
        // Exactly in the middle: lower index wins.
        assert_eq!(g.nearest_lane(0.25), 0);
    }

    #[test]
    fn adjacent_lane_prefers_up() {
        let g = LaneGeometry::default();
        assert_eq!(g.adjacent_lane(0), Some(1));
        assert_eq!(g.adjacent_lane(1), Some(0));
        let single = LaneGeometry {
            lane_count: 1,
            ..LaneGeometry::default()
        };
        assert_eq!(single.adjacent_lane(0), None);
    }
}
