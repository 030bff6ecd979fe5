use crate::error::{Error, Result};

/// Shape of a rigid obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Circle { radius: f64 },
}

/// Prescribed rigid motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Motion {
    Fixed,
    /// Horizontal velocity `alpha * 2 sin(t/2)`, starting from rest.
    Oscillating { alpha: f64 },
}

/// Rigid body described by a signed-distance levelset, positive in the fluid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSetBody {
    pub shape: Shape,
    pub center0: [f64; 2],
    pub motion: Motion,
}

impl LevelSetBody {
    pub fn circle(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidBody(format!("radius must be positive, got {radius}")));
        }
        Ok(LevelSetBody {
            shape: Shape::Circle { radius },
            center0: center,
            motion: Motion::Fixed,
        })
    }

    pub fn with_motion(mut self, motion: Motion) -> Self {
        self.motion = motion;
        self
    }

    pub fn radius(&self) -> f64 {
        match self.shape {
            Shape::Circle { radius } => radius,
        }
    }

    pub fn is_moving(&self) -> bool {
        match self.motion {
            Motion::Fixed => false,
            Motion::Oscillating { alpha } => alpha != 0.0,
        }
    }

    /// Center at time `t`, from the closed-form integral of the velocity law.
    pub fn center(&self, t: f64) -> [f64; 2] {
        match self.motion {
            Motion::Fixed => self.center0,
            Motion::Oscillating { alpha } => [
                self.center0[0] + alpha * 4.0 * (1.0 - (0.5 * t).cos()),
                self.center0[1],
            ],
        }
    }

    pub fn velocity(&self, t: f64) -> [f64; 2] {
        match self.motion {
            Motion::Fixed => [0.0, 0.0],
            Motion::Oscillating { alpha } => [alpha * 2.0 * (0.5 * t).sin(), 0.0],
        }
    }

    pub fn levelset(&self, p: [f64; 2], t: f64) -> f64 {
        self.at(t).phi(p)
    }

    /// Frozen placement at time `t`.
    pub fn at(&self, t: f64) -> BodyState {
        BodyState {
            center: self.center(t),
            radius: self.radius(),
            velocity: self.velocity(t),
        }
    }

    /// Checks that the closed body stays strictly inside `bounds` for all
    /// `t` in `[0, t_end]`.
    pub fn check_inside(&self, bounds: [f64; 4], t_end: f64) -> Result<()> {
        let (lo, hi) = self.x_range(t_end);
        let r = self.radius();
        let cy = self.center0[1];
        if lo - r <= bounds[0] || hi + r >= bounds[1] || cy - r <= bounds[2] || cy + r >= bounds[3] {
            return Err(Error::InvalidBody(format!(
                "body (x in [{:.4}, {:.4}], y in [{:.4}, {:.4}]) leaves or touches the domain",
                lo - r,
                hi + r,
                cy - r,
                cy + r
            )));
        }
        Ok(())
    }

    /// Extreme center abscissae over `[0, t_end]`.
    fn x_range(&self, t_end: f64) -> (f64, f64) {
        let x0 = self.center0[0];
        match self.motion {
            Motion::Fixed => (x0, x0),
            Motion::Oscillating { alpha } => {
                let t_end = t_end.max(0.0);
                // 1 - cos(t/2) peaks at t = 2 pi (mod 4 pi)
                let peak = if t_end >= 2.0 * std::f64::consts::PI {
                    2.0
                } else {
                    1.0 - (0.5 * t_end).cos()
                };
                let far = x0 + alpha * 4.0 * peak;
                (x0.min(far), x0.max(far))
            }
        }
    }
}

/// A body frozen at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub center: [f64; 2],
    pub radius: f64,
    pub velocity: [f64; 2],
}

impl BodyState {
    /// Exact signed distance, positive in the fluid.
    pub fn phi(&self, p: [f64; 2]) -> f64 {
        (p[0] - self.center[0]).hypot(p[1] - self.center[1]) - self.radius
    }

    /// Intersection of the boundary with the axis-aligned segment
    /// `{coord[axis] in [lo, hi], coord[1-axis] = fixed}`, assuming exactly
    /// one crossing. Returns the coordinate along `axis`, clamped to the segment.
    pub fn root_on_segment(&self, axis: usize, fixed: f64, lo: f64, hi: f64) -> f64 {
        let other = 1 - axis;
        let d = fixed - self.center[other];
        let s2 = self.radius * self.radius - d * d;
        let c = self.center[axis];
        if s2 <= 0.0 {
            return c.clamp(lo, hi);
        }
        let s = s2.sqrt();
        let (r1, r2) = (c - s, c + s);
        let dist = |r: f64| {
            if r < lo {
                lo - r
            } else if r > hi {
                r - hi
            } else {
                0.0
            }
        };
        let r = if dist(r1) <= dist(r2) { r1 } else { r2 };
        r.clamp(lo, hi)
    }

    /// Bisection root of the levelset on the segment, to `tol` absolute.
    /// Used to cross-check the analytic intersection.
    pub fn root_bisect(&self, axis: usize, fixed: f64, lo: f64, hi: f64, tol: f64) -> f64 {
        let at = |s: f64| {
            let mut p = [0.0; 2];
            p[axis] = s;
            p[1 - axis] = fixed;
            self.phi(p)
        };
        let (mut a, mut b) = (lo, hi);
        let fa = at(a);
        while b - a > tol {
            let m = 0.5 * (a + b);
            if (at(m) < 0.0) == (fa < 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn levelset_examples() {
        let b = LevelSetBody::circle([0.0, 0.0], 0.5).unwrap();
        assert_eq!(b.levelset([1.0, 0.0], 0.0), 0.5);
        assert_eq!(b.levelset([0.5, 0.0], 0.0), 0.0);
        let m = b.with_motion(Motion::Oscillating { alpha: 0.25 });
        for k in 0..20 {
            let t = 0.37 * k as f64;
            let c = m.center(t);
            assert!(m.levelset([c[0] + 0.5, 0.0], t).abs() < 1e-15);
        }
        assert!(LevelSetBody::circle([0.0, 0.0], -1.0).is_err());
    }

    #[test]
    fn velocity_law() {
        let b = LevelSetBody::circle([0.0, 0.0], 0.5)
            .unwrap()
            .with_motion(Motion::Oscillating { alpha: 1.0 });
        assert_eq!(b.velocity(0.0), [0.0, 0.0]);
        let v = b.velocity(PI);
        assert!((v[0] - 2.0).abs() < 1e-15 && v[1] == 0.0);
        let f = LevelSetBody::circle([0.0, 0.0], 0.5).unwrap();
        assert_eq!(f.velocity(3.3), [0.0, 0.0]);
    }

    #[test]
    fn center_integrates_velocity() {
        let b = LevelSetBody::circle([0.3, 0.0], 0.5)
            .unwrap()
            .with_motion(Motion::Oscillating { alpha: 0.25 });
        // composite Simpson on the velocity law
        let t = 2.7;
        let n = 2000;
        let h = t / n as f64;
        let mut s = b.velocity(0.0)[0] + b.velocity(t)[0];
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * b.velocity(k as f64 * h)[0];
        }
        let disp = s * h / 3.0;
        assert!((b.center(t)[0] - 0.3 - disp).abs() < 1e-12);
    }

    #[test]
    fn trajectory_must_stay_inside() {
        let b = LevelSetBody::circle([0.0, 0.0], 0.5)
            .unwrap()
            .with_motion(Motion::Oscillating { alpha: 0.25 });
        let bounds = [-3.0, 3.0, -1.0, 1.0];
        // centered start reaches x = 2 + 0.5 < 3
        assert!(b.check_inside(bounds, 10.0).is_ok());
        let far = b.with_motion(Motion::Oscillating { alpha: 1.0 });
        assert!(far.check_inside(bounds, 10.0).is_err());
        assert!(far.check_inside(bounds, 0.5).is_ok());
        let touching = LevelSetBody::circle([0.0, 0.5], 0.5).unwrap();
        assert!(touching.check_inside(bounds, 0.0).is_err());
    }

    #[test]
    fn analytic_root_matches_bisection() {
        let b = LevelSetBody::circle([0.1, -0.05], 0.45).unwrap().at(0.0);
        for k in 0..50 {
            let x = -0.3 + 0.013 * k as f64;
            let lo = -0.05;
            let hi = 0.7;
            if (b.phi([x, lo]) < 0.0) != (b.phi([x, hi]) < 0.0) {
                let r = b.root_on_segment(1, x, lo, hi);
                let rb = b.root_bisect(1, x, lo, hi, 1e-13);
                assert!((r - rb).abs() < 1e-12, "{r} {rb}");
            }
        }
    }
}
