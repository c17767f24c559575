use serde::{Deserialize, Serialize};

/// Quarter-turn rotations; the only orientations a lattice uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuarterRotation {
    R0,
    R90,
    R180,
    R270,
}

impl QuarterRotation {
    fn apply(self, p: [f64; 2]) -> [f64; 2] {
        match self {
            QuarterRotation::R0 => p,
            QuarterRotation::R90 => [-p[1], p[0]],
            QuarterRotation::R180 => [-p[0], -p[1]],
            QuarterRotation::R270 => [p[1], -p[0]],
        }
    }

    fn inverse(self) -> Self {
        match self {
            QuarterRotation::R0 => QuarterRotation::R0,
            QuarterRotation::R90 => QuarterRotation::R270,
            QuarterRotation::R180 => QuarterRotation::R180,
            QuarterRotation::R270 => QuarterRotation::R90,
        }
    }
}

/// Rigid, orientation-preserving map from a reference domain into the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformationMap {
    pub rotation: QuarterRotation,
    pub translation: [f64; 2],
}

impl TransformationMap {
    pub fn translation(t: [f64; 2]) -> Self {
        Self {
            rotation: QuarterRotation::R0,
            translation: t,
        }
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let r = self.rotation.apply(p);
        [r[0] + self.translation[0], r[1] + self.translation[1]]
    }

    pub fn inverse(&self) -> Self {
        let rot = self.rotation.inverse();
        let t = rot.apply([-self.translation[0], -self.translation[1]]);
        Self {
            rotation: rot,
            translation: t,
        }
    }
}
