/// Speed of light in atomic units (CODATA value of 1/alpha).
pub const SPEED_OF_LIGHT_AU: f64 = 137.035999084;

/// Atomic-unit constants shared by the non-relativistic and relativistic solvers.
///
/// Lengths are in Bohr, energies in Hartree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
    pub c: f64,
}

impl PhysicalConstants {
    pub const fn atomic() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            c: SPEED_OF_LIGHT_AU,
        }
    }

    /// Rest energy m c^2.
    pub fn rest_energy(&self) -> f64 {
        self.mass * self.c * self.c
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::atomic()
    }
}
