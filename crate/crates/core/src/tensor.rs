//! Minkowski four-vectors, symmetric rank-2 tensors and pure Lorentz boosts.
//!
//! Signature is `(+,-,-,-)`; index 0 is the time component.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance on `U^μU_μ / c²` for a valid four-velocity.
pub const FOUR_VELOCITY_TOL: f64 = 1e-8;

/// Below this `|U|/c` the boost is the identity.
const REST_THRESHOLD: f64 = 1e-14;

/// Speed of light, Boltzmann and Planck constants in code units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalConstants {
    pub c: f64,
    pub k: f64,
    pub h: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { c: 1.0, k: 1.0, h: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(c: f64, k: f64, h: f64) -> Result<Self> {
        let consts = Self { c, k, h };
        consts.validate()?;
        Ok(consts)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c", self.c), ("k", self.k), ("h", self.h)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("constant {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Contravariant four-vector `a^μ`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub const ZERO: FourVector = FourVector([0.0; 4]);

    pub fn new(a0: f64, a1: f64, a2: f64, a3: f64) -> Self {
        Self([a0, a1, a2, a3])
    }

    /// Four-momentum on the mass shell `p^μp_μ = (cm)²`.
    pub fn on_mass_shell(mass: f64, c: f64, p: [f64; 3]) -> Self {
        let p0 = ((c * mass).powi(2) + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        Self([p0, p[0], p[1], p[2]])
    }

    /// Four-velocity `(√(c²+|u|²), u)` from its spatial part.
    pub fn four_velocity(u: [f64; 3], c: f64) -> Self {
        let u0 = (c * c + u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        Self([u0, u[0], u[1], u[2]])
    }

    /// Four-velocity of a fluid moving with ordinary velocity `v` (`|v| < c`).
    pub fn from_three_velocity(v: [f64; 3], c: f64) -> Result<Self> {
        let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if v2 >= c * c {
            return Err(Error::Domain(format!("|v| = {} is not below c = {c}", v2.sqrt())));
        }
        let gamma = 1.0 / (1.0 - v2 / (c * c)).sqrt();
        Ok(Self([gamma * c, gamma * v[0], gamma * v[1], gamma * v[2]]))
    }

    pub fn time(&self) -> f64 {
        self.0[0]
    }

    pub fn spatial(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    pub fn spatial_norm(&self) -> f64 {
        let s = self.spatial();
        (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt()
    }

    /// `a^μ b_μ = a⁰b⁰ − a·b`.
    pub fn dot(&self, other: &FourVector) -> f64 {
        minkowski_dot(self, other)
    }

    pub fn square(&self) -> f64 {
        minkowski_dot(self, self)
    }

    /// Lowered-index components `a_μ = η_{μν} a^ν`.
    pub fn lower(&self) -> [f64; 4] {
        [self.0[0], -self.0[1], -self.0[2], -self.0[3]]
    }

    pub fn max_abs_diff(&self, other: &FourVector) -> f64 {
        (0..4).map(|i| (self.0[i] - other.0[i]).abs()).fold(0.0, f64::max)
    }
}

impl Index<usize> for FourVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, rhs: FourVector) -> FourVector {
        FourVector(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl AddAssign for FourVector {
    fn add_assign(&mut self, rhs: FourVector) {
        for i in 0..4 {
            self.0[i] += rhs.0[i];
        }
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, rhs: FourVector) -> FourVector {
        FourVector(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl Neg for FourVector {
    type Output = FourVector;
    fn neg(self) -> FourVector {
        FourVector(self.0.map(|x| -x))
    }
}

impl Mul<f64> for FourVector {
    type Output = FourVector;
    fn mul(self, s: f64) -> FourVector {
        FourVector(self.0.map(|x| x * s))
    }
}

impl Mul<FourVector> for f64 {
    type Output = FourVector;
    fn mul(self, v: FourVector) -> FourVector {
        v * self
    }
}

/// Minkowski inner product `a⁰b⁰ − a·b`.
pub fn minkowski_dot(a: &FourVector, b: &FourVector) -> f64 {
    a.0[0] * b.0[0] - a.0[1] * b.0[1] - a.0[2] * b.0[2] - a.0[3] * b.0[3]
}

/// Symmetric contravariant tensor `T^{μν}` stored as a full 4×4 array.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymmetricTensor(pub [[f64; 4]; 4]);

impl SymmetricTensor {
    pub fn get(&self, mu: usize, nu: usize) -> f64 {
        self.0[mu][nu]
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for mu in 0..4 {
            for nu in 0..4 {
                worst = worst.max((self.0[mu][nu] - self.0[nu][mu]).abs());
            }
        }
        worst
    }
}

/// A Lorentz transformation acting on contravariant components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzBoost {
    matrix: [[f64; 4]; 4],
}

impl LorentzBoost {
    pub fn identity() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { matrix: m }
    }

    pub fn from_matrix(matrix: [[f64; 4]; 4]) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &[[f64; 4]; 4] {
        &self.matrix
    }

    /// Pure boost taking the four-velocity `u` to `(c, 0, 0, 0)`.
    ///
    /// Built from the normalized `u^μ/c`, so it is valid in any unit system.
    pub fn to_rest_frame(u: &FourVector, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Domain(format!("c must be positive, got {c}")));
        }
        let ratio = u.square() / (c * c);
        if !ratio.is_finite() || (ratio - 1.0).abs() > FOUR_VELOCITY_TOL || u.time() <= 0.0 {
            return Err(Error::InvalidFourVelocity { ratio });
        }
        let w = u.spatial().map(|x| x / c);
        let w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        if w2.sqrt() < REST_THRESHOLD {
            return Ok(Self::identity());
        }
        // γ from the spatial part keeps the matrix exactly Lorentz even when
        // U⁰ carries quadrature noise.
        let gamma = (1.0 + w2).sqrt();
        // (γ − 1)/|w|² written without cancellation.
        let k = 1.0 / (gamma + 1.0);
        let mut m = [[0.0; 4]; 4];
        m[0][0] = gamma;
        for i in 0..3 {
            m[0][i + 1] = -w[i];
            m[i + 1][0] = -w[i];
            for j in 0..3 {
                m[i + 1][j + 1] = if i == j { 1.0 } else { 0.0 } + k * w[i] * w[j];
            }
        }
        Ok(Self { matrix: m })
    }

    pub fn apply(&self, a: &FourVector) -> FourVector {
        apply_boost(self, a)
    }

    /// Matrix product `self · other` (apply `other` first).
    pub fn compose(&self, other: &LorentzBoost) -> LorentzBoost {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = (0..4).map(|k| self.matrix[i][k] * other.matrix[k][j]).sum();
            }
        }
        LorentzBoost { matrix: m }
    }

    /// Largest entrywise deviation of `ΛᵀηΛ` from `η`.
    pub fn metric_defect(&self) -> f64 {
        let eta = [1.0, -1.0, -1.0, -1.0];
        let mut worst = 0.0_f64;
        for mu in 0..4 {
            for nu in 0..4 {
                let v: f64 = (0..4)
                    .map(|a| self.matrix[a][mu] * eta[a] * self.matrix[a][nu])
                    .sum();
                let target = if mu == nu { eta[mu] } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    pub fn determinant(&self) -> f64 {
        det4(&self.matrix)
    }

    pub fn max_abs_diff(&self, other: &LorentzBoost) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.matrix[i][j] - other.matrix[i][j]).abs());
            }
        }
        worst
    }
}

/// Boost taking `u` to its rest frame. See [`LorentzBoost::to_rest_frame`].
pub fn boost_to_rest_frame(u: &FourVector, c: f64) -> Result<LorentzBoost> {
    LorentzBoost::to_rest_frame(u, c)
}

pub fn apply_boost(boost: &LorentzBoost, a: &FourVector) -> FourVector {
    let m = &boost.matrix;
    FourVector(std::array::from_fn(|i| {
        m[i][0] * a.0[0] + m[i][1] * a.0[1] + m[i][2] * a.0[2] + m[i][3] * a.0[3]
    }))
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let mut det = 0.0;
    for col in 0..4 {
        let minor: [[f64; 3]; 3] = std::array::from_fn(|r| {
            let mut row = [0.0; 3];
            let mut k = 0;
            for c in 0..4 {
                if c != col {
                    row[k] = m[r + 1][c];
                    k += 1;
                }
            }
            row
        });
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        det += sign * m[0][col] * det3(minor);
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_velocity(rng: &mut ChaCha8Rng, c: f64, max_speed: f64) -> FourVector {
        loop {
            let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0) * max_speed * c);
            if v.iter().map(|x| x * x).sum::<f64>() < (max_speed * c).powi(2) {
                return FourVector::from_three_velocity(v, c).unwrap();
            }
        }
    }

    #[test]
    fn dot_of_unit_time_vector() {
        let e = FourVector::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(minkowski_dot(&e, &e), 1.0);
    }

    #[test]
    fn mass_shell_square() {
        let p = FourVector::on_mass_shell(1.0, 1.0, [0.3, 0.4, 0.0]);
        assert!((p.square() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rest_velocity_gives_identity() {
        for c in [1.0, 3.0e8] {
            let u = FourVector::new(c, 0.0, 0.0, 0.0);
            let b = boost_to_rest_frame(&u, c).unwrap();
            assert_eq!(b, LorentzBoost::identity());
        }
    }

    #[test]
    fn rejects_off_shell_velocity() {
        let u = FourVector::new(1.0, 0.5, 0.0, 0.0);
        assert!(matches!(
            boost_to_rest_frame(&u, 1.0),
            Err(Error::InvalidFourVelocity { .. })
        ));
    }

    #[test]
    fn identity_apply_is_noop() {
        let a = FourVector::new(1.5, -0.2, 3.0, 0.7);
        assert_eq!(LorentzBoost::identity().apply(&a), a);
    }

    #[test]
    fn boost_preserves_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let u = random_velocity(&mut rng, 1.0, 0.99);
            let b = boost_to_rest_frame(&u, 1.0).unwrap();
            let a = FourVector(std::array::from_fn(|_| rng.gen_range(-5.0..5.0)));
            let d = FourVector(std::array::from_fn(|_| rng.gen_range(-5.0..5.0)));
            let before = a.dot(&d);
            let after = b.apply(&a).dot(&b.apply(&d));
            let scale = a.0.iter().chain(d.0.iter()).map(|x| x * x).sum::<f64>();
            assert!((before - after).abs() <= 1e-12 * scale, "{before} vs {after}");
        }
    }

    #[test]
    fn boost_is_lorentz_and_maps_to_rest() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for c in [1.0, 2.5] {
            for _ in 0..100 {
                let u = random_velocity(&mut rng, c, 0.99);
                let b = boost_to_rest_frame(&u, c).unwrap();
                assert!(b.metric_defect() < 1e-12 * (u.time() / c).powi(2));
                let rest = b.apply(&u);
                assert!(rest.max_abs_diff(&FourVector::new(c, 0.0, 0.0, 0.0)) <= 1e-10 * c);
            }
        }
    }

    #[test]
    fn boosted_momentum_stays_on_shell() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let u = random_velocity(&mut rng, 1.0, 0.9);
            let b = boost_to_rest_frame(&u, 1.0).unwrap();
            let m = rng.gen_range(0.5..4.0);
            let p = FourVector::on_mass_shell(m, 1.0, std::array::from_fn(|_| rng.gen_range(-3.0..3.0)));
            let q = b.apply(&p);
            let s = q.spatial();
            let expected = (m * m + s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
            assert!((q.time() - expected).abs() < 1e-12 * expected);
        }
    }

    proptest! {
        #[test]
        fn determinant_and_inverse(speed in 0.0f64..0.95, theta in 0.0..std::f64::consts::PI, phi in 0.0..std::f64::consts::TAU) {
            let c = 1.0;
            let v = [speed * theta.sin() * phi.cos(), speed * theta.sin() * phi.sin(), speed * theta.cos()];
            let u = FourVector::from_three_velocity(v, c).unwrap();
            let b = boost_to_rest_frame(&u, c).unwrap();
            prop_assert!((b.determinant().abs() - 1.0).abs() < 1e-10);
            let back = FourVector::new(u[0], -u[1], -u[2], -u[3]);
            let inv = boost_to_rest_frame(&back, c).unwrap();
            prop_assert!(inv.compose(&b).max_abs_diff(&LorentzBoost::identity()) < 1e-10);
            let rest = b.apply(&u);
            prop_assert!(rest.max_abs_diff(&FourVector::new(c, 0.0, 0.0, 0.0)) < 1e-10 * c);
        }
    }
}
