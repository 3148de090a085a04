use crate::error::{Error, Result};
use crate::geometry::{BoxCell, BoxPartition};
use crate::measure::space::Face;
use crate::scalar::Scalar;

/// A real function on `X` that depends only on the coordinates of one face,
/// stored as its representative on that face.
#[derive(Debug, Clone)]
pub struct EdgeFunction<T> {
    face: Face<T>,
    values: Vec<T>,
}

impl<T: Scalar> EdgeFunction<T> {
    pub fn new(face: Face<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != face.size() {
            return Err(Error::Shape(format!(
                "face {:?} has {} atoms but {} values were given",
                face.coords(),
                face.size(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { face, values })
    }

    /// Like [`EdgeFunction::new`] but also rejects negative values.
    pub fn nonnegative(face: Face<T>, values: Vec<T>) -> Result<Self> {
        let f = Self::new(face, values)?;
        f.require_nonnegative()?;
        Ok(f)
    }

    pub fn constant(face: Face<T>, c: T) -> Self {
        let values = vec![c; face.size()];
        Self { face, values }
    }

    pub fn from_fn(face: Face<T>, mut g: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let values = (0..face.size()).map(|i| g(&face.unflatten(i))).collect();
        Self::new(face, values)
    }

    pub fn face(&self) -> &Face<T> {
        &self.face
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn value_at(&self, digits: &[usize]) -> T {
        self.values[self.face.flatten(digits)]
    }

    pub fn require_nonnegative(&self) -> Result<()> {
        match self.values.iter().position(|&v| v < T::zero()) {
            Some(index) => Err(Error::Negative { index, value: self.values[index].to_f64_lossy() }),
            None => Ok(()),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= T::zero())
    }

    fn check_same_face(&self, other: &Self) -> Result<()> {
        if self.face.same_as(&other.face) {
            Ok(())
        } else {
            Err(Error::FaceMismatch(format!(
                "{:?} vs {:?}",
                self.face.coords(),
                other.face.coords()
            )))
        }
    }

    pub fn map(&self, g: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.face.clone(), self.values.iter().map(|&v| g(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, g: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same_face(other)?;
        Self::new(
            self.face.clone(),
            self.values.iter().zip(&other.values).map(|(&a, &b)| g(a, b)).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            face: self.face.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
        }
    }

    /// Multiplies by the indicator of an atom mask on the face.
    pub fn restrict(&self, mask: &[bool]) -> Self {
        Self {
            face: self.face.clone(),
            values: self
                .values
                .iter()
                .zip(mask)
                .map(|(&v, &m)| if m { v } else { T::zero() })
                .collect(),
        }
    }

    /// `∫_region f dμ`; `None` integrates over the whole space.
    pub fn integrate(&self, region: Option<&BoxCell<T>>) -> Result<T> {
        match region {
            None => Ok(self.integrate_mask(None)),
            Some(cell) => {
                if !cell.geometry().face().same_as(&self.face) {
                    return Err(Error::FaceMismatch(format!(
                        "cell lives on {:?}, function on {:?}",
                        cell.geometry().face().coords(),
                        self.face.coords()
                    )));
                }
                Ok(self.integrate_mask(Some(&cell.realize())))
            }
        }
    }

    pub fn integrate_mask(&self, mask: Option<&[bool]>) -> T {
        let w = self.face.weights();
        match mask {
            None => self.values.iter().zip(w).fold(T::zero(), |acc, (&v, &w)| acc + v * w),
            Some(m) => self
                .values
                .iter()
                .zip(w)
                .zip(m)
                .filter(|(_, &inside)| inside)
                .fold(T::zero(), |acc, ((&v, &w), _)| acc + v * w),
        }
    }

    pub fn mean(&self) -> T {
        self.integrate_mask(None)
    }

    /// Integrals of `f` over every cell of `partition`, in cell order.
    pub fn cell_integrals(&self, partition: &BoxPartition<T>) -> Result<Vec<T>> {
        if !partition.geometry().face().same_as(&self.face) {
            return Err(Error::FaceMismatch(format!(
                "partition lives on {:?}, function on {:?}",
                partition.geometry().face().coords(),
                self.face.coords()
            )));
        }
        let mut sums = vec![T::zero(); partition.len()];
        for ((&v, &w), &label) in self.values.iter().zip(self.face.weights()).zip(partition.labels()) {
            sums[label] = sums[label] + v * w;
        }
        Ok(sums)
    }

    /// `E(f | A_P)`: on each cell, the average of `f` over that cell.
    pub fn cond_exp(&self, partition: &BoxPartition<T>) -> Result<Self> {
        let sums = self.cell_integrals(partition)?;
        let averages: Vec<T> = sums
            .iter()
            .zip(partition.measures())
            .map(|(&s, &m)| s / m)
            .collect();
        Ok(Self {
            face: self.face.clone(),
            values: partition.labels().iter().map(|&l| averages[l]).collect(),
        })
    }

    /// `‖f‖_{L_p}` for `p ∈ [1, ∞]`.
    pub fn lp_norm(&self, p: T) -> Result<T> {
        if p.is_nan() || p < T::one() {
            return Err(Error::InvalidExponent(p.to_f64_lossy()));
        }
        let w = self.face.weights();
        if p.is_infinite() {
            return Ok(self
                .values
                .iter()
                .zip(w)
                .filter(|(_, &w)| w > T::zero())
                .fold(T::zero(), |acc, (&v, _)| acc.max(v.abs())));
        }
        let s = self
            .values
            .iter()
            .zip(w)
            .fold(T::zero(), |acc, (&v, &w)| acc + w * v.abs().powf(p));
        Ok(s.powf(T::one() / p))
    }

    /// Largest `|f(x)|` over all atoms.
    pub fn sup_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    /// Whether `f` is constant on every cell of `partition` (exactly).
    pub fn is_measurable(&self, partition: &BoxPartition<T>) -> bool {
        let mut seen: Vec<Option<T>> = vec![None; partition.len()];
        for (&v, &l) in self.values.iter().zip(partition.labels()) {
            match seen[l] {
                None => seen[l] = Some(v),
                Some(prev) if prev != v => return false,
                _ => {}
            }
        }
        true
    }

    /// Lifts a function on a subface to this face by composing with the projection.
    pub fn lift(&self, face: &Face<T>) -> Result<Self> {
        if !self.face.coords().iter().all(|c| face.coords().contains(c)) {
            return Err(Error::FaceMismatch(format!(
                "{:?} is not a subface of {:?}",
                self.face.coords(),
                face.coords()
            )));
        }
        let proj = face.projection(&self.face);
        Self::new(face.clone(), proj.into_iter().map(|j| self.values[j]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::EdgeGeometry;
    use crate::measure::HypergraphSystem;

    fn square() -> HypergraphSystem<f64> {
        HypergraphSystem::uniform(2, 2, vec![vec![0, 1]]).unwrap()
    }

    #[test]
    fn integrate_examples() {
        let s = square();
        let face = s.edge_face(0);
        let one = EdgeFunction::constant(face.clone(), 1.0);
        assert_eq!(one.integrate(None).unwrap(), 1.0);
        let geom = EdgeGeometry::new(face.clone());
        let rect = BoxCell::new(geom.clone(), vec![vec![true, false], vec![true, true]]).unwrap();
        let zero = EdgeFunction::constant(face.clone(), 0.0);
        assert_eq!(zero.integrate(Some(&rect)).unwrap(), 0.0);
        let diag = EdgeFunction::from_fn(face, |x| if x[0] == x[1] { 1.0 } else { 0.0 }).unwrap();
        assert!((diag.integrate(Some(&rect)).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn integrate_rejects_foreign_cell() {
        let s = HypergraphSystem::<f64>::simplex(2, 2).unwrap();
        let f = EdgeFunction::constant(s.edge_face(0), 1.0);
        let other = EdgeGeometry::new(s.edge_face(1));
        let cell = BoxCell::full(other);
        assert!(matches!(f.integrate(Some(&cell)), Err(Error::FaceMismatch(_))));
    }

    #[test]
    fn cond_exp_examples() {
        let s = square();
        let face = s.edge_face(0);
        let geom = EdgeGeometry::new(face.clone());
        let f = EdgeFunction::from_fn(face.clone(), |x| if x == [0, 0] { 1.0 } else { 0.0 }).unwrap();
        let trivial = BoxPartition::trivial(geom.clone());
        let c = f.cond_exp(&trivial).unwrap();
        assert!(c.values().iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let split = BoxPartition::new(
            geom.clone(),
            vec![
                BoxCell::new(geom.clone(), vec![vec![true, false], vec![true, true]]).unwrap(),
                BoxCell::new(geom.clone(), vec![vec![false, true], vec![true, true]]).unwrap(),
            ],
        )
        .unwrap();
        let c = f.cond_exp(&split).unwrap();
        assert_eq!(c.values(), &[0.5, 0.5, 0.0, 0.0]);
        assert_eq!(c.cond_exp(&split).unwrap().values(), c.values());
    }

    #[test]
    fn lp_norm_examples() {
        let s = HypergraphSystem::<f64>::uniform(2, 2, vec![vec![0, 1]]).unwrap();
        let face = s.face(&[0]).unwrap();
        let f = EdgeFunction::new(face.clone(), vec![3.0, -1.0]).unwrap();
        let expected = (28.0f64 / 2.0).powf(1.0 / 3.0);
        assert!((f.lp_norm(3.0).unwrap() - expected).abs() < 1e-14);
        let half = EdgeFunction::new(face.clone(), vec![1.0, 0.0]).unwrap();
        assert!((half.lp_norm(2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let c = EdgeFunction::constant(face, -2.5);
        for p in [1.0, 1.5, 2.0, 7.0, f64::INFINITY] {
            assert!((c.lp_norm(p).unwrap() - 2.5).abs() < 1e-14);
        }
        assert!(matches!(f.lp_norm(0.5), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn works_in_single_precision() {
        let s = HypergraphSystem::<f32>::uniform(2, 2, vec![vec![0, 1]]).unwrap();
        let f = EdgeFunction::from_fn(s.edge_face(0), |x| (x[0] + x[1]) as f32).unwrap();
        assert!((f.mean() - 1.0).abs() < 1e-6);
        assert!((f.lp_norm(f32::INFINITY).unwrap() - 2.0).abs() < 1e-6);
    }
}
