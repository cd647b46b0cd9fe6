use serde::{Deserialize, Serialize};

/// `M × M` admissibility matrix for attention between sensor channels.
///
/// Channel `i` belongs to sensor `i / C` and axis `i % C`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorMask {
    size: usize,
    admissible: Vec<bool>,
}

/// Selective mask: channels may attend to channels of the same sensor or the
/// same axis.
pub fn build_mask(sensors: usize, axes: usize) -> SensorMask {
    let m = sensors * axes;
    let admissible = (0..m * m)
        .map(|k| {
            let (i, j) = (k / m, k % m);
            i / axes == j / axes || i % axes == j % axes
        })
        .collect();
    SensorMask { size: m, admissible }
}

impl SensorMask {
    pub fn full(size: usize) -> Self {
        Self {
            size,
            admissible: vec![true; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn admissible(&self, i: usize, j: usize) -> bool {
        self.admissible[i * self.size + j]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.admissible
    }

    pub fn admissible_count(&self) -> usize {
        self.admissible.iter().filter(|&&a| a).count()
    }

    pub fn row_count(&self, i: usize) -> usize {
        self.admissible[i * self.size..(i + 1) * self.size]
            .iter()
            .filter(|&&a| a)
            .count()
    }

    pub fn masked_fraction(&self) -> f64 {
        1.0 - self.admissible_count() as f64 / (self.size * self.size) as f64
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|i| (0..self.size).all(|j| self.admissible(i, j) == self.admissible(j, i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sensors_three_axes() {
        let m = build_mask(2, 3);
        assert_eq!(m.admissible_count(), 24);
        assert!((m.masked_fraction() - 1.0 / 3.0).abs() < 1e-15);
        assert!(m.is_symmetric());
        for i in 0..6 {
            assert!(m.admissible(i, i));
            assert_eq!(m.row_count(i), 4);
        }
        // Ax ↔ Gx admissible, Ax ↔ Gy masked
        assert!(m.admissible(0, 3));
        assert!(!m.admissible(0, 4));
    }

    #[test]
    fn single_sensor_is_all_true() {
        for c in 1..5 {
            assert_eq!(build_mask(1, c), SensorMask::full(c));
        }
    }

    #[test]
    fn counts_match_enumeration() {
        for s in 1..5 {
            for c in 1..5 {
                let m = build_mask(s, c);
                let brute = (0..s * c)
                    .flat_map(|i| (0..s * c).map(move |j| (i, j)))
                    .filter(|&(i, j)| i / c == j / c || i % c == j % c)
                    .count();
                assert_eq!(m.admissible_count(), brute);
                assert_eq!(m.admissible_count(), s * c * (c + s - 1));
            }
        }
        let m = build_mask(3, 3);
        assert_eq!((m.row_count(0), m.admissible_count()), (5, 45));
    }
}
