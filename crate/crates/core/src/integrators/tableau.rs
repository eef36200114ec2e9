//! Butcher tableaux of the implicit Runge-Kutta methods.

#[derive(Clone, Debug, PartialEq)]
pub struct Tableau {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl Tableau {
    pub fn stages(&self) -> usize {
        self.b.len()
    }

    /// Weights sum to one, abscissae lie in [0, 1] and equal the row sums.
    pub fn is_consistent(&self, tol: f64) -> bool {
        let s = self.stages();
        self.a.len() == s
            && self.c.len() == s
            && self.a.iter().all(|r| r.len() == s)
            && (self.b.iter().sum::<f64>() - 1.0).abs() <= tol
            && self.c.iter().all(|&c| (-tol..=1.0 + tol).contains(&c))
            && self
                .a
                .iter()
                .zip(&self.c)
                .all(|(r, c)| (r.iter().sum::<f64>() - c).abs() <= tol)
    }

    /// Two-stage Gauss-Legendre collocation, order 4.
    pub fn gauss4() -> Self {
        let r = 3f64.sqrt() / 6.0;
        Tableau {
            a: vec![vec![0.25, 0.25 - r], vec![0.25 + r, 0.25]],
            b: vec![0.5, 0.5],
            c: vec![0.5 - r, 0.5 + r],
        }
    }

    /// Three-stage Radau IIA, order 5.
    pub fn radau5() -> Self {
        let s6 = 6f64.sqrt();
        let a = vec![
            vec![(88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0],
            vec![(296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0],
            vec![(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0],
        ];
        Tableau {
            b: a[2].clone(),
            a,
            c: vec![(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableaux_are_consistent() {
        assert!(Tableau::gauss4().is_consistent(1e-15));
        assert!(Tableau::radau5().is_consistent(1e-15));
    }

    #[test]
    fn radau_order_conditions() {
        // B(5): Σ b_i c_i^(k-1) = 1/k for k ≤ 5.
        let t = Tableau::radau5();
        for k in 1..=5 {
            let s: f64 = t.b.iter().zip(&t.c).map(|(b, c)| b * c.powi(k - 1)).sum();
            assert!((s - 1.0 / k as f64).abs() < 1e-15, "k = {k}");
        }
    }

    #[test]
    fn gauss_order_conditions() {
        let t = Tableau::gauss4();
        for k in 1..=4 {
            let s: f64 = t.b.iter().zip(&t.c).map(|(b, c)| b * c.powi(k - 1)).sum();
            assert!((s - 1.0 / k as f64).abs() < 1e-15);
        }
    }
}
