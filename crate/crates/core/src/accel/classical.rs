/// `(1 - rho) g + rho Tg`, elementwise.
pub fn update_classical(g: &[f64], tg: &[f64], rho: f64) -> Vec<f64> {
    assert_eq!(g.len(), tg.len(), "interface vectors differ in length");
    g.iter()
        .zip(tg)
        .map(|(a, b)| (1.0 - rho) * a + rho * b)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_rho_passes_through() {
        assert_eq!(update_classical(&[0.3], &[0.7], 1.0), vec![0.7]);
    }

    #[test]
    fn half_step() {
        assert_relative_eq!(
            update_classical(&[0.3], &[0.7], 0.5)[0],
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn laplace_step_lands_on_solution() {
        let x = 0.7;
        let tg = 1.0 - (0.3 / x) * (1.0 - x);
        assert_relative_eq!(update_classical(&[0.3], &[tg], 0.7)[0], x, epsilon = 1e-14);
        assert_relative_eq!(update_classical(&[x], &[x], 0.7)[0], x, epsilon = 1e-15);
    }

    #[test]
    #[should_panic]
    fn length_mismatch_panics() {
        update_classical(&[1.0, 2.0], &[1.0], 0.5);
    }
}
