use super::dot;

/// Dynamic relaxation `-(delta . d) / |delta|^2`.
///
/// Returns `None` when the jump difference vanishes (stagnant jump), so the
/// caller can fall back to the initial parameter.
pub fn aitken_rho(d: &[f64], delta: &[f64]) -> Option<f64> {
    assert_eq!(d.len(), delta.len(), "interface vectors differ in length");
    let dd = dot(delta, delta);
    if dd == 0.0 || !dd.is_finite() {
        return None;
    }
    Some(-dot(delta, d) / dd)
}

/// Clamps the Aitken parameter into `(0, 1]`: values above one become one,
/// non-positive (or NaN) values revert to `rho_init`.
pub fn aitken_safeguard(rho_raw: f64, rho_init: f64) -> f64 {
    if rho_raw > 1.0 {
        1.0
    } else if rho_raw > 0.0 {
        rho_raw
    } else {
        rho_init
    }
}

/// Data carried between Aitken iterations for one interface.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AitkenState {
    /// Previous interface iterate `g^(k-1)`.
    pub prev_trace_d: Option<Vec<f64>>,
    /// Previous jump `E^(k-1) = T(g^(k-1)) - g^(k-1)`.
    pub prev_jump: Option<Vec<f64>>,
    pub rho_current: f64,
}

impl AitkenState {
    pub fn new(rho_init: f64) -> Self {
        Self {
            prev_trace_d: None,
            prev_jump: None,
            rho_current: rho_init,
        }
    }
}

/// One Aitken step on a single interface: `g + rho (Tg - g)`.
///
/// For `k < n0` the parameter is `rho_init`; afterwards it is recomputed from
/// the last two iterates and jumps, then safeguarded.
pub fn update_aitken(
    state: &AitkenState,
    g: &[f64],
    tg: &[f64],
    k: usize,
    rho_init: f64,
    n0: usize,
) -> (Vec<f64>, AitkenState) {
    assert_eq!(g.len(), tg.len(), "interface vectors differ in length");
    let jump: Vec<f64> = tg.iter().zip(g).map(|(t, x)| t - x).collect();

    let rho = match (&state.prev_trace_d, &state.prev_jump) {
        (Some(g_prev), Some(e_prev)) if k >= n0 => {
            let d: Vec<f64> = g.iter().zip(g_prev).map(|(a, b)| a - b).collect();
            let delta: Vec<f64> = jump.iter().zip(e_prev).map(|(a, b)| a - b).collect();
            match aitken_rho(&d, &delta) {
                Some(raw) => aitken_safeguard(raw, rho_init),
                None => rho_init,
            }
        }
        _ => rho_init,
    };

    let next = g.iter().zip(&jump).map(|(x, e)| x + rho * e).collect();
    let state = AitkenState {
        prev_trace_d: Some(g.to_vec()),
        prev_jump: Some(jump),
        rho_current: rho,
    };
    (next, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn recovers_optimal_parameter_on_laplace_map() {
        let x = 0.7;
        let e = |g: f64| 1.0 - g / x;
        let (g0, g1) = (0.3, 0.69);
        let rho = aitken_rho(&[g1 - g0], &[e(g1) - e(g0)]).unwrap();
        assert_relative_eq!(rho, x, epsilon = 1e-12);
    }

    #[test]
    fn direct_formula() {
        assert_relative_eq!(aitken_rho(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 1.0);
        assert_relative_eq!(aitken_rho(&[2.0], &[-1.0]).unwrap(), 2.0);
        assert_eq!(aitken_rho(&[1.0], &[0.0]), None);
    }

    #[test]
    fn safeguard_cases() {
        assert_eq!(aitken_safeguard(1.7, 0.5), 1.0);
        assert_eq!(aitken_safeguard(-0.3, 0.5), 0.5);
        assert_eq!(aitken_safeguard(0.0, 0.5), 0.5);
        assert_eq!(aitken_safeguard(0.42, 0.5), 0.42);
        assert_eq!(aitken_safeguard(f64::NAN, 0.5), 0.5);
    }

    #[test]
    fn warm_up_matches_classical() {
        let s = AitkenState::new(0.2);
        let (next, s2) = update_aitken(&s, &[0.3], &[0.7], 1, 0.2, 10);
        assert_eq!(next, super::super::update_classical(&[0.3], &[0.7], 0.2));
        assert_eq!(s2.rho_current, 0.2);
    }

    #[test]
    fn fixed_point_is_preserved() {
        let s = AitkenState {
            prev_trace_d: Some(vec![0.1, 0.2]),
            prev_jump: Some(vec![0.5, -0.5]),
            rho_current: 0.3,
        };
        let g = [0.4, 0.6];
        let (next, _) = update_aitken(&s, &g, &g, 5, 0.3, 2);
        assert_eq!(next, g.to_vec());
    }

    #[test]
    fn laplace_three_iterations() {
        let x = 0.7;
        let t = |g: f64| (1.0 - 1.0 / x) * g + 1.0;
        let mut s = AitkenState::new(1.0);
        let mut g = 0.3;
        for k in 1..=2 {
            let (next, ns) = update_aitken(&s, &[g], &[t(g)], k, 1.0, 2);
            g = next[0];
            s = ns;
        }
        assert_relative_eq!(g, x, epsilon = 1e-14);
        assert_relative_eq!(s.rho_current, x, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn safeguard_range(raw in prop::num::f64::ANY, init in 1e-6f64..=1.0) {
            let r = aitken_safeguard(raw, init);
            prop_assert!(r > 0.0 && r <= 1.0);
        }
    }
}
