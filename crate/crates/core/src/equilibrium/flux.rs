use super::Equilibrium;

/// `sup |V(x) . grad Phi_e(x)| / Phi_e(x)` over samples outside `K`.
/// Samples inside `K`, where both sides vanish, are skipped.
pub fn boundary_flux_bound<V>(eq: &dyn Equilibrium, velocity: V, samples: &[Vec<f64>]) -> f64
where
    V: Fn(&[f64], &mut [f64]),
{
    let n = eq.dim().get();
    let mut v = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut sup: f64 = 0.0;
    for x in samples {
        let phi = eq.phi_e(x);
        if phi <= 0.0 || eq.contains(x) {
            continue;
        }
        velocity(x, &mut v);
        eq.grad_phi_e(x, &mut g);
        let dot: f64 = v.iter().zip(&g).map(|(a, b)| a * b).sum();
        sup = sup.max(dot.abs() / phi);
    }
    sup
}
