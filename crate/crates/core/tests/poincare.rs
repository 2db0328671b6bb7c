use approx::assert_relative_eq;
use pcrlab::laplace::{loglog_slope, maxterm_rate, Sequence, SpectralDecay};
use pcrlab::poincare::{
    francesi_bound, infinite_bound, l0n_estimate, poincare_grid_1d, BoundVariant, FrancesiParams, GridDensity1D,
    InfiniteConsts, DEFAULT_NODES,
};
use pcrlab::PcrError;
use proptest::prelude::*;
use std::f64::consts::PI;

fn unit_params() -> FrancesiParams<f64> {
    FrancesiParams {
        alpha: 1.0,
        h: 0.0,
        c: 1.0,
        ell: 0.0,
        r: 1.0,
        d: 1,
        g_r: 1.0,
        u_r: 1.0,
        c_r: 1.0,
        d_r: 0.0,
        variant2: None,
    }
}

#[test]
fn reference_constants() {
    let u = poincare_grid_1d(&GridDensity1D::uniform(0.0, 1.0, DEFAULT_NODES).unwrap()).unwrap();
    assert_relative_eq!(u, 1.0 / PI, max_relative = 0.01);
    let g = poincare_grid_1d(&GridDensity1D::gaussian(0.0, 1.0, DEFAULT_NODES).unwrap()).unwrap();
    assert_relative_eq!(g * g, 1.0, max_relative = 0.02);
    for n in [1.0, 10.0, 100.0] {
        let (gamma, lambda) = (1.5, 0.7);
        let c = poincare_grid_1d(&GridDensity1D::gibbs_gaussian(n, gamma, lambda, DEFAULT_NODES).unwrap()).unwrap();
        assert_relative_eq!(c * c, lambda / (n * lambda * gamma + 1.0), max_relative = 0.02);
    }
}

#[test]
fn grid_refinement_is_stable() {
    let densities = [
        GridDensity1D::<f64>::uniform(0.0, 1.0, 1024).unwrap(),
        GridDensity1D::gaussian(0.0, 1.0, 1024).unwrap(),
        GridDensity1D::gibbs_gaussian(10.0, 1.0, 1.0, 1024).unwrap(),
    ];
    let doubled = [
        GridDensity1D::uniform(0.0, 1.0, 2048).unwrap(),
        GridDensity1D::gaussian(0.0, 1.0, 2048).unwrap(),
        GridDensity1D::gibbs_gaussian(10.0, 1.0, 1.0, 2048).unwrap(),
    ];
    for (a, b) in densities.iter().zip(&doubled) {
        let (ca, cb) = (poincare_grid_1d(a).unwrap(), poincare_grid_1d(b).unwrap());
        assert!((ca - cb).abs() / cb < 0.005, "{ca} vs {cb}");
    }
}

#[test]
fn nonuniform_density_against_known_gap() {
    // Density ∝ e^{-x} on [0, L]: first Neumann eigenvalue 1/4 + (π/L)².
    let l = 3.0;
    let d = GridDensity1D::from_fn(0.0, l, DEFAULT_NODES, |x| -x).unwrap();
    let c = poincare_grid_1d(&d).unwrap();
    assert_relative_eq!(1.0 / (c * c), 0.25 + (PI / l).powi(2), max_relative = 0.01);
}

#[test]
fn francesi_examples() {
    let v = francesi_bound(10.0, &unit_params(), BoundVariant::One).unwrap();
    assert_relative_eq!(v, 31.0 / 90.0, epsilon = 1e-12);
    assert!(matches!(francesi_bound(0.5, &unit_params(), BoundVariant::One), Err(PcrError::BelowThreshold { .. })));
    let scaled: Vec<f64> =
        [1e3, 1e4, 1e5].iter().map(|n| n * francesi_bound(*n, &unit_params(), BoundVariant::One).unwrap()).collect();
    let spread = scaled.iter().fold(0.0f64, |m, v| m.max(*v)) / scaled.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    assert!(spread < 1.05, "{scaled:?}");
}

#[test]
fn francesi_dominates_grid_on_gibbs_gaussian() {
    // Potential G(θ) = θ²/2 with a standard Gaussian prior: α = c = 1, h = ℓ = 0.
    for n in [5.0, 20.0, 100.0] {
        let grid = poincare_grid_1d(&GridDensity1D::gibbs_gaussian(n, 1.0, 1.0, DEFAULT_NODES).unwrap()).unwrap();
        let bound = francesi_bound(n, &unit_params(), BoundVariant::One).unwrap();
        assert!(grid * grid <= bound * 1.02, "n = {n}: {} vs {bound}", grid * grid);
    }
}

#[test]
fn infinite_examples() {
    let spec = SpectralDecay::from_arrays(vec![1.0], vec![1.0]);
    let consts = InfiniteConsts::unit(1.0);
    assert_relative_eq!(infinite_bound(100.0, &spec, &consts).unwrap(), (1.0 + 199.0 / 101.0) / 98.0, epsilon = 1e-14);
    assert!(matches!(infinite_bound(1.5, &spec, &consts), Err(PcrError::BelowThreshold { .. })));
    let spec = SpectralDecay::power(1.0, 2.0);
    let ratios: Vec<f64> = [1e3, 1e4, 1e5, 1e6]
        .iter()
        .map(|n| infinite_bound(*n, &spec, &InfiniteConsts::unit(1.7)).unwrap() / maxterm_rate(*n, &spec))
        .collect();
    let spread = ratios.iter().fold(0.0f64, |m, v| m.max(*v)) / ratios.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    assert!(spread < 1.1, "{ratios:?}");
}

#[test]
fn l0n_examples() {
    assert_eq!(l0n_estimate(0.0, 0.0, 0.0).unwrap(), 0.0);
    for n in [10.0, 1e3, 1e5] {
        assert_relative_eq!(l0n_estimate(n, 2.5 / n, 1.0).unwrap(), 2.5, epsilon = 1e-12);
    }
    let spec = SpectralDecay { eta: Some(Sequence::power(2.0)), ..SpectralDecay::power(1.0, 2.0) };
    let ns = [1e3, 1e4, 1e5, 1e6, 1e7];
    let ys: Vec<f64> = ns.iter().map(|n| l0n_estimate(*n, maxterm_rate(*n, &spec), 1.0).unwrap()).collect();
    assert!((loglog_slope(&ns, &ys).unwrap() - 0.5).abs() < 0.02);
    assert!(l0n_estimate(1.0, -1.0, 1.0).is_err());
}

#[test]
fn operator_is_symmetric_and_nonsingular_after_deflation() {
    let d = GridDensity1D::<f64>::gaussian(0.3, 0.5, 512).unwrap();
    let (diag, off) = d.symmetric_operator().unwrap();
    assert_eq!(off.len() + 1, diag.len());
    // Constants span the kernel: every stiffness row sums to zero.
    let (k_diag, k_off, mass) = d.assemble();
    for i in 0..k_diag.len() {
        let left = if i > 0 { k_off[i - 1] } else { 0.0 };
        let right = if i + 1 < k_diag.len() { k_off[i] } else { 0.0 };
        assert!((k_diag[i] + left + right).abs() <= 1e-12 * k_diag[i].abs());
    }
    assert!(mass.iter().all(|m| *m > 0.0));
    assert!(pcrlab::poincare::spectral_gap(&d).unwrap() > 0.0);
}

proptest! {
    #[test]
    fn gaussian_constant_scales_with_sd(sd in 0.05f64..20.0, mean in -5.0f64..5.0) {
        let c = poincare_grid_1d(&GridDensity1D::gaussian(mean, sd, DEFAULT_NODES).unwrap()).unwrap();
        prop_assert!((c / sd - 1.0).abs() < 0.01);
    }

    #[test]
    fn uniform_constant_scales_with_length(lo in -3.0f64..3.0, len in 0.01f64..50.0) {
        let c = poincare_grid_1d(&GridDensity1D::uniform(lo, lo + len, 1024).unwrap()).unwrap();
        prop_assert!((c * PI / len - 1.0).abs() < 0.01);
    }
}
