use pada::filters::{shift_filter, ComponentFilters, FilterBank, PhaseVector};
use pada::forecast::quantile;
use pada::grid::l2_norm_real;
use pada::scores::WhittleSpectrum;
use pada::{FrequencyGrid, TimeGrid, C64};
use proptest::prelude::*;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0).prop_map(|(re, im)| C64::new(re, im)), len)
}

/// A bank with one component of random filters normalised to unit energy.
fn bank_from(lag: usize, raw: Vec<Vec<f64>>) -> FilterBank {
    let grid = TimeGrid::uniform(raw[0].len()).unwrap();
    let freqs = FrequencyGrid::new(8).unwrap();
    let energy: f64 = raw.iter().map(|f| l2_norm_real(&grid, f).powi(2)).sum();
    let filters: Vec<Vec<f64>> = raw.iter().map(|f| f.iter().map(|v| v / energy.sqrt()).collect()).collect();
    let sup = filters.iter().map(|f| l2_norm_real(&grid, f)).fold(0.0, f64::max);
    let comp = ComponentFilters {
        lag,
        filters,
        phase: PhaseVector::ones(freqs.len()),
        eigenvalues: vec![1.0; freqs.len()],
        sup_norm: sup,
        raw_sup_norm: sup,
        retained_energy: 1.0,
        imag_residue: 0.0,
    };
    FilterBank::new(grid, freqs, vec![comp]).unwrap()
}

fn filters_strategy() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (0usize..4).prop_flat_map(|lag| {
        (Just(lag), prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 21), 2 * lag + 1))
    })
}

proptest! {
    #[test]
    fn projection_is_feasible_and_idempotent(raw in (1usize..12).prop_flat_map(|s| complex_vec(2 * s + 1))) {
        let p = PhaseVector::project(&raw);
        let (modulus, sym) = p.feasibility();
        prop_assert!(modulus < 1e-12 && sym < 1e-12);
        let again = PhaseVector::project(p.values());
        for (a, b) in again.values().iter().zip(p.values()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn shifting_preserves_norms((lag, raw) in filters_strategy(), h in -6i64..=6) {
        let bank = bank_from(lag, raw);
        prop_assume!(bank.component(0).l2_norm(bank.grid()) > 0.0);
        let s = shift_filter(&bank, 0, h).unwrap();
        let (a, b) = (bank.component(0), s.component(0));
        let g = bank.grid();
        prop_assert!((a.l2_norm(g) - b.l2_norm(g)).abs() < 1e-12);
        prop_assert!((a.max_norm(g) - b.max_norm(g)).abs() < 1e-12);
        let back = shift_filter(&s, 0, -h).unwrap();
        for l in -(lag as i64)..=lag as i64 {
            let (x, y) = (a.filter(l).unwrap(), back.component(0).filter(l).unwrap());
            prop_assert!(x.iter().zip(y).all(|(u, v)| (u - v).abs() < 1e-12));
        }
    }

    #[test]
    fn quantiles_are_monotone_and_bounded(mut v in prop::collection::vec(-1e3f64..1e3, 1..200), p in 0.0f64..1.0, q in 0.0f64..1.0) {
        v.sort_by(f64::total_cmp);
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let (a, b) = (quantile(&v, lo), quantile(&v, hi));
        prop_assert!(a <= b);
        prop_assert!(v[0] <= a && b <= v[v.len() - 1]);
    }

    #[test]
    fn whittle_precision_is_symmetric_psd_and_definite_without_lags(
        half in 2usize..8,
        curves in 3usize..30,
        lag in 0usize..3,
        seed in prop::collection::vec(0.05f64..5.0, 16),
    ) {
        let freqs = FrequencyGrid::new(half).unwrap();
        let eta: Vec<f64> = (0..freqs.len()).map(|i| {
            let m = i.min(freqs.mirror(i));
            seed[m % seed.len()]
        }).collect();
        let sp = WhittleSpectrum::from_eigenvalues(&freqs, &eta, curves, lag).unwrap();
        let p = sp.precision();
        prop_assert_eq!(p.nrows(), curves + 2 * lag);
        prop_assert!((&p - p.transpose()).amax() < 1e-10 * p.amax());
        // J frequencies against J + 2L coordinates: rank J at most.
        let ev = p.symmetric_eigenvalues();
        prop_assert!(ev.min() > -1e-10 * ev.max());
        if lag == 0 {
            prop_assert!(ev.min() > 0.0);
        }
    }

    #[test]
    fn interpolation_reproduces_affine_functions(a in -5.0f64..5.0, b in -5.0f64..5.0, n in 2usize..60, t in 0.0f64..=1.0) {
        let g = TimeGrid::uniform(n).unwrap();
        let vals: Vec<f64> = g.points().iter().map(|x| a + b * x).collect();
        prop_assert!((g.interpolate(&vals, t) - (a + b * t)).abs() < 1e-10);
    }
}
