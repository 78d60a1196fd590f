//! Joint-eigenvector witnesses on and off the support.

use curvebpe::operators::witness_sequence;
use curvebpe::presets::Preset;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// On the support itself approximate eigenvectors always exist, since the
/// support lies in the approximate point spectrum. The residual decays like
/// the width of a degree-d wave packet, roughly 2/d, with or without bounded
/// point evaluations. Only off-support probes separate the two cases.
#[test]
fn on_support_hyperbola_witness_decays_slowly() {
    let p = Preset::Hyperbola.build(256).unwrap();
    let beta = p.map.as_ref().unwrap().eval(c(1.0, 0.0)).unwrap();
    let degrees = [10, 20, 40, 60];
    let ws = witness_sequence(&p.mu, &p.family, &degrees, &beta).unwrap();
    for pair in ws.windows(2) {
        assert!(pair[1].residual < pair[0].residual);
    }
    for w in &ws {
        let scaled = w.residual * w.degree as f64;
        assert!((0.5..8.0).contains(&scaled), "d={} residual {}", w.degree, w.residual);
    }
}

#[test]
fn off_support_hyperbola_witness_stays_away_from_zero() {
    let p = Preset::Hyperbola.build(128).unwrap();
    let map = p.map.as_ref().unwrap();
    for lam in [c(0.5, 0.0), c(0.0, 1.8), c(-0.7, -0.4)] {
        let beta = map.eval(lam).unwrap();
        let ws = witness_sequence(&p.mu, &p.family, &[5, 15, 30], &beta).unwrap();
        assert!(ws.iter().all(|w| w.residual > 0.1), "{lam}");
    }
}

#[test]
fn circle_witness_aligns_with_the_reproducing_kernel() {
    let p = Preset::Circle.build(128).unwrap();
    let ws = witness_sequence(&p.mu, &p.family, &[10, 20, 30], &[c(0.4, 0.3)]).unwrap();
    let last = ws.last().unwrap();
    assert!(last.residual < 1e-6);
    assert!(last.kernel_correlation.unwrap() > 1.0 - 1e-9);
}
