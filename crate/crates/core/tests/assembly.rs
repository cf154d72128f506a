mod common;

use waveguide::assembly::{assemble_coupled, assemble_schrodinger_1d, BandedPencil, Grid1D};
use waveguide::banded::SymBand;
use waveguide::cross_section::CrossSection;
use waveguide::eigen::{dense_oracle, eigenvector, eigs_below};
use waveguide::potential::{Cutoff, PotentialSpec};
use waveguide::twist::TwistProfile;

fn coupled(half_length: f64, nx: usize, modes: usize) -> BandedPencil {
    let grid = Grid1D::new(half_length, nx).unwrap();
    let s = CrossSection::square_pi();
    let basis = s.mode_basis(1.5, modes).unwrap();
    assemble_coupled(&grid, &s, &basis, &TwistProfile::tanh(0.5), 1.5).unwrap()
}

fn lowest(p: &BandedPencil) -> f64 {
    eigs_below(p, p.threshold, 1e-11).unwrap().eigenvalues[0]
}

#[test]
fn square_well_matches_matching_condition() {
    let grid = Grid1D::new(20.0, 3999).unwrap();
    let p = assemble_schrodinger_1d(&grid, 0.0, |x| Ok(if x.abs() < 1.0 { -1.0 } else { 0.0 }))
        .unwrap();
    let r = eigs_below(&p, 0.0, 1e-12).unwrap();
    let exact = common::square_well_ground();
    assert!(
        (r.eigenvalues[0] - exact).abs() < 1e-5,
        "{} vs {exact}",
        r.eigenvalues[0]
    );
}

#[test]
fn mass_is_positive_and_well_conditioned() {
    let p = coupled(10.0, 60, 4);
    let mut identity = SymBand::zeros(p.dim(), 0);
    for r in 0..p.dim() {
        identity.set(r, r, 1.0);
    }
    let spectrum = dense_oracle(&BandedPencil::new(p.mass.clone(), identity, 0.0)).unwrap();
    assert!(spectrum[0] > 0.0);
    assert!(spectrum[spectrum.len() - 1] / spectrum[0] <= 10.0);
    assert!(p.mass.ldlt(0.0).unwrap().diag().iter().all(|&d| d > 0.0));
    let dense = p.stiffness.to_dense();
    for (r, row) in dense.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            assert_eq!(*v, dense[c][r]);
        }
    }
}

#[test]
fn truncation_length_does_not_move_the_ground_state() {
    let short = lowest(&coupled(20.0, 1999, 4));
    let long = lowest(&coupled(30.0, 2999, 4));
    assert!((short - long).abs() < 1e-6, "{short} vs {long}");
}

#[test]
fn ground_state_lies_below_every_trial_energy() {
    let s = CrossSection::square_pi();
    let (e1, chi) = s.first_eigenpair(1.5).unwrap();
    let spec = PotentialSpec::new(s.moments(&chi), 1.5, TwistProfile::tanh(0.5)).unwrap();
    let ground = lowest(&coupled(20.0, 1999, 9));
    let cutoff = Cutoff::new();
    let w2: f64 = common::gauss_rule(-2.0, 2.0, 200)
        .iter()
        .map(|&(x, w)| w * cutoff.value(x).powi(2))
        .sum();
    for n in 1..=5 {
        let bound = e1 + spec.witness_energy(n as f64).unwrap() / (n as f64 * w2);
        assert!(ground <= bound + 1e-4, "n={n}: {ground} > {bound}");
    }
}

#[test]
fn interval_ground_vector_is_a_cosine() {
    let n = 400;
    let p = common::interval_laplacian(std::f64::consts::PI, n);
    let lambda = eigs_below(&p, 2.0, 1e-12).unwrap().eigenvalues[0];
    let u = eigenvector(&p, lambda).unwrap();
    let h = std::f64::consts::PI / (n + 1) as f64;
    // On (−π/2, π/2) the ground state is cos(x).
    let reference: Vec<f64> = (1..=n)
        .map(|k| (k as f64 * h - std::f64::consts::FRAC_PI_2).cos())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let corr = dot(&u, &reference) / (dot(&u, &u) * dot(&reference, &reference)).sqrt();
    assert!(corr > 0.9999, "{corr}");
    let ku = p.stiffness.matvec(&u);
    let mu = p.mass.matvec(&u);
    let res: f64 = ku
        .iter()
        .zip(&mu)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(res <= 1e-8 * dot(&ku, &ku).sqrt());
}

#[test]
fn coupled_ground_state_lives_on_the_ground_mode() {
    let modes = 9;
    let p = coupled(15.0, 600, modes);
    let u = eigenvector(&p, lowest(&p)).unwrap();
    let masked: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(k, &v)| if k % modes == 0 { v } else { 0.0 })
        .collect();
    let m = p.mass.matvec(&masked);
    let share: f64 = masked.iter().zip(&m).map(|(a, b)| a * b).sum();
    assert!(share > 0.9, "ground-mode share {share}");
}

#[test]
fn pencil_dump_round_trips() {
    let p = coupled(5.0, 12, 2);
    let mut buf = Vec::new();
    p.write_banded(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let header: Vec<usize> = lines
        .next()
        .unwrap()
        .split(' ')
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(header, vec![p.dim(), p.bandwidth()]);
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(' ').map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2 * p.dim());
    let bw = p.bandwidth();
    for r in 0..p.dim() {
        for off in 0..=bw.min(r) {
            assert_eq!(rows[r][bw - off], p.stiffness.get(r, r - off));
            assert_eq!(rows[p.dim() + r][bw - off], p.mass.get(r, r - off));
        }
    }
}
