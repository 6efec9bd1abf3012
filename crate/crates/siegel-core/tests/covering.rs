use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use siegel_core::covering::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `V = B_{a r}`, `U = B_{b r}` around the same centre.
fn concentric(center: Complex64, r: f64, a: f64, b: f64) -> DiskPair {
    DiskPair { center, radius: r, v: Disk::new(center, a * r), u: Disk::new(center, b * r) }
}

/// Pairs inside the annulus `1 < |z| < 3`. `U` is shifted off centre as far
/// as `K` allows and `V` interpolates between `B_r` and `U`.
fn random_family(rng: &mut ChaCha8Rng, n: usize, k: f64) -> CoveringFamily {
    let pairs = (0..n)
        .map(|_| {
            let r = rng.random_range(0.05..0.6 / k);
            let center = Complex64::from_polar(rng.random_range(1.0 + k * r..3.0 - k * r), rng.random_range(0.0..2.0 * PI));
            let ru = rng.random_range(1.0..k) * r;
            let shift = (ru - r).min(k * r - ru) * rng.random_range(0.0..1.0);
            let u = Disk::new(center + Complex64::from_polar(shift, rng.random_range(0.0..2.0 * PI)), ru);
            let t = rng.random_range(0.0..1.0);
            let v = Disk::new(center + t * (u.center - center), r + t * (ru - r));
            DiskPair { center, radius: r, v, u }
        })
        .collect();
    CoveringFamily::new(k, pairs).unwrap()
}

fn disjoint(family: &CoveringFamily, members: &[usize]) -> bool {
    members.iter().enumerate().all(|(x, &i)| {
        members[x + 1..].iter().all(|&j| !family.pairs[i].inner().meets(&family.pairs[j].inner()))
    })
}

fn lens(r1: f64, r2: f64, d: f64) -> f64 {
    let a = r1 * r1 * ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).acos();
    let b = r2 * r2 * ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).acos();
    let k = 0.5 * ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).sqrt();
    a + b - k
}

/// Spherical area of `|z − c| < r` with `r < |c|` or any `r` for `c = 0`:
/// the cap between the stereographic images of `|c| ± r` on the ray to `c`.
fn cap_area(center: Complex64, r: f64) -> f64 {
    let m = center.norm();
    let rho = (m + r).atan() - (m - r).atan();
    0.5 * PI * (1.0 - rho.cos())
}

#[test]
fn single_pair_selects_itself() {
    let family = CoveringFamily::new(2.0, vec![concentric(c(2.0, 0.0), 0.1, 1.5, 2.0)]).unwrap();
    let sub = best_disjoint_subfamily(&family);
    assert_eq!(sub.members, vec![0]);
    assert!(sub.exact);
    let out = covering_check(&family, &sub).unwrap();
    assert!(out.pass);
    assert_eq!(out.l, 25.0);
}

#[test]
fn disjoint_disks_are_all_selected() {
    let family = CoveringFamily::new(
        2.0,
        vec![concentric(c(2.0, 0.0), 0.1, 1.5, 2.0), concentric(c(-2.0, 0.0), 0.2, 1.0, 1.0)],
    )
    .unwrap();
    assert_eq!(best_disjoint_subfamily(&family).members, vec![0, 1]);
}

#[test]
fn chain_of_three_keeps_the_ends() {
    // Brute force over the 7 non-empty subfamilies: {0, 2} has area 2π r²,
    // every other disjoint choice is a single disk.
    let pairs = [0.0, 0.3, 0.6].iter().map(|&x| concentric(c(2.0 + x, 0.0), 0.2, 1.0, 1.5)).collect();
    let family = CoveringFamily::new(2.0, pairs).unwrap();
    let sub = best_disjoint_subfamily(&family);
    assert_eq!(sub.members, vec![0, 2]);
    assert!((sub.area - 2.0 * PI * 0.04).abs() < 1e-15);
    let out = covering_check(&family, &sub).unwrap();
    assert!(out.pass);
    assert_eq!(out.assigned, vec![Some(0), Some(0), Some(2)]);
}

#[test]
fn intersecting_subfamily_is_rejected() {
    let pairs = [0.0, 0.3].iter().map(|&x| concentric(c(2.0 + x, 0.0), 0.2, 1.0, 1.5)).collect();
    let family = CoveringFamily::new(2.0, pairs).unwrap();
    let sub = Subfamily { members: vec![0, 1], area: 0.0, exact: false };
    assert_eq!(covering_check(&family, &sub), Err(CoveringError::NotDisjoint(0, 1)));
}

#[test]
fn family_preconditions() {
    assert_eq!(CoveringFamily::new(2.0, vec![]), Err(CoveringError::Empty));
    assert_eq!(CoveringFamily::new(1.0, vec![concentric(c(2.0, 0.0), 0.1, 1.0, 1.0)]), Err(CoveringError::BadRoundness(1.0)));
    assert_eq!(CoveringFamily::new(2.0, vec![concentric(c(2.0, 0.0), 0.1, 1.5, 2.5)]), Err(CoveringError::BadPair(0)));
}

#[test]
fn contained_disks_are_not_maximal() {
    let family = CoveringFamily::new(
        4.0,
        vec![
            concentric(c(2.0, 0.0), 0.3, 1.0, 1.0),
            concentric(c(2.05, 0.0), 0.1, 1.0, 1.0),
            concentric(c(2.0, 0.0), 0.3, 1.0, 1.0),
        ],
    )
    .unwrap();
    assert_eq!(family.maximal(), vec![0]);
    let out = covering_check(&family, &best_disjoint_subfamily(&family)).unwrap();
    assert_eq!(out.assigned, vec![Some(0); 3]);
}

#[test]
fn exact_subfamilies_cover_random_families() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut nontrivial = 0;
    for trial in 0..300 {
        let k = [1.5, 2.0, 4.0][trial % 3];
        let n = rng.random_range(1..=12);
        let family = random_family(&mut rng, n, k);
        let sub = best_disjoint_subfamily(&family);
        assert!(sub.exact && disjoint(&family, &sub.members));
        let out = covering_check(&family, &sub).unwrap();
        assert!(out.pass, "trial {trial}: witness {:?}", out.witness);
        // Proof step: every maximal disk outside σ₀ meets a member, and its
        // radius is at most 8 times that member's.
        for i in family.maximal() {
            let j = out.assigned[i].unwrap();
            assert!(family.pairs[i].inner().meets(&family.pairs[j].inner()));
        }
        assert!(out.radius_ratio <= 8.0, "trial {trial}: {}", out.radius_ratio);
        nontrivial += (sub.members.len() < family.maximal().len()) as usize;
    }
    assert!(nontrivial >= 50, "only {nontrivial} families had overlaps");
}

#[test]
fn exact_subfamily_is_maximal_by_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..300 {
        let k = [1.5, 2.0, 4.0][trial % 3];
        let n = rng.random_range(1..=10);
        let family = random_family(&mut rng, n, k);
        let sub = best_disjoint_subfamily(&family);
        // Enumerate every disjoint choice among the maximal disks.
        let cand = family.maximal();
        let mut best: f64 = 0.0;
        for mask in 1u32..(1 << cand.len()) {
            let members: Vec<usize> = (0..cand.len()).filter(|b| mask & (1 << b) != 0).map(|b| cand[b]).collect();
            if disjoint(&family, &members) {
                best = best.max(members.iter().map(|&i| family.pairs[i].inner().area()).sum());
            }
        }
        assert!(sub.area >= best * (1.0 - 1e-12), "trial {trial}: {} < {best}", sub.area);
    }
}

#[test]
fn greedy_subfamily_is_disjoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let family = random_family(&mut rng, 12, 2.0);
        let sub = greedy_subfamily(&family);
        assert!(!sub.exact && disjoint(&family, &sub.members));
        assert!(sub.area <= best_disjoint_subfamily(&family).area * (1.0 + 1e-12));
    }
}

#[test]
fn equal_v_and_u_give_ratio_one() {
    let family = CoveringFamily::new(3.0, vec![concentric(c(2.0, 0.0), 0.1, 2.0, 2.0)]).unwrap();
    assert!((area_ratio(&family, Measure::Euclidean) - 1.0).abs() < 1e-14);
    assert!((area_ratio(&family, Measure::Spherical) - 1.0).abs() < 1e-12);
}

#[test]
fn single_pair_area_ratio() {
    let family = CoveringFamily::new(3.0, vec![concentric(c(2.0, 0.0), 0.05, 1.0, 2.0)]).unwrap();
    assert!((area_ratio(&family, Measure::Euclidean) - 0.25).abs() < 1e-14);
    let spherical = area_ratio(&family, Measure::Spherical);
    assert!((spherical / 0.25 - 1.0).abs() < 0.05, "{spherical}");
    let exact = cap_area(c(2.0, 0.0), 0.05) / cap_area(c(2.0, 0.0), 0.1);
    assert!((spherical - exact).abs() < 1e-9);
}

#[test]
fn union_areas_match_closed_forms() {
    let (a, b) = (Disk::new(c(1.0, 1.0), 0.5), Disk::new(c(1.6, 1.0), 0.4));
    let expected = a.area() + b.area() - lens(0.5, 0.4, 0.6);
    assert!((union_area(&[a, b], Measure::Euclidean) - expected).abs() < 1e-12);
    // Disjoint and nested disks.
    let far = Disk::new(c(-2.0, 0.0), 0.3);
    let inside = Disk::new(c(1.0, 1.1), 0.1);
    assert!((union_area(&[a, far, inside], Measure::Euclidean) - a.area() - far.area()).abs() < 1e-12);
    assert!((union_area(&[a, a], Measure::Euclidean) - a.area()).abs() < 1e-12);
    let sph = union_area(&[Disk::new(c(2.0, 0.0), 0.5), far], Measure::Spherical);
    assert!((sph - cap_area(c(2.0, 0.0), 0.5) - cap_area(far.center, 0.3)).abs() < 1e-9);
    assert!((union_area(&[Disk::new(c(0.0, 0.0), 1.0)], Measure::Spherical) - 0.5 * PI).abs() < 1e-9);
}
