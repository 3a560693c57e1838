use latsec::lattice::{
    dither_encode, group_add, group_neg, mod_coarse, reconstruct_sum, representation_index, CubicLattice,
    LatticeVector, NestedLatticePair, RepresentationIndex,
};
use proptest::prelude::*;

fn pair_strategy() -> impl Strategy<Value = NestedLatticePair> {
    (1usize..=3, 2u32..=6, 0.5f64..8.0).prop_map(|(n, m, c)| NestedLatticePair::new(n, c, m).unwrap())
}

fn codeword(pair: &NestedLatticePair, rank: u64) -> LatticeVector {
    pair.point_from_digits(&pair.digits_of_rank(rank % pair.codebook_size() as u64))
}

/// Equal modulo `scale·Zᴺ`; float sums can land on either side of the
/// cell boundary.
fn same_coset(a: &LatticeVector, b: &LatticeVector, scale: f64) -> bool {
    a.0.iter().zip(&b.0).all(|(x, y)| {
        let k = (x - y) / scale;
        (k - k.round()).abs() < 1e-9
    })
}

proptest! {
    #[test]
    fn group_axioms(pair in pair_strategy(), a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (x, y, z) = (codeword(&pair, a), codeword(&pair, b), codeword(&pair, c));
        let zero = group_add(&x, &group_neg(&x, &pair).unwrap(), &pair).unwrap();
        // Closure: results are codewords.
        prop_assert!(pair.digits_of(&zero).is_ok());
        prop_assert_eq!(group_add(&x, &zero, &pair).unwrap(), x.clone());
        prop_assert_eq!(group_add(&x, &y, &pair).unwrap(), group_add(&y, &x, &pair).unwrap());
        let left = group_add(&group_add(&x, &y, &pair).unwrap(), &z, &pair).unwrap();
        let right = group_add(&x, &group_add(&y, &z, &pair).unwrap(), &pair).unwrap();
        prop_assert_eq!(left, right);
        // Agrees with the real sum reduced modulo the coarse lattice.
        let real = mod_coarse(&x.add(&y), &pair);
        prop_assert!(same_coset(&real, &group_add(&x, &y, &pair).unwrap(), pair.coarse_scale()));
    }

    #[test]
    fn mod_is_idempotent(pair in pair_strategy(), raw in prop::collection::vec(-50.0f64..50.0, 3)) {
        let x = LatticeVector(raw[..pair.dim()].to_vec());
        let once = mod_coarse(&x, &pair);
        prop_assert!(pair.coarse().in_region(&once));
        prop_assert_eq!(mod_coarse(&once, &pair), once.clone());
        // x − (x mod Λ) is a coarse lattice point.
        prop_assert!(same_coset(&x, &once, pair.coarse_scale()));
    }

    #[test]
    fn dither_is_removable(pair in pair_strategy(), rank in any::<u64>(), d in prop::collection::vec(-10.0f64..10.0, 3)) {
        let u = codeword(&pair, rank);
        let d = LatticeVector(d[..pair.dim()].to_vec());
        let x = dither_encode(&u, &d, &pair).unwrap();
        let back = mod_coarse(&x.sub(&d), &pair);
        prop_assert!(same_coset(&back, &u, pair.coarse_scale()));
    }

    #[test]
    fn representation_round_trip(
        n in 1usize..=3,
        scale in 0.5f64..6.0,
        raw in prop::collection::vec(prop::collection::vec(-0.5f64..0.5, 3), 1..=4),
    ) {
        let lattice = CubicLattice::new(n, scale).unwrap();
        let points: Vec<LatticeVector> = raw
            .iter()
            .map(|p| LatticeVector(p[..n].iter().map(|v| v * scale).collect()))
            .filter(|p| lattice.in_region(p))
            .collect();
        prop_assume!(!points.is_empty());
        let sum = points.iter().fold(LatticeVector::zeros(n), |acc, p| acc.add(p));
        let (idx, residue) = representation_index(&points, &lattice).unwrap();
        prop_assert!(idx.t >= 1);
        prop_assert!(idx.t as u128 <= RepresentationIndex::max_index(points.len(), n));
        prop_assert!(lattice.in_region(&residue));
        prop_assert!(reconstruct_sum(&idx, &residue, &lattice).unwrap().max_abs_diff(&sum) < 1e-9);
    }
}
