use num_bigint::BigUint;
use slalom::scales::{
    gen_blass_family, gen_square_pair, separation_profile, validate_triple, ScaleSeq, BLASS_DEMO_BASE,
};

#[test]
fn tree_family_pair_is_separated_below_inverse_lo() {
    let s = ScaleSeq::preset("BLASS").unwrap();
    let w = s.window();
    let x = gen_blass_family(&s, &vec![false; w], BLASS_DEMO_BASE).unwrap();
    let y = gen_blass_family(&s, &vec![true; w], BLASS_DEMO_BASE).unwrap();
    for (a, b) in [(&x, &y), (&y, &x)] {
        let prof = separation_profile(a, b).unwrap();
        assert_eq!(prof.len(), w);
        // level 0 has a single tree node, so the paths only part from level 1
        assert_eq!(prof[0].to_f64(), 1.0);
        for (k, r) in prof.iter().enumerate().skip(1) {
            assert!(r.lt_frac(&BigUint::from(1u32), s.lo(k)), "level {k}: {}", r.to_f64());
        }
    }
}

#[test]
fn square_pair_squares_and_validates() {
    let s = ScaleSeq::preset("SQ").unwrap();
    let (a, b) = gen_square_pair(&s).unwrap();
    assert_eq!(a.f.to_u64s().unwrap(), vec![64]);
    assert_eq!(a.g.to_u64s().unwrap(), vec![16]);
    assert_eq!(a.h.to_u64s().unwrap(), vec![2]);
    assert_eq!(b.f.to_u64s().unwrap(), vec![64 * 64]);
    assert_eq!(b.g.to_u64s().unwrap(), vec![16 * 16]);
    validate_triple(b.f.clone(), b.g.clone(), b.h.clone(), s).unwrap();
}
