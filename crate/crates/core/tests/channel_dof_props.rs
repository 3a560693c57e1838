use latsec::channel::{
    self, expected_power, superpose, transmit, ChannelConfig, DecodeMode, DitherMode, Link,
};
use latsec::dof;
use latsec::hash::{self, BitLabeling, EncoderKit};
use latsec::lattice::{LayeredCodebook, Sign};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // One layer only: superposed layers span more than ten fine steps, and
    // with √(ab) = 11/10 two hypotheses can then give the same noiseless Y₁.
    #[test]
    fn transmission_is_reproducible_and_decodable(seed in any::<u64>(), minus in any::<bool>(), n in 1usize..=2) {
        let book = LayeredCodebook::stacked(1, n, 4, 4.0).unwrap();
        let labeling = BitLabeling::new(book.clone());
        let kit = EncoderKit::identity(book.label_bits()).unwrap();
        let sign = if minus { Sign::Minus } else { Sign::Plus };
        let power = expected_power(&book, book.size() as u64, DitherMode::Uniform, 1 << 20).unwrap();
        let cfg = ChannelConfig::new(1.21, 1.0, sign, 1e-12, 1.0, power, power).unwrap();
        let link = Link { cfg: &cfg, book: &book, labeling: &labeling, kit: &kit, dither: DitherMode::Uniform };
        let message = channel::trial_message(kit.secret_bits(), seed, 0);
        let a = transmit(&link, &message, seed).unwrap();
        prop_assert_eq!(&a, &transmit(&link, &message, seed).unwrap());
        // The transmitted point carries the message.
        prop_assert_eq!(hash::decode_secret(&kit, &a.t1, &labeling).unwrap().1, message.clone());
        // Each layer's dithered signal stays in its cell.
        let bound: f64 = book.layers().iter().map(|l| l.coarse_scale() / 2.0).sum();
        prop_assert!(superpose(&book, &a.t1, &a.dither1).0.iter().all(|v| v.abs() <= bound));
        for mode in [DecodeMode::Marginal, DecodeMode::Genie] {
            prop_assert_eq!(channel::ml_decode(&link, &a, mode, 1 << 20).unwrap(), message.clone());
        }
    }

    #[test]
    fn gain_decomposition_is_admissible_and_minimal(sqrt_ab in 0.2f64..6.0, q_max in 1u64..=12) {
        match dof::decompose_gain(sqrt_ab, q_max) {
            Ok(d) => {
                prop_assert!(d.p >= 1 && d.q >= 1 && d.q <= q_max);
                prop_assert!(d.gamma.abs() > 0.0 && d.gamma.abs() < 0.5);
                prop_assert!(((d.p as f64 + d.gamma) / d.q as f64 - sqrt_ab).abs() < 1e-12);
                for q in 1..=q_max {
                    let scaled = q as f64 * sqrt_ab;
                    let gamma = scaled - scaled.round();
                    if scaled.round() >= 1.0 && gamma.abs() > 1e-12 && gamma.abs() < 0.5 {
                        prop_assert!(gamma.abs() >= d.gamma.abs() - 1e-9);
                    }
                }
            }
            Err(e) => prop_assert!(matches!(e, latsec::Error::Domain(_))),
        }
    }

    #[test]
    fn sdof_is_bounded(gamma in 1e-3f64..0.499, p in 1u64..10, q in 1u64..10, negative in any::<bool>()) {
        let gamma = if negative { -gamma } else { gamma };
        let alpha = dof::alpha_of(gamma).unwrap();
        prop_assert!(alpha > 4.0);
        let s = dof::sdof_of(alpha, dof::beta_of(p, q, gamma));
        prop_assert!((0.0..0.5).contains(&s));
    }
}

#[test]
fn secrecy_report_rate() {
    let book = LayeredCodebook::stacked(1, 2, 4, 4.0).unwrap();
    let labeling = BitLabeling::new(book.clone());
    let g = latsec::gf::FiniteFieldMatrix::from_bit_rows(&[0b1000, 0b0110], 4).unwrap();
    let kit = hash::build_encoder(&g).unwrap();
    let cfg = ChannelConfig::new(1.21, 1.0, Sign::Plus, 1e-12, 1.0, 2.7, 2.7).unwrap();
    let link = Link { cfg: &cfg, book: &book, labeling: &labeling, kit: &kit, dither: DitherMode::Uniform };
    let (summary, transcripts) = channel::simulate(&link, 20, DecodeMode::Marginal, 5, 1 << 20).unwrap();
    assert_eq!(summary.errors, 0);
    let report = channel::secrecy_rate_report(&transcripts, 2.0, 0.0).unwrap();
    assert_eq!(report.uses, 2);
    assert_eq!(report.rate, 1.0);
}
