//! Minimal library walkthrough: ban one word and watch the decoder pick the
//! runner-up. Run with `cargo run -p veto-core --example avoid_word`.

use veto_core::constraint::ConstraintSet;
use veto_core::decode::{decode, DecodeConfig, Method};
use veto_core::score::TabularScorer;
use veto_core::text::{detokenize, segment};
use veto_core::vocab::Vocabulary;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let vocab = Vocabulary::with_pieces([
        "\u{2581}he",
        "\u{2581}ate",
        "\u{2581}lunch",
        "\u{2581}dinner",
    ])?;
    let eos = vocab.specials().eos;
    let source = segment("he ate lunch", &vocab)?;

    // A toy next-subword model: after "he ate", lunch is likelier than dinner.
    let id = |p: &str| vocab.id(p).unwrap();
    let mut scorer = TabularScorer::new(vocab.len())?;
    scorer.insert(source.clone(), vec![], &[(id("\u{2581}he"), 1.0)])?;
    scorer.insert(
        source.clone(),
        vec![id("\u{2581}he")],
        &[(id("\u{2581}ate"), 1.0)],
    )?;
    scorer.insert(
        source.clone(),
        vec![id("\u{2581}ate")],
        &[(id("\u{2581}lunch"), 0.7), (id("\u{2581}dinner"), 0.3)],
    )?;
    scorer.insert(source.clone(), vec![id("\u{2581}lunch")], &[(eos, 1.0)])?;
    scorer.insert(source.clone(), vec![id("\u{2581}dinner")], &[(eos, 1.0)])?;

    let cfg = DecodeConfig {
        beam_size: 4,
        max_len: 8,
        method: Method::PenaltySubword,
        penalty: 2.0,
        threshold: f64::NEG_INFINITY,
        length_norm: false,
    };
    let avoid = ConstraintSet::from_surfaces(["lunch"], &vocab)?;
    let out = decode(&source, &scorer, &cfg, &avoid, eos)?;

    let words: Vec<_> = out.hypotheses[0]
        .tokens
        .iter()
        .copied()
        .filter(|&t| !vocab.is_special(t))
        .collect();
    let text = detokenize(&words, &vocab)?;
    println!("decoded: {text}");
    assert_eq!(text, "he ate dinner");
    Ok(())
}
