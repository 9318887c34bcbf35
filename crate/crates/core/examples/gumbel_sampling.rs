//! Empirical Gumbel-Softmax action frequencies against the softmax of the logits.

use cdc::diffcore::{gumbel_softmax, Tape};
use ndarray::array;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cdc::Result<()> {
    let logits = array![[0.5, -1.0, 1.2, 0.0, -0.3]];
    let z: f64 = logits.iter().map(|l: &f64| l.exp()).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 50_000;
    let mut counts = [0usize; 5];
    for _ in 0..draws {
        let mut tape = Tape::new();
        let l = tape.constant(logits.clone());
        let s = gumbel_softmax(&mut tape, l, 1.0, true, &mut rng)?;
        let hot = tape.value(s);
        counts[hot.iter().position(|&v| v == 1.0).expect("one-hot")] += 1;
    }
    println!("action  softmax  sampled");
    for k in 0..5 {
        println!("{k:>6}  {:.4}   {:.4}", logits[[0, k]].exp() / z, counts[k] as f64 / draws as f64);
    }
    Ok(())
}
