//! Fits a tiny MLP to a sine curve with the tape, Adam and gradient clipping.

use cdc::diffcore::{clip_global_norm, Activation, AdamState, Mlp, ParamStore, Tape};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cdc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut params = ParamStore::new();
    let net = Mlp::new(&mut params, "fit", &[1, 32, 32, 1], Activation::Identity, &mut rng);
    let mut opt = AdamState::new(&params, 1e-2);

    let x = Array2::from_shape_fn((64, 1), |(i, _)| -3.0 + 6.0 * i as f64 / 63.0);
    let y = x.mapv(f64::sin);
    for step in 0..=1500 {
        let mut tape = Tape::new();
        let bound = tape.bind(&params, true);
        let input = tape.constant(x.clone());
        let pred = net.forward(&mut tape, &bound, input)?;
        let target = tape.constant(y.clone());
        let err = tape.sub(pred, target)?;
        let sq = tape.mul(err, err)?;
        let loss = tape.mean(sq);
        tape.backward(loss)?;
        let mut grads = tape.grads(&bound);
        let norm = clip_global_norm(&mut grads, 5.0);
        opt.step(&mut params, &grads)?;
        if step % 300 == 0 {
            println!("step {step:>4}  mse {:.5}  |g| {norm:.3}", tape.value(loss)[[0, 0]]);
        }
    }
    Ok(())
}
