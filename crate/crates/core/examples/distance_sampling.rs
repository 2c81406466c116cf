//! Distances to the nearest base stations: full point-process draws versus
//! exact draws of the ordered-distance law.
//!
//! `cargo run --release --example distance_sampling`

use hetnet_coverage::geometry::{nearest_n, sample_joint_distances, sample_ppp};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn main() -> hetnet_coverage::Result<()> {
    let density = 2e-6;
    let n = 4;
    let draws = 20_000;
    let window = (60.0 / (PI * density)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let mut ppp = vec![0.0; n];
    let mut joint = vec![0.0; n];
    for _ in 0..draws {
        let real = sample_ppp(density, window, &mut rng)?;
        for (acc, r) in ppp.iter_mut().zip(nearest_n(&real, n, 0)?.distances) {
            *acc += PI * density * r * r / draws as f64;
        }
        for (acc, r) in joint
            .iter_mut()
            .zip(sample_joint_distances(density, n, 0, &mut rng).distances)
        {
            *acc += PI * density * r * r / draws as f64;
        }
    }
    // πλr_i² is the i-th arrival of a unit-rate Poisson process.
    println!("i  E[πλr_i²] PPP  joint  exact");
    for i in 0..n {
        println!(
            "{}  {:.3}         {:.3}  {}",
            i + 1,
            ppp[i],
            joint[i],
            i + 1
        );
    }
    Ok(())
}
