use enku_core::wasserstein::{w2_exact, PointCloud};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::time::Instant;

fn main() {
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    for &(na, nb) in &[(256usize, 1536usize), (1024, 6144), (4096, 24576)] {
        let a = PointCloud::new(DMatrix::from_fn(na, 2, |_, _| rng.gen_range(-10.0..10.0))).unwrap();
        let b = PointCloud::new(DMatrix::from_fn(nb, 2, |_, _| rng.gen_range(-10.0..10.0))).unwrap();
        let t = Instant::now();
        let r = w2_exact(&a, &b).unwrap();
        println!("{}x{}: W2 = {:.6} in {:.2?}", na, nb, r.distance, t.elapsed());
    }
}
