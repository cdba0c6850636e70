#![allow(dead_code)]

use grtlab::data::{DataGrid, Sinogram};
use grtlab::operators::{Image, ImageGrid, Projector, ProjectorSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn small_projector(n: usize) -> Projector {
    let grid = ImageGrid::centered_square(3.7, n).unwrap();
    let fine = DataGrid::build(48, 61, 10.0, 3.7).unwrap();
    Projector::new(ProjectorSpec::new(fine, 10.0), grid).unwrap()
}

pub fn random_image(grid: ImageGrid, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = Image::from_fn(grid, |_| rng.random::<f64>() - 0.5);
    img.zero_boundary();
    img
}

pub fn random_sinogram(grid: DataGrid, seed: u64) -> Sinogram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Sinogram::from_fn(grid, |_, _| rng.random::<f64>() - 0.5)
}
