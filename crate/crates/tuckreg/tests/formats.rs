use std::fs;

use tuckreg::bundle::{generate_dataset, read_dataset, read_model, write_model};
use tuckreg::tnsr;
use tuckreg_core::model::gen_model;
use tuckreg_core::{DenseTensor, LinearMap, SensingDistribution};

#[test]
fn tensor_files_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.tnsr");
    let data: Vec<f64> = (0..24).map(|i| (i as f64 - 11.5) / 7.0).chain([f64::MIN_POSITIVE]).take(24).collect();
    let t = DenseTensor::new(vec![2, 3, 4], data).unwrap();
    tnsr::write(&path, &t).unwrap();
    assert_eq!(fs::metadata(&path).unwrap().len(), 6 + 12 + 8 * 24);
    let back = tnsr::read(&path).unwrap();
    assert_eq!(back.dims(), t.dims());
    assert!(back.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn bundles_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model_dir = dir.path().join("model");
    let data_dir = dir.path().join("data");
    let model = gen_model(&[5, 4, 3], &[2, 2, 1], &[3, 2, 2], 0.5, 17).unwrap();
    write_model(&model_dir, &model, Some(0.5), Some(17)).unwrap();
    let (back, manifest) = read_model(&model_dir).unwrap();
    assert_eq!(back, model);
    assert_eq!((manifest.dims, manifest.seed), (vec![5, 4, 3], Some(17)));

    let made = generate_dataset(&model_dir, 40, 3, SensingDistribution::Rademacher, 0.1, 4, &data_dir).unwrap();
    let (loaded, manifest) = read_dataset(&data_dir).unwrap();
    assert_eq!(loaded.y, made.y);
    assert_eq!(loaded.map.m(), 40);
    assert_eq!(manifest.noise_seed, 4);
    assert_eq!(loaded.truth.as_ref(), Some(&model));
    // the stored map regenerates the same responses
    let clean = loaded.map.apply(&model.compose()).unwrap();
    let noise: Vec<f64> = loaded.y.iter().zip(&clean).map(|(a, b)| a - b).collect();
    let want = tuckreg_core::measure::gaussian_noise(40, 0.1, 4).unwrap();
    assert!(noise.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-14));
}

#[test]
fn truncated_responses_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let model_dir = dir.path().join("model");
    let data_dir = dir.path().join("data");
    write_model(&model_dir, &gen_model(&[3, 3], &[1, 1], &[2, 2], 0.5, 1).unwrap(), None, None).unwrap();
    generate_dataset(&model_dir, 10, 1, SensingDistribution::Gaussian, 0.0, 1, &data_dir).unwrap();
    let y = data_dir.join("y.bin");
    let bytes = fs::read(&y).unwrap();
    fs::write(&y, &bytes[..bytes.len() - 8]).unwrap();
    assert!(read_dataset(&data_dir).is_err());
}
