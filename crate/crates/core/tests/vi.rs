use std::sync::Arc;

use dasa::bandwidth::{build_instance, settings_table, NetworkTopology};
use dasa::vi::{
    estimate_constants, evaluate_mapping, natural_residual, sample_noisy_mapping, AffineMapping, BoxSet,
    DecisionVector, FeasibleSet, GameInstance,
};
use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shifted_identity() -> (FeasibleSet, AffineMapping) {
    // F(x) = x - 1 on [0, 2]
    (
        FeasibleSet::Box(BoxSet::uniform(1, 0.0, 2.0).unwrap()),
        AffineMapping::new(DMatrix::identity(1, 1), dvector![-1.0]).unwrap(),
    )
}

#[test]
fn affine_evaluation() {
    let map = AffineMapping::new(DMatrix::identity(2, 2) * 2.0, DVector::zeros(2)).unwrap();
    let x = DecisionVector::single(dvector![1.0, 2.0]).unwrap();
    assert_eq!(evaluate_mapping(&map, &x).unwrap(), dvector![2.0, 4.0]);
    assert!(evaluate_mapping(&map, &DecisionVector::single(dvector![1.0]).unwrap()).is_err());
}

#[test]
fn natural_residual_examples() {
    let (set, map) = shifted_identity();
    let at = |v: f64| natural_residual(&set, &map, &DecisionVector::single(dvector![v]).unwrap(), 0.5).unwrap();
    assert_eq!(at(1.0), 0.0);
    assert!((at(2.0) - 0.5).abs() < 1e-15);
    assert!(natural_residual(&set, &map, &DecisionVector::single(dvector![1.0]).unwrap(), 0.0).is_err());
}

#[test]
fn noise_free_sample_equals_mapping() {
    let (_, map) = shifted_identity();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = DecisionVector::single(dvector![0.3]).unwrap();
    assert_eq!(sample_noisy_mapping(&map, &x, &mut rng).unwrap(), evaluate_mapping(&map, &x).unwrap());
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let inst = build_instance(&NetworkTopology::default_network(), &settings_table()[0]).unwrap();
    let x = DVector::from_element(9, 0.2);
    let draw = || inst.mapping().sample(&x, &mut ChaCha8Rng::seed_from_u64(11));
    assert_eq!(draw(), draw());
}

#[test]
fn sampled_mapping_is_unbiased() {
    const M: usize = 100_000;
    let inst = build_instance(&NetworkTopology::default_network(), &settings_table()[8]).unwrap();
    let nu = inst.constants().unwrap().nu;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let x = inst.set().sample_point(&mut rng).unwrap();
        let f = inst.mapping().evaluate(&x);
        let mut mean = DVector::zeros(9);
        for _ in 0..M {
            mean += inst.mapping().sample(&x, &mut rng) - &f;
        }
        mean /= M as f64;
        assert!(mean.norm() <= 5.0 * nu / (M as f64).sqrt(), "bias {}", mean.norm());
    }
}

#[test]
fn constants_of_scalar_map_are_exact() {
    let map = AffineMapping::new(DMatrix::identity(3, 3) * 1.7, DVector::zeros(3)).unwrap();
    let set = FeasibleSet::Box(BoxSet::uniform(3, -1.0, 1.0).unwrap());
    let k = estimate_constants(&map, &set, 20, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert!((k.eta - 1.7).abs() < 1e-12 && (k.lipschitz - 1.7).abs() < 1e-12);
    assert_eq!(k.nu, 0.0);
}

#[test]
fn constants_of_rotation_map_approach_eigen_bounds() {
    // η = λ_min((B+Bᵀ)/2) = 2 and L = ||B||₂ = √5
    let map = AffineMapping::new(dmatrix![2.0, 1.0; -1.0, 2.0], DVector::zeros(2)).unwrap();
    let set = FeasibleSet::Box(BoxSet::uniform(2, -1.0, 1.0).unwrap());
    let k = estimate_constants(&map, &set, 200, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    assert!((k.eta - 2.0).abs() < 1e-9);
    assert!((k.lipschitz - 5f64.sqrt()).abs() < 1e-9);
    assert!(k.diameter.unwrap() <= 8f64.sqrt());
}

#[test]
fn constants_need_bounded_set() {
    let (_, map) = shifted_identity();
    let set = FeasibleSet::Box(BoxSet::new(dvector![0.0], dvector![f64::INFINITY]).unwrap());
    assert!(estimate_constants(&map, &set, 10, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
}

#[test]
fn decision_vector_blocks() {
    let x = DecisionVector::from_blocks(vec![vec![1.0, 2.0], vec![3.0]]).unwrap();
    assert_eq!((x.dim(), x.num_players()), (3, 2));
    assert_eq!(x.block(1), &[3.0]);
    assert!(DecisionVector::from_blocks(vec![vec![f64::INFINITY]]).is_err());
}

#[test]
fn instance_rejects_inconsistent_blocks() {
    let (set, map) = shifted_identity();
    assert!(GameInstance::new("bad", Arc::new(map), set, vec![2]).is_err());
}
