use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scriptdet_core::annotation::{ClassSplit, DetectionRecord, DetectionSet, ScriptClass};
use scriptdet_core::classifier::{
    assign_detections, classify_region, cosine_similarity, ClassEmbeddingTable, ClassifyError, EmbeddingVector,
    ScoreMode,
};
use scriptdet_core::geometry::Quad;

const SCRIPTS: [&str; 7] = ["arabic", "bangla", "chinese", "hindi", "japanese", "korean", "latin"];

fn class(name: &str) -> ScriptClass {
    ScriptClass::new(name).unwrap()
}

fn gaussian_ish<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    // Sum of uniforms; only rough isotropy is needed.
    (0..dim)
        .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).sum::<f64>())
        .collect()
}

fn random_table(seed: u64, dim: usize) -> ClassEmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = SCRIPTS
        .iter()
        .map(|s| (class(s), EmbeddingVector::from(gaussian_ish(&mut rng, dim))))
        .collect();
    ClassEmbeddingTable::new(entries).unwrap()
}

fn all_classes() -> BTreeSet<ScriptClass> {
    SCRIPTS.iter().map(|s| class(s)).collect()
}

#[test]
fn noisy_hindi_stays_hindi() {
    let table = random_table(11, 300);
    let hindi = table.get(&class("hindi")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let noisy: Vec<f64> = hindi.values().iter().map(|x| x + rng.gen_range(-1e-3..1e-3)).collect();
    let v = EmbeddingVector::from(noisy);

    let unseen = ClassSplit::default().unseen().clone();
    let decision = classify_region(&v, &table, &unseen).unwrap();
    assert_eq!(decision.script.as_str(), "hindi");
    // The margin is not a coincidence: the runner-up is far behind.
    let runner_up = ["chinese", "korean"]
        .iter()
        .map(|c| cosine_similarity(&v, table.get(&class(c)).unwrap()).unwrap())
        .fold(f64::MIN, f64::max);
    assert!(
        decision.similarity > 0.999_99 && runner_up < 0.5,
        "{} {runner_up}",
        decision.similarity
    );
}

#[test]
fn one_hot_reduces_to_component_argmax() {
    let entries = ["a", "b", "c"]
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let mut e = vec![0.0; 3];
            e[i] = 1.0;
            (class(n), EmbeddingVector::from(e))
        })
        .collect();
    let table = ClassEmbeddingTable::new(entries).unwrap();
    let all: BTreeSet<_> = ["a", "b", "c"].iter().map(|n| class(n)).collect();
    let d = classify_region(&EmbeddingVector::from(vec![0.0, 1.0, 0.0]), &table, &all).unwrap();
    assert_eq!((d.script.as_str(), d.similarity), ("b", 1.0));
    // a and c tie; a sorts first.
    let d = classify_region(&EmbeddingVector::from(vec![1.0, 0.0, 1.0]), &table, &all).unwrap();
    assert_eq!(d.script.as_str(), "a");
}

#[test]
fn errors() {
    let table = random_table(1, 4);
    let v = EmbeddingVector::from(vec![1.0, 2.0, 3.0]);
    assert!(matches!(
        classify_region(&v, &table, &all_classes()),
        Err(ClassifyError::DimensionMismatch { .. })
    ));
    let v = EmbeddingVector::from(vec![1.0, 2.0, 3.0, 4.0]);
    assert_eq!(
        classify_region(&v, &table, &BTreeSet::new()),
        Err(ClassifyError::EmptyAllowedSet)
    );
    let odd: BTreeSet<_> = [class("klingon")].into();
    assert!(matches!(
        classify_region(&v, &table, &odd),
        Err(ClassifyError::UnknownClass(_))
    ));
}

#[test]
fn unresolved_detections_are_reported() {
    let table = random_table(3, 5);
    let quad = Quad::rect(0.0, 0.0, 4.0, 2.0).unwrap();
    let det = |id: Option<&str>| DetectionRecord {
        image_id: "img".into(),
        quad,
        confidence: 0.5,
        region_id: id.map(Into::into),
    };
    let dets: DetectionSet = [("img".to_string(), vec![det(Some("r1")), det(Some("r2")), det(None)])].into();
    let embeddings: BTreeMap<String, EmbeddingVector> =
        [("r1".to_string(), table.get(&class("korean")).unwrap().clone())].into();
    let unseen = ClassSplit::default().unseen().clone();
    let run = assign_detections(&dets, &embeddings, &table, &unseen, ScoreMode::Product).unwrap();
    assert_eq!(run.assignments.len(), 1);
    let a = &run.assignments[&("img".to_string(), "r1".to_string())];
    assert_eq!(a.script.as_str(), "korean");
    assert!((a.rank_score - 0.5).abs() < 1e-12);
    assert_eq!(
        run.unresolved,
        [("img".to_string(), Some("r2".to_string())), ("img".to_string(), None)]
    );
}

proptest! {
    #[test]
    fn scale_invariant(seed in any::<u64>(), s in 1e-3f64..1e3, t in 1e-3f64..1e3) {
        let table = random_table(seed, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let v = EmbeddingVector::from(gaussian_ish(&mut rng, 8));
        let all = all_classes();
        let base = classify_region(&v, &table, &all).unwrap();
        let moved = classify_region(&v.scaled(s), &table.scaled(t), &all).unwrap();
        prop_assert_eq!(&base.script, &moved.script);
        prop_assert!((base.similarity - moved.similarity).abs() < 1e-12);
    }

    #[test]
    fn restriction_keeps_winner(seed in any::<u64>(), mask in 1u8..128) {
        let table = random_table(seed, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let v = EmbeddingVector::from(gaussian_ish(&mut rng, 6));
        let all = all_classes();
        let subset: BTreeSet<_> = SCRIPTS
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, s)| class(s))
            .collect();
        let full = classify_region(&v, &table, &all).unwrap();
        let part = classify_region(&v, &table, &subset).unwrap();
        prop_assert!(subset.contains(&part.script));
        prop_assert!(part.similarity <= full.similarity);
        if subset.contains(&full.script) {
            prop_assert_eq!(part, full);
        }
    }
}
