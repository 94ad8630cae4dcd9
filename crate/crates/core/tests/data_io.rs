use std::fs;

use rankset::data::{
    generate_synthetic, parse_letor, read_dataset, read_pairwise, write_dataset, write_embeddings,
    write_letor, write_pairwise, write_rankings, SyntheticSpec,
};
use rankset::Error;

const FIXTURE: &[u8] = include_bytes!("fixtures/sample.letor");

#[test]
fn letor_fixture_round_trips() {
    let parsed = parse_letor(FIXTURE).unwrap();
    let ids: Vec<&str> = parsed.iter().map(|q| q.query_id.as_str()).collect();
    assert_eq!(ids, vec!["101", "102", "205", "7", "3000", "12"]);
    assert_eq!(parsed.iter().map(|q| q.items.len()).sum::<usize>(), 50);
    assert_eq!(parsed[0].items[0].comment.as_deref(), Some("docid=D000"));
    assert_eq!(parsed[0].items[0].features, vec![(27, 1.0), (102, 0.2964)]);

    let mut out = Vec::new();
    write_letor(&mut out, &parsed).unwrap();
    assert_eq!(parse_letor(&out).unwrap(), parsed);

    for q in &parsed {
        let r = q.ranking().unwrap();
        assert_eq!(r.len(), q.items.len());
    }
}

#[test]
fn synthetic_dataset_round_trips_through_files() {
    let dir = std::env::temp_dir().join(format!("rankset-io-{}", std::process::id()));
    let data = generate_synthetic(&SyntheticSpec::new(3, 3)).unwrap();
    let paths = write_dataset(&dir, &data).unwrap();
    assert!(paths.embeddings.is_some());
    assert_eq!(read_dataset(&paths).unwrap(), data);

    let plain = generate_synthetic(&SyntheticSpec {
        embedding_dim: 0,
        ..SyntheticSpec::new(3, 3)
    })
    .unwrap();
    let sub = dir.join("plain");
    let paths = write_dataset(&sub, &plain).unwrap();
    assert!(paths.embeddings.is_none());
    assert_eq!(read_dataset(&paths).unwrap(), plain);
    fs::remove_dir_all(&dir).unwrap();
}

fn serialize(seed: u64) -> Vec<u8> {
    let data = generate_synthetic(&SyntheticSpec::new(seed, 25)).unwrap();
    let mut buf = Vec::new();
    write_pairwise(
        &mut buf,
        data.iter().map(|q| (q.query_id.as_str(), &q.scores)),
    )
    .unwrap();
    write_rankings(
        &mut buf,
        data.iter().map(|q| (q.query_id.as_str(), &q.ranking)),
    )
    .unwrap();
    write_embeddings(
        &mut buf,
        data.iter()
            .map(|q| (q.query_id.as_str(), q.embeddings.as_ref().unwrap())),
    )
    .unwrap();
    buf
}

#[test]
fn generation_is_byte_reproducible() {
    assert_eq!(serialize(99), serialize(99));
    assert_ne!(serialize(99), serialize(100));
}

#[test]
fn header_row_mismatch_names_query() {
    let text = "query alpha k 2\n0 0.5\n0.5 0\nquery beta k 3\n0 0.5 0.5\n0.5 0 0.5\n";
    match read_pairwise(text.as_bytes()) {
        Err(Error::Schema { query, message }) => {
            assert_eq!(query, "beta");
            assert!(message.contains("3 rows"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
}
