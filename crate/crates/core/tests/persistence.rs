use seismic_core::io::{load_collection, read_results_tsv, save_collection, write_results_tsv};
use seismic_core::synth::{zipf_dataset, ZipfSpec};
use seismic_core::{BuildParams, KnnGraph, SearchParams, Searcher, SeismicIndex};

fn small() -> (seismic_core::VectorSetF32, seismic_core::VectorSetF32) {
    zipf_dataset(
        ZipfSpec {
            dim: 1000,
            ..ZipfSpec::default()
        },
        800,
        10,
        21,
    )
}

#[test]
fn collection_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("docs.csr");
    let (set, _) = small();
    save_collection(&set, &path).unwrap();
    assert_eq!(load_collection(&path).unwrap(), set);
}

#[test]
fn index_file_round_trip_searches_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("docs.idx");
    let (set, queries) = small();
    for quantize in [true, false] {
        let index = SeismicIndex::build(
            &set,
            BuildParams {
                quantize,
                ..BuildParams::default()
            },
        )
        .unwrap();
        index.save(&path).unwrap();
        let loaded = SeismicIndex::load(&path).unwrap();
        assert_eq!(loaded.to_bytes(), index.to_bytes());
        let params = SearchParams::new(10, 0.8, 0.9);
        for q in queries.iter() {
            let a = Searcher::new(&index, None).search(q, &params).unwrap();
            let b = Searcher::new(&loaded, None).search(q, &params).unwrap();
            assert_eq!(a.results, b.results);
        }
    }
}

#[test]
fn truncated_index_is_an_error() {
    let (set, _) = small();
    let bytes = SeismicIndex::build(&set, BuildParams::default())
        .unwrap()
        .to_bytes();
    for cut in [0, 7, 12, bytes.len() / 2, bytes.len() - 1] {
        assert!(
            SeismicIndex::from_bytes(&bytes[..cut]).is_err(),
            "cut at {cut}"
        );
    }
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(SeismicIndex::from_bytes(&bad).is_err());
}

#[test]
fn graph_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("docs.knn");
    let (set, _) = small();
    let g = KnnGraph::exact(&set, 6);
    g.save(&path).unwrap();
    assert_eq!(KnnGraph::load(&path).unwrap(), g);
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 13 + 800 * 6 * 2);
}

#[test]
fn results_tsv_round_trip() {
    let (set, queries) = small();
    let index = SeismicIndex::build(&set, BuildParams::default()).unwrap();
    let searcher = Searcher::new(&index, None);
    let runs: Vec<_> = queries
        .iter()
        .map(|q| {
            searcher
                .search(q, &SearchParams::new(5, 0.8, 0.9))
                .unwrap()
                .results
        })
        .collect();
    let mut buf = Vec::new();
    write_results_tsv(&mut buf, &runs).unwrap();
    let back = read_results_tsv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), runs.len());
    for (a, b) in back.iter().zip(&runs) {
        let ids: Vec<u32> = a.iter().map(|s| s.id).collect();
        assert_eq!(ids, b.iter().map(|s| s.id).collect::<Vec<_>>());
    }
}
