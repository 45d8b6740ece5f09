mod common;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use common::*;
use hpnn::data::{
    box_blur, decode_pgm, denormalize, encode_pgm, generate_synthetic, load_index, mean_filter, normalize,
    render_synthetic, resize_bilinear, subject_folds, Dataset, GrayImage, SynthConfig,
};
use hpnn::{Error, SplitMix64};

const CK_CLASSES: [&str; 8] = ["neutral", "anger", "contempt", "disgust", "fear", "happy", "sadness", "surprise"];

fn ck_style_index() -> String {
    let mut rng = SplitMix64::new(1308);
    let mut text = format!("#classes:{}\n", CK_CLASSES.join(","));
    for row in 0..1308 {
        // Every subject appears; the rest are spread at random.
        let subject = if row < 118 { row } else { rng.below(118) };
        let label = CK_CLASSES[rng.below(8)];
        writeln!(text, "S{:03}/frame_{row:04}.pgm,S{:03},{label}", subject + 1, subject + 1).unwrap();
    }
    text
}

#[test]
fn ck_style_index_counts_match_a_line_count() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("index.csv");
    let text = ck_style_index();
    std::fs::write(&path, &text).unwrap();
    let index = load_index(&path).unwrap();
    assert_eq!(index.records.len(), 1308);
    assert_eq!(index.subject_counts().len(), 118);
    for (c, name) in CK_CLASSES.iter().enumerate() {
        assert_eq!(index.class_counts()[c], count_lines_with_label(&text, name), "{name}");
    }
    let plan = subject_folds(&index, 10).unwrap();
    assert_eq!(plan.fold_sizes(), vec![12, 12, 12, 12, 12, 12, 12, 12, 11, 11]);
}

#[test]
fn index_errors_name_the_row() {
    let text = "#classes:a,b\nx.pgm,1,a\ny.pgm,2,c\n";
    assert!(matches!(hpnn::data::index::parse_index(text), Err(Error::UnknownLabel { line: 3, .. })));
    let text = "#classes:a,b\nx.pgm,1,a\nx.pgm,2,b\n";
    assert!(matches!(hpnn::data::index::parse_index(text), Err(Error::DuplicatePath { line: 3, .. })));
    let two = hpnn::data::index::parse_index("#classes:a,b\nx.pgm,1,a\ny.pgm,2,b\n").unwrap();
    assert_eq!(two.records.len(), 2);
}

#[test]
fn pgm_decoding() {
    let img = decode_pgm(b"P5 2 2 255\n\x00\xff\x80\x40").unwrap();
    assert_eq!(img.pixels(), &[0.0, 255.0, 128.0, 64.0]);
    assert!(matches!(decode_pgm(b"P2 2 2 255\n0 0 0 0"), Err(Error::BadMagic { .. })));
    assert!(matches!(decode_pgm(b"P5 2 2 255\n\x00\x01"), Err(Error::TruncatedPayload { .. })));
    assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
}

#[test]
fn mean_filter_matches_padded_oracle() {
    let (checked, differing) = mean_filter_oracle_sweep();
    assert!(checked >= 100);
    assert_eq!(differing, 0);
}

#[test]
fn box_blur_even_sizes_match_padded_oracle() {
    let mut rng = SplitMix64::new(7);
    for _ in 0..50 {
        let (h, w) = (4 + rng.below(10), 4 + rng.below(10));
        let img = random_gray(&mut rng, h, w);
        for size in [2, 4, 6] {
            assert_eq!(box_blur(&img, size).unwrap().pixels(), padded_mean_oracle(&img, size).as_slice());
        }
        assert!(matches!(mean_filter(&img, 6), Err(Error::EvenFilterSize(6))));
    }
}

#[test]
fn blur_and_resize_stay_in_range() {
    let mut rng = SplitMix64::new(3);
    for _ in 0..50 {
        let (h, w) = (5 + rng.below(20), 5 + rng.below(20));
        let img = random_gray(&mut rng, h, w);
        let (lo, hi) = img.min_max();
        for out in [mean_filter(&img, 3).unwrap(), resize_bilinear(&img, 1 + rng.below(40), 1 + rng.below(40))] {
            assert!(out.pixels().iter().all(|&p| p >= lo && p <= hi));
        }
        let flat = GrayImage::filled(img.height(), img.width(), 77.0).unwrap();
        assert_eq!(resize_bilinear(&flat, 9, 13), GrayImage::filled(9, 13, 77.0).unwrap());
        assert_eq!(mean_filter(&flat, 5).unwrap(), flat);
        let back = denormalize(&normalize(&img)).unwrap();
        assert!(back.pixels().iter().zip(img.pixels()).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

#[test]
fn preprocessing_chain_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig { classes: 2, subjects: 10, per_subject: 1, size: 20, seed: 4 };
    generate_synthetic(&cfg, dir.path()).unwrap();
    let a = Dataset::load(dir.path().join("index.csv"), 12, 12).unwrap();
    let b = Dataset::load(dir.path().join("index.csv"), 12, 12).unwrap();
    assert_eq!(a.all_samples(None).unwrap(), b.all_samples(None).unwrap());
    assert_eq!(a.all_samples(Some(3)).unwrap(), b.all_samples(Some(3)).unwrap());
    let s = &a.all_samples(None).unwrap()[0];
    assert_eq!(s.input.shape(), (1, 12, 12));
    assert!(s.input.values().iter().all(|v| (-1.0..=1.0).contains(v)));
}

fn read_tree(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in ["", "images"] {
        for entry in std::fs::read_dir(dir.join(sub)).unwrap() {
            let path = entry.unwrap().path();
            if path.is_file() {
                out.insert(format!("{sub}/{}", path.file_name().unwrap().to_string_lossy()), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn synthetic_corpus_is_balanced_and_reproducible() {
    let cfg = SynthConfig { classes: 4, subjects: 20, per_subject: 5, size: 24, seed: 11 };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let index = generate_synthetic(&cfg, a.path()).unwrap();
    generate_synthetic(&cfg, b.path()).unwrap();
    assert_eq!(index.records.len(), 400);
    assert_eq!(index.class_counts(), vec![100; 4]);
    let text = std::fs::read_to_string(a.path().join("index.csv")).unwrap();
    assert_eq!(text.lines().count(), 401);
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    assert_eq!(ta.len(), 401);
    assert_eq!(ta, tb);
    let other = generate_synthetic(&SynthConfig { seed: 12, ..cfg }, tempfile::tempdir().unwrap().path()).unwrap();
    assert_eq!(other.records.len(), 400);
}

#[test]
fn nearest_centroid_beats_chance_on_unseen_subjects() {
    let cfg = SynthConfig { classes: 4, subjects: 20, per_subject: 5, size: 24, seed: 2 };
    let (index, images) = render_synthetic(&cfg).unwrap();
    let held_out = |subject: &str| subject < "s005";
    let dim = 24 * 24;
    let mut centroids = vec![vec![0.0; dim]; 4];
    let mut counts = [0usize; 4];
    for (rec, img) in index.records.iter().zip(&images) {
        if !held_out(&rec.subject_id) {
            counts[rec.label] += 1;
            for (c, p) in centroids[rec.label].iter_mut().zip(img.pixels()) {
                *c += p;
            }
        }
    }
    for (c, n) in centroids.iter_mut().zip(counts) {
        c.iter_mut().for_each(|v| *v /= n as f64);
    }
    let (mut hits, mut total) = (0, 0);
    for (rec, img) in index.records.iter().zip(&images) {
        if held_out(&rec.subject_id) {
            let dist = |c: &Vec<f64>| c.iter().zip(img.pixels()).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let best = (0..4).min_by(|&a, &b| dist(&centroids[a]).total_cmp(&dist(&centroids[b]))).unwrap();
            hits += usize::from(best == rec.label);
            total += 1;
        }
    }
    assert_eq!(total, 4 * 4 * 5);
    assert!(hits as f64 / total as f64 > 0.25 + 0.1, "{hits}/{total}");
}
