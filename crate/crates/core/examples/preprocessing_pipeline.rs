//! One image through the input pipeline: PGM bytes, decode, resize to the
//! network input, optional blur, normalisation to [−1, 1].
//!
//!     cargo run --release --example preprocessing_pipeline

use hpnn::data::{box_blur, decode_pgm, encode_pgm, mean_filter, normalize, render_synthetic, resize_bilinear, SynthConfig};

fn ascii(img: &hpnn::data::GrayImage) {
    let ramp = b" .:-=+*#%@";
    for r in (0..img.height()).step_by(2) {
        let line: String =
            (0..img.width()).map(|c| ramp[(img.get(r, c) / 256.0 * ramp.len() as f64) as usize] as char).collect();
        println!("  {line}");
    }
}

fn main() -> hpnn::Result<()> {
    let (index, images) = render_synthetic(&SynthConfig { classes: 4, subjects: 10, per_subject: 1, size: 64, seed: 1 })?;
    let record = &index.records[1];
    println!("{} (subject {}, class {})", record.image_path, record.subject_id, record.label_name);

    let bytes = encode_pgm(&images[1]);
    println!("PGM: {} bytes, header {:?}", bytes.len(), String::from_utf8_lossy(&bytes[..12]));
    let decoded = decode_pgm(&bytes)?;
    let small = resize_bilinear(&decoded, 32, 32);
    println!("resized to 32x32, range {:?}", small.min_max());
    ascii(&small);

    for size in [3, 9] {
        let blurred = mean_filter(&small, size)?;
        println!("mean filter {size}, range {:?}", blurred.min_max());
        ascii(&blurred);
    }
    let even = box_blur(&small, 6)?;
    println!("box blur 6 (even sizes lean towards the top-left), range {:?}", even.min_max());

    let map = normalize(&small);
    let (lo, hi) = map.values().iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    println!("normalised feature map {:?}, values in [{lo:.3}, {hi:.3}]", map.shape());
    Ok(())
}
