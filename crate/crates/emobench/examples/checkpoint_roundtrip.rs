//! The self-describing checkpoint container: save, inspect, reload, and
//! verify the byte-exact round trip.
//!
//! ```bash
//! cargo run --example checkpoint_roundtrip
//! ```

use emobench::encoder::{load_tensors, EncoderConfig, EncoderModel};

fn main() -> emobench::Result<()> {
    let config = EncoderConfig::new(120).with_dims(2, 2, 16, 32).with_max_seq_len(24);
    let model = EncoderModel::init(config, 42)?.with_mask_id(4);

    let dir = std::env::temp_dir().join("emobench_checkpoint_example");
    std::fs::create_dir_all(&dir)?;
    let first = dir.join("model.ckpt");
    let second = dir.join("model_resaved.ckpt");

    model.save(&first)?;
    println!("saved {} ({} bytes)", first.display(), std::fs::metadata(&first)?.len());

    // The manifest is ordinary JSON followed by little-endian f32 arrays.
    let file = load_tensors(&first)?;
    println!("\nmanifest meta kind: {}", file.meta["kind"]);
    println!("tensors ({} total, first six):", file.tensors.len());
    for (name, shape, data) in file.tensors.iter().take(6) {
        println!("  {:<16} shape {:?} ({} values)", name, shape, data.len());
    }

    let restored = EncoderModel::load(&first)?;
    restored.save(&second)?;
    let a = std::fs::read(&first)?;
    let b = std::fs::read(&second)?;
    println!("\nsave -> load -> save is byte-identical: {}", a == b);

    let logits = restored.forward(&[1, 2, 3], &[true; 3])?;
    println!("restored model forward shape: {:?}", logits.shape());
    Ok(())
}
