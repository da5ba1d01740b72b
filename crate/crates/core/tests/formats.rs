use firstthird::io::{read_checkpoint, write_checkpoint, load_checkpoint, save_checkpoint};
use firstthird::synth::{generate_synthetic, SyntheticConfig};
use firstthird::training::{train, TrainConfig, TrainState};
use firstthird::Error;

fn trained() -> TrainState {
    let ds = generate_synthetic(&SyntheticConfig { n_pairs: 8, frames_per_video: 40, ..Default::default() }).unwrap();
    let cfg = TrainConfig {
        hidden_dim: 12,
        embed_dim: 6,
        epochs: 2,
        base_lr: 1e-3,
        mixed_mode: true,
        share_ego_selectors: false,
        ..Default::default()
    };
    train(cfg, &ds.index).unwrap()
}

#[test]
fn checkpoint_round_trips_bit_exactly() {
    let state = trained();
    let bytes = write_checkpoint(&state).unwrap();
    assert_eq!(&bytes[..4], b"AOCK");
    let back = read_checkpoint(&bytes).unwrap();
    assert_eq!(back, state);
    assert_eq!(write_checkpoint(&back).unwrap(), bytes);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back.model.values), bits(&state.model.values));
    assert_eq!(bits(&back.optimizer.velocity), bits(&state.optimizer.velocity));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/ck.aock");
    save_checkpoint(&path, &state).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap(), state);
}

#[test]
fn damaged_checkpoints_are_rejected_by_class() {
    let bytes = write_checkpoint(&trained()).unwrap();
    for cut in [3, 8, 20, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(read_checkpoint(&bytes[..cut]), Err(Error::Corruption(_))), "cut at {cut}");
    }
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(read_checkpoint(&extra), Err(Error::Corruption(_))));
    let mut magic = bytes.clone();
    magic[1] = b'X';
    assert!(matches!(read_checkpoint(&magic), Err(Error::Format(_))));
    let mut version = bytes;
    version[4] = 7;
    assert!(matches!(read_checkpoint(&version), Err(Error::Format(_))));
}
