use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use firstthird_ffi::*;

const SMALL: &str = "n_pairs = 10\nframes_per_video = 40\n";
const TRAIN: &str = "epochs = 2\nbase_lr = 0.001\nhidden_dim = 16\nembed_dim = 8\nmixed_mode = true\n";

fn last_error() -> String {
    let p = ft_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn dataset(dir: Option<&std::path::Path>) -> *mut FtDataset {
    let cfg = CString::new(SMALL).unwrap();
    let dir = dir.map(|d| CString::new(d.to_str().unwrap()).unwrap());
    let mut out = ptr::null_mut();
    let status = unsafe { ft_synth_generate(cfg.as_ptr(), 3, dir.as_ref().map_or(ptr::null(), |d| d.as_ptr()), &mut out) };
    assert_eq!(status, FtStatus::Ok);
    out
}

#[test]
fn triplet_loss_and_errors() {
    let mut l = 0.0;
    assert_eq!(unsafe { ft_triplet_loss(2.0, 2.0, &mut l) }, FtStatus::Ok);
    assert_eq!(l, 0.5);
    assert!(ft_last_error().is_null());
    assert_eq!(unsafe { ft_triplet_loss(1.0, 0.0, ptr::null_mut()) }, FtStatus::NullArgument);
    assert!(last_error().contains("null"));
    assert_eq!(unsafe { CStr::from_ptr(ft_version()) }.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn load_errors_map_to_status_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut model = ptr::null_mut();
    let missing = CString::new(tmp.path().join("none.aock").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ft_model_load(missing.as_ptr(), &mut model) }, FtStatus::Io);
    let bad = tmp.path().join("bad.aock");
    std::fs::write(&bad, b"ZZZZ\x01\x00\x00\x00").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ft_model_load(bad.as_ptr(), &mut model) }, FtStatus::Format);
    assert!(model.is_null());

    let mut data = ptr::null_mut();
    let cfg = CString::new("bogus_key = 1").unwrap();
    assert_eq!(unsafe { ft_synth_generate(cfg.as_ptr(), 0, ptr::null(), &mut data) }, FtStatus::Config);
    assert!(last_error().contains("bogus_key"));
    let empty = tmp.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let empty = CString::new(empty.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ft_dataset_load(empty.as_ptr(), 0, &mut data) }, FtStatus::Ok);
    assert_eq!(unsafe { ft_dataset_pair_count(data) }, 0);
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { ft_train(data, ptr::null(), &mut m) }, FtStatus::Config);
    unsafe { ft_dataset_free(data) };
    unsafe { ft_dataset_free(ptr::null_mut()) };
    unsafe { ft_model_free(ptr::null_mut()) };
}

#[test]
fn train_save_load_and_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let data = dataset(Some(&tmp.path().join("data")));
    assert_eq!(unsafe { ft_dataset_pair_count(data) }, 10);
    assert_eq!(unsafe { ft_dataset_feature_dim(data) }, 32);

    // the written manifest loads back with the same shape
    let manifest = CString::new(tmp.path().join("data/manifest.jsonl").to_str().unwrap()).unwrap();
    let mut reloaded = ptr::null_mut();
    assert_eq!(unsafe { ft_dataset_load(manifest.as_ptr(), 6, &mut reloaded) }, FtStatus::Ok);
    assert_eq!(unsafe { ft_dataset_pair_count(reloaded) }, 10);

    let cfg = CString::new(TRAIN).unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { ft_train(data, cfg.as_ptr(), &mut model) }, FtStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { ft_model_embed_dim(model) }, 8);

    let frame = vec![0.25; 32];
    let mut emb = vec![0.0; 8];
    assert_eq!(
        unsafe { ft_model_embed(model, FtModality::FirstPerson, frame.as_ptr(), 32, emb.as_mut_ptr(), 8) },
        FtStatus::Ok
    );
    assert!(emb.iter().all(|v| v.is_finite()));
    assert_eq!(
        unsafe { ft_model_embed(model, FtModality::FirstPerson, frame.as_ptr(), 31, emb.as_mut_ptr(), 8) },
        FtStatus::Shape
    );
    assert_eq!(
        unsafe { ft_model_embed(model, FtModality::FirstPerson, frame.as_ptr(), 32, emb.as_mut_ptr(), 4) },
        FtStatus::BufferTooSmall
    );

    let path = CString::new(tmp.path().join("ck.aock").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ft_model_save(model, path.as_ptr()) }, FtStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { ft_model_load(path.as_ptr(), &mut loaded) }, FtStatus::Ok);
    let mut emb2 = vec![0.0; 8];
    unsafe { ft_model_embed(loaded, FtModality::FirstPerson, frame.as_ptr(), 32, emb2.as_mut_ptr(), 8) };
    assert_eq!(emb, emb2);

    let (mut all, mut top) = (0.0, 0.0);
    assert_eq!(unsafe { ft_eval_correspondence(loaded, reloaded, 0.1, &mut all, &mut top) }, FtStatus::Ok);
    assert!((0.0..=1.0).contains(&all) && (0.0..=1.0).contains(&top));
    let mut median = -1.0;
    assert_eq!(unsafe { ft_eval_alignment(loaded, reloaded, 1.0, &mut median) }, FtStatus::Ok);
    assert!(median >= 0.0);

    let mut probs = vec![0.0; 6];
    assert_eq!(unsafe { ft_zero_shot(loaded, reloaded, 0, probs.as_mut_ptr(), 6) }, FtStatus::Ok);
    assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
    assert_eq!(unsafe { ft_zero_shot(loaded, reloaded, 99, probs.as_mut_ptr(), 6) }, FtStatus::OutOfRange);

    for m in [model, loaded] {
        unsafe { ft_model_free(m) };
    }
    for d in [data, reloaded] {
        unsafe { ft_dataset_free(d) };
    }
}

/// Compiles a C program against the generated header and the shared library.
#[test]
fn header_compiles_and_links_from_c() {
    let header_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(header_dir.join("firstthird.h")).unwrap();
    for f in ["ft_train", "ft_model_embed", "ft_eval_alignment", "ft_last_error", "FT_STATUS_CORRUPTION"] {
        assert!(header.contains(f), "{f} missing from header");
    }
    // target/<profile>/deps/<test binary> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    if !lib_dir.join("libfirstthird_ffi.so").exists() || std::process::Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or shared library");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "firstthird.h"
int main(void) {
    double l = 0.0;
    if (ft_triplet_loss(3.0, 3.0, &l) != FT_STATUS_OK || l != 0.5) return 1;
    FtModel *m = NULL;
    if (ft_model_load("/nonexistent/ck.aock", &m) != FT_STATUS_IO || m != NULL) return 2;
    if (ft_last_error() == NULL) return 3;
    FtDataset *d = NULL;
    if (ft_synth_generate("n_pairs = 4\nframes_per_video = 30\n", 1, NULL, &d) != FT_STATUS_OK) return 4;
    if (ft_dataset_pair_count(d) != 4) return 5;
    ft_dataset_free(d);
    printf("ok %s\n", ft_version());
    return 0;
}
"#,
    )
    .unwrap();
    let bin = tmp.path().join("smoke");
    let status = std::process::Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg("-L")
        .arg(lib_dir)
        .arg("-lfirstthird_ffi")
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&bin).env("LD_LIBRARY_PATH", lib_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
