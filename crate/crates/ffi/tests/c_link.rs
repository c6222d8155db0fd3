//! Compiles a small C program against the generated header and the static
//! library. Skipped when no C compiler or static library is available.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "sepsaddle.h"

int main(void) {
    SepDataset *ds = NULL;
    if (sep_dataset_synthetic(50, 10, 3, &ds) != SEP_STATUS_OK) return 1;
    double ref = 0.0;
    if (sep_ridge_reference(ds, 1e-2, &ref, NULL, 0) != SEP_STATUS_OK) return 2;
    SepSolverConfig cfg = sep_solver_config_default(SEP_VARIANT_ADASPDC);
    cfg.max_passes = 30.0;
    SepTrace *trace = NULL;
    if (sep_run(ds, SEP_LOSS_RIDGE, 1e-2, &cfg, ref, &trace) != SEP_STATUS_OK) return 3;
    size_t len = 0;
    sep_trace_len(trace, &len);
    SepTraceRecord last;
    sep_trace_get(trace, len - 1, &last);
    printf("%zu %.3e\n", len, last.suboptimality);
    if (sep_dataset_synthetic(0, 1, 0, NULL) != SEP_STATUS_NULL_POINTER) return 4;
    if (sep_last_error_message() == NULL) return 5;
    sep_trace_free(trace);
    sep_dataset_free(ds);
    return last.suboptimality < 1e-4 ? 0 : 6;
}
"#;

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libsepsaddle_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C toolchain or static library");
        return;
    }
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let work = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("c_link");
    std::fs::create_dir_all(&work).unwrap();
    let src = work.join("main.c");
    let bin = work.join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program failed: {:?} {}", out.status, String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("31 "), "{stdout}");
}
