//! Builds a small C program against the generated header and the static
//! library and runs it.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "slalom.h"

int main(void) {
    uint64_t f[2] = {3, 3}, g[2] = {2, 2}, n = 0;
    if (slalom_cover_number(f, g, 2, 16, &n) != SLALOM_STATUS_OK || n != 3) return 1;
    SlalomCondition *c = NULL;
    const char *json = "{\"depth\":1,\"coords\":{\"a\":{\"triple\":{\"f\":[4],\"g\":[2],\"h\":[2]},\"nodes\":[[],[1]]}}}";
    if (slalom_condition_from_json(json, &c) != SLALOM_STATUS_OK) return 2;
    if (slalom_condition_validate(c) != SLALOM_STATUS_OK) return 3;
    char *out = NULL;
    if (slalom_condition_to_json(c, &out) != SLALOM_STATUS_OK || strstr(out, "\"depth\":1") == NULL) return 4;
    slalom_string_free(out);
    slalom_condition_free(c);
    if (slalom_condition_from_json("nope", &c) != SLALOM_STATUS_INVALID_INPUT) return 5;
    if (slalom_last_error() == NULL) return 6;
    printf("ok\n");
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // .../target/<profile>/deps/header-<hash>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libslalom_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or {} missing", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let st = Command::new("cc")
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(st.success(), "C build failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}
