//! Compile a small C program against the generated header and the static
//! library, then run it. Exercises the ABI exactly as a foreign binding
//! would.

use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include <assert.h>
#include <math.h>
#include <stdio.h>
#include "dqwgeom.h"

int main(void) {
    DqwLattice *lat = NULL;
    DqwTheta *theta = NULL;
    assert(dqw_lattice_new(7, 4, 0.1, &lat) == DQW_STATUS_INVALID_ARGUMENT);
    char msg[128];
    dqw_last_error(msg, sizeof msg);
    assert(msg[0] != '\0');

    assert(dqw_lattice_new(8, 30, 0.05, &lat) == DQW_STATUS_OK);
    assert(dqw_theta_parse("arccos(1/(1+0.1*sin(t)))", &theta) == DQW_STATUS_OK);

    double v = -1.0;
    assert(dqw_theta_eval(theta, lat, 0, 0, &v) == DQW_STATUS_OK);
    assert(fabs(v) < 1e-12);

    double norms[21];
    assert(dqw_walk_norms(lat, theta, 7, 20, norms) == DQW_STATUS_OK);
    for (int i = 0; i <= 20; ++i) {
        assert(fabs(norms[i] - norms[0]) < 1e-12);
    }

    double rho[8 * 30];
    uint32_t lo = 99, hi = 0;
    assert(dqw_rho_slow(lat, theta, rho, &lo, &hi) == DQW_STATUS_OK);
    assert(lo == 0 && hi == 24);
    assert(isfinite(rho[10 * 8 + 3]));
    assert(isnan(rho[29 * 8]));

    dqw_theta_free(theta);
    dqw_lattice_free(lat);
    printf("c smoke ok, version %s\n", dqw_version());
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let cc = ["cc", "gcc", "clang"]
        .iter()
        .find(|cc| Command::new(cc).arg("--version").output().is_ok())
        .copied();
    let Some(cc) = cc else {
        eprintln!("no C compiler available; skipping");
        return;
    };

    // the archive sits in deps/ during `cargo test` and one level up after
    // `cargo build`
    let deps_dir = {
        let mut d = std::env::current_exe().unwrap();
        d.pop();
        d
    };
    let staticlib = [deps_dir.join("libdqw_geom_ffi.a"), {
        let mut d = deps_dir.clone();
        d.pop();
        d.join("libdqw_geom_ffi.a")
    }]
    .into_iter()
    .find(|p| p.exists());
    let Some(staticlib) = staticlib else {
        panic!("static library not found near {}", deps_dir.display());
    };
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");

    let work = tempdir();
    let src = work.join("smoke.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let prog = work.join("smoke");
    let out = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&staticlib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&prog)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let run = Command::new(&prog).output().unwrap();
    assert!(
        run.status.success(),
        "run failed:\n{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).contains("c smoke ok"));
    std::fs::remove_dir_all(&work).ok();
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dqw-ffi-smoke-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
