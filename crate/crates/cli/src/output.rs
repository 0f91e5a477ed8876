//! CSV and sidecar emission. Floats use 17 significant digits, lines end in
//! LF, and every file is written to a temporary name and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sqzengine_core::engine::Sample;
use sqzengine_core::otto::{NbarStar, SweepCell};

pub const TIMESERIES_HEADER: &str =
    "t,omega,L,n_mean,re_a2,im_a2,energy,pressure,w_alicki,w_alicki_zp,delta_w,w_expansion";
pub const SWEEP_HEADER: &str = "r2,nbar,w_expansion_net,cycles_run,limit_cycle_reached";
pub const NSTAR_HEADER: &str = "r2,nbar_star,w_expansion,at_edge,evaluations,status";
pub const NSTAR_GRID_HEADER: &str = "r2,nbar,w_expansion_net";

/// A named file to be written into the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn timeseries_csv(series: &[Sample], with_stroke: bool) -> String {
    let mut out = String::from(TIMESERIES_HEADER);
    if with_stroke {
        out.push_str(",stroke");
    }
    out.push('\n');
    for s in series {
        let cols = [
            s.t,
            s.omega,
            s.length,
            s.n_mean,
            s.a2.re,
            s.a2.im,
            s.energy,
            s.pressure,
            s.w_alicki,
            s.w_alicki_zp,
            s.delta_w,
            s.w_expansion,
        ];
        let row: Vec<String> = cols.iter().map(|&x| num(x)).collect();
        out.push_str(&row.join(","));
        if with_stroke {
            let _ = write!(out, ",{}", s.stroke);
        }
        out.push('\n');
    }
    out
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            num(c.r2),
            num(c.nbar),
            num(c.w_expansion_net),
            c.cycles_run,
            c.limit_cycle_reached
        );
    }
    out
}

/// One row per `r2`; failed searches carry NaN and their error class.
pub fn nstar_csv(rows: &[(f64, Result<NbarStar, String>)]) -> (String, String) {
    let mut main = format!("{NSTAR_HEADER}\n");
    let mut grid = format!("{NSTAR_GRID_HEADER}\n");
    for (r2, res) in rows {
        match res {
            Ok(s) => {
                let _ = writeln!(
                    main,
                    "{},{},{},{},{},ok",
                    num(*r2),
                    num(s.nbar_star),
                    num(s.w_expansion),
                    s.at_edge,
                    s.evaluations
                );
                for (n, w) in &s.grid {
                    let _ = writeln!(grid, "{},{},{}", num(*r2), num(*n), num(*w));
                }
            }
            Err(_) => {
                let _ = writeln!(main, "{},NaN,NaN,false,0,error", num(*r2));
            }
        }
    }
    (main, grid)
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, &target)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map(|_| target)
}

pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> std::io::Result<Vec<PathBuf>> {
    artifacts.iter().map(|a| write_atomic(dir, &a.name, &a.contents)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use sqzengine_core::C64;

    fn sample(t: f64, stroke: usize) -> Sample {
        Sample {
            t,
            omega: 1.0,
            length: 2.0,
            n_mean: 0.1,
            a2: C64::new(0.5, -0.25),
            energy: 0.6,
            pressure: 0.05,
            w_alicki: 0.0,
            w_alicki_zp: 0.0,
            delta_w: 0.0,
            w_expansion: 0.0,
            stroke,
        }
    }

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(num(-2.5e-300).parse::<f64>().unwrap(), -2.5e-300);
    }

    #[test]
    fn timeseries_layout() {
        let csv = timeseries_csv(&[sample(0.0, 0), sample(0.5, 1)], true);
        let lines: Vec<&str> = csv.split('\n').collect();
        assert_eq!(lines[0], format!("{TIMESERIES_HEADER},stroke"));
        assert_eq!(lines.len(), 4);
        assert!(lines[2].ends_with(",1"));
        assert_eq!(lines[3], "");
        assert!(!csv.contains('\r'));
        assert_eq!(lines[1].split(',').count(), 13);
    }

    #[test]
    fn atomic_write_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.csv", "x\n").unwrap();
        write_atomic(dir.path(), "a.csv", "y\n").unwrap();
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from("a.csv")]);
        assert_eq!(fs::read_to_string(dir.path().join("a.csv")).unwrap(), "y\n");
    }
}
