//! Textual file formats: field snapshots, symbol definitions, trajectory CSV.
//!
//! All floats are written with 17 significant digits so that identical runs
//! produce byte-identical artifacts. Writers go through a temp-file-and-rename
//! so no partial artifact is ever visible.

use num_complex::Complex64;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::geodesic::GeodesicTrajectory;
use crate::grid::TorusGrid;
use crate::symbol::{GriddedSymbol, MultiplierDef, SeparableTerm, SymbolSpec};

/// 17 significant digits, scientific.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("tmp~");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serialize a field snapshot:
/// header `EPDIFF-FIELD v1 d=<d> N=<N> c=<c>`, then one line per
/// (component-block, k) with the integer k-tuple and re/im parts.
pub fn field_to_string(f: &SpectralField) -> String {
    let grid = f.grid();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "EPDIFF-FIELD v1 d={} N={} c={}",
        grid.dim(),
        grid.n_per_axis(),
        f.components()
    );
    for c in 0..f.components() {
        for k in grid.band_freqs() {
            let v = f.coeff(c, k);
            if grid.dim() == 1 {
                let _ = writeln!(out, "{} {} {}", k[0], fmt_f64(v.re), fmt_f64(v.im));
            } else {
                let _ = writeln!(out, "{} {} {} {}", k[0], k[1], fmt_f64(v.re), fmt_f64(v.im));
            }
        }
    }
    out
}

pub fn write_field(path: &Path, f: &SpectralField) -> Result<()> {
    atomic_write(path, &field_to_string(f))
}

/// Parse a field snapshot; validates shape and the reality invariant.
pub fn field_from_string(text: &str) -> Result<SpectralField> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty field file".into()))?;
    let mut d = None;
    let mut n = None;
    let mut c = None;
    let mut words = header.split_whitespace();
    if words.next() != Some("EPDIFF-FIELD") || words.next() != Some("v1") {
        return Err(Error::Parse("expected header 'EPDIFF-FIELD v1 ...'".into()));
    }
    for w in words {
        if let Some(v) = w.strip_prefix("d=") {
            d = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
        } else if let Some(v) = w.strip_prefix("N=") {
            n = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
        } else if let Some(v) = w.strip_prefix("c=") {
            c = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
        }
    }
    let (d, n, c) = match (d, n, c) {
        (Some(d), Some(n), Some(c)) => (d, n, c),
        _ => return Err(Error::Parse("header must carry d=, N=, c=".into())),
    };
    let grid = TorusGrid::new(d, n)?;
    let band = grid.band_freqs();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); c * grid.volume()];
    let mut count = 0usize;
    for (ln, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != d + 2 {
            return Err(Error::Parse(format!(
                "line {}: expected {} fields, got {}",
                ln + 2,
                d + 2,
                toks.len()
            )));
        }
        let mut k = [0i64; 2];
        for (axis, t) in toks[..d].iter().enumerate() {
            k[axis] = t.parse().map_err(|e| Error::Parse(format!("line {}: {e}", ln + 2)))?;
        }
        let re: f64 = toks[d].parse().map_err(|e| Error::Parse(format!("line {}: {e}", ln + 2)))?;
        let im: f64 = toks[d + 1]
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 2)))?;
        let comp = count / band.len();
        if comp >= c {
            return Err(Error::Parse("more coefficient lines than expected".into()));
        }
        let idx = grid
            .index_of_freq(k)
            .ok_or_else(|| Error::Parse(format!("line {}: frequency {k:?} outside band", ln + 2)))?;
        coeffs[comp * grid.volume() + idx] = Complex64::new(re, im);
        count += 1;
    }
    if count != c * band.len() {
        return Err(Error::Parse(format!(
            "expected {} coefficient lines, got {count}",
            c * band.len()
        )));
    }
    SpectralField::from_coeffs(grid, c, coeffs)
}

pub fn read_field(path: &Path) -> Result<SpectralField> {
    field_from_string(&fs::read_to_string(path)?)
}

/// Parse a multiplier tag from the catalogue: `bessel_power(s)` or
/// `poly(c0, c1, ...)`.
fn parse_multiplier_tag(tag: &str) -> Result<MultiplierDef> {
    let tag = tag.trim();
    let (name, args) = tag
        .split_once('(')
        .and_then(|(n, rest)| rest.strip_suffix(')').map(|a| (n.trim(), a)))
        .ok_or_else(|| Error::Parse(format!("malformed multiplier tag '{tag}'")))?;
    let nums: Result<Vec<f64>> = args
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("in '{tag}': {e}")))
        })
        .collect();
    let nums = nums?;
    match name {
        "bessel_power" => {
            if nums.len() != 1 {
                return Err(Error::Parse("bessel_power takes one argument".into()));
            }
            Ok(MultiplierDef::BesselPower(nums[0]))
        }
        "poly" => {
            if nums.is_empty() {
                return Err(Error::Parse("poly needs at least one coefficient".into()));
            }
            Ok(MultiplierDef::Poly(nums))
        }
        other => Err(Error::Parse(format!("unknown multiplier tag '{other}'"))),
    }
}

/// Parse a symbol definition file. Layout:
///
/// ```text
/// EPDIFF-SYMBOL v1
/// kind = multiplier | separable | gridded
/// order = 2.0
/// term = bessel_power(1.0)                    # multiplier
/// term = field(g.field) * bessel_power(1.0)   # separable, repeatable
/// term = const(0.5) * poly(1.0, 1.0)
/// term = grid(table.grid)                     # gridded
/// ```
///
/// Field snapshot references are resolved relative to `base_dir`.
pub fn symbol_from_string(text: &str, base_dir: &Path) -> Result<SymbolSpec> {
    let mut kind = None;
    let mut order = None;
    let mut terms: Vec<String> = Vec::new();
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("EPDIFF-SYMBOL v1") => {}
        _ => return Err(Error::Parse("expected header 'EPDIFF-SYMBOL v1'".into())),
    }
    for line in lines {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key = value, got '{line}'")))?;
        match key.trim() {
            "kind" => kind = Some(value.trim().to_string()),
            "order" => {
                order = Some(
                    value
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(e.to_string()))?,
                )
            }
            "term" => terms.push(value.trim().to_string()),
            other => return Err(Error::Parse(format!("unknown key '{other}'"))),
        }
    }
    let kind = kind.ok_or_else(|| Error::Parse("missing 'kind'".into()))?;
    match kind.as_str() {
        "multiplier" => {
            if terms.len() != 1 {
                return Err(Error::Parse("multiplier symbols take exactly one term".into()));
            }
            let def = parse_multiplier_tag(&terms[0])?;
            let order = order.or_else(|| def.order()).ok_or_else(|| {
                Error::Parse("order required when the tag has no intrinsic order".into())
            })?;
            Ok(SymbolSpec::multiplier(def, order))
        }
        "separable" => {
            if terms.is_empty() {
                return Err(Error::Parse("separable symbols need at least one term".into()));
            }
            let mut parsed = Vec::new();
            let mut max_order: f64 = 0.0;
            let mut grid: Option<TorusGrid> = None;
            for t in &terms {
                let (xpart, mpart) = t
                    .split_once('*')
                    .ok_or_else(|| Error::Parse(format!("separable term '{t}' needs x * k parts")))?;
                let xpart = xpart.trim();
                let mdef = parse_multiplier_tag(mpart)?;
                max_order = max_order.max(mdef.order().unwrap_or(0.0));
                let x_factor = if let Some(arg) = xpart
                    .strip_prefix("field(")
                    .and_then(|s| s.strip_suffix(')'))
                {
                    read_field(&base_dir.join(arg.trim()))?
                } else if let Some(arg) = xpart
                    .strip_prefix("const(")
                    .and_then(|s| s.strip_suffix(')'))
                {
                    let v: f64 = arg
                        .trim()
                        .parse()
                        .map_err(|e| Error::Parse(format!("const: {e}")))?;
                    let g = grid.ok_or_else(|| {
                        Error::Parse("const(..) terms must come after a field(..) term".into())
                    })?;
                    SpectralField::constant(g, &[v])
                } else {
                    return Err(Error::Parse(format!("unknown x factor '{xpart}'")));
                };
                grid = Some(x_factor.grid());
                parsed.push(SeparableTerm {
                    x_factor,
                    multiplier: mdef,
                });
            }
            Ok(SymbolSpec::separable(parsed, order.unwrap_or(max_order)))
        }
        "gridded" => {
            if terms.len() != 1 {
                return Err(Error::Parse("gridded symbols take exactly one grid(..) term".into()));
            }
            let arg = terms[0]
                .strip_prefix("grid(")
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| Error::Parse("gridded term must be grid(file)".into()))?;
            let table = read_symbol_grid(&base_dir.join(arg.trim()))?;
            let order = order.ok_or_else(|| Error::Parse("gridded symbols need 'order'".into()))?;
            Ok(SymbolSpec::gridded(table, order))
        }
        other => Err(Error::Parse(format!("unknown symbol kind '{other}'"))),
    }
}

pub fn read_symbol(path: &Path) -> Result<SymbolSpec> {
    let base = path.parent().map(PathBuf::from).unwrap_or_default();
    symbol_from_string(&fs::read_to_string(path)?, &base)
}

/// Gridded symbol table: header `EPDIFF-SYMGRID v1 d=<d> N=<N> c=<c>`, then
/// one line per (x_index, k) with c^2 re/im pairs.
pub fn read_symbol_grid(path: &Path) -> Result<GriddedSymbol> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty symbol grid".into()))?;
    let mut words = header.split_whitespace();
    if words.next() != Some("EPDIFF-SYMGRID") || words.next() != Some("v1") {
        return Err(Error::Parse("expected header 'EPDIFF-SYMGRID v1 ...'".into()));
    }
    let (mut d, mut n, mut c) = (None, None, None);
    for w in words {
        if let Some(v) = w.strip_prefix("d=") {
            d = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
        } else if let Some(v) = w.strip_prefix("N=") {
            n = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
        } else if let Some(v) = w.strip_prefix("c=") {
            c = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
        }
    }
    let (d, n, c) = match (d, n, c) {
        (Some(d), Some(n), Some(c)) => (d, n, c),
        _ => return Err(Error::Parse("header must carry d=, N=, c=".into())),
    };
    let grid = TorusGrid::new(d, n)?;
    let vol = grid.volume();
    let mut values = vec![vec![Complex64::new(0.0, 0.0); c * c]; vol * vol];
    let mut seen = 0usize;
    for (ln, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let expect = 1 + d + 2 * c * c;
        if toks.len() != expect {
            return Err(Error::Parse(format!(
                "line {}: expected {expect} fields, got {}",
                ln + 2,
                toks.len()
            )));
        }
        let x_idx: usize = toks[0]
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 2)))?;
        let mut k = [0i64; 2];
        for axis in 0..d {
            k[axis] = toks[1 + axis]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 2)))?;
        }
        let k_idx = grid
            .index_of_freq(k)
            .ok_or_else(|| Error::Parse(format!("line {}: {k:?} outside band", ln + 2)))?;
        if x_idx >= vol {
            return Err(Error::Parse(format!("line {}: x index out of range", ln + 2)));
        }
        let mut entry = vec![Complex64::new(0.0, 0.0); c * c];
        for e in 0..c * c {
            let re: f64 = toks[1 + d + 2 * e]
                .parse()
                .map_err(|er| Error::Parse(format!("line {}: {er}", ln + 2)))?;
            let im: f64 = toks[1 + d + 2 * e + 1]
                .parse()
                .map_err(|er| Error::Parse(format!("line {}: {er}", ln + 2)))?;
            entry[e] = Complex64::new(re, im);
        }
        values[x_idx * vol + k_idx] = entry;
        seen += 1;
    }
    let expected = vol * (grid.band_size());
    if seen != expected {
        return Err(Error::Parse(format!(
            "expected {expected} table lines, got {seen}"
        )));
    }
    Ok(GriddedSymbol {
        grid,
        comps: c,
        values,
    })
}

/// Trajectory CSV: t, energy, momentum_int[1..d], hq_norm, linf_u, step_residual.
pub fn trajectory_csv(traj: &GeodesicTrajectory, dim: usize) -> String {
    let mut out = String::new();
    let mom_cols: Vec<String> = (1..=dim).map(|i| format!("momentum_int{i}")).collect();
    let _ = writeln!(out, "t,energy,{},hq_norm,linf_u,step_residual", mom_cols.join(","));
    for d in &traj.diagnostics {
        let moms: Vec<String> = d.momentum.iter().map(|m| fmt_f64(*m)).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(d.t),
            fmt_f64(d.energy),
            moms.join(","),
            fmt_f64(d.hq_norm),
            fmt_f64(d.linf_u),
            fmt_f64(d.step_residual)
        );
    }
    out
}

pub fn write_trajectory_csv(path: &Path, traj: &GeodesicTrajectory, dim: usize) -> Result<()> {
    atomic_write(path, &trajectory_csv(traj, dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn field_round_trip() {
        let g = TorusGrid::new(2, 8).unwrap();
        let f = SpectralField::from_values_fn(g, 2, |p, c| {
            (2.0 * PI * (p[0] + p[1] * (c + 1) as f64)).sin() + 0.3
        });
        let text = field_to_string(&f);
        let back = field_from_string(&text).unwrap();
        assert!((&back - &f).l2_norm() < 1e-15);
        // byte-identical re-serialization
        assert_eq!(text, field_to_string(&back));
    }

    #[test]
    fn field_reader_rejects_broken_reality() {
        let g = TorusGrid::new(1, 8).unwrap();
        let f = SpectralField::mode(g, [1, 0], 1.0, 0.3).unwrap();
        let text = field_to_string(&f);
        // corrupt one coefficient line: flip the sign of the k = 1 imag part
        let hacked: Vec<String> = text
            .lines()
            .map(|l| {
                if l.starts_with("1 ") {
                    let mut toks: Vec<String> = l.split_whitespace().map(String::from).collect();
                    let v: f64 = toks[2].parse().unwrap();
                    toks[2] = fmt_f64(v + 0.5);
                    toks.join(" ")
                } else {
                    l.to_string()
                }
            })
            .collect();
        assert!(field_from_string(&hacked.join("\n")).is_err());
    }

    #[test]
    fn symbol_parsing() {
        let spec = symbol_from_string(
            "EPDIFF-SYMBOL v1\nkind = multiplier\nterm = bessel_power(1.5)\n",
            Path::new("."),
        )
        .unwrap();
        assert_eq!(spec.order, 3.0);
        assert_eq!(spec.kind_name(), "multiplier");

        assert!(symbol_from_string("EPDIFF-SYMBOL v1\nkind = multiplier\nterm = nope(1)\n", Path::new(".")).is_err());
        assert!(symbol_from_string("bogus\n", Path::new(".")).is_err());
    }

    #[test]
    fn symbol_file_with_field_reference() {
        let dir = std::env::temp_dir().join(format!("epdiff-io-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let g = TorusGrid::new(1, 16).unwrap();
        let xf = SpectralField::from_values_fn(g, 1, |p, _| 1.0 + 0.5 * (2.0 * PI * p[0]).sin());
        write_field(&dir.join("g.field"), &xf).unwrap();
        atomic_write(
            &dir.join("sym.txt"),
            "EPDIFF-SYMBOL v1\nkind = separable\norder = 2.0\nterm = field(g.field) * bessel_power(1.0)\n",
        )
        .unwrap();
        let spec = read_symbol(&dir.join("sym.txt")).unwrap();
        assert_eq!(spec.kind_name(), "separable");
        assert_eq!(spec.order, 2.0);
        fs::remove_dir_all(&dir).ok();
    }
}
