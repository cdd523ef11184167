//! On-disk formats: CSV tables with comment headers, EGRD successor tables,
//! PPM/PNG images. Every writer goes through [`write_atomic`].

use std::fs;
use std::io::Write;
use std::path::Path;

use ergodisc_core::grid::Successor;
use ergodisc_core::{ColorImage, DecayRow, DiscreteMeasure, DyadicHistogram, GridAnalysis, GridSpec, PixelGrid, SuccessorTable};

use crate::error::{Error, Result};

/// Comment line stating the raster orientation.
pub const ORIENTATION_NOTE: &str = "row 0 is the bottom of the torus (y points up); column 0 is x = 0";

/// Writes to a temporary file in the target directory, then renames it over
/// `path`, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::Builder::new().prefix(".ergodisc-").tempfile_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(tmp.path(), fs::Permissions::from_mode(0o644)).map_err(|e| Error::io(tmp.path(), e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// A CSV document: `# ` comment lines, a header row, data rows.
#[derive(Clone, Debug, Default)]
pub struct CsvTable {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        CsvTable { comments: Vec::new(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn comment(&mut self, line: impl Into<String>) -> &mut Self {
        self.comments.push(line.into());
        self
    }

    pub fn row(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.header.len());
        self.rows.push(fields);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for c in &self.comments {
            out.extend_from_slice(b"# ");
            out.extend_from_slice(c.as_bytes());
            out.push(b'\n');
        }
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.flush().expect("in-memory write");
        drop(w);
        out
    }
}

pub fn digest_comment(digest: &str) -> String {
    format!("config_sha256: {digest}")
}

fn grid_comment(grid: &GridSpec) -> String {
    format!("grid: dim={} order={}", grid.dim(), grid.order())
}

fn index_columns(prefix: &str, dim: usize) -> impl Iterator<Item = String> + '_ {
    (0..dim).map(move |d| format!("{prefix}{d}"))
}

/// Atoms as `i0, …, i{n-1}, weight`.
pub fn measure_csv(mu: &DiscreteMeasure, digest: &str) -> CsvTable {
    let grid = *mu.grid();
    let mut t = CsvTable::new(index_columns("i", grid.dim()).chain(["weight".to_string()]));
    t.comment(digest_comment(digest)).comment(grid_comment(&grid));
    let mut comps = vec![0u64; grid.dim()];
    for &(a, w) in mu.atoms() {
        grid.decompose(a, &mut comps);
        let mut row: Vec<String> = comps.iter().map(u64::to_string).collect();
        row.push(w.to_string());
        t.row(row);
    }
    t
}

/// Reads a measure written by [`measure_csv`]. The grid comes from the
/// `grid:` comment unless `order` is given.
pub fn read_measure_csv(path: &Path, order: Option<u64>) -> Result<DiscreteMeasure> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut comment_grid = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(rest) = line.trim_start_matches('#').trim().strip_prefix("grid:") {
            let mut dim = None;
            let mut n = None;
            for kv in rest.split_whitespace() {
                match kv.split_once('=') {
                    Some(("dim", v)) => dim = v.parse::<usize>().ok(),
                    Some(("order", v)) => n = v.parse::<u64>().ok(),
                    _ => {}
                }
            }
            comment_grid = dim.zip(n);
        }
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::format(path, e.to_string()))?.clone();
    let dim = header.len().checked_sub(1).filter(|&d| d > 0).ok_or_else(|| Error::format(path, "expected index columns and a weight column"))?;
    if header.get(dim) != Some("weight") {
        return Err(Error::format(path, "last column must be `weight`"));
    }
    let n = match (order, comment_grid) {
        (Some(n), _) => n,
        (None, Some((d, n))) if d == dim => n,
        (None, Some((d, _))) => return Err(Error::format(path, format!("grid comment says dim={d} but there are {dim} index columns"))),
        (None, None) => return Err(Error::format(path, "no `grid:` comment and no order given")),
    };
    let grid = GridSpec::new(dim, n)?;
    let mut atoms = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        let bad = |what: &str| Error::format(path, format!("record {}: bad {what}", line + 1));
        let idx = (0..dim)
            .map(|d| rec.get(d).and_then(|v| v.trim().parse::<u64>().ok()).ok_or_else(|| bad("index")))
            .collect::<Result<Vec<_>>>()?;
        let w = rec.get(dim).and_then(|v| v.trim().parse::<f64>().ok()).ok_or_else(|| bad("weight"))?;
        let a = grid.address(&ergodisc_core::GridIndex(idx)).map_err(|_| bad("index"))?;
        atoms.push((a, w));
    }
    Ok(DiscreteMeasure::from_atoms(grid, atoms)?)
}

/// `level, c0, …, c{n-1}, mass` for every cube of every level.
pub fn histogram_csv(h: &DyadicHistogram, digest: &str) -> CsvTable {
    let dim = h.dim();
    let mut t = CsvTable::new(["level".to_string()].into_iter().chain(index_columns("c", dim)).chain(["mass".to_string()]));
    t.comment(digest_comment(digest));
    for (k, masses) in h.levels().iter().enumerate() {
        let mask = (1usize << k) - 1;
        for (cube, m) in masses.iter().enumerate() {
            let mut row = vec![k.to_string()];
            row.extend((0..dim).map(|d| ((cube >> ((dim - 1 - d) * k)) & mask).to_string()));
            row.push(m.to_string());
            t.row(row);
        }
    }
    t
}

/// One row per cycle.
pub fn analysis_csv(a: &GridAnalysis, digest: &str) -> CsvTable {
    let mut t = CsvTable::new(["cycle_id", "cycle_length", "basin_size", "basin_fraction", "representative_index"]);
    t.comment(digest_comment(digest)).comment(grid_comment(a.grid()));
    t.comment("representative_index is the smallest row-major address on the cycle");
    let cells = a.grid().cells() as f64;
    for (id, (cycle, &basin)) in a.cycles().iter().zip(a.basin_sizes()).enumerate() {
        t.row(vec![
            id.to_string(),
            cycle.len().to_string(),
            basin.to_string(),
            (basin as f64 / cells).to_string(),
            cycle[0].to_string(),
        ]);
    }
    t
}

/// `row, col, log10_mass`, empty pixels omitted.
pub fn pixel_csv(p: &PixelGrid, digest: &str) -> CsvTable {
    let mut t = CsvTable::new(["row", "col", "log10_mass"]);
    t.comment(digest_comment(digest)).comment(ORIENTATION_NOTE);
    for row in 0..p.height() {
        for col in 0..p.width() {
            if let Some(v) = p.get(row, col) {
                t.row(vec![row.to_string(), col.to_string(), v.to_string()]);
            }
        }
    }
    t
}

pub fn decay_csv(rows: &[DecayRow], digest: &str) -> CsvTable {
    let mut t = CsvTable::new(["trial", "seed", "k", "tau_estimate", "radius", "convergence_gap"]);
    t.comment(digest_comment(digest));
    for r in rows {
        t.row(vec![
            r.trial.to_string(),
            r.seed.to_string(),
            r.k.to_string(),
            r.tau_estimate.to_string(),
            r.radius.to_string(),
            r.convergence_gap.to_string(),
        ]);
    }
    t
}

const EGRD_MAGIC: &[u8; 4] = b"EGRD";
pub const EGRD_VERSION: u32 = 1;

/// 16-byte header (`EGRD`, version, n, N as little-endian u32) followed by
/// the `N^n` successor addresses as little-endian u64.
pub fn egrd_bytes(table: &SuccessorTable) -> Result<Vec<u8>> {
    let grid = table.grid();
    let order = u32::try_from(grid.order()).map_err(|_| Error::Config("grid order does not fit the EGRD header".into()))?;
    let next = table.as_slice();
    let mut out = Vec::with_capacity(16 + 8 * next.len());
    out.extend_from_slice(EGRD_MAGIC);
    out.extend_from_slice(&EGRD_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&order.to_le_bytes());
    for &s in next {
        out.extend_from_slice(&s.to_le_bytes());
    }
    Ok(out)
}

pub fn read_egrd(path: &Path) -> Result<SuccessorTable> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_egrd(&bytes).map_err(|msg| Error::format(path, msg))
}

pub fn parse_egrd(bytes: &[u8]) -> std::result::Result<SuccessorTable, String> {
    if bytes.len() < 16 || &bytes[..4] != EGRD_MAGIC {
        return Err("not an EGRD file".into());
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    if word(4) != EGRD_VERSION {
        return Err(format!("unsupported EGRD version {}", word(4)));
    }
    let grid = GridSpec::new(word(8) as usize, word(12) as u64).map_err(|e| e.to_string())?;
    let body = &bytes[16..];
    if body.len() as u64 != grid.cells().saturating_mul(8) {
        return Err(format!("expected {} successor entries, found {} bytes", grid.cells(), body.len()));
    }
    let next = body.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    SuccessorTable::from_vec(grid, next).map_err(|e| e.to_string())
}

/// Binary PPM (P6, maxval 255), top image row = top of the torus.
pub fn ppm_bytes(img: &ColorImage, comments: &[String]) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 3 * img.pixels.len());
    out.extend_from_slice(b"P6\n");
    for c in comments {
        // Header comments must stay on one line.
        out.extend_from_slice(format!("# {}\n", c.replace(['\n', '\r'], " ")).as_bytes());
    }
    out.extend_from_slice(format!("{} {}\n255\n", img.width, img.height).as_bytes());
    for row in img.rows_top_down() {
        for px in row {
            out.extend_from_slice(&px.0);
        }
    }
    out
}

/// RGB PNG with the comment lines stored as `Comment` text chunks.
pub fn png_bytes(img: &ColorImage, comments: &[String]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width, img.height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        for c in comments {
            enc.add_text_chunk("Comment".into(), c.clone()).map_err(|e| Error::Config(e.to_string()))?;
        }
        let mut w = enc.write_header().map_err(|e| Error::Config(e.to_string()))?;
        let data: Vec<u8> = img.rows_top_down().flat_map(|r| r.iter().flat_map(|p| p.0)).collect();
        w.write_image_data(&data).map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(out)
}
