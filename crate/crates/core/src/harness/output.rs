use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::runner::{Event, RunReport, TraceRecord, CSV_COLUMNS};
use super::scenario::Scenario;

/// Writes the trace as CSV with the columns of [`CSV_COLUMNS`].
pub fn write_csv<W: Write>(records: &[TraceRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events<W: Write>(events: &[Event], mut out: W) -> io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// SVG of the run: obstacles, stations, targets, the forward path in black
/// and the backtracking path in red.
pub fn render_svg(s: &Scenario, records: &[TraceRecord]) -> String {
    let mut pts: Vec<[f64; 2]> = records.iter().map(|r| [r.x, r.y]).collect();
    pts.extend(s.obstacles.iter().flat_map(|o| o.vertices.iter().copied()));
    pts.extend(s.stations.iter().copied());
    pts.extend(s.targets.iter().copied());
    let finite = pts.iter().filter(|p| p[0].is_finite() && p[1].is_finite());
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in finite {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if !lo[0].is_finite() {
        lo = [-1.0, -1.0];
        hi = [1.0, 1.0];
    }
    let pad = 0.15;
    let (w, h) = (hi[0] - lo[0] + 2.0 * pad, hi[1] - lo[1] + 2.0 * pad);
    let scale = 600.0 / w.max(h);
    let map = |p: [f64; 2]| ((p[0] - lo[0] + pad) * scale, (hi[1] - p[1] + pad) * scale);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
        w * scale,
        h * scale,
        w * scale,
        h * scale
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for o in &s.obstacles {
        let pts: Vec<String> = o.vertices.iter().map(|v| map(*v)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(svg, r##"<polygon points="{}" fill="#bbb" stroke="#555"/>"##, pts.join(" "));
    }
    for (k, st) in s.stations.iter().enumerate() {
        let (x, y) = map(*st);
        let _ = writeln!(svg, r##"<circle cx="{x:.2}" cy="{y:.2}" r="7" fill="none" stroke="#2a7" stroke-width="2"/>"##);
        let _ = writeln!(svg, r##"<text x="{:.2}" y="{:.2}" font-size="12" fill="#2a7">PS{}</text>"##, x + 9.0, y - 9.0, k + 1);
    }
    for (k, t) in s.targets.iter().enumerate() {
        let (x, y) = map(*t);
        let _ = writeln!(
            svg,
            r##"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="#36c" stroke-width="2"/>"##,
            x - 6.0,
            y - 6.0,
            x + 6.0,
            y + 6.0,
            x - 6.0,
            y + 6.0,
            x + 6.0,
            y - 6.0
        );
        let _ = writeln!(svg, r##"<text x="{:.2}" y="{:.2}" font-size="12" fill="#36c">T{}</text>"##, x + 9.0, y - 9.0, k + 1);
    }
    let backward = |r: &TraceRecord| matches!(r.nav_phase, "turning" | "backtracking");
    let mut i = 0;
    while i + 1 < records.len() {
        let red = backward(&records[i + 1]);
        let mut j = i + 1;
        while j + 1 < records.len() && backward(&records[j + 1]) == red {
            j += 1;
        }
        let line: Vec<String> = records[i..=j]
            .iter()
            .map(|r| map([r.x, r.y]))
            .map(|(x, y)| format!("{x:.2},{y:.2}"))
            .collect();
        let colour = if red { "#d22" } else { "#000" };
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
        i = j;
    }
    svg.push_str("</svg>\n");
    svg
}

/// Paths of the files written for one run.
#[derive(Clone, Debug)]
pub struct OutputFiles {
    pub csv: PathBuf,
    pub events: PathBuf,
    pub svg: Option<PathBuf>,
    pub summary: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("cannot write CSV {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

fn create(path: &Path) -> Result<io::BufWriter<fs::File>, OutputError> {
    fs::File::create(path)
        .map(io::BufWriter::new)
        .map_err(|source| OutputError::Io { path: path.display().to_string(), source })
}

/// Writes `<name>.csv`, `<name>.events.jsonl`, `<name>.summary.json` and,
/// unless `plot` is off, `<name>.svg` into `dir`.
pub fn emit_outputs(s: &Scenario, report: &RunReport, dir: &Path, plot: bool) -> Result<OutputFiles, OutputError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| OutputError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let files = OutputFiles {
        csv: dir.join(format!("{}.csv", s.name)),
        events: dir.join(format!("{}.events.jsonl", s.name)),
        svg: plot.then(|| dir.join(format!("{}.svg", s.name))),
        summary: dir.join(format!("{}.summary.json", s.name)),
    };
    write_csv(&report.records, create(&files.csv)?).map_err(|source| OutputError::Csv {
        path: files.csv.display().to_string(),
        source,
    })?;
    write_events(&report.events, create(&files.events)?).map_err(io_err(&files.events))?;
    let summary = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(&files.summary, summary + "\n").map_err(io_err(&files.summary))?;
    if let Some(svg) = &files.svg {
        fs::write(svg, render_svg(s, &report.records)).map_err(io_err(svg))?;
    }
    Ok(files)
}
