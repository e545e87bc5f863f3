use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{BenchCase, BenchError, BenchResult, Isa, Kernel};
use crate::sim::TraceStats;

/// First line of every CSV report.
pub const CSV_SCHEMA: &str = "# schema: zoozve-bench v1";
pub const CSV_HEADER: [&str; 6] = ["kernel", "n", "isa", "dyn_count", "strip_iters", "speedup"];

pub fn render_csv(results: &[BenchResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in results {
        let speedup = r.speedup.map(|s| format!("{s:.4}")).unwrap_or_default();
        w.write_record([
            r.case.kernel.name().to_string(),
            r.case.n.to_string(),
            r.case.isa.name().to_string(),
            r.stats.dynamic_count.to_string(),
            r.stats.strip_iterations.to_string(),
            speedup,
        ])
        .expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv");
    format!("{CSV_SCHEMA}\n{body}")
}

/// Reads a report written by [`render_csv`]. Only the columns in the file
/// are recovered; class counts are left at zero and `correct` is true.
pub fn parse_csv(text: &str) -> Result<Vec<BenchResult>, BenchError> {
    let body = text.strip_prefix(CSV_SCHEMA).ok_or_else(|| BenchError::Generate("missing schema line".into()))?;
    let mut rd = csv::Reader::from_reader(body.trim_start().as_bytes());
    let bad = |msg: String| BenchError::Generate(format!("bad report: {msg}"));
    let header = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| rec[i].parse::<u64>().map_err(|e| bad(format!("{}: {e}", &rec[i])));
        let kernel: Kernel = rec[0].parse().map_err(bad)?;
        let isa: Isa = rec[2].parse().map_err(bad)?;
        let speedup = if rec[5].is_empty() { None } else { Some(rec[5].parse::<f64>().map_err(|e| bad(e.to_string()))?) };
        let stats = TraceStats { dynamic_count: num(3)?, strip_iterations: num(4)?, ..TraceStats::default() };
        out.push(BenchResult { case: BenchCase::new(kernel, num(1)?, isa, 0), stats, speedup, correct: true });
    }
    Ok(out)
}

fn write_file(path: &Path, contents: &str) -> Result<(), BenchError> {
    fs::write(path, contents).map_err(|source| BenchError::Io { path: path.display().to_string(), source })
}

pub fn emit_csv(results: &[BenchResult], path: &Path) -> Result<(), BenchError> {
    write_file(path, &render_csv(results))
}

pub fn emit_plot(results: &[BenchResult], path: &Path) -> Result<(), BenchError> {
    write_file(path, &render_svg(results))
}

/// Fixed-width table with one row per kernel and size.
pub fn summary_table(results: &[BenchResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<11} {:>6} {:>10} {:>10} {:>8} {:>9} {:>8}",
        "kernel", "n", "zoozve", "rvv", "strips", "speedup", "correct"
    );
    for (k, n) in pairs(results) {
        let z = find(results, k, n, Isa::Zoozve);
        let r = find(results, k, n, Isa::Rvv);
        let count = |x: Option<&BenchResult>| x.map(|x| x.stats.dynamic_count.to_string()).unwrap_or("-".into());
        let strips = r.map(|x| x.stats.strip_iterations.to_string()).unwrap_or("-".into());
        let speedup = z.or(r).and_then(|x| x.speedup).map(|v| format!("{v:.2}x")).unwrap_or("-".into());
        let ok = [z, r].iter().flatten().all(|x| x.correct);
        let _ = writeln!(
            s,
            "{:<11} {:>6} {:>10} {:>10} {:>8} {:>9} {:>8}",
            k.name(),
            n,
            count(z),
            count(r),
            strips,
            speedup,
            if ok { "yes" } else { "NO" }
        );
    }
    s
}

fn pairs(results: &[BenchResult]) -> Vec<(Kernel, u64)> {
    let mut v: Vec<(Kernel, u64)> = results.iter().map(|r| (r.case.kernel, r.case.n)).collect();
    v.sort();
    v.dedup();
    v
}

fn find(results: &[BenchResult], k: Kernel, n: u64, isa: Isa) -> Option<&BenchResult> {
    results.iter().find(|r| r.case.kernel == k && r.case.n == n && r.case.isa == isa)
}

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_R: f64 = 56.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 48.0;

/// Powers of ten spanning `[1, max]`.
fn log_top(max: f64) -> f64 {
    10f64.powi(max.max(1.0).log10().ceil().max(1.0) as i32)
}

/// Static SVG with one panel per kernel: speedup bars per size on a log
/// axis and the baseline's strip iterations as a line on a second log axis.
pub fn render_svg(results: &[BenchResult]) -> String {
    let kernels: Vec<Kernel> = {
        let mut k: Vec<Kernel> = results.iter().map(|r| r.case.kernel).collect();
        k.sort();
        k.dedup();
        k
    };
    let width = PANEL_W * kernels.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H}" viewBox="0 0 {width} {PANEL_H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{PANEL_H}" fill="white"/>"#);
    for (p, &k) in kernels.iter().enumerate() {
        let x0 = p as f64 * PANEL_W;
        let sizes: Vec<u64> = pairs(results).into_iter().filter(|(kk, _)| *kk == k).map(|(_, n)| n).collect();
        let speedups: Vec<f64> =
            sizes.iter().map(|&n| find(results, k, n, Isa::Rvv).or(find(results, k, n, Isa::Zoozve)).and_then(|r| r.speedup).unwrap_or(0.0)).collect();
        let strips: Vec<f64> =
            sizes.iter().map(|&n| find(results, k, n, Isa::Rvv).map(|r| r.stats.strip_iterations as f64).unwrap_or(0.0)).collect();
        let top_l = log_top(speedups.iter().cloned().fold(1.0, f64::max));
        let top_r = log_top(strips.iter().cloned().fold(1.0, f64::max));
        let (px, py) = (x0 + MARGIN_L, MARGIN_T);
        let (pw, ph) = (PANEL_W - MARGIN_L - MARGIN_R, PANEL_H - MARGIN_T - MARGIN_B);
        let ymap = |v: f64, top: f64| py + ph - ph * (v.max(1.0).log10() / top.log10());

        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13" font-weight="bold">{}</text>"#, x0 + PANEL_W / 2.0, k.name());
        let _ = writeln!(s, r##"<rect x="{px}" y="{py}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>"##);
        let mut t = 1.0;
        while t <= top_l {
            let y = ymap(t, top_l);
            let _ = writeln!(s, r##"<line x1="{px}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ddd"/>"##, px + pw);
            let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{t}x</text>"#, px - 4.0, y + 4.0);
            t *= 10.0;
        }
        let mut t = 1.0;
        while t <= top_r {
            let y = ymap(t, top_r);
            let _ = writeln!(s, r##"<text x="{}" y="{:.1}" fill="#c0392b">{t}</text>"##, px + pw + 4.0, y + 4.0);
            t *= 10.0;
        }
        let slot = pw / sizes.len().max(1) as f64;
        let mut line = Vec::new();
        for (i, &n) in sizes.iter().enumerate() {
            let cx = px + slot * (i as f64 + 0.5);
            let y = ymap(speedups[i], top_l);
            let bw = slot * 0.6;
            let _ = writeln!(
                s,
                r##"<rect x="{:.1}" y="{y:.1}" width="{bw:.1}" height="{:.1}" fill="#2e86c1"><title>{} n={n}: {:.2}x</title></rect>"##,
                cx - bw / 2.0,
                py + ph - y,
                k.name(),
                speedups[i]
            );
            let _ = writeln!(s, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{n}</text>"#, py + ph + 14.0);
            line.push(format!("{cx:.1},{:.1}", ymap(strips[i], top_r)));
        }
        if !line.is_empty() {
            let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="2"/>"##, line.join(" "));
            for pt in &line {
                let (x, y) = pt.split_once(',').expect("point");
                let _ = writeln!(s, r##"<circle cx="{x}" cy="{y}" r="3" fill="#c0392b"/>"##);
            }
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">n</text>"#, px + pw / 2.0, py + ph + 30.0);
        let _ = writeln!(
            s,
            r##"<text x="{:.1}" y="{:.1}" text-anchor="middle"><tspan fill="#2e86c1">speedup</tspan> / <tspan fill="#c0392b">rvv strips</tspan></text>"##,
            px + pw / 2.0,
            py + ph + 44.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(kernel: Kernel, n: u64, isa: Isa, dyn_count: u64, strips: u64) -> BenchResult {
        BenchResult {
            case: BenchCase::new(kernel, n, isa, 0),
            stats: TraceStats { dynamic_count: dyn_count, strip_iterations: strips, ..TraceStats::default() },
            speedup: Some(4.5),
            correct: true,
        }
    }

    #[test]
    fn csv_layout() {
        let rs = [result(Kernel::Axpy, 512, Isa::Zoozve, 12, 0), result(Kernel::Axpy, 512, Isa::Rvv, 54, 2)];
        let text = render_csv(&rs);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_SCHEMA);
        assert_eq!(lines[1], "kernel,n,isa,dyn_count,strip_iters,speedup");
        assert_eq!(lines[2], "axpy,512,zoozve,12,0,4.5000");
        assert_eq!(lines[3], "axpy,512,rvv,54,2,4.5000");
    }

    #[test]
    fn csv_reads_back() {
        let rs = [result(Kernel::Dotproduct, 1024, Isa::Zoozve, 12, 0), result(Kernel::Dotproduct, 1024, Isa::Rvv, 165, 16)];
        let back = parse_csv(&render_csv(&rs)).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].stats.dynamic_count, 165);
        assert_eq!(back[1].stats.strip_iterations, 16);
        assert_eq!(render_csv(&back), render_csv(&rs));
    }

    #[test]
    fn svg_is_self_contained() {
        let rs = [result(Kernel::Fft, 32, Isa::Zoozve, 10, 0), result(Kernel::Fft, 32, Isa::Rvv, 45, 9)];
        let svg = render_svg(&rs);
        assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("href"));
        assert_eq!(svg.matches("<rect x=").count(), 2);
    }
}
