//! Rendering of results: fixed-width text tables mirroring the report
//! shapes, plot-ready TSV columns for curves and eCDFs, and a static HTML
//! page with inline SVG charts. All output is deterministic.

use std::fmt::Write as _;

use crate::cefr::{CefrLevel, WordLabel};
use crate::experiments::{
    ConsistencyResult, EssayEvalResult, SemanticEvalResult, WordlevelEvalResult,
};
use crate::lexicon::LexiconStats;
use crate::metrics::LabelPrf;

fn pct(value: f64) -> String {
    format!("{:.1}", value * 100.0)
}

fn corr(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.3}")).unwrap_or_else(|| "NA".to_string())
}

/// Accuracy per option-count bucket plus the bucket average.
pub fn render_semantic_table(result: &SemanticEvalResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Semantic understanding accuracy (%) by option count");
    let _ = write!(out, "{:<10}", "bucket");
    for bucket in &result.buckets {
        let _ = write!(out, "{:>8}", bucket.bucket);
    }
    let _ = writeln!(out, "{:>8}", "avg.");
    let _ = write!(out, "{:<10}", "accuracy");
    for bucket in &result.buckets {
        let _ = write!(out, "{:>8}", pct(bucket.accuracy));
    }
    let _ = writeln!(out, "{:>8}", pct(result.average));
    let _ = write!(out, "{:<10}", "items");
    for bucket in &result.buckets {
        let _ = write!(out, "{:>8}", bucket.total);
    }
    let _ = writeln!(out, "{:>8}", result.items);
    let _ = writeln!(
        out,
        "skipped: {} without example, {} example missing target",
        result.skipped.no_example, result.skipped.target_missing
    );
    out
}

/// Word-level accuracy (ambiguous / non-ambiguous / all) and per-level F1.
pub fn render_wordlevel_tables(result: &WordlevelEvalResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Word-level CEFR prediction accuracy (%) over {} documents / {} tokens",
        result.documents, result.tokens
    );
    let _ = writeln!(
        out,
        "{:<10}{:>10}{:>12}{:>10}",
        "method", "Ambig.", "Non-amb.", "All"
    );
    for eval in &result.methods {
        let _ = writeln!(
            out,
            "{:<10}{:>10}{:>12}{:>10}",
            eval.method.to_string(),
            pct(eval.accuracy.ambiguous.accuracy),
            pct(eval.accuracy.non_ambiguous.accuracy),
            pct(eval.accuracy.all.accuracy),
        );
    }
    for eval in &result.methods {
        let _ = writeln!(out, "\nPer-level F1 (%) — method {}", eval.method);
        let _ = writeln!(
            out,
            "{:<8}{:>12}{:>14}{:>10}",
            "level", "Ambiguous", "Non-ambig.", "All"
        );
        let row = |label: WordLabel, rows: &[&Vec<LabelPrf>]| -> String {
            let mut cells = String::new();
            let widths = [12usize, 14, 10];
            for (i, rows) in rows.iter().enumerate() {
                let cell = rows
                    .iter()
                    .find(|r| r.label == label)
                    .map(|r| {
                        if r.supported {
                            pct(r.f1)
                        } else {
                            "-".to_string()
                        }
                    })
                    .unwrap_or_else(|| "-".to_string());
                let _ = write!(cells, "{:>width$}", cell, width = widths[i]);
            }
            cells
        };
        for label in WordLabel::scored_labels() {
            let _ = writeln!(
                out,
                "{:<8}{}",
                label.as_str(),
                row(label, &[&eval.f1_ambiguous, &eval.f1_non_ambiguous, &eval.f1_all])
            );
        }
    }
    out
}

/// Naive and SVR correlation tables, plus the train/test rows when present.
pub fn render_essay_tables(result: &EssayEvalResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Essay-level holistic prediction over {} documents",
        result.documents
    );
    let _ = writeln!(
        out,
        "{:<10}{:<12}{:>8}{:>8}",
        "features", "classifier", "PCC", "SRC"
    );
    for eval in &result.methods {
        let _ = writeln!(
            out,
            "{:<10}{:<12}{:>8}{:>8}",
            eval.method.to_string(),
            "naive",
            corr(eval.naive.map(|c| c.pcc)),
            corr(eval.naive.map(|c| c.src)),
        );
        if let Some(error) = &eval.naive_error {
            let _ = writeln!(out, "          (naive: {error})");
        }
        let _ = writeln!(
            out,
            "{:<10}{:<12}{:>8}{:>8}",
            eval.method.to_string(),
            "svr-cv",
            corr(eval.svr_cv.map(|c| c.pcc)),
            corr(eval.svr_cv.map(|c| c.src)),
        );
        if let Some(error) = &eval.svr_cv_error {
            let _ = writeln!(out, "          (svr-cv: {error})");
        }
    }
    for eval in &result.methods {
        if eval.test_rows.is_empty() {
            continue;
        }
        let _ = writeln!(
            out,
            "\nTrain/test SVR (method {}), {} test documents",
            eval.method, result.test_documents
        );
        let _ = writeln!(out, "{:<14}{:>8}{:>8}", "score", "PCC", "SRC");
        for row in &eval.test_rows {
            let _ = writeln!(
                out,
                "{:<14}{:>8}{:>8}",
                row.name,
                corr(row.pcc),
                corr(row.src)
            );
            if let Some(error) = &row.error {
                let _ = writeln!(out, "          ({error})");
            }
        }
    }
    out
}

/// Plot-ready cumulative curve data: essay_level, word_level, cumulative.
pub fn render_curves_tsv(result: &EssayEvalResult) -> String {
    let mut out = String::from("method\tessay_level\tword_level\tcumulative\tauc\n");
    for eval in &result.methods {
        for series in &eval.curves {
            for (level, y) in series.x.iter().zip(&series.y) {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    eval.method, series.group, level, y, series.auc
                );
            }
        }
    }
    out
}

/// Plot-ready eCDF data: essay_level, auc value, cumulative fraction.
pub fn render_ecdf_tsv(result: &EssayEvalResult) -> String {
    let mut out = String::from("method\tessay_level\tauc\tfraction\n");
    for eval in &result.methods {
        for (level, points) in &eval.ecdf_by_level {
            for (value, fraction) in points {
                let _ = writeln!(out, "{}\t{}\t{}\t{}", eval.method, level, value, fraction);
            }
        }
    }
    out
}

/// Per-word threshold accuracy rows.
pub fn render_consistency_table(result: &ConsistencyResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Lexicon consistency accuracy (%) by threshold — method {}",
        result.method
    );
    let _ = write!(out, "{:<12}", "threshold");
    for word in &result.words {
        let _ = write!(out, "{:>12}", word.word);
    }
    out.push('\n');
    let thresholds: Vec<CefrLevel> = result
        .words
        .first()
        .map(|w| w.rows.iter().map(|r| r.threshold).collect())
        .unwrap_or_default();
    for (i, threshold) in thresholds.iter().enumerate() {
        let _ = write!(out, "{:<12}", format!(">={threshold}"));
        for word in &result.words {
            let cell = word
                .rows
                .get(i)
                .and_then(|r| r.accuracy)
                .map(pct)
                .unwrap_or_else(|| "-".to_string());
            let _ = write!(out, "{:>12}", cell);
        }
        out.push('\n');
    }
    for word in &result.words {
        let _ = writeln!(
            out,
            "\nword {:?}: {} occurrences; essays per level: {}",
            word.word,
            word.occurrences,
            word.essays_by_level
                .iter()
                .map(|(l, c)| format!("{l}: {c}"))
                .collect::<Vec<_>>()
                .join("; ")
        );
    }
    out
}

/// Polysemy statistics in the report shape: option counts 1..6 and a
/// pooled ">6" row.
pub fn render_stats_table(stats: &LexiconStats) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Lexicon: {} entries, {} unique words",
        stats.entry_count, stats.unique_word_count
    );
    let _ = writeln!(
        out,
        "Ambiguous (same word+PoS, several levels): {:.2}% of entries, {:.2}% of unique words",
        stats.ambiguous_entry_pct, stats.ambiguous_word_pct
    );
    let _ = writeln!(out, "{:<14}{:>10}", "options", "count (%)");
    let mut beyond = 0.0;
    for (&options, &share) in &stats.polysemy_histogram {
        if options <= 6 {
            let _ = writeln!(out, "{:<14}{:>10.2}", options, share);
        } else {
            beyond += share;
        }
    }
    if beyond > 0.0 {
        let _ = writeln!(out, "{:<14}{:>10.2}", ">6", beyond);
    }
    out
}

// ---------------------------------------------------------------------------
// HTML report
// ---------------------------------------------------------------------------

fn svg_polyline(points: &[(f64, f64)], x_range: (f64, f64), y_range: (f64, f64)) -> String {
    let (x0, x1) = x_range;
    let (y0, y1) = y_range;
    let width = 360.0;
    let height = 220.0;
    let pad = 30.0;
    let scale_x = |x: f64| pad + (x - x0) / (x1 - x0).max(1e-12) * (width - 2.0 * pad);
    let scale_y = |y: f64| height - pad - (y - y0) / (y1 - y0).max(1e-12) * (height - 2.0 * pad);
    points
        .iter()
        .map(|&(x, y)| format!("{:.1},{:.1}", scale_x(x), scale_y(y)))
        .collect::<Vec<_>>()
        .join(" ")
}

const CURVE_COLORS: [&str; 6] = [
    "#4477aa", "#66ccee", "#228833", "#ccbb44", "#ee6677", "#aa3377",
];

fn html_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn curves_svg(result: &EssayEvalResult) -> String {
    let mut out = String::new();
    for eval in &result.methods {
        if eval.curves.is_empty() {
            let _ = writeln!(
                out,
                "<p>No curve data for method {} (no essay levels present).</p>",
                eval.method
            );
            continue;
        }
        let _ = writeln!(
            out,
            "<h3>Cumulative level usage — method {}</h3>\n<svg viewBox=\"0 0 360 220\" width=\"360\" height=\"220\" role=\"img\">",
            eval.method
        );
        let _ = writeln!(
            out,
            "<rect x=\"0\" y=\"0\" width=\"360\" height=\"220\" fill=\"white\" stroke=\"#ccc\"/>"
        );
        for series in &eval.curves {
            let points: Vec<(f64, f64)> = series
                .y
                .iter()
                .enumerate()
                .map(|(i, &y)| (i as f64, y))
                .collect();
            let path = svg_polyline(&points, (0.0, 5.0), (0.0, 1.0));
            let color = CURVE_COLORS[series.group.index()];
            let _ = writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{path}\"><title>{}</title></polyline>",
                series.group
            );
        }
        let _ = writeln!(out, "</svg>");
        let legend: Vec<String> = eval
            .curves
            .iter()
            .map(|s| {
                format!(
                    "<span style=\"color:{}\">&#9632; {}</span>",
                    CURVE_COLORS[s.group.index()],
                    s.group
                )
            })
            .collect();
        let _ = writeln!(
            out,
            "<p>x axis: word level C2 &#8594; A1. {}</p>",
            legend.join(" ")
        );
    }
    out
}

fn ecdf_svg(result: &EssayEvalResult) -> String {
    let mut out = String::new();
    for eval in &result.methods {
        if eval.ecdf_by_level.is_empty() {
            let _ = writeln!(
                out,
                "<p>No eCDF data for method {} (no essay levels present).</p>",
                eval.method
            );
            continue;
        }
        let _ = writeln!(
            out,
            "<h3>eCDF of per-document AUC — method {}</h3>\n<svg viewBox=\"0 0 360 220\" width=\"360\" height=\"220\" role=\"img\">",
            eval.method
        );
        let _ = writeln!(
            out,
            "<rect x=\"0\" y=\"0\" width=\"360\" height=\"220\" fill=\"white\" stroke=\"#ccc\"/>"
        );
        for (level, points) in &eval.ecdf_by_level {
            if points.is_empty() {
                continue;
            }
            // Step plot: repeat each y until the next x.
            let mut steps: Vec<(f64, f64)> = Vec::new();
            let mut prev_y = 0.0;
            for &(x, y) in points {
                steps.push((x, prev_y));
                steps.push((x, y));
                prev_y = y;
            }
            let path = svg_polyline(&steps, (0.0, 1.0), (0.0, 1.0));
            let color = level
                .parse::<CefrLevel>()
                .map(|l| CURVE_COLORS[l.index()])
                .unwrap_or("#888888");
            let _ = writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{path}\"><title>{level}</title></polyline>"
            );
        }
        let _ = writeln!(out, "</svg>");
    }
    out
}

/// A self-contained HTML report for an essay evaluation, embedding the
/// tables and the curve/eCDF data as inline SVG. An empty curve set renders
/// an explicit "no data" section.
pub fn render_essay_html(result: &EssayEvalResult) -> String {
    let mut body = String::new();
    let _ = writeln!(body, "<h2>Essay-level evaluation</h2>");
    let _ = writeln!(
        body,
        "<pre>{}</pre>",
        html_escape(&render_essay_tables(result))
    );
    let has_curves = result.methods.iter().any(|m| !m.curves.is_empty());
    if has_curves {
        let _ = writeln!(body, "<h2>Curves</h2>\n{}", curves_svg(result));
        let _ = writeln!(body, "<h2>eCDF</h2>\n{}", ecdf_svg(result));
    } else {
        let _ = writeln!(
            body,
            "<h2>Curves</h2>\n<p>No data: no document carried an essay level.</p>"
        );
    }
    wrap_html("Essay-level evaluation", &body)
}

/// HTML wrapper shared by the report emitters.
pub fn wrap_html(title: &str, body: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>body{{font-family:sans-serif;max-width:60rem;margin:2rem auto;padding:0 1rem}}pre{{background:#f6f6f6;padding:1rem;overflow-x:auto}}</style>\n</head>\n<body>\n{}\n</body>\n</html>\n",
        html_escape(title),
        body
    )
}

/// HTML for a word-level evaluation.
pub fn render_wordlevel_html(result: &WordlevelEvalResult) -> String {
    let body = format!(
        "<h2>Word-level evaluation</h2>\n<pre>{}</pre>",
        html_escape(&render_wordlevel_tables(result))
    );
    wrap_html("Word-level evaluation", &body)
}

/// HTML for a semantic evaluation.
pub fn render_semantic_html(result: &SemanticEvalResult) -> String {
    let body = format!(
        "<h2>Semantic understanding</h2>\n<pre>{}</pre>",
        html_escape(&render_semantic_table(result))
    );
    wrap_html("Semantic understanding", &body)
}

/// HTML for a consistency run.
pub fn render_consistency_html(result: &ConsistencyResult) -> String {
    let body = format!(
        "<h2>Lexicon consistency</h2>\n<pre>{}</pre>",
        html_escape(&render_consistency_table(result))
    );
    wrap_html("Lexicon consistency", &body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::BucketAccuracy;

    #[test]
    fn semantic_table_shape() {
        let result = SemanticEvalResult {
            buckets: vec![
                BucketAccuracy { bucket: 3, correct: 9, total: 10, accuracy: 0.9 },
                BucketAccuracy { bucket: 4, correct: 4, total: 5, accuracy: 0.8 },
            ],
            average: 0.85,
            items: 15,
            skipped: Default::default(),
        };
        let table = render_semantic_table(&result);
        assert!(table.contains("90.0"));
        assert!(table.contains("85.0"));
        assert_eq!(table, render_semantic_table(&result));
    }

    #[test]
    fn essay_html_no_data_section() {
        let result = EssayEvalResult {
            methods: vec![],
            documents: 0,
            test_documents: 0,
        };
        let html = render_essay_html(&result);
        assert!(html.contains("No data"));
        assert!(html.starts_with("<!DOCTYPE html>"));
    }
}
