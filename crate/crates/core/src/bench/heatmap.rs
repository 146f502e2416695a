use crate::error::{invalid, Result};
use crate::explain::Explanation;
use crate::nn::Sample;

const POSITIVE: (u8, u8, u8) = (31, 119, 180);
const NEGATIVE: (u8, u8, u8) = (255, 127, 14);

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Standalone HTML page overlaying relevance on the input: blue for positive,
/// orange for negative, opacity `|r| / max|r|`. Zero relevance stays uncolored.
pub fn render_heatmap(sample: &Sample, explanation: &Explanation, token_names: &[String]) -> Result<String> {
    let d = sample.n_features();
    if token_names.len() != d || explanation.relevance.len() != d {
        return invalid(format!(
            "heatmap needs {d} names and relevance values, got {} and {}",
            token_names.len(),
            explanation.relevance.len()
        ));
    }
    let max = explanation.relevance.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n");
    html.push_str(&format!(
        "<title>{} explanation for {}</title>\n",
        explanation.method,
        escape(&sample.id)
    ));
    html.push_str("<style>body{font-family:monospace;line-height:2}span.tok{padding:2px 3px;margin:1px;border-radius:3px}</style>\n");
    html.push_str("</head>\n<body>\n");
    html.push_str(&format!(
        "<p>sample {} &middot; method {} &middot; class {}</p>\n<p>\n",
        escape(&sample.id),
        explanation.method,
        explanation.target_class
    ));
    for (name, &r) in token_names.iter().zip(&explanation.relevance) {
        let alpha = if max > 0.0 { r.abs() / max } else { 0.0 };
        if alpha == 0.0 {
            html.push_str(&format!("<span class=\"tok\">{}</span>\n", escape(name)));
        } else {
            let (cr, cg, cb) = if r > 0.0 { POSITIVE } else { NEGATIVE };
            html.push_str(&format!(
                "<span class=\"tok\" title=\"{r:.6e}\" style=\"background-color:rgba({cr},{cg},{cb},{alpha:.3})\">{}</span>\n",
                escape(name)
            ));
        }
    }
    html.push_str("</p>\n</body>\n</html>\n");
    Ok(html)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::Method;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i}")).collect()
    }

    #[test]
    fn zero_relevance_is_uncolored() {
        let s = Sample::tokens("a", vec![2, 3], 0);
        let e = Explanation::new(Method::Ig, 0, vec![0.0, 0.0]);
        let html = render_heatmap(&s, &e, &names(2)).unwrap();
        assert!(!html.contains("rgba"));
    }

    #[test]
    fn single_peak_gets_full_opacity() {
        let s = Sample::tokens("a", vec![2, 3, 4], 0);
        let e = Explanation::new(Method::Lrp, 0, vec![0.0, 2.0, 0.0]);
        let html = render_heatmap(&s, &e, &names(3)).unwrap();
        assert_eq!(html.matches("rgba").count(), 1);
        assert!(html.contains("rgba(31,119,180,1.000)\">w1<"));
        assert!(render_heatmap(&s, &e, &names(2)).is_err());
    }

    #[test]
    fn names_are_escaped() {
        let s = Sample::tokens("a", vec![0], 0);
        let e = Explanation::new(Method::Lrp, 0, vec![-1.0]);
        let html = render_heatmap(&s, &e, &["<pad>".to_string()]).unwrap();
        assert!(html.contains("&lt;pad&gt;") && html.contains("rgba(255,127,14,1.000)"));
    }
}
