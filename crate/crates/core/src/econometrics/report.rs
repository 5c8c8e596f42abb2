//! Plain-text regression tables: one column per model, coefficients with
//! significance stars and standard errors underneath, fit statistics below.

use std::fmt::Write;

use super::ols::RegressionResult;

pub struct ModelColumn<'a> {
    /// Dependent-variable header shared by adjacent columns with equal text.
    pub dependent: &'a str,
    pub result: &'a RegressionResult,
}

fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3}")
    } else {
        "NA".into()
    }
}

/// `rows` maps display labels to term names; terms absent from a model are
/// left blank in its column.
pub fn render_regression_table(title: &str, models: &[ModelColumn<'_>], rows: &[(&str, &str)]) -> String {
    const LABEL_W: usize = 24;
    const COL_W: usize = 26;
    let width = LABEL_W + COL_W * models.len();
    let rule = "=".repeat(width);
    let thin = "-".repeat(width);
    let mut out = String::new();
    let cell = |s: &str| format!("{s:>COL_W$}");

    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{rule}");
    let mut line = format!("{:<LABEL_W$}", "");
    let mut i = 0;
    while i < models.len() {
        let dep = models[i].dependent;
        let span = models[i..].iter().take_while(|m| m.dependent == dep).count();
        let w = COL_W * span;
        line.push_str(&format!("{dep:>w$}"));
        i += span;
    }
    let _ = writeln!(out, "{line}");
    let mut line = format!("{:<LABEL_W$}", "");
    for k in 0..models.len() {
        line.push_str(&cell(&format!("({})", k + 1)));
    }
    let _ = writeln!(out, "{line}");
    let _ = writeln!(out, "{thin}");

    for (label, term) in rows {
        let mut coef = format!("{label:<LABEL_W$}");
        let mut se = format!("{:<LABEL_W$}", "");
        for m in models {
            match (m.result.coef(term), m.result.se(term), m.result.p(term)) {
                (Some(c), Some(s), Some(p)) => {
                    coef.push_str(&cell(&format!("{}{}", fmt_num(c), stars(p))));
                    se.push_str(&cell(&format!("({})", fmt_num(s))));
                }
                _ => {
                    coef.push_str(&cell(""));
                    se.push_str(&cell(""));
                }
            }
        }
        let _ = writeln!(out, "{}", coef.trim_end());
        let _ = writeln!(out, "{}", se.trim_end());
    }
    let _ = writeln!(out, "{thin}");

    let mut fe_names: Vec<&str> = Vec::new();
    for m in models {
        for fe in m.result.fe_included.iter().chain(&m.result.fe_dropped) {
            if !fe_names.contains(&fe.as_str()) {
                fe_names.push(fe);
            }
        }
    }
    for fe in fe_names {
        let mut line = format!("{:<LABEL_W$}", format!("{fe} FE"));
        for m in models {
            let yes = m.result.fe_included.iter().any(|f| f == fe);
            line.push_str(&cell(if yes { "Yes" } else { "No" }));
        }
        let _ = writeln!(out, "{line}");
    }
    let footer: [(&str, Box<dyn Fn(&RegressionResult) -> String>); 5] = [
        ("Observations", Box::new(|r| r.n_obs.to_string())),
        ("R2", Box::new(|r| fmt_num(r.r2))),
        ("Adjusted R2", Box::new(|r| fmt_num(r.adj_r2))),
        (
            "Residual Std. Error",
            Box::new(|r| format!("{} (df={})", fmt_num(r.residual_std_error), r.df_resid)),
        ),
        (
            "F Statistic",
            Box::new(|r| format!("{}{} (df={};{})", fmt_num(r.f_stat), stars(r.f_p_value), r.df_model, r.df_resid)),
        ),
    ];
    for (label, f) in footer.iter() {
        let mut line = format!("{label:<LABEL_W$}");
        for m in models {
            line.push_str(&format!(" {:>w$}", f(m.result), w = COL_W - 1));
        }
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(out, "Note: *p<0.1; **p<0.05; ***p<0.01");
    out
}
